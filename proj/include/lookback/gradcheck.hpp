#pragma once

#include <algorithm>
#include <cmath>
#include <set>
#include <string>
#include <unordered_map>
#include <vector>

#include "lookback/model.hpp"

namespace lookback::model {

struct GradCheckEntry {
  std::string param;
  std::int64_t index = 0;
  double analytic = 0.0;
  double numeric = 0.0;
  double rel_err = 0.0;
};

struct GradCheckReport {
  double max_rel_err = 0.0;
  double tolerance = 0.0;
  double step = 0.0;
  bool passed = false;
  std::vector<GradCheckEntry> checks;    // every sampled coordinate
  std::vector<GradCheckEntry> failures;  // entries exceeding the tolerance
};

// Below the floor the comparison is effectively absolute: central differences
// on a loss of order 10 carry roundoff noise around 1e-8, so coordinates with
// near-zero true gradients would otherwise fail on pure noise. With the 1e-2
// floor and a 1e-4 tolerance, such coordinates pass iff |a - b| <= 1e-6.
inline double gradcheck_rel_err(double a, double b) {
  return std::abs(a - b) / std::max({std::abs(a), std::abs(b), 1e-2});
}

// Central-difference check of the episode loss gradient. Sampling is
// stratified: one random coordinate per trainable tensor per round, rounds
// repeating until at least `min_samples` distinct coordinates are covered, so
// every tensor (backbone and all relation nets) is always represented.
// Runs with frozen batch norm: batch statistics, zero-momentum running-stat
// update, making the loss a pure function of the parameters.
inline GradCheckReport gradcheck(Model<double>& model, const episodes::Episode<double>& episode,
                                 double alpha, int m, const std::vector<double>& weights,
                                 std::size_t min_samples = 50, double step = 1e-5,
                                 double tolerance = 1e-4, std::uint64_t sample_seed = 0) {
  GradCheckReport report;
  report.tolerance = tolerance;
  report.step = step;

  // Reverse-mode pass, one backward for every coordinate.
  std::unordered_map<std::string, Tensor<double>> analytic;
  {
    Tape<double> tape;
    const auto fwd = model.forward_episode(tape, episode, alpha, m, weights, BnMode::frozen);
    tape.backward(fwd.total);
    for (const auto& [name, id] : model.bindings()) analytic.emplace(name, tape.grad(id));
  }

  const auto loss_at = [&]() {
    Tape<double> tape(false);
    const auto fwd = model.forward_episode(tape, episode, alpha, m, weights, BnMode::frozen);
    return tape.val(fwd.total)[0];
  };

  std::vector<typename ParamStore<double>::Entry*> tensors;
  std::int64_t total_scalars = 0;
  for (auto& entry : model.params().entries())
    if (entry.trainable) {
      tensors.push_back(&entry);
      total_scalars += entry.value.numel();
    }

  Rng rng = Rng::derive(sample_seed, "gradcheck-sample");
  std::set<std::pair<std::string, std::int64_t>> picked;
  const std::size_t target =
      std::min<std::size_t>(min_samples, static_cast<std::size_t>(total_scalars));
  bool first_round = true;
  while (picked.size() < target || first_round) {
    const std::size_t before = picked.size();
    for (auto* entry : tensors) {
      // The first round visits every tensor so all nets are represented even
      // when the sample budget is smaller than the tensor count.
      if (!first_round && picked.size() >= target) break;
      std::int64_t idx = rng.uniform_int(entry->value.numel());
      // Linear probe on collision; fully covered tensors are skipped.
      for (std::int64_t tries = 0; tries < entry->value.numel(); ++tries) {
        if (picked.emplace(entry->name, idx).second) break;
        idx = (idx + 1) % entry->value.numel();
      }
    }
    first_round = false;
    if (picked.size() == before) break;  // everything covered
  }

  for (const auto& [name, idx] : picked) {
    Tensor<double>& value = model.params().at(name);
    const double orig = value[idx];
    value[idx] = orig + step;
    const double hi = loss_at();
    value[idx] = orig - step;
    const double lo = loss_at();
    value[idx] = orig;

    GradCheckEntry entry;
    entry.param = name;
    entry.index = idx;
    entry.numeric = (hi - lo) / (2.0 * step);
    entry.analytic = analytic.at(name)[idx];
    entry.rel_err = gradcheck_rel_err(entry.analytic, entry.numeric);
    report.max_rel_err = std::max(report.max_rel_err, entry.rel_err);
    if (entry.rel_err > tolerance) report.failures.push_back(entry);
    report.checks.push_back(entry);
  }
  report.passed = report.max_rel_err <= tolerance;
  return report;
}

}  // namespace lookback::model
