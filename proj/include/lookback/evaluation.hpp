#pragma once

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <map>
#include <string>
#include <vector>

#include <json.hpp>

#include "lookback/datasets.hpp"
#include "lookback/episodes.hpp"
#include "lookback/model.hpp"

namespace lookback::eval {

struct Stat {
  double mean = 0.0;
  double ci95 = 0.0;
};

// Normal-approximation interval over per-episode accuracies. Sample standard
// deviation (n-1 denominator); a single episode has std 0 by definition.
inline Stat stat_of(const std::vector<double>& xs) {
  Stat s;
  const auto n = static_cast<double>(xs.size());
  if (xs.empty()) return s;
  double sum = 0.0;
  for (double x : xs) sum += x;
  s.mean = sum / n;
  if (xs.size() > 1) {
    double ss = 0.0;
    for (double x : xs) ss += (x - s.mean) * (x - s.mean);
    s.ci95 = 1.96 * std::sqrt(ss / (n - 1.0)) / std::sqrt(n);
  }
  return s;
}

// "55.91 ± 0.86" style: percent, two decimals.
inline std::string format_mean_ci(double mean, double ci) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.2f ± %.2f", 100.0 * mean, 100.0 * ci);
  return buf;
}

// Fraction of query nodes whose prediction matches the held-out label.
template <typename T>
double query_accuracy(const std::vector<int>& pred, const episodes::Episode<T>& ep) {
  check(pred.size() == static_cast<std::size_t>(ep.n_query()),
        "prediction count does not match query count");
  std::int64_t correct = 0;
  for (std::size_t i = 0; i < pred.size(); ++i)
    correct += pred[i] == ep.labels[static_cast<std::size_t>(ep.n_support()) + i];
  return static_cast<double>(correct) / static_cast<double>(pred.size());
}

struct EvalParams {
  episodes::EpisodeSpec spec;
  double alpha = 0.99;
  int m = 20;
  std::vector<double> weights{1.0, 1.0, 1.0};
  std::int64_t n_episodes = 600;
  std::uint64_t seed = 0;
};

struct EvalReport {
  std::int64_t n_episodes = 0;
  double mean_accuracy = 0.0;  // headline: final-block predictions
  double ci95 = 0.0;
  std::map<int, Stat> per_layer;     // tap -> accuracy of predicting from that tap
  std::vector<double> per_episode;   // final-block accuracy per episode

  std::string summary() const { return format_mean_ci(mean_accuracy, ci95); }

  nlohmann::json to_json(bool include_per_episode = true) const {
    nlohmann::json j{{"n_episodes", n_episodes},
                     {"mean_accuracy", mean_accuracy},
                     {"ci95", ci95},
                     {"summary", summary()}};
    for (const auto& [tap, s] : per_layer)
      j["per_layer"][std::to_string(tap)] = {
          {"mean", s.mean}, {"ci95", s.ci95}, {"summary", format_mean_ci(s.mean, s.ci95)}};
    if (include_per_episode) j["per_episode"] = per_episode;
    return j;
  }
};

// Episode i is drawn from its own derived stream, so the sequence depends
// only on (seed, data), never on how many episodes ran before. Forward runs
// in eval mode: parameters and running statistics are read-only here. The
// per-tap probe reuses each tap's propagated scores from the single forward;
// the headline accuracy is the tap-4 entry verbatim.
template <typename T>
EvalReport evaluate(model::Model<T>& model, const data::Split& data, const EvalParams& p) {
  check(p.n_episodes >= 1, ErrorKind::config, "evaluation needs at least one episode");
  std::map<int, std::vector<double>> per_layer;
  for (std::int64_t i = 0; i < p.n_episodes; ++i) {
    Rng rng = Rng::derive(p.seed, "eval-episode", static_cast<std::uint64_t>(i));
    const auto ep = episodes::sample_episode<T>(data, p.spec, rng);
    Tape<T> tape(false);
    const auto fwd =
        model.forward_episode(tape, ep, static_cast<T>(p.alpha), p.m, p.weights, model::BnMode::eval);
    for (const auto& tf : fwd.taps) {
      const auto pred = prop::predict_queries(tape.val(tf.p_star), ep.spec.n_support());
      per_layer[tf.tap].push_back(query_accuracy(pred, ep));
    }
  }

  EvalReport r;
  r.n_episodes = p.n_episodes;
  r.per_episode = per_layer.at(4);
  for (const auto& [tap, xs] : per_layer) r.per_layer[tap] = stat_of(xs);
  r.mean_accuracy = r.per_layer.at(4).mean;
  r.ci95 = r.per_layer.at(4).ci95;
  return r;
}

struct CompareReport {
  EvalReport a, b;
  Stat diff;  // paired per-episode difference, a minus b

  nlohmann::json to_json() const {
    return {{"a", a.to_json(false)},
            {"b", b.to_json(false)},
            {"paired_diff",
             {{"mean", diff.mean}, {"ci95", diff.ci95}, {"summary", format_mean_ci(diff.mean, diff.ci95)}}}};
  }
};

// Both models see the identical episode sequence (one seed drives both), so
// the difference is paired; its interval is typically tighter than either
// marginal interval when episode difficulty dominates the variance.
template <typename T>
CompareReport compare(model::Model<T>& model_a, model::Model<T>& model_b, const data::Split& data,
                      const EvalParams& p) {
  CompareReport r;
  r.a = evaluate(model_a, data, p);
  r.b = evaluate(model_b, data, p);
  std::vector<double> d(r.a.per_episode.size());
  for (std::size_t i = 0; i < d.size(); ++i) d[i] = r.a.per_episode[i] - r.b.per_episode[i];
  r.diff = stat_of(d);
  return r;
}

}  // namespace lookback::eval
