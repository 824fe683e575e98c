// End-to-end acceptance checks with pinned tolerances and runtime budgets.
// Each numbered check prints one PASS/FAIL line; the process exits nonzero
// if any fail. The desk-scale training check is the long pole (~15 minutes);
// everything else finishes in well under two minutes combined.

#include <Eigen/Eigenvalues>
#include <chrono>
#include <cstdarg>
#include <cstdio>
#include <functional>
#include <sstream>
#include <string>
#include <vector>

#include "lookback/datasets.hpp"
#include "lookback/episodes.hpp"
#include "lookback/evaluation.hpp"
#include "lookback/gradcheck.hpp"
#include "lookback/graph.hpp"
#include "lookback/model.hpp"
#include "lookback/propagation.hpp"
#include "lookback/training.hpp"

using namespace lookback;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string strf(const char* fmt, ...) {
  char buf[512];
  va_list args;
  va_start(args, fmt);
  std::vsnprintf(buf, sizeof buf, fmt, args);
  va_end(args);
  return buf;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

Tensor<double> randn(Tensor<double>::Shape shape, Rng& rng, double scale = 1.0) {
  Tensor<double> t(std::move(shape));
  for (std::int64_t i = 0; i < t.numel(); ++i) t[i] = scale * rng.normal();
  return t;
}

Tensor<double> random_sigma(std::int64_t n, Rng& rng) {
  Tensor<double> s({n});
  for (std::int64_t i = 0; i < n; ++i) s[i] = 1.0 + 0.3 * rng.uniform();
  return s;
}

// 1. Closed-form propagation against a long iterative run. The iteration
// converges to (1-alpha)(I - alpha L)^{-1} P0; the closed form drops the
// constant source factor (a uniform rescale of all scores), so the oracle
// comparison restores it before differencing.
Outcome propagation_oracle() {
  const auto t0 = std::chrono::steady_clock::now();
  Rng rng(101);
  const std::int64_t n = 100;
  std::vector<int> support;
  for (int c = 0; c < 5; ++c)
    for (int k = 0; k < 5; ++k) support.push_back(c);
  const auto p0 = prop::initial_scores<double>(support, n - 25, 5);

  double worst = 0.0;
  for (int trial = 0; trial < 100; ++trial) {
    const auto emb = randn({n, 8}, rng);
    const auto sigma = random_sigma(n, rng);
    const auto l = graph::normalize(graph::sparsify(graph::pairwise_similarity(emb, sigma), 20));
    const auto closed = prop::propagate_closed_form(l, p0, 0.99);
    const auto iter = prop::propagate_iterative(l, p0, 0.99, 5000);
    for (std::int64_t i = 0; i < closed.numel(); ++i)
      worst = std::max(worst, std::abs(0.01 * closed[i] - iter[i]));
  }
  const double secs = seconds_since(t0);
  return {worst <= 1e-6 && secs < 60.0,
          strf("max abs diff %.2e (tol 1e-06) over 100 episodes of 100 nodes, m=20, alpha=0.99; "
               "%.1f s (budget 60 s)",
               worst, secs)};
}

// 2. Reverse-mode gradients against central differences on a miniature
// episode, double precision, sampling stratified across every trainable
// tensor so the backbone and all three relation nets are covered.
Outcome gradient_fidelity() {
  const auto t0 = std::chrono::steady_clock::now();
  data::SyntheticSpec spec;
  spec.n_classes = 4;
  spec.examples_per_class = 5;
  spec.height = spec.width = 8;
  spec.class_separation = 3.0;
  spec.noise_scale = 0.5;
  spec.seed = 2;
  const auto split = data::generate_synthetic(spec, "gradcheck", 0, {0.5, 0.5, 0.5}, {0.5, 0.5, 0.5});

  model::ModelConfig mc;
  mc.height = mc.width = 8;
  model::Model<double> model(mc, 11);
  Rng er = Rng::derive(11, "acceptance-gradcheck");
  const auto ep = episodes::sample_episode<double>(split, {2, 1, 1}, er);

  const auto report = model::gradcheck(model, ep, 0.99, 2, {1.0, 1.0, 1.0}, 50, 1e-5, 1e-4, 11);
  bool backbone = false, r2 = false, r3 = false, r4 = false;
  for (const auto& c : report.checks) {
    backbone = backbone || c.param.rfind("backbone.", 0) == 0;
    r2 = r2 || c.param.rfind("relation2.", 0) == 0;
    r3 = r3 || c.param.rfind("relation3.", 0) == 0;
    r4 = r4 || c.param.rfind("relation4.", 0) == 0;
  }
  const double secs = seconds_since(t0);
  const bool pass = report.passed && report.checks.size() >= 50 && backbone && r2 && r3 && r4 &&
                    secs < 300.0;
  return {pass, strf("max rel err %.2e (tol 1e-04) over %zu coords, 2-way 1-shot 1-query at 8x8, "
                     "backbone+3 relation nets covered: %s; %.1f s (budget 300 s)",
                     report.max_rel_err, report.checks.size(),
                     backbone && r2 && r3 && r4 ? "yes" : "no", secs)};
}

// 3. Feature-map sizes at the published input resolution.
Outcome tap_shapes() {
  model::ModelConfig mc;  // 3x84x84, 64 channels
  model::Model<float> model(mc, 5);
  Rng rng(6);
  Tensor<float> images({2, 3, 84, 84});
  for (std::int64_t i = 0; i < images.numel(); ++i)
    images[i] = 0.5f * static_cast<float>(rng.normal());
  Tape<float> tape(false);
  const auto blocks = model.backbone_forward(tape, tape.leaf(images, false), model::BnMode::eval);

  const auto got2 = tape.val(blocks[2]).shape();
  const auto got3 = tape.val(blocks[3]).shape();
  const auto got4 = tape.val(blocks[4]).shape();
  const bool pass = got2 == Tensor<float>::Shape{2, 64, 21, 21} &&
                    got3 == Tensor<float>::Shape{2, 64, 10, 10} &&
                    got4 == Tensor<float>::Shape{2, 64, 5, 5};
  return {pass, strf("3x84x84 input taps: %s, %s, %s (want 64x21x21, 64x10x10, 64x5x5)",
                     Tensor<float>::shape_string(got2).c_str(),
                     Tensor<float>::shape_string(got3).c_str(),
                     Tensor<float>::shape_string(got4).c_str())};
}

// Shared synthetic dataset for the protocol and desk-scale checks: easy
// prototypes, enough examples per class that the test pool stays disjoint
// from what training can memorize.
const data::LoadedSplits& desk_splits() {
  static const data::LoadedSplits splits = [] {
    data::SyntheticSpec spec;
    spec.n_classes = 8;
    spec.examples_per_class = 200;
    spec.height = spec.width = 32;
    spec.class_separation = 5.0;
    spec.noise_scale = 0.5;
    spec.seed = 1;
    return data::synthetic_splits(spec, {0.5, 0.5, 0.5}, {0.5, 0.5, 0.5});
  }();
  return splits;
}

// 4. Evaluation protocol on an untrained model: the mean over 600 episodes
// must sit within its own 95% interval (1.96 sigma / sqrt(600)) of chance.
// The data is noise-dominated on purpose: with separable classes, even
// random untrained features hand propagation a measurable lift over chance
// (observed +1.2 points on the easy set), which would mask protocol bugs.
Outcome untrained_protocol() {
  const auto t0 = std::chrono::steady_clock::now();
  data::SyntheticSpec spec;
  spec.n_classes = 8;
  spec.examples_per_class = 20;
  spec.height = spec.width = 32;
  spec.class_separation = 5.0;
  spec.noise_scale = 8.0;
  spec.seed = 6;
  const auto noise_split =
      data::generate_synthetic(spec, "protocol", 0, {0.5, 0.5, 0.5}, {0.5, 0.5, 0.5});

  model::ModelConfig mc;
  mc.height = mc.width = 32;
  model::Model<double> model(mc, 17);

  eval::EvalParams p;
  p.spec = {5, 1, 15};
  p.m = 20;
  p.n_episodes = 600;
  p.seed = 23;
  const auto r = eval::evaluate(model, noise_split, p);
  const double secs = seconds_since(t0);
  const double gap = std::abs(r.mean_accuracy - 0.20);
  return {gap <= r.ci95 && secs < 600.0,
          strf("untrained 5-way mean %.4f, |mean - 0.20| = %.4f <= ci95 %.4f over 600 episodes; "
               "%.1f s (budget 600 s)",
               r.mean_accuracy, gap, r.ci95, secs)};
}

// Desk-scale training run shared by checks 5 and 6.
struct DeskRun {
  bool ok = false;
  std::vector<double> losses;
  std::vector<double> window_means;  // disjoint 200-episode windows, first 2000
  eval::EvalReport report;
  double train_secs = 0.0;
};

DeskRun run_desk_training() {
  DeskRun out;
  const auto& splits = desk_splits();

  config::RunConfig cfg;
  cfg.height = cfg.width = 32;
  cfg.train_n_way = 5;
  cfg.train_k_shot = 1;
  cfg.train_q_per_class = 5;
  cfg.eval_n_way = 5;
  cfg.eval_k_shot = 1;
  cfg.eval_q_per_class = 5;
  cfg.m = 5;
  cfg.weights = {0.0, 0.0, 1.0};
  cfg.total_episodes = 5000;
  cfg.eval_every = 1000;
  cfg.val_episodes = 20;
  cfg.train_seed = 3;
  cfg.precision = "double";
  cfg.validate();

  const auto t0 = std::chrono::steady_clock::now();
  train::Trainer<double> trainer(cfg, &splits.train, &splits.val, "");
  std::ostringstream metrics;
  trainer.run(&metrics);
  out.train_secs = seconds_since(t0);

  std::istringstream in(metrics.str());
  std::string line;
  while (std::getline(in, line))
    out.losses.push_back(nlohmann::json::parse(line).at("loss_total").get<double>());
  for (std::size_t w = 0; w + 200 <= 2000 && w + 200 <= out.losses.size(); w += 200) {
    double sum = 0.0;
    for (std::size_t i = w; i < w + 200; ++i) sum += out.losses[i];
    out.window_means.push_back(sum / 200.0);
  }

  eval::EvalParams p;
  p.spec = {5, 1, 5};
  p.m = 5;
  p.n_episodes = 600;
  p.seed = 99;
  out.report = eval::evaluate(trainer.model(), splits.test, p);
  out.ok = true;
  return out;
}

// 5. Learning on the easy synthetic set: at most 5000 episodes, final-layer
// test accuracy at least 0.90, and the loss moving average (means of
// successive disjoint 200-episode windows) non-increasing across the first
// 2000 episodes.
Outcome desk_scale_learning(const DeskRun& run) {
  if (!run.ok) return {false, "training stage failed"};
  bool monotone = run.window_means.size() == 10;
  for (std::size_t i = 0; i + 1 < run.window_means.size(); ++i)
    monotone = monotone && run.window_means[i + 1] <= run.window_means[i];
  std::string windows;
  for (double w : run.window_means) windows += strf("%.1f ", w);
  const bool pass = run.report.mean_accuracy >= 0.90 && monotone && run.train_secs < 3600.0;
  return {pass, strf("test accuracy %.4f (need >= 0.90) after 5000 episodes in %.0f s "
                     "(budget 3600 s); 200-episode loss windows %s%s",
                     run.report.mean_accuracy, run.train_secs, windows.c_str(),
                     monotone ? "(non-increasing)" : "(NOT monotone)")};
}

// 6. Per-layer probes on the same trained model: the final propagation layer
// must be at least as accurate as the layer-2 probe.
Outcome per_layer_ordering(const DeskRun& run) {
  if (!run.ok) return {false, "training stage failed"};
  const auto& pl = run.report.per_layer;
  const double l2 = pl.at(2).mean, l3 = pl.at(3).mean, l4 = pl.at(4).mean;
  return {l4 >= l2, strf("600-episode probes: layer 2 %.4f, layer 3 %.4f, layer 4 %.4f "
                         "(need layer 4 >= layer 2)",
                         l2, l3, l4)};
}

const data::LoadedSplits& small_splits() {
  static const data::LoadedSplits splits = [] {
    data::SyntheticSpec spec;
    spec.n_classes = 8;
    spec.examples_per_class = 40;
    spec.height = spec.width = 16;
    spec.class_separation = 5.0;
    spec.noise_scale = 0.5;
    spec.seed = 4;
    return data::synthetic_splits(spec, {0.5, 0.5, 0.5}, {0.5, 0.5, 0.5});
  }();
  return splits;
}

// 7. Weights (0,0,1) with all taps active versus a model that only builds
// tap 4: identical metrics streams at double precision, wallclock aside.
// Zero-weight taps contribute exactly-zero gradients, name-keyed init makes
// the shared parameters identical, and Adam's zero-gradient update is a
// bit-exact no-op, so every logged number must match.
Outcome single_tap_reduction() {
  const auto& splits = small_splits();
  config::RunConfig cfg;
  cfg.height = cfg.width = 16;
  cfg.train_n_way = 5;
  cfg.train_k_shot = 1;
  cfg.train_q_per_class = 5;
  cfg.eval_n_way = 5;
  cfg.eval_k_shot = 1;
  cfg.eval_q_per_class = 5;
  cfg.m = 5;
  cfg.weights = {0.0, 0.0, 1.0};
  cfg.total_episodes = 100;
  cfg.eval_every = 25;
  cfg.val_episodes = 10;
  cfg.train_seed = 19;
  cfg.precision = "double";

  const auto stream = [&](const std::vector<int>& taps) {
    config::RunConfig c = cfg;
    c.taps = taps;
    c.validate();
    train::Trainer<double> t(c, &splits.train, &splits.val, "");
    std::ostringstream metrics;
    t.run(&metrics);
    std::vector<std::string> lines;
    std::istringstream in(metrics.str());
    std::string line;
    while (std::getline(in, line)) {
      auto j = nlohmann::json::parse(line);
      j.erase("wallclock");
      lines.push_back(j.dump());
    }
    return lines;
  };

  const auto full = stream({2, 3, 4});
  const auto solo = stream({4});
  std::size_t first_diff = full.size();
  for (std::size_t i = 0; i < std::min(full.size(), solo.size()); ++i)
    if (full[i] != solo[i]) {
      first_diff = i;
      break;
    }
  const bool pass = !full.empty() && full.size() == solo.size() && first_diff == full.size();
  return {pass, pass ? strf("100 metric records identical at double precision (wallclock excluded)")
                     : strf("streams differ (sizes %zu vs %zu, first differing record %zu)",
                            full.size(), solo.size(), first_diff)};
}

// 8. Randomized invariant suite over the graph pipeline, plus a dense
// eigensolve oracle for the spectral radius on 20-node instances.
Outcome invariant_suite() {
  const auto t0 = std::chrono::steady_clock::now();
  Rng rng(301);
  double worst_row_sum = 0.0, worst_sim_equiv = 0.0, worst_prop_equiv = 0.0, worst_radius = 0.0;
  std::string fail;

  for (int trial = 0; trial < 1000 && fail.empty(); ++trial) {
    const std::int64_t n = 10 + rng.uniform_int(31);
    const int m = 1 + static_cast<int>(rng.uniform_int(std::min<std::int64_t>(8, n - 1)));
    const std::int64_t d = 3 + rng.uniform_int(6);
    const auto emb = randn({n, d}, rng);
    const auto sigma = random_sigma(n, rng);

    const auto s = graph::pairwise_similarity(emb, sigma);
    const auto w = graph::sparsify(s, m);
    std::int64_t total_nonzeros = 0;
    for (std::int64_t j = 0; j < n && fail.empty(); ++j) {
      if (w.at(j, j) != 0.0) fail = strf("trial %d: nonzero affinity diagonal", trial);
      std::int64_t row_nonzeros = 0;
      for (std::int64_t k = 0; k < n; ++k) {
        if (w.at(j, k) != w.at(k, j)) fail = strf("trial %d: affinity asymmetry", trial);
        row_nonzeros += w.at(j, k) != 0.0;
      }
      if (row_nonzeros < m) fail = strf("trial %d: row keeps %lld < m=%d", trial,
                                        static_cast<long long>(row_nonzeros), m);
      total_nonzeros += row_nonzeros;
    }
    if (fail.empty() && total_nonzeros > 2 * std::int64_t(m) * n)
      fail = strf("trial %d: %lld nonzeros exceeds 2mn", trial,
                  static_cast<long long>(total_nonzeros));

    // Class probabilities: rows of the propagated softmax sum to one.
    const int n_way = 2 + static_cast<int>(rng.uniform_int(4));
    std::vector<int> support;
    for (int c = 0; c < n_way; ++c) support.push_back(c);
    const auto p0 = prop::initial_scores<double>(support, n - n_way, n_way);
    const auto l = graph::normalize(w);
    const auto p_star = prop::propagate_closed_form(l, p0, 0.99);
    const auto probs = prop::softmax_rows(p_star);
    for (std::int64_t j = 0; j < n; ++j) {
      double sum = 0.0;
      for (std::int64_t k = 0; k < n_way; ++k) sum += probs.at(j, k);
      worst_row_sum = std::max(worst_row_sum, std::abs(sum - 1.0));
    }
    if (fail.empty() && worst_row_sum > 1e-12)
      fail = strf("trial %d: probability row sum off by %.2e", trial, worst_row_sum);

    // Permutation equivariance: relabeling nodes permutes S and P* rows and
    // columns, nothing else. The solve refactors in a different order, so the
    // propagated scores only match to roundoff amplified by the conditioning.
    std::vector<std::int64_t> perm(static_cast<std::size_t>(n));
    for (std::int64_t i = 0; i < n; ++i) perm[static_cast<std::size_t>(i)] = i;
    for (std::int64_t i = 0; i < n - 1; ++i)
      std::swap(perm[static_cast<std::size_t>(i)],
                perm[static_cast<std::size_t>(i + rng.uniform_int(n - i))]);
    Tensor<double> pemb({n, d});
    Tensor<double> psigma({n});
    Tensor<double> pp0({n, n_way});
    for (std::int64_t j = 0; j < n; ++j) {
      const std::int64_t src = perm[static_cast<std::size_t>(j)];
      psigma[j] = sigma[src];
      for (std::int64_t i = 0; i < d; ++i) pemb.at(j, i) = emb.at(src, i);
      for (std::int64_t k = 0; k < n_way; ++k) pp0.at(j, k) = p0.at(src, k);
    }
    const auto ps = graph::pairwise_similarity(pemb, psigma);
    for (std::int64_t j = 0; j < n; ++j)
      for (std::int64_t k = 0; k < n; ++k)
        worst_sim_equiv = std::max(
            worst_sim_equiv, std::abs(ps.at(j, k) - s.at(perm[static_cast<std::size_t>(j)],
                                                         perm[static_cast<std::size_t>(k)])));
    const auto pp_star =
        prop::propagate_closed_form(graph::normalize(graph::sparsify(ps, m)), pp0, 0.99);
    double scale = 1.0;
    for (std::int64_t i = 0; i < p_star.numel(); ++i) scale = std::max(scale, std::abs(p_star[i]));
    for (std::int64_t j = 0; j < n; ++j)
      for (std::int64_t k = 0; k < n_way; ++k)
        worst_prop_equiv = std::max(
            worst_prop_equiv,
            std::abs(pp_star.at(j, k) - p_star.at(perm[static_cast<std::size_t>(j)], k)) / scale);
    if (fail.empty() && worst_sim_equiv > 1e-12)
      fail = strf("trial %d: similarity equivariance off by %.2e", trial, worst_sim_equiv);
    if (fail.empty() && worst_prop_equiv > 1e-8)
      fail = strf("trial %d: propagation equivariance off by %.2e", trial, worst_prop_equiv);

    // Spectral radius oracle on a dedicated 20-node instance.
    const auto s20 = graph::pairwise_similarity(randn({20, 6}, rng), random_sigma(20, rng));
    const auto l20 = graph::normalize(graph::sparsify(s20, 1 + static_cast<int>(rng.uniform_int(8))));
    Eigen::SelfAdjointEigenSolver<Tensor<double>::MatrixRM> es(l20.mat(20, 20));
    if (es.info() != Eigen::Success) {
      fail = strf("trial %d: eigensolve failed", trial);
    } else {
      worst_radius = std::max(worst_radius, es.eigenvalues().cwiseAbs().maxCoeff());
      if (worst_radius > 1.0 + 1e-8)
        fail = strf("trial %d: spectral radius %.12f", trial, worst_radius);
    }
  }

  const double secs = seconds_since(t0);
  if (!fail.empty()) return {false, fail};
  return {true, strf("1000 instances: affinity symmetric, zero diagonal, per-row >= m, total <= "
                     "2mn; prob row sums off <= %.1e; equivariance off <= %.1e (S), %.1e (P*); "
                     "spectral radius <= %.9f; %.1f s",
                     worst_row_sum, worst_sim_equiv, worst_prop_equiv, worst_radius, secs)};
}

// 9. Higher-shot protocol: train 5-way 5-shot, evaluate 5-way 1-shot through
// the standard report path. No accuracy bar, only a complete, well-formed
// report.
Outcome higher_shot_mode() {
  const auto& splits = small_splits();
  config::RunConfig cfg;
  cfg.height = cfg.width = 16;
  cfg.train_n_way = 5;
  cfg.train_k_shot = 5;
  cfg.train_q_per_class = 5;
  cfg.eval_n_way = 5;
  cfg.eval_k_shot = 1;
  cfg.eval_q_per_class = 5;
  cfg.m = 5;
  cfg.total_episodes = 150;
  cfg.eval_every = 50;
  cfg.val_episodes = 10;
  cfg.train_seed = 29;
  cfg.precision = "double";
  cfg.validate();

  train::Trainer<double> trainer(cfg, &splits.train, &splits.val, "");
  std::ostringstream metrics;
  trainer.run(&metrics);

  eval::EvalParams p;
  p.spec = cfg.eval_spec();
  p.m = 5;
  p.n_episodes = 600;
  p.seed = 31;
  const auto r = eval::evaluate(trainer.model(), splits.test, p);
  const auto j = r.to_json(false);
  const bool pass = r.n_episodes == 600 && r.per_layer.count(2) && r.per_layer.count(3) &&
                    r.per_layer.count(4) && r.mean_accuracy >= 0.0 && r.mean_accuracy <= 1.0 &&
                    j.contains("summary") && j.contains("per_layer");
  return {pass, strf("trained 5-way 5-shot (150 episodes), evaluated 5-way 1-shot: %s over 600 "
                     "episodes, layers %.3f / %.3f / %.3f",
                     r.summary().c_str(), r.per_layer.at(2).mean, r.per_layer.at(3).mean,
                     r.per_layer.at(4).mean)};
}

Outcome guarded(const std::function<Outcome()>& fn) {
  try {
    return fn();
  } catch (const std::exception& e) {
    return {false, strf("exception: %s", e.what())};
  }
}

}  // namespace

// With no arguments every criterion runs; an optional comma-separated list
// of indices (e.g. "1,3,8") restricts the run during development. Skipped
// criteria do not count as failures.
int main(int argc, char** argv) {
  bool selected[10];
  std::fill(std::begin(selected), std::end(selected), argc < 2);
  if (argc >= 2) {
    std::istringstream in(argv[1]);
    std::string tok;
    while (std::getline(in, tok, ','))
      if (const int i = std::atoi(tok.c_str()); i >= 1 && i <= 9) selected[i] = true;
  }

  int failures = 0;
  const auto report = [&](int idx, const char* name, const std::function<Outcome()>& fn) {
    if (!selected[idx]) return;
    const Outcome o = guarded(fn);
    std::printf("%d. %-42s %s  %s\n", idx, name, o.pass ? "PASS" : "FAIL", o.detail.c_str());
    std::fflush(stdout);
    failures += !o.pass;
  };

  report(1, "closed-form vs iterative propagation", propagation_oracle);
  report(2, "gradient fidelity", gradient_fidelity);
  report(3, "backbone tap shapes", tap_shapes);
  report(4, "untrained evaluation protocol", untrained_protocol);

  DeskRun desk;
  if (selected[6]) selected[5] = true;  // the probe check reads the trained model
  report(5, "desk-scale learning", [&] {
    desk = run_desk_training();
    return desk_scale_learning(desk);
  });
  report(6, "per-layer probe ordering", [&] { return per_layer_ordering(desk); });
  report(7, "single-tap reduction", single_tap_reduction);
  report(8, "graph invariant suite", invariant_suite);
  report(9, "higher-shot protocol", higher_shot_mode);

  int ran = 0;
  for (int i = 1; i <= 9; ++i) ran += selected[i];
  if (failures == 0) {
    std::printf("acceptance: %d/%d criteria passed\n", ran, ran);
    return 0;
  }
  std::printf("acceptance: %d of %d criteria FAILED\n", failures, ran);
  return 1;
}
