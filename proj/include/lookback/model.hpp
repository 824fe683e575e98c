#pragma once

#include <algorithm>
#include <array>
#include <string>
#include <utility>
#include <vector>

#include "lookback/common.hpp"
#include "lookback/episodes.hpp"
#include "lookback/ops_basic.hpp"
#include "lookback/ops_conv.hpp"
#include "lookback/ops_graph.hpp"
#include "lookback/params.hpp"
#include "lookback/propagation.hpp"

namespace lookback::model {

// Batch-norm handling per forward pass. frozen uses batch statistics exactly
// like train but with a zero momentum, so the running-statistics update is a
// bit-exact no-op: the loss becomes a pure function of the parameters while
// keeping train-mode numerics, which finite-difference checking needs.
enum class BnMode { train, frozen, eval };

struct ModelConfig {
  std::int64_t channels = 3;
  std::int64_t height = 84;
  std::int64_t width = 84;
  std::int64_t conv_channels = 64;
  std::int64_t relation_hidden = 8;
  std::vector<int> taps = {2, 3, 4};  // strictly increasing subset of {2,3,4}, must end in 4

  // Spatial size after `k` pooling halvings (floor, clamped to 1).
  static std::int64_t halved(std::int64_t v, int k) {
    for (int i = 0; i < k; ++i) v = std::max<std::int64_t>(v / 2, 1);
    return v;
  }
};

// Conv-64F backbone with feature taps after blocks 2, 3 and 4, plus one
// independent relation net per tap producing a positive per-example length
// scale. Parameters live in a name-keyed store; see ParamStore for the
// initialization contract.
template <typename T>
class Model {
 public:
  Model(ModelConfig cfg, std::uint64_t init_seed) : cfg_(std::move(cfg)) {
    check(!cfg_.taps.empty() && cfg_.taps.back() == 4, "model taps must end with tap 4");
    build(init_seed);
  }

  const ModelConfig& config() const { return cfg_; }
  ParamStore<T>& params() { return params_; }
  const ParamStore<T>& params() const { return params_; }

  // One tap's slice of the episode forward pass; fields are tape ids.
  struct TapForward {
    int tap = 0;
    double weight = 0.0;
    int sigma = -1;      // [n] positive length scales
    int scaled = -1;     // [n x D] embedding rows divided by sigma
    int similarity = -1; // [n x n] dense Gaussian similarities
    int affinity = -1;   // [n x n] sparsified + symmetrized graph
    int laplacian = -1;  // [n x n] normalized propagation operator
    int p_star = -1;     // [n x N] propagated scores
    int probs = -1;      // [n x N] row softmax
    int ce = -1;         // scalar cross-entropy over all nodes
  };

  struct EpisodeForward {
    std::vector<TapForward> taps;  // in ascending tap order
    int total = -1;                // scalar: sum of weight * ce over taps
    Tensor<T> p0;                  // initial score matrix [n x N]

    const TapForward& tap(int index) const {
      for (const auto& t : taps)
        if (t.tap == index) return t;
      fail_runtime("tap " + std::to_string(index) + " not active in this forward");
    }
  };

  // Runs all four backbone blocks and returns the tape ids of the block
  // outputs, indexed 1..4 (index 0 unused). The chain through block 4 always
  // runs; which taps get relation/graph heads is decided by the caller.
  std::array<int, 5> backbone_forward(Tape<T>& tape, int images, BnMode mode) {
    const Tensor<T>& x = tape.val(images);
    check(x.rank() == 4, "backbone expects a [n x C x H x W] image batch, got " +
                             Tensor<T>::shape_string(x.shape()));
    const typename Tensor<T>::Shape expect{cfg_.channels, cfg_.height, cfg_.width};
    const typename Tensor<T>::Shape got{x.dim(1), x.dim(2), x.dim(3)};
    if (got != expect)
      fail_config("backbone expects images shaped " + Tensor<T>::shape_string(expect) +
                  ", got " + Tensor<T>::shape_string(got));

    std::array<int, 5> out{};
    int cur = images;
    for (int b = 1; b <= 4; ++b) {
      cur = conv_block(tape, cur, "backbone.block" + std::to_string(b), mode);
      out[static_cast<std::size_t>(b)] = cur;
    }
    return out;
  }

  // Relation net for one tap: two conv blocks (the second collapses to one
  // channel), two fully-connected layers, then softplus + 1e-6 to the scalar
  // length scale. Returns the tape id of sigma, shape [n].
  int relation_forward(Tape<T>& tape, int tap_features, int tap_index, BnMode mode) {
    const std::string base = "relation" + std::to_string(tap_index);
    const std::int64_t n = tape.val(tap_features).dim(0);

    int cur = conv_block(tape, tap_features, base + ".block1", mode);
    cur = conv_block(tape, cur, base + ".block2", mode);
    const Tensor<T>& c2 = tape.val(cur);
    cur = ops::reshape(tape, cur, {n, c2.dim(1) * c2.dim(2) * c2.dim(3)});
    cur = ops::relu(tape, ops::linear(tape, cur, leaf(tape, base + ".fc1.weight", mode),
                                      leaf(tape, base + ".fc1.bias", mode)));
    cur = ops::linear(tape, cur, leaf(tape, base + ".fc2.weight", mode),
                      leaf(tape, base + ".fc2.bias", mode));
    cur = ops::reshape(tape, cur, {n});
    const int sigma = ops::add_scalar(tape, ops::softplus(tape, cur), T(1e-6));
    if (!tape.val(sigma).all_finite())
      fail_runtime("relation network overflow (layer " + std::to_string(tap_index) + ")");
    return sigma;
  }

  // Full episode pass: backbone, then per active tap the relation net and the
  // similarity -> sparsify -> normalize -> propagate -> softmax -> loss chain.
  // `weights` is indexed by tap-2. Inactive taps contribute nothing; active
  // taps run even at weight zero so their loss can be reported.
  EpisodeForward forward_episode(Tape<T>& tape, const episodes::Episode<T>& episode, T alpha, int m,
                                 const std::vector<double>& weights, BnMode mode) {
    check(weights.size() == 3, "per-tap weights must have 3 entries");
    const std::int64_t n = episode.spec.n_nodes();
    bound_.clear();

    EpisodeForward fwd;
    fwd.p0 = prop::initial_scores<T>(episode.support_labels(), episode.spec.n_query(),
                                     episode.spec.n_way);

    const int images = tape.leaf(episode.images, false);
    const auto blocks = backbone_forward(tape, images, mode);

    std::vector<std::pair<T, int>> terms;
    for (const int tap : cfg_.taps) {
      TapForward tf;
      tf.tap = tap;
      tf.weight = weights[static_cast<std::size_t>(tap - 2)];
      const int feat = blocks[static_cast<std::size_t>(tap)];
      tf.sigma = relation_forward(tape, feat, tap, mode);
      const Tensor<T>& f = tape.val(feat);
      const int flat = ops::reshape(tape, feat, {n, f.dim(1) * f.dim(2) * f.dim(3)});
      tf.scaled = ops::row_scale(tape, flat, tf.sigma);
      tf.similarity = ops::pairwise_similarity(tape, tf.scaled);
      tf.affinity = ops::sparsify(tape, tf.similarity, m);
      tf.laplacian = ops::normalize(tape, tf.affinity);
      tf.p_star = ops::propagate(tape, tf.laplacian, fwd.p0, alpha);
      tf.probs = ops::softmax_rows(tape, tf.p_star);
      tf.ce = ops::cross_entropy_sum(tape, tf.probs, episode.labels);
      terms.emplace_back(static_cast<T>(tf.weight), tf.ce);
      fwd.taps.push_back(tf);
    }
    fwd.total = ops::add_scaled(tape, terms);
    return fwd;
  }

  // Query predictions from the final tap's propagated scores.
  std::vector<int> predict(const Tape<T>& tape, const EpisodeForward& fwd,
                           const episodes::Episode<T>& episode) const {
    return prop::predict_queries(tape.val(fwd.tap(4).p_star), episode.spec.n_support());
  }

  // (parameter name, tape leaf id) pairs from the most recent forward_episode,
  // in use order; the optimizer reads gradients through these.
  const std::vector<std::pair<std::string, int>>& bindings() const { return bound_; }

 private:
  // conv3x3(pad 1, no bias) -> BN -> ReLU -> 2x2 max-pool. BN running
  // statistics are non-trainable store entries mutated in train mode only.
  int conv_block(Tape<T>& tape, int x, const std::string& base, BnMode mode) {
    const int conv = ops::conv2d(tape, x, leaf(tape, base + ".conv.weight", mode), -1, 1);
    const bool batch_stats = mode != BnMode::eval;
    const double momentum = mode == BnMode::train ? 0.1 : 0.0;
    const int bn = ops::batch_norm(tape, conv, leaf(tape, base + ".bn.gamma", mode),
                                   leaf(tape, base + ".bn.beta", mode),
                                   &params_.at(base + ".bn.running_mean"),
                                   &params_.at(base + ".bn.running_var"), batch_stats, momentum);
    return ops::max_pool2(tape, ops::relu(tape, bn));
  }

  int leaf(Tape<T>& tape, const std::string& name, BnMode mode) {
    const int id = tape.leaf(params_.at(name), mode != BnMode::eval);
    bound_.emplace_back(name, id);
    return id;
  }

  void build(std::uint64_t seed) {
    const std::int64_t ch = cfg_.conv_channels;
    for (int b = 1; b <= 4; ++b) {
      const std::int64_t in = b == 1 ? cfg_.channels : ch;
      add_conv_block("backbone.block" + std::to_string(b), in, ch, seed);
    }
    for (const int tap : cfg_.taps) {
      const std::string base = "relation" + std::to_string(tap);
      add_conv_block(base + ".block1", ch, ch, seed);
      add_conv_block(base + ".block2", ch, 1, seed);
      // The relation input is the tap feature map (spatial size after `tap`
      // halvings); its own two pools halve twice more.
      const std::int64_t fh = ModelConfig::halved(cfg_.height, tap + 2);
      const std::int64_t fw = ModelConfig::halved(cfg_.width, tap + 2);
      const std::int64_t flat = fh * fw;
      const std::int64_t hidden = cfg_.relation_hidden;
      params_.add(base + ".fc1.weight",
                  he_normal<T>({hidden, flat}, seed, base + ".fc1.weight", flat), true);
      params_.add(base + ".fc1.bias", small_normal({hidden}, seed, base + ".fc1.bias"), true);
      params_.add(base + ".fc2.weight",
                  he_normal<T>({1, hidden}, seed, base + ".fc2.weight", hidden), true);
      params_.add(base + ".fc2.bias", small_normal({1}, seed, base + ".fc2.bias"), true);
    }
  }

  // Small random bias init. Zero biases would park the fully-connected
  // preactivations exactly on the ReLU kink whenever an upstream ReLU emits
  // an exact zero (routine on miniature inputs, where the relation net's
  // flattened input is a single rectified value); a generic offset keeps the
  // loss differentiable at the initial point.
  static Tensor<T> small_normal(typename Tensor<T>::Shape shape, std::uint64_t seed,
                                const std::string& name) {
    Tensor<T> t(std::move(shape));
    Rng rng = Rng::derive(seed, name);
    for (std::int64_t i = 0; i < t.numel(); ++i) t[i] = static_cast<T>(0.1 * rng.normal());
    return t;
  }

  void add_conv_block(const std::string& base, std::int64_t in, std::int64_t out,
                      std::uint64_t seed) {
    params_.add(base + ".conv.weight",
                he_normal<T>({out, in, 3, 3}, seed, base + ".conv.weight", in * 9), true);
    params_.add(base + ".bn.gamma", Tensor<T>::full({out}, T(1)), true);
    params_.add(base + ".bn.beta", Tensor<T>({out}), true);
    params_.add(base + ".bn.running_mean", Tensor<T>({out}), false);
    params_.add(base + ".bn.running_var", Tensor<T>::full({out}, T(1)), false);
  }

  ModelConfig cfg_;
  ParamStore<T> params_;
  std::vector<std::pair<std::string, int>> bound_;
};

}  // namespace lookback::model
