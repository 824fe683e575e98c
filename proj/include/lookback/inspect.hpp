#pragma once

#include <cstdio>
#include <ostream>
#include <string>
#include <vector>

#include "lookback/datasets.hpp"
#include "lookback/episodes.hpp"
#include "lookback/model.hpp"

namespace lookback::inspect {

struct InspectParams {
  episodes::EpisodeSpec spec;
  double alpha = 0.99;
  int m = 20;
  std::vector<double> weights{1.0, 1.0, 1.0};
  std::uint64_t seed = 0;
};

namespace detail {

// %.17g round-trips doubles exactly; float values are widened first, so the
// dump re-parses to the value the model actually computed in either precision.
inline std::string num(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

template <typename T>
void write_matrix(std::ostream& out, const std::string& name, const Tensor<T>& t) {
  const std::int64_t rows = t.rank() == 1 ? 1 : t.dim(0);
  const std::int64_t cols = t.rank() == 1 ? t.dim(0) : t.dim(1);
  out << "matrix " << name << " " << rows << " " << cols << "\n";
  for (std::int64_t i = 0; i < rows; ++i) {
    for (std::int64_t j = 0; j < cols; ++j)
      out << (j ? " " : "") << num(static_cast<double>(t[i * cols + j]));
    out << "\n";
  }
}

}  // namespace detail

// Dumps every intermediate of one episode's forward pass as labeled plain-text
// matrices: per tap the length scales, similarities, sparsified affinities,
// normalized operator, propagated scores, row probabilities, and the raw and
// weighted cross-entropy. The episode comes from the same derived-stream
// scheme the rest of the codebase uses, so a dump is reproducible from
// (checkpoint, dataset, seed) alone. Runs in eval mode without a gradient
// tape; inspection never mutates the model.
template <typename T>
void dump_episode(model::Model<T>& model, const data::Split& data, const InspectParams& p,
                  std::ostream& out) {
  Rng rng = Rng::derive(p.seed, "inspect-episode");
  const auto ep = episodes::sample_episode<T>(data, p.spec, rng);
  Tape<T> tape(false);
  const auto fwd = model.forward_episode(tape, ep, static_cast<T>(p.alpha), p.m, p.weights,
                                         model::BnMode::eval);

  out << "episode seed=" << p.seed << " n_way=" << ep.spec.n_way << " k_shot=" << ep.spec.k_shot
      << " q_per_class=" << ep.spec.q_per_class << " n_nodes=" << ep.spec.n_nodes()
      << " alpha=" << detail::num(p.alpha) << " m=" << p.m << "\n";
  out << "classes";
  for (int id : ep.class_map) out << " " << id;
  out << "\nlabels";
  for (int l : ep.labels) out << " " << l;
  out << "\n";
  detail::write_matrix(out, "P0", fwd.p0);

  for (const auto& tf : fwd.taps) {
    out << "tap " << tf.tap << " weight=" << detail::num(tf.weight) << "\n";
    detail::write_matrix(out, "sigma", tape.val(tf.sigma));
    detail::write_matrix(out, "S", tape.val(tf.similarity));
    detail::write_matrix(out, "W", tape.val(tf.affinity));
    detail::write_matrix(out, "L", tape.val(tf.laplacian));
    detail::write_matrix(out, "Pstar", tape.val(tf.p_star));
    detail::write_matrix(out, "probs", tape.val(tf.probs));
    const double raw = static_cast<double>(tape.val(tf.ce)[0]);
    out << "loss raw=" << detail::num(raw) << " weighted=" << detail::num(tf.weight * raw) << "\n";
  }
  out << "total " << detail::num(static_cast<double>(tape.val(fwd.total)[0])) << "\n";

  const auto pred = model.predict(tape, fwd, ep);
  out << "predictions";
  for (int v : pred) out << " " << v;
  out << "\nquery_labels";
  for (std::int64_t i = ep.spec.n_support(); i < ep.spec.n_nodes(); ++i)
    out << " " << ep.labels[static_cast<std::size_t>(i)];
  out << "\n";
}

}  // namespace lookback::inspect
