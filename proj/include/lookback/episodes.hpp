#pragma once

#include <numeric>
#include <unordered_map>
#include <unordered_set>
#include <utility>
#include <vector>

#include "lookback/rng.hpp"
#include "lookback/tensor.hpp"

namespace lookback::episodes {

struct EpisodeSpec {
  int n_way = 5;
  int k_shot = 1;
  int q_per_class = 15;

  void validate() const {
    check(n_way >= 2, ErrorKind::config, "episode spec: n_way must be at least 2");
    check(k_shot >= 1, ErrorKind::config, "episode spec: k_shot must be at least 1");
    check(q_per_class >= 1, ErrorKind::config, "episode spec: q_per_class must be at least 1");
  }
  std::int64_t n_support() const { return std::int64_t(n_way) * k_shot; }
  std::int64_t n_query() const { return std::int64_t(n_way) * q_per_class; }
  std::int64_t n_nodes() const { return n_support() + n_query(); }
};

// Node order: support block sorted by (episode label, shot), then query block
// sorted by (episode label, index). Labels of query nodes are the held-out
// true labels.
template <typename T>
struct Episode {
  EpisodeSpec spec;
  Tensor<T> images;                              // [n_nodes, C, H, W]
  std::vector<int> labels;                       // per node, 0..n_way-1
  std::vector<int> class_map;                    // episode label -> dataset class id
  std::vector<std::pair<int, int>> example_ids;  // per node: (dataset class id, example index)

  std::int64_t n_support() const { return spec.n_support(); }
  std::int64_t n_query() const { return spec.n_query(); }
  std::int64_t n_nodes() const { return spec.n_nodes(); }
  std::vector<int> support_labels() const {
    return std::vector<int>(labels.begin(), labels.begin() + n_support());
  }
};

// First-appearance order assigns episode labels 0..N-1.
inline std::pair<std::unordered_map<int, int>, std::vector<int>> remap_labels(
    const std::vector<int>& dataset_class_ids) {
  check(dataset_class_ids.size() >= 2, ErrorKind::config, "episode spec: n_way must be at least 2");
  std::unordered_map<int, int> to_label;
  std::vector<int> class_map;
  for (int id : dataset_class_ids) {
    check(to_label.emplace(id, static_cast<int>(class_map.size())).second, ErrorKind::runtime,
          "degenerate episode");
    class_map.push_back(id);
  }
  return {std::move(to_label), std::move(class_map)};
}

namespace detail {

// First k entries of a partial Fisher-Yates shuffle of 0..n-1.
inline std::vector<std::int64_t> sample_without_replacement(std::int64_t n, std::int64_t k,
                                                            Rng& rng) {
  std::vector<std::int64_t> idx(static_cast<std::size_t>(n));
  std::iota(idx.begin(), idx.end(), std::int64_t(0));
  for (std::int64_t i = 0; i < k; ++i)
    std::swap(idx[static_cast<std::size_t>(i)],
              idx[static_cast<std::size_t>(i + rng.uniform_int(n - i))]);
  idx.resize(static_cast<std::size_t>(k));
  return idx;
}

}  // namespace detail

// Dataset is duck-typed: n_classes(), class_id(ci), n_examples(ci),
// image_shape() -> {C,H,W}, write_example(ci, ei, T*).
//
// Draw order is fixed: first the N classes, then K+Q example indices per
// chosen class in class-draw order; the first K of each go to support.
template <typename T, typename Dataset>
Episode<T> sample_episode(const Dataset& index, const EpisodeSpec& spec, Rng& rng) {
  spec.validate();
  const int n_classes = index.n_classes();
  check(n_classes >= spec.n_way, ErrorKind::infeasible, "dataset too small for N-way");
  const std::vector<std::int64_t> chosen =
      detail::sample_without_replacement(n_classes, spec.n_way, rng);

  std::vector<int> chosen_ids;
  chosen_ids.reserve(static_cast<std::size_t>(spec.n_way));
  for (std::int64_t ci : chosen) chosen_ids.push_back(index.class_id(static_cast<int>(ci)));
  auto [to_label, class_map] = remap_labels(chosen_ids);
  (void)to_label;

  const auto shape = index.image_shape();
  const std::int64_t per_image = shape[0] * shape[1] * shape[2];
  Episode<T> ep;
  ep.spec = spec;
  ep.class_map = std::move(class_map);
  ep.images = Tensor<T>({spec.n_nodes(), shape[0], shape[1], shape[2]});
  ep.labels.resize(static_cast<std::size_t>(spec.n_nodes()));
  ep.example_ids.resize(static_cast<std::size_t>(spec.n_nodes()));

  const std::int64_t per_class = spec.k_shot + spec.q_per_class;
  for (int label = 0; label < spec.n_way; ++label) {
    const int ci = static_cast<int>(chosen[static_cast<std::size_t>(label)]);
    const std::int64_t avail = index.n_examples(ci);
    check(avail >= per_class, ErrorKind::infeasible, "class too small for K+Q");
    const std::vector<std::int64_t> picks =
        detail::sample_without_replacement(avail, per_class, rng);
    for (std::int64_t s = 0; s < per_class; ++s) {
      const bool is_support = s < spec.k_shot;
      const std::int64_t node = is_support
                                    ? std::int64_t(label) * spec.k_shot + s
                                    : spec.n_support() + std::int64_t(label) * spec.q_per_class +
                                          (s - spec.k_shot);
      ep.labels[static_cast<std::size_t>(node)] = label;
      ep.example_ids[static_cast<std::size_t>(node)] = {ep.class_map[static_cast<std::size_t>(label)],
                                                        static_cast<int>(picks[static_cast<std::size_t>(s)])};
      index.write_example(ci, static_cast<int>(picks[static_cast<std::size_t>(s)]),
                          ep.images.data() + node * per_image);
    }
  }
  return ep;
}

}  // namespace lookback::episodes
