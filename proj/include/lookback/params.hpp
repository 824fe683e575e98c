#pragma once

#include <cmath>
#include <deque>
#include <string>
#include <unordered_map>
#include <utility>

#include "lookback/common.hpp"
#include "lookback/rng.hpp"
#include "lookback/tensor.hpp"

namespace lookback::model {

// Named parameter tensors in insertion order. References returned by add()
// and at() stay valid for the store's lifetime (deque storage), which the
// batch-norm ops rely on for their running-statistics pointers.
//
// Initial values are drawn from an RNG stream keyed by (seed, name), so a
// parameter's draw does not depend on which other parameters exist. Model
// variants that share a subset of tensors therefore start bit-identically.
template <typename T>
class ParamStore {
 public:
  struct Entry {
    std::string name;
    Tensor<T> value;
    bool trainable;
  };

  Tensor<T>& add(std::string name, Tensor<T> init, bool trainable) {
    check(index_.find(name) == index_.end(), "duplicate parameter name: " + name);
    index_.emplace(name, entries_.size());
    entries_.push_back(Entry{std::move(name), std::move(init), trainable});
    return entries_.back().value;
  }

  bool contains(const std::string& name) const { return index_.count(name) != 0; }

  Tensor<T>& at(const std::string& name) {
    const auto it = index_.find(name);
    check(it != index_.end(), "unknown parameter: " + name);
    return entries_[it->second].value;
  }
  const Tensor<T>& at(const std::string& name) const {
    return const_cast<ParamStore*>(this)->at(name);
  }

  std::deque<Entry>& entries() { return entries_; }
  const std::deque<Entry>& entries() const { return entries_; }
  std::size_t size() const { return entries_.size(); }

 private:
  std::deque<Entry> entries_;
  std::unordered_map<std::string, std::size_t> index_;
};

// Fan-in-scaled normal draw from the (seed, name) stream.
template <typename T>
Tensor<T> he_normal(typename Tensor<T>::Shape shape, std::uint64_t seed, const std::string& name,
                    std::int64_t fan_in) {
  Tensor<T> t(std::move(shape));
  Rng rng = Rng::derive(seed, name);
  const double stddev = std::sqrt(2.0 / static_cast<double>(fan_in));
  for (std::int64_t i = 0; i < t.numel(); ++i) t[i] = static_cast<T>(stddev * rng.normal());
  return t;
}

}  // namespace lookback::model
