#pragma once

#include <functional>
#include <utility>
#include <vector>

#include "lookback/tensor.hpp"

namespace lookback {

// Reverse-mode tape. Operations append nodes holding the forward value and a
// closure that scatters the node's gradient into its parents' gradients.
// A tape lives for one episode: build the forward graph, call backward() on
// the scalar loss, read gradients off the leaves, drop the tape.
//
// Gradient buffers are allocated lazily; a node whose gradient was never
// touched is skipped during backward, which cannot change results (its
// contribution would be exactly zero).
template <typename T>
class Tape {
 public:
  using BackwardFn = std::function<void(Tape&, int self)>;

  explicit Tape(bool recording = true) : recording_(recording) {}

  bool recording() const { return recording_; }

  int leaf(Tensor<T> value, bool requires_grad = false) {
    nodes_.push_back(Node{std::move(value), Tensor<T>{}, requires_grad && recording_, nullptr});
    return static_cast<int>(nodes_.size()) - 1;
  }

  // `value` is the op's forward result; `backward` may be empty when no parent
  // needs gradients. requires_grad is decided by the op helpers.
  int op(Tensor<T> value, bool requires_grad, BackwardFn backward) {
    const bool rg = requires_grad && recording_;
    nodes_.push_back(Node{std::move(value), Tensor<T>{}, rg, rg ? std::move(backward) : nullptr});
    return static_cast<int>(nodes_.size()) - 1;
  }

  bool requires_grad(int id) const { return nodes_[static_cast<std::size_t>(id)].requires_grad; }

  const Tensor<T>& val(int id) const { return nodes_[static_cast<std::size_t>(id)].value; }
  Tensor<T>& val(int id) { return nodes_[static_cast<std::size_t>(id)].value; }

  // Gradient buffer, materialized as zeros on first access.
  Tensor<T>& grad(int id) {
    Node& n = nodes_[static_cast<std::size_t>(id)];
    if (n.grad.empty() && n.value.numel() > 0) n.grad = Tensor<T>::zeros(n.value.shape());
    return n.grad;
  }
  bool grad_materialized(int id) const { return !nodes_[static_cast<std::size_t>(id)].grad.empty(); }

  void add_grad(int id, const Tensor<T>& g) {
    Tensor<T>& dst = grad(id);
    const T* src = g.data();
    T* d = dst.data();
    const std::int64_t n = dst.numel();
    for (std::int64_t i = 0; i < n; ++i) d[i] += src[i];
  }

  void backward(int loss_id) {
    check(val(loss_id).numel() == 1, ErrorKind::runtime, "backward requires a scalar loss");
    grad(loss_id)[0] = T(1);
    for (int id = loss_id; id >= 0; --id) {
      Node& n = nodes_[static_cast<std::size_t>(id)];
      if (!n.requires_grad || !n.back || n.grad.empty()) continue;
      n.back(*this, id);
    }
  }

  std::size_t size() const { return nodes_.size(); }

 private:
  struct Node {
    Tensor<T> value;
    Tensor<T> grad;
    bool requires_grad;
    BackwardFn back;
  };
  std::vector<Node> nodes_;
  bool recording_;
};

}  // namespace lookback
