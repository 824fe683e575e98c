#pragma once

#include <cmath>

#include "lookback/autodiff.hpp"

namespace lookback::ops {

// Free-function op set over Tape<T>. Each op computes the forward value
// eagerly and registers a closure that maps the output gradient to the
// parents. Closures read parent *values* straight off the tape, so no
// activation is stored twice.

template <typename T>
int reshape(Tape<T>& tape, int x, typename Tensor<T>::Shape shape) {
  Tensor<T> out = tape.val(x).reshaped(std::move(shape));
  const bool rg = tape.requires_grad(x);
  return tape.op(std::move(out), rg, [x](Tape<T>& t, int self) {
    const Tensor<T>& g = t.grad(self);
    Tensor<T> gx = g.reshaped(t.val(x).shape());
    t.add_grad(x, gx);
  });
}

template <typename T>
int relu(Tape<T>& tape, int x) {
  const Tensor<T>& in = tape.val(x);
  Tensor<T> out(in.shape());
  for (std::int64_t i = 0; i < in.numel(); ++i) out[i] = in[i] > T(0) ? in[i] : T(0);
  const bool rg = tape.requires_grad(x);
  return tape.op(std::move(out), rg, [x](Tape<T>& t, int self) {
    const Tensor<T>& in = t.val(x);
    const Tensor<T>& g = t.grad(self);
    Tensor<T>& gx = t.grad(x);
    for (std::int64_t i = 0; i < in.numel(); ++i)
      if (in[i] > T(0)) gx[i] += g[i];
  });
}

// log(1 + exp(x)), overflow-safe; derivative is the logistic function.
template <typename T>
int softplus(Tape<T>& tape, int x) {
  const Tensor<T>& in = tape.val(x);
  Tensor<T> out(in.shape());
  for (std::int64_t i = 0; i < in.numel(); ++i) {
    const double v = static_cast<double>(in[i]);
    out[i] = static_cast<T>(v > 30.0 ? v : std::log1p(std::exp(v)));
  }
  const bool rg = tape.requires_grad(x);
  return tape.op(std::move(out), rg, [x](Tape<T>& t, int self) {
    const Tensor<T>& in = t.val(x);
    const Tensor<T>& g = t.grad(self);
    Tensor<T>& gx = t.grad(x);
    for (std::int64_t i = 0; i < in.numel(); ++i) {
      const double s = 1.0 / (1.0 + std::exp(-static_cast<double>(in[i])));
      gx[i] += g[i] * static_cast<T>(s);
    }
  });
}

template <typename T>
int add_scalar(Tape<T>& tape, int x, T constant) {
  Tensor<T> out = tape.val(x);
  for (std::int64_t i = 0; i < out.numel(); ++i) out[i] += constant;
  const bool rg = tape.requires_grad(x);
  return tape.op(std::move(out), rg,
                 [x](Tape<T>& t, int self) { t.add_grad(x, t.grad(self)); });
}

// y = x @ W^T + b with x:[n,D], W:[O,D], b:[O].
template <typename T>
int linear(Tape<T>& tape, int x, int w, int b) {
  const Tensor<T>& xin = tape.val(x);
  const Tensor<T>& win = tape.val(w);
  const Tensor<T>& bin = tape.val(b);
  const std::int64_t n = xin.dim(0), d = xin.dim(1), o = win.dim(0);
  check(win.dim(1) == d && bin.numel() == o, ErrorKind::runtime, "linear: shape mismatch");
  Tensor<T> out({n, o});
  out.mat(n, o).noalias() = xin.mat(n, d) * win.mat(o, d).transpose();
  for (std::int64_t i = 0; i < n; ++i)
    for (std::int64_t j = 0; j < o; ++j) out.at(i, j) += bin[j];
  const bool rg = tape.requires_grad(x) || tape.requires_grad(w) || tape.requires_grad(b);
  return tape.op(std::move(out), rg, [x, w, b, n, d, o](Tape<T>& t, int self) {
    const Tensor<T>& g = t.grad(self);
    if (t.requires_grad(w))
      t.grad(w).mat(o, d).noalias() += g.mat(n, o).transpose() * t.val(x).mat(n, d);
    if (t.requires_grad(b)) {
      Tensor<T>& gb = t.grad(b);
      for (std::int64_t i = 0; i < n; ++i)
        for (std::int64_t j = 0; j < o; ++j) gb[j] += g.at(i, j);
    }
    if (t.requires_grad(x))
      t.grad(x).mat(n, d).noalias() += g.mat(n, o) * t.val(w).mat(o, d);
  });
}

// total += coeff * term for scalar nodes; used to combine per-layer losses.
template <typename T>
int add_scaled(Tape<T>& tape, const std::vector<std::pair<T, int>>& terms) {
  T total = T(0);
  bool rg = false;
  for (const auto& [coeff, id] : terms) {
    check(tape.val(id).numel() == 1, ErrorKind::runtime, "add_scaled expects scalars");
    total += coeff * tape.val(id)[0];
    rg = rg || tape.requires_grad(id);
  }
  return tape.op(Tensor<T>::scalar(total), rg, [terms](Tape<T>& t, int self) {
    const T g = t.grad(self)[0];
    for (const auto& [coeff, id] : terms)
      if (t.requires_grad(id)) t.grad(id)[0] += coeff * g;
  });
}

}  // namespace lookback::ops
