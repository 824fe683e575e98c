#pragma once

#include <memory>
#include <vector>

#include "lookback/autodiff.hpp"
#include "lookback/graph.hpp"
#include "lookback/propagation.hpp"

namespace lookback::ops {

// z_j = emb_j / sigma_j with emb [n,D], sigma [n].
template <typename T>
int row_scale(Tape<T>& tape, int emb, int sigma) {
  const Tensor<T>& e = tape.val(emb);
  const Tensor<T>& s = tape.val(sigma);
  Tensor<T> z = graph::scale_rows(e, s);
  const bool rg = tape.requires_grad(emb) || tape.requires_grad(sigma);
  return tape.op(std::move(z), rg, [emb, sigma](Tape<T>& t, int self) {
    const Tensor<T>& g = t.grad(self);
    const Tensor<T>& e = t.val(emb);
    const Tensor<T>& s = t.val(sigma);
    const std::int64_t n = e.dim(0), d = e.dim(1);
    for (std::int64_t j = 0; j < n; ++j) {
      const T inv = T(1) / s[j];
      const T* gz = g.data() + j * d;
      if (t.requires_grad(emb)) {
        T* ge = t.grad(emb).data() + j * d;
        for (std::int64_t i = 0; i < d; ++i) ge[i] += gz[i] * inv;
      }
      if (t.requires_grad(sigma)) {
        const T* ev = e.data() + j * d;
        T acc = T(0);
        for (std::int64_t i = 0; i < d; ++i) acc += gz[i] * ev[i];
        t.grad(sigma)[j] -= acc * inv * inv;
      }
    }
  });
}

// S_jk = exp(-0.5*||z_j - z_k||^2) on the scaled embedding.
template <typename T>
int pairwise_similarity(Tape<T>& tape, int z) {
  Tensor<T> s = graph::similarity_from_scaled(tape.val(z));
  const bool rg = tape.requires_grad(z);
  return tape.op(std::move(s), rg, [z](Tape<T>& t, int self) {
    // dz_j += sum_k (dS_jk + dS_kj) * S_jk * (z_k - z_j)
    const Tensor<T>& g = t.grad(self);
    const Tensor<T>& s = t.val(self);
    const Tensor<T>& zv = t.val(z);
    const std::int64_t n = zv.dim(0), d = zv.dim(1);
    Tensor<T> m({n, n});
    for (std::int64_t j = 0; j < n; ++j)
      for (std::int64_t k = 0; k < n; ++k)
        m.at(j, k) = (g.at(j, k) + g.at(k, j)) * s.at(j, k);
    Tensor<T> mz({n, d});
    mz.mat(n, d).noalias() = m.mat(n, n) * zv.mat(n, d);
    Tensor<T>& gz = t.grad(z);
    for (std::int64_t j = 0; j < n; ++j) {
      T rowsum = T(0);
      for (std::int64_t k = 0; k < n; ++k) rowsum += m.at(j, k);
      const T* zr = zv.data() + j * d;
      const T* mzr = mz.data() + j * d;
      T* dst = gz.data() + j * d;
      for (std::int64_t i = 0; i < d; ++i) dst[i] += mzr[i] - rowsum * zr[i];
    }
  });
}

// W = mask .* S with the m-max keep mask treated as a constant of the
// backward pass (the selection is piecewise constant in S).
template <typename T>
int sparsify(Tape<T>& tape, int s, int m) {
  const Tensor<T>& sv = tape.val(s);
  auto mask = std::make_shared<Tensor<T>>(graph::sparsify_mask(sv, m));
  const std::int64_t n = sv.dim(0);
  Tensor<T> w({n, n});
  for (std::int64_t i = 0; i < n * n; ++i) w[i] = (*mask)[i] * sv[i];
  const bool rg = tape.requires_grad(s);
  return tape.op(std::move(w), rg, [s, mask](Tape<T>& t, int self) {
    const Tensor<T>& g = t.grad(self);
    Tensor<T>& gs = t.grad(s);
    const std::int64_t total = g.numel();
    for (std::int64_t i = 0; i < total; ++i) gs[i] += (*mask)[i] * g[i];
  });
}

// L = D^{-1/2} W D^{-1/2}, D from W's row sums.
template <typename T>
int normalize(Tape<T>& tape, int w) {
  Tensor<T> l = graph::normalize(tape.val(w));
  const bool rg = tape.requires_grad(w);
  return tape.op(std::move(l), rg, [w](Tape<T>& t, int self) {
    const Tensor<T>& g = t.grad(self);
    const Tensor<T>& wv = t.val(w);
    const std::int64_t n = wv.dim(0);
    Tensor<T> d = graph::degrees(wv);
    std::vector<T> r(static_cast<std::size_t>(n));
    for (std::int64_t j = 0; j < n; ++j)
      r[static_cast<std::size_t>(j)] =
          d[j] > graph::degree_floor<T>() ? T(1) / std::sqrt(d[j]) : T(0);
    Tensor<T>& gw = t.grad(w);
    for (std::int64_t j = 0; j < n; ++j) {
      // through r_j: dr_j = sum_k (dL_jk + dL_kj) W_jk r_k, then
      // dd_j = -0.5 r_j^3 dr_j lands on every entry of row j.
      T dr = T(0);
      for (std::int64_t k = 0; k < n; ++k)
        dr += (g.at(j, k) + g.at(k, j)) * wv.at(j, k) * r[static_cast<std::size_t>(k)];
      const T rj = r[static_cast<std::size_t>(j)];
      const T dd = rj > T(0) ? T(-0.5) * rj * rj * rj * dr : T(0);
      for (std::int64_t k = 0; k < n; ++k)
        gw.at(j, k) += rj * r[static_cast<std::size_t>(k)] * g.at(j, k) + dd;
    }
  });
}

// P* = (I - alpha*L)^{-1} P0; P0 enters as a constant. The Cholesky factor
// from the forward solve is reused for the adjoint solve:
// dL = alpha * (A^{-1} dP*) P*^T.
template <typename T>
int propagate(Tape<T>& tape, int l, const Tensor<T>& p0, T alpha) {
  auto res = std::make_shared<prop::ClosedFormResult<T>>(
      prop::propagate_closed_form_factored(tape.val(l), p0, alpha));
  Tensor<T> value = res->p_star;
  const bool rg = tape.requires_grad(l);
  return tape.op(std::move(value), rg, [l, res, alpha](Tape<T>& t, int self) {
    const Tensor<T>& g = t.grad(self);
    const Tensor<T>& p = t.val(self);
    const std::int64_t n = p.dim(0), c = p.dim(1);
    Tensor<T> ag({n, c});
    ag.mat(n, c) = res->factor.solve(g.mat(n, c));
    t.grad(l).mat(n, n).noalias() += alpha * (ag.mat(n, c) * p.mat(n, c).transpose());
  });
}

template <typename T>
int softmax_rows(Tape<T>& tape, int p) {
  Tensor<T> y = prop::softmax_rows(tape.val(p));
  const bool rg = tape.requires_grad(p);
  return tape.op(std::move(y), rg, [p](Tape<T>& t, int self) {
    const Tensor<T>& g = t.grad(self);
    const Tensor<T>& y = t.val(self);
    Tensor<T>& gp = t.grad(p);
    const std::int64_t n = y.dim(0), c = y.dim(1);
    for (std::int64_t j = 0; j < n; ++j) {
      const T* gr = g.data() + j * c;
      const T* yr = y.data() + j * c;
      T dot = T(0);
      for (std::int64_t k = 0; k < c; ++k) dot += gr[k] * yr[k];
      T* dst = gp.data() + j * c;
      for (std::int64_t k = 0; k < c; ++k) dst[k] += (gr[k] - dot) * yr[k];
    }
  });
}

// Unreduced sum of -log(max(p_true, floor)) over every node; the clamp kills
// the gradient wherever it is active.
template <typename T>
int cross_entropy_sum(Tape<T>& tape, int probs, std::vector<int> labels) {
  const Tensor<T>& pv = tape.val(probs);
  Tensor<T> value = Tensor<T>::scalar(prop::cross_entropy_sum(pv, labels));
  const bool rg = tape.requires_grad(probs);
  auto lbl = std::make_shared<std::vector<int>>(std::move(labels));
  return tape.op(std::move(value), rg, [probs, lbl](Tape<T>& t, int self) {
    const T g = t.grad(self)[0];
    const Tensor<T>& pv = t.val(probs);
    Tensor<T>& gp = t.grad(probs);
    const std::int64_t n = pv.dim(0), c = pv.dim(1);
    for (std::int64_t j = 0; j < n; ++j) {
      const int k = (*lbl)[static_cast<std::size_t>(j)];
      const T p = pv.at(j, k);
      if (p > static_cast<T>(prop::kProbFloor)) gp.data()[j * c + k] -= g / p;
    }
  });
}

}  // namespace lookback::ops
