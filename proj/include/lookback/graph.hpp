#pragma once

#include <algorithm>
#include <cmath>
#include <numeric>

#include "lookback/tensor.hpp"

namespace lookback::graph {

// z_j = emb_j / sigma_j, row-wise.
template <typename T>
Tensor<T> scale_rows(const Tensor<T>& emb, const Tensor<T>& sigma) {
  const std::int64_t n = emb.dim(0), d = emb.dim(1);
  check(sigma.numel() == n, ErrorKind::runtime, "scale_rows: sigma length mismatch");
  Tensor<T> z({n, d});
  for (std::int64_t j = 0; j < n; ++j) {
    check(std::isfinite(static_cast<double>(sigma[j])) && sigma[j] > T(0), ErrorKind::runtime,
          "scale_rows: sigma must be strictly positive");
    const T inv = T(1) / sigma[j];
    const T* src = emb.data() + j * d;
    T* dst = z.data() + j * d;
    for (std::int64_t i = 0; i < d; ++i) dst[i] = src[i] * inv;
  }
  return z;
}

// S_jk = exp(-0.5 * ||z_j - z_k||^2), unit diagonal, exactly symmetric.
template <typename T>
Tensor<T> similarity_from_scaled(const Tensor<T>& z) {
  const std::int64_t n = z.dim(0), d = z.dim(1);
  Tensor<T> gram({n, n});
  gram.mat(n, n).noalias() = z.mat(n, d) * z.mat(n, d).transpose();
  std::vector<T> sq(static_cast<std::size_t>(n));
  for (std::int64_t j = 0; j < n; ++j) sq[static_cast<std::size_t>(j)] = gram.at(j, j);
  Tensor<T> s({n, n});
  for (std::int64_t j = 0; j < n; ++j) {
    s.at(j, j) = T(1);
    for (std::int64_t k = j + 1; k < n; ++k) {
      const T d2 = std::max(sq[static_cast<std::size_t>(j)] + sq[static_cast<std::size_t>(k)] -
                                T(2) * gram.at(j, k),
                            T(0));
      const T v = std::exp(T(-0.5) * d2);
      s.at(j, k) = v;
      s.at(k, j) = v;
    }
  }
  check(s.all_finite(), ErrorKind::runtime, "similarity overflow");
  return s;
}

template <typename T>
Tensor<T> pairwise_similarity(const Tensor<T>& emb, const Tensor<T>& sigma) {
  check(emb.all_finite(), ErrorKind::runtime, "pairwise_similarity: non-finite embedding");
  return similarity_from_scaled(scale_rows(emb, sigma));
}

// Keep-mask for m-max row sparsification followed by symmetrization by
// averaging: entries are 0, 1/2 or 1, the mask is exactly symmetric, and
// W = mask .* S. Ties in the top-m selection break toward the lower index.
template <typename T>
Tensor<T> sparsify_mask(const Tensor<T>& s, int m) {
  const std::int64_t n = s.dim(0);
  check(m >= 1, ErrorKind::config, "sparsify: m must be >= 1");
  check(m < n, ErrorKind::infeasible, "m too large for episode");
  Tensor<T> keep = Tensor<T>::zeros({n, n});
  std::vector<std::int64_t> idx(static_cast<std::size_t>(n));
  for (std::int64_t j = 0; j < n; ++j) {
    idx.clear();
    for (std::int64_t k = 0; k < n; ++k)
      if (k != j) idx.push_back(k);
    const T* row = s.data() + j * n;
    std::partial_sort(idx.begin(), idx.begin() + m, idx.end(),
                      [row](std::int64_t a, std::int64_t b) {
                        return row[a] != row[b] ? row[a] > row[b] : a < b;
                      });
    for (int t = 0; t < m; ++t) keep.at(j, idx[static_cast<std::size_t>(t)]) = T(1);
  }
  Tensor<T> mask({n, n});
  for (std::int64_t j = 0; j < n; ++j) {
    mask.at(j, j) = T(0);
    for (std::int64_t k = j + 1; k < n; ++k) {
      const T v = (keep.at(j, k) + keep.at(k, j)) / T(2);
      mask.at(j, k) = v;
      mask.at(k, j) = v;
    }
  }
  return mask;
}

template <typename T>
Tensor<T> sparsify(const Tensor<T>& s, int m) {
  const std::int64_t n = s.dim(0);
  Tensor<T> mask = sparsify_mask(s, m);
  Tensor<T> w({n, n});
  for (std::int64_t i = 0; i < n * n; ++i) w[i] = mask[i] * s[i];
  return w;
}

template <typename T>
Tensor<T> degrees(const Tensor<T>& w) {
  const std::int64_t n = w.dim(0);
  Tensor<T> d({n});
  for (std::int64_t j = 0; j < n; ++j) {
    T acc = T(0);
    const T* row = w.data() + j * n;
    for (std::int64_t k = 0; k < n; ++k) acc += row[k];
    d[j] = acc;
  }
  return d;
}

// Degrees at or below this floor count as isolated. A row this close to full
// underflow has no effective neighbors anyway, and its 1/sqrt(degree) factors
// sit near the representable limit: r_j * r_k overflows in normalize() before
// the tiny affinity entry can cancel it, and the gradient carries a degree^-1
// factor on top of that. One such outlier node would poison every parameter.
template <typename T>
constexpr T degree_floor() {
  return static_cast<T>(sizeof(T) == 4 ? 1e-18 : 1e-150);
}

// L = D^{-1/2} W D^{-1/2}; rows and columns of isolated nodes stay zero.
template <typename T>
Tensor<T> normalize(const Tensor<T>& w) {
  const std::int64_t n = w.dim(0);
  Tensor<T> d = degrees(w);
  std::vector<T> r(static_cast<std::size_t>(n));
  for (std::int64_t j = 0; j < n; ++j)
    r[static_cast<std::size_t>(j)] = d[j] > degree_floor<T>() ? T(1) / std::sqrt(d[j]) : T(0);
  Tensor<T> l({n, n});
  for (std::int64_t j = 0; j < n; ++j) {
    l.at(j, j) = (r[static_cast<std::size_t>(j)] * r[static_cast<std::size_t>(j)]) * w.at(j, j);
    for (std::int64_t k = j + 1; k < n; ++k) {
      const T v = (r[static_cast<std::size_t>(j)] * r[static_cast<std::size_t>(k)]) * w.at(j, k);
      l.at(j, k) = v;
      l.at(k, j) = v;
    }
  }
  return l;
}

}  // namespace lookback::graph
