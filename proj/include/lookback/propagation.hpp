#pragma once

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>
#include <cmath>
#include <sstream>
#include <vector>

#include "lookback/tensor.hpp"

namespace lookback::prop {

// Support rows one-hot on the true label, query rows all zero. Node order is
// support first, then query.
template <typename T>
Tensor<T> initial_scores(const std::vector<int>& support_labels, std::int64_t n_query, int n_way) {
  const std::int64_t s = static_cast<std::int64_t>(support_labels.size());
  Tensor<T> p0 = Tensor<T>::zeros({s + n_query, n_way});
  for (std::int64_t j = 0; j < s; ++j) {
    const int lbl = support_labels[static_cast<std::size_t>(j)];
    check(lbl >= 0 && lbl < n_way, ErrorKind::runtime, "initial_scores: label out of range");
    p0.at(j, lbl) = T(1);
  }
  return p0;
}

template <typename T>
struct ClosedFormResult {
  Tensor<T> p_star;
  Eigen::LLT<typename Tensor<T>::MatrixRM> factor;  // of I - alpha*L, reusable
};

// P* = (I - alpha*L)^{-1} P0 via Cholesky solve. I - alpha*L is positive
// definite because the spectral radius of L is at most 1 and alpha < 1.
template <typename T>
ClosedFormResult<T> propagate_closed_form_factored(const Tensor<T>& l, const Tensor<T>& p0,
                                                   T alpha) {
  const std::int64_t n = l.dim(0);
  using Mat = typename Tensor<T>::MatrixRM;
  Mat a = Mat::Identity(n, n) - alpha * l.mat(n, n);
  ClosedFormResult<T> out{Tensor<T>({n, p0.dim(1)}), a.llt()};
  if (out.factor.info() != Eigen::Success) {
    Eigen::SelfAdjointEigenSolver<typename Tensor<T>::MatrixRM> es(a);
    std::ostringstream msg;
    msg << "propagation singular (condition estimate ";
    if (es.info() == Eigen::Success) {
      const T lo = es.eigenvalues().cwiseAbs().minCoeff();
      const T hi = es.eigenvalues().cwiseAbs().maxCoeff();
      msg << (lo > T(0) ? hi / lo : std::numeric_limits<T>::infinity());
    } else {
      msg << "unavailable";
    }
    msg << ")";
    fail_runtime(msg.str());
  }
  out.p_star.mat(n, p0.dim(1)) = out.factor.solve(p0.mat(n, p0.dim(1)));
  check(out.p_star.all_finite(), ErrorKind::runtime, "propagation singular (non-finite solve)");
  return out;
}

template <typename T>
Tensor<T> propagate_closed_form(const Tensor<T>& l, const Tensor<T>& p0, T alpha) {
  return propagate_closed_form_factored(l, p0, alpha).p_star;
}

// P(t+1) = alpha*L*P(t) + (1-alpha)*P0, applied exactly t times.
template <typename T>
Tensor<T> propagate_iterative(const Tensor<T>& l, const Tensor<T>& p0, T alpha, int t) {
  const std::int64_t n = l.dim(0), c = p0.dim(1);
  Tensor<T> p = p0;
  Tensor<T> next({n, c});
  for (int step = 0; step < t; ++step) {
    next.mat(n, c).noalias() = alpha * (l.mat(n, n) * p.mat(n, c));
    next.mat(n, c) += (T(1) - alpha) * p0.mat(n, c);
    std::swap(p, next);
  }
  return p;
}

// Row softmax, stabilized by subtracting each row's maximum.
template <typename T>
Tensor<T> softmax_rows(const Tensor<T>& p) {
  const std::int64_t n = p.dim(0), c = p.dim(1);
  Tensor<T> out({n, c});
  for (std::int64_t j = 0; j < n; ++j) {
    const T* row = p.data() + j * c;
    T* dst = out.data() + j * c;
    T hi = row[0];
    for (std::int64_t k = 1; k < c; ++k) hi = std::max(hi, row[k]);
    T sum = T(0);
    for (std::int64_t k = 0; k < c; ++k) {
      dst[k] = std::exp(row[k] - hi);
      sum += dst[k];
    }
    for (std::int64_t k = 0; k < c; ++k) dst[k] /= sum;
  }
  return out;
}

// Argmax over classes for query rows (rows >= n_support); ties break toward
// the lower class index.
template <typename T>
std::vector<int> predict_queries(const Tensor<T>& p_star, std::int64_t n_support) {
  const std::int64_t n = p_star.dim(0), c = p_star.dim(1);
  std::vector<int> labels;
  labels.reserve(static_cast<std::size_t>(n - n_support));
  for (std::int64_t j = n_support; j < n; ++j) {
    const T* row = p_star.data() + j * c;
    int best = 0;
    for (std::int64_t k = 1; k < c; ++k)
      if (row[k] > row[best]) best = static_cast<int>(k);
    labels.push_back(best);
  }
  return labels;
}

inline constexpr double kProbFloor = 1e-12;

// Unreduced sum of -log p(true class) over every node.
template <typename T>
T cross_entropy_sum(const Tensor<T>& probs, const std::vector<int>& labels) {
  const std::int64_t n = probs.dim(0), c = probs.dim(1);
  check(static_cast<std::int64_t>(labels.size()) == n, ErrorKind::runtime,
        "cross_entropy_sum: label count mismatch");
  T acc = T(0);
  for (std::int64_t j = 0; j < n; ++j) {
    const T p = probs.at(j, labels[static_cast<std::size_t>(j)]);
    acc -= std::log(std::max(p, static_cast<T>(kProbFloor)));
  }
  return acc;
}

}  // namespace lookback::prop
