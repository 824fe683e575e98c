#pragma once

#include <cmath>
#include <memory>

#include "lookback/autodiff.hpp"

namespace lookback::ops {

namespace detail {

// im2col for stride-1 convolution: buf is [C*kh*kw, oh*ow] for one image.
template <typename T>
void im2col(const T* x, std::int64_t c_in, std::int64_t h, std::int64_t w, std::int64_t kh,
            std::int64_t kw, std::int64_t pad, T* buf) {
  const std::int64_t oh = h + 2 * pad - kh + 1;
  const std::int64_t ow = w + 2 * pad - kw + 1;
  std::int64_t row = 0;
  for (std::int64_t c = 0; c < c_in; ++c) {
    const T* plane = x + c * h * w;
    for (std::int64_t ki = 0; ki < kh; ++ki) {
      for (std::int64_t kj = 0; kj < kw; ++kj, ++row) {
        T* out = buf + row * oh * ow;
        for (std::int64_t i = 0; i < oh; ++i) {
          const std::int64_t src_i = i + ki - pad;
          if (src_i < 0 || src_i >= h) {
            for (std::int64_t j = 0; j < ow; ++j) out[i * ow + j] = T(0);
            continue;
          }
          const T* src_row = plane + src_i * w;
          for (std::int64_t j = 0; j < ow; ++j) {
            const std::int64_t src_j = j + kj - pad;
            out[i * ow + j] = (src_j < 0 || src_j >= w) ? T(0) : src_row[src_j];
          }
        }
      }
    }
  }
}

template <typename T>
void col2im_accum(const T* buf, std::int64_t c_in, std::int64_t h, std::int64_t w, std::int64_t kh,
                  std::int64_t kw, std::int64_t pad, T* dx) {
  const std::int64_t oh = h + 2 * pad - kh + 1;
  const std::int64_t ow = w + 2 * pad - kw + 1;
  std::int64_t row = 0;
  for (std::int64_t c = 0; c < c_in; ++c) {
    T* plane = dx + c * h * w;
    for (std::int64_t ki = 0; ki < kh; ++ki) {
      for (std::int64_t kj = 0; kj < kw; ++kj, ++row) {
        const T* src = buf + row * oh * ow;
        for (std::int64_t i = 0; i < oh; ++i) {
          const std::int64_t dst_i = i + ki - pad;
          if (dst_i < 0 || dst_i >= h) continue;
          T* dst_row = plane + dst_i * w;
          for (std::int64_t j = 0; j < ow; ++j) {
            const std::int64_t dst_j = j + kj - pad;
            if (dst_j >= 0 && dst_j < w) dst_row[dst_j] += src[i * ow + j];
          }
        }
      }
    }
  }
}

}  // namespace detail

// Stride-1 convolution, x:[n,C,H,W], w:[F,C,kh,kw], b:[F] or -1 for no bias
// (convolutions feeding batch norm omit it: mean subtraction cancels a bias
// exactly, leaving a parameter with an identically zero gradient). The im2col
// buffer is rebuilt from the parent value during backward instead of saved.
template <typename T>
int conv2d(Tape<T>& tape, int x, int w, int b, std::int64_t pad) {
  const Tensor<T>& xin = tape.val(x);
  const Tensor<T>& win = tape.val(w);
  check(xin.rank() == 4 && win.rank() == 4, ErrorKind::runtime, "conv2d expects 4-d tensors");
  const std::int64_t n = xin.dim(0), c_in = xin.dim(1), h = xin.dim(2), wid = xin.dim(3);
  const std::int64_t f = win.dim(0), kh = win.dim(2), kw = win.dim(3);
  check(win.dim(1) == c_in, ErrorKind::runtime,
        "conv2d: input has " + std::to_string(c_in) + " channels, kernel expects " +
            std::to_string(win.dim(1)));
  const std::int64_t oh = h + 2 * pad - kh + 1;
  const std::int64_t ow = wid + 2 * pad - kw + 1;
  check(oh > 0 && ow > 0, ErrorKind::runtime, "conv2d: input too small for kernel");
  const std::int64_t k = c_in * kh * kw;

  Tensor<T> out({n, f, oh, ow});
  {
    Tensor<T> cols({k, oh * ow});
    for (std::int64_t img = 0; img < n; ++img) {
      detail::im2col(xin.data() + img * c_in * h * wid, c_in, h, wid, kh, kw, pad, cols.data());
      typename Tensor<T>::Map y(out.data() + img * f * oh * ow, f, oh * ow);
      y.noalias() = win.mat(f, k) * cols.mat(k, oh * ow);
    }
    if (b >= 0) {
      const Tensor<T>& bin = tape.val(b);
      for (std::int64_t img = 0; img < n; ++img)
        for (std::int64_t fc = 0; fc < f; ++fc) {
          T* plane = out.data() + (img * f + fc) * oh * ow;
          const T bias = bin[fc];
          for (std::int64_t i = 0; i < oh * ow; ++i) plane[i] += bias;
        }
    }
  }

  const bool rg = tape.requires_grad(x) || tape.requires_grad(w) ||
                  (b >= 0 && tape.requires_grad(b));
  return tape.op(std::move(out), rg,
                 [x, w, b, n, c_in, h, wid, f, kh, kw, pad, oh, ow, k](Tape<T>& t, int self) {
                   const Tensor<T>& g = t.grad(self);
                   const Tensor<T>& xin = t.val(x);
                   const Tensor<T>& win = t.val(w);
                   Tensor<T> cols({k, oh * ow});
                   Tensor<T> dcols({k, oh * ow});
                   const bool need_w = t.requires_grad(w);
                   const bool need_x = t.requires_grad(x);
                   const bool need_b = b >= 0 && t.requires_grad(b);
                   for (std::int64_t img = 0; img < n; ++img) {
                     typename Tensor<T>::ConstMap gy(g.data() + img * f * oh * ow, f, oh * ow);
                     if (need_w || need_x)
                       detail::im2col(xin.data() + img * c_in * h * wid, c_in, h, wid, kh, kw, pad,
                                      cols.data());
                     if (need_w) t.grad(w).mat(f, k).noalias() += gy * cols.mat(k, oh * ow).transpose();
                     if (need_x) {
                       dcols.mat(k, oh * ow).noalias() = win.mat(f, k).transpose() * gy;
                       detail::col2im_accum(dcols.data(), c_in, h, wid, kh, kw, pad,
                                            t.grad(x).data() + img * c_in * h * wid);
                     }
                     if (need_b) {
                       Tensor<T>& gb = t.grad(b);
                       for (std::int64_t fc = 0; fc < f; ++fc)
                         gb[fc] += gy.row(fc).sum();
                     }
                   }
                 });
}

// Per-channel batch normalization over [n,C,H,W]. In train mode the batch
// statistics normalize and the external running buffers are updated in place;
// in eval mode the running statistics normalize and nothing is mutated.
// Biased variance throughout.
template <typename T>
int batch_norm(Tape<T>& tape, int x, int gamma, int beta, Tensor<T>* running_mean,
               Tensor<T>* running_var, bool train, double momentum = 0.1, double eps = 1e-5) {
  const Tensor<T>& xin = tape.val(x);
  const std::int64_t n = xin.dim(0), c = xin.dim(1), h = xin.dim(2), w = xin.dim(3);
  const std::int64_t m = n * h * w;
  const std::int64_t plane = h * w;
  const Tensor<T>& ga = tape.val(gamma);
  const Tensor<T>& be = tape.val(beta);

  Tensor<T> mean({c}), invstd({c});
  if (train) {
    for (std::int64_t ch = 0; ch < c; ++ch) {
      double sum = 0.0, sq = 0.0;
      for (std::int64_t img = 0; img < n; ++img) {
        const T* p = xin.data() + (img * c + ch) * plane;
        for (std::int64_t i = 0; i < plane; ++i) {
          sum += static_cast<double>(p[i]);
          sq += static_cast<double>(p[i]) * static_cast<double>(p[i]);
        }
      }
      const double mu = sum / static_cast<double>(m);
      const double var = sq / static_cast<double>(m) - mu * mu;
      mean[ch] = static_cast<T>(mu);
      invstd[ch] = static_cast<T>(1.0 / std::sqrt(std::max(var, 0.0) + eps));
      (*running_mean)[ch] =
          static_cast<T>((1.0 - momentum) * static_cast<double>((*running_mean)[ch]) + momentum * mu);
      (*running_var)[ch] = static_cast<T>((1.0 - momentum) * static_cast<double>((*running_var)[ch]) +
                                          momentum * std::max(var, 0.0));
    }
  } else {
    for (std::int64_t ch = 0; ch < c; ++ch) {
      mean[ch] = (*running_mean)[ch];
      invstd[ch] = static_cast<T>(1.0 / std::sqrt(static_cast<double>((*running_var)[ch]) + eps));
    }
  }

  Tensor<T> out(xin.shape());
  for (std::int64_t img = 0; img < n; ++img)
    for (std::int64_t ch = 0; ch < c; ++ch) {
      const T* src = xin.data() + (img * c + ch) * plane;
      T* dst = out.data() + (img * c + ch) * plane;
      const T mu = mean[ch], is = invstd[ch], g = ga[ch], bb = be[ch];
      for (std::int64_t i = 0; i < plane; ++i) dst[i] = (src[i] - mu) * is * g + bb;
    }

  const bool rg = tape.requires_grad(x) || tape.requires_grad(gamma) || tape.requires_grad(beta);
  // Saved per-channel statistics are tiny; the normalized input is recomputed
  // in backward from the parent value.
  auto saved = std::make_shared<std::pair<Tensor<T>, Tensor<T>>>(std::move(mean), std::move(invstd));
  return tape.op(std::move(out), rg,
                 [x, gamma, beta, saved, n, c, plane, m, train](Tape<T>& t, int self) {
                   const Tensor<T>& g = t.grad(self);
                   const Tensor<T>& xin = t.val(x);
                   const Tensor<T>& ga = t.val(gamma);
                   const Tensor<T>& mean = saved->first;
                   const Tensor<T>& invstd = saved->second;
                   const bool need_x = t.requires_grad(x);
                   for (std::int64_t ch = 0; ch < c; ++ch) {
                     const T mu = mean[ch], is = invstd[ch];
                     double sum_dy = 0.0, sum_dy_xhat = 0.0;
                     for (std::int64_t img = 0; img < n; ++img) {
                       const T* xp = xin.data() + (img * c + ch) * plane;
                       const T* gp = g.data() + (img * c + ch) * plane;
                       for (std::int64_t i = 0; i < plane; ++i) {
                         sum_dy += static_cast<double>(gp[i]);
                         sum_dy_xhat += static_cast<double>(gp[i]) *
                                        static_cast<double>((xp[i] - mu) * is);
                       }
                     }
                     if (t.requires_grad(gamma)) t.grad(gamma)[ch] += static_cast<T>(sum_dy_xhat);
                     if (t.requires_grad(beta)) t.grad(beta)[ch] += static_cast<T>(sum_dy);
                     if (!need_x) continue;
                     const double gch = static_cast<double>(ga[ch]);
                     if (train) {
                       // dx = (gamma*invstd/m) * (m*dy - sum(dy) - xhat*sum(dy*xhat))
                       const double scale = gch * static_cast<double>(is) / static_cast<double>(m);
                       for (std::int64_t img = 0; img < n; ++img) {
                         const T* xp = xin.data() + (img * c + ch) * plane;
                         const T* gp = g.data() + (img * c + ch) * plane;
                         T* dxp = t.grad(x).data() + (img * c + ch) * plane;
                         for (std::int64_t i = 0; i < plane; ++i) {
                           const double xhat = static_cast<double>((xp[i] - mu) * is);
                           dxp[i] += static_cast<T>(
                               scale * (static_cast<double>(m) * static_cast<double>(gp[i]) -
                                        sum_dy - xhat * sum_dy_xhat));
                         }
                       }
                     } else {
                       const double scale = gch * static_cast<double>(is);
                       for (std::int64_t img = 0; img < n; ++img) {
                         const T* gp = g.data() + (img * c + ch) * plane;
                         T* dxp = t.grad(x).data() + (img * c + ch) * plane;
                         for (std::int64_t i = 0; i < plane; ++i)
                           dxp[i] += static_cast<T>(scale * static_cast<double>(gp[i]));
                       }
                     }
                   }
                 });
}

// 2x2 max pooling with stride 2. Output dims are floor(h/2) clamped to at
// least 1; when a dimension is 1 the window is clipped to the single row or
// column, so miniature inputs remain valid through deep blocks.
template <typename T>
int max_pool2(Tape<T>& tape, int x) {
  const Tensor<T>& xin = tape.val(x);
  const std::int64_t n = xin.dim(0), c = xin.dim(1), h = xin.dim(2), w = xin.dim(3);
  const std::int64_t oh = std::max<std::int64_t>(h / 2, 1);
  const std::int64_t ow = std::max<std::int64_t>(w / 2, 1);
  Tensor<T> out({n, c, oh, ow});
  auto argmax = std::make_shared<std::vector<std::int32_t>>(
      static_cast<std::size_t>(n * c * oh * ow));
  std::int64_t oidx = 0;
  for (std::int64_t img = 0; img < n; ++img)
    for (std::int64_t ch = 0; ch < c; ++ch) {
      const T* plane = xin.data() + (img * c + ch) * h * w;
      for (std::int64_t i = 0; i < oh; ++i)
        for (std::int64_t j = 0; j < ow; ++j, ++oidx) {
          const std::int64_t i0 = 2 * i, j0 = 2 * j;
          const std::int64_t i1 = std::min(i0 + 2, h), j1 = std::min(j0 + 2, w);
          T best = plane[i0 * w + j0];
          std::int64_t best_at = i0 * w + j0;
          for (std::int64_t ii = i0; ii < i1; ++ii)
            for (std::int64_t jj = j0; jj < j1; ++jj)
              if (plane[ii * w + jj] > best) {
                best = plane[ii * w + jj];
                best_at = ii * w + jj;
              }
          out[oidx] = best;
          (*argmax)[static_cast<std::size_t>(oidx)] = static_cast<std::int32_t>(best_at);
        }
    }
  const bool rg = tape.requires_grad(x);
  return tape.op(std::move(out), rg, [x, argmax, n, c, h, w, oh, ow](Tape<T>& t, int self) {
    const Tensor<T>& g = t.grad(self);
    Tensor<T>& gx = t.grad(x);
    std::int64_t oidx = 0;
    for (std::int64_t img = 0; img < n; ++img)
      for (std::int64_t ch = 0; ch < c; ++ch) {
        T* plane = gx.data() + (img * c + ch) * h * w;
        for (std::int64_t i = 0; i < oh * ow; ++i, ++oidx)
          plane[(*argmax)[static_cast<std::size_t>(oidx)]] += g[oidx];
      }
  });
}

}  // namespace lookback::ops
