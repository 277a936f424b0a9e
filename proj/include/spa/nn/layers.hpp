// Copyright 2026 The SPA Harness Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Forward/backward primitives for the layers of the small CNN. Activations
// are NCHW; dense layers treat everything after the batch axis as features.

#ifndef SPA_NN_LAYERS_HPP
#define SPA_NN_LAYERS_HPP

#include <Eigen/Core>

#include <cmath>
#include <cstddef>
#include <limits>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "spa/tensor.hpp"

namespace spa::nn {

template <typename T>
using RowMatrix = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
template <typename T>
using MatrixMap = Eigen::Map<RowMatrix<T>>;
template <typename T>
using ConstMatrixMap = Eigen::Map<const RowMatrix<T>>;

namespace detail {

inline void require(bool ok, const std::string& what) {
  if (!ok) throw std::invalid_argument(what);
}

// Reductions with a fixed 16-lane accumulation order. The result does not
// depend on pointer alignment (Eigen's own reductions peel to an aligned
// boundary first), so equal inputs give equal bits wherever they live.
inline constexpr std::size_t kLanes = 16;

template <typename T, typename F>
double lane_sum(std::size_t n, F&& term) {
  T acc[kLanes] = {};
  std::size_t i = 0;
  for (; i + kLanes <= n; i += kLanes)
    for (std::size_t j = 0; j < kLanes; ++j) acc[j] += term(i + j);
  for (std::size_t j = 0; i + j < n; ++j) acc[j] += term(i + j);
  double total = 0.0;
  for (std::size_t j = 0; j < kLanes; ++j) total += static_cast<double>(acc[j]);
  return total;
}

// Unrolls 3x3 / pad-1 windows of one CHW image into a (C*9) x (H*W) matrix.
template <typename T>
void im2col3x3(const T* img, std::size_t c, std::size_t h, std::size_t w, T* col) {
  const std::size_t hw = h * w;
  for (std::size_t ch = 0; ch < c; ++ch) {
    const T* plane = img + ch * hw;
    for (std::size_t ky = 0; ky < 3; ++ky) {
      for (std::size_t kx = 0; kx < 3; ++kx) {
        T* row = col + ((ch * 3 + ky) * 3 + kx) * hw;
        // valid output columns [x0, x1) read source column x + kx - 1
        const std::size_t x0 = kx == 0 ? 1 : 0, x1 = kx == 2 ? w - 1 : w;
        for (std::size_t y = 0; y < h; ++y) {
          T* out = row + y * w;
          const std::size_t sy = y + ky;  // source row + 1
          if (sy == 0 || sy > h) {
            std::fill(out, out + w, T{0});
            continue;
          }
          const T* src = plane + (sy - 1) * w + kx;  // src[x - 1] is column x + kx - 1
          if (x0 == 1) out[0] = T{0};
          std::copy(src + x0 - 1, src + x1 - 1, out + x0);
          if (x1 == w - 1) out[w - 1] = T{0};
        }
      }
    }
  }
}

template <typename T>
void col2im3x3(const T* col, std::size_t c, std::size_t h, std::size_t w, T* img) {
  const std::size_t hw = h * w;
  for (std::size_t ch = 0; ch < c; ++ch) {
    T* plane = img + ch * hw;
    for (std::size_t ky = 0; ky < 3; ++ky) {
      for (std::size_t kx = 0; kx < 3; ++kx) {
        const T* row = col + ((ch * 3 + ky) * 3 + kx) * hw;
        const std::size_t x0 = kx == 0 ? 1 : 0, x1 = kx == 2 ? w - 1 : w;
        for (std::size_t y = 0; y < h; ++y) {
          const std::size_t sy = y + ky;
          if (sy == 0 || sy > h) continue;
          T* dst = plane + (sy - 1) * w + kx;
          const T* in = row + y * w;
          for (std::size_t x = x0; x < x1; ++x) dst[x - 1] += in[x];
        }
      }
    }
  }
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Convolution: 3x3 kernel, stride 1, zero padding 1. Kernel shape [O, C, 3, 3].

template <typename T>
void check_conv_args(const Tensor<T>& input, const Tensor<T>& kernel,
                     const Tensor<T>& bias) {
  detail::require(input.rank() == 4, "conv2d: input must be NCHW, got " +
                                         shape_str(input.shape()));
  detail::require(kernel.rank() == 4 && kernel.dim(2) == 3 && kernel.dim(3) == 3,
                  "conv2d: kernel must be [O,C,3,3], got " + shape_str(kernel.shape()));
  detail::require(kernel.dim(1) == input.dim(1),
                  "conv2d: input has " + std::to_string(input.dim(1)) +
                      " channels but kernel expects " + std::to_string(kernel.dim(1)));
  detail::require(bias.size() == kernel.dim(0), "conv2d: bias length mismatch");
}

template <typename T>
Tensor<T> conv2d_forward(const Tensor<T>& input, const Tensor<T>& kernel,
                         const Tensor<T>& bias) {
  check_conv_args(input, kernel, bias);
  const std::size_t n = input.dim(0), c = input.dim(1), h = input.dim(2),
                    w = input.dim(3), o = kernel.dim(0), hw = h * w;
  Tensor<T> out({n, o, h, w});
  RowMatrix<T> col(c * 9, hw);
  ConstMatrixMap<T> k(kernel.data(), o, c * 9);
  for (std::size_t s = 0; s < n; ++s) {
    detail::im2col3x3(input.data() + s * c * hw, c, h, w, col.data());
    MatrixMap<T> y(out.data() + s * o * hw, o, hw);
    y.noalias() = k * col;
    for (std::size_t oc = 0; oc < o; ++oc) y.row(oc).array() += bias[oc];
  }
  return out;
}

template <typename T>
struct ConvGrads {
  Tensor<T> input;
  Tensor<T> kernel;
  Tensor<T> bias;
};

template <typename T>
ConvGrads<T> conv2d_backward(const Tensor<T>& input, const Tensor<T>& kernel,
                             const Tensor<T>& grad_out, bool need_input_grad = true) {
  const std::size_t n = input.dim(0), c = input.dim(1), h = input.dim(2),
                    w = input.dim(3), o = kernel.dim(0), hw = h * w;
  ConvGrads<T> g{need_input_grad ? Tensor<T>(input.shape()) : Tensor<T>{},
                 Tensor<T>(kernel.shape()), Tensor<T>({o})};
  RowMatrix<T> col(c * 9, hw);
  RowMatrix<T> dcol(c * 9, hw);
  ConstMatrixMap<T> k(kernel.data(), o, c * 9);
  MatrixMap<T> dk(g.kernel.data(), o, c * 9);
  for (std::size_t s = 0; s < n; ++s) {
    ConstMatrixMap<T> dy(grad_out.data() + s * o * hw, o, hw);
    detail::im2col3x3(input.data() + s * c * hw, c, h, w, col.data());
    dk.noalias() += dy * col.transpose();
    for (std::size_t oc = 0; oc < o; ++oc) {
      const T* row = grad_out.data() + (s * o + oc) * hw;
      g.bias[oc] += static_cast<T>(detail::lane_sum<T>(hw, [&](std::size_t i) { return row[i]; }));
    }
    if (need_input_grad) {
      dcol.noalias() = k.transpose() * dy;
      detail::col2im3x3(dcol.data(), c, h, w, g.input.data() + s * c * hw);
    }
  }
  return g;
}

// ---------------------------------------------------------------------------
// 2x2 max pooling, stride 2. Ties resolve to the first element in row-major
// window order.

template <typename T>
struct PoolResult {
  Tensor<T> output;
  std::vector<std::size_t> argmax;  // flat input index per output element
};

template <typename T>
PoolResult<T> maxpool2x2_forward(const Tensor<T>& input) {
  detail::require(input.rank() == 4, "maxpool: input must be NCHW");
  const std::size_t n = input.dim(0), c = input.dim(1), h = input.dim(2),
                    w = input.dim(3);
  detail::require(h % 2 == 0 && w % 2 == 0,
                  "maxpool: spatial dims must be even, got " + shape_str(input.shape()));
  const std::size_t oh = h / 2, ow = w / 2;
  PoolResult<T> r{Tensor<T>({n, c, oh, ow}), std::vector<std::size_t>(n * c * oh * ow)};
  std::size_t out_i = 0;
  for (std::size_t plane = 0; plane < n * c; ++plane) {
    const std::size_t base = plane * h * w;
    for (std::size_t y = 0; y < oh; ++y) {
      for (std::size_t x = 0; x < ow; ++x, ++out_i) {
        std::size_t best = base + (2 * y) * w + 2 * x;
        for (std::size_t dy = 0; dy < 2; ++dy)
          for (std::size_t dx = 0; dx < 2; ++dx) {
            const std::size_t idx = base + (2 * y + dy) * w + 2 * x + dx;
            if (input[idx] > input[best]) best = idx;
          }
        r.output[out_i] = input[best];
        r.argmax[out_i] = best;
      }
    }
  }
  return r;
}

template <typename T>
Tensor<T> maxpool2x2_backward(const Shape& input_shape,
                              const std::vector<std::size_t>& argmax,
                              const Tensor<T>& grad_out) {
  Tensor<T> g(input_shape);
  for (std::size_t i = 0; i < argmax.size(); ++i) g[argmax[i]] += grad_out[i];
  return g;
}

// ---------------------------------------------------------------------------
// Batch normalization over (N, H, W) per channel.

struct BatchNormConstants {
  double eps = 1e-5;
  double momentum = 0.9;  // running = momentum * running + (1 - momentum) * batch
};

template <typename T>
struct BatchNormCache {
  Tensor<T> normalized;          // x-hat, same shape as input
  std::vector<double> mean;      // per channel batch mean
  std::vector<double> variance;  // per channel biased batch variance
  std::vector<double> inv_std;
};

enum class NormStats { batch, running };

namespace detail {

template <typename T>
Tensor<T> batchnorm_apply(const Tensor<T>& input, const Tensor<T>& gamma,
                          const Tensor<T>& beta, std::vector<double> mean,
                          std::vector<double> var, BatchNormCache<T>* cache,
                          BatchNormConstants k) {
  const std::size_t n = input.dim(0), c = input.dim(1);
  const std::size_t spatial = input.size() / (n * c);
  std::vector<double> inv_std(c);
  for (std::size_t ch = 0; ch < c; ++ch) inv_std[ch] = 1.0 / std::sqrt(var[ch] + k.eps);

  Tensor<T> out(input.shape());
  Tensor<T> xhat = cache ? Tensor<T>(input.shape()) : Tensor<T>{};
  for (std::size_t s = 0; s < n; ++s)
    for (std::size_t ch = 0; ch < c; ++ch) {
      const std::size_t off = (s * c + ch) * spatial;
      const T m = static_cast<T>(mean[ch]);
      const T is = static_cast<T>(inv_std[ch]);
      const T* x = input.data() + off;
      T* y = out.data() + off;
      const T g = gamma[ch], b = beta[ch];
      if (cache) {
        T* xh = xhat.data() + off;
        for (std::size_t i = 0; i < spatial; ++i) {
          xh[i] = (x[i] - m) * is;
          y[i] = g * xh[i] + b;
        }
      } else {
        for (std::size_t i = 0; i < spatial; ++i) y[i] = g * ((x[i] - m) * is) + b;
      }
    }
  if (cache) *cache = {std::move(xhat), std::move(mean), std::move(var), std::move(inv_std)};
  return out;
}

template <typename T>
void check_batchnorm_args(const Tensor<T>& input, const Tensor<T>& gamma,
                          const Tensor<T>& beta) {
  require(input.rank() >= 2, "batchnorm: input needs a channel axis");
  require(input.dim(0) > 0, "batchnorm: zero batch size");
  require(gamma.size() == input.dim(1) && beta.size() == input.dim(1),
          "batchnorm: gamma/beta length " + std::to_string(gamma.size()) +
              " does not match channel count " + std::to_string(input.dim(1)));
}

}  // namespace detail

/// Per-channel (mean, biased variance) over the N, H, W axes.
template <typename T>
std::pair<std::vector<double>, std::vector<double>> batch_statistics(const Tensor<T>& input) {
  const std::size_t n = input.dim(0), c = input.dim(1);
  const std::size_t spatial = input.size() / (n * c);
  const double count = static_cast<double>(n * spatial);
  // Per-plane partial sums in T, totals in double.
  std::vector<double> mean(c, 0.0), var(c, 0.0);
  for (std::size_t s = 0; s < n; ++s)
    for (std::size_t ch = 0; ch < c; ++ch) {
      const T* p = input.data() + (s * c + ch) * spatial;
      mean[ch] += detail::lane_sum<T>(spatial, [&](std::size_t i) { return p[i]; });
    }
  for (auto& m : mean) m /= count;
  for (std::size_t s = 0; s < n; ++s)
    for (std::size_t ch = 0; ch < c; ++ch) {
      const T* p = input.data() + (s * c + ch) * spatial;
      const T m = static_cast<T>(mean[ch]);
      var[ch] += detail::lane_sum<T>(spatial, [&](std::size_t i) { return (p[i] - m) * (p[i] - m); });
    }
  for (auto& v : var) v /= count;
  return {std::move(mean), std::move(var)};
}

/// Normalizes by batch statistics (NormStats::batch) or by the supplied
/// running statistics. Running stats are never modified here.
template <typename T>
Tensor<T> batchnorm_forward(const Tensor<T>& input, const Tensor<T>& gamma,
                            const Tensor<T>& beta, const Tensor<T>& running_mean,
                            const Tensor<T>& running_var, NormStats stats,
                            BatchNormCache<T>* cache = nullptr,
                            BatchNormConstants k = {}) {
  detail::check_batchnorm_args(input, gamma, beta);
  if (stats == NormStats::batch) {
    auto [mean, var] = batch_statistics(input);
    return detail::batchnorm_apply(input, gamma, beta, std::move(mean), std::move(var), cache, k);
  }
  const std::size_t c = input.dim(1);
  std::vector<double> mean(c), var(c);
  for (std::size_t ch = 0; ch < c; ++ch) {
    mean[ch] = running_mean[ch];
    var[ch] = running_var[ch];
  }
  return detail::batchnorm_apply(input, gamma, beta, std::move(mean), std::move(var), cache, k);
}

/// Normalizes with externally supplied statistics, e.g. those recorded by an
/// earlier batch-statistics pass.
template <typename T>
Tensor<T> batchnorm_forward_frozen(const Tensor<T>& input, const Tensor<T>& gamma,
                                   const Tensor<T>& beta, const std::vector<double>& mean,
                                   const std::vector<double>& var,
                                   BatchNormConstants k = {}) {
  detail::check_batchnorm_args(input, gamma, beta);
  return detail::batchnorm_apply<T>(input, gamma, beta, mean, var, nullptr, k);
}

/// Folds one batch's statistics into running stats. The running variance uses
/// the unbiased estimate when more than one value per channel was seen.
template <typename T>
void batchnorm_update_running(const BatchNormCache<T>& cache, std::size_t values_per_channel,
                              Tensor<T>& running_mean, Tensor<T>& running_var,
                              BatchNormConstants k = {}) {
  const double bessel = values_per_channel > 1
                            ? static_cast<double>(values_per_channel) /
                                  static_cast<double>(values_per_channel - 1)
                            : 1.0;
  for (std::size_t ch = 0; ch < cache.mean.size(); ++ch) {
    running_mean[ch] = static_cast<T>(k.momentum * running_mean[ch] +
                                      (1.0 - k.momentum) * cache.mean[ch]);
    running_var[ch] = static_cast<T>(k.momentum * running_var[ch] +
                                     (1.0 - k.momentum) * cache.variance[ch] * bessel);
  }
}

template <typename T>
struct BatchNormGrads {
  Tensor<T> input;
  Tensor<T> gamma;
  Tensor<T> beta;
};

/// Backward pass for batch-statistics normalization.
template <typename T>
BatchNormGrads<T> batchnorm_backward(const BatchNormCache<T>& cache, const Tensor<T>& gamma,
                                     const Tensor<T>& grad_out) {
  const std::size_t n = grad_out.dim(0), c = grad_out.dim(1);
  const std::size_t spatial = grad_out.size() / (n * c);
  const double count = static_cast<double>(n * spatial);
  std::vector<double> sum_dy(c, 0.0), sum_dy_xhat(c, 0.0);
  for (std::size_t s = 0; s < n; ++s)
    for (std::size_t ch = 0; ch < c; ++ch) {
      const std::size_t off = (s * c + ch) * spatial;
      const T* dy = grad_out.data() + off;
      const T* xh = cache.normalized.data() + off;
      sum_dy[ch] += detail::lane_sum<T>(spatial, [&](std::size_t i) { return dy[i]; });
      sum_dy_xhat[ch] += detail::lane_sum<T>(spatial, [&](std::size_t i) { return dy[i] * xh[i]; });
    }
  BatchNormGrads<T> g{Tensor<T>(grad_out.shape()), Tensor<T>({c}), Tensor<T>({c})};
  for (std::size_t ch = 0; ch < c; ++ch) {
    g.gamma[ch] = static_cast<T>(sum_dy_xhat[ch]);
    g.beta[ch] = static_cast<T>(sum_dy[ch]);
  }
  for (std::size_t s = 0; s < n; ++s)
    for (std::size_t ch = 0; ch < c; ++ch) {
      const std::size_t off = (s * c + ch) * spatial;
      const double scale = gamma[ch] * cache.inv_std[ch] / count;
      const double mdy = sum_dy[ch], mdyx = sum_dy_xhat[ch];
      const T* dy = grad_out.data() + off;
      const T* xh = cache.normalized.data() + off;
      T* dx = g.input.data() + off;
      const T sc = static_cast<T>(scale), cn = static_cast<T>(count), a = static_cast<T>(mdy),
              b = static_cast<T>(mdyx);
      for (std::size_t i = 0; i < spatial; ++i) dx[i] = sc * (cn * dy[i] - a - xh[i] * b);
    }
  return g;
}

// ---------------------------------------------------------------------------
// Dense: output = input . W + b with W of shape [in, out].

template <typename T>
Tensor<T> dense_forward(const Tensor<T>& input, const Tensor<T>& weights,
                        const Tensor<T>& bias) {
  detail::require(input.rank() >= 2 && weights.rank() == 2, "dense: bad ranks");
  const std::size_t n = input.dim(0), in = input.size() / n, out = weights.dim(1);
  detail::require(in == weights.dim(0),
                  "dense: input has " + std::to_string(in) + " features, weights expect " +
                      std::to_string(weights.dim(0)));
  detail::require(bias.size() == out, "dense: bias length mismatch");
  Tensor<T> y({n, out});
  ConstMatrixMap<T> x(input.data(), n, in);
  ConstMatrixMap<T> wm(weights.data(), in, out);
  MatrixMap<T> ym(y.data(), n, out);
  ym.noalias() = x * wm;
  for (std::size_t r = 0; r < n; ++r)
    for (std::size_t j = 0; j < out; ++j) ym(r, j) += bias[j];
  return y;
}

template <typename T>
struct DenseGrads {
  Tensor<T> input;
  Tensor<T> weights;
  Tensor<T> bias;
};

template <typename T>
DenseGrads<T> dense_backward(const Tensor<T>& input, const Tensor<T>& weights,
                             const Tensor<T>& grad_out, bool need_input_grad = true) {
  const std::size_t n = input.dim(0), in = input.size() / n, out = weights.dim(1);
  DenseGrads<T> g{need_input_grad ? Tensor<T>(input.shape()) : Tensor<T>{},
                  Tensor<T>(weights.shape()), Tensor<T>({out})};
  ConstMatrixMap<T> x(input.data(), n, in);
  ConstMatrixMap<T> wm(weights.data(), in, out);
  ConstMatrixMap<T> dy(grad_out.data(), n, out);
  MatrixMap<T>(g.weights.data(), in, out).noalias() = x.transpose() * dy;
  for (std::size_t r = 0; r < n; ++r)
    for (std::size_t j = 0; j < out; ++j) g.bias[j] += dy(r, j);
  if (need_input_grad)
    MatrixMap<T>(g.input.data(), n, in).noalias() = dy * wm.transpose();
  return g;
}

// ---------------------------------------------------------------------------

template <typename T>
Tensor<T> relu(const Tensor<T>& input) {
  Tensor<T> out = input;
  for (auto& v : out.values()) v = v > T{0} ? v : T{0};
  return out;
}

template <typename T>
Tensor<T> relu_backward(const Tensor<T>& input, const Tensor<T>& grad_out) {
  Tensor<T> g = grad_out;
  for (std::size_t i = 0; i < g.size(); ++i)
    if (!(input[i] > T{0})) g[i] = T{0};
  return g;
}

// ---------------------------------------------------------------------------
// Softmax cross-entropy against soft labels, mean reduction.

template <typename T>
struct LossResult {
  std::vector<T> per_sample;
  T mean = 0;
  Tensor<T> grad_logits;  // d(mean loss)/d(logits)
  Tensor<T> probabilities;
};

template <typename T>
LossResult<T> softmax_cross_entropy(const Tensor<T>& logits, const Tensor<T>& labels) {
  detail::require(logits.rank() == 2 && logits.shape() == labels.shape(),
                  "softmax_cross_entropy: logits " + shape_str(logits.shape()) +
                      " and labels " + shape_str(labels.shape()) + " must be equal N x K");
  const std::size_t n = logits.dim(0), k = logits.dim(1);
  LossResult<T> r{std::vector<T>(n), T{0}, Tensor<T>(logits.shape()),
                  Tensor<T>(logits.shape())};
  double total = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const T* z = logits.data() + i * k;
    const T* y = labels.data() + i * k;
    double label_sum = 0.0;
    T zmax = -std::numeric_limits<T>::infinity();
    for (std::size_t j = 0; j < k; ++j) {
      if (std::isnan(z[j]))
        throw std::invalid_argument("softmax_cross_entropy: NaN logit in row " +
                                    std::to_string(i));
      detail::require(y[j] >= T{0}, "softmax_cross_entropy: negative label in row " +
                                        std::to_string(i));
      label_sum += y[j];
      zmax = std::max(zmax, z[j]);
    }
    if (std::abs(label_sum - 1.0) > 1e-5)
      throw std::invalid_argument("softmax_cross_entropy: label row " + std::to_string(i) +
                                  " sums to " + std::to_string(label_sum));
    double denom = 0.0;
    for (std::size_t j = 0; j < k; ++j) denom += std::exp(static_cast<double>(z[j] - zmax));
    const double log_denom = std::log(denom);
    double loss = 0.0;
    for (std::size_t j = 0; j < k; ++j) {
      const double log_p = static_cast<double>(z[j] - zmax) - log_denom;
      const double p = std::exp(log_p);
      r.probabilities[i * k + j] = static_cast<T>(p);
      if (y[j] > T{0}) loss -= y[j] * log_p;
      r.grad_logits[i * k + j] = static_cast<T>((p - y[j]) / static_cast<double>(n));
    }
    loss = std::max(loss, 0.0);
    r.per_sample[i] = static_cast<T>(loss);
    total += loss;
  }
  r.mean = static_cast<T>(total / static_cast<double>(n));
  return r;
}

}  // namespace spa::nn

#endif  // SPA_NN_LAYERS_HPP
