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

#ifndef SPA_NN_MODEL_HPP
#define SPA_NN_MODEL_HPP

#include <array>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <functional>
#include <stdexcept>
#include <string>
#include <type_traits>
#include <variant>
#include <vector>

#include "spa/nn/layers.hpp"
#include "spa/rng.hpp"
#include "spa/tensor.hpp"

namespace spa::nn {

template <typename T>
struct Conv2d {
  std::string name;
  Tensor<T> weight;  // [out, in, 3, 3]
  Tensor<T> bias;    // [out]
};

template <typename T>
struct BatchNorm {
  std::string name;
  Tensor<T> gamma;
  Tensor<T> beta;
  Tensor<T> running_mean;
  Tensor<T> running_var;
};

template <typename T>
struct Dense {
  std::string name;
  Tensor<T> weight;  // [in, out]
  Tensor<T> bias;    // [out]
};

struct Relu {};
struct MaxPool2x2 {};

template <typename T>
using Layer = std::variant<Conv2d<T>, BatchNorm<T>, Relu, MaxPool2x2, Dense<T>>;

/// Parameters plus the layer order that interprets them. Softmax is folded
/// into the loss, so the last layer emits logits.
template <typename T>
struct Model {
  std::string arch_id;
  Shape input_shape;  // C, H, W
  std::size_t num_classes = 0;
  std::vector<Layer<T>> layers;
};

template <typename T>
using GradientsOf = std::vector<Tensor<T>>;

template <typename T, typename Fn>
void for_each_trainable(Model<T>& model, Fn&& fn) {
  for (auto& layer : model.layers) {
    std::visit(
        [&](auto& l) {
          using L = std::decay_t<decltype(l)>;
          if constexpr (std::is_same_v<L, Conv2d<T>> || std::is_same_v<L, Dense<T>>) {
            fn(l.name + ".weight", l.weight);
            fn(l.name + ".bias", l.bias);
          } else if constexpr (std::is_same_v<L, BatchNorm<T>>) {
            fn(l.name + ".gamma", l.gamma);
            fn(l.name + ".beta", l.beta);
          }
        },
        layer);
  }
}

template <typename T, typename Fn>
void for_each_trainable(const Model<T>& model, Fn&& fn) {
  for_each_trainable(const_cast<Model<T>&>(model),
                     [&](const std::string& name, Tensor<T>& t) {
                       fn(name, static_cast<const Tensor<T>&>(t));
                     });
}

/// Every persistent tensor, trainable or not, in a stable order.
template <typename T, typename Fn>
void for_each_state_tensor(const Model<T>& model, Fn&& fn) {
  for (const auto& layer : model.layers) {
    std::visit(
        [&](const auto& l) {
          using L = std::decay_t<decltype(l)>;
          if constexpr (std::is_same_v<L, Conv2d<T>> || std::is_same_v<L, Dense<T>>) {
            fn(l.name + ".weight", l.weight);
            fn(l.name + ".bias", l.bias);
          } else if constexpr (std::is_same_v<L, BatchNorm<T>>) {
            fn(l.name + ".gamma", l.gamma);
            fn(l.name + ".beta", l.beta);
            fn(l.name + ".running_mean", l.running_mean);
            fn(l.name + ".running_var", l.running_var);
          }
        },
        layer);
  }
}

template <typename T>
GradientsOf<T> zero_gradients(const Model<T>& model) {
  GradientsOf<T> g;
  for_each_trainable(model, [&](const std::string&, const Tensor<T>& t) {
    g.emplace_back(t.shape());
  });
  return g;
}

/// FNV-1a over all state tensors (names, shapes, raw bytes).
template <typename T>
std::uint64_t state_hash(const Model<T>& model) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  auto mix = [&](const void* p, std::size_t n) {
    const auto* b = static_cast<const unsigned char*>(p);
    for (std::size_t i = 0; i < n; ++i) h = (h ^ b[i]) * 0x100000001b3ull;
  };
  for_each_state_tensor(model, [&](const std::string& name, const Tensor<T>& t) {
    mix(name.data(), name.size());
    for (auto d : t.shape()) mix(&d, sizeof d);
    mix(t.data(), t.size() * sizeof(T));
  });
  return h;
}

// ---------------------------------------------------------------------------
// Builders

/// Glorot-uniform fill: U(-a, a), a = sqrt(6 / (fan_in + fan_out)).
template <typename T>
void glorot_uniform(Tensor<T>& t, std::size_t fan_in, std::size_t fan_out, RngStream& rng) {
  const double a = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
  for (auto& v : t.values()) v = static_cast<T>(rng.uniform(-a, a));
}

struct ChannelPlan {
  std::array<std::size_t, 4> channels{32, 32, 64, 64};
};

template <typename T>
Model<T> build_small_cnn(const Shape& input_shape, std::size_t num_classes,
                         std::uint64_t seed, ChannelPlan plan = {}) {
  if (input_shape.size() != 3)
    throw std::invalid_argument("build_small_cnn: input shape must be C,H,W");
  if (input_shape[1] % 4 != 0 || input_shape[2] % 4 != 0 || input_shape[1] == 0 ||
      input_shape[2] == 0)
    throw std::invalid_argument("build_small_cnn: spatial dims " + shape_str(input_shape) +
                                " must be divisible by 4");
  if (num_classes < 2)
    throw std::invalid_argument("build_small_cnn: num_classes must be >= 2");

  Model<T> m;
  const auto& ch = plan.channels;
  m.arch_id = "small_cnn/" + std::to_string(ch[0]) + "-" + std::to_string(ch[1]) + "-" +
              std::to_string(ch[2]) + "-" + std::to_string(ch[3]);
  m.input_shape = input_shape;
  m.num_classes = num_classes;
  RngStream rng = RngStream::derive(seed, StreamId::init);

  std::size_t in_c = input_shape[0];
  auto conv_block = [&](std::size_t idx, std::size_t out_c) {
    const std::string id = std::to_string(idx);
    Conv2d<T> conv{"conv" + id, Tensor<T>({out_c, in_c, 3, 3}), Tensor<T>({out_c})};
    glorot_uniform(conv.weight, in_c * 9, out_c * 9, rng);
    m.layers.emplace_back(std::move(conv));
    m.layers.emplace_back(BatchNorm<T>{"bn" + id, Tensor<T>({out_c}, T{1}),
                                       Tensor<T>({out_c}), Tensor<T>({out_c}),
                                       Tensor<T>({out_c}, T{1})});
    m.layers.emplace_back(Relu{});
    in_c = out_c;
  };
  conv_block(1, ch[0]);
  conv_block(2, ch[1]);
  m.layers.emplace_back(MaxPool2x2{});
  conv_block(3, ch[2]);
  conv_block(4, ch[3]);
  m.layers.emplace_back(MaxPool2x2{});

  const std::size_t features = in_c * (input_shape[1] / 4) * (input_shape[2] / 4);
  Dense<T> fc{"fc", Tensor<T>({features, num_classes}), Tensor<T>({num_classes})};
  glorot_uniform(fc.weight, features, num_classes, rng);
  m.layers.emplace_back(std::move(fc));
  return m;
}

/// 784 -> 64 -> 10 style MLP without convolutions or normalization.
template <typename T>
Model<T> build_tiny_mlp(const Shape& input_shape, std::size_t num_classes,
                        std::uint64_t seed, std::size_t hidden = 64) {
  if (num_classes < 2) throw std::invalid_argument("build_tiny_mlp: num_classes must be >= 2");
  Model<T> m;
  m.arch_id = "tiny_mlp/" + std::to_string(hidden);
  m.input_shape = input_shape;
  m.num_classes = num_classes;
  RngStream rng = RngStream::derive(seed, StreamId::init);
  const std::size_t in = shape_size(input_shape);
  Dense<T> fc1{"fc1", Tensor<T>({in, hidden}), Tensor<T>({hidden})};
  glorot_uniform(fc1.weight, in, hidden, rng);
  Dense<T> fc2{"fc2", Tensor<T>({hidden, num_classes}), Tensor<T>({num_classes})};
  glorot_uniform(fc2.weight, hidden, num_classes, rng);
  m.layers.emplace_back(std::move(fc1));
  m.layers.emplace_back(Relu{});
  m.layers.emplace_back(std::move(fc2));
  return m;
}

// ---------------------------------------------------------------------------
// Forward / backward

enum class Mode {
  train,  // batch statistics; caches kept for backward
  probe,  // batch statistics; nothing cached beyond the statistics themselves
  eval,   // running statistics
};

template <typename T>
struct LayerCache {
  Tensor<T> input;
  Shape input_shape;
  BatchNormCache<T> bn;
  std::vector<std::size_t> argmax;
};

template <typename T>
struct ForwardTrace {
  Mode mode = Mode::eval;
  std::vector<LayerCache<T>> layers;
  Tensor<T> logits;
};

/// Per-BN-layer (mean, variance) pairs, in layer order, as observed by a
/// batch-statistics forward pass.
using NormSnapshot = std::vector<std::pair<std::vector<double>, std::vector<double>>>;

template <typename T>
NormSnapshot norm_snapshot(const ForwardTrace<T>& trace) {
  NormSnapshot s;
  for (const auto& c : trace.layers)
    if (!c.bn.mean.empty()) s.emplace_back(c.bn.mean, c.bn.variance);
  return s;
}

namespace detail {

template <typename T>
void check_input(const Model<T>& model, const Tensor<T>& input) {
  if (input.rank() != 4 || input.dim(0) == 0)
    throw std::invalid_argument("forward: input must be N,C,H,W");
  const Shape per_sample(input.shape().begin() + 1, input.shape().end());
  if (per_sample != model.input_shape)
    throw std::invalid_argument("forward: sample shape " + shape_str(per_sample) +
                                " does not match model input " +
                                shape_str(model.input_shape));
}

}  // namespace detail

template <typename T>
ForwardTrace<T> forward(const Model<T>& model, const Tensor<T>& input, Mode mode) {
  detail::check_input(model, input);
  ForwardTrace<T> trace;
  trace.mode = mode;
  trace.layers.resize(model.layers.size());
  const bool keep = mode == Mode::train;
  Tensor<T> x = input;
  for (std::size_t i = 0; i < model.layers.size(); ++i) {
    auto& cache = trace.layers[i];
    x = std::visit(
        [&](const auto& l) -> Tensor<T> {
          using L = std::decay_t<decltype(l)>;
          if constexpr (std::is_same_v<L, Conv2d<T>>) {
            auto y = conv2d_forward(x, l.weight, l.bias);
            if (keep) cache.input = std::move(x);
            return y;
          } else if constexpr (std::is_same_v<L, BatchNorm<T>>) {
            if (mode == Mode::eval)
              return batchnorm_forward(x, l.gamma, l.beta, l.running_mean, l.running_var,
                                       NormStats::running);
            auto y = batchnorm_forward(x, l.gamma, l.beta, l.running_mean, l.running_var,
                                       NormStats::batch, &cache.bn);
            if (!keep) cache.bn.normalized = Tensor<T>{};
            return y;
          } else if constexpr (std::is_same_v<L, Relu>) {
            auto y = relu(x);
            if (keep) cache.input = std::move(x);
            return y;
          } else if constexpr (std::is_same_v<L, MaxPool2x2>) {
            auto r = maxpool2x2_forward(x);
            if (keep) {
              cache.argmax = std::move(r.argmax);
              cache.input_shape = x.shape();
            }
            return std::move(r.output);
          } else {
            auto y = dense_forward(x, l.weight, l.bias);
            if (keep) cache.input = std::move(x);
            return y;
          }
        },
        model.layers[i]);
  }
  trace.logits = std::move(x);
  return trace;
}

/// Forward pass that normalizes with previously observed batch statistics.
/// Each sample's output then depends only on that sample.
template <typename T>
Tensor<T> forward_frozen(const Model<T>& model, const Tensor<T>& input,
                         const NormSnapshot& stats) {
  detail::check_input(model, input);
  std::size_t bn_index = 0;
  Tensor<T> x = input;
  for (const auto& layer : model.layers) {
    x = std::visit(
        [&](const auto& l) -> Tensor<T> {
          using L = std::decay_t<decltype(l)>;
          if constexpr (std::is_same_v<L, Conv2d<T>>) {
            return conv2d_forward(x, l.weight, l.bias);
          } else if constexpr (std::is_same_v<L, BatchNorm<T>>) {
            if (bn_index >= stats.size())
              throw std::invalid_argument("forward_frozen: snapshot has too few layers");
            const auto& [mean, var] = stats[bn_index++];
            return batchnorm_forward_frozen(x, l.gamma, l.beta, mean, var);
          } else if constexpr (std::is_same_v<L, Relu>) {
            return relu(x);
          } else if constexpr (std::is_same_v<L, MaxPool2x2>) {
            return std::move(maxpool2x2_forward(x).output);
          } else {
            return dense_forward(x, l.weight, l.bias);
          }
        },
        layer);
  }
  return x;
}

/// Reverse-mode gradients of the loss whose logit gradient is `grad_logits`.
/// Gradients come back in for_each_trainable order.
template <typename T>
GradientsOf<T> backward(const Model<T>& model, const ForwardTrace<T>& trace,
                        const Tensor<T>& grad_logits) {
  if (trace.mode != Mode::train || trace.layers.size() != model.layers.size())
    throw std::invalid_argument("backward: trace does not come from a train-mode forward "
                                "pass of this model");
  if (grad_logits.shape() != trace.logits.shape())
    throw std::invalid_argument("backward: grad_logits shape " +
                                shape_str(grad_logits.shape()) + " != logits shape " +
                                shape_str(trace.logits.shape()));
  GradientsOf<T> grads = zero_gradients(model);
  std::size_t slot = grads.size();
  Tensor<T> g = grad_logits;
  for (std::size_t i = model.layers.size(); i-- > 0;) {
    const auto& cache = trace.layers[i];
    const bool need_input = i > 0;
    g = std::visit(
        [&](const auto& l) -> Tensor<T> {
          using L = std::decay_t<decltype(l)>;
          if constexpr (std::is_same_v<L, Conv2d<T>>) {
            auto r = conv2d_backward(cache.input, l.weight, g, need_input);
            grads[--slot] = std::move(r.bias);
            grads[--slot] = std::move(r.kernel);
            return std::move(r.input);
          } else if constexpr (std::is_same_v<L, BatchNorm<T>>) {
            auto r = batchnorm_backward(cache.bn, l.gamma, g);
            grads[--slot] = std::move(r.beta);
            grads[--slot] = std::move(r.gamma);
            return std::move(r.input);
          } else if constexpr (std::is_same_v<L, Relu>) {
            return relu_backward(cache.input, g);
          } else if constexpr (std::is_same_v<L, MaxPool2x2>) {
            return maxpool2x2_backward(cache.input_shape, cache.argmax, g);
          } else {
            auto r = dense_backward(cache.input, l.weight, g, need_input);
            grads[--slot] = std::move(r.bias);
            grads[--slot] = std::move(r.weights);
            return std::move(r.input);
          }
        },
        model.layers[i]);
  }
  return grads;
}

/// Advances every batch-norm layer's running statistics from a train trace.
template <typename T>
void commit_running_stats(Model<T>& model, const ForwardTrace<T>& trace) {
  for (std::size_t i = 0; i < model.layers.size(); ++i) {
    if (auto* bn = std::get_if<BatchNorm<T>>(&model.layers[i])) {
      const auto& cache = trace.layers.at(i).bn;
      const std::size_t per_channel =
          cache.normalized.empty() ? 0 : cache.normalized.size() / bn->gamma.size();
      batchnorm_update_running(cache, per_channel, bn->running_mean, bn->running_var);
    }
  }
}

/// Converts parameters (and running stats) to another precision.
template <typename U, typename T>
Model<U> model_cast(const Model<T>& m) {
  Model<U> out{m.arch_id, m.input_shape, m.num_classes, {}};
  for (const auto& layer : m.layers) {
    std::visit(
        [&](const auto& l) {
          using L = std::decay_t<decltype(l)>;
          if constexpr (std::is_same_v<L, Conv2d<T>>)
            out.layers.emplace_back(
                Conv2d<U>{l.name, l.weight.template cast<U>(), l.bias.template cast<U>()});
          else if constexpr (std::is_same_v<L, Dense<T>>)
            out.layers.emplace_back(
                Dense<U>{l.name, l.weight.template cast<U>(), l.bias.template cast<U>()});
          else if constexpr (std::is_same_v<L, BatchNorm<T>>)
            out.layers.emplace_back(BatchNorm<U>{
                l.name, l.gamma.template cast<U>(), l.beta.template cast<U>(),
                l.running_mean.template cast<U>(), l.running_var.template cast<U>()});
          else
            out.layers.emplace_back(l);
        },
        layer);
  }
  return out;
}

}  // namespace spa::nn

#endif  // SPA_NN_MODEL_HPP
