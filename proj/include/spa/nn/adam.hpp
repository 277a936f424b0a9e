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

#ifndef SPA_NN_ADAM_HPP
#define SPA_NN_ADAM_HPP

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "spa/nn/model.hpp"

namespace spa::nn {

struct AdamConfig {
  double lr = 0.001;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

template <typename T>
struct AdamState {
  AdamConfig config;
  std::uint64_t step_count = 0;
  std::vector<Tensor<T>> m;
  std::vector<Tensor<T>> v;
};

template <typename T>
AdamState<T> make_adam_state(const Model<T>& model, AdamConfig config = {}) {
  AdamState<T> s{config, 0, zero_gradients(model), zero_gradients(model)};
  return s;
}

/// One bias-corrected Adam update over all trainable tensors.
template <typename T>
void adam_step(Model<T>& model, const GradientsOf<T>& grads, AdamState<T>& state) {
  if (grads.size() != state.m.size())
    throw std::invalid_argument("adam_step: gradient count " + std::to_string(grads.size()) +
                                " does not match parameter count " +
                                std::to_string(state.m.size()));
  for (std::size_t i = 0; i < grads.size(); ++i) {
    if (grads[i].shape() != state.m[i].shape())
      throw std::invalid_argument("adam_step: gradient " + std::to_string(i) + " has shape " +
                                  shape_str(grads[i].shape()) + ", expected " +
                                  shape_str(state.m[i].shape()));
    if (!grads[i].all_finite())
      throw std::invalid_argument("adam_step: non-finite gradient in tensor " +
                                  std::to_string(i));
  }

  const auto& c = state.config;
  state.step_count += 1;
  const double t = static_cast<double>(state.step_count);
  const double correct1 = 1.0 - std::pow(c.beta1, t);
  const double correct2 = 1.0 - std::pow(c.beta2, t);

  std::size_t slot = 0;
  for_each_trainable(model, [&](const std::string&, Tensor<T>& param) {
    const auto& g = grads[slot];
    auto& m = state.m[slot];
    auto& v = state.v[slot];
    ++slot;
    for (std::size_t k = 0; k < param.size(); ++k) {
      const double gk = g[k];
      const double mk = c.beta1 * m[k] + (1.0 - c.beta1) * gk;
      const double vk = c.beta2 * v[k] + (1.0 - c.beta2) * gk * gk;
      m[k] = static_cast<T>(mk);
      v[k] = static_cast<T>(vk);
      const double step = c.lr * (mk / correct1) / (std::sqrt(vk / correct2) + c.eps);
      param[k] = static_cast<T>(param[k] - step);
    }
  });
}

template <typename T>
std::uint64_t state_hash(const AdamState<T>& s) {
  std::uint64_t h = 0xcbf29ce484222325ull ^ s.step_count;
  auto mix = [&](const std::vector<Tensor<T>>& ts) {
    for (const auto& t : ts) {
      const auto* b = reinterpret_cast<const unsigned char*>(t.data());
      for (std::size_t i = 0; i < t.size() * sizeof(T); ++i) h = (h ^ b[i]) * 0x100000001b3ull;
    }
  };
  mix(s.m);
  mix(s.v);
  return h;
}

}  // namespace spa::nn

#endif  // SPA_NN_ADAM_HPP
