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

#ifndef SPA_SAMPLE_HPP
#define SPA_SAMPLE_HPP

#include <algorithm>
#include <cstddef>
#include <stdexcept>
#include <vector>

#include "spa/tensor.hpp"

namespace spa {

/// One image (C, H, W) with its label distribution over K classes.
struct Sample {
  Tensor<float> image;
  std::vector<float> label;

  std::size_t channels() const { return image.dim(0); }
  std::size_t height() const { return image.dim(1); }
  std::size_t width() const { return image.dim(2); }
  float& px(std::size_t c, std::size_t y, std::size_t x) {
    return image[(c * height() + y) * width() + x];
  }
  float px(std::size_t c, std::size_t y, std::size_t x) const {
    return image[(c * height() + y) * width() + x];
  }

  friend bool operator==(const Sample&, const Sample&) = default;
};

/// Images N x C x H x W and soft labels N x K, stored contiguously so the
/// network can consume them without copies.
struct Batch {
  Tensor<float> images;
  Tensor<float> labels;

  std::size_t size() const { return images.empty() ? 0 : images.dim(0); }
  std::size_t num_classes() const { return labels.dim(1); }
  Shape sample_shape() const { return {images.dim(1), images.dim(2), images.dim(3)}; }

  Sample sample(std::size_t i) const {
    const std::size_t px = images.size() / size();
    const std::size_t k = num_classes();
    Sample s{Tensor<float>(sample_shape()), std::vector<float>(k)};
    std::copy_n(images.data() + i * px, px, s.image.data());
    std::copy_n(labels.data() + i * k, k, s.label.data());
    return s;
  }

  void set_sample(std::size_t i, const Sample& s) {
    const std::size_t px = images.size() / size();
    const std::size_t k = num_classes();
    if (s.image.size() != px || s.label.size() != k)
      throw std::invalid_argument("Batch::set_sample: sample shape mismatch");
    std::copy_n(s.image.data(), px, images.data() + i * px);
    std::copy_n(s.label.data(), k, labels.data() + i * k);
  }

  friend bool operator==(const Batch&, const Batch&) = default;
};

inline Batch make_batch(const std::vector<Sample>& samples) {
  if (samples.empty()) throw std::invalid_argument("make_batch: no samples");
  const Shape& s = samples.front().image.shape();
  const std::size_t k = samples.front().label.size();
  Batch b{Tensor<float>({samples.size(), s[0], s[1], s[2]}),
          Tensor<float>({samples.size(), k})};
  for (std::size_t i = 0; i < samples.size(); ++i) b.set_sample(i, samples[i]);
  return b;
}

inline std::vector<float> one_hot(std::size_t cls, std::size_t k) {
  std::vector<float> v(k, 0.0f);
  v.at(cls) = 1.0f;
  return v;
}

}  // namespace spa

#endif  // SPA_SAMPLE_HPP
