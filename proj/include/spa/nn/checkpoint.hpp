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

// Checkpoint file layout (all integers little-endian u32):
//
//   "SPA1" | version | tensor count | { name length | name bytes | rank |
//   dims... | f32 payload } per tensor

#ifndef SPA_NN_CHECKPOINT_HPP
#define SPA_NN_CHECKPOINT_HPP

#include <array>
#include <bit>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include "spa/nn/model.hpp"

namespace spa::nn {

inline constexpr std::array<char, 4> kCheckpointMagic{'S', 'P', 'A', '1'};
inline constexpr std::uint32_t kCheckpointVersion = 1;

struct NamedTensor {
  std::string name;
  Tensor<float> tensor;
};

namespace detail {

inline void put_u32(std::string& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
}

inline void put_f32(std::string& out, float f) {
  put_u32(out, std::bit_cast<std::uint32_t>(f));
}

class ByteReader {
 public:
  ByteReader(const std::string& bytes, std::string path) : b_(bytes), path_(std::move(path)) {}

  std::uint32_t u32() {
    need(4);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i)
      v |= static_cast<std::uint32_t>(static_cast<unsigned char>(b_[pos_ + i])) << (8 * i);
    pos_ += 4;
    return v;
  }
  float f32() { return std::bit_cast<float>(u32()); }
  std::string str(std::size_t n) {
    need(n);
    std::string s = b_.substr(pos_, n);
    pos_ += n;
    return s;
  }
  std::size_t pos() const { return pos_; }
  bool done() const { return pos_ == b_.size(); }
  [[noreturn]] void fail(const std::string& what) const {
    throw std::runtime_error(path_ + ": " + what + " at byte offset " + std::to_string(pos_));
  }

 private:
  void need(std::size_t n) const {
    if (b_.size() - pos_ < n) fail("truncated checkpoint");
  }
  const std::string& b_;
  std::string path_;
  std::size_t pos_ = 0;
};

}  // namespace detail

inline std::string encode_checkpoint(const std::vector<NamedTensor>& tensors) {
  std::string out(kCheckpointMagic.begin(), kCheckpointMagic.end());
  detail::put_u32(out, kCheckpointVersion);
  detail::put_u32(out, static_cast<std::uint32_t>(tensors.size()));
  for (const auto& nt : tensors) {
    detail::put_u32(out, static_cast<std::uint32_t>(nt.name.size()));
    out += nt.name;
    detail::put_u32(out, static_cast<std::uint32_t>(nt.tensor.rank()));
    for (auto d : nt.tensor.shape()) detail::put_u32(out, static_cast<std::uint32_t>(d));
    for (float f : nt.tensor.values()) detail::put_f32(out, f);
  }
  return out;
}

inline std::vector<NamedTensor> decode_checkpoint(const std::string& bytes,
                                                  const std::string& origin = "<memory>") {
  detail::ByteReader r(bytes, origin);
  if (r.str(4) != std::string(kCheckpointMagic.begin(), kCheckpointMagic.end())) {
    detail::ByteReader(bytes, origin).fail("bad checkpoint magic");
  }
  const auto version = r.u32();
  if (version != kCheckpointVersion)
    r.fail("unsupported checkpoint version " + std::to_string(version));
  const auto count = r.u32();
  std::vector<NamedTensor> out;
  out.reserve(count);
  for (std::uint32_t i = 0; i < count; ++i) {
    NamedTensor nt;
    nt.name = r.str(r.u32());
    const auto rank = r.u32();
    Shape shape(rank);
    for (auto& d : shape) {
      d = r.u32();
      if (d == 0) r.fail("zero dimension in tensor '" + nt.name + "'");
    }
    std::vector<float> data(shape_size(shape));
    for (auto& f : data) f = r.f32();
    nt.tensor = Tensor<float>(std::move(shape), std::move(data));
    out.push_back(std::move(nt));
  }
  if (!r.done()) r.fail("trailing bytes after last tensor");
  return out;
}

inline void write_checkpoint(const std::filesystem::path& path,
                             const std::vector<NamedTensor>& tensors) {
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw std::runtime_error("cannot open checkpoint for writing: " + path.string());
  const auto bytes = encode_checkpoint(tensors);
  f.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!f) throw std::runtime_error("failed writing checkpoint: " + path.string());
}

inline std::vector<NamedTensor> read_checkpoint(const std::filesystem::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot open checkpoint: " + path.string());
  std::string bytes((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
  return decode_checkpoint(bytes, path.string());
}

inline constexpr const char* kInputShapeTensor = "meta.input_shape";

/// State tensors plus a "meta.input_shape" tensor holding (C, H, W).
inline std::vector<NamedTensor> model_tensors(const Model<float>& model) {
  std::vector<NamedTensor> out;
  std::vector<float> dims(model.input_shape.begin(), model.input_shape.end());
  out.push_back({kInputShapeTensor, Tensor<float>({dims.size()}, dims)});
  for_each_state_tensor(model, [&](const std::string& name, const Tensor<float>& t) {
    out.push_back({name, t});
  });
  return out;
}

/// Rebuilds a small_cnn or tiny_mlp from checkpoint tensors. The architecture
/// is recognised from tensor names; shapes determine widths.
inline Model<float> model_from_tensors(const std::vector<NamedTensor>& tensors) {
  std::map<std::string, const Tensor<float>*> by_name;
  for (const auto& nt : tensors) by_name[nt.name] = &nt.tensor;
  auto get = [&](const std::string& name) -> const Tensor<float>& {
    auto it = by_name.find(name);
    if (it == by_name.end()) throw std::runtime_error("checkpoint lacks tensor '" + name + "'");
    return *it->second;
  };

  Shape input;
  for (float d : get(kInputShapeTensor).values()) input.push_back(static_cast<std::size_t>(d));

  Model<float> m;
  if (by_name.count("conv1.weight")) {
    ChannelPlan plan;
    for (std::size_t i = 0; i < 4; ++i)
      plan.channels[i] = get("conv" + std::to_string(i + 1) + ".weight").dim(0);
    m = build_small_cnn<float>(input, get("fc.weight").dim(1), 0, plan);
  } else if (by_name.count("fc1.weight")) {
    m = build_tiny_mlp<float>(input, get("fc2.weight").dim(1), 0, get("fc1.weight").dim(1));
  } else {
    throw std::runtime_error("checkpoint: unrecognised architecture");
  }
  for_each_trainable(m, [&](const std::string& name, Tensor<float>& t) {
    const auto& src = get(name);
    if (src.shape() != t.shape())
      throw std::runtime_error("checkpoint tensor '" + name + "' has shape " +
                               shape_str(src.shape()) + ", expected " + shape_str(t.shape()));
    t = src;
  });
  for (auto& layer : m.layers)
    if (auto* bn = std::get_if<BatchNorm<float>>(&layer)) {
      bn->running_mean = get(bn->name + ".running_mean");
      bn->running_var = get(bn->name + ".running_var");
    }
  return m;
}

}  // namespace spa::nn

#endif  // SPA_NN_CHECKPOINT_HPP
