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

// MNIST / Fashion-MNIST (IDX) and CIFAR-10 (binary) readers, seeded subset
// extraction and per-epoch batching. Pixels are scaled to [0, 1] by /255.

#ifndef SPA_DATASETS_HPP
#define SPA_DATASETS_HPP

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <stdexcept>
#include <string>
#include <vector>

#include "spa/rng.hpp"
#include "spa/sample.hpp"
#include "spa/tensor.hpp"

namespace spa::data {

enum class Split { train, test };

struct Dataset {
  std::string name;
  Split split = Split::train;
  Tensor<float> images;              // N x C x H x W
  Tensor<float> labels;              // N x K, one-hot
  std::vector<std::uint8_t> classes;  // argmax of each label row

  std::size_t size() const { return classes.size(); }
  std::size_t num_classes() const { return labels.empty() ? 0 : labels.dim(1); }
  Shape sample_shape() const { return {images.dim(1), images.dim(2), images.dim(3)}; }
};

/// Malformed input file. what() carries the path and byte offset.
class FormatError : public std::runtime_error {
 public:
  FormatError(const std::string& path, std::size_t offset, const std::string& what)
      : std::runtime_error(path + ": " + what + " (byte offset " + std::to_string(offset) + ")"),
        offset_(offset) {}
  std::size_t offset() const { return offset_; }

 private:
  std::size_t offset_;
};

inline constexpr std::uint32_t kIdxImageMagic = 0x00000803;
inline constexpr std::uint32_t kIdxLabelMagic = 0x00000801;
inline constexpr std::size_t kCifarRecordBytes = 3073;
inline constexpr std::size_t kNumClasses = 10;

namespace detail {

inline std::string read_file(const std::filesystem::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot open " + path.string());
  return std::string((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
}

inline std::uint32_t be32(const std::string& b, std::size_t off, const std::string& path) {
  if (b.size() < off + 4) throw FormatError(path, b.size(), "truncated header");
  std::uint32_t v = 0;
  for (std::size_t i = 0; i < 4; ++i) v = (v << 8) | static_cast<unsigned char>(b[off + i]);
  return v;
}

inline Dataset assemble(std::string name, Split split, Shape sample_shape,
                        const std::vector<std::uint8_t>& pixels,
                        std::vector<std::uint8_t> classes) {
  const std::size_t n = classes.size();
  Dataset d{std::move(name), split, {}, {}, std::move(classes)};
  Shape full{n};
  full.insert(full.end(), sample_shape.begin(), sample_shape.end());
  std::vector<float> px(pixels.size());
  std::transform(pixels.begin(), pixels.end(), px.begin(),
                 [](std::uint8_t v) { return static_cast<float>(v) / 255.0f; });
  d.images = Tensor<float>(std::move(full), std::move(px));
  d.labels = Tensor<float>({n, kNumClasses});
  for (std::size_t i = 0; i < n; ++i) d.labels[i * kNumClasses + d.classes[i]] = 1.0f;
  return d;
}

}  // namespace detail

/// Parses big-endian IDX image (0x803) and label (0x801) files.
inline Dataset load_idx(const std::filesystem::path& images_path,
                        const std::filesystem::path& labels_path, std::string name = "idx",
                        Split split = Split::train) {
  const std::string ip = images_path.string(), lp = labels_path.string();
  const std::string ib = detail::read_file(images_path);
  const std::string lb = detail::read_file(labels_path);

  if (detail::be32(ib, 0, ip) != kIdxImageMagic) throw FormatError(ip, 0, "bad IDX image magic");
  if (detail::be32(lb, 0, lp) != kIdxLabelMagic) throw FormatError(lp, 0, "bad IDX label magic");
  const std::size_t n = detail::be32(ib, 4, ip);
  const std::size_t rows = detail::be32(ib, 8, ip);
  const std::size_t cols = detail::be32(ib, 12, ip);
  const std::size_t n_labels = detail::be32(lb, 4, lp);
  if (n_labels != n)
    throw FormatError(lp, 4, "label count " + std::to_string(n_labels) +
                                 " does not match image count " + std::to_string(n));
  if (n == 0 || rows == 0 || cols == 0) throw FormatError(ip, 4, "empty IDX dimensions");
  const std::size_t payload = n * rows * cols;
  if (ib.size() - 16 < payload)
    throw FormatError(ip, ib.size(), "truncated image payload: expected " +
                                         std::to_string(payload) + " bytes after header");
  if (lb.size() - 8 < n)
    throw FormatError(lp, lb.size(), "truncated label payload: expected " +
                                         std::to_string(n) + " bytes after header");

  std::vector<std::uint8_t> pixels(ib.begin() + 16, ib.begin() + 16 + static_cast<long>(payload));
  std::vector<std::uint8_t> classes(n);
  for (std::size_t i = 0; i < n; ++i) {
    classes[i] = static_cast<std::uint8_t>(lb[8 + i]);
    if (classes[i] >= kNumClasses)
      throw FormatError(lp, 8 + i, "label " + std::to_string(classes[i]) + " out of range");
  }
  return detail::assemble(std::move(name), split, {1, rows, cols}, pixels, std::move(classes));
}

/// Parses concatenated 3073-byte CIFAR-10 records (label, R plane, G plane,
/// B plane; 32x32 each).
inline Dataset load_cifar10(const std::vector<std::filesystem::path>& batch_files,
                            Split split = Split::train) {
  std::vector<std::uint8_t> pixels;
  std::vector<std::uint8_t> classes;
  for (const auto& path : batch_files) {
    const std::string b = detail::read_file(path);
    const std::size_t rem = b.size() % kCifarRecordBytes;
    if (rem != 0 || b.empty())
      throw FormatError(path.string(), b.size() - rem,
                        "file size is not a multiple of 3073; " + std::to_string(rem) +
                            " remaining bytes");
    for (std::size_t off = 0; off < b.size(); off += kCifarRecordBytes) {
      const auto label = static_cast<std::uint8_t>(b[off]);
      if (label >= kNumClasses)
        throw FormatError(path.string(), off, "label byte " + std::to_string(label) + " > 9");
      classes.push_back(label);
      pixels.insert(pixels.end(), b.begin() + static_cast<long>(off + 1),
                    b.begin() + static_cast<long>(off + kCifarRecordBytes));
    }
  }
  return detail::assemble("cifar10", split, {3, 32, 32}, pixels, std::move(classes));
}

/// Rows `indices` of `d`, in the given order.
inline Dataset select(const Dataset& d, const std::vector<std::size_t>& indices) {
  if (indices.empty()) throw std::invalid_argument("select: no indices");
  const std::size_t px = d.images.size() / d.size();
  const std::size_t k = d.num_classes();
  Shape shape = d.images.shape();
  shape[0] = indices.size();
  Dataset out{d.name, d.split, Tensor<float>(shape), Tensor<float>({indices.size(), k}), {}};
  out.classes.reserve(indices.size());
  for (std::size_t i = 0; i < indices.size(); ++i) {
    const std::size_t src = indices[i];
    if (src >= d.size()) throw std::out_of_range("select: index out of range");
    std::copy_n(d.images.data() + src * px, px, out.images.data() + i * px);
    std::copy_n(d.labels.data() + src * k, k, out.labels.data() + i * k);
    out.classes.push_back(d.classes[src]);
  }
  return out;
}

struct SubsetSpec {
  std::size_t n_train = 0;
  std::uint64_t seed = 0;
  bool stratified = false;
};

/// Indices of a seeded subset, ascending. Uniform without replacement, or
/// n_train / K per class when stratified.
inline std::vector<std::size_t> subset_indices(const Dataset& d, const SubsetSpec& spec) {
  if (spec.n_train < 1 || spec.n_train > d.size())
    throw std::invalid_argument("subsample: n_train " + std::to_string(spec.n_train) +
                                " outside [1, " + std::to_string(d.size()) + "]");
  RngStream rng = RngStream::derive(spec.seed, StreamId::subset);
  std::vector<std::size_t> picked;
  if (!spec.stratified) {
    auto perm = rng.permutation(d.size());
    picked.assign(perm.begin(), perm.begin() + static_cast<long>(spec.n_train));
  } else {
    const std::size_t k = d.num_classes();
    if (spec.n_train % k != 0)
      throw std::invalid_argument("subsample: stratified n_train " + std::to_string(spec.n_train) +
                                  " not divisible by class count " + std::to_string(k));
    const std::size_t per_class = spec.n_train / k;
    std::vector<std::size_t> taken(k, 0);
    for (auto i : rng.permutation(d.size())) {
      if (taken[d.classes[i]] < per_class) {
        ++taken[d.classes[i]];
        picked.push_back(i);
      }
    }
    for (std::size_t c = 0; c < k; ++c)
      if (taken[c] < per_class)
        throw std::invalid_argument("subsample: class " + std::to_string(c) + " has only " +
                                    std::to_string(taken[c]) + " samples");
  }
  std::sort(picked.begin(), picked.end());
  return picked;
}

inline Dataset subsample(const Dataset& d, const SubsetSpec& spec) {
  return select(d, subset_indices(d, spec));
}

/// Contiguous slices of a seeded per-epoch permutation; the last batch may be
/// partial.
inline std::vector<std::vector<std::size_t>> make_batches(std::size_t n, std::size_t batch_size,
                                                          std::uint64_t epoch,
                                                          std::uint64_t shuffle_seed) {
  if (batch_size < 1) throw std::invalid_argument("make_batches: batch_size must be >= 1");
  RngStream rng = RngStream::derive(shuffle_seed, StreamId::shuffle, {epoch});
  const auto perm = rng.permutation(n);
  std::vector<std::vector<std::size_t>> batches;
  for (std::size_t start = 0; start < n; start += batch_size) {
    const std::size_t end = std::min(n, start + batch_size);
    batches.emplace_back(perm.begin() + static_cast<long>(start),
                         perm.begin() + static_cast<long>(end));
  }
  return batches;
}

inline Batch gather_batch(const Dataset& d, const std::vector<std::size_t>& indices) {
  Dataset sel = select(d, indices);
  return Batch{std::move(sel.images), std::move(sel.labels)};
}

struct TrainTest {
  Dataset train;
  Dataset test;
};

/// Loads `name` (mnist | fashion_mnist | cifar10) from `<root>/<name>/` using
/// the distribution file names.
inline TrainTest load_named(const std::string& name, const std::filesystem::path& root) {
  if (name == "mnist" || name == "fashion_mnist") {
    const auto dir = root / name;
    return {load_idx(dir / "train-images-idx3-ubyte", dir / "train-labels-idx1-ubyte", name,
                     Split::train),
            load_idx(dir / "t10k-images-idx3-ubyte", dir / "t10k-labels-idx1-ubyte", name,
                     Split::test)};
  }
  if (name == "cifar10") {
    auto dir = root / "cifar10";
    if (std::filesystem::exists(dir / "cifar-10-batches-bin")) dir /= "cifar-10-batches-bin";
    std::vector<std::filesystem::path> train_files;
    for (int i = 1; i <= 5; ++i) train_files.push_back(dir / ("data_batch_" + std::to_string(i) + ".bin"));
    return {load_cifar10(train_files, Split::train), load_cifar10({dir / "test_batch.bin"}, Split::test)};
  }
  throw std::invalid_argument("unknown dataset '" + name + "'");
}

inline bool is_known_dataset(const std::string& name) {
  return name == "mnist" || name == "fashion_mnist" || name == "cifar10";
}

}  // namespace spa::data

#endif  // SPA_DATASETS_HPP
