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

#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <set>
#include <string>

#include "spa/datasets.hpp"

namespace spa::data {
namespace {

namespace fs = std::filesystem;

class TempDir {
 public:
  TempDir() {
    path_ = fs::temp_directory_path() /
            ("spa_datasets_" + std::to_string(::testing::UnitTest::GetInstance()->random_seed()) +
             "_" + ::testing::UnitTest::GetInstance()->current_test_info()->name());
    fs::remove_all(path_);
    fs::create_directories(path_);
  }
  ~TempDir() { fs::remove_all(path_); }
  const fs::path& path() const { return path_; }

 private:
  fs::path path_;
};

void put_be32(std::string& s, std::uint32_t v) {
  for (int shift = 24; shift >= 0; shift -= 8) s.push_back(static_cast<char>((v >> shift) & 0xff));
}

void write_bytes(const fs::path& p, const std::string& bytes) {
  std::ofstream(p, std::ios::binary) << bytes;
}

std::string idx_images(std::uint32_t n, std::uint32_t rows, std::uint32_t cols,
                       const std::string& payload) {
  std::string s;
  put_be32(s, kIdxImageMagic);
  put_be32(s, n);
  put_be32(s, rows);
  put_be32(s, cols);
  return s + payload;
}

std::string idx_labels(const std::string& labels) {
  std::string s;
  put_be32(s, kIdxLabelMagic);
  put_be32(s, static_cast<std::uint32_t>(labels.size()));
  return s + labels;
}

// Two 2x2 images: all-black with label 4, then all-white with label 9.
struct IdxFixture {
  TempDir dir;
  fs::path images = dir.path() / "img";
  fs::path labels = dir.path() / "lbl";
  IdxFixture() {
    write_bytes(images, idx_images(2, 2, 2, std::string(4, '\0') + std::string(4, '\xff')));
    write_bytes(labels, idx_labels(std::string{'\x04', '\x09'}));
  }
};

template <class F>
std::string error_of(F&& f) {
  try {
    f();
  } catch (const std::exception& e) {
    return e.what();
  }
  return "";
}

TEST(LoadIdx, TwoImageFixture) {
  IdxFixture fx;
  const auto d = load_idx(fx.images, fx.labels);
  ASSERT_EQ(d.size(), 2u);
  EXPECT_EQ(d.sample_shape(), (Shape{1, 2, 2}));
  for (std::size_t i = 0; i < 4; ++i) {
    EXPECT_EQ(d.images[i], 0.0f);
    EXPECT_EQ(d.images[4 + i], 1.0f);
  }
  EXPECT_EQ(d.classes, (std::vector<std::uint8_t>{4, 9}));
  EXPECT_EQ(d.labels[4], 1.0f);
  EXPECT_EQ(d.labels[10 + 9], 1.0f);
  EXPECT_EQ(std::accumulate(d.labels.values().begin(), d.labels.values().end(), 0.0f), 2.0f);
}

TEST(LoadIdx, CorruptMagicReportsOffsetZero) {
  IdxFixture fx;
  std::string bytes = idx_images(2, 2, 2, std::string(8, '\0'));
  bytes[3] = '\x04';
  write_bytes(fx.images, bytes);
  try {
    load_idx(fx.images, fx.labels);
    FAIL();
  } catch (const FormatError& e) {
    EXPECT_EQ(e.offset(), 0u);
    EXPECT_NE(std::string(e.what()).find("magic"), std::string::npos);
  }
}

TEST(LoadIdx, TruncationAndCountMismatch) {
  IdxFixture fx;
  write_bytes(fx.images, idx_images(2, 2, 2, std::string(7, '\0')));
  EXPECT_NE(error_of([&] { load_idx(fx.images, fx.labels); }).find("truncated image payload"),
            std::string::npos);
  write_bytes(fx.images, idx_images(3, 2, 2, std::string(12, '\0')));
  EXPECT_NE(error_of([&] { load_idx(fx.images, fx.labels); }).find("does not match"),
            std::string::npos);
  write_bytes(fx.images, std::string(6, '\0'));
  EXPECT_THROW(load_idx(fx.images, fx.labels), FormatError);
}

TEST(LoadIdx, LabelOutOfRangeReportsItsOffset) {
  IdxFixture fx;
  write_bytes(fx.labels, idx_labels(std::string{'\x01', '\x0a'}));
  try {
    load_idx(fx.images, fx.labels);
    FAIL();
  } catch (const FormatError& e) {
    EXPECT_EQ(e.offset(), 9u);
  }
}

TEST(LoadIdx, MissingFile) {
  TempDir dir;
  EXPECT_THROW(load_idx(dir.path() / "nope", dir.path() / "nope2"), std::runtime_error);
}

std::string cifar_record(std::uint8_t label, std::uint8_t seed) {
  std::string r(1, static_cast<char>(label));
  for (std::size_t i = 0; i < 3072; ++i) r.push_back(static_cast<char>((i * 7 + seed) & 0xff));
  return r;
}

TEST(LoadCifar, SyntheticRecordRoundTrip) {
  TempDir dir;
  const auto p = dir.path() / "batch.bin";
  write_bytes(p, cifar_record(3, 11) + cifar_record(0, 5));
  const auto d = load_cifar10({p});
  ASSERT_EQ(d.size(), 2u);
  EXPECT_EQ(d.sample_shape(), (Shape{3, 32, 32}));
  EXPECT_EQ(d.classes, (std::vector<std::uint8_t>{3, 0}));
  for (std::size_t i = 0; i < 3072; ++i) {
    ASSERT_EQ(d.images[i], static_cast<float>((i * 7 + 11) & 0xff) / 255.0f);
    ASSERT_EQ(d.images[3072 + i], static_cast<float>((i * 7 + 5) & 0xff) / 255.0f);
  }
  // Red plane first: element (c=1, y=0, x=0) is byte 1024 of the record payload.
  EXPECT_EQ(d.images.at({0, 1, 0, 0}), static_cast<float>((1024 * 7 + 11) & 0xff) / 255.0f);
}

TEST(LoadCifar, TruncatedFileReportsRemainder) {
  TempDir dir;
  const auto p = dir.path() / "batch.bin";
  write_bytes(p, cifar_record(1, 0) + std::string(100, 'x'));
  const auto msg = error_of([&] { load_cifar10({p}); });
  EXPECT_NE(msg.find("100 remaining bytes"), std::string::npos) << msg;
  EXPECT_NE(msg.find("byte offset 3073"), std::string::npos) << msg;
}

TEST(LoadCifar, BadLabelByte) {
  TempDir dir;
  const auto p = dir.path() / "batch.bin";
  write_bytes(p, cifar_record(1, 0) + cifar_record(10, 0));
  try {
    load_cifar10({p});
    FAIL();
  } catch (const FormatError& e) {
    EXPECT_EQ(e.offset(), 3073u);
  }
}

Dataset synthetic(std::size_t n) {
  std::vector<std::uint8_t> pixels(n * 4);
  std::vector<std::uint8_t> classes(n);
  for (std::size_t i = 0; i < n; ++i) {
    classes[i] = static_cast<std::uint8_t>(i % 10);
    for (std::size_t p = 0; p < 4; ++p) pixels[i * 4 + p] = static_cast<std::uint8_t>(i & 0xff);
  }
  return detail::assemble("synthetic", Split::train, {1, 2, 2}, pixels, classes);
}

TEST(Subsample, FullSizeKeepsEverySample) {
  const auto d = synthetic(50);
  const auto idx = subset_indices(d, {50, 3, false});
  for (std::size_t i = 0; i < 50; ++i) EXPECT_EQ(idx[i], i);
}

TEST(Subsample, SameSeedSameSetDifferentSeedDifferentSet) {
  const auto d = synthetic(3000);
  const auto a = subset_indices(d, {1000, 7, false});
  EXPECT_EQ(a, subset_indices(d, {1000, 7, false}));
  EXPECT_NE(a, subset_indices(d, {1000, 8, false}));
  EXPECT_EQ(std::set<std::size_t>(a.begin(), a.end()).size(), 1000u);
  EXPECT_TRUE(std::is_sorted(a.begin(), a.end()));
}

TEST(Subsample, StratifiedGivesExactlyPerClass) {
  const auto d = synthetic(3000);
  const auto sub = subsample(d, {1000, 1, true});
  std::vector<int> per_class(10, 0);
  for (auto c : sub.classes) ++per_class[c];
  for (int c : per_class) EXPECT_EQ(c, 100);
}

TEST(Subsample, RejectsBadSizes) {
  const auto d = synthetic(30);
  EXPECT_THROW(subset_indices(d, {0, 0, false}), std::invalid_argument);
  EXPECT_THROW(subset_indices(d, {31, 0, false}), std::invalid_argument);
  EXPECT_THROW(subset_indices(d, {15, 0, true}), std::invalid_argument);
}

TEST(Subsample, SelectCopiesRowsInOrder) {
  const auto d = synthetic(20);
  const auto s = select(d, {5, 2, 17});
  EXPECT_EQ(s.classes, (std::vector<std::uint8_t>{5, 2, 7}));
  EXPECT_EQ(s.images[4], 2.0f / 255.0f);
  EXPECT_EQ(s.labels.at({2, 7}), 1.0f);
  EXPECT_THROW(select(d, {20}), std::out_of_range);
}

TEST(MakeBatches, FullAndPartialBatches) {
  auto b = make_batches(1000, 100, 0, 0);
  EXPECT_EQ(b.size(), 10u);
  for (const auto& x : b) EXPECT_EQ(x.size(), 100u);
  b = make_batches(1001, 100, 0, 0);
  ASSERT_EQ(b.size(), 11u);
  EXPECT_EQ(b.back().size(), 1u);
  EXPECT_THROW(make_batches(10, 0, 0, 0), std::invalid_argument);
}

TEST(MakeBatches, CoverEveryIndexOnceAndReshufflePerEpoch) {
  const auto e0 = make_batches(257, 32, 0, 9);
  std::vector<std::size_t> all;
  for (const auto& x : e0) all.insert(all.end(), x.begin(), x.end());
  std::sort(all.begin(), all.end());
  for (std::size_t i = 0; i < 257; ++i) ASSERT_EQ(all[i], i);
  EXPECT_EQ(e0, make_batches(257, 32, 0, 9));
  EXPECT_NE(e0, make_batches(257, 32, 1, 9));
  EXPECT_NE(e0, make_batches(257, 32, 0, 10));
}

TEST(LoadNamed, UnknownName) {
  EXPECT_THROW(load_named("imagenet", "/nonexistent"), std::invalid_argument);
  EXPECT_TRUE(is_known_dataset("fashion_mnist"));
  EXPECT_FALSE(is_known_dataset("svhn"));
}

TEST(LoadNamed, MnistDistributionSizes) {
  const fs::path root = SPA_DATA_DIR;
  if (!fs::exists(root / "mnist" / "train-images-idx3-ubyte"))
    GTEST_SKIP() << "no MNIST files under " << root;
  const auto tt = load_named("mnist", root);
  EXPECT_EQ(tt.train.sample_shape(), (Shape{1, 28, 28}));
  EXPECT_EQ(tt.test.sample_shape(), (Shape{1, 28, 28}));
  if (tt.train.size() != 60000)
    GTEST_SKIP() << "local MNIST copy has " << tt.train.size()
                 << " training images, not the 60000-image distribution";
  EXPECT_EQ(tt.test.size(), 10000u);
}

TEST(LoadNamed, CifarDistributionSizes) {
  const fs::path root = SPA_DATA_DIR;
  if (!fs::exists(root / "cifar10")) GTEST_SKIP() << "no CIFAR-10 files under " << root;
  const auto tt = load_named("cifar10", root);
  EXPECT_EQ(tt.train.size(), 50000u);
  EXPECT_EQ(tt.test.size(), 10000u);
}

}  // namespace
}  // namespace spa::data
