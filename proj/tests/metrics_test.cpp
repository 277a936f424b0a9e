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

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "spa/metrics.hpp"
#include "spa/rng.hpp"

namespace spa::metrics {
namespace {

namespace fs = std::filesystem;

double brute_variance(std::span<const double> xs) {
  double mean = 0.0;
  for (double x : xs) mean += x;
  mean /= static_cast<double>(xs.size());
  double ss = 0.0;
  for (double x : xs) ss += (x - mean) * (x - mean);
  return ss / static_cast<double>(xs.size() - 1);
}

TEST(FormatNumber, ShortestRoundTrip) {
  EXPECT_EQ(format_number(0.1), "0.1");
  EXPECT_EQ(format_number(0.0), "0");
  EXPECT_EQ(format_number(97.5), "97.5");
  EXPECT_EQ(format_number(std::numeric_limits<double>::infinity()), "inf");
  EXPECT_EQ(format_number(-std::numeric_limits<double>::infinity()), "-inf");
  EXPECT_EQ(format_number(std::nan("")), "nan");
  RngStream r(1);
  for (int i = 0; i < 1000; ++i) {
    const double v = std::ldexp(r.uniform(), static_cast<int>(r.below(80)) - 40);
    EXPECT_EQ(std::stod(format_number(v)), v);
  }
  EXPECT_EQ(format_optional(std::nullopt), "");
}

TEST(Histogram, EdgesAreLogSpaced) {
  const auto& e = LossHistogram::edges();
  EXPECT_EQ(e.front(), 1e-4);
  EXPECT_EQ(e.back(), 10.0);
  for (std::size_t i = 1; i < e.size(); ++i)
    EXPECT_NEAR(std::log10(e[i]) - std::log10(e[i - 1]), 5.0 / 40.0, 1e-12);
}

TEST(Histogram, SingleBinUnderflowOverflow) {
  std::vector<double> ones(25, 1.0);
  const auto h = loss_histogram(ones, Phase::before_aug, 3);
  std::size_t nonzero = 0;
  for (std::size_t b = 0; b < h.counts.size(); ++b)
    if (h.counts[b]) {
      ++nonzero;
      EXPECT_EQ(h.counts[b], 25u);
      EXPECT_GT(b, 0u);
      EXPECT_LT(b, LossHistogram::kInteriorBins + 1);
      const auto [lo, hi] = LossHistogram::bounds(b);
      EXPECT_LE(lo, 1.0);
      EXPECT_LT(1.0, hi);
    }
  EXPECT_EQ(nonzero, 1u);
  EXPECT_EQ(LossHistogram::bin_of(1e-6), 0u);
  EXPECT_EQ(LossHistogram::bin_of(0.0), 0u);
  EXPECT_EQ(LossHistogram::bin_of(1e-4), 1u);
  EXPECT_EQ(LossHistogram::bin_of(10.0), LossHistogram::kInteriorBins + 1);
  EXPECT_EQ(LossHistogram::bin_of(1e9), LossHistogram::kInteriorBins + 1);
}

TEST(Histogram, MassConservationAndBinMembership) {
  RngStream r(2);
  std::vector<double> losses;
  for (int i = 0; i < 5000; ++i) losses.push_back(std::pow(10.0, r.uniform(-6.0, 2.0)));
  const auto h = loss_histogram(losses, Phase::after_aug, 1);
  EXPECT_EQ(h.total(), losses.size());
  for (double l : losses) {
    const auto [lo, hi] = LossHistogram::bounds(LossHistogram::bin_of(l));
    ASSERT_LE(lo, l);
    ASSERT_LT(l, hi);
  }
  EXPECT_THROW(loss_histogram(std::vector<double>{-1.0}, Phase::before_aug, 0),
               std::invalid_argument);
}

TEST(SlidingVariance, ConstantIsZeroAndWarmupEmpty) {
  std::vector<double> xs(120, 0.7);
  const auto v = sliding_variance(xs, 50);
  for (std::size_t t = 0; t < 49; ++t) EXPECT_FALSE(v[t].has_value());
  for (std::size_t t = 49; t < 120; ++t) EXPECT_NEAR(*v[t], 0.0, 1e-15);
  EXPECT_THROW(sliding_variance(xs, 1), std::invalid_argument);
}

TEST(SlidingVariance, AlternatingClosedForm) {
  const double a = 2.5, b = 0.5;
  const std::size_t w = 50;
  std::vector<double> xs;
  for (int i = 0; i < 300; ++i) xs.push_back(i % 2 ? b : a);
  const auto v = sliding_variance(xs, w);
  const double closed = (a - b) * (a - b) / 4.0 * static_cast<double>(w) / static_cast<double>(w - 1);
  for (std::size_t t = w - 1; t < xs.size(); ++t) {
    EXPECT_NEAR(*v[t], closed, 1e-10);
    EXPECT_NEAR(brute_variance(std::span<const double>(xs).subspan(t + 1 - w, w)), closed, 1e-12);
  }
}

TEST(SlidingVariance, MatchesBruteForce) {
  RngStream r(3);
  for (std::size_t w : {2u, 7u, 50u}) {
    std::vector<double> xs;
    double level = 2.3;
    for (int i = 0; i < 2000; ++i) {
      level *= 0.999;
      xs.push_back(level + r.normal() * 0.1);
    }
    const auto v = sliding_variance(xs, w);
    for (std::size_t t = w - 1; t < xs.size(); ++t)
      ASSERT_NEAR(*v[t], brute_variance(std::span<const double>(xs).subspan(t + 1 - w, w)), 1e-10)
          << "w=" << w << " t=" << t;
  }
}

TEST(Accuracy, TieBreakLowestIndex) {
  Tensor<float> logits({2, 3}, std::vector<float>{1, 1, 0, 0, 2, 2});
  Tensor<float> labels({2, 3}, std::vector<float>{1, 0, 0, 0, 0, 1});
  EXPECT_DOUBLE_EQ(accuracy_from_logits(logits, labels), 0.5);
}

// One dense layer reading a one-hot "image" and scaling it by 10.
nn::Model<float> oracle_model(std::size_t k) {
  nn::Model<float> m;
  m.arch_id = "oracle";
  m.input_shape = {1, 1, k};
  m.num_classes = k;
  nn::Dense<float> fc{"fc", Tensor<float>({k, k}), Tensor<float>({k})};
  for (std::size_t i = 0; i < k; ++i) fc.weight[i * k + i] = 10.0f;
  m.layers.emplace_back(std::move(fc));
  return m;
}

TEST(Evaluate, PerfectModelScoresOne) {
  const std::size_t n = 37, k = 10;
  Tensor<float> images({n, 1, 1, k}), labels({n, k});
  for (std::size_t i = 0; i < n; ++i) {
    images[i * k + i % k] = 1.0f;
    labels[i * k + i % k] = 1.0f;
  }
  EXPECT_DOUBLE_EQ(evaluate(oracle_model(k), images, labels, 8), 1.0);
  // Shift the labels by one class so every prediction is wrong.
  Tensor<float> wrong({n, k});
  for (std::size_t i = 0; i < n; ++i) wrong[i * k + (i + 1) % k] = 1.0f;
  EXPECT_DOUBLE_EQ(evaluate(oracle_model(k), images, wrong), 0.0);
  EXPECT_THROW(evaluate(oracle_model(k), Tensor<float>{}, labels), std::invalid_argument);
}

struct RandomSet {
  Tensor<float> images, labels;
};

RandomSet balanced_random_set(std::size_t n, std::uint64_t seed) {
  RngStream r(seed);
  RandomSet s{Tensor<float>({n, 1, 8, 8}), Tensor<float>({n, 10})};
  for (std::size_t i = 0; i < s.images.size(); ++i) s.images[i] = static_cast<float>(r.uniform());
  for (std::size_t i = 0; i < n; ++i) s.labels[i * 10 + i % 10] = 1.0f;
  return s;
}

TEST(Evaluate, UntrainedModelNearChance) {
  const auto set = balanced_random_set(500, 4);
  double sum = 0.0;
  const int seeds = 20;
  for (int seed = 0; seed < seeds; ++seed)
    sum += evaluate(nn::build_small_cnn<float>({1, 8, 8}, 10, seed, {{4, 4, 4, 4}}), set.images,
                    set.labels);
  EXPECT_NEAR(sum / seeds, 0.1, 0.05);
}

TEST(Evaluate, InvariantUnderPermutation) {
  const auto set = balanced_random_set(300, 5);
  const auto model = nn::build_tiny_mlp<float>({1, 8, 8}, 10, 6);
  RngStream r(7);
  const auto perm = r.permutation(300);
  Tensor<float> pi(set.images.shape()), pl(set.labels.shape());
  for (std::size_t i = 0; i < 300; ++i) {
    std::copy_n(set.images.data() + perm[i] * 64, 64, pi.data() + i * 64);
    std::copy_n(set.labels.data() + perm[i] * 10, 10, pl.data() + i * 10);
  }
  EXPECT_DOUBLE_EQ(evaluate(model, set.images, set.labels, 64), evaluate(model, pi, pl, 100));
}

TEST(MetricsLog, RejectsOutOfOrderSteps) {
  MetricsLog log;
  log.record_step({1, 0, 0.5, 3, 1.0, 10});
  log.record_step({1, 1, 0.4, 2, 1.0, 10});
  log.record_step({2, 0, 0.3, 0, 1.0, 10});
  EXPECT_THROW(log.record_step({2, 0, 0.3, 0, 1.0, 10}), std::invalid_argument);
  EXPECT_THROW(log.record_step({1, 5, 0.3, 0, 1.0, 10}), std::invalid_argument);
  EXPECT_EQ(log.step_losses(), (std::vector<double>{0.5, 0.4, 0.3}));
}

TEST(Csv, HeadersOnlyForEmptyRun) {
  MetricsLog log;
  EXPECT_EQ(epochs_csv(log), "epoch,mean_train_loss,test_accuracy,n_augmented_total,loss_variance\n");
  EXPECT_EQ(steps_csv(log), "epoch,step,loss,n_augmented\n");
  EXPECT_EQ(histograms_csv(log), "epoch,phase,bin_lo,bin_hi,count\n");
  EXPECT_EQ(summary_csv({}), "mode,lambda,seed,best_accuracy,best_epoch\n");
}

TEST(Csv, RowsInOrderWithFixedFormatting) {
  MetricsLog log;
  log.record_step({1, 0, 2.25, 7, 1.0, 10});
  log.record_step({1, 1, 0.125, 0, 1.0, 10});
  log.record_epoch({1, 1.1875, 0.5, 7, std::nullopt});
  log.record_epoch({2, 0.5, std::nullopt, 3, 0.25});
  EXPECT_EQ(steps_csv(log), "epoch,step,loss,n_augmented\n1,0,2.25,7\n1,1,0.125,0\n");
  EXPECT_EQ(epochs_csv(log),
            "epoch,mean_train_loss,test_accuracy,n_augmented_total,loss_variance\n"
            "1,1.1875,0.5,7,\n2,0.5,,3,0.25\n");
  log.record_histogram(loss_histogram(std::vector<double>{1e-5, 20.0}, Phase::before_aug, 4));
  const auto h = histograms_csv(log);
  EXPECT_NE(h.find("4,before_aug,0,1e-04,1\n"), std::string::npos);
  EXPECT_NE(h.find("4,before_aug,10,inf,1\n"), std::string::npos);
  EXPECT_EQ(std::count(h.begin(), h.end(), '\n'), 1 + 42);
}

TEST(Csv, WriteReportsIsByteIdenticalAcrossRuns) {
  const auto dir = fs::temp_directory_path() / "spa_metrics_reports";
  fs::remove_all(dir);
  MetricsLog log;
  log.record_step({1, 0, 0.3, 1, 1.0, 10});
  log.record_epoch({1, 0.3, 0.9, 1, std::nullopt});
  const std::vector<RunSummary> summary{{"spa", "0.1", 0, 0.9, 1}};
  auto read = [](const fs::path& p) {
    std::ifstream f(p, std::ios::binary);
    std::stringstream ss;
    ss << f.rdbuf();
    return ss.str();
  };
  write_reports(log, summary, dir / "a");
  write_reports(log, summary, dir / "b");
  for (const char* name : {"epochs.csv", "steps.csv", "histograms.csv", "summary.csv"})
    EXPECT_EQ(read(dir / "a" / name), read(dir / "b" / name)) << name;
  EXPECT_EQ(read(dir / "a" / "summary.csv"), "mode,lambda,seed,best_accuracy,best_epoch\nspa,0.1,0,0.9,1\n");
  fs::remove_all(dir);
}

}  // namespace
}  // namespace spa::metrics
