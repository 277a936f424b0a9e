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

#ifndef SPA_METRICS_HPP
#define SPA_METRICS_HPP

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <limits>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "spa/nn/model.hpp"
#include "spa/tensor.hpp"

namespace spa::metrics {

/// Shortest decimal that round-trips to the same double; "inf"/"-inf"/"nan"
/// for non-finite values.
inline std::string format_number(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  std::array<char, 64> buf{};
  auto res = std::to_chars(buf.data(), buf.data() + buf.size(), v);
  return std::string(buf.data(), res.ptr);
}

inline std::string format_optional(const std::optional<double>& v) {
  return v ? format_number(*v) : std::string{};
}

struct StepRecord {
  std::size_t epoch = 0;
  std::size_t step = 0;
  double mean_minibatch_loss = 0.0;
  std::size_t n_augmented = 0;
  double probe_loss_sum = 0.0;
  std::size_t batch_size = 0;
};

struct EpochRecord {
  std::size_t epoch = 0;
  double mean_train_loss = 0.0;
  std::optional<double> test_accuracy;  // empty on epochs without evaluation
  std::size_t n_augmented_total = 0;
  std::optional<double> loss_variance;
};

enum class Phase { before_aug, after_aug };

inline const char* to_string(Phase p) {
  return p == Phase::before_aug ? "before_aug" : "after_aug";
}

/// 40 log-spaced bins over [1e-4, 10] plus an underflow bin [0, 1e-4) and an
/// overflow bin [10, inf). Bin i (1..40) covers [edge[i-1], edge[i]).
struct LossHistogram {
  static constexpr std::size_t kInteriorBins = 40;
  static constexpr double kLow = 1e-4;
  static constexpr double kHigh = 10.0;

  std::size_t epoch = 0;
  Phase phase = Phase::before_aug;
  std::array<std::uint64_t, kInteriorBins + 2> counts{};

  static const std::array<double, kInteriorBins + 1>& edges() {
    static const auto e = [] {
      std::array<double, kInteriorBins + 1> out{};
      const double lo = std::log10(kLow), hi = std::log10(kHigh);
      for (std::size_t i = 0; i <= kInteriorBins; ++i)
        out[i] = std::pow(10.0, lo + (hi - lo) * static_cast<double>(i) / kInteriorBins);
      out.front() = kLow;
      out.back() = kHigh;
      return out;
    }();
    return e;
  }

  static std::size_t bin_of(double loss) {
    const auto& e = edges();
    return static_cast<std::size_t>(std::upper_bound(e.begin(), e.end(), loss) - e.begin());
  }

  /// [lo, hi) bounds of bin b.
  static std::pair<double, double> bounds(std::size_t b) {
    const auto& e = edges();
    if (b == 0) return {0.0, kLow};
    if (b == kInteriorBins + 1) return {kHigh, std::numeric_limits<double>::infinity()};
    return {e[b - 1], e[b]};
  }

  void add(std::span<const double> losses) {
    for (double l : losses) {
      if (!(l >= 0.0)) throw std::invalid_argument("loss_histogram: negative or NaN loss");
      ++counts[bin_of(l)];
    }
  }

  std::uint64_t total() const {
    std::uint64_t t = 0;
    for (auto c : counts) t += c;
    return t;
  }
};

inline LossHistogram loss_histogram(std::span<const double> losses, Phase phase,
                                    std::size_t epoch) {
  LossHistogram h;
  h.epoch = epoch;
  h.phase = phase;
  h.add(losses);
  return h;
}

/// Unbiased variance of the trailing `window` values at each position; empty
/// for the first window - 1 positions. Maintained incrementally.
inline std::vector<std::optional<double>> sliding_variance(std::span<const double> series,
                                                           std::size_t window = 50) {
  if (window < 2) throw std::invalid_argument("sliding_variance: window must be >= 2");
  std::vector<std::optional<double>> out(series.size());
  double mean = 0.0, m2 = 0.0;
  std::size_t count = 0;
  for (std::size_t t = 0; t < series.size(); ++t) {
    // add series[t]
    ++count;
    double delta = series[t] - mean;
    mean += delta / static_cast<double>(count);
    m2 += delta * (series[t] - mean);
    if (count > window) {
      // remove series[t - window]
      const double old = series[t - window];
      --count;
      const double mean_prev = mean;
      mean -= (old - mean) / static_cast<double>(count);
      m2 -= (old - mean_prev) * (old - mean);
    }
    if (count == window) out[t] = std::max(m2, 0.0) / static_cast<double>(window - 1);
  }
  return out;
}

/// Fraction of rows whose argmax logit (lowest index on ties) matches the
/// argmax label.
inline double accuracy_from_logits(const Tensor<float>& logits, const Tensor<float>& labels) {
  const std::size_t n = logits.dim(0), k = logits.dim(1);
  std::size_t correct = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const float* z = logits.data() + i * k;
    const float* y = labels.data() + i * k;
    const auto pred = std::max_element(z, z + k) - z;  // first maximum
    const auto truth = std::max_element(y, y + k) - y;
    if (pred == truth) ++correct;
  }
  return static_cast<double>(correct) / static_cast<double>(n);
}

/// Eval-mode accuracy (batch norm on running statistics), in fixed chunks.
inline double evaluate(const nn::Model<float>& model, const Tensor<float>& images,
                       const Tensor<float>& labels, std::size_t chunk = 500) {
  if (images.empty() || images.dim(0) == 0) throw std::invalid_argument("evaluate: empty test set");
  const std::size_t n = images.dim(0);
  const std::size_t px = images.size() / n, k = labels.dim(1);
  std::size_t correct_total = 0;
  for (std::size_t start = 0; start < n; start += chunk) {
    const std::size_t m = std::min(chunk, n - start);
    Shape s = images.shape();
    s[0] = m;
    Tensor<float> x(s), y({m, k});
    std::copy_n(images.data() + start * px, m * px, x.data());
    std::copy_n(labels.data() + start * k, m * k, y.data());
    auto trace = nn::forward(model, x, nn::Mode::eval);
    correct_total += static_cast<std::size_t>(
        std::llround(accuracy_from_logits(trace.logits, y) * static_cast<double>(m)));
  }
  return static_cast<double>(correct_total) / static_cast<double>(n);
}

struct RunSummary {
  std::string mode;
  std::string lambda;  // formatted; "0" for ca, "inf" for na
  std::uint64_t seed = 0;
  double best_accuracy = 0.0;
  std::size_t best_epoch = 0;
};

/// Per-run log. Steps must arrive in increasing (epoch, step) order.
class MetricsLog {
 public:
  void record_step(const StepRecord& r) {
    if (!steps_.empty()) {
      const auto& last = steps_.back();
      if (r.epoch < last.epoch || (r.epoch == last.epoch && r.step <= last.step))
        throw std::invalid_argument("record_step: out-of-order record (epoch " +
                                    std::to_string(r.epoch) + ", step " + std::to_string(r.step) +
                                    ")");
    }
    steps_.push_back(r);
  }
  void record_epoch(const EpochRecord& r) { epochs_.push_back(r); }
  void record_histogram(const LossHistogram& h) { histograms_.push_back(h); }

  const std::vector<StepRecord>& steps() const { return steps_; }
  const std::vector<EpochRecord>& epochs() const { return epochs_; }
  const std::vector<LossHistogram>& histograms() const { return histograms_; }
  std::vector<EpochRecord>& epochs() { return epochs_; }

  std::vector<double> step_losses() const {
    std::vector<double> v;
    v.reserve(steps_.size());
    for (const auto& s : steps_) v.push_back(s.mean_minibatch_loss);
    return v;
  }

 private:
  std::vector<StepRecord> steps_;
  std::vector<EpochRecord> epochs_;
  std::vector<LossHistogram> histograms_;
};

namespace detail {

inline void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw std::runtime_error("cannot open for writing: " + path.string());
  f << text;
  if (!f) throw std::runtime_error("write failed: " + path.string());
}

}  // namespace detail

inline std::string epochs_csv(const MetricsLog& log) {
  std::string s = "epoch,mean_train_loss,test_accuracy,n_augmented_total,loss_variance\n";
  for (const auto& e : log.epochs())
    s += std::to_string(e.epoch) + "," + format_number(e.mean_train_loss) + "," +
         format_optional(e.test_accuracy) + "," + std::to_string(e.n_augmented_total) + "," +
         format_optional(e.loss_variance) + "\n";
  return s;
}

inline std::string steps_csv(const MetricsLog& log) {
  std::string s = "epoch,step,loss,n_augmented\n";
  for (const auto& r : log.steps())
    s += std::to_string(r.epoch) + "," + std::to_string(r.step) + "," +
         format_number(r.mean_minibatch_loss) + "," + std::to_string(r.n_augmented) + "\n";
  return s;
}

inline std::string histograms_csv(const MetricsLog& log) {
  std::string s = "epoch,phase,bin_lo,bin_hi,count\n";
  for (const auto& h : log.histograms())
    for (std::size_t b = 0; b < h.counts.size(); ++b) {
      const auto [lo, hi] = LossHistogram::bounds(b);
      s += std::to_string(h.epoch) + "," + to_string(h.phase) + "," + format_number(lo) + "," +
           format_number(hi) + "," + std::to_string(h.counts[b]) + "\n";
    }
  return s;
}

inline std::string summary_csv(std::span<const RunSummary> rows) {
  std::string s = "mode,lambda,seed,best_accuracy,best_epoch\n";
  for (const auto& r : rows)
    s += r.mode + "," + r.lambda + "," + std::to_string(r.seed) + "," +
         format_number(r.best_accuracy) + "," + std::to_string(r.best_epoch) + "\n";
  return s;
}

/// Writes epochs.csv, steps.csv, histograms.csv and summary.csv into out_dir.
inline void write_reports(const MetricsLog& log, std::span<const RunSummary> summary,
                          const std::filesystem::path& out_dir) {
  std::error_code ec;
  std::filesystem::create_directories(out_dir, ec);
  if (ec) throw std::runtime_error("cannot create " + out_dir.string() + ": " + ec.message());
  detail::write_text(out_dir / "epochs.csv", epochs_csv(log));
  detail::write_text(out_dir / "steps.csv", steps_csv(log));
  detail::write_text(out_dir / "histograms.csv", histograms_csv(log));
  detail::write_text(out_dir / "summary.csv", summary_csv(summary));
}

}  // namespace spa::metrics

#endif  // SPA_METRICS_HPP
