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

// Self-paced augmentation training. Every minibatch is first passed forward
// without any update to obtain per-sample losses; samples whose loss reaches
// the threshold are augmented; the (partly augmented) minibatch then drives
// an ordinary forward/backward/Adam step.
//
// Baselines share the same loop: ca flags every sample (threshold 0), na
// flags none (threshold infinity), random_match flags a uniformly random
// subset as large as the one the threshold would have picked.

#ifndef SPA_SPA_CORE_HPP
#define SPA_SPA_CORE_HPP

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include "spa/augmentation.hpp"
#include "spa/datasets.hpp"
#include "spa/metrics.hpp"
#include "spa/nn/adam.hpp"
#include "spa/nn/checkpoint.hpp"
#include "spa/nn/model.hpp"
#include "spa/rng.hpp"
#include "spa/sample.hpp"

namespace spa {

enum class SelectionMode { spa, ca, na, random_match };

inline std::string to_string(SelectionMode m) {
  switch (m) {
    case SelectionMode::spa: return "spa";
    case SelectionMode::ca: return "ca";
    case SelectionMode::na: return "na";
    case SelectionMode::random_match: return "random_match";
  }
  return "?";
}

inline SelectionMode parse_selection_mode(const std::string& s) {
  if (s == "spa") return SelectionMode::spa;
  if (s == "ca") return SelectionMode::ca;
  if (s == "na") return SelectionMode::na;
  if (s == "random_match") return SelectionMode::random_match;
  throw std::invalid_argument("unknown mode '" + s + "' (expected spa, ca, na, random_match)");
}

struct SpaPolicy {
  SelectionMode mode = SelectionMode::spa;
  double lambda = 0.1;  // read by spa and random_match only

  /// Threshold this policy is equivalent to.
  double effective_lambda() const {
    switch (mode) {
      case SelectionMode::ca: return 0.0;
      case SelectionMode::na: return std::numeric_limits<double>::infinity();
      default: return lambda;
    }
  }

  void validate() const {
    if ((mode == SelectionMode::spa || mode == SelectionMode::random_match) &&
        !(lambda >= 0.0))
      throw std::invalid_argument("lambda must be a non-negative number");
  }
};

struct AugMask {
  std::vector<bool> flags;
  std::size_t count = 0;
};

/// Per-sample augmentation indicators for one minibatch. `rng` is consumed
/// only by random_match.
inline AugMask select_mask(const std::vector<double>& losses, const SpaPolicy& policy,
                           RngStream& rng) {
  for (double l : losses)
    if (!std::isfinite(l)) throw std::invalid_argument("select_mask: non-finite loss");
  const std::size_t n = losses.size();
  AugMask m{std::vector<bool>(n, false), 0};
  switch (policy.mode) {
    case SelectionMode::ca:
      std::fill(m.flags.begin(), m.flags.end(), true);
      m.count = n;
      break;
    case SelectionMode::na:
      break;
    case SelectionMode::spa:
      for (std::size_t i = 0; i < n; ++i)
        if (losses[i] >= policy.lambda) {
          m.flags[i] = true;
          ++m.count;
        }
      break;
    case SelectionMode::random_match: {
      const auto target = static_cast<std::size_t>(
          std::count_if(losses.begin(), losses.end(), [&](double l) { return l >= policy.lambda; }));
      const auto perm = rng.permutation(n);
      for (std::size_t i = 0; i < target; ++i) m.flags[perm[i]] = true;
      m.count = target;
      break;
    }
  }
  return m;
}

struct ProbeResult {
  std::vector<double> losses;
  nn::NormSnapshot norm_stats;  // batch statistics the probe normalized with
};

/// Forward pass only, with batch statistics; no parameter, running-stat or
/// optimizer state changes.
inline ProbeResult probe_losses(const nn::Model<float>& model, const Batch& batch) {
  if (batch.size() == 0) throw std::invalid_argument("probe_losses: empty batch");
  auto trace = nn::forward(model, batch.images, nn::Mode::probe);
  auto loss = nn::softmax_cross_entropy(trace.logits, batch.labels);
  ProbeResult r;
  r.losses.assign(loss.per_sample.begin(), loss.per_sample.end());
  r.norm_stats = nn::norm_snapshot(trace);
  return r;
}

/// Per-sample losses of `batch` under parameters `model`, normalized with
/// the statistics a probe recorded.
inline std::vector<double> losses_with_stats(const nn::Model<float>& model, const Batch& batch,
                                             const nn::NormSnapshot& stats) {
  auto logits = nn::forward_frozen(model, batch.images, stats);
  auto loss = nn::softmax_cross_entropy(logits, batch.labels);
  return {loss.per_sample.begin(), loss.per_sample.end()};
}

struct StepContext {
  std::size_t epoch = 0;
  std::size_t step = 0;
  std::uint64_t aug_seed = 0;
  bool record_after_losses = false;
};

struct StepOutcome {
  metrics::StepRecord record;
  AugMask mask;
  std::vector<double> probe_losses;
  std::vector<double> update_losses;
  std::vector<double> after_losses;  // only when requested
};

/// One minibatch of SPA training: probe, select, augment, update.
inline StepOutcome train_minibatch(nn::Model<float>& model, nn::AdamState<float>& adam,
                                   const Batch& batch, const SpaPolicy& policy,
                                   const aug::AugPipeline& pipeline, const StepContext& ctx) {
  StepOutcome out;
  ProbeResult probe = probe_losses(model, batch);

  RngStream select_rng = RngStream::derive(ctx.aug_seed, StreamId::select, {ctx.epoch, ctx.step});
  out.mask = select_mask(probe.losses, policy, select_rng);

  const aug::BatchStreams streams{ctx.aug_seed, ctx.epoch, ctx.step};
  const Batch augmented = aug::apply_pipeline(batch, out.mask.flags, pipeline, streams);

  if (ctx.record_after_losses) out.after_losses = losses_with_stats(model, augmented, probe.norm_stats);

  auto trace = nn::forward(model, augmented.images, nn::Mode::train);
  auto loss = nn::softmax_cross_entropy(trace.logits, augmented.labels);
  auto grads = nn::backward(model, trace, loss.grad_logits);
  nn::commit_running_stats(model, trace);
  nn::adam_step(model, grads, adam);

  double probe_sum = 0.0;
  for (double l : probe.losses) probe_sum += l;
  out.record = {ctx.epoch, ctx.step, static_cast<double>(loss.mean), out.mask.count, probe_sum,
                batch.size()};
  out.probe_losses = std::move(probe.losses);
  out.update_losses.assign(loss.per_sample.begin(), loss.per_sample.end());
  return out;
}

enum class ModelKind { small_cnn, tiny_mlp };

inline ModelKind parse_model_kind(const std::string& s) {
  if (s == "small_cnn") return ModelKind::small_cnn;
  if (s == "tiny_mlp") return ModelKind::tiny_mlp;
  throw std::invalid_argument("unknown model '" + s + "' (expected small_cnn, tiny_mlp)");
}

inline std::string to_string(ModelKind k) { return k == ModelKind::small_cnn ? "small_cnn" : "tiny_mlp"; }

inline nn::Model<float> build_model(ModelKind kind, const Shape& input_shape,
                                    std::size_t num_classes, std::uint64_t seed) {
  return kind == ModelKind::small_cnn ? nn::build_small_cnn<float>(input_shape, num_classes, seed)
                                      : nn::build_tiny_mlp<float>(input_shape, num_classes, seed);
}

struct TrainRunConfig {
  std::size_t epochs = 1;
  std::size_t batch_size = 100;
  SpaPolicy policy;
  aug::AugPipeline pipeline;
  ModelKind model = ModelKind::small_cnn;
  double lr = 0.001;
  std::uint64_t shuffle_seed = 0;
  std::uint64_t aug_seed = 0;
  std::size_t eval_every = 1;
  std::set<std::size_t> histogram_epochs;
  std::size_t variance_window = 50;

  void validate() const {
    if (epochs < 1) throw std::invalid_argument("epochs must be >= 1");
    if (batch_size < 1) throw std::invalid_argument("batch_size must be >= 1");
    if (eval_every < 1) throw std::invalid_argument("eval_every must be >= 1");
    if (!(lr > 0.0)) throw std::invalid_argument("lr must be > 0");
    if (variance_window < 2) throw std::invalid_argument("variance_window must be >= 2");
    policy.validate();
  }
};

struct RunResult {
  metrics::MetricsLog log;
  metrics::RunSummary summary;
  std::vector<nn::NamedTensor> best_checkpoint;
  nn::Model<float> final_model;
};

inline std::string lambda_label(const SpaPolicy& p) {
  return metrics::format_number(p.effective_lambda());
}

/// Full training run for one initialization seed. Epochs are numbered from 1.
inline RunResult train_run(const TrainRunConfig& config, const data::Dataset& train,
                           const data::Dataset& test, std::uint64_t init_seed) {
  config.validate();
  if (train.size() < config.batch_size)
    throw std::invalid_argument("training set (" + std::to_string(train.size()) +
                                " samples) is smaller than one batch (" +
                                std::to_string(config.batch_size) + ")");
  if (test.size() == 0) throw std::invalid_argument("empty test set");

  RunResult r{{}, {to_string(config.policy.mode), lambda_label(config.policy), init_seed, 0.0, 0},
              {}, build_model(config.model, train.sample_shape(), train.num_classes(), init_seed)};
  auto& model = r.final_model;
  auto adam = nn::make_adam_state(model, nn::AdamConfig{config.lr});
  std::optional<double> best;

  for (std::size_t epoch = 1; epoch <= config.epochs; ++epoch) {
    const auto batches = data::make_batches(train.size(), config.batch_size, epoch, config.shuffle_seed);
    const bool histo = config.histogram_epochs.count(epoch) > 0;
    metrics::LossHistogram before, after;
    before.epoch = after.epoch = epoch;
    before.phase = metrics::Phase::before_aug;
    after.phase = metrics::Phase::after_aug;

    double loss_sum = 0.0;
    std::size_t n_aug = 0;
    for (std::size_t step = 0; step < batches.size(); ++step) {
      const Batch batch = data::gather_batch(train, batches[step]);
      const StepContext ctx{epoch, step, config.aug_seed, histo};
      auto out = train_minibatch(model, adam, batch, config.policy, config.pipeline, ctx);
      r.log.record_step(out.record);
      loss_sum += out.record.mean_minibatch_loss * static_cast<double>(batch.size());
      n_aug += out.mask.count;
      if (histo) {
        before.add(out.probe_losses);
        after.add(out.after_losses);
      }
    }
    if (histo) {
      r.log.record_histogram(before);
      r.log.record_histogram(after);
    }

    metrics::EpochRecord rec;
    rec.epoch = epoch;
    rec.mean_train_loss = loss_sum / static_cast<double>(train.size());
    rec.n_augmented_total = n_aug;
    const auto var = metrics::sliding_variance(r.log.step_losses(), config.variance_window);
    rec.loss_variance = var.empty() ? std::nullopt : var.back();
    if (epoch % config.eval_every == 0 || epoch == config.epochs) {
      const double acc = metrics::evaluate(model, test.images, test.labels);
      rec.test_accuracy = acc;
      if (!best || acc > *best) {
        best = acc;
        r.summary.best_accuracy = acc;
        r.summary.best_epoch = epoch;
        r.best_checkpoint = nn::model_tensors(model);
      }
    }
    r.log.record_epoch(rec);
  }
  return r;
}

/// Mean and standard error of best accuracy per (mode, lambda) group.
struct ComparisonRow {
  std::string mode;
  std::string lambda;
  std::size_t n_runs = 0;
  double mean_best_accuracy = 0.0;
  double standard_error = 0.0;
};

inline std::vector<ComparisonRow> compare_modes(const std::vector<metrics::RunSummary>& runs) {
  std::map<std::pair<std::string, std::string>, std::vector<double>> groups;
  std::vector<std::pair<std::string, std::string>> order;
  for (const auto& r : runs) {
    auto key = std::make_pair(r.mode, r.lambda);
    if (!groups.count(key)) order.push_back(key);
    groups[key].push_back(r.best_accuracy);
  }
  std::vector<ComparisonRow> rows;
  for (const auto& key : order) {
    const auto& v = groups[key];
    double mean = 0.0;
    for (double x : v) mean += x;
    mean /= static_cast<double>(v.size());
    double se = 0.0;
    if (v.size() > 1) {
      double ss = 0.0;
      for (double x : v) ss += (x - mean) * (x - mean);
      se = std::sqrt(ss / static_cast<double>(v.size() - 1)) / std::sqrt(static_cast<double>(v.size()));
    }
    rows.push_back({key.first, key.second, v.size(), mean, se});
  }
  return rows;
}

inline std::string comparison_csv(const std::vector<ComparisonRow>& rows) {
  std::string s = "mode,lambda,n_runs,mean_best_accuracy,standard_error\n";
  for (const auto& r : rows)
    s += r.mode + "," + r.lambda + "," + std::to_string(r.n_runs) + "," +
         metrics::format_number(r.mean_best_accuracy) + "," + metrics::format_number(r.standard_error) + "\n";
  return s;
}

}  // namespace spa

#endif  // SPA_SPA_CORE_HPP
