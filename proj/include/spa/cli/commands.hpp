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

#ifndef SPA_CLI_COMMANDS_HPP
#define SPA_CLI_COMMANDS_HPP

#include <algorithm>
#include <atomic>
#include <exception>
#include <filesystem>
#include <iostream>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

#if defined(__GLIBC__)
#include <malloc.h>
#endif

#include "spa/cli/config.hpp"
#include "spa/datasets.hpp"
#include "spa/metrics.hpp"
#include "spa/nn/checkpoint.hpp"
#include "spa/spa_core.hpp"

namespace spa::cli {

enum ExitCode : int { kOk = 0, kUsage = 1, kRuntime = 2 };

struct CommandOptions {
  bool force = false;
  std::size_t jobs = 1;
  bool quiet = false;
};

/// Keeps large activation buffers on the heap instead of fresh mmap pages;
/// training allocates and frees multi-megabyte tensors every layer.
inline void tune_allocator() {
#if defined(__GLIBC__)
  mallopt(M_MMAP_THRESHOLD, 1 << 30);
  mallopt(M_TRIM_THRESHOLD, 1 << 30);
  mallopt(M_TOP_PAD, 256 << 20);
#endif
}

/// Training and test splits after n_train / n_test subsetting.
inline data::TrainTest load_data(const RunConfig& c) {
  if (c.data_dir.empty())
    throw std::runtime_error("no data directory: set data_dir or SPA_DATA_DIR");
  auto tt = data::load_named(c.dataset, c.data_dir);
  if (c.n_train > 0) tt.train = data::subsample(tt.train, {c.n_train, c.subset_seed, c.stratified});
  if (c.n_test > 0) tt.test = data::subsample(tt.test, {c.n_test, c.subset_seed, false});
  return tt;
}

namespace detail {

inline void prepare_out_dir(const std::filesystem::path& dir, bool force) {
  namespace fs = std::filesystem;
  if (fs::exists(dir) && !fs::is_directory(dir))
    throw ConfigError("out_dir", dir.string() + " exists and is not a directory");
  if (fs::exists(dir) && !fs::is_empty(dir)) {
    if (!force) throw ConfigError("out_dir", dir.string() + " is not empty (use --force to overwrite)");
    fs::remove_all(dir);
  }
  fs::create_directories(dir);
}

inline std::string seed_dir(std::uint64_t seed) { return "seed_" + std::to_string(seed); }

inline void write_run(const RunResult& r, const std::filesystem::path& dir) {
  metrics::write_reports(r.log, std::span(&r.summary, 1), dir);
  if (!r.best_checkpoint.empty()) nn::write_checkpoint(dir / "best.ckpt", r.best_checkpoint);
}

inline void sort_summaries(std::vector<metrics::RunSummary>& rows) {
  auto num = [](const std::string& l) { return l == "inf" ? std::numeric_limits<double>::infinity() : std::stod(l); };
  std::sort(rows.begin(), rows.end(), [&](const auto& a, const auto& b) {
    if (a.mode != b.mode) return a.mode < b.mode;
    if (a.lambda != b.lambda) return num(a.lambda) < num(b.lambda);
    return a.seed < b.seed;
  });
}

inline std::string cell_dir(const SpaPolicy& p) {
  if (p.mode == SelectionMode::ca || p.mode == SelectionMode::na) return to_string(p.mode);
  return to_string(p.mode) + "_lambda_" + lambda_label(p);
}

template <typename Fn>
int guarded(std::ostream& err, Fn&& fn) {
  try {
    return fn();
  } catch (const ConfigError& e) {
    err << "error: " << e.what() << "\n";
    return kUsage;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kRuntime;
  }
}

}  // namespace detail

/// One train_run per init seed under out_dir/seed_<s>/, plus a combined
/// summary.csv and config.resolved at the top level.
inline int cmd_train(const RunConfig& c, const CommandOptions& opt, std::ostream& out = std::cout,
                     std::ostream& err = std::cerr) {
  return detail::guarded(err, [&] {
    const std::filesystem::path root = c.out_dir;
    detail::prepare_out_dir(root, opt.force);
    metrics::detail::write_text(root / "config.resolved", echo_config(c, Command::train));
    const auto tt = load_data(c);
    SpaPolicy policy{c.mode, c.lambda.value_or(0.0)};
    const auto run_cfg = make_run_config(c, policy);
    std::vector<metrics::RunSummary> rows;
    for (auto seed : c.init_seeds) {
      auto r = train_run(run_cfg, tt.train, tt.test, seed);
      detail::write_run(r, root / detail::seed_dir(seed));
      if (!opt.quiet)
        out << r.summary.mode << " lambda=" << r.summary.lambda << " seed=" << seed
            << " best_accuracy=" << metrics::format_number(r.summary.best_accuracy)
            << " best_epoch=" << r.summary.best_epoch << "\n";
      rows.push_back(r.summary);
    }
    detail::sort_summaries(rows);
    metrics::detail::write_text(root / "summary.csv", metrics::summary_csv(rows));
    return static_cast<int>(kOk);
  });
}

/// Grid over modes x lambdas x init seeds. ca and na ignore the lambda list.
/// Subset, shuffle and augmentation seeds are shared by every cell.
inline int cmd_sweep(const RunConfig& c, const CommandOptions& opt, std::ostream& out = std::cout,
                     std::ostream& err = std::cerr) {
  return detail::guarded(err, [&] {
    const std::filesystem::path root = c.out_dir;
    detail::prepare_out_dir(root, opt.force);
    metrics::detail::write_text(root / "config.resolved", echo_config(c, Command::sweep));
    const auto tt = load_data(c);

    std::vector<SpaPolicy> policies;
    for (auto m : c.modes) {
      if (m == SelectionMode::ca || m == SelectionMode::na) {
        policies.push_back({m, 0.0});
      } else {
        for (double l : c.lambdas) policies.push_back({m, l});
      }
    }
    struct Cell {
      SpaPolicy policy;
      std::uint64_t seed;
    };
    std::vector<Cell> cells;
    for (const auto& p : policies)
      for (auto s : c.init_seeds) cells.push_back({p, s});

    std::vector<metrics::RunSummary> rows(cells.size());
    std::vector<std::exception_ptr> errors(cells.size());
    std::atomic<std::size_t> next{0};
    std::mutex out_mu;
    auto worker = [&] {
      for (std::size_t i = next++; i < cells.size(); i = next++) {
        try {
          const auto& cell = cells[i];
          auto r = train_run(make_run_config(c, cell.policy), tt.train, tt.test, cell.seed);
          detail::write_run(r, root / detail::cell_dir(cell.policy) / detail::seed_dir(cell.seed));
          rows[i] = r.summary;
          if (!opt.quiet) {
            std::lock_guard lock(out_mu);
            out << r.summary.mode << " lambda=" << r.summary.lambda << " seed=" << cell.seed
                << " best_accuracy=" << metrics::format_number(r.summary.best_accuracy) << "\n";
          }
        } catch (...) {
          errors[i] = std::current_exception();
        }
      }
    };
    const std::size_t n_threads = std::clamp<std::size_t>(opt.jobs, 1, std::max<std::size_t>(cells.size(), 1));
    std::vector<std::thread> pool;
    for (std::size_t t = 1; t < n_threads; ++t) pool.emplace_back(worker);
    worker();
    for (auto& t : pool) t.join();
    for (auto& e : errors)
      if (e) std::rethrow_exception(e);

    detail::sort_summaries(rows);
    metrics::detail::write_text(root / "summary.csv", metrics::summary_csv(rows));
    metrics::detail::write_text(root / "comparison.csv", comparison_csv(compare_modes(rows)));
    return static_cast<int>(kOk);
  });
}

/// Test accuracy of a saved checkpoint.
inline int cmd_eval(const std::filesystem::path& checkpoint, const RunConfig& c,
                    std::ostream& out = std::cout, std::ostream& err = std::cerr) {
  return detail::guarded(err, [&] {
    const auto model = nn::model_from_tensors(nn::read_checkpoint(checkpoint));
    const auto tt = load_data(c);
    if (model.input_shape != tt.test.sample_shape() || model.num_classes != tt.test.num_classes())
      throw std::runtime_error("checkpoint " + checkpoint.string() + " expects input " +
                               shape_str(model.input_shape) + " and " +
                               std::to_string(model.num_classes) + " classes; dataset '" +
                               c.dataset + "' does not match");
    const double acc = metrics::evaluate(model, tt.test.images, tt.test.labels);
    out << "accuracy," << metrics::format_number(acc) << "\n";
    return static_cast<int>(kOk);
  });
}

}  // namespace spa::cli

#endif  // SPA_CLI_COMMANDS_HPP
