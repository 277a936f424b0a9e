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

// Flat `key = value` run configuration. Command-line flags override file
// values; every key has a --kebab-case flag of the same name.

#ifndef SPA_CLI_CONFIG_HPP
#define SPA_CLI_CONFIG_HPP

#include <algorithm>
#include <charconv>
#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "spa/augmentation.hpp"
#include "spa/datasets.hpp"
#include "spa/metrics.hpp"
#include "spa/spa_core.hpp"

namespace spa::cli {

/// Configuration problem tied to one key.
class ConfigError : public std::invalid_argument {
 public:
  ConfigError(std::string key, const std::string& what)
      : std::invalid_argument("config key '" + key + "': " + what), key_(std::move(key)) {}
  const std::string& key() const { return key_; }

 private:
  std::string key_;
};

struct RunConfig {
  std::string dataset;
  std::size_t n_train = 0;  // 0 = full training split
  std::size_t n_test = 0;   // 0 = full test split
  std::uint64_t subset_seed = 0;
  bool stratified = false;
  ModelKind model = ModelKind::small_cnn;
  std::string pipeline;
  SelectionMode mode = SelectionMode::spa;
  std::optional<double> lambda;
  std::size_t epochs = 0;
  std::size_t batch_size = 100;
  double lr = 0.001;
  std::vector<std::uint64_t> init_seeds{0};
  std::uint64_t shuffle_seed = 0;
  std::uint64_t aug_seed = 0;
  std::size_t eval_every = 1;
  std::vector<std::size_t> histogram_epochs;
  std::size_t variance_window = 50;
  std::string out_dir = "spa_out";
  std::string data_dir;
  // sweep only
  std::vector<SelectionMode> modes;
  std::vector<double> lambdas;
};

/// Every recognised key, in echo order.
inline const std::vector<std::string>& config_keys() {
  static const std::vector<std::string> keys{
      "dataset",   "n_train",      "n_test",     "subset_seed",      "stratified",
      "model",     "pipeline",     "mode",       "lambda",           "epochs",
      "batch_size", "lr",          "init_seeds", "shuffle_seed",     "aug_seed",
      "eval_every", "histogram_epochs", "variance_window", "out_dir", "data_dir",
      "modes",     "lambdas"};
  return keys;
}

inline std::string kebab(std::string key) {
  std::replace(key.begin(), key.end(), '_', '-');
  return key;
}

using KeyValues = std::map<std::string, std::string>;

inline std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

/// Parses `key = value` lines; `#` starts a comment.
inline KeyValues parse_key_values(const std::string& text, const std::string& origin = "config") {
  KeyValues kv;
  std::istringstream in(text);
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw std::invalid_argument(origin + ":" + std::to_string(line_no) +
                                  ": expected 'key = value'");
    const std::string key = trim(line.substr(0, eq));
    if (std::find(config_keys().begin(), config_keys().end(), key) == config_keys().end())
      throw ConfigError(key, "unknown key");
    kv[key] = trim(line.substr(eq + 1));
  }
  return kv;
}

inline KeyValues read_config_file(const std::filesystem::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot open config file " + path.string());
  std::stringstream ss;
  ss << f.rdbuf();
  return parse_key_values(ss.str(), path.string());
}

namespace detail {

inline std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string tok;
  while (std::getline(ss, tok, ',')) {
    tok = trim(tok);
    if (!tok.empty()) out.push_back(tok);
  }
  return out;
}

template <typename Int>
Int parse_uint(const std::string& key, const std::string& v) {
  Int out{};
  const auto* end = v.data() + v.size();
  auto [p, ec] = std::from_chars(v.data(), end, out);
  if (v.empty() || ec != std::errc{} || p != end)
    throw ConfigError(key, "expected a non-negative integer, got '" + v + "'");
  return out;
}

inline double parse_double(const std::string& key, const std::string& v) {
  if (v == "inf" || v == "infinity") return std::numeric_limits<double>::infinity();
  double out{};
  const auto* end = v.data() + v.size();
  auto [p, ec] = std::from_chars(v.data(), end, out);
  if (v.empty() || ec != std::errc{} || p != end)
    throw ConfigError(key, "expected a number, got '" + v + "'");
  return out;
}

inline bool parse_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "no") return false;
  throw ConfigError(key, "expected true/false, got '" + v + "'");
}

template <typename T>
std::string join(const std::vector<T>& v, auto&& fmt) {
  std::string s;
  for (const auto& x : v) s += (s.empty() ? "" : ",") + fmt(x);
  return s;
}

}  // namespace detail

enum class Command { train, sweep };

/// Builds a validated RunConfig from file values overridden by flag values.
/// `env_data_dir` stands in for SPA_DATA_DIR (config wins over it).
inline RunConfig resolve_config(const KeyValues& file, const KeyValues& flags, Command command,
                                std::optional<std::string> env_data_dir = std::nullopt) {
  KeyValues kv = file;
  for (const auto& [k, v] : flags) {
    if (std::find(config_keys().begin(), config_keys().end(), k) == config_keys().end())
      throw ConfigError(k, "unknown key");
    kv[k] = v;
  }

  RunConfig c;
  auto has = [&](const char* k) { return kv.count(k) > 0; };
  auto wrap = [&](const char* key, auto&& fn) {
    if (!has(key)) return;
    try {
      fn(kv.at(key));
    } catch (const ConfigError&) {
      throw;
    } catch (const std::exception& e) {
      throw ConfigError(key, e.what());
    }
  };
  using detail::parse_uint;

  if (!has("dataset")) throw ConfigError("dataset", "required");
  c.dataset = kv.at("dataset");
  if (!data::is_known_dataset(c.dataset))
    throw ConfigError("dataset", "unknown dataset '" + c.dataset + "'");
  wrap("n_train", [&](auto& v) { c.n_train = parse_uint<std::size_t>("n_train", v); });
  wrap("n_test", [&](auto& v) { c.n_test = parse_uint<std::size_t>("n_test", v); });
  wrap("subset_seed", [&](auto& v) { c.subset_seed = parse_uint<std::uint64_t>("subset_seed", v); });
  wrap("stratified", [&](auto& v) { c.stratified = detail::parse_bool("stratified", v); });
  wrap("model", [&](auto& v) { c.model = parse_model_kind(v); });
  wrap("pipeline", [&](auto& v) { c.pipeline = v == "none" ? "" : v; });
  if (!c.pipeline.empty()) wrap("pipeline", [&](auto&) { aug::AugPipeline::parse(c.pipeline); });
  if (command == Command::train && !has("mode")) throw ConfigError("mode", "required");
  wrap("mode", [&](auto& v) { c.mode = parse_selection_mode(v); });
  wrap("lambda", [&](auto& v) {
    c.lambda = detail::parse_double("lambda", v);
    if (!(*c.lambda >= 0.0)) throw ConfigError("lambda", "must be >= 0");
  });
  if (!has("epochs")) throw ConfigError("epochs", "required");
  wrap("epochs", [&](auto& v) { c.epochs = parse_uint<std::size_t>("epochs", v); });
  if (c.epochs < 1) throw ConfigError("epochs", "must be >= 1");
  wrap("batch_size", [&](auto& v) { c.batch_size = parse_uint<std::size_t>("batch_size", v); });
  if (c.batch_size < 1) throw ConfigError("batch_size", "must be >= 1");
  wrap("lr", [&](auto& v) { c.lr = detail::parse_double("lr", v); });
  if (!(c.lr > 0.0)) throw ConfigError("lr", "must be > 0");
  wrap("init_seeds", [&](auto& v) {
    c.init_seeds.clear();
    for (const auto& t : detail::split_list(v)) c.init_seeds.push_back(parse_uint<std::uint64_t>("init_seeds", t));
    if (c.init_seeds.empty()) throw ConfigError("init_seeds", "empty seed list");
  });
  wrap("shuffle_seed", [&](auto& v) { c.shuffle_seed = parse_uint<std::uint64_t>("shuffle_seed", v); });
  wrap("aug_seed", [&](auto& v) { c.aug_seed = parse_uint<std::uint64_t>("aug_seed", v); });
  wrap("eval_every", [&](auto& v) { c.eval_every = parse_uint<std::size_t>("eval_every", v); });
  if (c.eval_every < 1) throw ConfigError("eval_every", "must be >= 1");
  wrap("histogram_epochs", [&](auto& v) {
    for (const auto& t : detail::split_list(v))
      c.histogram_epochs.push_back(parse_uint<std::size_t>("histogram_epochs", t));
  });
  wrap("variance_window", [&](auto& v) { c.variance_window = parse_uint<std::size_t>("variance_window", v); });
  if (c.variance_window < 2) throw ConfigError("variance_window", "must be >= 2");
  wrap("out_dir", [&](auto& v) { c.out_dir = v; });
  if (c.out_dir.empty()) throw ConfigError("out_dir", "must not be empty");
  if (has("data_dir")) c.data_dir = kv.at("data_dir");
  else if (env_data_dir) c.data_dir = *env_data_dir;
  wrap("modes", [&](auto& v) {
    for (const auto& t : detail::split_list(v)) c.modes.push_back(parse_selection_mode(t));
  });
  wrap("lambdas", [&](auto& v) {
    for (const auto& t : detail::split_list(v)) {
      const double l = detail::parse_double("lambdas", t);
      if (!(l >= 0.0)) throw ConfigError("lambdas", "values must be >= 0");
      c.lambdas.push_back(l);
    }
  });

  if (command == Command::train) {
    const bool thresholded = c.mode == SelectionMode::spa || c.mode == SelectionMode::random_match;
    if (thresholded && !c.lambda) throw ConfigError("lambda", "required for mode " + to_string(c.mode));
    if (!thresholded && c.lambda)
      throw ConfigError("lambda", "only valid for modes spa and random_match");
    if (c.mode == SelectionMode::na && !c.pipeline.empty())
      throw ConfigError("pipeline", "must be empty for mode na");
    if (c.mode != SelectionMode::na && c.pipeline.empty())
      throw ConfigError("pipeline", "required for mode " + to_string(c.mode));
  } else {
    if (c.modes.empty()) throw ConfigError("modes", "sweep needs at least one mode");
    const bool needs_lambda = std::any_of(c.modes.begin(), c.modes.end(), [](SelectionMode m) {
      return m == SelectionMode::spa || m == SelectionMode::random_match;
    });
    if (needs_lambda && c.lambdas.empty())
      throw ConfigError("lambdas", "modes spa/random_match need a non-empty lambda list");
    const bool needs_pipeline = std::any_of(c.modes.begin(), c.modes.end(),
                                            [](SelectionMode m) { return m != SelectionMode::na; });
    if (needs_pipeline && c.pipeline.empty())
      throw ConfigError("pipeline", "required when sweeping augmenting modes");
  }
  return c;
}

/// `key = value` echo of every key; parsing it back reproduces the config.
inline std::string echo_config(const RunConfig& c, Command command) {
  using metrics::format_number;
  std::vector<std::pair<std::string, std::string>> kv{
      {"dataset", c.dataset},
      {"n_train", std::to_string(c.n_train)},
      {"n_test", std::to_string(c.n_test)},
      {"subset_seed", std::to_string(c.subset_seed)},
      {"stratified", c.stratified ? "true" : "false"},
      {"model", to_string(c.model)},
      {"pipeline", c.pipeline.empty() ? "none" : c.pipeline},
  };
  if (command == Command::train) {
    kv.emplace_back("mode", to_string(c.mode));
    if (c.lambda) kv.emplace_back("lambda", format_number(*c.lambda));
  }
  kv.insert(kv.end(), {
      {"epochs", std::to_string(c.epochs)},
      {"batch_size", std::to_string(c.batch_size)},
      {"lr", format_number(c.lr)},
      {"init_seeds", detail::join(c.init_seeds, [](auto v) { return std::to_string(v); })},
      {"shuffle_seed", std::to_string(c.shuffle_seed)},
      {"aug_seed", std::to_string(c.aug_seed)},
      {"eval_every", std::to_string(c.eval_every)},
      {"histogram_epochs", detail::join(c.histogram_epochs, [](auto v) { return std::to_string(v); })},
      {"variance_window", std::to_string(c.variance_window)},
      {"out_dir", c.out_dir},
      {"data_dir", c.data_dir},
  });
  if (command == Command::sweep) {
    kv.emplace_back("modes", detail::join(c.modes, [](auto m) { return to_string(m); }));
    kv.emplace_back("lambdas", detail::join(c.lambdas, [](auto l) { return format_number(l); }));
  }
  std::string s;
  for (const auto& [k, v] : kv) s += k + " = " + v + "\n";
  return s;
}

/// TrainRunConfig for one grid cell.
inline TrainRunConfig make_run_config(const RunConfig& c, SpaPolicy policy) {
  TrainRunConfig t;
  t.epochs = c.epochs;
  t.batch_size = c.batch_size;
  t.policy = policy;
  t.pipeline = policy.mode == SelectionMode::na ? aug::AugPipeline{} : aug::AugPipeline::parse(c.pipeline);
  t.model = c.model;
  t.lr = c.lr;
  t.shuffle_seed = c.shuffle_seed;
  t.aug_seed = c.aug_seed;
  t.eval_every = c.eval_every;
  t.histogram_epochs.insert(c.histogram_epochs.begin(), c.histogram_epochs.end());
  t.variance_window = c.variance_window;
  return t;
}

}  // namespace spa::cli

#endif  // SPA_CLI_CONFIG_HPP
