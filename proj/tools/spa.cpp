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

// spa train|sweep|eval. Every config key is also a --kebab-case flag.

#include <cstdlib>
#include <iostream>
#include <map>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "spa/cli/commands.hpp"

namespace {

struct Invocation {
  std::string config_path;
  std::map<std::string, std::string> flag_values;
  spa::cli::CommandOptions options;
};

void add_key_flags(CLI::App* cmd, Invocation& inv) {
  cmd->add_option("-c,--config", inv.config_path, "key = value config file");
  for (const auto& key : spa::cli::config_keys())
    cmd->add_option_function<std::string>(
        "--" + spa::cli::kebab(key), [&inv, key](const std::string& v) { inv.flag_values[key] = v; },
        "overrides config key " + key);
}

std::optional<std::string> env_data_dir() {
  if (const char* v = std::getenv("SPA_DATA_DIR"); v && *v) return std::string(v);
  return std::nullopt;
}

int run_config_command(const Invocation& inv, spa::cli::Command command) {
  using namespace spa::cli;
  RunConfig config;
  try {
    KeyValues file;
    if (!inv.config_path.empty()) file = read_config_file(inv.config_path);
    config = resolve_config(file, inv.flag_values, command, env_data_dir());
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kUsage;
  }
  return command == Command::train ? cmd_train(config, inv.options) : cmd_sweep(config, inv.options);
}

}  // namespace

int main(int argc, char** argv) {
  spa::cli::tune_allocator();
  CLI::App app{"Self-paced augmentation training harness"};
  app.require_subcommand(1);

  Invocation train_inv, sweep_inv;
  auto* train = app.add_subcommand("train", "train one configuration for each init seed");
  add_key_flags(train, train_inv);
  train->add_flag("--force", train_inv.options.force, "overwrite a non-empty out_dir");
  train->add_flag("-q,--quiet", train_inv.options.quiet, "no per-run progress lines");

  auto* sweep = app.add_subcommand("sweep", "grid over modes x lambdas x init seeds");
  add_key_flags(sweep, sweep_inv);
  sweep->add_flag("--force", sweep_inv.options.force, "overwrite a non-empty out_dir");
  sweep->add_flag("-q,--quiet", sweep_inv.options.quiet, "no per-run progress lines");
  sweep->add_option("-j,--jobs", sweep_inv.options.jobs, "grid cells trained in parallel")
      ->check(CLI::PositiveNumber);

  std::string checkpoint, eval_dataset, eval_data_dir;
  std::size_t eval_n_test = 0;
  std::uint64_t eval_subset_seed = 0;
  auto* eval = app.add_subcommand("eval", "test accuracy of a checkpoint");
  eval->add_option("checkpoint", checkpoint, "checkpoint file")->required();
  eval->add_option("--dataset", eval_dataset, "dataset name")->required();
  eval->add_option("--data-dir", eval_data_dir, "data root (default $SPA_DATA_DIR)");
  eval->add_option("--n-test", eval_n_test, "evaluate on a test subset (0 = full)");
  eval->add_option("--subset-seed", eval_subset_seed, "seed for the test subset");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : spa::cli::kUsage;
  }

  if (train->parsed()) return run_config_command(train_inv, spa::cli::Command::train);
  if (sweep->parsed()) return run_config_command(sweep_inv, spa::cli::Command::sweep);

  spa::cli::RunConfig config;
  config.dataset = eval_dataset;
  if (!spa::data::is_known_dataset(eval_dataset)) {
    std::cerr << "error: config key 'dataset': unknown dataset '" << eval_dataset << "'\n";
    return spa::cli::kUsage;
  }
  config.data_dir = !eval_data_dir.empty() ? eval_data_dir : env_data_dir().value_or("");
  config.n_test = eval_n_test;
  config.subset_seed = eval_subset_seed;
  return spa::cli::cmd_eval(checkpoint, config);
}
