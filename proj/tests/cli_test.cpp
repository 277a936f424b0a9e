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
#include <sys/wait.h>

#include <array>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "spa/cli/commands.hpp"

namespace spa::cli {
namespace {

namespace fs = std::filesystem;

std::string key_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const ConfigError& e) {
    return e.key();
  }
  return "<no error>";
}

RunConfig resolve(const std::string& file, const KeyValues& flags = {},
                  Command cmd = Command::train) {
  return resolve_config(parse_key_values(file), flags, cmd);
}

// ---------------------------------------------------------------------------
// config resolution

TEST(Config, FlagOverridesFile) {
  const auto c = resolve("dataset = mnist\nmode = spa\nlambda = 0.1\npipeline = flip\nepochs = 2\n",
                         {{"lambda", "1"}});
  ASSERT_TRUE(c.lambda);
  EXPECT_EQ(*c.lambda, 1.0);
}

TEST(Config, NaWithPipelineRejectedNamingPipeline) {
  EXPECT_EQ(key_of([] { resolve("dataset = mnist\nmode = na\npipeline = flip\nepochs = 2\n"); }),
            "pipeline");
  EXPECT_EQ(key_of([] { resolve("dataset = mnist\nmode = ca\nepochs = 2\n"); }), "pipeline");
}

TEST(Config, LambdaRequiredExactlyForThresholdModes) {
  EXPECT_EQ(key_of([] { resolve("dataset = mnist\nmode = spa\npipeline = flip\nepochs = 2\n"); }),
            "lambda");
  EXPECT_EQ(key_of([] { resolve("dataset = mnist\nmode = ca\nlambda = 1\npipeline = flip\nepochs = 2\n"); }),
            "lambda");
  EXPECT_EQ(key_of([] { resolve("dataset = mnist\nmode = spa\nlambda = -1\npipeline = flip\nepochs = 2\n"); }),
            "lambda");
}

TEST(Config, ErrorsNameTheKey) {
  EXPECT_EQ(key_of([] { parse_key_values("dataset = mnist\nlearning_rate = 3\n"); }), "learning_rate");
  EXPECT_EQ(key_of([] { resolve("mode = na\nepochs = 2\n"); }), "dataset");
  EXPECT_EQ(key_of([] { resolve("dataset = imagenet\nmode = na\nepochs = 2\n"); }), "dataset");
  EXPECT_EQ(key_of([] { resolve("dataset = mnist\nmode = na\n"); }), "epochs");
  EXPECT_EQ(key_of([] { resolve("dataset = mnist\nmode = na\nepochs = two\n"); }), "epochs");
  EXPECT_EQ(key_of([] { resolve("dataset = mnist\nmode = na\nepochs = 1\nbatch_size = 0\n"); }), "batch_size");
  EXPECT_EQ(key_of([] { resolve("dataset = mnist\nmode = na\nepochs = 1\nlr = abc\n"); }), "lr");
  EXPECT_EQ(key_of([] { resolve("dataset = mnist\nmode = ca\nepochs = 1\npipeline = shear\n"); }), "pipeline");
  EXPECT_EQ(key_of([] { resolve("dataset = mnist\nmode = all\nepochs = 1\n"); }), "mode");
  EXPECT_EQ(key_of([] { resolve("dataset = mnist\nmode = na\nepochs = 1\nstratified = maybe\n"); }), "stratified");
  EXPECT_EQ(key_of([] { resolve("dataset = mnist\nmode = na\nepochs = 1\n", {{"bogus", "1"}}); }), "bogus");
  EXPECT_THROW(parse_key_values("dataset mnist\n"), std::invalid_argument);
}

TEST(Config, MinimalConfigEchoesDefaultsAndReparses) {
  const auto c = resolve("# minimal\ndataset = mnist   # comment\nmode = na\nepochs = 3\n");
  EXPECT_EQ(c.batch_size, 100u);
  EXPECT_EQ(c.lr, 0.001);
  EXPECT_EQ(c.eval_every, 1u);
  EXPECT_EQ(c.init_seeds, (std::vector<std::uint64_t>{0}));
  const auto echo = echo_config(c, Command::train);
  for (const char* line : {"batch_size = 100\n", "lr = 0.001\n", "eval_every = 1\n", "pipeline = none\n",
                           "mode = na\n", "epochs = 3\n", "variance_window = 50\n"})
    EXPECT_NE(echo.find(line), std::string::npos) << line;
  EXPECT_EQ(echo_config(resolve(echo), Command::train), echo);
}

TEST(Config, FullEchoRoundTrips) {
  const std::string text =
      "dataset = cifar10\nn_train = 1000\nn_test = 500\nsubset_seed = 4\nstratified = true\n"
      "model = tiny_mlp\npipeline = translation,rotation\nmode = random_match\nlambda = 0.25\n"
      "epochs = 7\nbatch_size = 50\nlr = 5e-04\ninit_seeds = 3,1,2\nshuffle_seed = 9\n"
      "aug_seed = 8\neval_every = 2\nhistogram_epochs = 1,7\nvariance_window = 20\n"
      "out_dir = /tmp/x\ndata_dir = /data\n";
  const auto c = resolve(text);
  EXPECT_EQ(c.lr, 0.0005);
  EXPECT_EQ(echo_config(c, Command::train), text);
}

TEST(Config, DataDirPrecedence) {
  const auto base = parse_key_values("dataset = mnist\nmode = na\nepochs = 1\n");
  EXPECT_EQ(resolve_config(base, {}, Command::train, "/env").data_dir, "/env");
  auto with = base;
  with["data_dir"] = "/cfg";
  EXPECT_EQ(resolve_config(with, {}, Command::train, "/env").data_dir, "/cfg");
  EXPECT_EQ(resolve_config(base, {{"data_dir", "/flag"}}, Command::train, "/env").data_dir, "/flag");
}

TEST(Config, SweepValidation) {
  const std::string base = "dataset = mnist\nepochs = 1\npipeline = flip\n";
  EXPECT_EQ(key_of([&] { resolve(base + "modes = spa,ca\n", {}, Command::sweep); }), "lambdas");
  EXPECT_EQ(key_of([&] { resolve(base + "modes = spa\nlambdas =\n", {}, Command::sweep); }), "lambdas");
  EXPECT_EQ(key_of([&] { resolve(base, {}, Command::sweep); }), "modes");
  EXPECT_EQ(key_of([] { resolve("dataset = mnist\nepochs = 1\nmodes = ca,na\n", {}, Command::sweep); }),
            "pipeline");
  const auto c = resolve(base + "modes = spa,ca,na\nlambdas = 0.01, 0.1, 1\n", {}, Command::sweep);
  EXPECT_EQ(c.lambdas, (std::vector<double>{0.01, 0.1, 1.0}));
  const auto echo = echo_config(c, Command::sweep);
  EXPECT_EQ(echo_config(resolve(echo, {}, Command::sweep), Command::sweep), echo);
}

TEST(Config, KebabFlags) {
  EXPECT_EQ(kebab("histogram_epochs"), "histogram-epochs");
  EXPECT_EQ(config_keys().size(), 22u);
}

// ---------------------------------------------------------------------------
// commands in-process

fs::path data_root() { return SPA_DATA_DIR; }

bool have_mnist() { return fs::exists(data_root() / "mnist" / "train-images-idx3-ubyte"); }

fs::path scratch(const std::string& name) {
  const auto p = fs::temp_directory_path() / ("spa_cli_test_" + name);
  fs::remove_all(p);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream f(p, std::ios::binary);
  std::stringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

RunConfig tiny_sweep(const fs::path& out) {
  return resolve_config(
      parse_key_values("dataset = mnist\nn_train = 200\nn_test = 100\nmodel = tiny_mlp\n"
                       "pipeline = flip\nepochs = 1\ninit_seeds = 1,0\nmodes = spa,ca,na\n"
                       "lambdas = 1,0.01,0.1\n"),
      {{"out_dir", out.string()}, {"data_dir", data_root().string()}}, Command::sweep);
}

TEST(Commands, SweepGridSummaryAndDeterminism) {
  if (!have_mnist()) GTEST_SKIP() << "no MNIST under " << data_root();
  const auto out = scratch("sweep");
  std::ostringstream sink;
  ASSERT_EQ(cmd_sweep(tiny_sweep(out / "a"), {false, 1, true}, sink, sink), kOk) << sink.str();
  ASSERT_EQ(cmd_sweep(tiny_sweep(out / "b"), {false, 2, true}, sink, sink), kOk) << sink.str();

  // Five (mode, lambda) groups, each with both seeds, sorted by mode, numeric lambda, seed.
  const auto summary = slurp(out / "a" / "summary.csv");
  std::vector<std::string> keys;
  std::istringstream in(summary);
  std::string line;
  std::getline(in, line);
  while (std::getline(in, line)) keys.push_back(line.substr(0, line.find(',', line.find(',') + 1) + 2));
  EXPECT_EQ(keys, (std::vector<std::string>{"ca,0,0", "ca,0,1", "na,inf,0", "na,inf,1", "spa,0.01,0",
                                            "spa,0.01,1", "spa,0.1,0", "spa,0.1,1", "spa,1,0", "spa,1,1"}));
  const auto comparison = slurp(out / "a" / "comparison.csv");
  EXPECT_EQ(std::count(comparison.begin(), comparison.end(), '\n'), 1 + 5);

  EXPECT_EQ(summary, slurp(out / "b" / "summary.csv"));
  EXPECT_EQ(comparison, slurp(out / "b" / "comparison.csv"));
  EXPECT_EQ(slurp(out / "a" / "spa_lambda_0.1" / "seed_1" / "steps.csv"),
            slurp(out / "b" / "spa_lambda_0.1" / "seed_1" / "steps.csv"));
  fs::remove_all(out);
}

TEST(Commands, TrainThenEvalReproducesBestAccuracy) {
  if (!have_mnist()) GTEST_SKIP() << "no MNIST under " << data_root();
  const auto out = scratch("train_eval");
  auto c = resolve_config(parse_key_values("dataset = mnist\nn_train = 200\nn_test = 100\n"
                                           "model = tiny_mlp\nmode = na\nepochs = 2\n"),
                          {{"out_dir", out.string()}, {"data_dir", data_root().string()}},
                          Command::train);
  std::ostringstream sink;
  ASSERT_EQ(cmd_train(c, {}, sink, sink), kOk) << sink.str();
  const auto resolved = slurp(out / "config.resolved");
  EXPECT_EQ(echo_config(resolve(resolved), Command::train), resolved);
  std::ostringstream eval_out;
  ASSERT_EQ(cmd_eval(out / "seed_0" / "best.ckpt", c, eval_out, sink), kOk);
  const auto summary = slurp(out / "summary.csv");
  const auto best = summary.substr(summary.find("na,inf,0,") + 9);
  EXPECT_EQ(eval_out.str(), "accuracy," + best.substr(0, best.find(',')) + "\n");
  fs::remove_all(out);
}

TEST(Commands, MissingDataIsRuntimeFailure) {
  const auto out = scratch("missing");
  auto c = resolve_config(parse_key_values("dataset = mnist\nmode = na\nepochs = 1\n"),
                          {{"out_dir", out.string()}, {"data_dir", "/nonexistent/spa"}}, Command::train);
  std::ostringstream sink;
  EXPECT_EQ(cmd_train(c, {}, sink, sink), kRuntime);
  EXPECT_NE(sink.str().find("/nonexistent/spa"), std::string::npos) << sink.str();
  fs::remove_all(out);
}

// ---------------------------------------------------------------------------
// the executable

struct Proc {
  int code = -1;
  std::string output;
};

Proc run(const std::string& args) {
  const std::string cmd = std::string(SPA_CLI_BINARY) + " " + args + " 2>&1";
  Proc p;
  FILE* f = popen(cmd.c_str(), "r");
  if (!f) return p;
  std::array<char, 4096> buf{};
  while (std::size_t n = fread(buf.data(), 1, buf.size(), f)) p.output.append(buf.data(), n);
  const int status = pclose(f);
  p.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return p;
}

TEST(Executable, SmokeTrainAndForceRefusal) {
  if (!have_mnist()) GTEST_SKIP() << "no MNIST under " << data_root();
  const auto out = scratch("exe_smoke");
  const std::string args = "train -q --dataset mnist --n-train 200 --model tiny_mlp --epochs 2 --mode na "
                           "--data-dir " + data_root().string() + " --out-dir " + out.string();
  const auto first = run(args);
  ASSERT_EQ(first.code, 0) << first.output;
  const auto epochs = slurp(out / "seed_0" / "epochs.csv");
  EXPECT_EQ(std::count(epochs.begin(), epochs.end(), '\n'), 3);

  const auto again = run(args);
  EXPECT_EQ(again.code, 1);
  EXPECT_NE(again.output.find("--force"), std::string::npos) << again.output;
  EXPECT_EQ(run(args + " --force").code, 0);
  fs::remove_all(out);
}

TEST(Executable, ConfigFileWithFlagOverride) {
  if (!have_mnist()) GTEST_SKIP() << "no MNIST under " << data_root();
  const auto out = scratch("exe_config");
  fs::create_directories(out);
  std::ofstream(out / "run.cfg") << "dataset = mnist\nn_train = 100\nn_test = 50\nmodel = tiny_mlp\n"
                                    "mode = spa\nlambda = 0.1\npipeline = flip\nepochs = 1\n";
  const auto p = run("train -q -c " + (out / "run.cfg").string() + " --lambda 1 --data-dir " +
                     data_root().string() + " --out-dir " + (out / "run").string());
  ASSERT_EQ(p.code, 0) << p.output;
  EXPECT_NE(slurp(out / "run" / "config.resolved").find("lambda = 1\n"), std::string::npos);
  fs::remove_all(out);
}

TEST(Executable, UsageErrorsExitOne) {
  const auto bad_dataset = run("train --dataset imagenet --mode na --epochs 1");
  EXPECT_EQ(bad_dataset.code, 1);
  EXPECT_NE(bad_dataset.output.find("'dataset'"), std::string::npos) << bad_dataset.output;
  EXPECT_EQ(run("sweep --dataset mnist --epochs 1 --pipeline flip --modes spa").code, 1);
  EXPECT_EQ(run("train --dataset mnist --mode na --epochs 1 --no-such-flag 3").code, 1);
  EXPECT_EQ(run("").code, 1);
  EXPECT_EQ(run("--help").code, 0);
}

TEST(Executable, EvalOfMissingCheckpointIsRuntimeFailure) {
  const auto p = run("eval /nonexistent/best.ckpt --dataset mnist --data-dir " + data_root().string());
  EXPECT_EQ(p.code, 2) << p.output;
}

}  // namespace
}  // namespace spa::cli
