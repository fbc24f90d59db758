// Copyright 2026 The rnnscope Authors.
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

#include "cli.h"

#include <algorithm>
#include <chrono>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "rnnscope/bptt.h"
#include "rnnscope/protocol.h"
#include "rnnscope/step_machine.h"
#include "rnnscope/trainer.h"
#ifdef RNNSCOPE_HAVE_SERVER
#include "rnnscope/server.h"
#endif

namespace rnnscope {
namespace {

constexpr double kGradCheckTolerance = 1e-4;

// Raw flag values; applied on top of the --config base.
struct ConfigFlags {
  std::string config = "default";
  std::string task;
  std::string cell;
  std::size_t layers = 0;
  std::size_t hidden = 0;
  std::size_t window = 0;
  std::size_t horizon = 0;
  double lr = 0.0;
  std::size_t batch = 0;
  std::size_t batches_per_epoch = 0;
  double noise = 0.0;
  std::uint64_t seed = 0;

  std::vector<CLI::Option*> options;
};

void add_config_flags(CLI::App* app, ConfigFlags& f) {
  app->add_option("--config", f.config,
                  "\"default\" or a JSON file of config keys")
      ->capture_default_str();
  f.options = {
      app->add_option("--task", f.task,
                      "sine|sawtooth|square|composite|abab|lorem"),
      app->add_option("--cell", f.cell, "vanilla|lstm"),
      app->add_option("--layers", f.layers, "stacked layers (1-7)"),
      app->add_option("--hidden", f.hidden, "hidden units per layer"),
      app->add_option("--window", f.window, "input window length"),
      app->add_option("--horizon", f.horizon, "predicted points"),
      app->add_option("--lr", f.lr, "learning rate"),
      app->add_option("--batch", f.batch, "batch size"),
      app->add_option("--batches-per-epoch", f.batches_per_epoch,
                      "batches per epoch"),
      app->add_option("--noise", f.noise, "noise amplitude in [0, 1]"),
      app->add_option("--seed", f.seed, "session seed"),
  };
}

bool given(const ConfigFlags& f, std::size_t i) {
  return f.options[i]->count() > 0;
}

NetworkConfig build_config(const ConfigFlags& f) {
  NetworkConfig c;
  if (f.config != "default") {
    std::ifstream in(f.config);
    if (!in) throw ConfigError("config", "cannot open " + f.config);
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(in);
    } catch (const nlohmann::json::parse_error& e) {
      throw ConfigError("config", f.config + ": " + e.what());
    }
    c = config_from_json(j, c);
  }
  if (given(f, 0)) {
    auto task = parse_task(f.task);
    if (!task) throw ConfigError("task", "unknown task '" + f.task + "'");
    c.task = *task;
  }
  if (given(f, 1)) {
    auto cell = parse_cell_kind(f.cell);
    if (!cell) throw ConfigError("cell", "unknown cell kind '" + f.cell + "'");
    c.cell_kind = *cell;
  }
  if (given(f, 2)) c.layer_count = f.layers;
  if (given(f, 3)) c.hidden = f.hidden;
  if (given(f, 4)) c.window = f.window;
  if (given(f, 5)) c.horizon = f.horizon;
  if (given(f, 6)) c.learning_rate = f.lr;
  if (given(f, 7)) c.batch_size = f.batch;
  if (given(f, 8)) c.batches_per_epoch = f.batches_per_epoch;
  if (given(f, 9)) c.noise_amp = f.noise;
  if (given(f, 10)) c.seed = f.seed;
  validate_config(c);
  return c;
}

int train(const NetworkConfig& config, std::size_t epochs,
          const std::string& csv_path, std::ostream& out, std::ostream& err) {
  std::ofstream file;
  std::ostream* sink = &out;
  if (!csv_path.empty()) {
    file.open(csv_path, std::ios::binary);
    if (!file) {
      err << "cannot write " << csv_path << "\n";
      return 1;
    }
    sink = &file;
  }
  TrainingSession session = create_session(config);
  *sink << history_csv_header() << "\n";
  for (std::size_t e = 0; e < epochs; ++e) {
    EpochReport report = run_epoch(session);
    if (report.diverged) {
      err << "diverged at epoch " << session.epoch + 1 << ": "
          << session.diverged_reason << "\n";
      return 3;
    }
    *sink << history_csv_row(session.history.back()) << "\n";
  }
  sink->flush();
  return 0;
}

int gradcheck(const NetworkConfig& config, double epsilon, std::ostream& out) {
  TrainingSession session = create_session(config);
  RngStream rng = session.rng;
  auto batches = draw_epoch_batches(session, rng);
  GradCheckOptions options;
  options.epsilon = epsilon;
  options.subsample_seed = config.seed;
  GradCheckReport report = grad_check(session.params, batches.front(),
                                      loss_kind_for(config.task), options);
  out << "max_relative_error," << format_double(report.max_relative_error)
      << "\n"
      << "coordinates_checked," << report.coordinates_checked << "\n"
      << "worst," << report.worst_tensor << "[" << report.worst_index << "]\n"
      << "worst_analytic," << format_double(report.worst_analytic) << "\n"
      << "worst_numeric," << format_double(report.worst_numeric) << "\n";
  return report.max_relative_error < kGradCheckTolerance ? 0 : 1;
}

int dump_plan(const NetworkConfig& config, std::size_t skip_epochs,
              bool events_only, const std::string& path, std::ostream& out,
              std::ostream& err) {
  TrainingSession session = create_session(config);
  for (std::size_t e = 0; e < skip_epochs; ++e) run_epoch(session);
  StepPlan plan = compile_epoch_plan(session);
  // Executing the plan fills the payloads of weights_updated and epoch_done.
  while (!plan.finished()) advance(plan, session);
  if (path.empty()) {
    write_plan_jsonl(out, plan, !events_only);
    return 0;
  }
  std::ofstream file(path, std::ios::binary);
  if (!file) {
    err << "cannot write " << path << "\n";
    return 1;
  }
  write_plan_jsonl(file, plan, !events_only);
  return 0;
}

int bench(const NetworkConfig& config, std::size_t epochs, double budget_ms,
          std::ostream& out) {
  using Clock = std::chrono::steady_clock;
  TrainingSession session = create_session(config);
  std::vector<double> ms;
  for (std::size_t e = 0; e < epochs; ++e) {
    const auto start = Clock::now();
    run_epoch(session);
    ms.push_back(
        std::chrono::duration<double, std::milli>(Clock::now() - start).count());
  }
  std::vector<double> sorted = ms;
  std::sort(sorted.begin(), sorted.end());
  const double median = sorted[sorted.size() / 2];
  out << "epochs," << epochs << "\n"
      << "epoch_ms_median," << format_double(median) << "\n"
      << "epoch_ms_max," << format_double(sorted.back()) << "\n"
      << "budget_ms," << format_double(budget_ms) << "\n";
  return median < budget_ms ? 0 : 1;
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out,
            std::ostream& err) {
  CLI::App app{"rnnscope: recurrent network training with an inspectable "
               "step machine"};
  app.require_subcommand(1);

  ConfigFlags train_flags, grad_flags, plan_flags, serve_flags, bench_flags;

  auto* train_cmd = app.add_subcommand("train", "train headless, print CSV");
  add_config_flags(train_cmd, train_flags);
  std::size_t train_epochs = 10;
  std::string csv_path;
  train_cmd->add_option("--epochs", train_epochs, "epochs to run")
      ->capture_default_str();
  train_cmd->add_option("--csv", csv_path, "write CSV here instead of stdout");

  auto* grad_cmd =
      app.add_subcommand("gradcheck", "compare BPTT with finite differences");
  add_config_flags(grad_cmd, grad_flags);
  double epsilon = 1e-5;
  grad_cmd->add_option("--epsilon", epsilon, "central difference step")
      ->capture_default_str();

  auto* plan_cmd =
      app.add_subcommand("dump-plan", "write one epoch's step events as JSONL");
  add_config_flags(plan_cmd, plan_flags);
  std::size_t skip_epochs = 0;
  bool events_only = false;
  std::string plan_path;
  plan_cmd->add_option("--after", skip_epochs, "train this many epochs first");
  plan_cmd->add_flag("--events-only", events_only, "omit payloads");
  plan_cmd->add_option("--out", plan_path, "output file (default stdout)");

  auto* serve_cmd =
      app.add_subcommand("serve", "WebSocket sessions and static files");
  add_config_flags(serve_cmd, serve_flags);
  std::string address = "127.0.0.1";
  std::uint16_t port = 8080;
  std::string static_dir;
  serve_cmd->add_option("--address", address, "bind address")
      ->capture_default_str();
  serve_cmd->add_option("--port", port, "bind port")->capture_default_str();
  serve_cmd->add_option("--static-dir", static_dir, "UI bundle directory");

  auto* bench_cmd = app.add_subcommand("bench", "time training epochs");
  add_config_flags(bench_cmd, bench_flags);
  std::size_t bench_epochs = 5;
  double budget_ms = 2000.0;
  bench_cmd->add_option("--epochs", bench_epochs, "epochs to time")
      ->capture_default_str()
      ->check(CLI::PositiveNumber);
  bench_cmd->add_option("--budget-ms", budget_ms,
                        "fail when the median epoch is slower")
      ->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e, out, err);
  }

  try {
    if (train_cmd->parsed()) {
      return train(build_config(train_flags), train_epochs, csv_path, out,
                   err);
    }
    if (grad_cmd->parsed()) {
      return gradcheck(build_config(grad_flags), epsilon, out);
    }
    if (plan_cmd->parsed()) {
      return dump_plan(build_config(plan_flags), skip_epochs, events_only,
                       plan_path, out, err);
    }
    if (bench_cmd->parsed()) {
      return bench(build_config(bench_flags), bench_epochs, budget_ms, out);
    }
    if (serve_cmd->parsed()) {
#ifdef RNNSCOPE_HAVE_SERVER
      ServerOptions options;
      options.address = address;
      options.port = port;
      options.static_dir = static_dir;
      options.defaults = build_config(serve_flags);
      Server server(options);
      err << "listening on " << address << ":" << server.port() << "\n";
      server.run();
      return 0;
#else
      err << "built without server support\n";
      return 1;
#endif
    }
  } catch (const ConfigError& e) {
    err << "invalid configuration: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  }
  return 1;
}

}  // namespace rnnscope
