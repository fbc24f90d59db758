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

// Headless acceptance run. Prints one PASS/FAIL line per criterion and exits
// non-zero if any fails.
//
//   acceptance <path to rnnscope binary> [--known-fail name]...
//
// A criterion listed with --known-fail still prints FAIL, marked as known,
// and does not affect the exit status. If it starts passing, the exit status
// is non-zero so the list gets updated.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "oracles.h"
#include "rnnscope/bptt.h"
#include "rnnscope/step_machine.h"
#include "rnnscope/trainer.h"

namespace rnnscope {
namespace {

using Clock = std::chrono::steady_clock;

constexpr double kGradTolerance = 1e-4;
constexpr double kGradEpsilon = 1e-5;
constexpr double kGradBudgetSeconds = 60.0;
constexpr double kConvergenceRatio = 0.1;
constexpr std::size_t kConvergenceEpochs = 50;
constexpr double kEpochBudgetMs = 2000.0;
constexpr double kValueTolerance = 1e-12;
constexpr double kPeriodTolerance = 1e-9;

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(double v) {
  std::ostringstream s;
  s.precision(4);
  s << v;
  return s.str();
}

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

// 20 configs: cell alternates, every other one is a text task, so both cell
// kinds meet both losses.
Outcome gradient_correctness() {
  std::mt19937_64 gen(2024);
  const Task functions[] = {Task::kSine, Task::kSawtooth, Task::kSquare,
                            Task::kComposite};
  const Task texts[] = {Task::kAbab, Task::kLorem};
  double worst = 0.0;
  std::string worst_where;
  const auto start = Clock::now();
  for (int i = 0; i < 20; ++i) {
    NetworkConfig c;
    c.cell_kind = i % 2 ? CellKind::kLstm : CellKind::kVanilla;
    c.task = (i / 2) % 2 ? texts[gen() % 2] : functions[gen() % 4];
    c.layer_count = 1 + gen() % 2;
    c.hidden = 1 + gen() % 8;
    c.window = 2 + gen() % 6;
    c.horizon = 1 + gen() % (10 - c.window + 1);
    c.batch_size = 2;
    c.batches_per_epoch = 1;
    c.seed = gen();
    TrainingSession s = create_session(c);
    RngStream rng = s.rng;
    const auto batches = draw_epoch_batches(s, rng);
    GradCheckOptions options;
    options.epsilon = kGradEpsilon;
    options.subsample_seed = c.seed;
    const GradCheckReport r =
        grad_check(s.params, batches.front(), loss_kind_for(c.task), options);
    if (!(r.max_relative_error <= worst)) {
      worst = r.max_relative_error;
      worst_where = std::string(cell_kind_name(c.cell_kind)) + "/" +
                    std::string(task_name(c.task)) + " " + r.worst_tensor;
    }
  }
  const double elapsed = seconds_since(start);
  return {worst < kGradTolerance && elapsed < kGradBudgetSeconds,
          "max rel error " + fmt(worst) + " (" + worst_where + "), " +
              fmt(elapsed) + " s"};
}

Outcome replay_equivalence() {
  std::mt19937_64 gen(77);
  int mismatches = 0;
  for (int i = 0; i < 10; ++i) {
    NetworkConfig c;
    c.seed = gen();
    c.cell_kind = i % 3 ? CellKind::kLstm : CellKind::kVanilla;
    c.layer_count = 1 + i % 3;
    c.task = i % 4 == 3 ? Task::kAbab : Task::kSine;
    c.batches_per_epoch = 4;
    TrainingSession stepped = create_session(c);
    TrainingSession direct = stepped;
    for (int e = 0; e < 2; ++e) {
      StepPlan plan = compile_epoch_plan(stepped);
      while (!plan.finished()) advance(plan, stepped);
      run_epoch(direct);
    }
    const bool same = stepped.params == direct.params &&
                      stepped.opt == direct.opt &&
                      stepped.history == direct.history &&
                      stepped.rng == direct.rng;
    mismatches += !same;
  }
  return {mismatches == 0, std::to_string(10 - mismatches) + "/10 seeds identical"};
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::stringstream s;
  s << in.rdbuf();
  return s.str();
}

int run_binary(const std::string& binary, const std::string& args,
               const std::filesystem::path& out) {
  const std::string command =
      "\"" + binary + "\" " + args + " > \"" + out.string() + "\" 2>/dev/null";
  const int status = std::system(command.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

Outcome determinism(const std::string& binary) {
  const auto dir = std::filesystem::temp_directory_path();
  const auto a = dir / "rnnscope_accept_a.csv";
  const auto b = dir / "rnnscope_accept_b.csv";
  const std::string args = "train --task sine --epochs 50 --seed 7";
  const int ca = run_binary(binary, args, a);
  const int cb = run_binary(binary, args, b);
  const std::string ta = read_file(a), tb = read_file(b);
  std::filesystem::remove(a);
  std::filesystem::remove(b);
  const std::size_t rows = std::count(ta.begin(), ta.end(), '\n');
  return {ca == 0 && cb == 0 && !ta.empty() && ta == tb && rows == 51,
          std::to_string(rows) + " lines, " + (ta == tb ? "identical" : "differ")};
}

// Passes when the validation loss drops below 10% of its epoch-1 value at
// some epoch within the first 50.
Outcome convergence() {
  const Task tasks[] = {Task::kSine, Task::kSawtooth, Task::kSquare,
                        Task::kComposite};
  int ok = 0;
  std::string detail;
  for (Task task : tasks) {
    for (std::uint64_t seed = 1; seed <= 3; ++seed) {
      NetworkConfig c;
      c.task = task;
      c.seed = seed;
      TrainingSession s = create_session(c);
      std::size_t hit = 0;
      for (std::size_t e = 1; e <= kConvergenceEpochs && !s.diverged; ++e) {
        run_epoch(s);
        const double ratio =
            s.history.back().validation_loss / s.history.front().validation_loss;
        if (!hit && ratio < kConvergenceRatio) hit = e;
      }
      ok += hit > 0;
      detail += " " + std::string(task_name(task)) + "/" +
                std::to_string(seed) + "@" +
                (hit ? std::to_string(hit) : std::string("-"));
    }
  }
  return {ok == 12, std::to_string(ok) + "/12 runs, first epoch below 10%:" +
                        detail};
}

Outcome epoch_budget(const std::string& binary) {
  const auto out = std::filesystem::temp_directory_path() / "rnnscope_accept_bench.csv";
  const int code = run_binary(binary, "bench --epochs 5", out);
  const std::string text = read_file(out);
  std::filesystem::remove(out);
  const std::string key = "epoch_ms_median,";
  const auto pos = text.find(key);
  if (pos == std::string::npos) return {false, "bench printed no median"};
  const double median = std::stod(text.substr(pos + key.size()));
  return {code == 0 && median < kEpochBudgetMs,
          "median " + fmt(median) + " ms per epoch"};
}

Outcome generator_fidelity() {
  std::mt19937_64 gen(8);
  std::uniform_real_distribution<double> dist(-100.0, 100.0);
  const std::pair<FunctionKind, std::function<double(double)>> forms[] = {
      {FunctionKind::kSine, oracle::sine},
      {FunctionKind::kSawtooth, oracle::sawtooth},
      {FunctionKind::kSquare, oracle::square},
      {FunctionKind::kComposite, oracle::composite}};
  const double pi = std::numbers::pi;
  const double periods[] = {2 * pi, pi, 4.0, 4 * pi / 3};
  double worst_value = 0.0, worst_period = 0.0;
  for (std::size_t k = 0; k < 4; ++k) {
    const auto& [kind, form] = forms[k];
    const double period = periods[k];
    if (function_period(kind) != period) return {false, "wrong period"};
    for (int i = 0; i < 1000; ++i) {
      const double x = dist(gen);
      worst_value = std::max(worst_value, std::abs(function_value(kind, x) - form(x)));
      // Points next to a jump can land on either side after the shift.
      const double jump = kind == FunctionKind::kSawtooth ? pi
                          : kind == FunctionKind::kSquare  ? 2.0
                                                           : 0.0;
      if (jump > 0 && std::abs(x / jump - std::round(x / jump)) < 1e-6) continue;
      worst_period = std::max(
          worst_period,
          std::abs(function_value(kind, x + period) - function_value(kind, x)));
    }
  }
  return {worst_value <= kValueTolerance && worst_period <= kPeriodTolerance,
          "max value error " + fmt(worst_value) + ", max period error " +
              fmt(worst_period)};
}

// ||dL/da^1|| / ||dL/da^T|| for the first layer, loss on the last step only.
double gradient_ratio(CellKind kind, std::uint64_t seed) {
  NetworkConfig c;
  c.cell_kind = kind;
  c.window = 50;
  c.horizon = 1;
  c.batch_size = 1;
  c.seed = seed;
  TrainingSession s = create_session(c);
  RngStream rng = s.rng;
  const auto batches = draw_epoch_batches(s, rng);
  const Example& ex = batches.front().front();
  const ForwardTrace trace = forward_sequence(s.params, ex.inputs, ex.targets.size());
  const BackwardResult back = backward(trace, s.params, LossKind::kMse, ex.targets);
  const auto& norms = back.activation_grad_norms.front();
  return norms.front() / norms.back();
}

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

Outcome vanishing_gradient_contrast() {
  std::vector<double> lstm, vanilla;
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    lstm.push_back(gradient_ratio(CellKind::kLstm, seed));
    vanilla.push_back(gradient_ratio(CellKind::kVanilla, seed));
  }
  const double ml = median(lstm), mv = median(vanilla);
  return {ml > mv, "median ratio lstm " + fmt(ml) + ", vanilla " + fmt(mv)};
}

template <typename F>
bool rejects(F&& f) {
  try {
    f();
  } catch (const ConfigError&) {
    return true;
  }
  return false;
}

Outcome constraint_enforcement() {
  std::vector<std::string> failures;
  auto check = [&](bool ok, const char* what) {
    if (!ok) failures.push_back(what);
  };
  NetworkConfig c;
  c.batches_per_epoch = 2;
  for (std::size_t n : {0u, 8u}) {
    NetworkConfig bad = c;
    bad.layer_count = n;
    check(rejects([&] { create_session(bad); }), "layer_count out of range");
  }
  TrainingSession s = create_session(c);
  check(rejects([&] {
          edit_architecture(s, {ArchitectureEdit::Kind::kRemoveLayer, 0});
        }),
        "removing the last layer");
  NetworkConfig seven = c;
  seven.layer_count = 7;
  seven.hidden = 2;
  TrainingSession full = create_session(seven);
  check(rejects([&] {
          edit_architecture(full, {ArchitectureEdit::Kind::kAddLayer, 7});
        }),
        "adding an eighth layer");
  check(full.config.layer_count == 7, "rejected edit left layers alone");

  run_epoch(s);
  run_epoch(s);
  set_hyperparam(s, HyperParam::kLearningRate, 0.005);
  set_hyperparam(s, HyperParam::kBatchSize, 4);
  set_hyperparam(s, HyperParam::kNoiseAmp, 0.1);
  check(s.epoch == 2 && s.history.size() == 2, "hyperparameter edits keep history");
  const ArchitectureEdit edits[] = {
      {ArchitectureEdit::Kind::kAddLayer, 1},
      {ArchitectureEdit::Kind::kRemoveLayer, 0},
      {ArchitectureEdit::Kind::kSetCellKind, 0, CellKind::kVanilla},
      {ArchitectureEdit::Kind::kSetTask, 0, CellKind::kLstm, Task::kLorem},
  };
  for (const auto& edit : edits) {
    run_epoch(s);
    edit_architecture(s, edit);
    check(s.epoch == 0 && s.history.empty(), "architecture edit resets");
  }
  return {failures.empty(),
          failures.empty() ? "all checks held" : "violated: " + failures.front()};
}

}  // namespace
}  // namespace rnnscope

int main(int argc, char** argv) {
  using namespace rnnscope;
  if (argc < 2) {
    std::cerr << "usage: acceptance <rnnscope binary> [--known-fail name]...\n";
    return 2;
  }
  const std::string binary = argv[1];
  std::vector<std::string> known;
  for (int i = 2; i + 1 < argc; i += 2) {
    if (std::string(argv[i]) != "--known-fail") {
      std::cerr << "unexpected argument " << argv[i] << "\n";
      return 2;
    }
    known.push_back(argv[i + 1]);
  }
  const std::pair<const char*, std::function<Outcome()>> criteria[] = {
      {"gradient-correctness", gradient_correctness},
      {"replay-equivalence", replay_equivalence},
      {"determinism", [&] { return determinism(binary); }},
      {"convergence", convergence},
      {"epoch-budget", [&] { return epoch_budget(binary); }},
      {"generator-fidelity", generator_fidelity},
      {"vanishing-gradient-contrast", vanishing_gradient_contrast},
      {"constraint-enforcement", constraint_enforcement},
  };
  int failed = 0;
  for (const auto& [name, run] : criteria) {
    Outcome o;
    try {
      o = run();
    } catch (const std::exception& e) {
      o = {false, std::string("threw: ") + e.what()};
    }
    const bool expected_fail =
        std::find(known.begin(), known.end(), name) != known.end();
    if (o.pass == expected_fail) ++failed;
    std::cout << (o.pass ? "PASS " : "FAIL ") << name << ": " << o.detail
              << (expected_fail ? (o.pass ? " [listed as known failure]"
                                          : " [known failure]")
                                : "")
              << std::endl;
  }
  return failed ? 1 : 0;
}
