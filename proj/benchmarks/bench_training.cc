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

#include <benchmark/benchmark.h>

#include "rnnscope/bptt.h"
#include "rnnscope/step_machine.h"
#include "rnnscope/trainer.h"

namespace rnnscope {
namespace {

NetworkConfig config_for(const benchmark::State& state) {
  NetworkConfig c;
  c.cell_kind = state.range(0) ? CellKind::kLstm : CellKind::kVanilla;
  c.layer_count = static_cast<std::size_t>(state.range(1));
  c.hidden = static_cast<std::size_t>(state.range(2));
  return c;
}

Example first_example(const TrainingSession& s) {
  RngStream rng = s.rng;
  return draw_epoch_batches(s, rng).front().front();
}

void BM_Forward(benchmark::State& state) {
  TrainingSession s = create_session(config_for(state));
  const Example ex = first_example(s);
  for (auto _ : state) {
    benchmark::DoNotOptimize(
        forward_sequence(s.params, ex.inputs, ex.targets.size()));
  }
}

void BM_Backward(benchmark::State& state) {
  TrainingSession s = create_session(config_for(state));
  const Example ex = first_example(s);
  const ForwardTrace trace =
      forward_sequence(s.params, ex.inputs, ex.targets.size());
  for (auto _ : state) {
    benchmark::DoNotOptimize(backward(trace, s.params, LossKind::kMse, ex.targets));
  }
}

void BM_Epoch(benchmark::State& state) {
  TrainingSession s = create_session(config_for(state));
  for (auto _ : state) run_epoch(s);
}

void BM_CompilePlan(benchmark::State& state) {
  TrainingSession s = create_session(config_for(state));
  for (auto _ : state) benchmark::DoNotOptimize(compile_epoch_plan(s));
}

// cell (0 vanilla, 1 lstm), layers, hidden
void Shapes(benchmark::internal::Benchmark* b) {
  b->ArgNames({"lstm", "layers", "hidden"});
  for (int cell : {0, 1}) b->Args({cell, 1, 16});
  b->Args({1, 3, 16});
  b->Args({1, 1, 64});
}

BENCHMARK(BM_Forward)->Apply(Shapes);
BENCHMARK(BM_Backward)->Apply(Shapes);
BENCHMARK(BM_Epoch)->Apply(Shapes)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_CompilePlan)->Apply(Shapes)->Unit(benchmark::kMillisecond);

}  // namespace
}  // namespace rnnscope

BENCHMARK_MAIN();
