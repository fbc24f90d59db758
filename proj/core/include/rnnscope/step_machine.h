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

// An epoch compiled into an ordered list of micro-steps that can be executed
// one at a time. The plan grammar for L layers and T unrolled timesteps:
//
//   prediction:  for t in 1..T, for l in 0..L-1:
//                  layer_input, gate_activations, cell_state_update,
//                  output_activation
//   validation:  loss_computed
//   training:    for t in T..1, for l in L-1..0: backward_step
//                weights_updated, epoch_done
//
// Micro-steps cover batch element 0 of the first batch. The remaining batch
// elements and batches run at weights_updated. Advancing to the end leaves
// the session exactly where run_epoch would.

#ifndef RNNSCOPE_STEP_MACHINE_H_
#define RNNSCOPE_STEP_MACHINE_H_

#include <chrono>
#include <cstddef>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "rnnscope/bptt.h"
#include "rnnscope/trainer.h"

namespace rnnscope {

enum class StepDetail {
  kLayerInput,
  kGateActivations,
  kCellStateUpdate,
  kOutputActivation,
  kLossComputed,
  kBackwardStep,
  kWeightsUpdated,
  kEpochDone,
};

std::string_view step_detail_name(StepDetail detail);
std::optional<StepDetail> parse_step_detail(std::string_view name);
bool has_position(StepDetail detail);

struct StepPayload {
  std::map<std::string, std::vector<double>> vectors;
  std::map<std::string, double> scalars;

  bool operator==(const StepPayload&) const = default;
};

struct StepEvent {
  std::size_t index = 0;
  Phase phase = Phase::kPrediction;
  StepDetail detail = StepDetail::kLayerInput;
  // Only meaningful when has_position(detail). timestep is 1-based.
  std::size_t layer = 0;
  std::size_t timestep = 0;
  StepPayload payload;

  bool operator==(const StepEvent&) const = default;
};

// Raised when advancing past the end of a plan, or running a plan against a
// session it was not compiled for.
class PlanError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

struct StepPlan {
  std::vector<StepEvent> events;
  std::size_t cursor = 0;

  bool finished() const { return cursor >= events.size(); }
  std::size_t size() const { return events.size(); }
  // Phase of the next event; nullopt once finished.
  std::optional<Phase> next_phase() const;
  // Index of the first event of the given phase.
  std::size_t first_index_of(Phase phase) const;

  // Execution state captured at compile time.
  std::size_t epoch = 0;
  std::vector<std::vector<Example>> batches;
  RngStream rng_after_draw;
  BatchGradient first_batch;
  double loss_sum = 0.0;
  bool mutated = false;  // weights_updated has run
};

// Throws SessionDiverged for a diverged session.
StepPlan compile_epoch_plan(const TrainingSession& session);

// Executes the event at the cursor and returns it with its payload. Session
// parameters, optimizer and history change only at weights_updated and
// epoch_done. Throws PlanError when the plan is finished.
const StepEvent& advance(StepPlan& plan, TrainingSession& session);

// Moves the cursor to the first event of `phase`, executing any intervening
// events without reporting them. If that phase lies behind the cursor and the
// weights have not been updated yet, the cursor is rewound (nothing has been
// mutated, so this is a pure reset of the view). If the weights were already
// updated, the epoch is finished and the jump lands in a freshly compiled
// plan for the next epoch. Returns the new cursor.
std::size_t jump_to_phase(StepPlan& plan, TrainingSession& session,
                          Phase phase);

// Counts the events of a plan for L layers and T timesteps.
std::size_t forward_event_count(std::size_t layers, std::size_t timesteps);
std::size_t plan_event_count(std::size_t layers, std::size_t timesteps);

// Converts wall-clock time into a number of due steps at a configurable
// rate. Fractional credit carries over, so changing the rate never drops or
// repeats a step.
class Pacer {
 public:
  using Clock = std::chrono::steady_clock;

  // Throws std::invalid_argument unless steps_per_second > 0.
  explicit Pacer(double steps_per_second = 1.0);

  double rate() const { return rate_; }
  bool running() const { return running_; }

  void start(Clock::time_point now);
  // Frozen until the next start(); pending credit is discarded.
  void stop();
  // Settles credit at the old rate up to `now`, then switches.
  void set_rate(double steps_per_second, Clock::time_point now);
  // Steps that became due since the previous call.
  std::size_t due(Clock::time_point now);
  // Time until the next step is due (zero when one is already due).
  Clock::duration until_next(Clock::time_point now) const;

 private:
  void settle(Clock::time_point now);

  double rate_;
  bool running_ = false;
  Clock::time_point last_{};
  double credit_ = 0.0;
};

// pace(controller, rate): adjusts the rate of a pacer.
void pace(Pacer& pacer, double steps_per_second,
          Pacer::Clock::time_point now = Pacer::Clock::now());

}  // namespace rnnscope

#endif  // RNNSCOPE_STEP_MACHINE_H_
