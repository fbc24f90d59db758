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

// The training session: configuration, parameters, Adam state and the epoch
// loop. An epoch runs batches_per_epoch batches, then one validation
// prediction on a fixed held-out sequence.

#ifndef RNNSCOPE_TRAINER_H_
#define RNNSCOPE_TRAINER_H_

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "rnnscope/bptt.h"
#include "rnnscope/cells.h"
#include "rnnscope/rng.h"
#include "rnnscope/sequence_data.h"

namespace rnnscope {

enum class Task { kSine, kSawtooth, kSquare, kComposite, kAbab, kLorem };

inline constexpr Task kAllTasks[] = {Task::kSine,      Task::kSawtooth,
                                     Task::kSquare,    Task::kComposite,
                                     Task::kAbab,      Task::kLorem};

std::string_view task_name(Task task);
std::optional<Task> parse_task(std::string_view name);
bool is_text_task(Task task);
// Only valid for function tasks.
FunctionKind task_function(Task task);
// Only valid for text tasks.
CorpusKind task_corpus(Task task);

// Rejected configuration; field() names the offending setting.
class ConfigError : public std::invalid_argument {
 public:
  ConfigError(std::string field, const std::string& message)
      : std::invalid_argument(field + ": " + message), field_(std::move(field)) {}
  const std::string& field() const { return field_; }

 private:
  std::string field_;
};

struct NetworkConfig {
  CellKind cell_kind = CellKind::kLstm;
  std::size_t layer_count = 1;
  std::size_t hidden = 16;
  Task task = Task::kSine;
  std::size_t window = 25;
  std::size_t horizon = 5;  // text tasks always predict one character
  double noise_amp = 0.0;
  double learning_rate = 0.01;
  std::size_t batch_size = 8;
  std::size_t batches_per_epoch = 10;
  std::uint64_t seed = 1;

  double dx = 0.2;
  InitScheme init = InitScheme::kGlorotUniform;
  double forget_bias = 1.0;
  double clip_norm = 5.0;  // 0 disables clipping

  bool operator==(const NetworkConfig&) const = default;
};

// Legal ranges. learning_rate additionally accepts exactly 0 (frozen
// weights).
inline constexpr double kMinLearningRate = 1e-5;
inline constexpr double kMaxLearningRate = 1.0;
inline constexpr std::size_t kMaxBatchSize = 64;
inline constexpr std::size_t kMaxHidden = 64;
inline constexpr std::size_t kMaxWindow = 100;
inline constexpr std::size_t kMaxHorizon = 20;
inline constexpr std::size_t kMaxBatchesPerEpoch = 1000;

// Throws ConfigError naming the first violated field.
void validate_config(const NetworkConfig& config);

std::size_t effective_horizon(const NetworkConfig& config);
// Length of the unrolled training sequence: window + horizon - 1.
std::size_t unrolled_steps(const NetworkConfig& config);
LossKind loss_kind_for(Task task);

struct OptimizerState {
  ParameterSet first_moment;
  ParameterSet second_moment;
  std::uint64_t step_count = 0;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;

  bool operator==(const OptimizerState&) const = default;
};

OptimizerState make_adam(const ParameterSet& params);

// Adam with bias correction:
//   m = b1 m + (1 - b1) g,  v = b2 v + (1 - b2) g^2
//   theta -= lr * (m / (1 - b1^t)) / (sqrt(v / (1 - b2^t)) + eps)
void optimizer_step(ParameterSet& params, const GradientSet& grads,
                    OptimizerState& opt, double learning_rate);

enum class Phase { kPrediction, kValidation, kTraining };

std::string_view phase_name(Phase phase);
std::optional<Phase> parse_phase(std::string_view name);

struct HistoryEntry {
  std::size_t epoch = 0;
  double train_loss = 0.0;
  double validation_loss = 0.0;

  bool operator==(const HistoryEntry&) const = default;
};

// The held-out prediction shown in the output plot.
struct ValidationRecord {
  // Function tasks: abscissae of input followed by target.
  std::vector<double> xs;
  // Function tasks: window values. Text tasks: alphabet indices.
  std::vector<double> input;
  // Function tasks: the k true continuation values. Text tasks: one-hot.
  std::vector<double> target;
  // Function tasks: free-running predictions. Text tasks: softmax.
  std::vector<double> prediction;
  // Function tasks: |prediction - target| per point. Text tasks: one entry,
  // 1 - p(true next character).
  std::vector<double> error;
  std::string input_text;
  std::string target_text;
  std::string predicted_text;
  double loss = 0.0;
  ForwardTrace trace;

  bool operator==(const ValidationRecord&) const = default;
};

// Immutable per-session data derived from the config.
struct TaskData {
  std::optional<TextCorpus> corpus;
  std::vector<TextSample> text_pool;
  // The held-out validation sequence.
  Example validation_example;
  SequenceSample validation_sequence;  // function tasks
  std::size_t validation_offset = 0;   // text tasks: start position in corpus
};

struct TrainingSession {
  NetworkConfig config;
  ParameterSet params;
  OptimizerState opt;
  RngStream rng;
  std::size_t epoch = 0;
  Phase phase = Phase::kPrediction;
  std::vector<HistoryEntry> history;
  ValidationRecord last_validation;
  // ||dL/da|| per [layer][t] for element 0 of the most recent batch.
  std::vector<std::vector<double>> last_gradient_norms;
  bool diverged = false;
  std::string diverged_reason;
  TaskData data;
};

struct EpochReport {
  std::size_t epoch = 0;
  double mean_train_loss = 0.0;
  double validation_loss = 0.0;
  std::vector<double> validation_prediction;
  double wall_time_ms = 0.0;
  bool diverged = false;
};

// Raised when a diverged session is asked to train. reset() clears it.
class SessionDiverged : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Stream tags for derive_seed.
inline constexpr std::uint64_t kInitStream = 1;
inline constexpr std::uint64_t kDataStream = 2;
inline constexpr std::uint64_t kValidationStream = 3;

TrainingSession create_session(const NetworkConfig& config);

using PhaseObserver = std::function<void(Phase)>;

// One epoch. The observer, if set, sees each phase as it begins:
// prediction, validation, training.
EpochReport run_epoch(TrainingSession& session,
                      const PhaseObserver& observer = {});

enum class HyperParam { kLearningRate, kBatchSize, kNoiseAmp };

std::string_view hyperparam_name(HyperParam p);
std::optional<HyperParam> parse_hyperparam(std::string_view name);

// Takes effect from the next batch drawn; history is kept.
void set_hyperparam(TrainingSession& session, HyperParam name, double value);

struct ArchitectureEdit {
  enum class Kind { kAddLayer, kRemoveLayer, kSetCellKind, kSetTask };
  Kind kind = Kind::kAddLayer;
  std::size_t at = 0;
  CellKind cell_kind = CellKind::kLstm;
  Task task = Task::kSine;
};

// Applies the edit and restarts training from fresh parameters.
void edit_architecture(TrainingSession& session, const ArchitectureEdit& edit);

void reset(TrainingSession& session);

// Building blocks shared by run_epoch and the step machine.

// All batches of the next epoch, drawn from rng in batch order.
std::vector<std::vector<Example>> draw_epoch_batches(
    const TrainingSession& session, RngStream& rng);

// Clips and applies a batch gradient. On a non-finite loss or gradient the
// session is flagged diverged, the parameters are left alone, and false is
// returned.
bool apply_batch_gradient(TrainingSession& session, const BatchGradient& grad);

// Runs the held-out validation pass with the current parameters.
ValidationRecord evaluate_validation(const TrainingSession& session);

// Validation, history append and epoch increment; phase returns to
// prediction.
EpochReport finish_epoch(TrainingSession& session, double mean_train_loss);

}  // namespace rnnscope

#endif  // RNNSCOPE_TRAINER_H_
