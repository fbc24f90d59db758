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

#include "rnnscope/trainer.h"

#include <chrono>
#include <cmath>
#include <utility>

namespace rnnscope {
namespace {

void check_range(bool ok, const char* field, const std::string& message) {
  if (!ok) throw ConfigError(field, message);
}

bool is_legal_learning_rate(double lr) {
  return lr == 0.0 || (lr >= kMinLearningRate && lr <= kMaxLearningRate);
}

NetworkShape shape_for(const NetworkConfig& config, std::size_t io_dim) {
  NetworkShape shape;
  shape.kind = config.cell_kind;
  shape.input_dim = io_dim;
  shape.hidden = config.hidden;
  shape.layers = config.layer_count;
  shape.output_dim = io_dim;
  return shape;
}

TaskData build_task_data(const NetworkConfig& config) {
  TaskData data;
  RngStream vrng(derive_seed(config.seed, kValidationStream));
  if (is_text_task(config.task)) {
    data.corpus = make_corpus(task_corpus(config.task));
    data.text_pool = text_windows(*data.corpus, config.window);
    data.validation_offset = vrng.uniform_index(data.text_pool.size());
    data.validation_example = to_example(data.text_pool[data.validation_offset]);
    return data;
  }
  const FunctionKind kind = task_function(config.task);
  const std::size_t k = effective_horizon(config);
  const double x0 = vrng.uniform(0.0, function_period(kind));
  Series series =
      generate_sequence(kind, x0, config.window + k, config.dx, 0.0, vrng);
  data.validation_sequence.xs = std::move(series.xs);
  data.validation_sequence.values = std::move(series.values);
  data.validation_sequence.window = config.window;
  data.validation_sequence.horizon = k;
  const auto& v = data.validation_sequence.values;
  data.validation_example = to_example(WindowSample{
      {v.begin(), v.begin() + config.window},
      {v.begin() + config.window, v.end()}});
  return data;
}

bool gradients_finite(const GradientSet& g) {
  bool ok = true;
  for_each_tensor(g, [&](std::span<const double> t) {
    ok = ok && all_finite(t);
  });
  return ok;
}

}  // namespace

std::string_view task_name(Task task) {
  switch (task) {
    case Task::kSine:
      return "sine";
    case Task::kSawtooth:
      return "sawtooth";
    case Task::kSquare:
      return "square";
    case Task::kComposite:
      return "composite";
    case Task::kAbab:
      return "abab";
    case Task::kLorem:
      return "lorem";
  }
  return "unknown";
}

std::optional<Task> parse_task(std::string_view name) {
  for (Task t : kAllTasks) {
    if (task_name(t) == name) return t;
  }
  return std::nullopt;
}

bool is_text_task(Task task) {
  return task == Task::kAbab || task == Task::kLorem;
}

FunctionKind task_function(Task task) {
  switch (task) {
    case Task::kSine:
      return FunctionKind::kSine;
    case Task::kSawtooth:
      return FunctionKind::kSawtooth;
    case Task::kSquare:
      return FunctionKind::kSquare;
    case Task::kComposite:
      return FunctionKind::kComposite;
    default:
      throw std::invalid_argument("task '" + std::string(task_name(task)) +
                                  "' is not a function task");
  }
}

CorpusKind task_corpus(Task task) {
  if (task == Task::kAbab) return CorpusKind::kAbab;
  if (task == Task::kLorem) return CorpusKind::kLorem;
  throw std::invalid_argument("task '" + std::string(task_name(task)) +
                              "' is not a text task");
}

void validate_config(const NetworkConfig& c) {
  check_range(c.layer_count >= 1 && c.layer_count <= kMaxLayers, "layer_count",
              "must be in 1..7, got " + std::to_string(c.layer_count));
  check_range(c.hidden >= 1 && c.hidden <= kMaxHidden, "hidden",
              "must be in 1..64, got " + std::to_string(c.hidden));
  check_range(c.window >= 1 && c.window <= kMaxWindow, "window",
              "must be in 1..100, got " + std::to_string(c.window));
  check_range(c.horizon >= 1 && c.horizon <= kMaxHorizon, "horizon",
              "must be in 1..20, got " + std::to_string(c.horizon));
  check_range(c.noise_amp >= 0.0 && c.noise_amp <= 1.0, "noise_amp",
              "must be in [0, 1]");
  check_range(is_legal_learning_rate(c.learning_rate), "learning_rate",
              "must be 0 or in [1e-5, 1]");
  check_range(c.batch_size >= 1 && c.batch_size <= kMaxBatchSize, "batch_size",
              "must be in 1..64, got " + std::to_string(c.batch_size));
  check_range(c.batches_per_epoch >= 1 &&
                  c.batches_per_epoch <= kMaxBatchesPerEpoch,
              "batches_per_epoch", "must be in 1..1000");
  check_range(c.dx > 0.0 && std::isfinite(c.dx), "dx", "must be positive");
  check_range(std::isfinite(c.forget_bias), "forget_bias", "must be finite");
  check_range(c.clip_norm >= 0.0 && std::isfinite(c.clip_norm), "clip_norm",
              "must be >= 0");
  if (is_text_task(c.task)) {
    const std::size_t len = make_corpus(task_corpus(c.task)).text.size();
    check_range(c.window < len, "window",
                "must be shorter than the corpus (" + std::to_string(len) +
                    " characters)");
  }
}

std::size_t effective_horizon(const NetworkConfig& config) {
  return is_text_task(config.task) ? 1 : config.horizon;
}

std::size_t unrolled_steps(const NetworkConfig& config) {
  return config.window + effective_horizon(config) - 1;
}

LossKind loss_kind_for(Task task) {
  return is_text_task(task) ? LossKind::kSoftmaxCrossEntropy : LossKind::kMse;
}

OptimizerState make_adam(const ParameterSet& params) {
  OptimizerState opt;
  opt.first_moment = zeros_like(params);
  opt.second_moment = zeros_like(params);
  return opt;
}

void optimizer_step(ParameterSet& params, const GradientSet& grads,
                    OptimizerState& opt, double learning_rate) {
  std::vector<std::span<double>> p, m, v;
  std::vector<std::span<const double>> g;
  for_each_tensor(params, [&](std::span<double> t) { p.push_back(t); });
  for_each_tensor(opt.first_moment, [&](std::span<double> t) { m.push_back(t); });
  for_each_tensor(opt.second_moment,
                  [&](std::span<double> t) { v.push_back(t); });
  for_each_tensor(grads, [&](std::span<const double> t) { g.push_back(t); });
  if (g.size() != p.size() || m.size() != p.size() || v.size() != p.size()) {
    throw ShapeError("optimizer_step: gradient/moment structure mismatch");
  }
  for (std::size_t k = 0; k < p.size(); ++k) {
    if (g[k].size() != p[k].size() || m[k].size() != p[k].size() ||
        v[k].size() != p[k].size()) {
      throw ShapeError("optimizer_step: tensor " + std::to_string(k) +
                       " shape mismatch");
    }
  }

  ++opt.step_count;
  const double t = static_cast<double>(opt.step_count);
  const double correction1 = 1.0 - std::pow(opt.beta1, t);
  const double correction2 = 1.0 - std::pow(opt.beta2, t);
  for (std::size_t k = 0; k < p.size(); ++k) {
    for (std::size_t i = 0; i < p[k].size(); ++i) {
      const double gi = g[k][i];
      m[k][i] = opt.beta1 * m[k][i] + (1.0 - opt.beta1) * gi;
      v[k][i] = opt.beta2 * v[k][i] + (1.0 - opt.beta2) * gi * gi;
      const double m_hat = m[k][i] / correction1;
      const double v_hat = v[k][i] / correction2;
      p[k][i] -= learning_rate * m_hat / (std::sqrt(v_hat) + opt.epsilon);
    }
  }
}

std::string_view phase_name(Phase phase) {
  switch (phase) {
    case Phase::kPrediction:
      return "prediction";
    case Phase::kValidation:
      return "validation";
    case Phase::kTraining:
      return "training";
  }
  return "unknown";
}

std::optional<Phase> parse_phase(std::string_view name) {
  for (Phase p : {Phase::kPrediction, Phase::kValidation, Phase::kTraining}) {
    if (phase_name(p) == name) return p;
  }
  return std::nullopt;
}

TrainingSession create_session(const NetworkConfig& config) {
  validate_config(config);
  TrainingSession s;
  s.config = config;
  s.data = build_task_data(config);
  const std::size_t io_dim =
      s.data.corpus ? s.data.corpus->alphabet.size() : std::size_t{1};
  RngStream init_rng(derive_seed(config.seed, kInitStream));
  s.params = init_parameters(shape_for(config, io_dim), config.init,
                             config.forget_bias, init_rng);
  s.opt = make_adam(s.params);
  s.rng = RngStream(derive_seed(config.seed, kDataStream));
  s.last_validation = evaluate_validation(s);
  return s;
}

std::vector<std::vector<Example>> draw_epoch_batches(
    const TrainingSession& session, RngStream& rng) {
  const NetworkConfig& c = session.config;
  std::vector<std::vector<Example>> batches(c.batches_per_epoch);
  for (auto& batch : batches) {
    batch.reserve(c.batch_size);
    if (is_text_task(c.task)) {
      for (std::size_t idx : sample_batch_indices(session.data.text_pool.size(),
                                                  c.batch_size, rng)) {
        batch.push_back(to_example(session.data.text_pool[idx]));
      }
      continue;
    }
    const FunctionKind kind = task_function(c.task);
    const std::size_t k = effective_horizon(c);
    for (std::size_t i = 0; i < c.batch_size; ++i) {
      const double x0 = rng.uniform(0.0, function_period(kind));
      Series s = generate_sequence(kind, x0, c.window + k, c.dx, c.noise_amp, rng);
      WindowSample w{{s.values.begin(), s.values.begin() + c.window},
                     {s.values.begin() + c.window, s.values.end()}};
      batch.push_back(to_example(w));
    }
  }
  return batches;
}

bool apply_batch_gradient(TrainingSession& session, const BatchGradient& grad) {
  if (!std::isfinite(grad.loss) || !gradients_finite(grad.grads)) {
    session.diverged = true;
    session.diverged_reason = "non-finite training loss at epoch " +
                              std::to_string(session.epoch + 1);
    return false;
  }
  session.last_gradient_norms = grad.first_backward.activation_grad_norms;
  if (session.config.clip_norm > 0.0) {
    optimizer_step(session.params,
                   clip_gradients(grad.grads, session.config.clip_norm),
                   session.opt, session.config.learning_rate);
  } else {
    optimizer_step(session.params, grad.grads, session.opt,
                   session.config.learning_rate);
  }
  return true;
}

ValidationRecord evaluate_validation(const TrainingSession& session) {
  const NetworkConfig& c = session.config;
  const Example& ex = session.data.validation_example;
  ValidationRecord rec;
  if (is_text_task(c.task)) {
    const TextCorpus& corpus = *session.data.corpus;
    FreeRunResult run =
        free_run(session.params, ex.inputs, 1, Feedback::kArgmaxOneHot);
    rec.loss = sequence_loss(LossKind::kSoftmaxCrossEntropy, run.predictions,
                             ex.targets);
    const Vector probs = softmax(run.predictions.front());
    const std::size_t start = session.data.validation_offset;
    const std::u32string_view text(corpus.text);
    for (std::size_t j = 0; j < c.window; ++j) {
      rec.input.push_back(static_cast<double>(corpus.index_of(text[start + j])));
    }
    rec.input_text = utf8_encode(text.substr(start, c.window));
    rec.target_text = utf8_encode(text.substr(start + c.window, 1));
    rec.predicted_text =
        utf8_encode(std::u32string(1, corpus.alphabet[argmax(probs)]));
    rec.target = ex.targets.front().values();
    rec.prediction = probs.values();
    rec.error = {1.0 - probs[corpus.index_of(text[start + c.window])]};
    rec.trace = std::move(run.trace);
    return rec;
  }
  const SequenceSample& seq = session.data.validation_sequence;
  std::vector<Vector> window_inputs(ex.inputs.begin(),
                                    ex.inputs.begin() + c.window);
  FreeRunResult run = free_run(session.params, window_inputs, seq.horizon,
                               Feedback::kValue);
  rec.loss = sequence_loss(LossKind::kMse, run.predictions, ex.targets);
  rec.xs = seq.xs;
  rec.input.assign(seq.values.begin(), seq.values.begin() + c.window);
  rec.target.assign(seq.values.begin() + c.window, seq.values.end());
  for (std::size_t j = 0; j < run.predictions.size(); ++j) {
    rec.prediction.push_back(run.predictions[j][0]);
    rec.error.push_back(std::abs(run.predictions[j][0] - rec.target[j]));
  }
  rec.trace = std::move(run.trace);
  return rec;
}

EpochReport finish_epoch(TrainingSession& session, double mean_train_loss) {
  EpochReport report;
  session.last_validation = evaluate_validation(session);
  session.phase = Phase::kPrediction;
  if (!std::isfinite(session.last_validation.loss) ||
      !std::isfinite(mean_train_loss)) {
    session.diverged = true;
    session.diverged_reason = "non-finite validation loss at epoch " +
                              std::to_string(session.epoch + 1);
    report.epoch = session.epoch;
    report.diverged = true;
    return report;
  }
  ++session.epoch;
  session.history.push_back(
      {session.epoch, mean_train_loss, session.last_validation.loss});
  report.epoch = session.epoch;
  report.mean_train_loss = mean_train_loss;
  report.validation_loss = session.last_validation.loss;
  report.validation_prediction = session.last_validation.prediction;
  return report;
}

EpochReport run_epoch(TrainingSession& session, const PhaseObserver& observer) {
  if (session.diverged) {
    throw SessionDiverged("session diverged (" + session.diverged_reason +
                          "); reset to continue");
  }
  const auto start = std::chrono::steady_clock::now();
  auto enter = [&](Phase p) {
    session.phase = p;
    if (observer) observer(p);
  };

  const LossKind kind = loss_kind_for(session.config.task);
  const auto batches = draw_epoch_batches(session, session.rng);
  double loss_sum = 0.0;
  for (std::size_t b = 0; b < batches.size(); ++b) {
    BatchGradient grad;
    if (b == 0) {
      enter(Phase::kPrediction);
      auto traces = forward_batch(session.params, batches[b]);
      enter(Phase::kValidation);
      grad = backward_batch(session.params, std::move(traces), batches[b], kind);
      enter(Phase::kTraining);
    } else {
      grad = batch_gradient(session.params, batches[b], kind);
    }
    if (!apply_batch_gradient(session, grad)) {
      session.phase = Phase::kPrediction;
      EpochReport report;
      report.epoch = session.epoch;
      report.diverged = true;
      return report;
    }
    loss_sum += grad.loss;
  }
  EpochReport report =
      finish_epoch(session, loss_sum / static_cast<double>(batches.size()));
  report.wall_time_ms = std::chrono::duration<double, std::milli>(
                            std::chrono::steady_clock::now() - start)
                            .count();
  return report;
}

std::string_view hyperparam_name(HyperParam p) {
  switch (p) {
    case HyperParam::kLearningRate:
      return "learning_rate";
    case HyperParam::kBatchSize:
      return "batch_size";
    case HyperParam::kNoiseAmp:
      return "noise_amp";
  }
  return "unknown";
}

std::optional<HyperParam> parse_hyperparam(std::string_view name) {
  for (HyperParam p : {HyperParam::kLearningRate, HyperParam::kBatchSize,
                       HyperParam::kNoiseAmp}) {
    if (hyperparam_name(p) == name) return p;
  }
  return std::nullopt;
}

void set_hyperparam(TrainingSession& session, HyperParam name, double value) {
  switch (name) {
    case HyperParam::kLearningRate:
      check_range(is_legal_learning_rate(value), "learning_rate",
                  "must be 0 or in [1e-5, 1]");
      session.config.learning_rate = value;
      return;
    case HyperParam::kBatchSize:
      check_range(value >= 1.0 && value <= static_cast<double>(kMaxBatchSize) &&
                      value == std::floor(value),
                  "batch_size", "must be an integer in 1..64");
      session.config.batch_size = static_cast<std::size_t>(value);
      return;
    case HyperParam::kNoiseAmp:
      check_range(value >= 0.0 && value <= 1.0, "noise_amp",
                  "must be in [0, 1]");
      session.config.noise_amp = value;
      return;
  }
}

void edit_architecture(TrainingSession& session, const ArchitectureEdit& edit) {
  NetworkConfig next = session.config;
  switch (edit.kind) {
    case ArchitectureEdit::Kind::kAddLayer:
      check_range(next.layer_count < kMaxLayers, "layer_count",
                  "a network has at most 7 layers");
      check_range(edit.at <= next.layer_count, "at",
                  "insert position past the last layer");
      ++next.layer_count;
      break;
    case ArchitectureEdit::Kind::kRemoveLayer:
      check_range(next.layer_count > 1, "layer_count",
                  "a network needs at least one layer");
      check_range(edit.at < next.layer_count, "at", "no layer at that index");
      --next.layer_count;
      break;
    case ArchitectureEdit::Kind::kSetCellKind:
      next.cell_kind = edit.cell_kind;
      break;
    case ArchitectureEdit::Kind::kSetTask:
      next.task = edit.task;
      break;
  }
  session = create_session(next);
}

void reset(TrainingSession& session) {
  session = create_session(session.config);
}

}  // namespace rnnscope
