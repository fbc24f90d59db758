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

#include "rnnscope/step_machine.h"

#include <algorithm>
#include <cmath>
#include <utility>

namespace rnnscope {
namespace {

constexpr StepDetail kForwardDetails[] = {
    StepDetail::kLayerInput, StepDetail::kGateActivations,
    StepDetail::kCellStateUpdate, StepDetail::kOutputActivation};

StepEvent make_event(Phase phase, StepDetail detail, std::size_t layer = 0,
                     std::size_t timestep = 0) {
  StepEvent ev;
  ev.phase = phase;
  ev.detail = detail;
  ev.layer = layer;
  ev.timestep = timestep;
  return ev;
}

void fill_forward_payload(StepEvent& ev, const CellStep& s) {
  auto& v = ev.payload.vectors;
  switch (ev.detail) {
    case StepDetail::kLayerInput:
      v["x"] = s.x.values();
      v["a_prev"] = s.a_prev.values();
      if (!s.c_prev.empty()) v["c_prev"] = s.c_prev.values();
      break;
    case StepDetail::kGateActivations:
      // Vanilla cells have no gates; the event stays for a uniform grammar.
      if (!s.i.empty()) {
        v["i"] = s.i.values();
        v["f"] = s.f.values();
        v["o"] = s.o.values();
        v["g"] = s.g.values();
      }
      break;
    case StepDetail::kCellStateUpdate:
      if (!s.c.empty()) {
        v["c_prev"] = s.c_prev.values();
        v["c"] = s.c.values();
      }
      break;
    case StepDetail::kOutputActivation:
      v["a"] = s.a.values();
      break;
    default:
      break;
  }
}

std::vector<double> concat(std::span<const Vector> vs) {
  std::vector<double> out;
  for (const auto& v : vs) out.insert(out.end(), v.begin(), v.end());
  return out;
}

}  // namespace

std::string_view step_detail_name(StepDetail detail) {
  switch (detail) {
    case StepDetail::kLayerInput:
      return "layer_input";
    case StepDetail::kGateActivations:
      return "gate_activations";
    case StepDetail::kCellStateUpdate:
      return "cell_state_update";
    case StepDetail::kOutputActivation:
      return "output_activation";
    case StepDetail::kLossComputed:
      return "loss_computed";
    case StepDetail::kBackwardStep:
      return "backward_step";
    case StepDetail::kWeightsUpdated:
      return "weights_updated";
    case StepDetail::kEpochDone:
      return "epoch_done";
  }
  return "unknown";
}

std::optional<StepDetail> parse_step_detail(std::string_view name) {
  for (int d = 0; d <= static_cast<int>(StepDetail::kEpochDone); ++d) {
    const auto detail = static_cast<StepDetail>(d);
    if (step_detail_name(detail) == name) return detail;
  }
  return std::nullopt;
}

bool has_position(StepDetail detail) {
  switch (detail) {
    case StepDetail::kLayerInput:
    case StepDetail::kGateActivations:
    case StepDetail::kCellStateUpdate:
    case StepDetail::kOutputActivation:
    case StepDetail::kBackwardStep:
      return true;
    default:
      return false;
  }
}

std::optional<Phase> StepPlan::next_phase() const {
  if (finished()) return std::nullopt;
  return events[cursor].phase;
}

std::size_t StepPlan::first_index_of(Phase phase) const {
  for (std::size_t i = 0; i < events.size(); ++i) {
    if (events[i].phase == phase) return i;
  }
  return events.size();
}

std::size_t forward_event_count(std::size_t layers, std::size_t timesteps) {
  return 4 * layers * timesteps;
}

std::size_t plan_event_count(std::size_t layers, std::size_t timesteps) {
  // forward details, loss, backward steps, weights_updated, epoch_done
  return forward_event_count(layers, timesteps) + 1 + layers * timesteps + 2;
}

StepPlan compile_epoch_plan(const TrainingSession& session) {
  if (session.diverged) {
    throw SessionDiverged("session diverged (" + session.diverged_reason +
                          "); reset to continue");
  }
  StepPlan plan;
  plan.epoch = session.epoch;
  RngStream rng = session.rng;
  plan.batches = draw_epoch_batches(session, rng);
  plan.rng_after_draw = rng;

  const LossKind kind = loss_kind_for(session.config.task);
  auto traces = forward_batch(session.params, plan.batches.front());
  plan.first_batch = backward_batch(session.params, std::move(traces),
                                    plan.batches.front(), kind);

  const ForwardTrace& trace = plan.first_batch.first_trace;
  const BackwardResult& back = plan.first_batch.first_backward;
  const Example& example = plan.batches.front().front();
  const std::size_t layers = trace.layer_count();
  const std::size_t steps = trace.timesteps();
  const std::size_t first_output = trace.first_output_step();

  plan.events.reserve(plan_event_count(layers, steps));
  for (std::size_t t = 0; t < steps; ++t) {
    for (std::size_t l = 0; l < layers; ++l) {
      for (StepDetail detail : kForwardDetails) {
        StepEvent ev = make_event(Phase::kPrediction, detail, l, t + 1);
        fill_forward_payload(ev, trace.steps[l][t]);
        if (detail == StepDetail::kOutputActivation && l + 1 == layers &&
            t >= first_output) {
          ev.payload.vectors["prediction"] =
              trace.predictions[t - first_output].values();
        }
        plan.events.push_back(std::move(ev));
      }
    }
  }

  StepEvent loss_ev = make_event(Phase::kValidation, StepDetail::kLossComputed);
  loss_ev.payload.scalars["loss"] = back.loss;
  loss_ev.payload.scalars["batch_loss"] = plan.first_batch.loss;
  loss_ev.payload.vectors["prediction"] = concat(trace.predictions);
  loss_ev.payload.vectors["target"] = concat(example.targets);
  plan.events.push_back(std::move(loss_ev));

  for (std::size_t t = steps; t-- > 0;) {
    for (std::size_t l = layers; l-- > 0;) {
      StepEvent ev =
          make_event(Phase::kTraining, StepDetail::kBackwardStep, l, t + 1);
      ev.payload.vectors["da"] = back.activation_grads[l][t].values();
      ev.payload.scalars["grad_norm"] = back.activation_grad_norms[l][t];
      plan.events.push_back(std::move(ev));
    }
  }
  plan.events.push_back(
      make_event(Phase::kTraining, StepDetail::kWeightsUpdated));
  plan.events.push_back(make_event(Phase::kTraining, StepDetail::kEpochDone));
  for (std::size_t i = 0; i < plan.events.size(); ++i) plan.events[i].index = i;
  return plan;
}

const StepEvent& advance(StepPlan& plan, TrainingSession& session) {
  if (plan.finished()) {
    throw PlanError("advance: plan of " + std::to_string(plan.size()) +
                    " events is finished");
  }
  if (plan.epoch != session.epoch) {
    throw PlanError("advance: plan was compiled for epoch " +
                    std::to_string(plan.epoch) + ", session is at epoch " +
                    std::to_string(session.epoch));
  }
  StepEvent& ev = plan.events[plan.cursor];
  session.phase = ev.phase;

  if (ev.detail == StepDetail::kWeightsUpdated) {
    const LossKind kind = loss_kind_for(session.config.task);
    session.rng = plan.rng_after_draw;
    plan.mutated = true;
    ev.payload.scalars["grad_norm"] = global_norm(plan.first_batch.grads);
    bool ok = apply_batch_gradient(session, plan.first_batch);
    if (ok) plan.loss_sum = plan.first_batch.loss;
    for (std::size_t b = 1; ok && b < plan.batches.size(); ++b) {
      BatchGradient grad = batch_gradient(session.params, plan.batches[b], kind);
      ok = apply_batch_gradient(session, grad);
      if (ok) plan.loss_sum += grad.loss;
    }
    ev.payload.scalars["batches"] = static_cast<double>(plan.batches.size());
    ev.payload.scalars["diverged"] = ok ? 0.0 : 1.0;
    if (ok) {
      ev.payload.scalars["train_loss"] =
          plan.loss_sum / static_cast<double>(plan.batches.size());
    } else {
      // Training stopped; there is no epoch to finish.
      session.phase = Phase::kPrediction;
      plan.events.resize(plan.cursor + 1);
    }
  } else if (ev.detail == StepDetail::kEpochDone) {
    EpochReport report = finish_epoch(
        session, plan.loss_sum / static_cast<double>(plan.batches.size()));
    ev.payload.scalars["epoch"] = static_cast<double>(report.epoch);
    ev.payload.scalars["train_loss"] = report.mean_train_loss;
    ev.payload.scalars["validation_loss"] = report.validation_loss;
    ev.payload.scalars["diverged"] = report.diverged ? 1.0 : 0.0;
  }
  ++plan.cursor;
  return ev;
}

std::size_t jump_to_phase(StepPlan& plan, TrainingSession& session,
                          Phase phase) {
  if (plan.next_phase() == phase) return plan.cursor;
  for (std::size_t i = plan.cursor; i < plan.events.size(); ++i) {
    if (plan.events[i].phase == phase) {
      while (plan.cursor < i) advance(plan, session);
      session.phase = phase;
      return plan.cursor;
    }
  }
  if (!plan.mutated) {
    plan.cursor = plan.first_index_of(phase);
    session.phase = phase;
    return plan.cursor;
  }
  while (!plan.finished()) advance(plan, session);
  if (session.diverged) return plan.cursor;
  plan = compile_epoch_plan(session);
  return jump_to_phase(plan, session, phase);
}

Pacer::Pacer(double steps_per_second) : rate_(steps_per_second) {
  if (!(steps_per_second > 0.0) || !std::isfinite(steps_per_second)) {
    throw std::invalid_argument("pace: steps_per_second must be positive");
  }
}

void Pacer::start(Clock::time_point now) {
  if (running_) return;
  running_ = true;
  last_ = now;
  credit_ = 0.0;
}

void Pacer::stop() {
  running_ = false;
  credit_ = 0.0;
}

void Pacer::settle(Clock::time_point now) {
  if (!running_) return;
  if (now > last_) {
    credit_ += std::chrono::duration<double>(now - last_).count() * rate_;
    last_ = now;
  }
}

void Pacer::set_rate(double steps_per_second, Clock::time_point now) {
  if (!(steps_per_second > 0.0) || !std::isfinite(steps_per_second)) {
    throw std::invalid_argument("pace: steps_per_second must be positive");
  }
  settle(now);
  rate_ = steps_per_second;
}

std::size_t Pacer::due(Clock::time_point now) {
  if (!running_) return 0;
  settle(now);
  // Absorb rounding from the duration conversion.
  const double whole = std::floor(credit_ + 1e-9);
  credit_ = std::max(0.0, credit_ - whole);
  return static_cast<std::size_t>(whole);
}

Pacer::Clock::duration Pacer::until_next(Clock::time_point now) const {
  if (!running_) return Clock::duration::max();
  double credit = credit_;
  if (now > last_) {
    credit += std::chrono::duration<double>(now - last_).count() * rate_;
  }
  if (credit >= 1.0) return Clock::duration::zero();
  return std::chrono::duration_cast<Clock::duration>(
      std::chrono::duration<double>((1.0 - credit) / rate_));
}

void pace(Pacer& pacer, double steps_per_second, Pacer::Clock::time_point now) {
  pacer.set_rate(steps_per_second, now);
}

}  // namespace rnnscope
