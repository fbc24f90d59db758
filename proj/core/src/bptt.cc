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

#include "rnnscope/bptt.h"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <utility>

namespace rnnscope {
namespace {

void require_same_length(const Vector& a, const Vector& b, const char* what) {
  if (a.size() != b.size()) {
    throw ShapeError(std::string(what) + ": prediction of length " +
                     std::to_string(a.size()) + " vs target of length " +
                     std::to_string(b.size()));
  }
}

// Reverse pass through one cell. Accumulates weight gradients into `grad`
// and returns (d input, d a_prev, d c_prev).
struct CellBackward {
  Vector dx;
  Vector da_prev;
  Vector dc_prev;
};

void accumulate_block(GateWeights& grad, const GateWeights& w, const Vector& dz,
                      const CellStep& s, CellBackward& out) {
  add_outer(grad.wx, dz, s.x);
  add_outer(grad.wa, dz, s.a_prev);
  add_in_place(grad.b, dz);
  add_in_place(out.dx, mat_t_vec_mul(w.wx, dz));
  add_in_place(out.da_prev, mat_t_vec_mul(w.wa, dz));
}

CellBackward vanilla_backward(const CellParams& p, CellParams& grad,
                              const CellStep& s, const Vector& da) {
  CellBackward out{Vector(s.x.size()), Vector(s.a_prev.size()), {}};
  Vector dz(da.size());
  for (std::size_t j = 0; j < da.size(); ++j) {
    dz[j] = da[j] * (1.0 - s.a[j] * s.a[j]);
  }
  accumulate_block(grad.blocks[kActivation], p.blocks[kActivation], dz, s, out);
  return out;
}

CellBackward lstm_backward(const CellParams& p, CellParams& grad,
                           const CellStep& s, const Vector& da,
                           const Vector& dc_next) {
  const std::size_t h = da.size();
  CellBackward out{Vector(s.x.size()), Vector(h), Vector(h)};
  Vector dzi(h), dzf(h), dzo(h), dzg(h);
  for (std::size_t j = 0; j < h; ++j) {
    const double tc = std::tanh(s.c[j]);
    const double dc = dc_next[j] + da[j] * s.o[j] * (1.0 - tc * tc);
    const double d_o = da[j] * tc;
    const double di = dc * s.g[j];
    const double dg = dc * s.i[j];
    const double df = dc * s.c_prev[j];
    out.dc_prev[j] = dc * s.f[j];
    dzi[j] = di * s.i[j] * (1.0 - s.i[j]);
    dzf[j] = df * s.f[j] * (1.0 - s.f[j]);
    dzo[j] = d_o * s.o[j] * (1.0 - s.o[j]);
    dzg[j] = dg * (1.0 - s.g[j] * s.g[j]);
  }
  accumulate_block(grad.blocks[kInputGate], p.blocks[kInputGate], dzi, s, out);
  accumulate_block(grad.blocks[kForgetGate], p.blocks[kForgetGate], dzf, s, out);
  accumulate_block(grad.blocks[kOutputGate], p.blocks[kOutputGate], dzo, s, out);
  accumulate_block(grad.blocks[kCandidate], p.blocks[kCandidate], dzg, s, out);
  return out;
}

void check_trace(const ForwardTrace& trace, const ParameterSet& params) {
  if (trace.layer_count() != params.layers.size()) {
    throw ShapeError("backward: trace has " +
                     std::to_string(trace.layer_count()) +
                     " layers, parameters have " +
                     std::to_string(params.layers.size()));
  }
  if (trace.kind != params.kind()) {
    throw ShapeError("backward: trace and parameters use different cell kinds");
  }
  const std::size_t steps = trace.timesteps();
  for (std::size_t l = 0; l < trace.layer_count(); ++l) {
    if (trace.steps[l].size() != steps) {
      throw ShapeError("backward: trace is not rectangular");
    }
    if (steps > 0 && trace.steps[l].front().a.size() != params.layers[l].hidden()) {
      throw ShapeError("backward: layer " + std::to_string(l) +
                       " activation size differs from parameters");
    }
  }
  if (trace.predictions.empty() || trace.predictions.size() > steps) {
    throw ShapeError("backward: trace carries no usable predictions");
  }
}

}  // namespace

std::string_view loss_kind_name(LossKind kind) {
  return kind == LossKind::kMse ? "mse" : "softmax-cross-entropy";
}

Vector softmax(const Vector& logits) {
  Vector p(logits.size());
  if (logits.empty()) return p;
  const double m = *std::max_element(logits.begin(), logits.end());
  double sum = 0.0;
  for (std::size_t j = 0; j < logits.size(); ++j) {
    p[j] = std::exp(logits[j] - m);
    sum += p[j];
  }
  for (double& x : p) x /= sum;
  return p;
}

double loss(LossKind kind, const Vector& prediction, const Vector& target) {
  require_same_length(prediction, target, "loss");
  if (prediction.empty()) throw ShapeError("loss: empty prediction");
  if (kind == LossKind::kMse) {
    double acc = 0.0;
    for (std::size_t j = 0; j < prediction.size(); ++j) {
      const double d = prediction[j] - target[j];
      acc += d * d;
    }
    return acc / static_cast<double>(prediction.size());
  }
  const double m = *std::max_element(prediction.begin(), prediction.end());
  double sum = 0.0;
  for (double z : prediction) sum += std::exp(z - m);
  const double log_norm = m + std::log(sum);
  double acc = 0.0;
  for (std::size_t j = 0; j < prediction.size(); ++j) {
    if (target[j] != 0.0) acc -= target[j] * (prediction[j] - log_norm);
  }
  return acc;
}

Vector loss_gradient(LossKind kind, const Vector& prediction,
                     const Vector& target) {
  require_same_length(prediction, target, "loss_gradient");
  Vector g(prediction.size());
  if (kind == LossKind::kMse) {
    const double scale = 2.0 / static_cast<double>(prediction.size());
    for (std::size_t j = 0; j < g.size(); ++j) {
      g[j] = scale * (prediction[j] - target[j]);
    }
    return g;
  }
  const Vector p = softmax(prediction);
  const double mass = std::accumulate(target.begin(), target.end(), 0.0);
  for (std::size_t j = 0; j < g.size(); ++j) g[j] = p[j] * mass - target[j];
  return g;
}

double sequence_loss(LossKind kind, std::span<const Vector> predictions,
                     std::span<const Vector> targets) {
  if (predictions.size() != targets.size() || predictions.empty()) {
    throw ShapeError("sequence_loss: " + std::to_string(predictions.size()) +
                     " predictions vs " + std::to_string(targets.size()) +
                     " targets");
  }
  double acc = 0.0;
  for (std::size_t j = 0; j < predictions.size(); ++j) {
    acc += loss(kind, predictions[j], targets[j]);
  }
  return acc / static_cast<double>(predictions.size());
}

BackwardResult backward_from_output_grads(
    const ForwardTrace& trace, const ParameterSet& params,
    std::span<const Vector> output_grads) {
  check_trace(trace, params);
  if (output_grads.size() != trace.predictions.size()) {
    throw ShapeError("backward: " + std::to_string(output_grads.size()) +
                     " output gradients for " +
                     std::to_string(trace.predictions.size()) + " predictions");
  }
  const std::size_t layers = trace.layer_count();
  const std::size_t steps = trace.timesteps();
  const std::size_t first_output = trace.first_output_step();

  BackwardResult r;
  r.grads = zeros_like(params);
  r.activation_grads.assign(layers, std::vector<Vector>(steps));
  r.activation_grad_norms.assign(layers, std::vector<double>(steps, 0.0));

  std::vector<Vector> da_next(layers);
  std::vector<Vector> dc_next(layers);
  for (std::size_t l = 0; l < layers; ++l) {
    da_next[l] = Vector(params.layers[l].hidden());
    dc_next[l] = Vector(params.layers[l].hidden());
  }

  for (std::size_t t = steps; t-- > 0;) {
    Vector from_above;
    for (std::size_t l = layers; l-- > 0;) {
      const CellStep& s = trace.steps[l][t];
      Vector da = da_next[l];
      if (l + 1 == layers && t >= first_output) {
        const Vector& dy = output_grads[t - first_output];
        add_outer(r.grads.head_w, dy, s.a);
        add_in_place(r.grads.head_b, dy);
        add_in_place(da, mat_t_vec_mul(params.head_w, dy));
      }
      if (l + 1 < layers) add_in_place(da, from_above);

      r.activation_grad_norms[l][t] = l2_norm(da.span());
      CellBackward cb =
          params.layers[l].kind == CellKind::kLstm
              ? lstm_backward(params.layers[l], r.grads.layers[l], s, da,
                              dc_next[l])
              : vanilla_backward(params.layers[l], r.grads.layers[l], s, da);
      r.activation_grads[l][t] = std::move(da);
      da_next[l] = std::move(cb.da_prev);
      if (!cb.dc_prev.empty()) dc_next[l] = std::move(cb.dc_prev);
      from_above = std::move(cb.dx);
    }
  }
  return r;
}

BackwardResult backward(const ForwardTrace& trace, const ParameterSet& params,
                        LossKind kind, std::span<const Vector> targets) {
  if (targets.size() != trace.predictions.size()) {
    throw ShapeError("backward: " + std::to_string(targets.size()) +
                     " targets for " + std::to_string(trace.predictions.size()) +
                     " predictions");
  }
  const double inv_k = 1.0 / static_cast<double>(targets.size());
  std::vector<Vector> dy;
  dy.reserve(targets.size());
  for (std::size_t j = 0; j < targets.size(); ++j) {
    dy.push_back(scale(loss_gradient(kind, trace.predictions[j], targets[j]),
                       inv_k));
  }
  BackwardResult r = backward_from_output_grads(trace, params, dy);
  r.loss = sequence_loss(kind, trace.predictions, targets);
  return r;
}

double batch_loss(const ParameterSet& params, std::span<const Example> batch,
                  LossKind kind) {
  if (batch.empty()) throw std::invalid_argument("batch_loss: empty batch");
  double acc = 0.0;
  for (const auto& ex : batch) {
    ForwardTrace trace = forward_sequence(params, ex.inputs, ex.targets.size());
    acc += sequence_loss(kind, trace.predictions, ex.targets);
  }
  return acc / static_cast<double>(batch.size());
}

std::vector<ForwardTrace> forward_batch(const ParameterSet& params,
                                        std::span<const Example> batch) {
  std::vector<ForwardTrace> traces;
  traces.reserve(batch.size());
  for (const auto& ex : batch) {
    traces.push_back(forward_sequence(params, ex.inputs, ex.targets.size()));
  }
  return traces;
}

BatchGradient backward_batch(const ParameterSet& params,
                             std::vector<ForwardTrace> traces,
                             std::span<const Example> batch, LossKind kind) {
  if (batch.empty()) throw std::invalid_argument("backward_batch: empty batch");
  if (traces.size() != batch.size()) {
    throw ShapeError("backward_batch: " + std::to_string(traces.size()) +
                     " traces for " + std::to_string(batch.size()) +
                     " examples");
  }
  BatchGradient out;
  out.grads = zeros_like(params);
  std::vector<std::span<double>> dst;
  for_each_tensor(out.grads, [&](std::span<double> t) { dst.push_back(t); });

  double loss_sum = 0.0;
  for (std::size_t n = 0; n < batch.size(); ++n) {
    BackwardResult r = backward(traces[n], params, kind, batch[n].targets);
    loss_sum += r.loss;
    std::size_t k = 0;
    for_each_tensor(std::as_const(r.grads), [&](std::span<const double> src) {
      auto d = dst[k++];
      for (std::size_t i = 0; i < d.size(); ++i) d[i] += src[i];
    });
    if (n == 0) out.first_backward = std::move(r);
  }
  const double inv_n = 1.0 / static_cast<double>(batch.size());
  for (auto d : dst) {
    for (double& x : d) x *= inv_n;
  }
  out.loss = loss_sum * inv_n;
  out.first_trace = std::move(traces.front());
  return out;
}

BatchGradient batch_gradient(const ParameterSet& params,
                             std::span<const Example> batch, LossKind kind) {
  return backward_batch(params, forward_batch(params, batch), batch, kind);
}

double global_norm(const GradientSet& grads) {
  double acc = 0.0;
  for_each_tensor(grads, [&](std::span<const double> t) {
    for (double x : t) acc += x * x;
  });
  return std::sqrt(acc);
}

GradientSet clip_gradients(const GradientSet& grads, double max_norm) {
  if (!(max_norm > 0.0)) {
    throw std::invalid_argument("clip_gradients: max_norm must be positive");
  }
  GradientSet out = grads;
  const double norm = global_norm(grads);
  if (norm > max_norm) {
    const double s = max_norm / norm;
    for_each_tensor(out, [&](std::span<double> t) {
      for (double& x : t) x *= s;
    });
  }
  return out;
}

GradCheckReport grad_check(const ParameterSet& params,
                           std::span<const Example> batch, LossKind kind,
                           const GradCheckOptions& options) {
  if (!(options.epsilon > 0.0)) {
    throw std::invalid_argument("grad_check: epsilon must be positive");
  }
  const BatchGradient analytic = batch_gradient(params, batch, kind);
  const std::vector<double> analytic_flat = flatten(analytic.grads);
  const std::size_t total = analytic_flat.size();

  // Map flat coordinates back to tensor names for the report.
  std::vector<std::string> names = tensor_names(params);
  std::vector<std::size_t> tensor_of(total);
  std::vector<std::size_t> offset_in(total);
  {
    std::size_t flat = 0;
    std::size_t tensor = 0;
    for_each_tensor(params, [&](std::span<const double> t) {
      for (std::size_t i = 0; i < t.size(); ++i, ++flat) {
        tensor_of[flat] = tensor;
        offset_in[flat] = i;
      }
      ++tensor;
    });
  }

  std::vector<std::size_t> coords(total);
  std::iota(coords.begin(), coords.end(), std::size_t{0});
  const std::size_t limit = std::max<std::size_t>(options.max_coordinates, 200);
  if (total > limit) {
    // Partial Fisher-Yates: the first `limit` entries become the sample.
    RngStream rng(options.subsample_seed);
    for (std::size_t i = 0; i < limit; ++i) {
      const std::size_t j = i + rng.uniform_index(total - i);
      std::swap(coords[i], coords[j]);
    }
    coords.resize(limit);
    std::sort(coords.begin(), coords.end());
  }

  ParameterSet probe = params;
  std::vector<std::span<double>> tensors;
  for_each_tensor(probe, [&](std::span<double> t) { tensors.push_back(t); });

  GradCheckReport report;
  for (std::size_t flat : coords) {
    double& theta = tensors[tensor_of[flat]][offset_in[flat]];
    const double saved = theta;
    theta = saved + options.epsilon;
    const double up = batch_loss(probe, batch, kind);
    theta = saved - options.epsilon;
    const double down = batch_loss(probe, batch, kind);
    theta = saved;

    const double numeric = (up - down) / (2.0 * options.epsilon);
    const double a = analytic_flat[flat];
    const double denom = std::max(std::abs(a) + std::abs(numeric), 1e-8);
    const double rel = std::abs(a - numeric) / denom;
    ++report.coordinates_checked;
    if (report.worst_tensor.empty() || rel > report.max_relative_error) {
      report.max_relative_error = rel;
      report.worst_tensor = names[tensor_of[flat]];
      report.worst_index = offset_in[flat];
      report.worst_analytic = a;
      report.worst_numeric = numeric;
    }
  }
  return report;
}

}  // namespace rnnscope
