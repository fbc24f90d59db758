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

#include "rnnscope/cells.h"

#include <cmath>
#include <stdexcept>

namespace rnnscope {
namespace {

Vector pre_activation(const GateWeights& w, const Vector& x,
                      const Vector& a_prev) {
  Vector z = mat_vec_mul(w.wx, x);
  add_in_place(z, mat_vec_mul(w.wa, a_prev));
  add_in_place(z, w.b);
  return z;
}

void check_cell_inputs(const CellParams& p, const Vector& x,
                       const Vector& a_prev, std::size_t expected_blocks) {
  if (p.blocks.size() != expected_blocks) {
    throw ShapeError("cell has " + std::to_string(p.blocks.size()) +
                     " weight blocks, expected " +
                     std::to_string(expected_blocks));
  }
  if (x.size() != p.input_dim()) {
    throw ShapeError("cell input of length " + std::to_string(x.size()) +
                     " vs input_dim " + std::to_string(p.input_dim()));
  }
  if (a_prev.size() != p.hidden()) {
    throw ShapeError("previous activation of length " +
                     std::to_string(a_prev.size()) + " vs hidden " +
                     std::to_string(p.hidden()));
  }
}

CellParams make_cell(CellKind kind, std::size_t input_dim,
                     std::size_t hidden) {
  CellParams cell;
  cell.kind = kind;
  cell.blocks.resize(block_count(kind));
  for (auto& blk : cell.blocks) {
    blk.wx = Matrix(hidden, input_dim);
    blk.wa = Matrix(hidden, hidden);
    blk.b = Vector(hidden);
  }
  return cell;
}

void check_shape(const NetworkShape& shape) {
  if (shape.layers < 1 || shape.layers > kMaxLayers) {
    throw ShapeError("layer count must be in 1..7, got " +
                     std::to_string(shape.layers));
  }
  if (shape.input_dim == 0 || shape.hidden == 0 || shape.output_dim == 0) {
    throw ShapeError("network dimensions must be positive");
  }
}

}  // namespace

std::string_view cell_kind_name(CellKind kind) {
  return kind == CellKind::kVanilla ? "vanilla" : "lstm";
}

std::optional<CellKind> parse_cell_kind(std::string_view name) {
  if (name == "vanilla") return CellKind::kVanilla;
  if (name == "lstm") return CellKind::kLstm;
  return std::nullopt;
}

std::size_t block_count(CellKind kind) {
  return kind == CellKind::kVanilla ? 1 : 4;
}

std::string_view block_name(CellKind kind, std::size_t block) {
  if (kind == CellKind::kVanilla) return "activation";
  switch (block) {
    case kInputGate:
      return "input";
    case kForgetGate:
      return "forget";
    case kOutputGate:
      return "output";
    case kCandidate:
      return "candidate";
    default:
      return "unknown";
  }
}

std::size_t ParameterSet::parameter_count() const {
  std::size_t n = 0;
  for_each_tensor(*this, [&](std::span<const double> t) { n += t.size(); });
  return n;
}

ParameterSet zero_parameters(const NetworkShape& shape) {
  check_shape(shape);
  ParameterSet p;
  std::size_t in = shape.input_dim;
  for (std::size_t l = 0; l < shape.layers; ++l) {
    p.layers.push_back(make_cell(shape.kind, in, shape.hidden));
    in = shape.hidden;
  }
  p.head_w = Matrix(shape.output_dim, shape.hidden);
  p.head_b = Vector(shape.output_dim);
  return p;
}

ParameterSet init_parameters(const NetworkShape& shape, InitScheme scheme,
                             double forget_bias, RngStream& rng) {
  ParameterSet p = zero_parameters(shape);
  for (auto& cell : p.layers) {
    for (auto& blk : cell.blocks) {
      blk.wx = init_params(blk.wx.rows(), blk.wx.cols(), scheme, rng);
      blk.wa = init_params(blk.wa.rows(), blk.wa.cols(), scheme, rng);
    }
    if (cell.kind == CellKind::kLstm) {
      for (double& b : cell.blocks[kForgetGate].b) b = forget_bias;
    }
  }
  p.head_w = init_params(p.head_w.rows(), p.head_w.cols(), scheme, rng);
  return p;
}

ParameterSet zeros_like(const ParameterSet& params) {
  ParameterSet z = params;
  for_each_tensor(z, [](std::span<double> t) {
    for (double& x : t) x = 0.0;
  });
  return z;
}

void validate_parameters(const ParameterSet& params) {
  if (params.layers.empty() || params.layers.size() > kMaxLayers) {
    throw ShapeError("layer count must be in 1..7, got " +
                     std::to_string(params.layers.size()));
  }
  std::size_t in = params.layers.front().input_dim();
  for (std::size_t l = 0; l < params.layers.size(); ++l) {
    const auto& cell = params.layers[l];
    if (cell.kind != params.layers.front().kind) {
      throw ShapeError("layer " + std::to_string(l) + " has a different cell kind");
    }
    if (cell.blocks.size() != block_count(cell.kind)) {
      throw ShapeError("layer " + std::to_string(l) + " has wrong block count");
    }
    const std::size_t h = cell.hidden();
    for (const auto& blk : cell.blocks) {
      if (blk.wx.rows() != h || blk.wx.cols() != in || blk.wa.rows() != h ||
          blk.wa.cols() != h || blk.b.size() != h) {
        throw ShapeError("layer " + std::to_string(l) +
                         " weights do not chain: wx " + shape_string(blk.wx) +
                         ", wa " + shape_string(blk.wa) + ", b " +
                         std::to_string(blk.b.size()));
      }
    }
    in = h;
  }
  if (params.head_w.cols() != in || params.head_b.size() != params.head_w.rows()) {
    throw ShapeError("head " + shape_string(params.head_w) +
                     " does not fit last hidden size " + std::to_string(in));
  }
}

void for_each_tensor(ParameterSet& params,
                     const std::function<void(std::span<double>)>& fn) {
  for (auto& cell : params.layers) {
    for (auto& blk : cell.blocks) {
      fn(blk.wx.span());
      fn(blk.wa.span());
      fn(blk.b.span());
    }
  }
  fn(params.head_w.span());
  fn(params.head_b.span());
}

void for_each_tensor(const ParameterSet& params,
                     const std::function<void(std::span<const double>)>& fn) {
  for (const auto& cell : params.layers) {
    for (const auto& blk : cell.blocks) {
      fn(blk.wx.span());
      fn(blk.wa.span());
      fn(blk.b.span());
    }
  }
  fn(params.head_w.span());
  fn(params.head_b.span());
}

std::vector<std::string> tensor_names(const ParameterSet& params) {
  std::vector<std::string> names;
  for (std::size_t l = 0; l < params.layers.size(); ++l) {
    const auto& cell = params.layers[l];
    for (std::size_t b = 0; b < cell.blocks.size(); ++b) {
      const std::string prefix = "layer" + std::to_string(l) + "." +
                                 std::string(block_name(cell.kind, b));
      names.push_back(prefix + ".wx");
      names.push_back(prefix + ".wa");
      names.push_back(prefix + ".b");
    }
  }
  names.emplace_back("head.w");
  names.emplace_back("head.b");
  return names;
}

std::vector<double> flatten(const ParameterSet& params) {
  std::vector<double> out;
  out.reserve(params.parameter_count());
  for_each_tensor(params, [&](std::span<const double> t) {
    out.insert(out.end(), t.begin(), t.end());
  });
  return out;
}

CellStep vanilla_step(const CellParams& p, const Vector& x,
                      const Vector& a_prev) {
  check_cell_inputs(p, x, a_prev, 1);
  CellStep s;
  s.x = x;
  s.a_prev = a_prev;
  s.a = tanh_vec(pre_activation(p.blocks[kActivation], x, a_prev));
  return s;
}

CellStep lstm_step(const CellParams& p, const Vector& x, const Vector& a_prev,
                   const Vector& c_prev) {
  check_cell_inputs(p, x, a_prev, 4);
  if (c_prev.size() != p.hidden()) {
    throw ShapeError("previous cell state of length " +
                     std::to_string(c_prev.size()) + " vs hidden " +
                     std::to_string(p.hidden()));
  }
  CellStep s;
  s.x = x;
  s.a_prev = a_prev;
  s.c_prev = c_prev;
  s.i = sigmoid(pre_activation(p.blocks[kInputGate], x, a_prev));
  s.f = sigmoid(pre_activation(p.blocks[kForgetGate], x, a_prev));
  s.o = sigmoid(pre_activation(p.blocks[kOutputGate], x, a_prev));
  s.g = tanh_vec(pre_activation(p.blocks[kCandidate], x, a_prev));
  s.c = add(hadamard(s.f, c_prev), hadamard(s.i, s.g));
  s.a = hadamard(s.o, tanh_vec(s.c));
  return s;
}

NetworkState zero_state(const ParameterSet& params) {
  NetworkState state;
  for (const auto& cell : params.layers) {
    LayerState ls;
    ls.a = Vector(cell.hidden());
    if (cell.kind == CellKind::kLstm) ls.c = Vector(cell.hidden());
    state.push_back(std::move(ls));
  }
  return state;
}

std::vector<CellStep> step_network(const ParameterSet& params,
                                   NetworkState& state, const Vector& x) {
  std::vector<CellStep> steps;
  steps.reserve(params.layers.size());
  const Vector* input = &x;
  for (std::size_t l = 0; l < params.layers.size(); ++l) {
    const auto& cell = params.layers[l];
    CellStep s = cell.kind == CellKind::kLstm
                     ? lstm_step(cell, *input, state[l].a, state[l].c)
                     : vanilla_step(cell, *input, state[l].a);
    state[l].a = s.a;
    if (cell.kind == CellKind::kLstm) state[l].c = s.c;
    steps.push_back(std::move(s));
    input = &steps.back().a;
  }
  return steps;
}

Vector output_head(const ParameterSet& params, const Vector& a) {
  if (a.size() != params.head_w.cols()) {
    throw ShapeError("output_head: activation of length " +
                     std::to_string(a.size()) + " vs head " +
                     shape_string(params.head_w));
  }
  Vector y = mat_vec_mul(params.head_w, a);
  add_in_place(y, params.head_b);
  return y;
}

ForwardTrace forward_sequence(const ParameterSet& params,
                              std::span<const Vector> inputs,
                              std::size_t outputs) {
  if (inputs.empty()) {
    throw std::invalid_argument("forward_sequence: empty input sequence");
  }
  if (outputs == 0 || outputs > inputs.size()) {
    throw std::invalid_argument("forward_sequence: cannot emit " +
                                std::to_string(outputs) + " outputs from " +
                                std::to_string(inputs.size()) + " steps");
  }
  ForwardTrace trace;
  trace.kind = params.kind();
  trace.steps.resize(params.layers.size());
  for (auto& row : trace.steps) row.reserve(inputs.size());

  NetworkState state = zero_state(params);
  const std::size_t first_output = inputs.size() - outputs;
  for (std::size_t t = 0; t < inputs.size(); ++t) {
    auto layer_steps = step_network(params, state, inputs[t]);
    for (std::size_t l = 0; l < layer_steps.size(); ++l) {
      trace.steps[l].push_back(std::move(layer_steps[l]));
    }
    if (t >= first_output) {
      trace.predictions.push_back(output_head(params, state.back().a));
    }
  }
  trace.final_states = std::move(state);
  return trace;
}

std::size_t argmax(const Vector& v) {
  std::size_t best = 0;
  for (std::size_t i = 1; i < v.size(); ++i) {
    if (v[i] > v[best]) best = i;
  }
  return best;
}

FreeRunResult free_run(const ParameterSet& params,
                       std::span<const Vector> seed_window, std::size_t k,
                       Feedback feedback) {
  if (k == 0) throw std::invalid_argument("free_run: k must be >= 1");
  std::vector<Vector> inputs(seed_window.begin(), seed_window.end());
  if (inputs.empty()) {
    throw std::invalid_argument("free_run: empty seed window");
  }
  if (k > 1 && params.output_dim() != params.input_dim()) {
    throw ShapeError("free_run: output dimension " +
                     std::to_string(params.output_dim()) +
                     " cannot be fed back into input dimension " +
                     std::to_string(params.input_dim()));
  }

  FreeRunResult result;
  ForwardTrace& trace = result.trace;
  trace.kind = params.kind();
  trace.steps.resize(params.layers.size());
  NetworkState state = zero_state(params);

  auto advance = [&](const Vector& x) {
    auto layer_steps = step_network(params, state, x);
    for (std::size_t l = 0; l < layer_steps.size(); ++l) {
      trace.steps[l].push_back(std::move(layer_steps[l]));
    }
  };

  for (const auto& x : inputs) advance(x);
  result.predictions.push_back(output_head(params, state.back().a));
  while (result.predictions.size() < k) {
    const Vector& last = result.predictions.back();
    if (feedback == Feedback::kValue) {
      advance(last);
    } else {
      Vector hot(last.size());
      hot[argmax(last)] = 1.0;
      advance(hot);
    }
    result.predictions.push_back(output_head(params, state.back().a));
  }
  trace.predictions = result.predictions;
  trace.final_states = std::move(state);
  return result;
}

}  // namespace rnnscope
