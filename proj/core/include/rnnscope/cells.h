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

// Forward computation for vanilla RNN and LSTM cells. Every intermediate is
// kept in a CellStep so the trace can be shown and differentiated later.
//
//   vanilla:  a = tanh(Wax x + Waa a_prev + ba)
//   lstm:     i = sigmoid(Wix x + Wia a_prev + bi)
//             f = sigmoid(Wfx x + Wfa a_prev + bf)
//             o = sigmoid(Wox x + Woa a_prev + bo)
//             g = tanh(Wcx x + Wca a_prev + bc)        (the candidate)
//             c = f * c_prev + i * g
//             a = o * tanh(c)

#ifndef RNNSCOPE_CELLS_H_
#define RNNSCOPE_CELLS_H_

#include <cstddef>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "rnnscope/rng.h"
#include "rnnscope/tensor.h"

namespace rnnscope {

enum class CellKind { kVanilla, kLstm };

std::string_view cell_kind_name(CellKind kind);
std::optional<CellKind> parse_cell_kind(std::string_view name);

// Block indices into CellParams::blocks. A vanilla cell has a single block
// (kActivation); an LSTM cell has four.
enum Block : std::size_t {
  kActivation = 0,
  kInputGate = 0,
  kForgetGate = 1,
  kOutputGate = 2,
  kCandidate = 3,
};

std::size_t block_count(CellKind kind);
std::string_view block_name(CellKind kind, std::size_t block);

struct GateWeights {
  Matrix wx;  // hidden x input_dim
  Matrix wa;  // hidden x hidden
  Vector b;   // hidden

  bool operator==(const GateWeights&) const = default;
};

struct CellParams {
  CellKind kind = CellKind::kLstm;
  std::vector<GateWeights> blocks;

  std::size_t input_dim() const { return blocks.front().wx.cols(); }
  std::size_t hidden() const { return blocks.front().wx.rows(); }

  bool operator==(const CellParams&) const = default;
};

inline constexpr std::size_t kMaxLayers = 7;

// All weights of one network. Gradients and optimizer moments reuse this
// type so they always mirror the parameter shapes.
struct ParameterSet {
  std::vector<CellParams> layers;
  Matrix head_w;  // output_dim x hidden of the last layer
  Vector head_b;

  CellKind kind() const { return layers.front().kind; }
  std::size_t input_dim() const { return layers.front().input_dim(); }
  std::size_t output_dim() const { return head_w.rows(); }
  std::size_t parameter_count() const;

  bool operator==(const ParameterSet&) const = default;
};

struct NetworkShape {
  CellKind kind = CellKind::kLstm;
  std::size_t input_dim = 1;
  std::size_t hidden = 16;
  std::size_t layers = 1;
  std::size_t output_dim = 1;
};

// Throws ShapeError for zero dimensions or a layer count outside 1..7.
ParameterSet zero_parameters(const NetworkShape& shape);
// Glorot-style init for every matrix; biases zero except the LSTM forget
// gate, which starts at forget_bias.
ParameterSet init_parameters(const NetworkShape& shape, InitScheme scheme,
                             double forget_bias, RngStream& rng);
// Same shapes as params, all entries zero.
ParameterSet zeros_like(const ParameterSet& params);
// Checks the layer chaining invariants. Throws ShapeError naming the problem.
void validate_parameters(const ParameterSet& params);

// Visits every weight tensor in a fixed order: per layer, per block wx, wa,
// b; then head_w, head_b.
void for_each_tensor(ParameterSet& params,
                     const std::function<void(std::span<double>)>& fn);
void for_each_tensor(const ParameterSet& params,
                     const std::function<void(std::span<const double>)>& fn);
// Same order as for_each_tensor, e.g. "layer0.forget.wx" or "head.b".
std::vector<std::string> tensor_names(const ParameterSet& params);

std::vector<double> flatten(const ParameterSet& params);

// Trace record of one cell at one timestep. Vanilla steps leave the LSTM-only
// fields (c_prev, i, f, o, g, c) empty.
struct CellStep {
  Vector x;
  Vector a_prev;
  Vector c_prev;
  Vector i;
  Vector f;
  Vector o;
  Vector g;
  Vector c;
  Vector a;

  bool operator==(const CellStep&) const = default;
};

CellStep vanilla_step(const CellParams& p, const Vector& x,
                      const Vector& a_prev);
CellStep lstm_step(const CellParams& p, const Vector& x, const Vector& a_prev,
                   const Vector& c_prev);

struct LayerState {
  Vector a;
  Vector c;  // empty for vanilla

  bool operator==(const LayerState&) const = default;
};

using NetworkState = std::vector<LayerState>;

NetworkState zero_state(const ParameterSet& params);

// Advances every layer by one timestep and returns the per-layer records.
std::vector<CellStep> step_network(const ParameterSet& params,
                                   NetworkState& state, const Vector& x);

Vector output_head(const ParameterSet& params, const Vector& a);

struct ForwardTrace {
  CellKind kind = CellKind::kLstm;
  // steps[layer][t], rectangular.
  std::vector<std::vector<CellStep>> steps;
  // Head outputs for the last predictions.size() timesteps, in time order.
  std::vector<Vector> predictions;
  NetworkState final_states;

  std::size_t layer_count() const { return steps.size(); }
  std::size_t timesteps() const {
    return steps.empty() ? 0 : steps.front().size();
  }
  // Timestep index of predictions[0].
  std::size_t first_output_step() const {
    return timesteps() - predictions.size();
  }

  bool operator==(const ForwardTrace&) const = default;
};

// Runs the network from a zero state over inputs. The head is applied to the
// last layer's activation at each of the final `outputs` timesteps.
ForwardTrace forward_sequence(const ParameterSet& params,
                              std::span<const Vector> inputs,
                              std::size_t outputs = 1);

enum class Feedback {
  kValue,         // feed the prediction itself back
  kArgmaxOneHot,  // feed the one-hot of the highest-scoring output
};

struct FreeRunResult {
  std::vector<Vector> predictions;
  // Covers the seed window and the k - 1 fed-back inputs.
  ForwardTrace trace;
};

// Builds state over seed_window, then produces k predictions, feeding each
// one back as the next input.
FreeRunResult free_run(const ParameterSet& params,
                       std::span<const Vector> seed_window, std::size_t k,
                       Feedback feedback);

std::size_t argmax(const Vector& v);

}  // namespace rnnscope

#endif  // RNNSCOPE_CELLS_H_
