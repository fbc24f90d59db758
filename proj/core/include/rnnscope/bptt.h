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

// Losses and full backpropagation through time over a recorded ForwardTrace.
// Gradients are hand-derived for the two cell kinds; grad_check compares them
// against central finite differences.

#ifndef RNNSCOPE_BPTT_H_
#define RNNSCOPE_BPTT_H_

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "rnnscope/cells.h"
#include "rnnscope/rng.h"
#include "rnnscope/sequence_data.h"
#include "rnnscope/tensor.h"

namespace rnnscope {

enum class LossKind { kMse, kSoftmaxCrossEntropy };

std::string_view loss_kind_name(LossKind kind);

// mse: mean of squared differences.
// softmax-cross-entropy: -sum_j target[j] * log softmax(prediction)[j],
// which is -log softmax(prediction)[target index] for a one-hot target.
double loss(LossKind kind, const Vector& prediction, const Vector& target);
// d loss / d prediction.
Vector loss_gradient(LossKind kind, const Vector& prediction,
                     const Vector& target);
Vector softmax(const Vector& logits);

// Mean of the per-step losses over a prediction horizon.
double sequence_loss(LossKind kind, std::span<const Vector> predictions,
                     std::span<const Vector> targets);

using GradientSet = ParameterSet;

struct BackwardResult {
  GradientSet grads;
  double loss = 0.0;
  // Total d loss / d a for every [layer][t], recurrence included.
  std::vector<std::vector<Vector>> activation_grads;
  // Euclidean norms of activation_grads, same indexing.
  std::vector<std::vector<double>> activation_grad_norms;
};

// Loss is sequence_loss over trace.predictions vs targets. Throws ShapeError
// when the trace, params and targets disagree.
BackwardResult backward(const ForwardTrace& trace, const ParameterSet& params,
                        LossKind kind, std::span<const Vector> targets);

// Reverse pass seeded with arbitrary d loss / d prediction vectors, one per
// trace prediction. The loss field of the result is left at zero.
BackwardResult backward_from_output_grads(const ForwardTrace& trace,
                                          const ParameterSet& params,
                                          std::span<const Vector> output_grads);

// Mean loss over examples (forward only).
double batch_loss(const ParameterSet& params, std::span<const Example> batch,
                  LossKind kind);

struct BatchGradient {
  double loss = 0.0;  // mean over the batch
  GradientSet grads;  // mean over the batch
  // Trace and reverse pass of batch element 0, kept for display.
  ForwardTrace first_trace;
  BackwardResult first_backward;
};

// Forward pass of every example; trace n predicts the last
// batch[n].targets.size() steps.
std::vector<ForwardTrace> forward_batch(const ParameterSet& params,
                                        std::span<const Example> batch);

// Reverse pass over traces from forward_batch. Examples are processed and
// summed in batch order, so the result is bit-reproducible.
BatchGradient backward_batch(const ParameterSet& params,
                             std::vector<ForwardTrace> traces,
                             std::span<const Example> batch, LossKind kind);

// forward_batch followed by backward_batch.
BatchGradient batch_gradient(const ParameterSet& params,
                             std::span<const Example> batch, LossKind kind);

double global_norm(const GradientSet& grads);

// Rescales every entry by max_norm / norm when the global L2 norm exceeds
// max_norm. Throws std::invalid_argument for max_norm <= 0.
GradientSet clip_gradients(const GradientSet& grads, double max_norm);

struct GradCheckOptions {
  double epsilon = 1e-5;
  // Check every coordinate when the network has at most this many; otherwise
  // check a random subset of this size (never fewer than 200).
  std::size_t max_coordinates = 5000;
  std::uint64_t subsample_seed = 0;
};

struct GradCheckReport {
  double max_relative_error = 0.0;
  std::size_t coordinates_checked = 0;
  std::string worst_tensor;
  std::size_t worst_index = 0;
  double worst_analytic = 0.0;
  double worst_numeric = 0.0;
};

// Relative error per coordinate is
//   |analytic - numeric| / max(|analytic| + |numeric|, 1e-8)
// with numeric = (L(theta + eps) - L(theta - eps)) / (2 eps).
GradCheckReport grad_check(const ParameterSet& params,
                           std::span<const Example> batch, LossKind kind,
                           const GradCheckOptions& options = {});

}  // namespace rnnscope

#endif  // RNNSCOPE_BPTT_H_
