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

// Training data: four periodic functions windowed into (input, target)
// samples, and character corpora windowed into one-hot next-char samples.

#ifndef RNNSCOPE_SEQUENCE_DATA_H_
#define RNNSCOPE_SEQUENCE_DATA_H_

#include <cstddef>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "rnnscope/rng.h"
#include "rnnscope/tensor.h"

namespace rnnscope {

enum class FunctionKind { kSine, kSawtooth, kSquare, kComposite };

inline constexpr FunctionKind kAllFunctionKinds[] = {
    FunctionKind::kSine, FunctionKind::kSawtooth, FunctionKind::kSquare,
    FunctionKind::kComposite};

std::string_view function_name(FunctionKind kind);
std::optional<FunctionKind> parse_function_kind(std::string_view name);

// sine 2*pi, sawtooth pi, square 4, composite 4*pi/3.
double function_period(FunctionKind kind);

//   sine       sin(x)
//   sawtooth   -1 + 2 * ((x mod pi) / pi), mod taken into [0, pi)
//   square     sgn(sin(pi/2 * x)), sgn(0) = 0
//   composite  (sin(3/2 x) + sin(9/2 x)) * 2/3
double function_value(FunctionKind kind, double x);

struct Series {
  std::vector<double> xs;
  std::vector<double> values;
};

// n samples starting at x0 with spacing dx. Each value gets
// noise_amp * e added, e ~ U[-1, 1]. One draw is taken per point even when
// noise_amp is zero, so rng consumption does not depend on the noise level.
Series generate_sequence(FunctionKind kind, double x0, std::size_t n,
                         double dx, double noise_amp, RngStream& rng);

// A windowed function sample: the input prefix (the sliding window) and the
// values the network has to predict after it.
struct WindowSample {
  std::vector<double> input;
  std::vector<double> target;

  bool operator==(const WindowSample&) const = default;
};

// Stride-1 windows; yields values.size() - window - horizon + 1 samples.
std::vector<WindowSample> make_windows(std::span<const double> values,
                                       std::size_t window,
                                       std::size_t horizon);

// Windowed sample with the abscissae kept, as the UI plots them.
struct SequenceSample {
  std::vector<double> xs;
  std::vector<double> values;
  std::size_t window = 0;
  std::size_t horizon = 0;
};

enum class CorpusKind { kAbab, kLorem, kFile };

std::string_view corpus_name(CorpusKind kind);

struct TextCorpus {
  CorpusKind kind = CorpusKind::kAbab;
  std::u32string text;
  // Sorted, unique code points of text.
  std::u32string alphabet;

  // Position of ch in the alphabet; throws std::out_of_range if absent.
  std::size_t index_of(char32_t ch) const;
};

TextCorpus make_corpus(CorpusKind kind);
// Builds a corpus over arbitrary text, inferring the alphabet.
TextCorpus corpus_from_text(std::u32string text, CorpusKind kind);
// Reads a UTF-8 file. Throws std::runtime_error on I/O or decoding errors.
TextCorpus load_corpus_file(const std::filesystem::path& path);

std::u32string utf8_decode(std::string_view bytes);
std::string utf8_encode(std::u32string_view text);

Vector one_hot(const TextCorpus& corpus, char32_t ch);

struct TextSample {
  std::vector<Vector> inputs;
  Vector target;
  std::size_t target_index = 0;
};

// One sample per position: window characters in, the following one out.
std::vector<TextSample> text_windows(const TextCorpus& corpus,
                                     std::size_t window);

// Draws batch_size pool indices uniformly with replacement.
std::vector<std::size_t> sample_batch_indices(std::size_t pool_size,
                                              std::size_t batch_size,
                                              RngStream& rng);

template <typename Sample>
std::vector<Sample> sample_batch(std::span<const Sample> pool,
                                 std::size_t batch_size, RngStream& rng) {
  std::vector<Sample> batch;
  batch.reserve(batch_size);
  for (std::size_t i : sample_batch_indices(pool.size(), batch_size, rng)) {
    batch.push_back(pool[i]);
  }
  return batch;
}

// A network-ready training example: the unrolled input sequence and the
// targets for its last targets.size() steps.
struct Example {
  std::vector<Vector> inputs;
  std::vector<Vector> targets;

  bool operator==(const Example&) const = default;
};

// Teacher forcing: the window plus the first horizon - 1 target values are
// fed as inputs; the last `horizon` steps each predict the next value.
Example to_example(const WindowSample& sample);
Example to_example(const TextSample& sample);

}  // namespace rnnscope

#endif  // RNNSCOPE_SEQUENCE_DATA_H_
