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

#ifndef RNNSCOPE_RNG_H_
#define RNNSCOPE_RNG_H_

#include <array>
#include <cstdint>
#include <string_view>

#include "rnnscope/tensor.h"

namespace rnnscope {

// Seeded xoshiro256** stream. The state is expanded from the seed with
// splitmix64, and every conversion to doubles or indices is done here
// rather than through <random> distributions, whose output is
// implementation-defined. Same seed, same sequence, on every platform.
class RngStream {
 public:
  static constexpr std::string_view kAlgorithmId = "xoshiro256**/splitmix64";

  explicit RngStream(std::uint64_t seed = 0);

  std::string_view algorithm_id() const { return kAlgorithmId; }
  std::uint64_t seed() const { return seed_; }
  const std::array<std::uint64_t, 4>& state() const { return state_; }

  std::uint64_t next_u64();
  // Uniform in [0, 1) with 53 bits of resolution.
  double uniform01();
  // Uniform in [lo, hi).
  double uniform(double lo, double hi);
  // Uniform integer in [0, n). n must be positive.
  std::uint64_t uniform_index(std::uint64_t n);

  bool operator==(const RngStream&) const = default;

 private:
  std::uint64_t seed_;
  std::array<std::uint64_t, 4> state_;
};

// Mixes a seed with a stream tag so independent consumers (initialization,
// data sampling, the validation fixture) never share a sequence.
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t tag);

enum class InitScheme { kGlorotUniform };

std::string_view init_scheme_name(InitScheme scheme);
// Throws std::invalid_argument for unknown names.
InitScheme parse_init_scheme(std::string_view name);

// Fills a rows x cols matrix; glorot-uniform draws from
// +-sqrt(6 / (fan_in + fan_out)) with fan_in = cols, fan_out = rows.
Matrix init_params(std::size_t rows, std::size_t cols, InitScheme scheme,
                   RngStream& rng);

}  // namespace rnnscope

#endif  // RNNSCOPE_RNG_H_
