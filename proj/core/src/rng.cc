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

#include "rnnscope/rng.h"

#include <bit>
#include <cmath>
#include <stdexcept>
#include <string>

namespace rnnscope {
namespace {

std::uint64_t splitmix64(std::uint64_t& x) {
  std::uint64_t z = (x += 0x9e3779b97f4a7c15ULL);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

}  // namespace

RngStream::RngStream(std::uint64_t seed) : seed_(seed) {
  std::uint64_t sm = seed;
  for (auto& word : state_) word = splitmix64(sm);
}

std::uint64_t RngStream::next_u64() {
  const std::uint64_t result = std::rotl(state_[1] * 5, 7) * 9;
  const std::uint64_t t = state_[1] << 17;
  state_[2] ^= state_[0];
  state_[3] ^= state_[1];
  state_[1] ^= state_[2];
  state_[0] ^= state_[3];
  state_[2] ^= t;
  state_[3] = std::rotl(state_[3], 45);
  return result;
}

double RngStream::uniform01() {
  return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

double RngStream::uniform(double lo, double hi) {
  return lo + (hi - lo) * uniform01();
}

std::uint64_t RngStream::uniform_index(std::uint64_t n) {
  if (n == 0) throw std::invalid_argument("uniform_index: empty range");
  // Rejection keeps the result unbiased: discard the low partial block.
  const std::uint64_t threshold = (0 - n) % n;
  for (;;) {
    const std::uint64_t r = next_u64();
    if (r >= threshold) return r % n;
  }
}

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t tag) {
  std::uint64_t x = seed ^ (tag * 0xd1b54a32d192ed03ULL);
  splitmix64(x);
  return splitmix64(x);
}

std::string_view init_scheme_name(InitScheme scheme) {
  switch (scheme) {
    case InitScheme::kGlorotUniform:
      return "glorot-uniform";
  }
  return "unknown";
}

InitScheme parse_init_scheme(std::string_view name) {
  if (name == "glorot-uniform") return InitScheme::kGlorotUniform;
  throw std::invalid_argument("unknown init scheme '" + std::string(name) +
                              "'");
}

Matrix init_params(std::size_t rows, std::size_t cols, InitScheme scheme,
                   RngStream& rng) {
  if (rows == 0 || cols == 0) {
    throw ShapeError("init_params: dimensions must be positive, got " +
                     std::to_string(rows) + "x" + std::to_string(cols));
  }
  Matrix m(rows, cols);
  switch (scheme) {
    case InitScheme::kGlorotUniform: {
      const double bound =
          std::sqrt(6.0 / static_cast<double>(rows + cols));
      for (double& w : m.span()) w = rng.uniform(-bound, bound);
      break;
    }
  }
  return m;
}

}  // namespace rnnscope
