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

#include "rnnscope/sequence_data.h"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>
#include <sstream>
#include <stdexcept>

namespace rnnscope {
namespace {

constexpr double kPi = std::numbers::pi;

constexpr std::string_view kLoremIpsum =
    "lorem ipsum dolor sit amet, consectetur adipiscing elit, sed do eiusmod "
    "tempor incididunt ut labore et dolore magna aliqua. ut enim ad minim "
    "veniam, quis nostrud exercitation ullamco laboris nisi ut aliquip ex ea "
    "commodo consequat. duis aute irure dolor in reprehenderit in voluptate "
    "velit esse cillum dolore eu fugiat nulla pariatur. excepteur sint "
    "occaecat cupidatat non proident, sunt in culpa qui officia deserunt "
    "mollit anim id est laborum.";

constexpr int kAbabRepeats = 64;

double signum(double v) {
  if (v > 0.0) return 1.0;
  if (v < 0.0) return -1.0;
  return 0.0;
}

}  // namespace

std::string_view function_name(FunctionKind kind) {
  switch (kind) {
    case FunctionKind::kSine:
      return "sine";
    case FunctionKind::kSawtooth:
      return "sawtooth";
    case FunctionKind::kSquare:
      return "square";
    case FunctionKind::kComposite:
      return "composite";
  }
  return "unknown";
}

std::optional<FunctionKind> parse_function_kind(std::string_view name) {
  for (FunctionKind kind : kAllFunctionKinds) {
    if (function_name(kind) == name) return kind;
  }
  return std::nullopt;
}

double function_period(FunctionKind kind) {
  switch (kind) {
    case FunctionKind::kSine:
      return 2.0 * kPi;
    case FunctionKind::kSawtooth:
      return kPi;
    case FunctionKind::kSquare:
      return 4.0;
    case FunctionKind::kComposite:
      return 4.0 * kPi / 3.0;
  }
  return 0.0;
}

double function_value(FunctionKind kind, double x) {
  switch (kind) {
    case FunctionKind::kSine:
      return std::sin(x);
    case FunctionKind::kSawtooth: {
      double r = std::fmod(x, kPi);
      if (r < 0.0) r += kPi;
      if (r >= kPi) r = 0.0;
      return -1.0 + 2.0 * (r / kPi);
    }
    case FunctionKind::kSquare:
      return signum(std::sin(kPi / 2.0 * x));
    case FunctionKind::kComposite:
      return (std::sin(1.5 * x) + std::sin(4.5 * x)) * (2.0 / 3.0);
  }
  return 0.0;
}

Series generate_sequence(FunctionKind kind, double x0, std::size_t n,
                         double dx, double noise_amp, RngStream& rng) {
  if (n < 2) {
    throw std::invalid_argument("generate_sequence: n must be >= 2, got " +
                                std::to_string(n));
  }
  if (!(dx > 0.0)) {
    throw std::invalid_argument("generate_sequence: dx must be positive");
  }
  if (!(noise_amp >= 0.0 && noise_amp <= 1.0)) {
    throw std::invalid_argument("generate_sequence: noise_amp outside [0, 1]");
  }
  Series s;
  s.xs.resize(n);
  s.values.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double x = x0 + static_cast<double>(i) * dx;
    const double eps = rng.uniform(-1.0, 1.0);
    s.xs[i] = x;
    s.values[i] = function_value(kind, x);
    if (noise_amp > 0.0) s.values[i] += noise_amp * eps;
  }
  return s;
}

std::vector<WindowSample> make_windows(std::span<const double> values,
                                       std::size_t window,
                                       std::size_t horizon) {
  if (window == 0 || horizon == 0) {
    throw std::invalid_argument("make_windows: window and horizon must be >= 1");
  }
  if (values.size() < window + horizon) {
    throw std::invalid_argument(
        "make_windows: sequence of length " + std::to_string(values.size()) +
        " is shorter than window + horizon = " +
        std::to_string(window + horizon));
  }
  std::vector<WindowSample> out;
  const std::size_t count = values.size() - window - horizon + 1;
  out.reserve(count);
  for (std::size_t j = 0; j < count; ++j) {
    WindowSample s;
    s.input.assign(values.begin() + j, values.begin() + j + window);
    s.target.assign(values.begin() + j + window,
                    values.begin() + j + window + horizon);
    out.push_back(std::move(s));
  }
  return out;
}

std::string_view corpus_name(CorpusKind kind) {
  switch (kind) {
    case CorpusKind::kAbab:
      return "abab";
    case CorpusKind::kLorem:
      return "lorem";
    case CorpusKind::kFile:
      return "file";
  }
  return "unknown";
}

std::size_t TextCorpus::index_of(char32_t ch) const {
  auto it = std::lower_bound(alphabet.begin(), alphabet.end(), ch);
  if (it == alphabet.end() || *it != ch) {
    throw std::out_of_range("character not in corpus alphabet");
  }
  return static_cast<std::size_t>(it - alphabet.begin());
}

TextCorpus corpus_from_text(std::u32string text, CorpusKind kind) {
  TextCorpus c;
  c.kind = kind;
  c.alphabet = text;
  std::sort(c.alphabet.begin(), c.alphabet.end());
  c.alphabet.erase(std::unique(c.alphabet.begin(), c.alphabet.end()),
                   c.alphabet.end());
  c.text = std::move(text);
  return c;
}

TextCorpus make_corpus(CorpusKind kind) {
  switch (kind) {
    case CorpusKind::kAbab: {
      std::u32string text;
      for (int i = 0; i < kAbabRepeats; ++i) text += U"ab";
      return corpus_from_text(std::move(text), kind);
    }
    case CorpusKind::kLorem:
      return corpus_from_text(utf8_decode(kLoremIpsum), kind);
    case CorpusKind::kFile:
      break;
  }
  throw std::invalid_argument("make_corpus: file corpora need a path");
}

TextCorpus load_corpus_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open corpus " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return corpus_from_text(utf8_decode(buf.str()), CorpusKind::kFile);
}

std::u32string utf8_decode(std::string_view bytes) {
  std::u32string out;
  out.reserve(bytes.size());
  std::size_t i = 0;
  while (i < bytes.size()) {
    const auto lead = static_cast<unsigned char>(bytes[i]);
    std::size_t extra = 0;
    char32_t cp = 0;
    if (lead < 0x80) {
      cp = lead;
    } else if ((lead & 0xE0) == 0xC0) {
      extra = 1;
      cp = lead & 0x1F;
    } else if ((lead & 0xF0) == 0xE0) {
      extra = 2;
      cp = lead & 0x0F;
    } else if ((lead & 0xF8) == 0xF0) {
      extra = 3;
      cp = lead & 0x07;
    } else {
      throw std::runtime_error("invalid UTF-8 lead byte at offset " +
                               std::to_string(i));
    }
    if (i + extra >= bytes.size()) {
      throw std::runtime_error("truncated UTF-8 sequence at offset " +
                               std::to_string(i));
    }
    for (std::size_t k = 1; k <= extra; ++k) {
      const auto cont = static_cast<unsigned char>(bytes[i + k]);
      if ((cont & 0xC0) != 0x80) {
        throw std::runtime_error("invalid UTF-8 continuation at offset " +
                                 std::to_string(i + k));
      }
      cp = (cp << 6) | (cont & 0x3F);
    }
    out.push_back(cp);
    i += extra + 1;
  }
  return out;
}

std::string utf8_encode(std::u32string_view text) {
  std::string out;
  out.reserve(text.size());
  for (char32_t cp : text) {
    if (cp < 0x80) {
      out.push_back(static_cast<char>(cp));
    } else if (cp < 0x800) {
      out.push_back(static_cast<char>(0xC0 | (cp >> 6)));
      out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
    } else if (cp < 0x10000) {
      out.push_back(static_cast<char>(0xE0 | (cp >> 12)));
      out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
      out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
    } else {
      out.push_back(static_cast<char>(0xF0 | (cp >> 18)));
      out.push_back(static_cast<char>(0x80 | ((cp >> 12) & 0x3F)));
      out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
      out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
    }
  }
  return out;
}

Vector one_hot(const TextCorpus& corpus, char32_t ch) {
  Vector v(corpus.alphabet.size());
  v[corpus.index_of(ch)] = 1.0;
  return v;
}

std::vector<TextSample> text_windows(const TextCorpus& corpus,
                                     std::size_t window) {
  if (window == 0 || corpus.text.size() <= window) {
    throw std::invalid_argument(
        "text_windows: window " + std::to_string(window) +
        " needs a text longer than itself (text has " +
        std::to_string(corpus.text.size()) + " characters)");
  }
  std::vector<Vector> encoded;
  encoded.reserve(corpus.text.size());
  for (char32_t ch : corpus.text) encoded.push_back(one_hot(corpus, ch));

  std::vector<TextSample> out;
  const std::size_t count = corpus.text.size() - window;
  out.reserve(count);
  for (std::size_t j = 0; j < count; ++j) {
    TextSample s;
    s.inputs.assign(encoded.begin() + j, encoded.begin() + j + window);
    s.target = encoded[j + window];
    s.target_index = corpus.index_of(corpus.text[j + window]);
    out.push_back(std::move(s));
  }
  return out;
}

std::vector<std::size_t> sample_batch_indices(std::size_t pool_size,
                                              std::size_t batch_size,
                                              RngStream& rng) {
  if (pool_size == 0) throw std::invalid_argument("sample_batch: empty pool");
  if (batch_size == 0) {
    throw std::invalid_argument("sample_batch: batch_size must be >= 1");
  }
  std::vector<std::size_t> idx(batch_size);
  for (auto& i : idx) i = rng.uniform_index(pool_size);
  return idx;
}

Example to_example(const WindowSample& sample) {
  Example ex;
  ex.inputs.reserve(sample.input.size() + sample.target.size() - 1);
  for (double v : sample.input) ex.inputs.push_back(Vector{v});
  for (std::size_t j = 0; j + 1 < sample.target.size(); ++j) {
    ex.inputs.push_back(Vector{sample.target[j]});
  }
  for (double v : sample.target) ex.targets.push_back(Vector{v});
  return ex;
}

Example to_example(const TextSample& sample) {
  return Example{sample.inputs, {sample.target}};
}

}  // namespace rnnscope
