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

#include "rnnscope/tensor.h"

#include <cmath>

namespace rnnscope {
namespace {

void require_same_length(const Vector& a, const Vector& b, const char* op) {
  if (a.size() != b.size()) {
    throw ShapeError(std::string(op) + ": length mismatch " +
                     std::to_string(a.size()) + " vs " +
                     std::to_string(b.size()));
  }
}

}  // namespace

Matrix::Matrix(std::size_t rows, std::size_t cols, std::vector<double> data)
    : rows_(rows), cols_(cols), data_(std::move(data)) {
  if (data_.size() != rows_ * cols_) {
    throw ShapeError("Matrix: " + std::to_string(data_.size()) +
                     " values cannot fill " + std::to_string(rows) + "x" +
                     std::to_string(cols));
  }
}

Matrix::Matrix(std::initializer_list<std::initializer_list<double>> rows)
    : rows_(rows.size()), cols_(rows.size() == 0 ? 0 : rows.begin()->size()) {
  data_.reserve(rows_ * cols_);
  for (const auto& r : rows) {
    if (r.size() != cols_) throw ShapeError("Matrix: ragged initializer");
    data_.insert(data_.end(), r.begin(), r.end());
  }
}

Matrix Matrix::identity(std::size_t n) {
  Matrix m(n, n);
  for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
  return m;
}

std::string shape_string(const Matrix& m) {
  return std::to_string(m.rows()) + "x" + std::to_string(m.cols());
}

Vector mat_vec_mul(const Matrix& m, const Vector& v) {
  if (m.cols() != v.size()) {
    throw ShapeError("mat_vec_mul: matrix " + shape_string(m) +
                     " vs vector of length " + std::to_string(v.size()));
  }
  Vector out(m.rows());
  for (std::size_t i = 0; i < m.rows(); ++i) {
    auto row = m.row(i);
    double acc = 0.0;
    for (std::size_t j = 0; j < row.size(); ++j) acc += row[j] * v[j];
    out[i] = acc;
  }
  return out;
}

Vector mat_t_vec_mul(const Matrix& m, const Vector& v) {
  if (m.rows() != v.size()) {
    throw ShapeError("mat_t_vec_mul: matrix " + shape_string(m) +
                     " vs vector of length " + std::to_string(v.size()));
  }
  Vector out(m.cols());
  for (std::size_t i = 0; i < m.rows(); ++i) {
    auto row = m.row(i);
    const double vi = v[i];
    for (std::size_t j = 0; j < row.size(); ++j) out[j] += row[j] * vi;
  }
  return out;
}

void add_outer(Matrix& m, const Vector& u, const Vector& v) {
  if (m.rows() != u.size() || m.cols() != v.size()) {
    throw ShapeError("add_outer: matrix " + shape_string(m) + " vs outer " +
                     std::to_string(u.size()) + "x" +
                     std::to_string(v.size()));
  }
  for (std::size_t i = 0; i < m.rows(); ++i) {
    const double ui = u[i];
    for (std::size_t j = 0; j < m.cols(); ++j) m(i, j) += ui * v[j];
  }
}

Vector hadamard(const Vector& a, const Vector& b) {
  require_same_length(a, b, "hadamard");
  Vector out(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) out[i] = a[i] * b[i];
  return out;
}

Vector add(const Vector& a, const Vector& b) {
  require_same_length(a, b, "add");
  Vector out(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) out[i] = a[i] + b[i];
  return out;
}

Vector subtract(const Vector& a, const Vector& b) {
  require_same_length(a, b, "subtract");
  Vector out(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) out[i] = a[i] - b[i];
  return out;
}

Vector scale(const Vector& a, double s) {
  Vector out(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) out[i] = a[i] * s;
  return out;
}

void add_in_place(Vector& a, const Vector& b) {
  require_same_length(a, b, "add_in_place");
  for (std::size_t i = 0; i < a.size(); ++i) a[i] += b[i];
}

double sigmoid(double x) {
  // Split on sign so exp() never overflows.
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

Vector sigmoid(const Vector& v) {
  Vector out(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) out[i] = sigmoid(v[i]);
  return out;
}

Vector tanh_vec(const Vector& v) {
  Vector out(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) out[i] = std::tanh(v[i]);
  return out;
}

double dot(const Vector& a, const Vector& b) {
  require_same_length(a, b, "dot");
  double acc = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) acc += a[i] * b[i];
  return acc;
}

double l2_norm(std::span<const double> values) {
  double acc = 0.0;
  for (double x : values) acc += x * x;
  return std::sqrt(acc);
}

bool all_finite(std::span<const double> values) {
  for (double x : values) {
    if (!std::isfinite(x)) return false;
  }
  return true;
}

}  // namespace rnnscope
