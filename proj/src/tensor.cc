// Copyright 2026 The wdjudge Authors.
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

#include "wdj/tensor.h"

#include <cmath>
#include <functional>
#include <numeric>

#include "wdj/error.h"
#include "wdj/rng.h"

namespace wdj {

namespace {

size_t Product(const std::vector<size_t> &shape) {
  return std::accumulate(shape.begin(), shape.end(), size_t{1},
                         std::multiplies<size_t>());
}

}  // namespace

Tensor::Tensor(std::vector<size_t> shape)
    : shape_(std::move(shape)), values_(Product(shape_), 0.0) {}

Tensor::Tensor(std::vector<size_t> shape, std::vector<double> values)
    : shape_(std::move(shape)), values_(std::move(values)) {
  if (values_.size() != Product(shape_)) {
    Fail(ErrorKind::kShape, "tensor of shape " + ShapeString() + " given " +
                                std::to_string(values_.size()) + " values");
  }
}

Tensor Tensor::FanInUniform(size_t rows, size_t cols, Rng &rng) {
  Tensor t({rows, cols});
  const double bound = 1.0 / std::sqrt(static_cast<double>(rows));
  for (double &v : t.values_) v = rng.Uniform(-bound, bound);
  return t;
}

Tensor Tensor::FromRows(const std::vector<std::vector<double>> &rows) {
  const size_t cols = rows.empty() ? 0 : rows.front().size();
  std::vector<double> values;
  values.reserve(rows.size() * cols);
  for (const auto &r : rows) {
    if (r.size() != cols) Fail(ErrorKind::kShape, "ragged rows");
    values.insert(values.end(), r.begin(), r.end());
  }
  return Tensor({rows.size(), cols}, std::move(values));
}

std::span<double> Tensor::grad() {
  if (grad_.size() != values_.size()) grad_.assign(values_.size(), 0.0);
  return grad_;
}

void Tensor::ZeroGrad() { grad_.assign(values_.size(), 0.0); }

void Tensor::Fill(double v) { std::fill(values_.begin(), values_.end(), v); }

bool Tensor::AllFinite() const {
  for (double v : values_) {
    if (!std::isfinite(v)) return false;
  }
  return true;
}

std::string Tensor::ShapeString() const { return wdj::ShapeString(shape_); }

std::string ShapeString(const std::vector<size_t> &shape) {
  std::string s = "[";
  for (size_t i = 0; i < shape.size(); ++i) {
    if (i) s += "x";
    s += std::to_string(shape[i]);
  }
  return s + "]";
}

}  // namespace wdj
