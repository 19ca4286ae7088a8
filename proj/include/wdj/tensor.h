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

#ifndef WDJ_TENSOR_H_
#define WDJ_TENSOR_H_

#include <cstddef>
#include <span>
#include <string>
#include <vector>

namespace wdj {

class Rng;

// Dense row-major array of doubles with an optional gradient buffer of the
// same shape. Only rank 1 and rank 2 are used by the model, but the shape is
// kept general so that checkpoints can describe any blob.
class Tensor {
 public:
  Tensor() = default;
  explicit Tensor(std::vector<size_t> shape);
  Tensor(std::vector<size_t> shape, std::vector<double> values);

  static Tensor Zeros(size_t rows, size_t cols) { return Tensor({rows, cols}); }
  static Tensor Zeros(size_t n) { return Tensor({n}); }
  // Uniform(-1/sqrt(fan_in), +1/sqrt(fan_in)) with fan_in = rows.
  static Tensor FanInUniform(size_t rows, size_t cols, Rng &rng);
  static Tensor FromRows(const std::vector<std::vector<double>> &rows);

  const std::vector<size_t> &shape() const { return shape_; }
  size_t rank() const { return shape_.size(); }
  size_t size() const { return values_.size(); }
  bool empty() const { return values_.empty(); }
  // For rank 1 tensors a single row of size() columns.
  size_t rows() const { return shape_.size() >= 2 ? shape_[0] : 1; }
  size_t cols() const { return shape_.empty() ? 0 : shape_.back(); }

  double *data() { return values_.data(); }
  const double *data() const { return values_.data(); }
  std::span<double> values() { return values_; }
  std::span<const double> values() const { return values_; }
  double &operator[](size_t i) { return values_[i]; }
  double operator[](size_t i) const { return values_[i]; }
  double &at(size_t r, size_t c) { return values_[r * cols() + c]; }
  double at(size_t r, size_t c) const { return values_[r * cols() + c]; }
  std::span<double> row(size_t r) { return {values_.data() + r * cols(), cols()}; }
  std::span<const double> row(size_t r) const {
    return {values_.data() + r * cols(), cols()};
  }

  bool has_grad() const { return !grad_.empty(); }
  // Allocates (zeroed) on first use.
  std::span<double> grad();
  std::span<const double> grad() const { return grad_; }
  void ZeroGrad();
  void DropGrad() { grad_.clear(); grad_.shrink_to_fit(); }

  void Fill(double v);
  bool AllFinite() const;
  std::string ShapeString() const;
  bool SameShape(const Tensor &other) const { return shape_ == other.shape_; }

 private:
  std::vector<size_t> shape_;
  std::vector<double> values_;
  std::vector<double> grad_;
};

std::string ShapeString(const std::vector<size_t> &shape);

}  // namespace wdj

#endif  // WDJ_TENSOR_H_
