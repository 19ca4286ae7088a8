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

// Differentiable primitives with hand-written adjoints.
//
// Conventions: forward functions are pure. Backward functions take the
// upstream gradient, return the gradient with respect to the non-parameter
// input, and *accumulate* parameter gradients into the parameters' grad
// buffers. Every forward result is checked for NaN/Inf and raises
// ErrorKind::kNumeric instead of propagating it.

#ifndef WDJ_NN_H_
#define WDJ_NN_H_

#include <functional>
#include <span>
#include <string>
#include <vector>

#include "wdj/tensor.h"

namespace wdj::nn {

// ---------------------------------------------------------------------------
// Dense kernels. All are row-independent: row r of the result depends only
// on row r of the left operand and is computed with the same operation order
// regardless of the row count.

// a[m x k] * b[k x n]
Tensor MatMul(const Tensor &a, const Tensor &b);
// a^T * b for a[k x m], b[k x n]; accumulated into out[m x n].
void AddMatMulTransA(const Tensor &a, const Tensor &b, std::span<double> out);
// a * b^T for a[m x k], b[n x k]
Tensor MatMulTransB(const Tensor &a, const Tensor &b);

void CheckFinite(const Tensor &t, const char *where);

// ---------------------------------------------------------------------------
// Affine layer y = x W + b.

struct Affine {
  Tensor w;  // [d_in x d_out]
  Tensor b;  // [d_out]

  size_t in_dim() const { return w.rows(); }
  size_t out_dim() const { return w.cols(); }
  static Affine Init(size_t d_in, size_t d_out, Rng &rng);
};

Tensor AffineForward(const Tensor &x, const Tensor &w, const Tensor &b);
inline Tensor AffineForward(const Tensor &x, const Affine &layer) {
  return AffineForward(x, layer.w, layer.b);
}
// Returns grad_x; adds x^T grad_y into w.grad() and column sums into b.grad().
Tensor AffineBackward(const Tensor &x, Affine &layer, const Tensor &grad_y);

Tensor Relu(const Tensor &x);
// Masks grad_y by (y > 0), where y is the ReLU output.
Tensor ReluBackward(const Tensor &y, const Tensor &grad_y);

// ---------------------------------------------------------------------------
// Sparse one-hot projection: out = sum of rows of w at `hot`.

Tensor ProjectOneHot(std::span<const size_t> hot, const Tensor &w);
void ProjectOneHotBackward(std::span<const size_t> hot, Tensor &w,
                           std::span<const double> grad_out);

// ---------------------------------------------------------------------------
// LSTM. Gate columns are stacked as [input | forget | candidate | output].

struct Lstm {
  Tensor wx;  // [d_in x 4H]
  Tensor wh;  // [H x 4H]
  Tensor b;   // [4H]

  size_t input_dim() const { return wx.rows(); }
  size_t hidden() const { return wh.rows(); }
  static Lstm Init(size_t d_in, size_t hidden, Rng &rng);
};

struct LstmStep {
  std::vector<double> i, f, g, o;  // post-activation gates
  std::vector<double> c, tanh_c, h;
};

// x: [d_in], h_prev/c_prev: [H].
LstmStep LstmCellForward(std::span<const double> x, std::span<const double> h_prev,
                         std::span<const double> c_prev, const Lstm &p);

struct LstmCellGrads {
  std::vector<double> x, h_prev, c_prev;
};

// dh/dc are the gradients flowing into h_t and c_t. With input_grad false
// the x gradient is skipped and left empty.
LstmCellGrads LstmCellBackward(const LstmStep &step, std::span<const double> x,
                               std::span<const double> h_prev,
                               std::span<const double> c_prev, Lstm &p,
                               std::span<const double> dh,
                               std::span<const double> dc, bool input_grad = true);

// Everything the backward pass of a bidirectional scan needs.
struct BiLstmTape {
  std::vector<LstmStep> fwd;  // fwd[t] processed position t
  std::vector<LstmStep> bwd;  // bwd[t] processed position t (scan order n-1..0)
};

// seq: [n x d_in] -> [n x 2H], row t = (forward h_t, backward h_t).
Tensor BiLstmForward(const Tensor &seq, const Lstm &fwd, const Lstm &bwd,
                     BiLstmTape *tape = nullptr);
// Returns an empty tensor when input_grad is false (frozen embeddings).
Tensor BiLstmBackward(const Tensor &seq, const BiLstmTape &tape, Lstm &fwd,
                      Lstm &bwd, const Tensor &grad_out, bool input_grad = true);

// ---------------------------------------------------------------------------
// Single-head scaled dot-product self-attention.

struct Attention {
  Tensor wq, wk, wv;  // [d x d]
  static Attention Init(size_t d, Rng &rng);
};

struct AttentionTape {
  Tensor q, k, v, weights;  // weights: [n x n] row-softmax
};

// h: [n x d] -> [n x d]
Tensor AttentionForward(const Tensor &h, const Attention &p,
                        AttentionTape *tape = nullptr);
Tensor AttentionBackward(const Tensor &h, const AttentionTape &tape,
                         Attention &p, const Tensor &grad_out);

// ---------------------------------------------------------------------------

// [n x d] -> [d]
Tensor MeanPool(const Tensor &x);
Tensor MeanPoolBackward(size_t n, const Tensor &grad_out);

// Row-wise numerically stable softmax.
Tensor Softmax(const Tensor &logits);

struct XentResult {
  double loss = 0.0;  // mean over rows
  Tensor probs;
  Tensor grad;  // d loss / d logits = (p - onehot) / m
};

XentResult SoftmaxXent(const Tensor &logits, std::span<const int> labels);

// ---------------------------------------------------------------------------
// Finite-difference gradient checker.

struct GradCheckResult {
  double max_rel_error = 0.0;
  std::string worst;  // "<input index>[<coordinate>]"
  size_t coordinates = 0;
};

// `loss` evaluates a scalar from the current values of `inputs`; `backward`
// must fill the grad buffers of every input (they are zeroed beforehand).
// Relative error per coordinate: |a - n| / max(|a|, |n|, 1e-8) with central
// differences n = (f(x + eps) - f(x - eps)) / (2 eps).
GradCheckResult GradCheck(const std::function<double()> &loss,
                          const std::function<void()> &backward,
                          std::span<Tensor *const> inputs, double eps = 1e-5);

}  // namespace wdj::nn

#endif  // WDJ_NN_H_
