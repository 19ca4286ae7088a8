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

#include "wdj/nn.h"

#include <algorithm>
#include <cmath>

#include "wdj/error.h"
#include "wdj/rng.h"

namespace wdj::nn {

namespace {

void ShapeError(const char *op, const Tensor &a, const Tensor &b) {
  Fail(ErrorKind::kShape, std::string(op) + ": shape mismatch " +
                              a.ShapeString() + " vs " + b.ShapeString());
}

double Sigmoid(double x) {
  if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

void CheckFiniteSpan(std::span<const double> v, const char *where) {
  for (double x : v) {
    if (!std::isfinite(x)) {
      Fail(ErrorKind::kNumeric, std::string(where) + ": non-finite value");
    }
  }
}

// out[n] += x[k] * w[k x n]
void AddVecMat(std::span<const double> x, const Tensor &w, double *out) {
  const size_t n = w.cols();
  for (size_t k = 0; k < x.size(); ++k) {
    const double xk = x[k];
    if (xk == 0.0) continue;
    const double *wr = w.data() + k * n;
    for (size_t j = 0; j < n; ++j) out[j] += xk * wr[j];
  }
}

// out[k] += sum_j w[k][j] * y[j]
void AddMatVec(const Tensor &w, std::span<const double> y, double *out) {
  const size_t n = w.cols();
  for (size_t k = 0; k < w.rows(); ++k) {
    const double *wr = w.data() + k * n;
    double acc = 0.0;
    for (size_t j = 0; j < n; ++j) acc += wr[j] * y[j];
    out[k] += acc;
  }
}

// g[k x n] += x[k] (outer) y[n]
void AddOuter(std::span<const double> x, std::span<const double> y,
              std::span<double> g) {
  const size_t n = y.size();
  for (size_t k = 0; k < x.size(); ++k) {
    const double xk = x[k];
    if (xk == 0.0) continue;
    double *gr = g.data() + k * n;
    for (size_t j = 0; j < n; ++j) gr[j] += xk * y[j];
  }
}

}  // namespace

void CheckFinite(const Tensor &t, const char *where) {
  CheckFiniteSpan(t.values(), where);
}

Tensor MatMul(const Tensor &a, const Tensor &b) {
  if (a.cols() != b.rows()) ShapeError("matmul", a, b);
  Tensor out = Tensor::Zeros(a.rows(), b.cols());
  for (size_t r = 0; r < a.rows(); ++r) AddVecMat(a.row(r), b, out.data() + r * b.cols());
  return out;
}

void AddMatMulTransA(const Tensor &a, const Tensor &b, std::span<double> out) {
  if (a.rows() != b.rows()) ShapeError("matmul_ta", a, b);
  for (size_t r = 0; r < a.rows(); ++r) AddOuter(a.row(r), b.row(r), out);
}

Tensor MatMulTransB(const Tensor &a, const Tensor &b) {
  if (a.cols() != b.cols()) ShapeError("matmul_tb", a, b);
  // Transposing first keeps the inner loop contiguous; the per-element sum
  // order over k is unchanged.
  Tensor bt = Tensor::Zeros(b.cols(), b.rows());
  for (size_t i = 0; i < b.rows(); ++i) {
    for (size_t j = 0; j < b.cols(); ++j) bt.at(j, i) = b.at(i, j);
  }
  return MatMul(a, bt);
}

// ---------------------------------------------------------------------------

Affine Affine::Init(size_t d_in, size_t d_out, Rng &rng) {
  return Affine{Tensor::FanInUniform(d_in, d_out, rng), Tensor::Zeros(d_out)};
}

Tensor AffineForward(const Tensor &x, const Tensor &w, const Tensor &b) {
  if (x.cols() != w.rows() || w.rank() != 2) ShapeError("affine", x, w);
  if (b.size() != w.cols()) ShapeError("affine bias", w, b);
  Tensor y = x.rank() == 1 ? Tensor::Zeros(w.cols()) : Tensor::Zeros(x.rows(), w.cols());
  for (size_t r = 0; r < x.rows(); ++r) {
    double *yr = y.data() + r * w.cols();
    std::copy(b.data(), b.data() + b.size(), yr);
    AddVecMat(x.row(r), w, yr);
  }
  CheckFinite(y, "affine");
  return y;
}

Tensor AffineBackward(const Tensor &x, Affine &layer, const Tensor &grad_y) {
  const size_t m = x.rows();
  if (grad_y.rows() != m || grad_y.cols() != layer.out_dim()) {
    ShapeError("affine backward", x, grad_y);
  }
  auto gw = layer.w.grad();
  auto gb = layer.b.grad();
  Tensor grad_x(x.shape());
  for (size_t r = 0; r < m; ++r) {
    auto gy = grad_y.row(r);
    AddOuter(x.row(r), gy, gw);
    for (size_t j = 0; j < gy.size(); ++j) gb[j] += gy[j];
    AddMatVec(layer.w, gy, grad_x.data() + r * x.cols());
  }
  return grad_x;
}

Tensor Relu(const Tensor &x) {
  Tensor y = x;
  for (double &v : y.values()) v = v > 0.0 ? v : 0.0;
  return y;
}

Tensor ReluBackward(const Tensor &y, const Tensor &grad_y) {
  if (!y.SameShape(grad_y)) ShapeError("relu backward", y, grad_y);
  Tensor g = grad_y;
  for (size_t i = 0; i < g.size(); ++i) {
    if (!(y[i] > 0.0)) g[i] = 0.0;
  }
  return g;
}

// ---------------------------------------------------------------------------

Tensor ProjectOneHot(std::span<const size_t> hot, const Tensor &w) {
  Tensor out = Tensor::Zeros(w.cols());
  for (size_t idx : hot) {
    if (idx >= w.rows()) {
      Fail(ErrorKind::kShape, "one-hot index " + std::to_string(idx) +
                                  " outside projection " + w.ShapeString());
    }
    auto r = w.row(idx);
    for (size_t j = 0; j < r.size(); ++j) out[j] += r[j];
  }
  return out;
}

void ProjectOneHotBackward(std::span<const size_t> hot, Tensor &w,
                           std::span<const double> grad_out) {
  auto g = w.grad();
  const size_t n = w.cols();
  for (size_t idx : hot) {
    for (size_t j = 0; j < n; ++j) g[idx * n + j] += grad_out[j];
  }
}

// ---------------------------------------------------------------------------

Lstm Lstm::Init(size_t d_in, size_t hidden, Rng &rng) {
  Lstm p;
  p.wx = Tensor::FanInUniform(d_in, 4 * hidden, rng);
  p.wh = Tensor::FanInUniform(hidden, 4 * hidden, rng);
  p.b = Tensor::Zeros(4 * hidden);
  return p;
}

LstmStep LstmCellForward(std::span<const double> x, std::span<const double> h_prev,
                         std::span<const double> c_prev, const Lstm &p) {
  const size_t hd = p.hidden();
  if (x.size() != p.input_dim() || h_prev.size() != hd || c_prev.size() != hd) {
    Fail(ErrorKind::kShape, "lstm cell: input " + std::to_string(x.size()) +
                                "/state " + std::to_string(h_prev.size()) +
                                " vs params " + p.wx.ShapeString());
  }
  std::vector<double> pre(p.b.values().begin(), p.b.values().end());
  AddVecMat(x, p.wx, pre.data());
  AddVecMat(h_prev, p.wh, pre.data());

  LstmStep s;
  s.i.resize(hd);
  s.f.resize(hd);
  s.g.resize(hd);
  s.o.resize(hd);
  s.c.resize(hd);
  s.tanh_c.resize(hd);
  s.h.resize(hd);
  for (size_t j = 0; j < hd; ++j) {
    s.i[j] = Sigmoid(pre[j]);
    s.f[j] = Sigmoid(pre[hd + j]);
    s.g[j] = std::tanh(pre[2 * hd + j]);
    s.o[j] = Sigmoid(pre[3 * hd + j]);
    s.c[j] = s.f[j] * c_prev[j] + s.i[j] * s.g[j];
    s.tanh_c[j] = std::tanh(s.c[j]);
    s.h[j] = s.o[j] * s.tanh_c[j];
  }
  CheckFiniteSpan(s.c, "lstm cell");
  CheckFiniteSpan(s.h, "lstm cell");
  return s;
}

LstmCellGrads LstmCellBackward(const LstmStep &s, std::span<const double> x,
                               std::span<const double> h_prev,
                               std::span<const double> c_prev, Lstm &p,
                               std::span<const double> dh,
                               std::span<const double> dc, bool input_grad) {
  const size_t hd = p.hidden();
  std::vector<double> dpre(4 * hd);
  LstmCellGrads out;
  out.c_prev.resize(hd);
  for (size_t j = 0; j < hd; ++j) {
    const double dct = dc[j] + dh[j] * s.o[j] * (1.0 - s.tanh_c[j] * s.tanh_c[j]);
    const double d_o = dh[j] * s.tanh_c[j];
    const double d_i = dct * s.g[j];
    const double d_g = dct * s.i[j];
    const double d_f = dct * c_prev[j];
    out.c_prev[j] = dct * s.f[j];
    dpre[j] = d_i * s.i[j] * (1.0 - s.i[j]);
    dpre[hd + j] = d_f * s.f[j] * (1.0 - s.f[j]);
    dpre[2 * hd + j] = d_g * (1.0 - s.g[j] * s.g[j]);
    dpre[3 * hd + j] = d_o * s.o[j] * (1.0 - s.o[j]);
  }
  auto gb = p.b.grad();
  for (size_t j = 0; j < dpre.size(); ++j) gb[j] += dpre[j];
  AddOuter(x, dpre, p.wx.grad());
  AddOuter(h_prev, dpre, p.wh.grad());
  if (input_grad) {
    out.x.assign(x.size(), 0.0);
    AddMatVec(p.wx, dpre, out.x.data());
  }
  out.h_prev.assign(hd, 0.0);
  AddMatVec(p.wh, dpre, out.h_prev.data());
  return out;
}

Tensor BiLstmForward(const Tensor &seq, const Lstm &fwd, const Lstm &bwd,
                     BiLstmTape *tape) {
  const size_t n = seq.rows();
  if (n == 0 || seq.empty()) Fail(ErrorKind::kEmptySequence, "bilstm: empty sequence");
  if (fwd.hidden() != bwd.hidden()) {
    Fail(ErrorKind::kShape, "bilstm: direction hidden sizes differ");
  }
  const size_t hd = fwd.hidden();
  Tensor out = Tensor::Zeros(n, 2 * hd);
  std::vector<double> zero(hd, 0.0);
  std::vector<LstmStep> fs(n), bs(n);
  for (size_t t = 0; t < n; ++t) {
    std::span<const double> h = t ? std::span<const double>(fs[t - 1].h) : zero;
    std::span<const double> c = t ? std::span<const double>(fs[t - 1].c) : zero;
    fs[t] = LstmCellForward(seq.row(t), h, c, fwd);
    std::copy(fs[t].h.begin(), fs[t].h.end(), out.data() + t * 2 * hd);
  }
  for (size_t k = 0; k < n; ++k) {
    const size_t t = n - 1 - k;
    std::span<const double> h = k ? std::span<const double>(bs[t + 1].h) : zero;
    std::span<const double> c = k ? std::span<const double>(bs[t + 1].c) : zero;
    bs[t] = LstmCellForward(seq.row(t), h, c, bwd);
    std::copy(bs[t].h.begin(), bs[t].h.end(), out.data() + t * 2 * hd + hd);
  }
  if (tape) {
    tape->fwd = std::move(fs);
    tape->bwd = std::move(bs);
  }
  return out;
}

Tensor BiLstmBackward(const Tensor &seq, const BiLstmTape &tape, Lstm &fwd,
                      Lstm &bwd, const Tensor &grad_out, bool input_grad) {
  const size_t n = seq.rows();
  const size_t hd = fwd.hidden();
  if (grad_out.rows() != n || grad_out.cols() != 2 * hd) {
    ShapeError("bilstm backward", seq, grad_out);
  }
  Tensor grad_seq = input_grad ? Tensor(seq.shape()) : Tensor();
  std::vector<double> zero(hd, 0.0);
  std::vector<double> dh(hd), dc(hd, 0.0);

  // Forward direction: walk right to left.
  std::fill(dh.begin(), dh.end(), 0.0);
  for (size_t k = 0; k < n; ++k) {
    const size_t t = n - 1 - k;
    auto g = grad_out.row(t);
    for (size_t j = 0; j < hd; ++j) dh[j] += g[j];
    std::span<const double> hp = t ? std::span<const double>(tape.fwd[t - 1].h) : zero;
    std::span<const double> cp = t ? std::span<const double>(tape.fwd[t - 1].c) : zero;
    LstmCellGrads cg = LstmCellBackward(tape.fwd[t], seq.row(t), hp, cp, fwd, dh, dc, input_grad);
    for (size_t j = 0; j < cg.x.size(); ++j) grad_seq.at(t, j) += cg.x[j];
    dh = std::move(cg.h_prev);
    dc = std::move(cg.c_prev);
  }

  // Backward direction: its scan ran n-1..0, so the adjoint walks 0..n-1.
  std::fill(dh.begin(), dh.end(), 0.0);
  std::fill(dc.begin(), dc.end(), 0.0);
  for (size_t t = 0; t < n; ++t) {
    auto g = grad_out.row(t);
    for (size_t j = 0; j < hd; ++j) dh[j] += g[hd + j];
    const bool first = (t == n - 1);
    std::span<const double> hp = first ? zero : std::span<const double>(tape.bwd[t + 1].h);
    std::span<const double> cp = first ? zero : std::span<const double>(tape.bwd[t + 1].c);
    LstmCellGrads cg = LstmCellBackward(tape.bwd[t], seq.row(t), hp, cp, bwd, dh, dc, input_grad);
    for (size_t j = 0; j < cg.x.size(); ++j) grad_seq.at(t, j) += cg.x[j];
    dh = std::move(cg.h_prev);
    dc = std::move(cg.c_prev);
  }
  return grad_seq;
}

// ---------------------------------------------------------------------------

Attention Attention::Init(size_t d, Rng &rng) {
  Attention a;
  a.wq = Tensor::FanInUniform(d, d, rng);
  a.wk = Tensor::FanInUniform(d, d, rng);
  a.wv = Tensor::FanInUniform(d, d, rng);
  return a;
}

Tensor AttentionForward(const Tensor &h, const Attention &p, AttentionTape *tape) {
  if (h.rows() == 0 || h.empty()) Fail(ErrorKind::kEmptySequence, "attention: empty sequence");
  if (h.cols() != p.wq.rows()) ShapeError("attention", h, p.wq);
  Tensor q = MatMul(h, p.wq);
  Tensor k = MatMul(h, p.wk);
  Tensor v = MatMul(h, p.wv);
  Tensor scores = MatMulTransB(q, k);
  const double scale = 1.0 / std::sqrt(static_cast<double>(q.cols()));
  for (double &s : scores.values()) s *= scale;
  Tensor weights = Softmax(scores);
  Tensor out = MatMul(weights, v);
  CheckFinite(out, "attention");
  if (tape) {
    tape->q = std::move(q);
    tape->k = std::move(k);
    tape->v = std::move(v);
    tape->weights = std::move(weights);
  }
  return out;
}

Tensor AttentionBackward(const Tensor &h, const AttentionTape &tape, Attention &p,
                         const Tensor &grad_out) {
  const size_t n = h.rows();
  const size_t d = p.wq.cols();
  if (grad_out.rows() != n || grad_out.cols() != d) ShapeError("attention backward", h, grad_out);
  const Tensor &a = tape.weights;

  // d weights = dO V^T ; dV = A^T dO
  Tensor d_weights = MatMulTransB(grad_out, tape.v);
  Tensor dv = Tensor::Zeros(n, d);
  AddMatMulTransA(a, grad_out, dv.values());

  // Softmax adjoint per row, then the 1/sqrt(d) scale.
  const double scale = 1.0 / std::sqrt(static_cast<double>(d));
  Tensor d_scores = Tensor::Zeros(n, n);
  for (size_t r = 0; r < n; ++r) {
    double dot = 0.0;
    for (size_t c = 0; c < n; ++c) dot += d_weights.at(r, c) * a.at(r, c);
    for (size_t c = 0; c < n; ++c) {
      d_scores.at(r, c) = a.at(r, c) * (d_weights.at(r, c) - dot) * scale;
    }
  }
  Tensor dq = MatMul(d_scores, tape.k);
  Tensor dk = Tensor::Zeros(n, d);
  AddMatMulTransA(d_scores, tape.q, dk.values());

  AddMatMulTransA(h, dq, p.wq.grad());
  AddMatMulTransA(h, dk, p.wk.grad());
  AddMatMulTransA(h, dv, p.wv.grad());

  Tensor dh = MatMulTransB(dq, p.wq);
  Tensor dh_k = MatMulTransB(dk, p.wk);
  Tensor dh_v = MatMulTransB(dv, p.wv);
  for (size_t i = 0; i < dh.size(); ++i) dh[i] += dh_k[i] + dh_v[i];
  return dh;
}

// ---------------------------------------------------------------------------

Tensor MeanPool(const Tensor &x) {
  const size_t n = x.rows();
  if (n == 0 || x.empty()) Fail(ErrorKind::kEmptySequence, "mean pool: empty sequence");
  Tensor out = Tensor::Zeros(x.cols());
  for (size_t r = 0; r < n; ++r) {
    auto row = x.row(r);
    for (size_t j = 0; j < row.size(); ++j) out[j] += row[j];
  }
  for (double &v : out.values()) v /= static_cast<double>(n);
  return out;
}

Tensor MeanPoolBackward(size_t n, const Tensor &grad_out) {
  if (n == 0) Fail(ErrorKind::kEmptySequence, "mean pool: empty sequence");
  Tensor g = Tensor::Zeros(n, grad_out.size());
  const double inv = 1.0 / static_cast<double>(n);
  for (size_t r = 0; r < n; ++r) {
    for (size_t j = 0; j < grad_out.size(); ++j) g.at(r, j) = grad_out[j] * inv;
  }
  return g;
}

Tensor Softmax(const Tensor &logits) {
  Tensor p = logits;
  for (size_t r = 0; r < logits.rows(); ++r) {
    auto row = p.row(r);
    const double mx = *std::max_element(row.begin(), row.end());
    double sum = 0.0;
    for (double &v : row) {
      v = std::exp(v - mx);
      sum += v;
    }
    for (double &v : row) v /= sum;
  }
  CheckFinite(p, "softmax");
  return p;
}

XentResult SoftmaxXent(const Tensor &logits, std::span<const int> labels) {
  const size_t m = logits.rows();
  const size_t k = logits.cols();
  if (labels.size() != m) {
    Fail(ErrorKind::kShape, "softmax_xent: " + std::to_string(labels.size()) +
                                " labels for logits " + logits.ShapeString());
  }
  XentResult res;
  res.grad = Tensor::Zeros(m, k);
  res.probs = Tensor::Zeros(m, k);
  double total = 0.0;
  for (size_t r = 0; r < m; ++r) {
    const int y = labels[r];
    if (y < 0 || static_cast<size_t>(y) >= k) {
      Fail(ErrorKind::kLabel, "softmax_xent: label " + std::to_string(y) +
                                  " outside [0," + std::to_string(k) + ")");
    }
    auto z = logits.row(r);
    const double mx = *std::max_element(z.begin(), z.end());
    double sum = 0.0;
    for (double v : z) sum += std::exp(v - mx);
    const double log_sum = std::log(sum);
    total += -(z[y] - mx - log_sum);
    for (size_t c = 0; c < k; ++c) {
      const double pc = std::exp(z[c] - mx - log_sum);
      res.probs.at(r, c) = pc;
      res.grad.at(r, c) = (pc - (static_cast<int>(c) == y ? 1.0 : 0.0)) / static_cast<double>(m);
    }
  }
  res.loss = total / static_cast<double>(m);
  if (!std::isfinite(res.loss)) Fail(ErrorKind::kNumeric, "softmax_xent: non-finite loss");
  return res;
}

// ---------------------------------------------------------------------------

GradCheckResult GradCheck(const std::function<double()> &loss,
                          const std::function<void()> &backward,
                          std::span<Tensor *const> inputs, double eps) {
  for (Tensor *t : inputs) t->ZeroGrad();
  backward();
  std::vector<std::vector<double>> analytic;
  analytic.reserve(inputs.size());
  for (Tensor *t : inputs) analytic.emplace_back(t->grad().begin(), t->grad().end());

  GradCheckResult res;
  for (size_t ti = 0; ti < inputs.size(); ++ti) {
    Tensor &t = *inputs[ti];
    for (size_t i = 0; i < t.size(); ++i) {
      const double saved = t[i];
      t[i] = saved + eps;
      const double up = loss();
      t[i] = saved - eps;
      const double down = loss();
      t[i] = saved;
      const double numeric = (up - down) / (2.0 * eps);
      const double a = analytic[ti][i];
      const double denom = std::max({std::abs(a), std::abs(numeric), 1e-8});
      const double rel = std::abs(a - numeric) / denom;
      ++res.coordinates;
      if (rel > res.max_rel_error || !std::isfinite(rel)) {
        res.max_rel_error = std::isfinite(rel) ? rel : 1e300;
        res.worst = std::to_string(ti) + "[" + std::to_string(i) + "]";
      }
    }
  }
  return res;
}

}  // namespace wdj::nn
