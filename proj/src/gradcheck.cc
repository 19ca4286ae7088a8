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

#include "wdj/gradcheck.h"

#include <functional>

#include "wdj/corpus.h"
#include "wdj/model.h"
#include "wdj/nn.h"
#include "wdj/rng.h"

namespace wdj {

namespace {

Tensor RandomTensor(std::vector<size_t> shape, Rng &rng, double scale = 1.0) {
  Tensor t(std::move(shape));
  for (double &v : t.values()) v = rng.Uniform(-scale, scale);
  return t;
}

// <c, t> as a scalar loss.
double Dot(const Tensor &c, const Tensor &t) {
  double s = 0.0;
  for (size_t i = 0; i < t.size(); ++i) s += c[i] * t[i];
  return s;
}

void AddInto(Tensor &t, std::span<const double> g) {
  auto dst = t.grad();
  for (size_t i = 0; i < g.size(); ++i) dst[i] += g[i];
}

nn::GradCheckResult CheckAffine(Rng &rng) {
  Tensor x = RandomTensor({3, 5}, rng);
  nn::Affine layer{RandomTensor({5, 4}, rng), RandomTensor({4}, rng)};
  const Tensor c = RandomTensor({3, 4}, rng);
  Tensor *inputs[] = {&x, &layer.w, &layer.b};
  return nn::GradCheck([&] { return Dot(c, nn::AffineForward(x, layer)); },
                       [&] { AddInto(x, nn::AffineBackward(x, layer, c).values()); }, inputs);
}

nn::GradCheckResult CheckLstmCell(Rng &rng) {
  const size_t d = 5, h = 4;
  Tensor x = RandomTensor({d}, rng);
  Tensor hp = RandomTensor({h}, rng);
  Tensor cp = RandomTensor({h}, rng);
  nn::Lstm p{RandomTensor({d, 4 * h}, rng), RandomTensor({h, 4 * h}, rng),
             RandomTensor({4 * h}, rng)};
  const Tensor ch = RandomTensor({h}, rng);
  const Tensor cc = RandomTensor({h}, rng);
  auto loss = [&] {
    auto s = nn::LstmCellForward(x.values(), hp.values(), cp.values(), p);
    return Dot(ch, Tensor({h}, s.h)) + Dot(cc, Tensor({h}, s.c));
  };
  auto backward = [&] {
    auto s = nn::LstmCellForward(x.values(), hp.values(), cp.values(), p);
    auto g = nn::LstmCellBackward(s, x.values(), hp.values(), cp.values(), p, ch.values(),
                                  cc.values());
    AddInto(x, g.x);
    AddInto(hp, g.h_prev);
    AddInto(cp, g.c_prev);
  };
  Tensor *inputs[] = {&x, &hp, &cp, &p.wx, &p.wh, &p.b};
  return nn::GradCheck(loss, backward, inputs);
}

nn::GradCheckResult CheckBiLstm(Rng &rng) {
  const size_t n = 4, d = 5, h = 3;
  Tensor seq = RandomTensor({n, d}, rng);
  nn::Lstm f{RandomTensor({d, 4 * h}, rng), RandomTensor({h, 4 * h}, rng),
             RandomTensor({4 * h}, rng)};
  nn::Lstm b{RandomTensor({d, 4 * h}, rng), RandomTensor({h, 4 * h}, rng),
             RandomTensor({4 * h}, rng)};
  const Tensor c = RandomTensor({n, 2 * h}, rng);
  auto backward = [&] {
    nn::BiLstmTape tape;
    nn::BiLstmForward(seq, f, b, &tape);
    AddInto(seq, nn::BiLstmBackward(seq, tape, f, b, c).values());
  };
  Tensor *inputs[] = {&seq, &f.wx, &f.wh, &f.b, &b.wx, &b.wh, &b.b};
  return nn::GradCheck([&] { return Dot(c, nn::BiLstmForward(seq, f, b)); }, backward, inputs);
}

nn::GradCheckResult CheckAttention(Rng &rng) {
  const size_t n = 3, d = 4;
  Tensor h = RandomTensor({n, d}, rng);
  nn::Attention p{RandomTensor({d, d}, rng), RandomTensor({d, d}, rng),
                  RandomTensor({d, d}, rng)};
  const Tensor c = RandomTensor({n, d}, rng);
  auto backward = [&] {
    nn::AttentionTape tape;
    nn::AttentionForward(h, p, &tape);
    AddInto(h, nn::AttentionBackward(h, tape, p, c).values());
  };
  Tensor *inputs[] = {&h, &p.wq, &p.wk, &p.wv};
  return nn::GradCheck([&] { return Dot(c, nn::AttentionForward(h, p)); }, backward, inputs);
}

nn::GradCheckResult CheckMeanPoolMlp(Rng &rng) {
  const size_t n = 3, d = 4, hid = 5, k = 3;
  Tensor x = RandomTensor({n, d}, rng);
  nn::Affine l1{RandomTensor({d, hid}, rng), RandomTensor({hid}, rng)};
  nn::Affine l2{RandomTensor({hid, k}, rng), RandomTensor({k}, rng)};
  const int label = static_cast<int>(rng.Below(k));
  auto loss = [&] {
    Tensor a = nn::Relu(nn::AffineForward(nn::MeanPool(x), l1));
    return nn::SoftmaxXent(nn::AffineForward(a, l2), std::span<const int>(&label, 1)).loss;
  };
  auto backward = [&] {
    Tensor pooled = nn::MeanPool(x);
    Tensor a = nn::Relu(nn::AffineForward(pooled, l1));
    auto xent = nn::SoftmaxXent(nn::AffineForward(a, l2), std::span<const int>(&label, 1));
    Tensor g = nn::AffineBackward(a, l2, xent.grad);
    g = nn::AffineBackward(pooled, l1, nn::ReluBackward(a, g));
    AddInto(x, nn::MeanPoolBackward(n, g).values());
  };
  Tensor *inputs[] = {&x, &l1.w, &l1.b, &l2.w, &l2.b};
  return nn::GradCheck(loss, backward, inputs);
}

nn::GradCheckResult CheckFused(Rng &rng) {
  WideDeepConfig cfg;
  cfg.num_classes = 3;
  cfg.proj_dim = 3;
  cfg.wide_hidden = 4;
  cfg.embedder.dim = 6;
  cfg.lstm_hidden = 3;
  cfg.deep_hidden = {4, 4, 4};
  WideDeepModel model = WideDeepModel::Init(cfg, rng.NextU64());
  // Unit-norm sentence embeddings under fan-in init leave the LSTM states
  // near 0.1 and the attention scores nearly constant, so the Wq/Wk
  // gradients fall below what central differences resolve. Wider weights on
  // the sequence path give O(1) activations there. MLP biases stay small so
  // the small pooled vector, not the bias, decides which ReLUs are active.
  model.params().ForEach([&](const std::string &name, Tensor &t) {
    double scale = 0.5;
    if (name.starts_with("lstm")) scale = 1.0;
    if (name.starts_with("attention")) scale = 2.0;
    if (name.starts_with("deep")) scale = name.ends_with(".b") ? 0.05 : 1.0;
    for (double &v : t.values()) v = rng.Uniform(-scale, scale);
  });

  SynthConfig sc = SynthPreset("default");
  sc.n_samples = 2;
  sc.oracle_draws = 1;
  Dataset ds = GenerateSynthetic(sc, rng.NextU64()).dataset;
  std::vector<WideFeatures> wide;
  for (const auto &s : ds.samples) wide.push_back(ExtractWide(s, cfg.catalog));
  model.set_standardizer(Standardizer::Fit(wide));
  std::vector<ModelInput> batch;
  for (size_t i = 0; i < ds.size(); ++i) {
    batch.push_back(PrepareInput(ds.samples[i], wide[i], model));
    batch.back().label = static_cast<int>(rng.Below(3));
  }

  auto loss = [&] {
    double total = 0.0;
    for (const auto &in : batch) {
      total += nn::SoftmaxXent(FusedLogits(in, model), std::span<const int>(&in.label, 1)).loss;
    }
    return total / static_cast<double>(batch.size());
  };
  auto backward = [&] {
    for (const auto &in : batch) {
      ForwardTape tape;
      auto xent =
          nn::SoftmaxXent(FusedLogits(in, model, &tape), std::span<const int>(&in.label, 1));
      for (double &g : xent.grad.values()) g /= static_cast<double>(batch.size());
      FusedBackward(in, tape, model, xent.grad);
    }
  };
  auto inputs = model.params().All();
  return nn::GradCheck(loss, backward, inputs);
}

}  // namespace

std::vector<GradSuiteEntry> RunGradientSuite(uint64_t seed, int instances, double tolerance) {
  using Case = std::pair<const char *, std::function<nn::GradCheckResult(Rng &)>>;
  const std::vector<Case> cases = {
      {"affine", CheckAffine},           {"lstm_cell", CheckLstmCell},
      {"bilstm", CheckBiLstm},           {"self_attention", CheckAttention},
      {"meanpool_mlp", CheckMeanPoolMlp}, {"fused_wide_deep", CheckFused},
  };
  Rng root(seed);
  std::vector<GradSuiteEntry> out;
  for (size_t c = 0; c < cases.size(); ++c) {
    GradSuiteEntry e;
    e.name = cases[c].first;
    e.instances = instances;
    for (int i = 0; i < instances; ++i) {
      Rng rng = root.Fork(1000 * (c + 1) + static_cast<uint64_t>(i));
      auto r = cases[c].second(rng);
      e.coordinates += r.coordinates;
      if (r.max_rel_error >= e.max_rel_error) {
        e.max_rel_error = r.max_rel_error;
        e.worst = "instance " + std::to_string(i) + " input " + r.worst;
      }
    }
    e.passed = e.max_rel_error < tolerance;
    out.push_back(std::move(e));
  }
  return out;
}

}  // namespace wdj
