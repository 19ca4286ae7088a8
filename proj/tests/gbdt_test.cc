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

#include <cmath>
#include <fstream>

#include "doctest.h"
#include "test_util.h"
#include "wdj/gbdt.h"
#include "wdj/rng.h"

namespace wdj {
namespace {

using testing::ErrorOf;

struct Data {
  std::vector<GbdtRow> rows;
  std::vector<int> labels;
};

// Three informative continuous features, two count features, noise elsewhere.
Data Random(size_t n, int k, uint64_t seed) {
  Rng rng(seed);
  Data d;
  for (size_t i = 0; i < n; ++i) {
    GbdtRow r{};
    for (size_t f = 0; f < kNumContinuous; ++f) r[f] = rng.Uniform(-1.0, 1.0);
    for (size_t f = kNumContinuous; f < kNumWideFeatures; ++f) r[f] = double(rng.Below(6));
    const double s = r[0] + 0.5 * r[1] * r[2] + 0.2 * r[kNumContinuous] + 0.3 * rng.Normal();
    const int y = std::clamp(static_cast<int>(std::floor((s + 1.5) / 3.0 * k)), 0, k - 1);
    d.rows.push_back(r);
    d.labels.push_back(y);
  }
  return d;
}

GbdtConfig Exact(int depth, int rounds) {
  GbdtConfig c;
  c.max_depth = depth;
  c.n_estimators = rounds;
  c.subsample = 1.0;
  return c;
}

double Accuracy(const GbdtModel &m, const Data &d) {
  size_t hit = 0;
  for (size_t i = 0; i < d.rows.size(); ++i) hit += m.Predict(d.rows[i]) == d.labels[i];
  return double(hit) / double(d.rows.size());
}

double LogLoss(const GbdtModel &m, const Data &d, size_t rounds) {
  double s = 0.0;
  for (size_t i = 0; i < d.rows.size(); ++i) {
    s -= std::log(m.PredictProba(d.rows[i], rounds)[static_cast<size_t>(d.labels[i])]);
  }
  return s / double(d.rows.size());
}

TEST_CASE("hand-traced two-class stump") {
  Data d;
  for (int i = 1; i <= 6; ++i) {
    GbdtRow r{};
    r[0] = i;
    d.rows.push_back(r);
    d.labels.push_back(i <= 3 ? 0 : 1);
  }
  GbdtConfig c = Exact(1, 1);
  c.min_samples_leaf = 1;
  const GbdtModel m = FitGbdt(d.rows, d.labels, 2, c);
  CHECK(m.base_scores[0] == std::log(0.5));
  CHECK(m.base_scores[1] == std::log(0.5));
  const GbdtTree &t0 = m.rounds[0][0];
  REQUIRE(t0.nodes.size() == 3);
  CHECK(t0.nodes[0].feature == 0);
  CHECK(t0.nodes[0].threshold == 3.5);
  CHECK(t0.nodes[size_t(t0.nodes[0].left)].value == 0.5);
  CHECK(t0.nodes[size_t(t0.nodes[0].right)].value == -0.5);
  CHECK(m.rounds[0][1].nodes[size_t(m.rounds[0][1].nodes[0].left)].value == -0.5);
  // Scores move by +-0.05, so p0 = sigmoid(0.1) on the left.
  const double want = 1.0 / (1.0 + std::exp(-0.1));
  CHECK(m.PredictProba(d.rows[0])[0] == doctest::Approx(want).epsilon(1e-14));
  CHECK(m.PredictProba(d.rows[5])[1] == doctest::Approx(want).epsilon(1e-14));
}

TEST_CASE("root split matches a brute-force search") {
  for (uint64_t seed : {1u, 2u, 3u}) {
    INFO("seed " << seed);
    const Data d = Random(80, 3, seed);
    const GbdtModel m = FitGbdt(d.rows, d.labels, 3, Exact(1, 1));
    for (int c = 0; c < 3; ++c) {
      // Residuals at round start are y_c - prior_c.
      std::vector<double> res;
      for (size_t i = 0; i < d.rows.size(); ++i) {
        res.push_back((d.labels[i] == c) - std::exp(m.base_scores[size_t(c)]));
      }
      double best_sse = INFINITY, best_thr = 0.0;
      int best_f = -1;
      for (size_t f = 0; f < kNumWideFeatures; ++f) {
        std::vector<double> vals;
        for (const auto &r : d.rows) vals.push_back(r[f]);
        std::sort(vals.begin(), vals.end());
        vals.erase(std::unique(vals.begin(), vals.end()), vals.end());
        for (size_t v = 0; v + 1 < vals.size(); ++v) {
          const double thr = IsCountFeature(f) ? vals[v] + 1.0 : (vals[v] + vals[v + 1]) / 2.0;
          std::vector<double> l, r;
          for (size_t i = 0; i < d.rows.size(); ++i) (d.rows[i][f] < thr ? l : r).push_back(res[i]);
          if (l.size() < 5 || r.size() < 5) continue;
          double sse = 0.0;
          for (const auto *side : {&l, &r}) {
            double mean = 0.0;
            for (double x : *side) mean += x;
            mean /= double(side->size());
            for (double x : *side) sse += (x - mean) * (x - mean);
          }
          if (sse < best_sse - 1e-12) best_sse = sse, best_f = int(f), best_thr = thr;
        }
      }
      const GbdtNode &root = m.rounds[0][size_t(c)].nodes[0];
      CHECK(root.feature == best_f);
      CHECK(root.threshold == doctest::Approx(best_thr).epsilon(1e-15));
    }
  }
}

TEST_CASE("one-dimensional threshold is learned exactly") {
  Data d;
  for (int i = 0; i < 10; ++i) {
    GbdtRow lo{}, hi{};
    lo[0] = i;
    hi[0] = 20 + i;
    d.rows.push_back(lo);
    d.labels.push_back(0);
    d.rows.push_back(hi);
    d.labels.push_back(1);
  }
  const GbdtModel m = FitGbdt(d.rows, d.labels, 2, Exact(1, 20));
  CHECK(Accuracy(m, d) == 1.0);
  const double thr = m.rounds[0][0].nodes[0].threshold;
  CHECK(thr > 9.0);
  CHECK(thr < 20.0);
}

TEST_CASE("single-class training data predicts that class") {
  Data d = Random(40, 2, 4);
  std::fill(d.labels.begin(), d.labels.end(), 1);
  const GbdtModel m = FitGbdt(d.rows, d.labels, 2, GbdtConfig{});
  for (const auto &r : d.rows) CHECK(m.Predict(r) == 1);
}

TEST_CASE("zero rounds give the smoothed class priors") {
  const Data d = Random(100, 3, 5);
  GbdtConfig c;
  c.n_estimators = 0;
  const GbdtModel m = FitGbdt(d.rows, d.labels, 3, c);
  CHECK(m.num_rounds() == 0);
  std::vector<double> counts(3, 0.0);
  for (int y : d.labels) counts[size_t(y)] += 1.0;
  const auto p = m.PredictProba(d.rows[0]);
  for (size_t k = 0; k < 3; ++k) {
    CHECK(p[k] == doctest::Approx((counts[k] + 1.0) / 103.0).epsilon(1e-14));
  }
}

TEST_CASE("probabilities, determinism, prefixes and depth") {
  const Data d = Random(200, 3, 6);
  GbdtConfig c;
  c.max_depth = 3;
  c.n_estimators = 30;
  const GbdtModel a = FitGbdt(d.rows, d.labels, 3, c);
  CHECK(a == FitGbdt(d.rows, d.labels, 3, c));
  c.n_estimators = 12;
  CHECK(FitGbdt(d.rows, d.labels, 3, c) == a.Truncated(12));
  for (const auto &round : a.rounds) {
    for (const auto &t : round) CHECK(t.Depth() <= 3);
  }
  for (const auto &r : d.rows) {
    double s = 0.0;
    for (double p : a.PredictProba(r)) s += p;
    CHECK(std::abs(s - 1.0) < 1e-12);
  }
}

TEST_CASE("training log-loss never rises without subsampling") {
  const Data d = Random(200, 3, 7);
  const GbdtModel m = FitGbdt(d.rows, d.labels, 3, Exact(2, 40));
  double prev = LogLoss(m, d, 0);
  for (size_t r = 1; r <= m.num_rounds(); ++r) {
    const double cur = LogLoss(m, d, r);
    CHECK(cur <= prev + 1e-12);
    prev = cur;
  }
}

TEST_CASE("monotone transforms of continuous features leave predictions unchanged") {
  const Data d = Random(150, 3, 8);
  Data t = d;
  for (auto &r : t.rows) {
    for (size_t f = 0; f < kNumContinuous; ++f) r[f] = r[f] * r[f] * r[f] + 2.0 * r[f];
  }
  GbdtConfig c;
  c.n_estimators = 15;
  const GbdtModel a = FitGbdt(d.rows, d.labels, 3, c);
  const GbdtModel b = FitGbdt(t.rows, t.labels, 3, c);
  for (size_t i = 0; i < d.rows.size(); ++i) {
    CHECK(a.PredictProba(d.rows[i]) == b.PredictProba(t.rows[i]));
  }
}

TEST_CASE("grid search") {
  const Data tr = Random(150, 3, 9), va = Random(80, 3, 10);
  GbdtConfig c;
  const GbdtGridResult one = GridSearchGbdt(tr.rows, tr.labels, va.rows, va.labels, 3, c, {2}, {20});
  c.max_depth = 2;
  c.n_estimators = 20;
  CHECK(one.model == FitGbdt(tr.rows, tr.labels, 3, c));

  const GbdtGridResult g =
      GridSearchGbdt(tr.rows, tr.labels, va.rows, va.labels, 3, GbdtConfig{}, {1, 2, 3}, {5, 10, 20});
  REQUIRE(g.points.size() == 9);
  double best = -1.0;
  for (const auto &p : g.points) best = std::max(best, p.val_accuracy);
  CHECK(g.points[g.best].val_accuracy == best);
  CHECK(Accuracy(g.model, va) == best);
  for (const auto &p : g.points) {
    GbdtConfig pc;
    pc.max_depth = p.max_depth;
    pc.n_estimators = 20;
    const GbdtModel full = FitGbdt(tr.rows, tr.labels, 3, pc);
    CHECK(Accuracy(full.Truncated(size_t(p.n_estimators)), va) == p.val_accuracy);
  }

  const GbdtGridResult self =
      GridSearchGbdt(tr.rows, tr.labels, tr.rows, tr.labels, 3, GbdtConfig{}, {1, 3}, {10});
  CHECK(self.points[self.best].val_accuracy == Accuracy(self.model, tr));
}

TEST_CASE("JSON round trip") {
  const Data d = Random(100, 3, 11);
  GbdtConfig c;
  c.n_estimators = 8;
  const GbdtModel m = FitGbdt(d.rows, d.labels, 3, c);
  const auto dir = testing::TempDir("gbdt");
  SaveGbdt(m, dir / "a.json");
  const GbdtModel back = LoadGbdt(dir / "a.json");
  CHECK(back == m);
  SaveGbdt(back, dir / "b.json");
  std::ifstream a(dir / "a.json"), b(dir / "b.json");
  const std::string sa((std::istreambuf_iterator<char>(a)), {});
  const std::string sb((std::istreambuf_iterator<char>(b)), {});
  CHECK(sa == sb);
}

TEST_CASE("errors") {
  Data d = Random(20, 2, 12);
  CHECK(ErrorOf([&] { FitGbdt(d.rows, d.labels, 1, GbdtConfig{}); }) == ErrorKind::kData);
  d.labels[0] = 5;
  CHECK(ErrorOf([&] { FitGbdt(d.rows, d.labels, 2, GbdtConfig{}); }) == ErrorKind::kLabel);
  d.labels[0] = 0;
  d.rows[0][3] = NAN;
  CHECK(ErrorOf([&] { FitGbdt(d.rows, d.labels, 2, GbdtConfig{}); }) == ErrorKind::kData);
  GbdtConfig c;
  c.subsample = 0.0;
  CHECK(ErrorOf([&] { c.Validate(); }) == ErrorKind::kConfig);
  c = GbdtConfig{};
  c.max_depth = 0;
  CHECK(ErrorOf([&] { c.Validate(); }) == ErrorKind::kConfig);
  const std::vector<double> short_row(5, 0.0);
  CHECK(ErrorOf([&] { ToGbdtRow(short_row); }) == ErrorKind::kShape);
  CHECK(ErrorOf([] { GbdtFromJson({{"format", "other"}}); }) == ErrorKind::kUnsupportedFormat);
  c = Exact(4, 33);
  c.seed = 77;
  CHECK(GbdtConfigFromJson(GbdtConfigToJson(c)) == c);
}

}  // namespace
}  // namespace wdj
