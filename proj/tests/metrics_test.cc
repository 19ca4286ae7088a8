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

#include <numeric>

#include "doctest.h"
#include "test_util.h"
#include "wdj/metrics.h"
#include "wdj/rng.h"

namespace wdj {
namespace {

using testing::ErrorOf;
using Ints = std::vector<int>;

EvalReport Row(std::string name, double acc, double micro, double macro) {
  EvalReport r;
  r.model = std::move(name);
  r.accuracy = acc;
  r.micro_f1 = micro;
  r.macro_f1 = macro;
  return r;
}

TEST_CASE("confusion: counting and conservation") {
  const Ints labels = {0, 0, 1, 1}, preds = {0, 1, 1, 1};
  const ConfusionMatrix cm = Confusion(preds, labels, 2);
  CHECK(cm.counts == std::vector<int64_t>{1, 1, 0, 2});
  CHECK(cm.at(0, 1) == 1);

  const Ints same = {2, 0, 1, 2};
  const ConfusionMatrix diag = Confusion(same, same, 3);
  for (int t = 0; t < 3; ++t) {
    for (int p = 0; p < 3; ++p) CHECK((diag.at(t, p) > 0) == (t == p && diag.at(t, t) > 0));
  }

  Rng rng(1);
  Ints a(1000), b(1000);
  for (size_t i = 0; i < 1000; ++i) a[i] = int(rng.Below(4)), b[i] = int(rng.Below(4));
  CHECK(Confusion(a, b, 4).total() == 1000);
}

TEST_CASE("metrics: two-class worked example") {
  const Ints labels = {0, 0, 1, 1}, preds = {0, 1, 1, 1};
  const EvalReport r = ComputeMetrics(Confusion(preds, labels, 2));
  CHECK(r.accuracy == 0.75);
  CHECK(r.micro_f1 == 0.75);
  CHECK(r.per_class[0].f1 == doctest::Approx(2.0 / 3).epsilon(1e-15));
  CHECK(r.per_class[1].f1 == doctest::Approx(0.8).epsilon(1e-15));
  CHECK(r.macro_f1 == doctest::Approx(11.0 / 15).epsilon(1e-15));
  CHECK(r.per_class[0].support == 2);
}

TEST_CASE("metrics: perfect predictions and an absent class") {
  const Ints y = {0, 1, 2, 1};
  const EvalReport r = ComputeMetrics(Confusion(y, y, 3));
  CHECK(r.accuracy == 1.0);
  CHECK(r.micro_f1 == 1.0);
  CHECK(r.macro_f1 == 1.0);
  // Class 3 never occurs: its F1 is 0 and it still counts in the mean.
  const EvalReport absent = ComputeMetrics(Confusion(y, y, 4));
  CHECK(absent.per_class[3].f1 == 0.0);
  CHECK(absent.macro_f1 == 0.75);
}

TEST_CASE("metrics: micro-F1 equals accuracy; class permutation invariance") {
  Rng rng(2);
  for (int t = 0; t < 1000; ++t) {
    const int k = 2 + int(rng.Below(5));
    const size_t n = 1 + rng.Below(60);
    Ints preds(n), labels(n);
    for (size_t i = 0; i < n; ++i) {
      labels[i] = int(rng.Below(uint64_t(k)));
      preds[i] = rng.Uniform() < 0.6 ? labels[i] : int(rng.Below(uint64_t(k)));
    }
    const EvalReport r = ComputeMetrics(Confusion(preds, labels, k));
    CHECK(r.micro_f1 == r.accuracy);
    CHECK(r.macro_f1 >= 0.0);
    CHECK(r.macro_f1 <= 1.0);

    Ints perm(size_t(k), 0);
    std::iota(perm.begin(), perm.end(), 0);
    rng.Shuffle(std::span<int>(perm));
    Ints pp(n), pl(n);
    for (size_t i = 0; i < n; ++i) pp[i] = perm[size_t(preds[i])], pl[i] = perm[size_t(labels[i])];
    const EvalReport q = ComputeMetrics(Confusion(pp, pl, k));
    CHECK(q.accuracy == r.accuracy);
    CHECK(q.micro_f1 == r.micro_f1);
    CHECK(q.macro_f1 == doctest::Approx(r.macro_f1).epsilon(1e-14));
  }
}

TEST_CASE("errors") {
  const Ints two = {0, 1}, three = {0, 1, 1}, bad = {0, 5};
  CHECK(ErrorOf([&] { Confusion(two, three, 2); }) == ErrorKind::kData);
  CHECK(ErrorOf([&] { Confusion(bad, two, 2); }) == ErrorKind::kData);
  CHECK(ErrorOf([&] { ComputeMetrics(Confusion({}, {}, 2)); }) == ErrorKind::kData);
}

TEST_CASE("format_decimal rounds half away from zero") {
  CHECK(FormatDecimal(0.6495) == "0.650");
  CHECK(FormatDecimal(0.7285) == "0.729");
  CHECK(FormatDecimal(0.0) == "0.000");
  CHECK(FormatDecimal(1.0) == "1.000");
  CHECK(FormatDecimal(-0.0005) == "-0.001");
  CHECK(FormatDecimal(0.12345, 4) == "0.1235");
}

TEST_CASE("render_table: published rows") {
  const std::string table = RenderTable({Row("GBDT", 0.705, 0.676, 0.606),
                                         Row("Deep-only", 0.728, 0.704, 0.643),
                                         Row("W&D", 0.728, 0.709, 0.649)});
  CHECK(table ==
        "Model      Accuracy  micro-F1  macro-F1\n"
        "---------------------------------------\n"
        "GBDT          0.705     0.676     0.606\n"
        "Deep-only     0.728     0.704     0.643\n"
        "W&D           0.728     0.709     0.649\n");
  const std::string one = RenderTable({Row("wide", 0.78125, 0.78125, 0.7)});
  CHECK(std::count(one.begin(), one.end(), '\n') == 3);
  CHECK(one.find("0.781") != std::string::npos);
}

TEST_CASE("report JSON") {
  const Ints labels = {0, 0, 1, 1}, preds = {0, 1, 1, 1};
  EvalReport r = ComputeMetrics(Confusion(preds, labels, 2), "wd");
  r.split_sizes = {{"test", 4}};
  const nlohmann::json j = EvalReportToJson(r);
  CHECK(j["model"] == "wd");
  CHECK(j["accuracy"] == 0.75);
  CHECK(j["confusion"].dump() == "[[1,1],[0,2]]");
  CHECK(ReportsToJson({r, r}).dump().find("\"wd\"") != std::string::npos);
}

}  // namespace
}  // namespace wdj
