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

#include "wdj/metrics.h"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <sstream>

#include "wdj/error.h"

namespace wdj {

int64_t ConfusionMatrix::total() const {
  int64_t t = 0;
  for (int64_t c : counts) t += c;
  return t;
}

int64_t ConfusionMatrix::trace() const {
  int64_t t = 0;
  for (int k = 0; k < num_classes; ++k) t += at(k, k);
  return t;
}

ConfusionMatrix Confusion(std::span<const int> preds, std::span<const int> labels,
                          int num_classes) {
  if (num_classes < 1) Fail(ErrorKind::kData, "confusion: num_classes must be positive");
  if (preds.size() != labels.size()) {
    Fail(ErrorKind::kData, "confusion: " + std::to_string(preds.size()) + " predictions for " +
                               std::to_string(labels.size()) + " labels");
  }
  ConfusionMatrix cm;
  cm.num_classes = num_classes;
  cm.counts.assign(static_cast<size_t>(num_classes) * static_cast<size_t>(num_classes), 0);
  for (size_t i = 0; i < preds.size(); ++i) {
    const int p = preds[i];
    const int t = labels[i];
    if (p < 0 || p >= num_classes || t < 0 || t >= num_classes) {
      Fail(ErrorKind::kData, "confusion: class out of range at index " + std::to_string(i));
    }
    ++cm.counts[static_cast<size_t>(t) * static_cast<size_t>(num_classes) +
                static_cast<size_t>(p)];
  }
  return cm;
}

namespace {

double Ratio(int64_t num, int64_t den) {
  return den == 0 ? 0.0 : static_cast<double>(num) / static_cast<double>(den);
}

double F1(double p, double r) { return p + r == 0.0 ? 0.0 : 2.0 * p * r / (p + r); }

}  // namespace

EvalReport ComputeMetrics(const ConfusionMatrix &cm, std::string model_name) {
  const int k = cm.num_classes;
  if (k < 1 || cm.counts.size() != static_cast<size_t>(k) * static_cast<size_t>(k)) {
    Fail(ErrorKind::kData, "metrics: malformed confusion matrix");
  }
  const int64_t total = cm.total();
  if (total <= 0) Fail(ErrorKind::kData, "metrics: empty confusion matrix");
  for (int64_t c : cm.counts) {
    if (c < 0) Fail(ErrorKind::kData, "metrics: negative count");
  }
  EvalReport r;
  r.model = std::move(model_name);
  r.confusion = cm;
  int64_t tp_sum = 0, fp_sum = 0, fn_sum = 0;
  double macro = 0.0;
  for (int c = 0; c < k; ++c) {
    const int64_t tp = cm.at(c, c);
    int64_t pred_c = 0, true_c = 0;
    for (int o = 0; o < k; ++o) {
      pred_c += cm.at(o, c);
      true_c += cm.at(c, o);
    }
    ClassMetrics m;
    m.precision = Ratio(tp, pred_c);
    m.recall = Ratio(tp, true_c);
    m.f1 = F1(m.precision, m.recall);
    m.support = true_c;
    macro += m.f1;
    r.per_class.push_back(m);
    tp_sum += tp;
    fp_sum += pred_c - tp;
    fn_sum += true_c - tp;
  }
  r.accuracy = Ratio(cm.trace(), total);
  r.macro_f1 = macro / static_cast<double>(k);
  // Count form of the pooled F1; equals trace/total bit for bit when FP == FN.
  r.micro_f1 = Ratio(2 * tp_sum, 2 * tp_sum + fp_sum + fn_sum);
  return r;
}

nlohmann::json EvalReportToJson(const EvalReport &r) {
  nlohmann::json per_class = nlohmann::json::array();
  for (const auto &m : r.per_class) {
    per_class.push_back({{"precision", m.precision},
                         {"recall", m.recall},
                         {"f1", m.f1},
                         {"support", m.support}});
  }
  nlohmann::json rows = nlohmann::json::array();
  for (int t = 0; t < r.confusion.num_classes; ++t) {
    nlohmann::json row = nlohmann::json::array();
    for (int p = 0; p < r.confusion.num_classes; ++p) row.push_back(r.confusion.at(t, p));
    rows.push_back(row);
  }
  nlohmann::json j = {{"model", r.model},
                      {"accuracy", r.accuracy},
                      {"micro_f1", r.micro_f1},
                      {"macro_f1", r.macro_f1},
                      {"per_class", per_class},
                      {"confusion", rows},
                      {"zero_division", "0; absent classes count in the macro mean"}};
  if (!r.split_sizes.empty()) j["split_sizes"] = r.split_sizes;
  return j;
}

nlohmann::json ReportsToJson(const std::vector<EvalReport> &reports) {
  nlohmann::json arr = nlohmann::json::array();
  for (const auto &r : reports) arr.push_back(EvalReportToJson(r));
  return {{"reports", arr}};
}

std::string FormatDecimal(double v, int places) {
  if (!std::isfinite(v)) return std::isnan(v) ? "nan" : (v > 0 ? "inf" : "-inf");
  char buf[512];
  auto res = std::to_chars(buf, buf + sizeof(buf), std::fabs(v), std::chars_format::fixed);
  std::string digits(buf, res.ptr);
  const size_t dot = digits.find('.');
  std::string int_part = dot == std::string::npos ? digits : digits.substr(0, dot);
  std::string frac = dot == std::string::npos ? "" : digits.substr(dot + 1);
  const size_t keep = static_cast<size_t>(std::max(places, 0));
  const bool round_up = frac.size() > keep && frac[keep] >= '5';
  frac.resize(keep, '0');
  if (round_up) {
    std::string all = int_part + frac;
    size_t i = all.size();
    while (i > 0) {
      --i;
      if (all[i] == '9') {
        all[i] = '0';
      } else {
        ++all[i];
        break;
      }
      if (i == 0) all.insert(all.begin(), '1');
    }
    int_part = all.substr(0, all.size() - keep);
    frac = all.substr(all.size() - keep);
  }
  std::string out = int_part;
  if (keep > 0) out += "." + frac;
  const bool zero = std::all_of(out.begin(), out.end(), [](char c) { return c == '0' || c == '.'; });
  if (v < 0 && !zero) out.insert(out.begin(), '-');
  return out;
}

std::string RenderTable(const std::vector<EvalReport> &reports) {
  size_t name_w = 5;
  for (const auto &r : reports) name_w = std::max(name_w, r.model.size());
  auto pad_right = [](const std::string &s, size_t w) {
    return s + std::string(w > s.size() ? w - s.size() : 0, ' ');
  };
  auto pad_left = [](const std::string &s, size_t w) {
    return std::string(w > s.size() ? w - s.size() : 0, ' ') + s;
  };
  std::ostringstream out;
  out << pad_right("Model", name_w) << "  " << pad_left("Accuracy", 8) << "  "
      << pad_left("micro-F1", 8) << "  " << pad_left("macro-F1", 8) << "\n";
  out << std::string(name_w + 2 + 8 + 2 + 8 + 2 + 8, '-') << "\n";
  for (const auto &r : reports) {
    out << pad_right(r.model, name_w) << "  " << pad_left(FormatDecimal(r.accuracy), 8) << "  "
        << pad_left(FormatDecimal(r.micro_f1), 8) << "  "
        << pad_left(FormatDecimal(r.macro_f1), 8) << "\n";
  }
  return out.str();
}

}  // namespace wdj
