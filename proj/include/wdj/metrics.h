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

// Confusion-matrix metrics and the results table.
//
// A class with a zero denominator gets precision, recall or F1 of 0 and still
// counts in the macro mean. Micro-F1 pools TP/FP/FN over classes, which for
// single-label data always equals accuracy.

#ifndef WDJ_METRICS_H_
#define WDJ_METRICS_H_

#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"

namespace wdj {

struct ConfusionMatrix {
  int num_classes = 0;
  std::vector<int64_t> counts;  // row = true class, col = predicted

  int64_t at(int truth, int pred) const {
    return counts[static_cast<size_t>(truth) * static_cast<size_t>(num_classes) +
                  static_cast<size_t>(pred)];
  }
  int64_t total() const;
  int64_t trace() const;
  bool operator==(const ConfusionMatrix &) const = default;
};

ConfusionMatrix Confusion(std::span<const int> preds, std::span<const int> labels,
                          int num_classes);

struct ClassMetrics {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  int64_t support = 0;
};

struct EvalReport {
  std::string model;
  double accuracy = 0.0;
  double micro_f1 = 0.0;
  double macro_f1 = 0.0;
  std::vector<ClassMetrics> per_class;
  ConfusionMatrix confusion;
  std::map<std::string, int64_t> split_sizes;
};

EvalReport ComputeMetrics(const ConfusionMatrix &cm, std::string model_name = "");

nlohmann::json EvalReportToJson(const EvalReport &r);
nlohmann::json ReportsToJson(const std::vector<EvalReport> &reports);

// Rounds half away from zero on the shortest decimal representation of v,
// so 0.6495 -> "0.650" even though the nearest double is below 0.6495.
std::string FormatDecimal(double v, int places = 3);

// Fixed-width text table: model, Accuracy, micro-F1, macro-F1.
std::string RenderTable(const std::vector<EvalReport> &reports);

}  // namespace wdj

#endif  // WDJ_METRICS_H_
