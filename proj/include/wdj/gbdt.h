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

// Stochastic gradient boosting with a K-class softmax loss on the 25 raw wide
// features (13 continuous, then 12 counts).
//
// Each round draws one subsample without replacement, computes residuals
// y_k - p_k under the current scores, and fits one regression tree per class
// by exact variance-reduction splits. Leaves hold the mean residual; scores
// move by shrinkage * leaf. Rows go left when x[feature] < threshold.
// Continuous thresholds are midpoints between adjacent distinct values; count
// thresholds are lower value + 1. Base scores are log((n_k + 1) / (m + K)).
//
// Round r consumes the random stream the same way whatever n_estimators is,
// so a model with fewer rounds is exactly a prefix of one with more.

#ifndef WDJ_GBDT_H_
#define WDJ_GBDT_H_

#include <array>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"
#include "wdj/wide_features.h"

namespace wdj {

using GbdtRow = std::array<double, kNumWideFeatures>;

// Features at index >= kNumContinuous are counts.
inline bool IsCountFeature(size_t f) { return f >= kNumContinuous; }

struct GbdtConfig {
  int max_depth = 3;
  int n_estimators = 50;
  double subsample = 0.9;
  double shrinkage = 0.1;
  int min_samples_leaf = 5;
  uint64_t seed = 1;

  void Validate() const;
  bool operator==(const GbdtConfig &) const = default;
};

nlohmann::json GbdtConfigToJson(const GbdtConfig &c);
GbdtConfig GbdtConfigFromJson(const nlohmann::json &j, GbdtConfig base = {});

struct GbdtNode {
  int feature = -1;  // -1 marks a leaf
  double threshold = 0.0;
  int left = -1;
  int right = -1;
  double value = 0.0;  // leaf value (mean residual)
  bool operator==(const GbdtNode &) const = default;
};

struct GbdtTree {
  std::vector<GbdtNode> nodes;  // nodes[0] is the root

  double Predict(std::span<const double> row) const;
  int Depth() const;  // number of splits on the longest root-to-leaf path
  bool operator==(const GbdtTree &) const = default;
};

struct GbdtModel {
  int num_classes = 0;
  GbdtConfig config;
  std::vector<double> base_scores;
  std::vector<std::vector<GbdtTree>> rounds;  // rounds[r][k]

  size_t num_rounds() const { return rounds.size(); }
  // Raw scores using the first `n_rounds` rounds (all by default).
  std::vector<double> Scores(std::span<const double> row, size_t n_rounds = SIZE_MAX) const;
  std::vector<double> PredictProba(std::span<const double> row,
                                   size_t n_rounds = SIZE_MAX) const;
  int Predict(std::span<const double> row) const;
  GbdtModel Truncated(size_t n_rounds) const;
  bool operator==(const GbdtModel &) const = default;
};

GbdtModel FitGbdt(std::span<const GbdtRow> rows, std::span<const int> labels, int num_classes,
                  const GbdtConfig &config);

struct GbdtGridPoint {
  int max_depth = 0;
  int n_estimators = 0;
  double val_accuracy = 0.0;
};

struct GbdtGridResult {
  std::vector<GbdtGridPoint> points;  // depth-major
  size_t best = 0;
  GbdtModel model;
};

// Defaults to depths 1..9 and 10..90 rounds; one fit per depth with the largest
// round count, prefixes evaluated for the rest. Best by val accuracy, ties to
// fewer rounds, then to smaller depth.
GbdtGridResult GridSearchGbdt(std::span<const GbdtRow> train_rows,
                              std::span<const int> train_labels,
                              std::span<const GbdtRow> val_rows, std::span<const int> val_labels,
                              int num_classes, const GbdtConfig &base,
                              std::vector<int> depths = {1, 2, 3, 4, 5, 6, 7, 8, 9},
                              std::vector<int> n_estimators = {10, 20, 30, 40, 50, 60, 70, 80,
                                                               90});

nlohmann::json GbdtToJson(const GbdtModel &m);
GbdtModel GbdtFromJson(const nlohmann::json &j);
// Canonical JSON text (sorted keys, shortest round-trip reals).
void SaveGbdt(const GbdtModel &m, const std::filesystem::path &path);
GbdtModel LoadGbdt(const std::filesystem::path &path);

// Shape check for rows of any other length.
GbdtRow ToGbdtRow(std::span<const double> values);

}  // namespace wdj

#endif  // WDJ_GBDT_H_
