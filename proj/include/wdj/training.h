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

// Mini-batch cross-entropy training with Adam, early stopping on validation
// accuracy, and the hidden-size grid search.

#ifndef WDJ_TRAINING_H_
#define WDJ_TRAINING_H_

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"
#include "wdj/corpus.h"
#include "wdj/model.h"

namespace wdj {

struct AdamConfig {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

// Bias-corrected Adam over a fixed list of tensors; reads each tensor's grad.
class Adam {
 public:
  explicit Adam(AdamConfig config = {}) : config_(config) {}

  void Step(std::span<Tensor *const> params);
  int64_t steps() const { return t_; }
  const AdamConfig &config() const { return config_; }

 private:
  AdamConfig config_;
  std::vector<std::vector<double>> m_, v_;
  int64_t t_ = 0;
};

struct TrainConfig {
  int batch_size = 256;
  int max_epochs = 50;
  int patience = 5;
  AdamConfig adam;
  double weight_decay = 0.0;  // L2 coefficient added to every gradient
  std::vector<int> hidden_grid = {64, 128, 256};
  uint64_t seed = 1;
  bool deterministic = true;

  void Validate() const;
};

nlohmann::json TrainConfigToJson(const TrainConfig &c);
TrainConfig TrainConfigFromJson(const nlohmann::json &j, TrainConfig base = {});

struct EpochRecord {
  int epoch = 0;  // 1-based
  double train_loss = 0.0;
  double val_loss = 0.0;
  double val_accuracy = 0.0;
};

struct TrainReport {
  std::string mode;
  int lstm_hidden = 0;
  uint64_t seed = 0;
  std::vector<EpochRecord> epochs;
  int best_epoch = 0;
  double best_val_accuracy = 0.0;
  double first_batch_loss = 0.0;
  bool stopped_early = false;
  double wall_clock_s = 0.0;
  TrainConfig config;
  std::optional<nlohmann::json> test_metrics;
};

// Wall clock is left out when `with_wall_clock` is false so that
// deterministic runs produce identical reports.
nlohmann::json TrainReportToJson(const TrainReport &r, bool with_wall_clock);

struct TrainResult {
  WideDeepModel model;
  TrainReport report;
};

using EpochCallback = std::function<void(const EpochRecord &)>;

// Standardizer fitted on `train`; model K taken from `train`.
TrainResult Train(const Dataset &train, const Dataset &val, const WideDeepConfig &model_config,
                  const TrainConfig &config, const EpochCallback &on_epoch = nullptr);

struct GridPoint {
  int lstm_hidden = 0;
  std::optional<TrainReport> report;
  std::string error;  // set when the point failed
};

struct GridSearchResult {
  std::vector<GridPoint> points;
  size_t best = 0;
  WideDeepModel model;
};

// One run per H in config.hidden_grid, all with config.seed. Best by val
// accuracy, ties to the smaller H, then to grid order.
GridSearchResult GridSearchHidden(const Dataset &train, const Dataset &val,
                                  const WideDeepConfig &model_config, const TrainConfig &config,
                                  const EpochCallback &on_epoch = nullptr);

// Batch inference.
std::vector<ModelInput> PrepareInputs(const Dataset &ds, const WideDeepModel &model);
std::vector<std::vector<double>> PredictProba(const WideDeepModel &model,
                                              std::span<const ModelInput> inputs);
std::vector<std::vector<double>> PredictProba(const WideDeepModel &model, const Dataset &ds);
// argmax with ties to the lowest class index.
int ArgMax(std::span<const double> v);
std::vector<int> ArgMaxRows(const std::vector<std::vector<double>> &probs);

}  // namespace wdj

#endif  // WDJ_TRAINING_H_
