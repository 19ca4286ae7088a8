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

#include "wdj/training.h"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>

#include "wdj/error.h"
#include "wdj/rng.h"

namespace wdj {

void Adam::Step(std::span<Tensor *const> params) {
  if (m_.empty()) {
    for (Tensor *p : params) {
      m_.emplace_back(p->size(), 0.0);
      v_.emplace_back(p->size(), 0.0);
    }
  }
  if (m_.size() != params.size()) {
    Fail(ErrorKind::kShape, "adam: state holds " + std::to_string(m_.size()) +
                                " tensors, got " + std::to_string(params.size()));
  }
  ++t_;
  const double c1 = 1.0 - std::pow(config_.beta1, static_cast<double>(t_));
  const double c2 = 1.0 - std::pow(config_.beta2, static_cast<double>(t_));
  for (size_t i = 0; i < params.size(); ++i) {
    Tensor &p = *params[i];
    if (p.size() != m_[i].size()) {
      Fail(ErrorKind::kShape, "adam: state shape mismatch for tensor " + std::to_string(i));
    }
    if (!p.has_grad()) continue;
    auto g = p.grad();
    auto &m = m_[i];
    auto &v = v_[i];
    for (size_t j = 0; j < p.size(); ++j) {
      m[j] = config_.beta1 * m[j] + (1.0 - config_.beta1) * g[j];
      v[j] = config_.beta2 * v[j] + (1.0 - config_.beta2) * g[j] * g[j];
      const double m_hat = m[j] / c1;
      const double v_hat = v[j] / c2;
      p[j] -= config_.lr * m_hat / (std::sqrt(v_hat) + config_.eps);
    }
  }
}

// ---------------------------------------------------------------------------

void TrainConfig::Validate() const {
  if (batch_size < 1) Fail(ErrorKind::kConfig, "train config: batch_size must be >= 1");
  if (max_epochs < 1) Fail(ErrorKind::kConfig, "train config: max_epochs must be >= 1");
  if (patience < 1 || patience >= max_epochs) {
    Fail(ErrorKind::kConfig, "train config: need 1 <= patience < max_epochs");
  }
  if (!(adam.lr >= 0.0) || !(adam.beta1 >= 0.0 && adam.beta1 < 1.0) ||
      !(adam.beta2 >= 0.0 && adam.beta2 < 1.0) || !(adam.eps > 0.0)) {
    Fail(ErrorKind::kConfig, "train config: invalid optimizer hyperparameters");
  }
  if (!(weight_decay >= 0.0)) Fail(ErrorKind::kConfig, "train config: weight_decay < 0");
  if (hidden_grid.empty()) Fail(ErrorKind::kConfig, "train config: empty hidden_grid");
  for (int h : hidden_grid) {
    if (h < 1) Fail(ErrorKind::kConfig, "train config: hidden sizes must be positive");
  }
}

nlohmann::json TrainConfigToJson(const TrainConfig &c) {
  return {{"batch_size", c.batch_size},
          {"max_epochs", c.max_epochs},
          {"patience", c.patience},
          {"optimizer",
           {{"name", "adam"},
            {"lr", c.adam.lr},
            {"beta1", c.adam.beta1},
            {"beta2", c.adam.beta2},
            {"eps", c.adam.eps}}},
          {"weight_decay", c.weight_decay},
          {"hidden_grid", c.hidden_grid},
          {"seed", c.seed},
          {"deterministic", c.deterministic}};
}

TrainConfig TrainConfigFromJson(const nlohmann::json &j, TrainConfig c) {
  if (!j.is_object()) Fail(ErrorKind::kConfig, "train config must be a JSON object");
  try {
    if (j.contains("batch_size")) c.batch_size = j.at("batch_size").get<int>();
    if (j.contains("max_epochs")) c.max_epochs = j.at("max_epochs").get<int>();
    if (j.contains("patience")) c.patience = j.at("patience").get<int>();
    if (j.contains("weight_decay")) c.weight_decay = j.at("weight_decay").get<double>();
    if (j.contains("hidden_grid")) c.hidden_grid = j.at("hidden_grid").get<std::vector<int>>();
    if (j.contains("seed")) c.seed = j.at("seed").get<uint64_t>();
    if (j.contains("deterministic")) c.deterministic = j.at("deterministic").get<bool>();
    if (j.contains("lr")) c.adam.lr = j.at("lr").get<double>();
    if (j.contains("optimizer")) {
      const auto &o = j.at("optimizer");
      if (o.contains("name") && o.at("name").get<std::string>() != "adam") {
        Fail(ErrorKind::kConfig, "train config: only the adam optimizer is available");
      }
      if (o.contains("lr")) c.adam.lr = o.at("lr").get<double>();
      if (o.contains("beta1")) c.adam.beta1 = o.at("beta1").get<double>();
      if (o.contains("beta2")) c.adam.beta2 = o.at("beta2").get<double>();
      if (o.contains("eps")) c.adam.eps = o.at("eps").get<double>();
    }
  } catch (const nlohmann::json::exception &e) {
    Fail(ErrorKind::kConfig, std::string("train config: ") + e.what());
  }
  c.Validate();
  return c;
}

nlohmann::json TrainReportToJson(const TrainReport &r, bool with_wall_clock) {
  nlohmann::json epochs = nlohmann::json::array();
  for (const auto &e : r.epochs) {
    epochs.push_back({{"epoch", e.epoch},
                      {"train_loss", e.train_loss},
                      {"val_loss", e.val_loss},
                      {"val_accuracy", e.val_accuracy}});
  }
  nlohmann::json j = {{"mode", r.mode},
                      {"lstm_hidden", r.lstm_hidden},
                      {"seed", r.seed},
                      {"epochs", epochs},
                      {"best_epoch", r.best_epoch},
                      {"best_val_accuracy", r.best_val_accuracy},
                      {"first_batch_loss", r.first_batch_loss},
                      {"stopped_early", r.stopped_early},
                      {"train_config", TrainConfigToJson(r.config)}};
  if (with_wall_clock) j["wall_clock_s"] = r.wall_clock_s;
  if (r.test_metrics) j["test_metrics"] = *r.test_metrics;
  return j;
}

// ---------------------------------------------------------------------------

int ArgMax(std::span<const double> v) {
  size_t best = 0;
  for (size_t i = 1; i < v.size(); ++i) {
    if (v[i] > v[best]) best = i;
  }
  return static_cast<int>(best);
}

std::vector<int> ArgMaxRows(const std::vector<std::vector<double>> &probs) {
  std::vector<int> out;
  out.reserve(probs.size());
  for (const auto &p : probs) out.push_back(ArgMax(p));
  return out;
}

std::vector<ModelInput> PrepareInputs(const Dataset &ds, const WideDeepModel &model) {
  std::vector<ModelInput> out;
  out.reserve(ds.size());
  for (const auto &s : ds.samples) out.push_back(PrepareInput(s, model));
  return out;
}

std::vector<std::vector<double>> PredictProba(const WideDeepModel &model,
                                              std::span<const ModelInput> inputs) {
  std::vector<std::vector<double>> out;
  out.reserve(inputs.size());
  for (const auto &in : inputs) {
    Tensor p = nn::Softmax(FusedLogits(in, model));
    out.emplace_back(p.values().begin(), p.values().end());
  }
  return out;
}

std::vector<std::vector<double>> PredictProba(const WideDeepModel &model, const Dataset &ds) {
  const auto inputs = PrepareInputs(ds, model);
  return PredictProba(model, inputs);
}

namespace {

struct EvalResult {
  double loss = 0.0;
  double accuracy = 0.0;
};

EvalResult Evaluate(const WideDeepModel &model, std::span<const ModelInput> inputs) {
  EvalResult r;
  size_t correct = 0;
  for (const auto &in : inputs) {
    Tensor logits = FusedLogits(in, model);
    const int label = in.label;
    auto xent = nn::SoftmaxXent(logits, std::span<const int>(&label, 1));
    r.loss += xent.loss;
    if (ArgMax(logits.values()) == label) ++correct;
  }
  r.loss /= static_cast<double>(inputs.size());
  r.accuracy = static_cast<double>(correct) / static_cast<double>(inputs.size());
  return r;
}

bool ParamsFinite(const WideDeepParams &p) {
  bool ok = true;
  p.ForEach([&](const std::string &, const Tensor &t) { ok = ok && t.AllFinite(); });
  return ok;
}

[[noreturn]] void Diverged(int epoch, size_t batch, const std::string &why) {
  Fail(ErrorKind::kTrainingDiverged, "training diverged at epoch " + std::to_string(epoch) +
                                         ", batch " + std::to_string(batch) + ": " + why);
}

}  // namespace

TrainResult Train(const Dataset &train, const Dataset &val, const WideDeepConfig &model_config,
                  const TrainConfig &config, const EpochCallback &on_epoch) {
  config.Validate();
  if (train.empty()) Fail(ErrorKind::kEmptyDataset, "train: training split is empty");
  if (val.empty()) Fail(ErrorKind::kEmptyDataset, "train: validation split is empty");
  if (train.num_classes != val.num_classes) {
    Fail(ErrorKind::kClassMismatch,
         "train: training split has K=" + std::to_string(train.num_classes) +
             " but validation split has K=" + std::to_string(val.num_classes));
  }
  const auto t0 = std::chrono::steady_clock::now();

  WideDeepConfig mc = model_config;
  mc.num_classes = train.num_classes;
  TrainResult result{WideDeepModel::Init(mc, config.seed), {}};
  WideDeepModel &model = result.model;

  std::vector<WideFeatures> train_wide;
  train_wide.reserve(train.size());
  for (const auto &s : train.samples) train_wide.push_back(ExtractWide(s, mc.catalog));
  model.set_standardizer(Standardizer::Fit(train_wide));

  std::vector<ModelInput> train_in;
  train_in.reserve(train.size());
  for (size_t i = 0; i < train.size(); ++i) {
    train_in.push_back(PrepareInput(train.samples[i], train_wide[i], model));
  }
  train_wide.clear();
  const auto val_in = PrepareInputs(val, model);

  TrainReport &report = result.report;
  report.mode = std::string(ModelModeName(mc.mode));
  report.lstm_hidden = mc.lstm_hidden;
  report.seed = config.seed;
  report.config = config;

  Adam adam(config.adam);
  const auto params = model.params().All();
  Rng shuffle_rng = Rng(config.seed).Fork(1);
  std::vector<size_t> order(train_in.size());
  const size_t batch = static_cast<size_t>(config.batch_size);

  std::optional<WideDeepModel> best;
  double best_acc = -1.0;
  int since_best = 0;

  for (int epoch = 1; epoch <= config.max_epochs; ++epoch) {
    std::iota(order.begin(), order.end(), size_t{0});
    shuffle_rng.Shuffle(std::span<size_t>(order));
    double loss_sum = 0.0;
    size_t batch_index = 0;
    for (size_t b0 = 0; b0 < order.size(); b0 += batch, ++batch_index) {
      const size_t m = std::min(batch, order.size() - b0);
      const double inv_m = 1.0 / static_cast<double>(m);
      model.params().ZeroGrad();
      double batch_loss = 0.0;
      try {
        for (size_t k = b0; k < b0 + m; ++k) {
          const ModelInput &in = train_in[order[k]];
          ForwardTape tape;
          Tensor logits = FusedLogits(in, model, &tape);
          auto xent = nn::SoftmaxXent(logits, std::span<const int>(&in.label, 1));
          for (double &g : xent.grad.values()) g *= inv_m;
          FusedBackward(in, tape, model, xent.grad);
          batch_loss += xent.loss;
        }
      } catch (const Error &e) {
        if (e.kind() != ErrorKind::kNumeric) throw;
        Diverged(epoch, batch_index + 1, e.what());
      }
      batch_loss *= inv_m;
      if (!std::isfinite(batch_loss)) Diverged(epoch, batch_index + 1, "loss is not finite");
      if (epoch == 1 && batch_index == 0) report.first_batch_loss = batch_loss;
      if (config.weight_decay > 0.0) {
        for (Tensor *p : params) {
          if (!p->has_grad()) continue;
          auto g = p->grad();
          for (size_t j = 0; j < p->size(); ++j) g[j] += config.weight_decay * (*p)[j];
        }
      }
      adam.Step(params);
      if (!ParamsFinite(model.params())) {
        Diverged(epoch, batch_index + 1, "parameters became non-finite");
      }
      loss_sum += batch_loss * static_cast<double>(m);
    }

    EvalResult ev;
    try {
      ev = Evaluate(model, val_in);
    } catch (const Error &e) {
      if (e.kind() != ErrorKind::kNumeric) throw;
      Diverged(epoch, batch_index, e.what());
    }
    EpochRecord rec{epoch, loss_sum / static_cast<double>(order.size()), ev.loss, ev.accuracy};
    report.epochs.push_back(rec);
    if (on_epoch) on_epoch(rec);

    if (rec.val_accuracy > best_acc) {
      best_acc = rec.val_accuracy;
      report.best_epoch = epoch;
      best = model;
      since_best = 0;
    } else if (++since_best >= config.patience) {
      report.stopped_early = epoch < config.max_epochs;
      break;
    }
  }

  report.best_val_accuracy = best_acc;
  result.model = std::move(*best);
  result.model.params().ForEach([](const std::string &, Tensor &t) { t.DropGrad(); });
  report.wall_clock_s =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return result;
}

GridSearchResult GridSearchHidden(const Dataset &train, const Dataset &val,
                                  const WideDeepConfig &model_config, const TrainConfig &config,
                                  const EpochCallback &on_epoch) {
  config.Validate();
  GridSearchResult out;
  std::optional<WideDeepModel> best_model;
  std::optional<Error> last_error;
  for (int h : config.hidden_grid) {
    GridPoint point;
    point.lstm_hidden = h;
    WideDeepConfig mc = model_config;
    mc.lstm_hidden = h;
    try {
      TrainResult r = Train(train, val, mc, config, on_epoch);
      point.report = r.report;
      const bool better =
          !best_model ||
          r.report.best_val_accuracy > out.points[out.best].report->best_val_accuracy ||
          (r.report.best_val_accuracy == out.points[out.best].report->best_val_accuracy &&
           h < out.points[out.best].lstm_hidden);
      if (better) {
        out.best = out.points.size();
        best_model = std::move(r.model);
      }
    } catch (const Error &e) {
      point.error = e.what();
      last_error = e;
    }
    out.points.push_back(std::move(point));
  }
  if (!best_model) throw *last_error;
  out.model = std::move(*best_model);
  return out;
}

}  // namespace wdj
