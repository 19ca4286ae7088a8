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

#include "wdj/gbdt.h"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iterator>
#include <numeric>
#include <optional>
#include <sstream>

#include "wdj/error.h"
#include "wdj/rng.h"

namespace wdj {

namespace {

constexpr size_t kNumFeatures = kNumWideFeatures;
// Splits must beat this sum-of-squares gain; filters rounding noise on
// constant residuals.
constexpr double kMinGain = 1e-12;

void SoftmaxInPlace(std::vector<double> &z) {
  const double mx = *std::max_element(z.begin(), z.end());
  double sum = 0.0;
  for (double &v : z) {
    v = std::exp(v - mx);
    sum += v;
  }
  for (double &v : z) v /= sum;
}

}  // namespace

void GbdtConfig::Validate() const {
  if (max_depth < 1) Fail(ErrorKind::kConfig, "gbdt: max_depth must be >= 1");
  if (n_estimators < 0) Fail(ErrorKind::kConfig, "gbdt: n_estimators must be >= 0");
  if (!(subsample > 0.0 && subsample <= 1.0)) {
    Fail(ErrorKind::kConfig, "gbdt: subsample must lie in (0, 1]");
  }
  if (!(shrinkage > 0.0) || !std::isfinite(shrinkage)) {
    Fail(ErrorKind::kConfig, "gbdt: shrinkage must be positive");
  }
  if (min_samples_leaf < 1) Fail(ErrorKind::kConfig, "gbdt: min_samples_leaf must be >= 1");
}

nlohmann::json GbdtConfigToJson(const GbdtConfig &c) {
  return {{"max_depth", c.max_depth},         {"n_estimators", c.n_estimators},
          {"subsample", c.subsample},         {"shrinkage", c.shrinkage},
          {"min_samples_leaf", c.min_samples_leaf}, {"seed", c.seed}};
}

GbdtConfig GbdtConfigFromJson(const nlohmann::json &j, GbdtConfig c) {
  if (!j.is_object()) Fail(ErrorKind::kConfig, "gbdt config must be a JSON object");
  try {
    if (j.contains("max_depth")) c.max_depth = j.at("max_depth").get<int>();
    if (j.contains("n_estimators")) c.n_estimators = j.at("n_estimators").get<int>();
    if (j.contains("subsample")) c.subsample = j.at("subsample").get<double>();
    if (j.contains("shrinkage")) c.shrinkage = j.at("shrinkage").get<double>();
    if (j.contains("min_samples_leaf")) c.min_samples_leaf = j.at("min_samples_leaf").get<int>();
    if (j.contains("seed")) c.seed = j.at("seed").get<uint64_t>();
  } catch (const nlohmann::json::exception &e) {
    Fail(ErrorKind::kConfig, std::string("gbdt config: ") + e.what());
  }
  c.Validate();
  return c;
}

// ---------------------------------------------------------------------------

double GbdtTree::Predict(std::span<const double> row) const {
  size_t i = 0;
  while (nodes[i].feature >= 0) {
    const auto &n = nodes[i];
    i = static_cast<size_t>(row[static_cast<size_t>(n.feature)] < n.threshold ? n.left : n.right);
  }
  return nodes[i].value;
}

int GbdtTree::Depth() const {
  if (nodes.empty()) return 0;
  std::vector<std::pair<size_t, int>> stack = {{0, 0}};
  int depth = 0;
  while (!stack.empty()) {
    auto [i, d] = stack.back();
    stack.pop_back();
    depth = std::max(depth, d);
    if (nodes[i].feature >= 0) {
      stack.push_back({static_cast<size_t>(nodes[i].left), d + 1});
      stack.push_back({static_cast<size_t>(nodes[i].right), d + 1});
    }
  }
  return depth;
}

std::vector<double> GbdtModel::Scores(std::span<const double> row, size_t n_rounds) const {
  if (row.size() != kNumFeatures) {
    Fail(ErrorKind::kShape, "gbdt: row has " + std::to_string(row.size()) + " features, expected " +
                                std::to_string(kNumFeatures));
  }
  std::vector<double> z = base_scores;
  const size_t n = std::min(n_rounds, rounds.size());
  for (size_t r = 0; r < n; ++r) {
    for (size_t k = 0; k < z.size(); ++k) z[k] += config.shrinkage * rounds[r][k].Predict(row);
  }
  return z;
}

std::vector<double> GbdtModel::PredictProba(std::span<const double> row, size_t n_rounds) const {
  auto z = Scores(row, n_rounds);
  SoftmaxInPlace(z);
  return z;
}

int GbdtModel::Predict(std::span<const double> row) const {
  const auto z = Scores(row);
  return static_cast<int>(std::max_element(z.begin(), z.end()) - z.begin());
}

GbdtModel GbdtModel::Truncated(size_t n_rounds) const {
  GbdtModel m = *this;
  if (m.rounds.size() > n_rounds) m.rounds.resize(n_rounds);
  m.config.n_estimators = static_cast<int>(m.rounds.size());
  return m;
}

GbdtRow ToGbdtRow(std::span<const double> values) {
  if (values.size() != kNumFeatures) {
    Fail(ErrorKind::kShape, "gbdt: row has " + std::to_string(values.size()) +
                                " features, expected " + std::to_string(kNumFeatures));
  }
  GbdtRow row;
  std::copy(values.begin(), values.end(), row.begin());
  return row;
}

// ---------------------------------------------------------------------------

namespace {

// Member lists of one node, one per feature, each sorted by that feature's
// value with row index as tie-break.
using SortedLists = std::array<std::vector<uint32_t>, kNumFeatures>;

class TreeBuilder {
 public:
  TreeBuilder(std::span<const GbdtRow> rows, const std::vector<double> &residual,
              const GbdtConfig &cfg)
      : rows_(rows), residual_(residual), cfg_(cfg) {}

  GbdtTree Build(SortedLists lists) {
    tree_.nodes.clear();
    Grow(std::move(lists), 0);
    return std::move(tree_);
  }

 private:
  int Grow(SortedLists lists, int depth) {
    const auto &members = lists[0];
    const size_t n = members.size();
    double total = 0.0;
    for (uint32_t i : members) total += residual_[i];
    const int id = static_cast<int>(tree_.nodes.size());
    tree_.nodes.push_back(GbdtNode{});
    tree_.nodes[static_cast<size_t>(id)].value = n > 0 ? total / static_cast<double>(n) : 0.0;

    const size_t min_leaf = static_cast<size_t>(cfg_.min_samples_leaf);
    if (depth >= cfg_.max_depth || n < 2 * min_leaf) return id;

    const double parent = total * total / static_cast<double>(n);
    double best_gain = kMinGain;
    int best_f = -1;
    double best_thr = 0.0;
    for (size_t f = 0; f < kNumFeatures; ++f) {
      const auto &order = lists[f];
      double left = 0.0;
      for (size_t i = 0; i + 1 < n; ++i) {
        left += residual_[order[i]];
        const size_t nl = i + 1;
        const size_t nr = n - nl;
        if (nl < min_leaf) continue;
        if (nr < min_leaf) break;
        const double lo = rows_[order[i]][f];
        const double hi = rows_[order[i + 1]][f];
        if (!(hi > lo)) continue;
        const double right = total - left;
        const double gain = left * left / static_cast<double>(nl) +
                            right * right / static_cast<double>(nr) - parent;
        if (gain > best_gain) {
          best_gain = gain;
          best_f = static_cast<int>(f);
          best_thr = Threshold(f, lo, hi);
        }
      }
    }
    if (best_f < 0) return id;

    SortedLists left_lists, right_lists;
    const size_t bf = static_cast<size_t>(best_f);
    for (size_t f = 0; f < kNumFeatures; ++f) {
      left_lists[f].reserve(n);
      right_lists[f].reserve(n);
      for (uint32_t i : lists[f]) {
        (rows_[i][bf] < best_thr ? left_lists[f] : right_lists[f]).push_back(i);
      }
    }
    lists = SortedLists{};
    const int l = Grow(std::move(left_lists), depth + 1);
    const int r = Grow(std::move(right_lists), depth + 1);
    auto &node = tree_.nodes[static_cast<size_t>(id)];
    node.feature = best_f;
    node.threshold = best_thr;
    node.left = l;
    node.right = r;
    node.value = 0.0;
    return id;
  }

  static double Threshold(size_t f, double lo, double hi) {
    if (IsCountFeature(f)) return std::floor(lo) + 1.0;
    const double mid = lo + (hi - lo) / 2.0;
    return mid > lo ? mid : hi;
  }

  std::span<const GbdtRow> rows_;
  const std::vector<double> &residual_;
  const GbdtConfig &cfg_;
  GbdtTree tree_;
};

void CheckInputs(std::span<const GbdtRow> rows, std::span<const int> labels, int num_classes) {
  if (rows.size() != labels.size()) {
    Fail(ErrorKind::kData, "gbdt: " + std::to_string(rows.size()) + " rows but " +
                               std::to_string(labels.size()) + " labels");
  }
  if (rows.size() < 2) Fail(ErrorKind::kData, "gbdt: need at least 2 training rows");
  if (num_classes < 2) Fail(ErrorKind::kData, "gbdt: need at least 2 classes");
  for (int y : labels) {
    if (y < 0 || y >= num_classes) {
      Fail(ErrorKind::kLabel, "gbdt: label " + std::to_string(y) + " outside [0," +
                                  std::to_string(num_classes) + ")");
    }
  }
  for (const auto &row : rows) {
    for (double v : row) {
      if (!std::isfinite(v)) Fail(ErrorKind::kData, "gbdt: non-finite feature value");
    }
  }
}

}  // namespace

GbdtModel FitGbdt(std::span<const GbdtRow> rows, std::span<const int> labels, int num_classes,
                  const GbdtConfig &config) {
  config.Validate();
  CheckInputs(rows, labels, num_classes);
  const size_t m = rows.size();
  const size_t k = static_cast<size_t>(num_classes);

  GbdtModel model;
  model.num_classes = num_classes;
  model.config = config;
  std::vector<size_t> counts(k, 0);
  for (int y : labels) ++counts[static_cast<size_t>(y)];
  for (size_t c = 0; c < k; ++c) {
    model.base_scores.push_back(std::log((static_cast<double>(counts[c]) + 1.0) /
                                         (static_cast<double>(m) + static_cast<double>(k))));
  }

  // Global per-feature orderings; node lists are filtered from these.
  SortedLists global;
  for (size_t f = 0; f < kNumFeatures; ++f) {
    auto &order = global[f];
    order.resize(m);
    std::iota(order.begin(), order.end(), 0u);
    std::stable_sort(order.begin(), order.end(),
                     [&](uint32_t a, uint32_t b) { return rows[a][f] < rows[b][f]; });
  }

  std::vector<double> scores(m * k);
  for (size_t i = 0; i < m; ++i) {
    std::copy(model.base_scores.begin(), model.base_scores.end(), scores.begin() + i * k);
  }
  const size_t n_sub = std::max<size_t>(
      1, std::min(m, static_cast<size_t>(std::llround(config.subsample * static_cast<double>(m)))));
  Rng rng(config.seed);
  std::vector<uint32_t> perm(m);
  std::vector<uint8_t> in_sample(m);
  std::vector<double> residual(m);
  std::vector<double> prob(k);

  for (int round = 0; round < config.n_estimators; ++round) {
    std::fill(in_sample.begin(), in_sample.end(), 0);
    if (n_sub == m) {
      std::fill(in_sample.begin(), in_sample.end(), 1);
    } else {
      std::iota(perm.begin(), perm.end(), 0u);
      rng.Shuffle(std::span<uint32_t>(perm));
      for (size_t i = 0; i < n_sub; ++i) in_sample[perm[i]] = 1;
    }
    SortedLists lists;
    for (size_t f = 0; f < kNumFeatures; ++f) {
      lists[f].reserve(n_sub);
      for (uint32_t i : global[f]) {
        if (in_sample[i]) lists[f].push_back(i);
      }
    }
    // Residuals for every class from the scores at round start.
    std::vector<std::vector<double>> class_residual(k, std::vector<double>(m, 0.0));
    for (size_t i = 0; i < m; ++i) {
      if (!in_sample[i]) continue;
      std::copy(scores.begin() + i * k, scores.begin() + (i + 1) * k, prob.begin());
      SoftmaxInPlace(prob);
      for (size_t c = 0; c < k; ++c) {
        class_residual[c][i] = (static_cast<size_t>(labels[i]) == c ? 1.0 : 0.0) - prob[c];
      }
    }
    std::vector<GbdtTree> trees;
    trees.reserve(k);
    for (size_t c = 0; c < k; ++c) {
      residual = class_residual[c];
      TreeBuilder builder(rows, residual, config);
      trees.push_back(builder.Build(lists));
    }
    for (size_t i = 0; i < m; ++i) {
      for (size_t c = 0; c < k; ++c) {
        scores[i * k + c] += config.shrinkage * trees[c].Predict(rows[i]);
      }
    }
    model.rounds.push_back(std::move(trees));
  }
  return model;
}

GbdtGridResult GridSearchGbdt(std::span<const GbdtRow> train_rows,
                              std::span<const int> train_labels,
                              std::span<const GbdtRow> val_rows, std::span<const int> val_labels,
                              int num_classes, const GbdtConfig &base, std::vector<int> depths,
                              std::vector<int> n_estimators) {
  if (depths.empty() || n_estimators.empty()) Fail(ErrorKind::kConfig, "gbdt grid is empty");
  if (val_rows.size() != val_labels.size() || val_rows.empty()) {
    Fail(ErrorKind::kData, "gbdt grid: validation rows and labels must be non-empty and aligned");
  }
  const int max_rounds = *std::max_element(n_estimators.begin(), n_estimators.end());
  GbdtGridResult out;
  std::optional<GbdtModel> best_full;
  for (int depth : depths) {
    GbdtConfig cfg = base;
    cfg.max_depth = depth;
    cfg.n_estimators = max_rounds;
    GbdtModel full = FitGbdt(train_rows, train_labels, num_classes, cfg);

    // Running val scores, advanced one round at a time.
    const size_t k = static_cast<size_t>(num_classes);
    std::vector<double> z(val_rows.size() * k);
    for (size_t i = 0; i < val_rows.size(); ++i) {
      std::copy(full.base_scores.begin(), full.base_scores.end(), z.begin() + i * k);
    }
    std::vector<double> acc_at(static_cast<size_t>(max_rounds) + 1, 0.0);
    auto accuracy = [&]() {
      size_t correct = 0;
      for (size_t i = 0; i < val_rows.size(); ++i) {
        auto first = z.begin() + static_cast<std::ptrdiff_t>(i * k);
        const auto pred = std::max_element(first, first + static_cast<std::ptrdiff_t>(k)) - first;
        if (pred == val_labels[i]) ++correct;
      }
      return static_cast<double>(correct) / static_cast<double>(val_rows.size());
    };
    acc_at[0] = accuracy();
    for (size_t r = 0; r < full.rounds.size(); ++r) {
      for (size_t i = 0; i < val_rows.size(); ++i) {
        for (size_t c = 0; c < k; ++c) {
          z[i * k + c] += full.config.shrinkage * full.rounds[r][c].Predict(val_rows[i]);
        }
      }
      acc_at[r + 1] = accuracy();
    }

    for (int n : n_estimators) {
      GbdtGridPoint p{depth, n, acc_at[static_cast<size_t>(n)]};
      bool better = !best_full;
      if (!better) {
        const auto &b = out.points[out.best];
        better = p.val_accuracy > b.val_accuracy ||
                 (p.val_accuracy == b.val_accuracy &&
                  (p.n_estimators < b.n_estimators ||
                   (p.n_estimators == b.n_estimators && p.max_depth < b.max_depth)));
      }
      if (better) {
        out.best = out.points.size();
        best_full = full.Truncated(static_cast<size_t>(n));
      }
      out.points.push_back(p);
    }
  }
  out.model = std::move(*best_full);
  return out;
}

// ---------------------------------------------------------------------------

nlohmann::json GbdtToJson(const GbdtModel &m) {
  nlohmann::json rounds = nlohmann::json::array();
  for (const auto &round : m.rounds) {
    nlohmann::json trees = nlohmann::json::array();
    for (const auto &t : round) {
      nlohmann::json nodes = nlohmann::json::array();
      for (const auto &n : t.nodes) {
        if (n.feature < 0) {
          nodes.push_back({{"leaf", n.value}});
        } else {
          nodes.push_back({{"feature", n.feature},
                           {"threshold", n.threshold},
                           {"left", n.left},
                           {"right", n.right}});
        }
      }
      trees.push_back(nodes);
    }
    rounds.push_back(trees);
  }
  return {{"format", "wdjudge-gbdt"},
          {"version", 1},
          {"num_classes", m.num_classes},
          {"config", GbdtConfigToJson(m.config)},
          {"base_scores", m.base_scores},
          {"rounds", rounds}};
}

GbdtModel GbdtFromJson(const nlohmann::json &j) {
  GbdtModel m;
  try {
    if (j.value("format", "") != "wdjudge-gbdt") {
      Fail(ErrorKind::kUnsupportedFormat, "not a wdjudge GBDT model");
    }
    if (j.at("version").get<int>() != 1) {
      Fail(ErrorKind::kUnsupportedFormat, "unsupported GBDT model version");
    }
    m.num_classes = j.at("num_classes").get<int>();
    m.config = GbdtConfigFromJson(j.at("config"));
    m.base_scores = j.at("base_scores").get<std::vector<double>>();
    if (m.num_classes < 2 || m.base_scores.size() != static_cast<size_t>(m.num_classes)) {
      Fail(ErrorKind::kCorruption, "gbdt model: base_scores do not match num_classes");
    }
    for (const auto &round : j.at("rounds")) {
      std::vector<GbdtTree> trees;
      for (const auto &tj : round) {
        GbdtTree t;
        for (const auto &nj : tj) {
          GbdtNode n;
          if (nj.contains("leaf")) {
            n.value = nj.at("leaf").get<double>();
          } else {
            n.feature = nj.at("feature").get<int>();
            n.threshold = nj.at("threshold").get<double>();
            n.left = nj.at("left").get<int>();
            n.right = nj.at("right").get<int>();
          }
          t.nodes.push_back(n);
        }
        const int size = static_cast<int>(t.nodes.size());
        if (size == 0) Fail(ErrorKind::kCorruption, "gbdt model: empty tree");
        for (int i = 0; i < size; ++i) {
          const auto &n = t.nodes[static_cast<size_t>(i)];
          if (n.feature < 0) continue;
          if (n.feature >= static_cast<int>(kNumFeatures) || n.left <= i || n.right <= i ||
              n.left >= size || n.right >= size) {
            Fail(ErrorKind::kCorruption, "gbdt model: malformed tree node");
          }
        }
        trees.push_back(std::move(t));
      }
      if (trees.size() != static_cast<size_t>(m.num_classes)) {
        Fail(ErrorKind::kCorruption, "gbdt model: round does not hold one tree per class");
      }
      m.rounds.push_back(std::move(trees));
    }
  } catch (const nlohmann::json::exception &e) {
    Fail(ErrorKind::kCorruption, std::string("gbdt model: ") + e.what());
  }
  return m;
}

void SaveGbdt(const GbdtModel &m, const std::filesystem::path &path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) Fail(ErrorKind::kIo, "cannot write " + path.string());
  out << GbdtToJson(m).dump() << "\n";
  if (!out) Fail(ErrorKind::kIo, "write failed: " + path.string());
}

GbdtModel LoadGbdt(const std::filesystem::path &path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) Fail(ErrorKind::kIo, "cannot open " + path.string());
  const std::string text((std::istreambuf_iterator<char>(in)), {});
  const size_t first = text.find_first_not_of(" \t\r\n");
  if (first == std::string::npos || text[first] != '{') {
    Fail(ErrorKind::kUnsupportedFormat, path.string() + " is not a checkpoint");
  }
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception &e) {
    Fail(ErrorKind::kCorruption, "gbdt model " + path.string() + ": " + e.what());
  }
  return GbdtFromJson(j);
}

}  // namespace wdj
