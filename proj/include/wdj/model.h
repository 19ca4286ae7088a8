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

// Wide & Deep mastery classifier.
//
//   wide:  x_wide = standardize(x_c) ++ (x_d W)          [13 + proj_dim]
//          logits_wide = A2(relu(A1(x_wide)))
//   deep:  E = embed(utterances)                          [n x (d_e + 2)]
//          Q = attention(bilstm(E)); x_deep = mean_rows(Q) [2H]
//          logits_deep = A4(relu(A3(relu(A2(relu(A1(x_deep)))))))
//   fused: probs = softmax(logits_wide + logits_deep)
//
// WideOnly and DeepOnly use a single head. All parameters exist in every
// mode; heads that a mode does not use are simply never read or updated.

#ifndef WDJ_MODEL_H_
#define WDJ_MODEL_H_

#include <array>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <memory>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"
#include "wdj/corpus.h"
#include "wdj/embedder.h"
#include "wdj/nn.h"
#include "wdj/wide_features.h"

namespace wdj {

enum class ModelMode { kWideOnly, kDeepOnly, kWideDeep };

std::string_view ModelModeName(ModelMode m);  // "wide", "deep", "wd"
ModelMode ParseModelMode(std::string_view name);

struct WideDeepConfig {
  int num_classes = 2;
  int proj_dim = 64;
  int wide_hidden = 64;
  EmbedderSpec embedder;
  int lstm_hidden = 64;
  std::array<int, 3> deep_hidden = {128, 64, 32};
  ModelMode mode = ModelMode::kWideDeep;
  std::string activation = "relu";
  FeatureCatalog catalog = FeatureCatalog::Default();

  void Validate() const;
  size_t wide_input_dim() const { return kNumContinuous + static_cast<size_t>(proj_dim); }
  size_t attention_dim() const { return 2 * static_cast<size_t>(lstm_hidden); }
};

nlohmann::json ModelConfigToJson(const WideDeepConfig &c);
// Applies keys present in `j` on top of `base`.
WideDeepConfig ModelConfigFromJson(const nlohmann::json &j, WideDeepConfig base = {});

// Train-split z-scoring of x_c. A zero-variance feature maps to 0.
struct Standardizer {
  std::array<double, kNumContinuous> mean{};
  std::array<double, kNumContinuous> stddev{};

  static Standardizer Identity();
  static Standardizer Fit(const std::vector<WideFeatures> &train);
  std::array<double, kNumContinuous> Apply(const std::array<double, kNumContinuous> &x) const;
  bool operator==(const Standardizer &) const = default;
};

struct WideDeepParams {
  Tensor projection;  // [one-hot width x proj_dim]
  std::array<nn::Affine, 2> wide;
  nn::Lstm lstm_fwd, lstm_bwd;
  nn::Attention attention;
  std::array<nn::Affine, 4> deep;

  // Declared order; shared by initialization, optimizer and checkpoints.
  void ForEach(const std::function<void(const std::string &, Tensor &)> &fn);
  void ForEach(const std::function<void(const std::string &, const Tensor &)> &fn) const;
  std::vector<Tensor *> All();
  void ZeroGrad();
};

class WideDeepModel {
 public:
  // Fresh seeded model with an identity standardizer.
  static WideDeepModel Init(const WideDeepConfig &config, uint64_t seed);

  const WideDeepConfig &config() const { return config_; }
  WideDeepConfig &mutable_config() { return config_; }
  WideDeepParams &params() { return params_; }
  const WideDeepParams &params() const { return params_; }
  const Standardizer &standardizer() const { return standardizer_; }
  void set_standardizer(const Standardizer &s) { standardizer_ = s; }
  uint64_t seed() const { return seed_; }
  const SentenceEmbedder &embedder() const;

 private:
  WideDeepConfig config_;
  WideDeepParams params_;
  Standardizer standardizer_;
  uint64_t seed_ = 0;
  mutable std::shared_ptr<SentenceEmbedder> embedder_;
};

// One sample reduced to what the heads consume.
struct ModelInput {
  std::array<double, kNumContinuous> continuous{};  // standardized
  std::vector<size_t> hot;                          // one-hot indices into x_d
  Tensor sequence;                                  // [n x (d_e + 2)], may be empty
  int label = 0;
};

// Builds the input for the heads the model's mode uses.
ModelInput PrepareInput(const QuestionSample &sample, const WideDeepModel &model);
ModelInput PrepareInput(const QuestionSample &sample, const WideFeatures &wf,
                        const WideDeepModel &model);

struct ForwardTape {
  // wide head
  Tensor wide_in, wide_hidden;
  // deep head
  nn::BiLstmTape lstm;
  Tensor lstm_out;
  nn::AttentionTape attention;
  Tensor attended, pooled;
  std::array<Tensor, 3> deep_hidden;
};

Tensor WideHeadForward(const ModelInput &in, const WideDeepParams &p,
                       ForwardTape *tape = nullptr);
Tensor DeepHeadForward(const ModelInput &in, const WideDeepParams &p,
                       ForwardTape *tape = nullptr);
// Pre-softmax logits [K] for the model's mode.
Tensor FusedLogits(const ModelInput &in, const WideDeepModel &model,
                   ForwardTape *tape = nullptr);
// Accumulates parameter gradients for d loss / d logits.
void FusedBackward(const ModelInput &in, const ForwardTape &tape, WideDeepModel &model,
                   const Tensor &grad_logits);

// Head logits from raw features / samples (checks compatibility).
std::vector<double> WideForward(const WideFeatures &wf, const WideDeepModel &model);
std::vector<double> DeepForward(const QuestionSample &sample, const WideDeepModel &model);

// Class probabilities. Pass nullptr for an input the mode does not need;
// a needed input that is missing raises kConfig.
std::vector<double> FusePredict(const QuestionSample *sample, const WideFeatures *wf,
                                const WideDeepModel &model);
std::vector<double> Predict(const QuestionSample &sample, const WideDeepModel &model);

// Checkpoint: "WDJM", u16 version, u64 length + canonical config JSON,
// u32 blob count, then per blob u64 element count + little-endian f64s.
inline constexpr uint16_t kCheckpointVersion = 1;
std::string SerializeModel(const WideDeepModel &model);
WideDeepModel DeserializeModel(std::string_view bytes);
void SaveModel(const WideDeepModel &model, const std::filesystem::path &path);
WideDeepModel LoadModel(const std::filesystem::path &path);

}  // namespace wdj

#endif  // WDJ_MODEL_H_
