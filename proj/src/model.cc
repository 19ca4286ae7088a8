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

#include "wdj/model.h"

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <sstream>

#include "wdj/error.h"
#include "wdj/rng.h"

namespace wdj {

namespace {

constexpr char kMagic[4] = {'W', 'D', 'J', 'M'};

size_t CheckedDim(int v, const char *name) {
  if (v <= 0) Fail(ErrorKind::kConfig, std::string("model config: ") + name + " must be positive");
  return static_cast<size_t>(v);
}

}  // namespace

std::string_view ModelModeName(ModelMode m) {
  switch (m) {
    case ModelMode::kWideOnly: return "wide";
    case ModelMode::kDeepOnly: return "deep";
    case ModelMode::kWideDeep: return "wd";
  }
  return "wd";
}

ModelMode ParseModelMode(std::string_view name) {
  if (name == "wide" || name == "wide_only") return ModelMode::kWideOnly;
  if (name == "deep" || name == "deep_only") return ModelMode::kDeepOnly;
  if (name == "wd" || name == "wide_deep") return ModelMode::kWideDeep;
  Fail(ErrorKind::kConfig, "unknown model mode '" + std::string(name) + "'");
}

void WideDeepConfig::Validate() const {
  if (num_classes < 2) Fail(ErrorKind::kConfig, "model config: num_classes must be >= 2");
  CheckedDim(proj_dim, "proj_dim");
  CheckedDim(wide_hidden, "wide_hidden");
  CheckedDim(lstm_hidden, "lstm_hidden");
  for (int h : deep_hidden) CheckedDim(h, "deep_hidden");
  if (activation != "relu") {
    Fail(ErrorKind::kConfig, "model config: unsupported activation '" + activation + "'");
  }
  embedder.Validate();
  catalog.Validate();
}

nlohmann::json ModelConfigToJson(const WideDeepConfig &c) {
  nlohmann::json j;
  j["num_classes"] = c.num_classes;
  j["proj_dim"] = c.proj_dim;
  j["wide_hidden"] = c.wide_hidden;
  j["embedder"] = EmbedderSpecToJson(c.embedder);
  j["lstm_hidden"] = c.lstm_hidden;
  j["deep_hidden"] = c.deep_hidden;
  j["mode"] = ModelModeName(c.mode);
  j["activation"] = c.activation;
  j["catalog"] = CatalogToJson(c.catalog);
  return j;
}

WideDeepConfig ModelConfigFromJson(const nlohmann::json &j, WideDeepConfig c) {
  if (!j.is_object()) Fail(ErrorKind::kConfig, "model config must be a JSON object");
  try {
    if (j.contains("num_classes")) c.num_classes = j.at("num_classes").get<int>();
    if (j.contains("proj_dim")) c.proj_dim = j.at("proj_dim").get<int>();
    if (j.contains("wide_hidden")) c.wide_hidden = j.at("wide_hidden").get<int>();
    if (j.contains("embedder")) c.embedder = EmbedderSpecFromJson(j.at("embedder"));
    if (j.contains("lstm_hidden")) c.lstm_hidden = j.at("lstm_hidden").get<int>();
    if (j.contains("deep_hidden")) {
      const auto &d = j.at("deep_hidden");
      if (!d.is_array() || d.size() != 3) {
        Fail(ErrorKind::kConfig, "model config: deep_hidden needs exactly 3 widths");
      }
      for (size_t i = 0; i < 3; ++i) c.deep_hidden[i] = d[i].get<int>();
    }
    if (j.contains("mode")) c.mode = ParseModelMode(j.at("mode").get<std::string>());
    if (j.contains("activation")) c.activation = j.at("activation").get<std::string>();
    if (j.contains("catalog")) c.catalog = CatalogFromJson(j.at("catalog"));
  } catch (const nlohmann::json::exception &e) {
    Fail(ErrorKind::kConfig, std::string("model config: ") + e.what());
  }
  c.Validate();
  return c;
}

// ---------------------------------------------------------------------------

Standardizer Standardizer::Identity() {
  Standardizer s;
  s.mean.fill(0.0);
  s.stddev.fill(1.0);
  return s;
}

Standardizer Standardizer::Fit(const std::vector<WideFeatures> &train) {
  if (train.empty()) Fail(ErrorKind::kEmptyDataset, "standardizer: no training rows");
  Standardizer s;
  const double n = static_cast<double>(train.size());
  for (size_t f = 0; f < kNumContinuous; ++f) {
    double sum = 0.0;
    for (const auto &wf : train) sum += wf.continuous[f];
    const double mean = sum / n;
    double ss = 0.0;
    for (const auto &wf : train) {
      const double d = wf.continuous[f] - mean;
      ss += d * d;
    }
    s.mean[f] = mean;
    s.stddev[f] = std::sqrt(ss / n);
  }
  return s;
}

std::array<double, kNumContinuous> Standardizer::Apply(
    const std::array<double, kNumContinuous> &x) const {
  std::array<double, kNumContinuous> out{};
  for (size_t f = 0; f < kNumContinuous; ++f) {
    out[f] = stddev[f] > 0.0 ? (x[f] - mean[f]) / stddev[f] : 0.0;
  }
  return out;
}

// ---------------------------------------------------------------------------

void WideDeepParams::ForEach(const std::function<void(const std::string &, Tensor &)> &fn) {
  fn("projection", projection);
  for (size_t i = 0; i < wide.size(); ++i) {
    fn("wide." + std::to_string(i) + ".w", wide[i].w);
    fn("wide." + std::to_string(i) + ".b", wide[i].b);
  }
  for (auto [name, l] : {std::pair<const char *, nn::Lstm *>{"lstm_fwd", &lstm_fwd},
                         {"lstm_bwd", &lstm_bwd}}) {
    fn(std::string(name) + ".wx", l->wx);
    fn(std::string(name) + ".wh", l->wh);
    fn(std::string(name) + ".b", l->b);
  }
  fn("attention.wq", attention.wq);
  fn("attention.wk", attention.wk);
  fn("attention.wv", attention.wv);
  for (size_t i = 0; i < deep.size(); ++i) {
    fn("deep." + std::to_string(i) + ".w", deep[i].w);
    fn("deep." + std::to_string(i) + ".b", deep[i].b);
  }
}

void WideDeepParams::ForEach(
    const std::function<void(const std::string &, const Tensor &)> &fn) const {
  const_cast<WideDeepParams *>(this)->ForEach(
      [&](const std::string &name, Tensor &t) { fn(name, t); });
}

std::vector<Tensor *> WideDeepParams::All() {
  std::vector<Tensor *> out;
  ForEach([&](const std::string &, Tensor &t) { out.push_back(&t); });
  return out;
}

void WideDeepParams::ZeroGrad() {
  ForEach([](const std::string &, Tensor &t) { t.ZeroGrad(); });
}

WideDeepModel WideDeepModel::Init(const WideDeepConfig &config, uint64_t seed) {
  config.Validate();
  WideDeepModel m;
  m.config_ = config;
  m.seed_ = seed;
  m.standardizer_ = Standardizer::Identity();
  Rng rng(seed);
  const size_t k = static_cast<size_t>(config.num_classes);
  const size_t h = static_cast<size_t>(config.lstm_hidden);
  const size_t d = config.attention_dim();
  const size_t d_in = static_cast<size_t>(config.embedder.dim) + 2;
  auto &p = m.params_;
  p.projection = Tensor::FanInUniform(config.catalog.OneHotWidth(),
                                      static_cast<size_t>(config.proj_dim), rng);
  p.wide[0] = nn::Affine::Init(config.wide_input_dim(),
                               static_cast<size_t>(config.wide_hidden), rng);
  p.wide[1] = nn::Affine::Init(static_cast<size_t>(config.wide_hidden), k, rng);
  p.lstm_fwd = nn::Lstm::Init(d_in, h, rng);
  p.lstm_bwd = nn::Lstm::Init(d_in, h, rng);
  p.attention = nn::Attention::Init(d, rng);
  size_t prev = d;
  for (size_t i = 0; i < 3; ++i) {
    const size_t next = static_cast<size_t>(config.deep_hidden[i]);
    p.deep[i] = nn::Affine::Init(prev, next, rng);
    prev = next;
  }
  p.deep[3] = nn::Affine::Init(prev, k, rng);
  return m;
}

const SentenceEmbedder &WideDeepModel::embedder() const {
  if (!embedder_) embedder_ = std::make_shared<SentenceEmbedder>(config_.embedder);
  return *embedder_;
}

// ---------------------------------------------------------------------------

ModelInput PrepareInput(const QuestionSample &sample, const WideDeepModel &model) {
  if (model.config().mode == ModelMode::kDeepOnly) {
    ModelInput in;
    in.label = sample.label;
    in.sequence = model.embedder().EmbedSample(sample);
    return in;
  }
  return PrepareInput(sample, ExtractWide(sample, model.config().catalog), model);
}

ModelInput PrepareInput(const QuestionSample &sample, const WideFeatures &wf,
                        const WideDeepModel &model) {
  ModelInput in;
  in.label = sample.label;
  const ModelMode mode = model.config().mode;
  if (mode != ModelMode::kDeepOnly) {
    const size_t width = model.config().catalog.OneHotWidth();
    if (wf.one_hot.size() != width) {
      Fail(ErrorKind::kCompatibility,
           "wide features have one-hot width " + std::to_string(wf.one_hot.size()) +
               " but the model expects " + std::to_string(width));
    }
    in.continuous = model.standardizer().Apply(wf.continuous);
    in.hot = wf.HotIndices();
  }
  if (mode != ModelMode::kWideOnly) in.sequence = model.embedder().EmbedSample(sample);
  return in;
}

Tensor WideHeadForward(const ModelInput &in, const WideDeepParams &p, ForwardTape *tape) {
  Tensor proj = nn::ProjectOneHot(in.hot, p.projection);
  Tensor x = Tensor::Zeros(kNumContinuous + proj.size());
  std::copy(in.continuous.begin(), in.continuous.end(), x.data());
  std::copy(proj.data(), proj.data() + proj.size(), x.data() + kNumContinuous);
  Tensor hidden = nn::Relu(nn::AffineForward(x, p.wide[0]));
  Tensor logits = nn::AffineForward(hidden, p.wide[1]);
  if (tape) {
    tape->wide_in = std::move(x);
    tape->wide_hidden = std::move(hidden);
  }
  return logits;
}

Tensor DeepHeadForward(const ModelInput &in, const WideDeepParams &p, ForwardTape *tape) {
  if (in.sequence.rows() == 0 || in.sequence.empty()) {
    Fail(ErrorKind::kEmptySequence, "deep head: sample has no utterances");
  }
  nn::BiLstmTape lstm_tape;
  nn::AttentionTape att_tape;
  Tensor lstm_out = nn::BiLstmForward(in.sequence, p.lstm_fwd, p.lstm_bwd,
                                      tape ? &lstm_tape : nullptr);
  Tensor attended = nn::AttentionForward(lstm_out, p.attention, tape ? &att_tape : nullptr);
  Tensor pooled = nn::MeanPool(attended);
  std::array<Tensor, 3> hidden;
  const Tensor *x = &pooled;
  for (size_t i = 0; i < 3; ++i) {
    hidden[i] = nn::Relu(nn::AffineForward(*x, p.deep[i]));
    x = &hidden[i];
  }
  Tensor logits = nn::AffineForward(*x, p.deep[3]);
  if (tape) {
    tape->lstm = std::move(lstm_tape);
    tape->lstm_out = std::move(lstm_out);
    tape->attention = std::move(att_tape);
    tape->attended = std::move(attended);
    tape->pooled = std::move(pooled);
    tape->deep_hidden = std::move(hidden);
  }
  return logits;
}

Tensor FusedLogits(const ModelInput &in, const WideDeepModel &model, ForwardTape *tape) {
  switch (model.config().mode) {
    case ModelMode::kWideOnly: return WideHeadForward(in, model.params(), tape);
    case ModelMode::kDeepOnly: return DeepHeadForward(in, model.params(), tape);
    case ModelMode::kWideDeep: break;
  }
  Tensor logits = WideHeadForward(in, model.params(), tape);
  Tensor deep = DeepHeadForward(in, model.params(), tape);
  for (size_t c = 0; c < logits.size(); ++c) logits[c] += deep[c];
  return logits;
}

namespace {

void WideBackward(const ModelInput &in, const ForwardTape &tape, WideDeepParams &p,
                  const Tensor &grad_logits) {
  Tensor g = nn::AffineBackward(tape.wide_hidden, p.wide[1], grad_logits);
  g = nn::ReluBackward(tape.wide_hidden, g);
  g = nn::AffineBackward(tape.wide_in, p.wide[0], g);
  nn::ProjectOneHotBackward(in.hot, p.projection, g.values().subspan(kNumContinuous));
}

void DeepBackward(const ModelInput &in, const ForwardTape &tape, WideDeepParams &p,
                  const Tensor &grad_logits) {
  Tensor g = nn::AffineBackward(tape.deep_hidden[2], p.deep[3], grad_logits);
  for (size_t i = 3; i-- > 0;) {
    g = nn::ReluBackward(tape.deep_hidden[i], g);
    g = nn::AffineBackward(i == 0 ? tape.pooled : tape.deep_hidden[i - 1], p.deep[i], g);
  }
  g = nn::MeanPoolBackward(tape.attended.rows(), g);
  g = nn::AttentionBackward(tape.lstm_out, tape.attention, p.attention, g);
  nn::BiLstmBackward(in.sequence, tape.lstm, p.lstm_fwd, p.lstm_bwd, g, false);
}

}  // namespace

void FusedBackward(const ModelInput &in, const ForwardTape &tape, WideDeepModel &model,
                   const Tensor &grad_logits) {
  const ModelMode mode = model.config().mode;
  if (mode != ModelMode::kDeepOnly) WideBackward(in, tape, model.params(), grad_logits);
  if (mode != ModelMode::kWideOnly) DeepBackward(in, tape, model.params(), grad_logits);
}

// ---------------------------------------------------------------------------

std::vector<double> WideForward(const WideFeatures &wf, const WideDeepModel &model) {
  const size_t width = model.config().catalog.OneHotWidth();
  if (wf.one_hot.size() != width) {
    Fail(ErrorKind::kCompatibility,
         "wide features have one-hot width " + std::to_string(wf.one_hot.size()) +
             " but the model expects " + std::to_string(width));
  }
  ModelInput in;
  in.continuous = model.standardizer().Apply(wf.continuous);
  in.hot = wf.HotIndices();
  Tensor logits = WideHeadForward(in, model.params());
  return {logits.values().begin(), logits.values().end()};
}

std::vector<double> DeepForward(const QuestionSample &sample, const WideDeepModel &model) {
  ModelInput in;
  in.sequence = model.embedder().EmbedSample(sample);
  Tensor logits = DeepHeadForward(in, model.params());
  return {logits.values().begin(), logits.values().end()};
}

std::vector<double> FusePredict(const QuestionSample *sample, const WideFeatures *wf,
                                const WideDeepModel &model) {
  const ModelMode mode = model.config().mode;
  const bool need_wide = mode != ModelMode::kDeepOnly;
  const bool need_deep = mode != ModelMode::kWideOnly;
  if (need_wide && wf == nullptr) {
    Fail(ErrorKind::kConfig, std::string("mode '") + std::string(ModelModeName(mode)) +
                                 "' requires wide features");
  }
  if (need_deep && sample == nullptr) {
    Fail(ErrorKind::kConfig, std::string("mode '") + std::string(ModelModeName(mode)) +
                                 "' requires the utterance sequence");
  }
  Tensor logits = Tensor::Zeros(static_cast<size_t>(model.config().num_classes));
  if (need_wide) {
    auto w = WideForward(*wf, model);
    for (size_t c = 0; c < w.size(); ++c) logits[c] += w[c];
  }
  if (need_deep) {
    auto d = DeepForward(*sample, model);
    for (size_t c = 0; c < d.size(); ++c) logits[c] += d[c];
  }
  Tensor p = nn::Softmax(logits);
  return {p.values().begin(), p.values().end()};
}

std::vector<double> Predict(const QuestionSample &sample, const WideDeepModel &model) {
  if (model.config().mode == ModelMode::kDeepOnly) return FusePredict(&sample, nullptr, model);
  WideFeatures wf = ExtractWide(sample, model.config().catalog);
  return FusePredict(&sample, &wf, model);
}

// ---------------------------------------------------------------------------
// Checkpoints.

namespace {

template <typename T>
void PutLe(std::string &out, T v) {
  for (size_t i = 0; i < sizeof(T); ++i) {
    out.push_back(static_cast<char>((static_cast<uint64_t>(v) >> (8 * i)) & 0xff));
  }
}

class Reader {
 public:
  explicit Reader(std::string_view bytes) : bytes_(bytes) {}

  template <typename T>
  T Get(const char *what) {
    Need(sizeof(T), what);
    uint64_t v = 0;
    for (size_t i = 0; i < sizeof(T); ++i) {
      v |= static_cast<uint64_t>(static_cast<unsigned char>(bytes_[pos_ + i])) << (8 * i);
    }
    pos_ += sizeof(T);
    return static_cast<T>(v);
  }

  std::string_view Take(size_t n, const char *what) {
    Need(n, what);
    auto s = bytes_.substr(pos_, n);
    pos_ += n;
    return s;
  }

  size_t remaining() const { return bytes_.size() - pos_; }

 private:
  void Need(size_t n, const char *what) {
    if (remaining() < n) {
      Fail(ErrorKind::kCorruption, std::string("checkpoint truncated while reading ") + what);
    }
  }

  std::string_view bytes_;
  size_t pos_ = 0;
};

void PutBlob(std::string &out, std::span<const double> values) {
  PutLe<uint64_t>(out, values.size());
  for (double v : values) PutLe<uint64_t>(out, std::bit_cast<uint64_t>(v));
}

void GetBlob(Reader &r, std::span<double> dst, const std::string &name) {
  const uint64_t n = r.Get<uint64_t>("blob length");
  if (n != dst.size()) {
    Fail(ErrorKind::kCorruption, "checkpoint blob '" + name + "' has " + std::to_string(n) +
                                     " values, config implies " + std::to_string(dst.size()));
  }
  for (double &v : dst) v = std::bit_cast<double>(r.Get<uint64_t>("blob values"));
}

constexpr uint32_t kStandardizerBlobs = 2;

}  // namespace

std::string SerializeModel(const WideDeepModel &model) {
  nlohmann::json header;
  header["config"] = ModelConfigToJson(model.config());
  header["seed"] = model.seed();
  nlohmann::json layout = nlohmann::json::array();
  model.params().ForEach([&](const std::string &name, const Tensor &t) {
    layout.push_back({{"name", name}, {"shape", t.shape()}});
  });
  header["params"] = layout;
  const std::string config = header.dump();

  std::string out(kMagic, sizeof(kMagic));
  PutLe<uint16_t>(out, kCheckpointVersion);
  PutLe<uint64_t>(out, config.size());
  out += config;
  PutLe<uint32_t>(out, kStandardizerBlobs + static_cast<uint32_t>(layout.size()));
  PutBlob(out, model.standardizer().mean);
  PutBlob(out, model.standardizer().stddev);
  model.params().ForEach(
      [&](const std::string &, const Tensor &t) { PutBlob(out, t.values()); });
  return out;
}

WideDeepModel DeserializeModel(std::string_view bytes) {
  if (bytes.size() < sizeof(kMagic) || std::memcmp(bytes.data(), kMagic, sizeof(kMagic)) != 0) {
    Fail(ErrorKind::kUnsupportedFormat, "not a wdjudge model checkpoint (bad magic)");
  }
  Reader r(bytes.substr(sizeof(kMagic)));
  const auto version = r.Get<uint16_t>("version");
  if (version != kCheckpointVersion) {
    Fail(ErrorKind::kUnsupportedFormat,
         "unsupported checkpoint version " + std::to_string(version));
  }
  const auto config_len = r.Get<uint64_t>("config length");
  if (config_len > r.remaining()) Fail(ErrorKind::kCorruption, "checkpoint truncated in config");
  const auto config_text = r.Take(config_len, "config");
  nlohmann::json header;
  try {
    header = nlohmann::json::parse(config_text);
  } catch (const nlohmann::json::exception &e) {
    Fail(ErrorKind::kCorruption, std::string("checkpoint config is not JSON: ") + e.what());
  }
  WideDeepModel model;
  try {
    model = WideDeepModel::Init(ModelConfigFromJson(header.at("config")),
                                header.at("seed").get<uint64_t>());
  } catch (const nlohmann::json::exception &e) {
    Fail(ErrorKind::kCorruption, std::string("checkpoint config: ") + e.what());
  }
  const auto blobs = r.Get<uint32_t>("blob count");
  const auto params = model.params().All();
  if (blobs != kStandardizerBlobs + params.size()) {
    Fail(ErrorKind::kCorruption, "checkpoint has " + std::to_string(blobs) +
                                     " blobs, config implies " +
                                     std::to_string(kStandardizerBlobs + params.size()));
  }
  Standardizer s;
  GetBlob(r, s.mean, "standardizer.mean");
  GetBlob(r, s.stddev, "standardizer.stddev");
  model.set_standardizer(s);
  model.params().ForEach(
      [&](const std::string &name, Tensor &t) { GetBlob(r, t.values(), name); });
  if (r.remaining() != 0) {
    Fail(ErrorKind::kCorruption,
         "checkpoint has " + std::to_string(r.remaining()) + " trailing bytes");
  }
  return model;
}

void SaveModel(const WideDeepModel &model, const std::filesystem::path &path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) Fail(ErrorKind::kIo, "cannot write " + path.string());
  const std::string bytes = SerializeModel(model);
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) Fail(ErrorKind::kIo, "write failed: " + path.string());
}

WideDeepModel LoadModel(const std::filesystem::path &path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) Fail(ErrorKind::kIo, "cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return DeserializeModel(ss.str());
}

}  // namespace wdj
