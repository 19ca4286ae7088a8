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

#include "wdj/corpus.h"

#include <algorithm>
#include <array>
#include <cstdio>
#include <cmath>
#include <fstream>
#include <istream>
#include <numeric>
#include <ostream>
#include <set>
#include <sstream>

#include "wdj/error.h"
#include "wdj/rng.h"
#include "wdj/text.h"

namespace wdj {

using nlohmann::json;
using nlohmann::ordered_json;

std::string_view SpeakerName(Speaker s) {
  return s == Speaker::kTeacher ? "teacher" : "student";
}

std::string_view SplitTagName(SplitTag t) {
  switch (t) {
    case SplitTag::kTrain: return "train";
    case SplitTag::kVal: return "val";
    case SplitTag::kTest: return "test";
    case SplitTag::kUnsplit: return "unsplit";
  }
  return "unsplit";
}

bool UtteranceBefore(const Utterance &a, const Utterance &b) {
  if (a.start_s != b.start_s) return a.start_s < b.start_s;
  if (a.end_s != b.end_s) return a.end_s < b.end_s;
  if (a.speaker != b.speaker) return a.speaker < b.speaker;
  return a.text < b.text;
}

void SortByTime(std::vector<Utterance> &utterances) {
  std::stable_sort(utterances.begin(), utterances.end(), UtteranceBefore);
}

std::vector<int> Dataset::Labels() const {
  std::vector<int> out;
  out.reserve(samples.size());
  for (const auto &s : samples) out.push_back(s.label);
  return out;
}

std::vector<size_t> Dataset::ClassCounts() const {
  std::vector<size_t> counts(static_cast<size_t>(std::max(num_classes, 0)), 0);
  for (const auto &s : samples) {
    if (s.label >= 0 && s.label < num_classes) ++counts[s.label];
  }
  return counts;
}

// ---------------------------------------------------------------------------

namespace {

bool IsBlank(std::string_view text) {
  for (char32_t cp : DecodeUtf8(text)) {
    const bool ws = cp == ' ' || cp == '\t' || cp == '\n' || cp == '\r' ||
                    cp == '\f' || cp == '\v' || cp == 0xa0 || cp == 0x3000 ||
                    (cp >= 0x2000 && cp <= 0x200b);
    if (!ws) return false;
  }
  return true;
}

[[noreturn]] void Invalid(const std::string &sample_id, const std::string &what) {
  Fail(ErrorKind::kValidation, "sample '" + sample_id + "': " + what);
}

std::optional<std::string> OptionalString(const json &obj, const char *key) {
  auto it = obj.find(key);
  if (it == obj.end() || it->is_null()) return std::nullopt;
  if (it->is_string()) return it->get<std::string>();
  return it->dump();
}

QuestionSample SampleFromJson(const json &obj, size_t line_no,
                              const ParseOptions &options) {
  if (!obj.is_object()) {
    Fail(ErrorKind::kParse, "line " + std::to_string(line_no) + ": expected a JSON object");
  }
  auto id_it = obj.find("sample_id");
  if (id_it == obj.end() || !id_it->is_string()) {
    Fail(ErrorKind::kParse, "line " + std::to_string(line_no) +
                                ": missing string field 'sample_id'");
  }
  QuestionSample s;
  s.sample_id = id_it->get<std::string>();

  auto label_it = obj.find("label");
  if (label_it == obj.end() || !label_it->is_number_integer()) {
    Invalid(s.sample_id, "label must be an integer");
  }
  const int64_t label = label_it->get<int64_t>();
  if (label < 0 || label > 1'000'000) {
    Invalid(s.sample_id, "label " + std::to_string(label) + " is out of range");
  }
  s.label = static_cast<int>(label);
  s.grade = OptionalString(obj, "grade");
  s.class_id = OptionalString(obj, "class_id");

  auto utt_it = obj.find("utterances");
  if (utt_it == obj.end() || !utt_it->is_array() || utt_it->empty()) {
    Invalid(s.sample_id, "utterances must be a non-empty array");
  }
  bool all_timed = true;
  for (const json &u : *utt_it) {
    if (!u.is_object()) Invalid(s.sample_id, "utterance is not an object");
    Utterance utt;
    auto sp = u.find("speaker");
    if (sp == u.end() || !sp->is_string()) Invalid(s.sample_id, "utterance without speaker");
    const std::string tag = sp->get<std::string>();
    if (tag == "teacher") {
      utt.speaker = Speaker::kTeacher;
    } else if (tag == "student") {
      utt.speaker = Speaker::kStudent;
    } else {
      Invalid(s.sample_id, "unknown speaker tag '" + tag + "'");
    }
    auto tx = u.find("text");
    if (tx == u.end() || !tx->is_string()) Invalid(s.sample_id, "utterance without text");
    utt.text = tx->get<std::string>();
    auto st = u.find("start_s");
    auto en = u.find("end_s");
    const bool has_st = st != u.end() && !st->is_null();
    const bool has_en = en != u.end() && !en->is_null();
    if (has_st != has_en) Invalid(s.sample_id, "utterance has only one of start_s/end_s");
    if (has_st) {
      if (!st->is_number() || !en->is_number()) Invalid(s.sample_id, "timestamps must be numbers");
      utt.start_s = st->get<double>();
      utt.end_s = en->get<double>();
    } else {
      all_timed = false;
    }
    s.utterances.push_back(std::move(utt));
  }

  if (!all_timed) {
    // Token-proportional timeline in input order.
    double t = 0.0;
    for (auto &u : s.utterances) {
      const size_t tokens = std::max<size_t>(Tokenize(u.text).size(), 1);
      u.start_s = t;
      t += static_cast<double>(tokens) * options.seconds_per_token;
      u.end_s = t;
    }
    s.timing_estimated = true;
  } else if (auto te = obj.find("timing_estimated"); te != obj.end() && te->is_boolean()) {
    s.timing_estimated = te->get<bool>();
  }
  SortByTime(s.utterances);
  return s;
}

}  // namespace

void ValidateSample(const QuestionSample &s, int num_classes) {
  if (s.sample_id.empty()) Invalid(s.sample_id, "empty sample_id");
  if (s.utterances.empty()) Invalid(s.sample_id, "no utterances");
  if (s.label < 0 || s.label >= num_classes) {
    Invalid(s.sample_id, "label " + std::to_string(s.label) + " outside [0," +
                             std::to_string(num_classes) + ")");
  }
  bool has_teacher = false;
  for (size_t i = 0; i < s.utterances.size(); ++i) {
    const Utterance &u = s.utterances[i];
    if (!std::isfinite(u.start_s) || !std::isfinite(u.end_s) || u.start_s < 0.0) {
      Invalid(s.sample_id, "utterance " + std::to_string(i) + " has invalid start_s");
    }
    if (u.end_s < u.start_s) {
      Invalid(s.sample_id, "utterance " + std::to_string(i) + " ends before it starts");
    }
    if (IsBlank(u.text)) Invalid(s.sample_id, "utterance " + std::to_string(i) + " has empty text");
    if (i > 0 && s.utterances[i].start_s < s.utterances[i - 1].start_s) {
      Invalid(s.sample_id, "utterances not in time order");
    }
    has_teacher |= u.speaker == Speaker::kTeacher;
  }
  if (!has_teacher) Invalid(s.sample_id, "no teacher utterance");
}

Dataset ParseTranscripts(std::istream &in, const ParseOptions &options) {
  Dataset ds;
  std::string line;
  size_t line_no = 0;
  std::set<std::string> ids;
  int max_label = -1;
  while (std::getline(in, line)) {
    ++line_no;
    if (TrimWhitespace(line).empty()) continue;
    json obj;
    try {
      obj = json::parse(line);
    } catch (const json::parse_error &e) {
      Fail(ErrorKind::kParse, "line " + std::to_string(line_no) + ": " + e.what());
    }
    QuestionSample s = SampleFromJson(obj, line_no, options);
    if (!ids.insert(s.sample_id).second) Invalid(s.sample_id, "duplicate sample_id");
    max_label = std::max(max_label, s.label);
    ds.samples.push_back(std::move(s));
  }
  if (ds.samples.empty()) Fail(ErrorKind::kEmptyDataset, "no samples in transcript input");
  ds.num_classes = options.num_classes.value_or(std::max(max_label + 1, 2));
  if (ds.num_classes < 2) Fail(ErrorKind::kConfig, "num_classes must be at least 2");
  for (const auto &s : ds.samples) ValidateSample(s, ds.num_classes);
  return ds;
}

Dataset LoadTranscripts(const std::filesystem::path &path, const ParseOptions &options) {
  std::ifstream in(path);
  if (!in) Fail(ErrorKind::kIo, "cannot open " + path.string());
  return ParseTranscripts(in, options);
}

ordered_json SampleToJson(const QuestionSample &s) {
  ordered_json j;
  j["sample_id"] = s.sample_id;
  j["label"] = s.label;
  if (s.grade) j["grade"] = *s.grade;
  if (s.class_id) j["class_id"] = *s.class_id;
  if (s.timing_estimated) j["timing_estimated"] = true;
  ordered_json utts = ordered_json::array();
  for (const auto &u : s.utterances) {
    ordered_json ju;
    ju["speaker"] = SpeakerName(u.speaker);
    ju["text"] = u.text;
    ju["start_s"] = u.start_s;
    ju["end_s"] = u.end_s;
    utts.push_back(std::move(ju));
  }
  j["utterances"] = std::move(utts);
  return j;
}

void WriteTranscripts(const Dataset &ds, std::ostream &out) {
  for (const auto &s : ds.samples) out << SampleToJson(s).dump() << '\n';
}

void SaveTranscripts(const Dataset &ds, const std::filesystem::path &path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) Fail(ErrorKind::kIo, "cannot write " + path.string());
  WriteTranscripts(ds, out);
  if (!out) Fail(ErrorKind::kIo, "write failed for " + path.string());
}

// ---------------------------------------------------------------------------

namespace {

// Largest-remainder apportionment of `total` over `weights` (summing to 1).
std::vector<size_t> Apportion(size_t total, const std::vector<double> &weights) {
  std::vector<size_t> out(weights.size());
  std::vector<std::pair<double, size_t>> rem;
  size_t used = 0;
  for (size_t i = 0; i < weights.size(); ++i) {
    const double q = weights[i] * static_cast<double>(total);
    out[i] = static_cast<size_t>(std::floor(q));
    used += out[i];
    rem.emplace_back(q - std::floor(q), i);
  }
  std::stable_sort(rem.begin(), rem.end(),
                   [](const auto &a, const auto &b) { return a.first > b.first; });
  for (size_t k = 0; used < total; ++k, ++used) ++out[rem[k % rem.size()].second];
  return out;
}

}  // namespace

SplitResult SplitDataset(const Dataset &ds, const SplitRatios &ratios, uint64_t seed) {
  const std::vector<double> w = {ratios.train, ratios.val, ratios.test};
  for (double r : w) {
    if (!(r > 0.0)) Fail(ErrorKind::kConfig, "split ratios must be positive");
  }
  if (std::abs(w[0] + w[1] + w[2] - 1.0) > 1e-9) {
    Fail(ErrorKind::kConfig, "split ratios must sum to 1");
  }
  if (ds.size() < 3) Fail(ErrorKind::kData, "need at least 3 samples to split");

  SplitResult res;
  const int k_classes = ds.num_classes;
  std::vector<std::vector<size_t>> members(static_cast<size_t>(k_classes));
  for (size_t i = 0; i < ds.size(); ++i) members[ds.samples[i].label].push_back(i);

  Rng rng(seed);
  std::vector<int> assignment(ds.size(), 0);
  std::vector<size_t> eligible;
  for (int c = 0; c < k_classes; ++c) {
    auto &m = members[c];
    rng.Shuffle(std::span<size_t>(m));
    if (m.empty()) {
      res.warnings.push_back("class " + std::to_string(c) + " has no samples");
    } else if (m.size() < 3) {
      res.warnings.push_back("class " + std::to_string(c) + " has " +
                             std::to_string(m.size()) +
                             " samples; placed entirely in train");
    } else {
      eligible.push_back(static_cast<size_t>(c));
    }
  }

  // Per class floors, then hand out the leftovers so that split totals match
  // the global apportionment while every cell stays within one of its quota.
  size_t n_eligible = 0;
  for (size_t c : eligible) n_eligible += members[c].size();
  std::vector<size_t> target = Apportion(n_eligible, w);
  std::vector<std::array<size_t, 3>> alloc(eligible.size());
  std::vector<size_t> leftover(eligible.size());
  struct Cell {
    double rem;
    size_t ci, s;
  };
  std::vector<Cell> cells;
  std::array<size_t, 3> filled = {0, 0, 0};
  for (size_t ci = 0; ci < eligible.size(); ++ci) {
    const size_t n = members[eligible[ci]].size();
    size_t used = 0;
    for (size_t s = 0; s < 3; ++s) {
      const double q = w[s] * static_cast<double>(n);
      alloc[ci][s] = static_cast<size_t>(std::floor(q));
      used += alloc[ci][s];
      filled[s] += alloc[ci][s];
      cells.push_back({q - std::floor(q), ci, s});
    }
    leftover[ci] = n - used;
  }
  std::stable_sort(cells.begin(), cells.end(),
                   [](const Cell &a, const Cell &b) { return a.rem > b.rem; });
  for (const Cell &cell : cells) {
    if (leftover[cell.ci] > 0 && filled[cell.s] < target[cell.s]) {
      ++alloc[cell.ci][cell.s];
      ++filled[cell.s];
      --leftover[cell.ci];
    }
  }
  for (size_t ci = 0; ci < eligible.size(); ++ci) {
    // Only reachable when the greedy pass cannot meet every split total.
    alloc[ci][0] += leftover[ci];
  }

  for (size_t ci = 0; ci < eligible.size(); ++ci) {
    const auto &m = members[eligible[ci]];
    size_t pos = 0;
    for (int s = 0; s < 3; ++s) {
      for (size_t k = 0; k < alloc[ci][s]; ++k) assignment[m[pos++]] = s;
    }
  }

  Dataset *outs[3] = {&res.train, &res.val, &res.test};
  const SplitTag tags[3] = {SplitTag::kTrain, SplitTag::kVal, SplitTag::kTest};
  for (int s = 0; s < 3; ++s) {
    outs[s]->num_classes = ds.num_classes;
    outs[s]->split_tag = tags[s];
  }
  for (size_t i = 0; i < ds.size(); ++i) outs[assignment[i]]->samples.push_back(ds.samples[i]);
  return res;
}

// ---------------------------------------------------------------------------
// Synthetic generation.

namespace {

double NormalCdf(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

constexpr int kQuadraturePoints = 1601;
constexpr double kQuadratureLimit = 8.0;

int RoundHalfAway(double x) {
  return static_cast<int>(x < 0 ? -std::floor(-x + 0.5) : std::floor(x + 0.5));
}

void CheckConfig(const SynthConfig &c) {
  auto bad = [](const std::string &m) { Fail(ErrorKind::kConfig, "synthetic config: " + m); };
  if (c.num_classes < 2) bad("num_classes must be at least 2");
  if (c.n_samples < c.num_classes) bad("n_samples must be at least num_classes");
  if (c.wide_strength < 0 || c.wide_strength > 1) bad("wide_strength outside [0,1]");
  if (c.text_strength < 0 || c.text_strength > 1) bad("text_strength outside [0,1]");
  if (!(c.noise > 0)) bad("noise must be positive");
  if (c.coupling < 0 || c.coupling >= 1) bad("coupling outside [0,1)");
  if (!(c.text_scale > 0)) bad("text_scale must be positive");
  if (c.exchanges < 1) bad("exchanges must be at least 1");
  if (!(c.latency_base > 0)) bad("latency_base must be positive");
  if (c.oracle_draws < 0) bad("oracle_draws must be non-negative");
  const auto &v = c.vocab;
  if (v.teacher_words.empty() || v.student_words.empty()) bad("empty vocab");
  if (v.positive_cues.size() < static_cast<size_t>(c.exchanges) ||
      v.negative_cues.size() < static_cast<size_t>(c.exchanges)) {
    bad("each cue list needs at least `exchanges` distinct entries");
  }
}

std::string JoinWords(const std::vector<std::string> &words) {
  std::string out;
  for (const auto &w : words) {
    // Latin words keep a space between them; CJK runs are written solid.
    if (!out.empty()) {
      const char32_t last = DecodeUtf8(out).back();
      const char32_t first = DecodeUtf8(w).front();
      if (!IsCjk(last) && !IsCjk(first)) out += ' ';
    }
    out += w;
  }
  return out;
}

double Millis(double t) { return std::round(t * 1000.0) / 1000.0; }

}  // namespace

SynthVocab DefaultSynthVocab() {
  SynthVocab v;
  v.teacher_words = {"我们", "来看", "这道题", "方程", "函数", "图像", "三角形", "面积",
                     "已知", "条件", "求", "解", "一下", "第一步", "然后", "所以",
                     "等于", "多少", "为什么", "怎么", "算", "这里", "坐标", "直线",
                     "角度", "比例", "先", "代入", "化简", "移项"};
  v.student_words = {"是", "这样", "吗", "等于", "三", "五", "十二", "角", "边",
                     "我", "算出来", "可能", "应该", "就是", "这个", "答案", "七", "乘"};
  v.positive_cues = {"简单", "清楚", "顺手", "能做"};
  v.negative_cues = {"太难", "卡住", "迷糊", "头疼"};
  return v;
}

SynthConfig SynthPreset(std::string_view name) {
  SynthConfig c;
  c.vocab = DefaultSynthVocab();
  if (name == "default" || name == "marginal-0.78") {
    c.num_classes = 2;
  } else if (name == "three-class") {
    c.num_classes = 3;
  } else if (name == "null") {
    c.num_classes = 2;
    c.wide_strength = 0.0;
    c.text_strength = 0.0;
  } else {
    Fail(ErrorKind::kConfig, "unknown synthetic preset '" + std::string(name) + "'");
  }
  return c;
}

std::vector<std::string> SynthPresetNames() {
  return {"default", "marginal-0.78", "three-class", "null"};
}

SynthConfig SynthConfigFromJson(const json &j, SynthConfig c) {
  if (!j.is_object()) Fail(ErrorKind::kConfig, "synthetic config must be an object");
  try {
    auto num = [&](const json &o, const char *key, auto &field) {
      if (auto it = o.find(key); it != o.end()) field = it->get<std::decay_t<decltype(field)>>();
    };
    num(j, "n_samples", c.n_samples);
    num(j, "num_classes", c.num_classes);
    num(j, "wide_strength", c.wide_strength);
    num(j, "text_strength", c.text_strength);
    if (auto it = j.find("signal"); it != j.end()) {
      num(*it, "wide_strength", c.wide_strength);
      num(*it, "text_strength", c.text_strength);
    }
    num(j, "noise", c.noise);
    num(j, "coupling", c.coupling);
    num(j, "text_scale", c.text_scale);
    num(j, "exchanges", c.exchanges);
    num(j, "latency_base", c.latency_base);
    num(j, "latency_slope", c.latency_slope);
    num(j, "oracle_draws", c.oracle_draws);
    if (auto it = j.find("vocab"); it != j.end()) {
      num(*it, "teacher_words", c.vocab.teacher_words);
      num(*it, "student_words", c.vocab.student_words);
      num(*it, "positive_cues", c.vocab.positive_cues);
      num(*it, "negative_cues", c.vocab.negative_cues);
    }
  } catch (const json::exception &e) {
    Fail(ErrorKind::kConfig, std::string("synthetic config: ") + e.what());
  }
  return c;
}

json SynthConfigToJson(const SynthConfig &c) {
  return json{{"n_samples", c.n_samples},
              {"num_classes", c.num_classes},
              {"signal", {{"wide_strength", c.wide_strength}, {"text_strength", c.text_strength}}},
              {"noise", c.noise},
              {"coupling", c.coupling},
              {"text_scale", c.text_scale},
              {"exchanges", c.exchanges},
              {"latency_base", c.latency_base},
              {"latency_slope", c.latency_slope},
              {"oracle_draws", c.oracle_draws},
              {"vocab",
               {{"teacher_words", c.vocab.teacher_words},
                {"student_words", c.vocab.student_words},
                {"positive_cues", c.vocab.positive_cues},
                {"negative_cues", c.vocab.negative_cues}}}};
}

json BayesReportToJson(const BayesReport &r) {
  return json{{"joint", r.joint},           {"wide_only", r.wide_only},
              {"text_only", r.text_only},   {"draws", r.draws},
              {"num_classes", r.num_classes}, {"thresholds", r.thresholds}};
}

// ---------------------------------------------------------------------------

SynthOracle::SynthOracle(const SynthConfig &cfg) : cfg_(cfg), cap_(cfg.exchanges) {
  CheckConfig(cfg);
  const int k = cfg.num_classes;
  for (int c = 1; c < k; ++c) {
    const double target = static_cast<double>(c) / k;
    double lo = -50.0, hi = 50.0;
    for (int it = 0; it < 200 && hi - lo > 1e-12; ++it) {
      const double mid = 0.5 * (lo + hi);
      (ScoreCdf(mid) < target ? lo : hi) = mid;
    }
    thresholds_.push_back(0.5 * (lo + hi));
  }

  // Text-only rule: posterior over classes given q, integrating a out.
  const double h = 2.0 * kQuadratureLimit / (kQuadraturePoints - 1);
  for (int q = -cap_; q <= cap_; ++q) {
    std::vector<double> post(k, 0.0);
    for (int i = 0; i < kQuadraturePoints; ++i) {
      const double a = -kQuadratureLimit + h * i;
      const double wa = std::exp(-0.5 * a * a) * QuantProb(q, a);
      const double score = Score(a, q);
      for (int c = 0; c < k; ++c) post[c] += wa * ClassProb(c, score);
    }
    text_rule_.push_back(static_cast<int>(
        std::max_element(post.begin(), post.end()) - post.begin()));
  }
}

int SynthOracle::Quantize(double b) const {
  return std::clamp(RoundHalfAway(cfg_.text_scale * b), -cap_, cap_);
}

double SynthOracle::Score(double a, int q) const {
  return cfg_.wide_strength * a + cfg_.text_strength * q / cfg_.text_scale;
}

double SynthOracle::ClassProb(int k, double score) const {
  const int last = static_cast<int>(thresholds_.size());
  const double upper = k == last ? 1.0 : NormalCdf((thresholds_[k] - score) / cfg_.noise);
  const double lower = k == 0 ? 0.0 : NormalCdf((thresholds_[k - 1] - score) / cfg_.noise);
  return upper - lower;
}

double SynthOracle::QuantProb(int q, double a) const {
  const double rho = cfg_.coupling;
  const double mean = rho * a;
  const double sd = std::sqrt(1.0 - rho * rho);
  const double lo = q == -cap_ ? -INFINITY : (q - 0.5) / cfg_.text_scale;
  const double hi = q == cap_ ? INFINITY : (q + 0.5) / cfg_.text_scale;
  const double p_hi = std::isinf(hi) ? 1.0 : NormalCdf((hi - mean) / sd);
  const double p_lo = std::isinf(lo) ? 0.0 : NormalCdf((lo - mean) / sd);
  return p_hi - p_lo;
}

double SynthOracle::ScoreCdf(double t) const {
  const double h = 2.0 * kQuadratureLimit / (kQuadraturePoints - 1);
  double total = 0.0, norm = 0.0;
  for (int i = 0; i < kQuadraturePoints; ++i) {
    const double a = -kQuadratureLimit + h * i;
    const double wa = std::exp(-0.5 * a * a);
    norm += wa;
    double inner = 0.0;
    for (int q = -cap_; q <= cap_; ++q) {
      inner += QuantProb(q, a) * NormalCdf((t - Score(a, q)) / cfg_.noise);
    }
    total += wa * inner;
  }
  return total / norm;
}

int SynthOracle::Label(double a, int q, double eps) const {
  const double s = Score(a, q) + cfg_.noise * eps;
  return static_cast<int>(std::upper_bound(thresholds_.begin(), thresholds_.end(), s) -
                          thresholds_.begin());
}

int SynthOracle::PredictJoint(double a, int q) const {
  const double score = Score(a, q);
  int best = 0;
  double best_p = -1.0;
  for (int c = 0; c < cfg_.num_classes; ++c) {
    const double p = ClassProb(c, score);
    if (p > best_p) {
      best_p = p;
      best = c;
    }
  }
  return best;
}

int SynthOracle::PredictWide(double a) const {
  int best = 0;
  double best_p = -1.0;
  for (int c = 0; c < cfg_.num_classes; ++c) {
    double p = 0.0;
    for (int q = -cap_; q <= cap_; ++q) p += QuantProb(q, a) * ClassProb(c, Score(a, q));
    if (p > best_p) {
      best_p = p;
      best = c;
    }
  }
  return best;
}

int SynthOracle::PredictText(int q) const { return text_rule_[q + cap_]; }

// ---------------------------------------------------------------------------

SynthResult GenerateSynthetic(const SynthConfig &cfg, uint64_t seed) {
  SynthOracle oracle(cfg);
  const SynthVocab &v = cfg.vocab;
  const double rho = cfg.coupling;
  const double rho_c = std::sqrt(1.0 - rho * rho);

  SynthResult res;
  res.dataset.num_classes = cfg.num_classes;
  Rng root(seed);
  Rng latent = root.Fork(1);
  Rng surface = root.Fork(2);

  auto pick = [&](const std::vector<std::string> &words) {
    return words[surface.Below(words.size())];
  };

  for (int n = 0; n < cfg.n_samples; ++n) {
    const double a = latent.Normal();
    const double b = rho * a + rho_c * latent.Normal();
    const double eps = latent.Normal();
    const int q = oracle.Quantize(b);

    QuestionSample s;
    char id[32];
    std::snprintf(id, sizeof(id), "syn-%06d", n);
    s.sample_id = id;
    s.label = oracle.Label(a, q, eps);
    s.grade = "8";

    std::vector<int> order(cfg.exchanges);
    std::iota(order.begin(), order.end(), 0);
    surface.Shuffle(std::span<int>(order));
    std::vector<bool> has_cue(cfg.exchanges, false);
    for (int k = 0; k < std::abs(q); ++k) has_cue[order[k]] = true;
    std::vector<std::string> cues = q >= 0 ? v.positive_cues : v.negative_cues;
    surface.Shuffle(std::span<std::string>(cues));
    size_t next_cue = 0;

    const double latency = cfg.latency_base * std::exp(cfg.latency_slope * a);
    double t = 0.0;
    for (int e = 0; e < cfg.exchanges; ++e) {
      std::vector<std::string> tw;
      const int n_tw = static_cast<int>(surface.Between(3, 6));
      for (int k = 0; k < n_tw; ++k) tw.push_back(pick(v.teacher_words));
      std::string ttext = JoinWords(tw);
      if (surface.Bernoulli(0.5)) ttext += "？";
      const double tdur = static_cast<double>(Tokenize(ttext).size()) * surface.Uniform(0.25, 0.35);
      s.utterances.push_back({Speaker::kTeacher, ttext, Millis(t), Millis(t + tdur)});
      t = Millis(t + tdur) + latency;

      std::vector<std::string> sw;
      const int n_sw = static_cast<int>(surface.Between(1, 3));
      for (int k = 0; k < n_sw; ++k) sw.push_back(pick(v.student_words));
      if (has_cue[e]) {
        const auto pos = static_cast<long>(surface.Below(sw.size() + 1));
        sw.insert(sw.begin() + pos, cues[next_cue++]);
      }
      std::string stext = JoinWords(sw);
      if (surface.Bernoulli(0.1)) stext += "？";
      const double sdur = static_cast<double>(Tokenize(stext).size()) * surface.Uniform(0.3, 0.4);
      s.utterances.push_back({Speaker::kStudent, stext, Millis(t), Millis(t + sdur)});
      t = Millis(t + sdur) + surface.Uniform(0.2, 1.0);
    }
    SortByTime(s.utterances);
    res.dataset.samples.push_back(std::move(s));
  }

  // Bayes accuracies on a fresh draw of the latent variables.
  Rng held_out = root.Fork(3);
  const int draws = cfg.oracle_draws > 0 ? cfg.oracle_draws : cfg.n_samples;
  size_t hit_joint = 0, hit_wide = 0, hit_text = 0;
  for (int n = 0; n < draws; ++n) {
    const double a = held_out.Normal();
    const double b = rho * a + rho_c * held_out.Normal();
    const double eps = held_out.Normal();
    const int q = oracle.Quantize(b);
    const int y = oracle.Label(a, q, eps);
    hit_joint += oracle.PredictJoint(a, q) == y;
    hit_wide += oracle.PredictWide(a) == y;
    hit_text += oracle.PredictText(q) == y;
  }
  BayesReport &r = res.bayes;
  r.draws = draws;
  r.num_classes = cfg.num_classes;
  r.thresholds = oracle.thresholds();
  r.joint = static_cast<double>(hit_joint) / draws;
  r.wide_only = static_cast<double>(hit_wide) / draws;
  r.text_only = static_cast<double>(hit_text) / draws;
  return res;
}

}  // namespace wdj
