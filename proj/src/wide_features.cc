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

#include "wdj/wide_features.h"

#include <algorithm>
#include <charconv>
#include <cstdio>
#include <fstream>
#include <istream>
#include <ostream>
#include <set>
#include <sstream>

#include "wdj/error.h"
#include "wdj/text.h"

namespace wdj {

using nlohmann::json;

void BucketTable::Validate() const {
  if (lower_bounds.empty() || lower_bounds.front() != 0) {
    Fail(ErrorKind::kConfig, "bucket table must start at 0");
  }
  for (size_t i = 1; i < lower_bounds.size(); ++i) {
    if (lower_bounds[i] <= lower_bounds[i - 1]) {
      Fail(ErrorKind::kConfig, "bucket lower bounds must be strictly increasing");
    }
  }
}

BucketTable BucketTable::Geometric() { return {{0, 1, 2, 3, 5, 9, 17, 33, 65}}; }

size_t EncodeBucket(int64_t count, const BucketTable &table) {
  const auto &lb = table.lower_bounds;
  if (count < 0) count = 0;
  return static_cast<size_t>(std::upper_bound(lb.begin(), lb.end(), count) - lb.begin()) - 1;
}

// ---------------------------------------------------------------------------

FeatureCatalog FeatureCatalog::Default() {
  FeatureCatalog c;
  c.continuous = {
      {"duration_s", "s", "duration"},
      {"jaccard_teacher_student", "ratio", kJaccardSegment},
      {"teacher_time_ratio", "ratio", "teacher_time_ratio"},
      {"student_time_ratio", "ratio", "student_time_ratio"},
      {"teacher_words_per_sentence", "tokens", "teacher_words_per_sentence"},
      {"student_words_per_sentence", "tokens", "student_words_per_sentence"},
      {"student_teacher_word_ratio", "ratio", "student_teacher_word_ratio"},
      {"student_response_latency_s", "s", "student_response_latency"},
      {"max_silence_gap_s", "s", "max_silence_gap"},
      {"turn_switches_per_min", "1/min", "turn_switch_rate"},
      {"student_type_token_ratio", "ratio", "student_type_token_ratio"},
      {"teacher_question_fraction", "ratio", "teacher_question_fraction"},
      {"student_affirmation_fraction", "ratio", "student_affirmation_fraction"},
  };
  const char *discrete[] = {"teacher_words",     "student_words",
                            "teacher_sentences", "student_sentences",
                            "student_short_sentences", "teacher_questions",
                            "student_questions", "turn_switches",
                            "student_affirmations", "teacher_praises",
                            "student_hesitations", "long_silences"};
  for (const char *name : discrete) c.discrete.push_back({name, BucketTable::Geometric()});
  c.affirmation = {"yes", "yeah", "ok", "okay", "got it", "i see", "right",
                   "会了", "对", "嗯", "懂了", "明白了", "好的"};
  c.praise = {"good", "great", "excellent", "well done", "very good", "perfect",
              "很好", "真棒", "不错", "太棒了", "厉害", "非常好"};
  c.hesitation = {"um", "uh", "hmm", "er", "呃", "额", "那个", "不知道", "不确定"};
  return c;
}

void FeatureCatalog::Validate() const {
  if (continuous.size() != kNumContinuous || discrete.size() != kNumDiscrete) {
    Fail(ErrorKind::kConfig, "feature catalog must define " + std::to_string(kNumContinuous) +
                                 " continuous and " + std::to_string(kNumDiscrete) +
                                 " discrete features");
  }
  const FeatureCatalog ref = Default();
  for (size_t i = 0; i < kNumContinuous; ++i) {
    const std::string &id = continuous[i].extractor;
    const bool ok = i == 1 ? (id == kJaccardSegment || id == kJaccardPairMean)
                           : id == ref.continuous[i].extractor;
    if (!ok) Fail(ErrorKind::kConfig, "unknown extractor '" + id + "' in slot " + std::to_string(i));
  }
  for (const auto &d : discrete) d.buckets.Validate();
  if (tokenizer != "unicode-cjk-v1") Fail(ErrorKind::kConfig, "unknown tokenizer '" + tokenizer + "'");
  if (!(silence_gap_s >= 0)) Fail(ErrorKind::kConfig, "silence_gap_s must be non-negative");
  if (short_utterance_tokens < 1) Fail(ErrorKind::kConfig, "short_utterance_tokens must be >= 1");
}

size_t FeatureCatalog::OneHotWidth() const {
  size_t w = 0;
  for (const auto &d : discrete) w += d.buckets.size();
  return w;
}

size_t FeatureCatalog::OneHotOffset(size_t discrete_index) const {
  size_t off = 0;
  for (size_t i = 0; i < discrete_index; ++i) off += discrete[i].buckets.size();
  return off;
}

std::vector<std::string> FeatureCatalog::FeatureNames() const {
  std::vector<std::string> names;
  for (const auto &c : continuous) names.push_back(c.name);
  for (const auto &d : discrete) names.push_back(d.name);
  return names;
}

json CatalogToJson(const FeatureCatalog &c) {
  json cont = json::array();
  for (const auto &f : c.continuous) {
    cont.push_back({{"name", f.name}, {"unit", f.unit}, {"extractor", f.extractor}});
  }
  json disc = json::array();
  for (const auto &d : c.discrete) {
    disc.push_back({{"name", d.name}, {"buckets", d.buckets.lower_bounds}});
  }
  return json{{"continuous", cont},
              {"discrete", disc},
              {"lexicons",
               {{"affirmation", c.affirmation}, {"praise", c.praise}, {"hesitation", c.hesitation}}},
              {"tokenizer", c.tokenizer},
              {"silence_gap_s", c.silence_gap_s},
              {"short_utterance_tokens", c.short_utterance_tokens}};
}

FeatureCatalog CatalogFromJson(const json &j) {
  FeatureCatalog c = FeatureCatalog::Default();
  try {
    if (auto it = j.find("continuous"); it != j.end()) {
      c.continuous.clear();
      for (const auto &f : *it) {
        c.continuous.push_back({f.at("name").get<std::string>(), f.value("unit", ""),
                                f.at("extractor").get<std::string>()});
      }
    }
    if (auto it = j.find("jaccard"); it != j.end()) {
      c.continuous[1].extractor = it->get<std::string>();
    }
    if (auto it = j.find("discrete"); it != j.end()) {
      c.discrete.clear();
      for (const auto &d : *it) {
        c.discrete.push_back({d.at("name").get<std::string>(),
                              {d.at("buckets").get<std::vector<int64_t>>()}});
      }
    }
    if (auto it = j.find("buckets"); it != j.end()) {
      BucketTable t{it->get<std::vector<int64_t>>()};
      for (auto &d : c.discrete) d.buckets = t;
    }
    if (auto it = j.find("lexicons"); it != j.end()) {
      if (it->contains("affirmation")) c.affirmation = it->at("affirmation").get<std::vector<std::string>>();
      if (it->contains("praise")) c.praise = it->at("praise").get<std::vector<std::string>>();
      if (it->contains("hesitation")) c.hesitation = it->at("hesitation").get<std::vector<std::string>>();
    }
    c.tokenizer = j.value("tokenizer", c.tokenizer);
    c.silence_gap_s = j.value("silence_gap_s", c.silence_gap_s);
    c.short_utterance_tokens = j.value("short_utterance_tokens", c.short_utterance_tokens);
  } catch (const json::exception &e) {
    Fail(ErrorKind::kConfig, std::string("feature catalog: ") + e.what());
  }
  c.Validate();
  return c;
}

FeatureCatalog LoadCatalog(const std::filesystem::path &path) {
  std::ifstream in(path);
  if (!in) Fail(ErrorKind::kIo, "cannot open " + path.string());
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error &e) {
    Fail(ErrorKind::kParse, path.string() + ": " + e.what());
  }
  return CatalogFromJson(j.contains("catalog") ? j["catalog"] : j);
}

// ---------------------------------------------------------------------------

std::vector<size_t> WideFeatures::HotIndices() const {
  std::vector<size_t> hot;
  for (size_t i = 0; i < one_hot.size(); ++i) {
    if (one_hot[i]) hot.push_back(i);
  }
  return hot;
}

double Jaccard(const std::vector<std::string> &a, const std::vector<std::string> &b) {
  const std::set<std::string> sa(a.begin(), a.end());
  const std::set<std::string> sb(b.begin(), b.end());
  if (sa.empty() && sb.empty()) return 0.0;
  size_t inter = 0;
  for (const auto &t : sa) inter += sb.count(t);
  const size_t uni = sa.size() + sb.size() - inter;
  return static_cast<double>(inter) / static_cast<double>(uni);
}

namespace {

using Tokens = std::vector<std::string>;

size_t CountPhrase(const Tokens &tokens, const Tokens &phrase) {
  if (phrase.empty() || phrase.size() > tokens.size()) return 0;
  size_t n = 0;
  for (size_t i = 0; i + phrase.size() <= tokens.size(); ++i) {
    if (std::equal(phrase.begin(), phrase.end(), tokens.begin() + static_cast<long>(i))) ++n;
  }
  return n;
}

size_t CountLexicon(const Tokens &tokens, const std::vector<Tokens> &lexicon) {
  size_t n = 0;
  for (const auto &entry : lexicon) n += CountPhrase(tokens, entry);
  return n;
}

std::vector<Tokens> TokenizeLexicon(const std::vector<std::string> &entries) {
  std::vector<Tokens> out;
  for (const auto &e : entries) out.push_back(Tokenize(e));
  return out;
}

bool EndsWithQuestionMark(std::string_view text) {
  std::u32string cps = DecodeUtf8(text);
  while (!cps.empty() && (cps.back() == ' ' || cps.back() == '\t' || cps.back() == '\n' ||
                          cps.back() == '\r' || cps.back() == 0x3000)) {
    cps.pop_back();
  }
  return !cps.empty() && (cps.back() == U'?' || cps.back() == U'？');
}

double SafeDiv(double num, double den) { return den > 0.0 ? num / den : 0.0; }

}  // namespace

void EncodeOneHot(WideFeatures &wf, const FeatureCatalog &catalog) {
  wf.one_hot.assign(catalog.OneHotWidth(), 0);
  size_t off = 0;
  for (size_t i = 0; i < kNumDiscrete; ++i) {
    const BucketTable &t = catalog.discrete[i].buckets;
    wf.one_hot[off + EncodeBucket(wf.counts[i], t)] = 1;
    off += t.size();
  }
}

WideFeatures ExtractWide(const QuestionSample &sample, const FeatureCatalog &catalog) {
  std::vector<Utterance> utts = sample.utterances;
  SortByTime(utts);
  const size_t n = utts.size();

  std::vector<Tokens> tokens;
  tokens.reserve(n);
  for (const auto &u : utts) tokens.push_back(Tokenize(u.text));
  const auto affirmation = TokenizeLexicon(catalog.affirmation);
  const auto praise = TokenizeLexicon(catalog.praise);
  const auto hesitation = TokenizeLexicon(catalog.hesitation);

  double first_start = n ? utts.front().start_s : 0.0;
  double last_end = first_start;
  double teacher_time = 0.0, student_time = 0.0;
  int64_t teacher_words = 0, student_words = 0;
  int64_t teacher_sents = 0, student_sents = 0, student_short = 0;
  int64_t teacher_q = 0, student_q = 0;
  int64_t student_affirm = 0, teacher_praise = 0, student_hes = 0;
  Tokens teacher_tokens, student_tokens;

  for (size_t i = 0; i < n; ++i) {
    const Utterance &u = utts[i];
    last_end = std::max(last_end, u.end_s);
    const double dur = u.end_s - u.start_s;
    const bool question = EndsWithQuestionMark(u.text);
    const auto words = static_cast<int64_t>(tokens[i].size());
    if (u.speaker == Speaker::kTeacher) {
      teacher_time += dur;
      teacher_words += words;
      ++teacher_sents;
      teacher_q += question;
      teacher_praise += CountLexicon(tokens[i], praise) > 0;
      teacher_tokens.insert(teacher_tokens.end(), tokens[i].begin(), tokens[i].end());
    } else {
      student_time += dur;
      student_words += words;
      ++student_sents;
      student_short += words < catalog.short_utterance_tokens;
      student_q += question;
      student_affirm += CountLexicon(tokens[i], affirmation) > 0;
      student_hes += static_cast<int64_t>(CountLexicon(tokens[i], hesitation));
      student_tokens.insert(student_tokens.end(), tokens[i].begin(), tokens[i].end());
    }
  }
  const double duration = last_end - first_start;

  // Timing structure over the time-ordered sequence.
  int64_t switches = 0, long_silences = 0;
  double max_gap = 0.0, latency_sum = 0.0;
  size_t latency_n = 0;
  double pair_jaccard_sum = 0.0;
  size_t pair_n = 0;
  double covered_until = n ? utts.front().end_s : 0.0;
  for (size_t i = 1; i < n; ++i) {
    const Utterance &prev = utts[i - 1];
    const Utterance &cur = utts[i];
    if (cur.speaker != prev.speaker) ++switches;
    const double gap = cur.start_s - covered_until;
    if (gap > 0.0) {
      max_gap = std::max(max_gap, gap);
      if (gap > catalog.silence_gap_s) ++long_silences;
    }
    covered_until = std::max(covered_until, cur.end_s);
    if (prev.speaker == Speaker::kTeacher && cur.speaker == Speaker::kStudent) {
      latency_sum += std::max(0.0, cur.start_s - prev.end_s);
      ++latency_n;
      pair_jaccard_sum += Jaccard(tokens[i - 1], tokens[i]);
      ++pair_n;
    }
  }

  WideFeatures wf;
  auto &x = wf.continuous;
  x[0] = duration;
  x[1] = catalog.continuous[1].extractor == kJaccardPairMean
             ? SafeDiv(pair_jaccard_sum, static_cast<double>(pair_n))
             : (student_sents ? Jaccard(teacher_tokens, student_tokens) : 0.0);
  x[2] = std::min(1.0, SafeDiv(teacher_time, duration));
  x[3] = std::min(1.0, SafeDiv(student_time, duration));
  x[4] = SafeDiv(static_cast<double>(teacher_words), static_cast<double>(teacher_sents));
  x[5] = SafeDiv(static_cast<double>(student_words), static_cast<double>(student_sents));
  x[6] = static_cast<double>(student_words + 1) / static_cast<double>(teacher_words + 1);
  x[7] = SafeDiv(latency_sum, static_cast<double>(latency_n));
  x[8] = max_gap;
  x[9] = SafeDiv(static_cast<double>(switches), duration / 60.0);
  {
    const std::set<std::string> types(student_tokens.begin(), student_tokens.end());
    x[10] = SafeDiv(static_cast<double>(types.size()), static_cast<double>(student_tokens.size()));
  }
  x[11] = SafeDiv(static_cast<double>(teacher_q), static_cast<double>(teacher_sents));
  x[12] = SafeDiv(static_cast<double>(student_affirm), static_cast<double>(student_sents));

  wf.counts = {teacher_words, student_words,  teacher_sents, student_sents,
               student_short, teacher_q,      student_q,     switches,
               student_affirm, teacher_praise, student_hes,  long_silences};
  EncodeOneHot(wf, catalog);
  return wf;
}

std::array<double, kNumWideFeatures> RawRow(const WideFeatures &wf) {
  std::array<double, kNumWideFeatures> row{};
  std::copy(wf.continuous.begin(), wf.continuous.end(), row.begin());
  for (size_t i = 0; i < kNumDiscrete; ++i) {
    row[kNumContinuous + i] = static_cast<double>(wf.counts[i]);
  }
  return row;
}

// ---------------------------------------------------------------------------

void WriteFeatureCsv(const Dataset &ds, const FeatureCatalog &catalog, std::ostream &out) {
  for (const auto &name : catalog.FeatureNames()) out << name << ',';
  out << "label\n";
  char buf[64];
  for (const auto &s : ds.samples) {
    const WideFeatures wf = ExtractWide(s, catalog);
    for (double v : wf.continuous) {
      std::snprintf(buf, sizeof(buf), "%.17g", v);
      out << buf << ',';
    }
    for (int64_t c : wf.counts) out << c << ',';
    out << s.label << '\n';
  }
}

std::vector<FeatureRow> ReadFeatureCsv(std::istream &in, const FeatureCatalog &catalog) {
  std::string line;
  if (!std::getline(in, line)) Fail(ErrorKind::kEmptyDataset, "feature CSV is empty");
  {
    std::string expected;
    for (const auto &name : catalog.FeatureNames()) expected += name + ",";
    expected += "label";
    if (TrimWhitespace(line) != expected) {
      Fail(ErrorKind::kParse, "feature CSV header does not match the catalog");
    }
  }
  std::vector<FeatureRow> rows;
  size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (TrimWhitespace(line).empty()) continue;
    std::vector<std::string_view> cells;
    std::string_view rest = line;
    while (true) {
      const size_t comma = rest.find(',');
      cells.push_back(TrimWhitespace(rest.substr(0, comma)));
      if (comma == std::string_view::npos) break;
      rest.remove_prefix(comma + 1);
    }
    if (cells.size() != kNumWideFeatures + 1) {
      Fail(ErrorKind::kParse, "line " + std::to_string(line_no) + ": expected " +
                                  std::to_string(kNumWideFeatures + 1) + " cells");
    }
    FeatureRow row;
    auto bad = [&](size_t col) {
      Fail(ErrorKind::kParse, "line " + std::to_string(line_no) + ": bad value in column " +
                                  std::to_string(col + 1));
    };
    for (size_t i = 0; i < kNumContinuous; ++i) {
      std::string cell(cells[i]);
      char *end = nullptr;
      row.features.continuous[i] = std::strtod(cell.c_str(), &end);
      if (cell.empty() || *end != '\0') bad(i);
    }
    for (size_t i = 0; i < kNumDiscrete; ++i) {
      const auto cell = cells[kNumContinuous + i];
      auto [p, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), row.features.counts[i]);
      if (ec != std::errc() || p != cell.data() + cell.size() || row.features.counts[i] < 0) {
        bad(kNumContinuous + i);
      }
    }
    const auto lab = cells.back();
    auto [p, ec] = std::from_chars(lab.data(), lab.data() + lab.size(), row.label);
    if (ec != std::errc() || p != lab.data() + lab.size()) bad(kNumWideFeatures);
    EncodeOneHot(row.features, catalog);
    rows.push_back(std::move(row));
  }
  return rows;
}

}  // namespace wdj
