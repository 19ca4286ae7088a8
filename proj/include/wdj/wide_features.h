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

// Handcrafted interaction features of one question segment.
//
// Continuous (x_c), in catalog order:
//    0 duration_s                   last end - first start
//    1 jaccard_teacher_student      token-set Jaccard, teacher vs student
//    2 teacher_time_ratio           teacher speaking time / duration
//    3 student_time_ratio           student speaking time / duration
//    4 teacher_words_per_sentence
//    5 student_words_per_sentence
//    6 student_teacher_word_ratio   (student words + 1) / (teacher words + 1)
//    7 student_response_latency_s   mean gap teacher end -> next student start
//    8 max_silence_gap_s
//    9 turn_switches_per_min
//   10 student_type_token_ratio
//   11 teacher_question_fraction    teacher utterances ending in ? or ？
//   12 student_affirmation_fraction
//
// Discrete counts, one-hot encoded through per-feature bucket tables (x_d):
//    0 teacher_words          6 student_questions
//    1 student_words          7 turn_switches
//    2 teacher_sentences      8 student_affirmations
//    3 student_sentences      9 teacher_praises
//    4 student_short_sentences (fewer than short_utterance_tokens tokens)
//    5 teacher_questions     10 student_hesitations (marker occurrences)
//                            11 long_silences (gaps > silence_gap_s)
//
// Degenerate inputs yield 0 for any ratio or mean whose denominator is 0.

#ifndef WDJ_WIDE_FEATURES_H_
#define WDJ_WIDE_FEATURES_H_

#include <array>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "json.hpp"
#include "wdj/corpus.h"

namespace wdj {

inline constexpr size_t kNumContinuous = 13;
inline constexpr size_t kNumDiscrete = 12;
inline constexpr size_t kNumWideFeatures = kNumContinuous + kNumDiscrete;

// Buckets are [lower_bounds[i], lower_bounds[i+1]) with the last one open.
struct BucketTable {
  std::vector<int64_t> lower_bounds;

  size_t size() const { return lower_bounds.size(); }
  void Validate() const;
  static BucketTable Geometric();  // {0},{1},{2},{3-4},{5-8},...,{65+}
  bool operator==(const BucketTable &) const = default;
};

size_t EncodeBucket(int64_t count, const BucketTable &table);

struct ContinuousFeature {
  std::string name;
  std::string unit;
  std::string extractor;
  bool operator==(const ContinuousFeature &) const = default;
};

struct DiscreteFeature {
  std::string name;
  BucketTable buckets;
  bool operator==(const DiscreteFeature &) const = default;
};

struct FeatureCatalog {
  std::vector<ContinuousFeature> continuous;
  std::vector<DiscreteFeature> discrete;
  std::vector<std::string> affirmation;
  std::vector<std::string> praise;
  std::vector<std::string> hesitation;
  std::string tokenizer = "unicode-cjk-v1";
  double silence_gap_s = 5.0;
  int short_utterance_tokens = 3;

  static FeatureCatalog Default();
  void Validate() const;
  size_t OneHotWidth() const;
  size_t OneHotOffset(size_t discrete_index) const;
  std::vector<std::string> FeatureNames() const;

  bool operator==(const FeatureCatalog &) const = default;
};

// Extractor ids accepted for the Jaccard slot.
inline constexpr const char *kJaccardSegment = "jaccard_segment";
inline constexpr const char *kJaccardPairMean = "jaccard_pair_mean";

nlohmann::json CatalogToJson(const FeatureCatalog &c);
FeatureCatalog CatalogFromJson(const nlohmann::json &j);
FeatureCatalog LoadCatalog(const std::filesystem::path &path);

struct WideFeatures {
  std::array<double, kNumContinuous> continuous{};
  std::array<int64_t, kNumDiscrete> counts{};
  std::vector<uint8_t> one_hot;

  std::vector<size_t> HotIndices() const;
  bool operator==(const WideFeatures &) const = default;
};

// |set(a) & set(b)| / |set(a) | set(b)|, 0 when both are empty.
double Jaccard(const std::vector<std::string> &a, const std::vector<std::string> &b);

WideFeatures ExtractWide(const QuestionSample &sample, const FeatureCatalog &catalog);
// Fills one_hot from counts.
void EncodeOneHot(WideFeatures &wf, const FeatureCatalog &catalog);

// CSV with header = 25 feature names + "label"; reals written with 17
// significant digits so that re-reading is exact.
void WriteFeatureCsv(const Dataset &ds, const FeatureCatalog &catalog, std::ostream &out);

struct FeatureRow {
  WideFeatures features;
  int label = 0;
};
std::vector<FeatureRow> ReadFeatureCsv(std::istream &in, const FeatureCatalog &catalog);

// Raw 25-column row: 13 continuous values then 12 counts.
std::array<double, kNumWideFeatures> RawRow(const WideFeatures &wf);

}  // namespace wdj

#endif  // WDJ_WIDE_FEATURES_H_
