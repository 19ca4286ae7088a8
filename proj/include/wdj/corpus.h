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

// Transcript data model, JSONL ingestion, stratified splitting and the seeded
// synthetic corpus generator.
//
// One JSONL line holds one question segment:
//
//   {"sample_id": "c17-q3", "label": 2, "grade": "8",
//    "utterances": [{"speaker": "teacher", "text": "...",
//                    "start_s": 0.0, "end_s": 2.5}, ...]}
//
// Missing start_s/end_s on any utterance of a sample makes the whole sample's
// timing estimated from token counts; such samples carry timing_estimated.

#ifndef WDJ_CORPUS_H_
#define WDJ_CORPUS_H_

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

namespace wdj {

enum class Speaker { kTeacher, kStudent };

std::string_view SpeakerName(Speaker s);

struct Utterance {
  Speaker speaker = Speaker::kTeacher;
  std::string text;
  double start_s = 0.0;
  double end_s = 0.0;

  bool operator==(const Utterance &) const = default;
};

// Total order used everywhere utterances are put in time order: start, end,
// speaker, text. Ties on start time never depend on input order.
bool UtteranceBefore(const Utterance &a, const Utterance &b);
void SortByTime(std::vector<Utterance> &utterances);

struct QuestionSample {
  std::string sample_id;
  std::vector<Utterance> utterances;
  int label = 0;
  std::optional<std::string> grade;
  std::optional<std::string> class_id;
  bool timing_estimated = false;

  bool operator==(const QuestionSample &) const = default;
};

enum class SplitTag { kTrain, kVal, kTest, kUnsplit };

std::string_view SplitTagName(SplitTag t);

struct Dataset {
  std::vector<QuestionSample> samples;
  int num_classes = 2;
  SplitTag split_tag = SplitTag::kUnsplit;

  size_t size() const { return samples.size(); }
  bool empty() const { return samples.empty(); }
  std::vector<int> Labels() const;
  std::vector<size_t> ClassCounts() const;

  bool operator==(const Dataset &) const = default;
};

// ---------------------------------------------------------------------------
// Ingestion.

struct ParseOptions {
  // Overrides the inferred class count (max label + 1, at least 2).
  std::optional<int> num_classes;
  // Used when timestamps are absent.
  double seconds_per_token = 0.4;
};

Dataset ParseTranscripts(std::istream &in, const ParseOptions &options = {});
Dataset LoadTranscripts(const std::filesystem::path &path,
                        const ParseOptions &options = {});

nlohmann::ordered_json SampleToJson(const QuestionSample &sample);
void WriteTranscripts(const Dataset &ds, std::ostream &out);
void SaveTranscripts(const Dataset &ds, const std::filesystem::path &path);

// Checks the QuestionSample invariants; throws kValidation naming the sample.
void ValidateSample(const QuestionSample &sample, int num_classes);

// ---------------------------------------------------------------------------
// Splitting.

struct SplitRatios {
  double train = 0.7;
  double val = 0.15;
  double test = 0.15;
};

struct SplitResult {
  Dataset train, val, test;
  std::vector<std::string> warnings;
};

// Stratified, seeded split. Per class, the allocation to each split is within
// one sample of ratio * class size, and split totals follow a largest
// remainder apportionment of the stratifiable samples. Classes with fewer
// than three samples go entirely to train with a warning.
SplitResult SplitDataset(const Dataset &ds, const SplitRatios &ratios,
                         uint64_t seed);

// ---------------------------------------------------------------------------
// Synthetic corpora.
//
// Each sample draws a latent pair (a, b), standard normal with correlation
// `coupling`. `a` is written into the timing (every teacher->student response
// latency equals latency_base * exp(latency_slope * a)), `b` is quantized to
// q = clamp(round(text_scale * b), -exchanges, exchanges) and written into the
// text as |q| class cue words (positive or negative cue list by sign of q),
// one per student utterance. The label is the bin of
//
//   wide_strength * a + text_strength * q / text_scale + noise * N(0, 1)
//
// under thresholds at the class-balancing quantiles of that score.

struct SynthVocab {
  std::vector<std::string> teacher_words;
  std::vector<std::string> student_words;
  std::vector<std::string> positive_cues;
  std::vector<std::string> negative_cues;
};

struct SynthConfig {
  int n_samples = 5000;
  int num_classes = 3;
  double wide_strength = 1.0;
  double text_strength = 1.0;
  double noise = 0.35;
  double coupling = 0.27;
  double text_scale = 2.0;
  int exchanges = 4;
  double latency_base = 1.5;
  double latency_slope = 0.5;
  // Held-out draws used by the Bayes oracle; 0 means n_samples.
  int oracle_draws = 0;
  SynthVocab vocab;
};

SynthVocab DefaultSynthVocab();
// "default" (alias "marginal-0.78"): K = 2, both marginals near 0.78 and the
// joint near 0.93. "three-class": same signal with K = 3. "null": no signal.
SynthConfig SynthPreset(std::string_view name);
std::vector<std::string> SynthPresetNames();
// Applies the keys present in `j` on top of `base`.
SynthConfig SynthConfigFromJson(const nlohmann::json &j, SynthConfig base);
nlohmann::json SynthConfigToJson(const SynthConfig &cfg);

struct BayesReport {
  double joint = 0.0;      // classify from (a, q)
  double wide_only = 0.0;  // classify from a
  double text_only = 0.0;  // classify from q
  int draws = 0;
  int num_classes = 0;
  std::vector<double> thresholds;
};

nlohmann::json BayesReportToJson(const BayesReport &r);

struct SynthResult {
  Dataset dataset;
  BayesReport bayes;
};

SynthResult GenerateSynthetic(const SynthConfig &cfg, uint64_t seed);

// The generative rule exposed for tests and the Bayes oracle.
class SynthOracle {
 public:
  explicit SynthOracle(const SynthConfig &cfg);

  const std::vector<double> &thresholds() const { return thresholds_; }
  int Quantize(double b) const;
  int Label(double a, int q, double eps) const;
  // Posterior-argmax rules.
  int PredictJoint(double a, int q) const;
  int PredictWide(double a) const;
  int PredictText(int q) const;

 private:
  double Score(double a, int q) const;
  double ClassProb(int k, double score) const;
  double QuantProb(int q, double a) const;
  double ScoreCdf(double t) const;

  SynthConfig cfg_;
  int cap_;
  std::vector<double> thresholds_;
  std::vector<int> text_rule_;  // indexed by q + cap
};

}  // namespace wdj

#endif  // WDJ_CORPUS_H_
