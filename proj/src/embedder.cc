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

#include "wdj/embedder.h"

#include <algorithm>
#include <cmath>
#include <fstream>

#include "wdj/error.h"
#include "wdj/text.h"

namespace wdj {

using nlohmann::json;

void EmbedderSpec::Validate() const {
  if (dim < 1) Fail(ErrorKind::kConfig, "embedder dim must be at least 1");
  if (kind == EmbedderKind::kHashedNgram) {
    if (ngram_sizes.empty()) Fail(ErrorKind::kConfig, "embedder needs at least one n-gram size");
    for (int n : ngram_sizes) {
      if (n < 1) Fail(ErrorKind::kConfig, "n-gram sizes must be positive");
    }
  } else if (table_path.empty()) {
    Fail(ErrorKind::kConfig, "pretrained embedder needs table_path");
  }
}

json EmbedderSpecToJson(const EmbedderSpec &s) {
  json j{{"kind", s.kind == EmbedderKind::kHashedNgram ? "hashed_ngram" : "pretrained_table"},
         {"dim", s.dim}};
  if (s.kind == EmbedderKind::kHashedNgram) {
    j["ngram_sizes"] = s.ngram_sizes;
    j["salt"] = s.salt;
  } else {
    j["table_path"] = s.table_path;
  }
  return j;
}

EmbedderSpec EmbedderSpecFromJson(const json &j) {
  EmbedderSpec s;
  try {
    const std::string kind = j.value("kind", std::string("hashed_ngram"));
    if (kind == "hashed_ngram") {
      s.kind = EmbedderKind::kHashedNgram;
    } else if (kind == "pretrained_table") {
      s.kind = EmbedderKind::kPretrainedTable;
    } else {
      Fail(ErrorKind::kConfig, "unknown embedder kind '" + kind + "'");
    }
    s.dim = j.value("dim", s.dim);
    s.ngram_sizes = j.value("ngram_sizes", s.ngram_sizes);
    s.salt = j.value("salt", s.salt);
    s.table_path = j.value("table_path", s.table_path);
  } catch (const json::exception &e) {
    Fail(ErrorKind::kConfig, std::string("embedder spec: ") + e.what());
  }
  s.Validate();
  return s;
}

uint64_t Fnv1a64(uint64_t salt, std::string_view bytes) {
  uint64_t h = 0xcbf29ce484222325ULL;
  auto mix = [&h](unsigned char c) {
    h ^= c;
    h *= 0x100000001b3ULL;
  };
  for (int i = 0; i < 8; ++i) mix(static_cast<unsigned char>(salt >> (8 * i)));
  for (char c : bytes) mix(static_cast<unsigned char>(c));
  return h;
}

std::vector<double> HashedNgramEmbedding(std::string_view text, const EmbedderSpec &spec) {
  const auto dim = static_cast<size_t>(spec.dim);
  std::vector<double> v(dim, 0.0);
  const std::u32string cps = DecodeUtf8(text);
  std::string gram;
  for (int n : spec.ngram_sizes) {
    const auto len = static_cast<size_t>(n);
    for (size_t i = 0; i + len <= cps.size(); ++i) {
      gram.clear();
      for (size_t k = 0; k < len; ++k) AppendUtf8(cps[i + k], gram);
      const uint64_t h = Fnv1a64(spec.salt, gram);
      v[h % dim] += (h >> 63) ? -1.0 : 1.0;
    }
  }
  double norm = 0.0;
  for (double x : v) norm += x * x;
  if (norm > 0.0) {
    norm = std::sqrt(norm);
    for (double &x : v) x /= norm;
  }
  return v;
}

SentenceEmbedder::SentenceEmbedder(EmbedderSpec spec) : spec_(std::move(spec)) {
  spec_.Validate();
  if (spec_.kind != EmbedderKind::kPretrainedTable) return;
  std::ifstream in(spec_.table_path);
  if (!in) Fail(ErrorKind::kIo, "cannot open embedding table " + spec_.table_path);
  std::string line;
  size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const size_t tab = line.find('\t');
    if (tab == std::string::npos) {
      Fail(ErrorKind::kParse, spec_.table_path + ":" + std::to_string(line_no) + ": no vector");
    }
    std::vector<double> vec;
    size_t pos = tab + 1;
    while (pos <= line.size()) {
      size_t next = line.find('\t', pos);
      if (next == std::string::npos) next = line.size();
      const std::string cell = line.substr(pos, next - pos);
      char *end = nullptr;
      const double x = std::strtod(cell.c_str(), &end);
      if (cell.empty() || *end != '\0' || !std::isfinite(x)) {
        Fail(ErrorKind::kParse, spec_.table_path + ":" + std::to_string(line_no) + ": bad real");
      }
      vec.push_back(x);
      pos = next + 1;
    }
    if (vec.size() != static_cast<size_t>(spec_.dim)) {
      Fail(ErrorKind::kParse, spec_.table_path + ":" + std::to_string(line_no) + ": expected " +
                                  std::to_string(spec_.dim) + " values, got " +
                                  std::to_string(vec.size()));
    }
    table_[line.substr(0, tab)] = std::move(vec);
  }
}

std::vector<double> SentenceEmbedder::Embed(std::string_view text) const {
  if (spec_.kind == EmbedderKind::kHashedNgram) return HashedNgramEmbedding(text, spec_);
  auto it = table_.find(std::string(text));
  if (it == table_.end()) {
    Fail(ErrorKind::kMissingEmbedding, "no embedding for sentence '" + std::string(text) + "'");
  }
  return it->second;
}

Tensor SentenceEmbedder::EmbedSample(const QuestionSample &sample) const {
  std::vector<Utterance> utts = sample.utterances;
  SortByTime(utts);
  const size_t d = static_cast<size_t>(spec_.dim);
  Tensor out = Tensor::Zeros(utts.size(), d + 2);
  for (size_t r = 0; r < utts.size(); ++r) {
    const std::vector<double> e = Embed(utts[r].text);
    auto row = out.row(r);
    std::copy(e.begin(), e.end(), row.begin());
    row[d] = utts[r].speaker == Speaker::kTeacher ? 1.0 : 0.0;
    row[d + 1] = utts[r].speaker == Speaker::kStudent ? 1.0 : 0.0;
  }
  return out;
}

}  // namespace wdj
