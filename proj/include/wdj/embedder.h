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

// Sentence embeddings for the deep path. Two frozen back-ends:
//
//  * HashedNgram: character n-grams (code points, sizes 1..3 by default)
//    hashed with FNV-1a-64 over (salt as 8 little-endian bytes, n-gram UTF-8
//    bytes); bin = hash % dim, sign = top bit set ? -1 : +1. The summed
//    vector is L2-normalized, so its norm is exactly 0 or 1.
//  * PretrainedTable: exact-text lookup in a TSV of precomputed vectors
//    (text, then dim tab-separated reals per line).
//
// EmbedSample appends a speaker indicator, teacher = (1, 0), student = (0, 1).

#ifndef WDJ_EMBEDDER_H_
#define WDJ_EMBEDDER_H_

#include <cstdint>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "json.hpp"
#include "wdj/corpus.h"
#include "wdj/tensor.h"

namespace wdj {

enum class EmbedderKind { kHashedNgram, kPretrainedTable };

struct EmbedderSpec {
  EmbedderKind kind = EmbedderKind::kHashedNgram;
  int dim = 64;
  std::vector<int> ngram_sizes = {1, 2, 3};
  uint64_t salt = 0x5eed;
  std::string table_path;

  void Validate() const;
  bool operator==(const EmbedderSpec &) const = default;
};

nlohmann::json EmbedderSpecToJson(const EmbedderSpec &spec);
EmbedderSpec EmbedderSpecFromJson(const nlohmann::json &j);

uint64_t Fnv1a64(uint64_t salt, std::string_view bytes);

std::vector<double> HashedNgramEmbedding(std::string_view text, const EmbedderSpec &spec);

class SentenceEmbedder {
 public:
  explicit SentenceEmbedder(EmbedderSpec spec);

  const EmbedderSpec &spec() const { return spec_; }
  size_t output_dim() const { return static_cast<size_t>(spec_.dim) + 2; }

  std::vector<double> Embed(std::string_view text) const;
  // [n x (dim + 2)] in time order.
  Tensor EmbedSample(const QuestionSample &sample) const;

 private:
  EmbedderSpec spec_;
  std::unordered_map<std::string, std::vector<double>> table_;
};

}  // namespace wdj

#endif  // WDJ_EMBEDDER_H_
