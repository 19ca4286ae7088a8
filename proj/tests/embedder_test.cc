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

#include <cmath>
#include <fstream>

#include "doctest.h"
#include "test_util.h"
#include "wdj/embedder.h"

namespace wdj {
namespace {

EmbedderSpec Hashed(int dim) {
  EmbedderSpec s;
  s.dim = dim;
  return s;
}

double Norm(const std::vector<double> &v) {
  double s = 0.0;
  for (double x : v) s += x * x;
  return std::sqrt(s);
}

TEST_CASE("hashed n-grams match the scripted reference") {
  for (const auto &g : testing::Goldens()["embed"]) {
    const auto text = g["text"].get<std::string>();
    INFO("text '" << text << "'");
    const auto want = g["vector"].get<std::vector<double>>();
    const auto got = HashedNgramEmbedding(text, Hashed(g["dim"].get<int>()));
    REQUIRE(got.size() == want.size());
    for (size_t i = 0; i < want.size(); ++i) CHECK(got[i] == want[i]);
  }
}

TEST_CASE("empty text embeds to zero; embedding is a pure function") {
  for (double x : HashedNgramEmbedding("", Hashed(16))) CHECK(x == 0.0);
  CHECK(HashedNgramEmbedding("我会了", Hashed(32)) == HashedNgramEmbedding("我会了", Hashed(32)));
  EmbedderSpec other = Hashed(32);
  other.salt = 7;
  CHECK(HashedNgramEmbedding("我会了", Hashed(32)) != HashedNgramEmbedding("我会了", other));
}

TEST_CASE("hashed output norm is 0 or 1") {
  Dataset ds = GenerateSynthetic(SynthPreset("default"), 3).dataset;
  ds.samples.resize(100);
  for (const auto &s : ds.samples) {
    for (const auto &u : s.utterances) {
      const double n = Norm(HashedNgramEmbedding(u.text, Hashed(64)));
      CHECK((n == 0.0 || std::abs(n - 1.0) < 1e-12));
    }
  }
}

TEST_CASE("embed_sample: speaker columns and time order") {
  SentenceEmbedder emb(Hashed(8));
  auto one = testing::MakeSample("a", 0, {{Speaker::kTeacher, "看这道题", 0, 2}});
  Tensor t = emb.EmbedSample(one);
  CHECK(t.shape() == std::vector<size_t>{1, 10});
  CHECK(t.at(0, 8) == 1.0);
  CHECK(t.at(0, 9) == 0.0);

  const QuestionSample s = testing::FixtureSample();
  QuestionSample shuffled = s;
  std::reverse(shuffled.utterances.begin(), shuffled.utterances.end());
  Tensor m = emb.EmbedSample(shuffled);
  REQUIRE(m.rows() == s.utterances.size());
  for (size_t r = 0; r < m.rows(); ++r) {
    const auto &u = s.utterances[r];  // parsed samples are already time-ordered
    const auto e = HashedNgramEmbedding(u.text, Hashed(8));
    for (size_t c = 0; c < 8; ++c) CHECK(m.at(r, c) == e[c]);
    CHECK(m.at(r, 8) + m.at(r, 9) == 1.0);
    CHECK(m.at(r, 8) == (u.speaker == Speaker::kTeacher ? 1.0 : 0.0));
  }
}

TEST_CASE("pretrained table: lookup and miss") {
  const auto dir = testing::TempDir("embed_table");
  const auto path = dir / "table.tsv";
  {
    std::ofstream out(path);
    out << "看这道题\t0.5\t-0.25\t1\n";
    out << "ok\t1e-3\t2\t3\n";
  }
  EmbedderSpec spec;
  spec.kind = EmbedderKind::kPretrainedTable;
  spec.dim = 3;
  spec.table_path = path.string();
  SentenceEmbedder emb(spec);
  CHECK(emb.Embed("看这道题") == std::vector<double>{0.5, -0.25, 1.0});
  CHECK(emb.Embed("ok") == std::vector<double>{1e-3, 2.0, 3.0});
  CHECK(testing::ErrorOf([&] { emb.Embed("unknown"); }) == ErrorKind::kMissingEmbedding);

  spec.dim = 4;
  CHECK(testing::ErrorOf([&] { SentenceEmbedder bad(spec); }) == ErrorKind::kParse);
  CHECK(testing::ErrorOf([&] { SentenceEmbedder bad(Hashed(0)); }) == ErrorKind::kConfig);
}

TEST_CASE("spec JSON round trip") {
  EmbedderSpec s = Hashed(24);
  s.ngram_sizes = {2, 4};
  s.salt = 99;
  CHECK(EmbedderSpecFromJson(EmbedderSpecToJson(s)) == s);
}

}  // namespace
}  // namespace wdj
