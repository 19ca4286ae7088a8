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

#ifndef WDJ_RNG_H_
#define WDJ_RNG_H_

#include <cstdint>
#include <random>
#include <span>
#include <string_view>

namespace wdj {

// Seeded pseudo-random source. The engine is std::mt19937_64, whose output
// sequence is fixed by the standard; the distributions below are written out
// by hand because the std:: distributions differ between library vendors.
class Rng {
 public:
  static constexpr std::string_view kAlgorithm = "mt19937_64";

  explicit Rng(uint64_t seed) : seed_(seed), engine_(seed) {}

  uint64_t seed() const { return seed_; }
  uint64_t position() const { return position_; }

  uint64_t NextU64() {
    ++position_;
    return engine_();
  }

  // Uniform in [0, 1) with 53 bits of resolution.
  double Uniform() { return static_cast<double>(NextU64() >> 11) * 0x1.0p-53; }

  double Uniform(double lo, double hi) { return lo + (hi - lo) * Uniform(); }

  // Uniform integer in [0, n). Rejection sampling keeps it unbiased.
  uint64_t Below(uint64_t n);

  // Uniform integer in [lo, hi].
  int64_t Between(int64_t lo, int64_t hi) {
    return lo + static_cast<int64_t>(Below(static_cast<uint64_t>(hi - lo) + 1));
  }

  // Standard normal via Box-Muller; the second variate is cached.
  double Normal();
  double Normal(double mean, double stddev) { return mean + stddev * Normal(); }

  bool Bernoulli(double p) { return Uniform() < p; }

  template <typename T>
  void Shuffle(std::span<T> items) {
    for (size_t i = items.size(); i > 1; --i) {
      size_t j = static_cast<size_t>(Below(i));
      std::swap(items[i - 1], items[j]);
    }
  }

  // Derives an independent child stream; used so that adding draws in one
  // stage never perturbs another stage.
  Rng Fork(uint64_t stream_id);

 private:
  uint64_t seed_;
  std::mt19937_64 engine_;
  uint64_t position_ = 0;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace wdj

#endif  // WDJ_RNG_H_
