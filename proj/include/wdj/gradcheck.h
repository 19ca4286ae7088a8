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

// Finite-difference checks of every hand-written adjoint on small seeded
// random instances. Shared by the gradcheck command and the test suites.

#ifndef WDJ_GRADCHECK_H_
#define WDJ_GRADCHECK_H_

#include <cstdint>
#include <string>
#include <vector>

namespace wdj {

inline constexpr double kGradTolerance = 1e-4;

struct GradSuiteEntry {
  std::string name;
  int instances = 0;
  size_t coordinates = 0;
  double max_rel_error = 0.0;
  std::string worst;  // "instance <i> input <j>[<k>]"
  bool passed = false;
};

// Cases: affine, lstm_cell, bilstm (n=4), self_attention (n=3),
// meanpool_mlp (with softmax cross-entropy), fused_wide_deep (2-sample batch).
std::vector<GradSuiteEntry> RunGradientSuite(uint64_t seed = 1, int instances = 10,
                                             double tolerance = kGradTolerance);

}  // namespace wdj

#endif  // WDJ_GRADCHECK_H_
