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

#include "wdj/error.h"

namespace wdj {

std::string_view ErrorKindName(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::kIo: return "io";
    case ErrorKind::kParse: return "parse";
    case ErrorKind::kValidation: return "validation";
    case ErrorKind::kEmptyDataset: return "empty_dataset";
    case ErrorKind::kConfig: return "config";
    case ErrorKind::kShape: return "shape";
    case ErrorKind::kNumeric: return "numeric";
    case ErrorKind::kEmptySequence: return "empty_sequence";
    case ErrorKind::kLabel: return "label";
    case ErrorKind::kData: return "data";
    case ErrorKind::kMissingEmbedding: return "missing_embedding";
    case ErrorKind::kCompatibility: return "compatibility";
    case ErrorKind::kClassMismatch: return "class_mismatch";
    case ErrorKind::kUnsupportedFormat: return "unsupported_format";
    case ErrorKind::kCorruption: return "corruption";
    case ErrorKind::kTrainingDiverged: return "training_diverged";
  }
  return "unknown";
}

}  // namespace wdj
