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

#ifndef WDJ_ERROR_H_
#define WDJ_ERROR_H_

#include <stdexcept>
#include <string>
#include <string_view>

namespace wdj {

// Every failure raised by the library carries one of these kinds. The CLI
// maps each kind to a distinct exit status.
enum class ErrorKind {
  kIo,
  kParse,
  kValidation,
  kEmptyDataset,
  kConfig,
  kShape,
  kNumeric,
  kEmptySequence,
  kLabel,
  kData,
  kMissingEmbedding,
  kCompatibility,
  kClassMismatch,
  kUnsupportedFormat,
  kCorruption,
  kTrainingDiverged,
};

std::string_view ErrorKindName(ErrorKind kind);

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string &message)
      : std::runtime_error(message), kind_(kind) {}

  ErrorKind kind() const { return kind_; }

 private:
  ErrorKind kind_;
};

[[noreturn]] inline void Fail(ErrorKind kind, const std::string &message) {
  throw Error(kind, message);
}

}  // namespace wdj

#endif  // WDJ_ERROR_H_
