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

#ifndef WDJ_TEXT_H_
#define WDJ_TEXT_H_

#include <string>
#include <string_view>
#include <vector>

namespace wdj {

// Splits on whitespace and punctuation, emits every CJK character as its own
// token and lowercases ASCII letters. Invalid UTF-8 bytes are kept as word
// characters.
std::vector<std::string> Tokenize(std::string_view text);

// Decodes UTF-8 into code points (invalid bytes map to U+FFFD).
std::u32string DecodeUtf8(std::string_view text);
void AppendUtf8(char32_t cp, std::string &out);

bool IsCjk(char32_t cp);
bool IsSeparator(char32_t cp);

std::string_view TrimWhitespace(std::string_view s);

}  // namespace wdj

#endif  // WDJ_TEXT_H_
