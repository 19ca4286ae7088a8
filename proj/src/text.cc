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

#include "wdj/text.h"

namespace wdj {

std::u32string DecodeUtf8(std::string_view s) {
  std::u32string out;
  out.reserve(s.size());
  size_t i = 0;
  while (i < s.size()) {
    const unsigned char c = static_cast<unsigned char>(s[i]);
    size_t len = 0;
    char32_t cp = 0;
    if (c < 0x80) {
      len = 1;
      cp = c;
    } else if ((c >> 5) == 0x6) {
      len = 2;
      cp = c & 0x1f;
    } else if ((c >> 4) == 0xe) {
      len = 3;
      cp = c & 0x0f;
    } else if ((c >> 3) == 0x1e) {
      len = 4;
      cp = c & 0x07;
    }
    bool ok = len > 0 && i + len <= s.size();
    for (size_t k = 1; ok && k < len; ++k) {
      const unsigned char cc = static_cast<unsigned char>(s[i + k]);
      if ((cc >> 6) != 0x2) {
        ok = false;
      } else {
        cp = (cp << 6) | (cc & 0x3f);
      }
    }
    if (!ok) {
      out.push_back(U'�');
      ++i;
      continue;
    }
    out.push_back(cp);
    i += len;
  }
  return out;
}

void AppendUtf8(char32_t cp, std::string &out) {
  if (cp < 0x80) {
    out.push_back(static_cast<char>(cp));
  } else if (cp < 0x800) {
    out.push_back(static_cast<char>(0xc0 | (cp >> 6)));
    out.push_back(static_cast<char>(0x80 | (cp & 0x3f)));
  } else if (cp < 0x10000) {
    out.push_back(static_cast<char>(0xe0 | (cp >> 12)));
    out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3f)));
    out.push_back(static_cast<char>(0x80 | (cp & 0x3f)));
  } else {
    out.push_back(static_cast<char>(0xf0 | (cp >> 18)));
    out.push_back(static_cast<char>(0x80 | ((cp >> 12) & 0x3f)));
    out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3f)));
    out.push_back(static_cast<char>(0x80 | (cp & 0x3f)));
  }
}

bool IsCjk(char32_t cp) {
  return (cp >= 0x4e00 && cp <= 0x9fff) ||    // unified ideographs
         (cp >= 0x3400 && cp <= 0x4dbf) ||    // extension A
         (cp >= 0x20000 && cp <= 0x2ebef) ||  // extensions B-F
         (cp >= 0xf900 && cp <= 0xfaff) ||    // compatibility ideographs
         (cp >= 0x3040 && cp <= 0x30ff) ||    // kana
         (cp >= 0xac00 && cp <= 0xd7af);      // hangul syllables
}

bool IsSeparator(char32_t cp) {
  if (cp < 0x80) {
    // ASCII: everything but letters and digits separates tokens.
    return !((cp >= 'a' && cp <= 'z') || (cp >= 'A' && cp <= 'Z') ||
             (cp >= '0' && cp <= '9'));
  }
  return (cp >= 0x80 && cp <= 0xbf) ||      // Latin-1 controls and symbols
         cp == 0xd7 || cp == 0xf7 ||        // multiplication, division
         (cp >= 0x2000 && cp <= 0x206f) ||  // general punctuation, spaces
         (cp >= 0x2190 && cp <= 0x23ff) ||  // arrows, math operators
         (cp >= 0x3000 && cp <= 0x303f) ||  // CJK symbols and punctuation
         (cp >= 0xfe30 && cp <= 0xfe4f) ||  // CJK compatibility forms
         (cp >= 0xff00 && cp <= 0xff0f) ||  // fullwidth punctuation
         (cp >= 0xff1a && cp <= 0xff20) || (cp >= 0xff3b && cp <= 0xff40) ||
         (cp >= 0xff5b && cp <= 0xff65) || cp == 0xfeff;
}

std::vector<std::string> Tokenize(std::string_view text) {
  std::vector<std::string> tokens;
  std::string current;
  auto flush = [&] {
    if (!current.empty()) tokens.push_back(std::move(current));
    current.clear();
  };
  for (char32_t cp : DecodeUtf8(text)) {
    if (IsSeparator(cp)) {
      flush();
    } else if (IsCjk(cp)) {
      flush();
      AppendUtf8(cp, current);
      flush();
    } else {
      if (cp >= 'A' && cp <= 'Z') cp = cp - 'A' + 'a';
      AppendUtf8(cp, current);
    }
  }
  flush();
  return tokens;
}

std::string_view TrimWhitespace(std::string_view s) {
  auto is_ws = [](char c) {
    return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v';
  };
  while (!s.empty() && is_ws(s.front())) s.remove_prefix(1);
  while (!s.empty() && is_ws(s.back())) s.remove_suffix(1);
  return s;
}

}  // namespace wdj
