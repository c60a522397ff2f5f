// Copyright 2026 The memaudit Authors.
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

#ifndef MEMAUDIT_UNICODE_HPP_
#define MEMAUDIT_UNICODE_HPP_

// UTF-8 helpers. All character counts in memaudit are Unicode codepoints.

#include <unicode/normalizer2.h>
#include <unicode/uchar.h>
#include <unicode/unistr.h>
#include <unicode/utf8.h>

#include <cstddef>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "memaudit/error.hpp"

namespace memaudit::unicode {

// Decodes UTF-8; ill-formed sequences become U+FFFD.
inline std::u32string Decode(std::string_view utf8) {
  std::u32string out;
  out.reserve(utf8.size());
  const auto* s = reinterpret_cast<const uint8_t*>(utf8.data());
  const auto length = static_cast<int32_t>(utf8.size());
  int32_t i = 0;
  while (i < length) {
    UChar32 c;
    U8_NEXT(s, i, length, c);
    out.push_back(c < 0 ? U'\uFFFD' : static_cast<char32_t>(c));
  }
  return out;
}

inline void Append(std::string& out, char32_t c) {
  uint8_t buf[U8_MAX_LENGTH];
  int32_t n = 0;
  UBool error = false;
  U8_APPEND(buf, n, U8_MAX_LENGTH, static_cast<UChar32>(c), error);
  if (error) {
    U8_APPEND_UNSAFE(buf, n, 0xFFFD);
  }
  out.append(reinterpret_cast<const char*>(buf), static_cast<size_t>(n));
}

inline std::string Encode(std::u32string_view text) {
  std::string out;
  out.reserve(text.size());
  for (char32_t c : text) Append(out, c);
  return out;
}

inline std::string Encode(char32_t c) {
  std::string out;
  Append(out, c);
  return out;
}

inline size_t Length(std::string_view utf8) { return Decode(utf8).size(); }

// Byte offset of every codepoint start, plus a final entry equal to size().
inline std::vector<size_t> CodepointOffsets(std::string_view utf8) {
  std::vector<size_t> offsets;
  const auto* s = reinterpret_cast<const uint8_t*>(utf8.data());
  const auto length = static_cast<int32_t>(utf8.size());
  int32_t i = 0;
  while (i < length) {
    offsets.push_back(static_cast<size_t>(i));
    UChar32 c;
    U8_NEXT(s, i, length, c);
    (void)c;
  }
  offsets.push_back(utf8.size());
  return offsets;
}

inline bool IsSpace(char32_t c) {
  return u_isUWhiteSpace(static_cast<UChar32>(c)) != 0;
}

// Han, kana, CJK punctuation, Hangul and full/half-width forms.
inline bool IsCjk(char32_t c) {
  return (c >= 0x3000 && c <= 0x303F) ||   // CJK symbols and punctuation
         (c >= 0x3040 && c <= 0x30FF) ||   // hiragana, katakana
         (c >= 0x31F0 && c <= 0x31FF) ||   // katakana phonetic extensions
         (c >= 0x3400 && c <= 0x4DBF) ||   // CJK extension A
         (c >= 0x4E00 && c <= 0x9FFF) ||   // CJK unified ideographs
         (c >= 0xAC00 && c <= 0xD7AF) ||   // Hangul syllables
         (c >= 0xF900 && c <= 0xFAFF) ||   // compatibility ideographs
         (c >= 0xFF00 && c <= 0xFFEF) ||   // half/full-width forms
         (c >= 0x20000 && c <= 0x3134F);   // supplementary ideographs
}

// Share of CJK codepoints among the non-whitespace ones.
inline double CjkRatio(std::string_view utf8) {
  size_t total = 0;
  size_t cjk = 0;
  for (char32_t c : Decode(utf8)) {
    if (IsSpace(c)) continue;
    ++total;
    if (IsCjk(c)) ++cjk;
  }
  return total == 0 ? 0.0 : static_cast<double>(cjk) / static_cast<double>(total);
}

// NFKC compatibility normalization; folds full-width ASCII such as
// "（COP26）" to "(COP26)".
inline std::string NormalizeNfkc(std::string_view utf8) {
  UErrorCode status = U_ZERO_ERROR;
  const icu::Normalizer2* nfkc = icu::Normalizer2::getNFKCInstance(status);
  if (U_FAILURE(status)) {
    throw Error(ErrorKind::kInternal,
                std::string("ICU NFKC unavailable: ") + u_errorName(status));
  }
  const icu::UnicodeString source = icu::UnicodeString::fromUTF8(
      icu::StringPiece(utf8.data(), static_cast<int32_t>(utf8.size())));
  const icu::UnicodeString folded = nfkc->normalize(source, status);
  if (U_FAILURE(status)) {
    throw Error(ErrorKind::kInternal,
                std::string("NFKC normalization failed: ") + u_errorName(status));
  }
  std::string out;
  folded.toUTF8String(out);
  return out;
}

}  // namespace memaudit::unicode

#endif  // MEMAUDIT_UNICODE_HPP_
