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

#include <gtest/gtest.h>

#include <string>

#include "memaudit/csv.hpp"
#include "memaudit/digest.hpp"
#include "memaudit/random.hpp"
#include "memaudit/unicode.hpp"

namespace memaudit {
namespace {

TEST(UnicodeTest, DecodeEncodeRoundTrip) {
  const std::string s = "日経ABC（COP26）😀";
  const std::u32string cps = unicode::Decode(s);
  EXPECT_EQ(cps.size(), 13u);
  EXPECT_EQ(cps[0], U'日');
  EXPECT_EQ(cps.back(), U'\U0001F600');
  EXPECT_EQ(unicode::Encode(cps), s);
  EXPECT_EQ(unicode::Length(s), 13u);
}

TEST(UnicodeTest, InvalidBytesBecomeReplacementCharacters) {
  const std::u32string cps = unicode::Decode(std::string("a\xff" "b", 3));
  ASSERT_EQ(cps.size(), 3u);
  EXPECT_EQ(cps[1], U'\uFFFD');
}

TEST(UnicodeTest, CodepointOffsetsEndWithSize) {
  const std::string s = "aあb";
  const auto offsets = unicode::CodepointOffsets(s);
  ASSERT_EQ(offsets.size(), 4u);
  EXPECT_EQ(offsets[0], 0u);
  EXPECT_EQ(offsets[1], 1u);
  EXPECT_EQ(offsets[2], 4u);
  EXPECT_EQ(offsets[3], s.size());
}

TEST(UnicodeTest, NfkcFoldsWidthVariants) {
  EXPECT_EQ(unicode::NormalizeNfkc("（COP26）"), "(COP26)");
  EXPECT_EQ(unicode::NormalizeNfkc("ｱｲｳ①"), "アイウ1");
  EXPECT_EQ(unicode::NormalizeNfkc("abc"), "abc");
  EXPECT_EQ(unicode::NormalizeNfkc(""), "");
}

TEST(UnicodeTest, CjkRatio) {
  EXPECT_DOUBLE_EQ(unicode::CjkRatio("日本語"), 1.0);
  EXPECT_DOUBLE_EQ(unicode::CjkRatio("abc"), 0.0);
  EXPECT_DOUBLE_EQ(unicode::CjkRatio("ab日本"), 0.5);
  EXPECT_DOUBLE_EQ(unicode::CjkRatio(""), 0.0);
  EXPECT_TRUE(unicode::IsCjk(U'ア'));
  EXPECT_TRUE(unicode::IsCjk(U'の'));
  EXPECT_FALSE(unicode::IsCjk(U'A'));
}

TEST(UnicodeTest, IdeographicSpaceIsWhitespace) {
  EXPECT_TRUE(unicode::IsSpace(U'　'));
  EXPECT_TRUE(unicode::IsSpace(U'\n'));
  EXPECT_FALSE(unicode::IsSpace(U'あ'));
}

// Reference outputs from an independent Python implementation.
TEST(SplitMix64Test, MatchesReferenceSequence) {
  SplitMix64 zero(0);
  EXPECT_EQ(zero.Next(), 0xe220a8397b1dcdafULL);
  EXPECT_EQ(zero.Next(), 0x6e789e6aa1b965f4ULL);
  EXPECT_EQ(zero.Next(), 0x06c45d188009454fULL);
  SplitMix64 answer(42);
  EXPECT_EQ(answer.Next(), 0xbdd732262feb6e95ULL);
  EXPECT_EQ(answer.Next(), 0x28efe333b266f103ULL);
}

TEST(SplitMix64Test, BelowStaysInRange) {
  SplitMix64 rng(7);
  for (uint64_t bound : {1ULL, 2ULL, 3ULL, 10ULL, 1000ULL}) {
    for (int i = 0; i < 1000; ++i) EXPECT_LT(rng.Below(bound), bound);
  }
  for (int i = 0; i < 1000; ++i) {
    const double u = rng.Uniform();
    EXPECT_GE(u, 0.0);
    EXPECT_LT(u, 1.0);
  }
}

TEST(DigestTest, KnownSha256) {
  EXPECT_EQ(Sha256Hex("abc"), "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
  EXPECT_EQ(Sha256Hex(""), "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
}

TEST(CsvTest, QuotesOnlyWhenNeeded) {
  EXPECT_EQ(csv::Field("plain"), "plain");
  EXPECT_EQ(csv::Field("a,b"), "\"a,b\"");
  EXPECT_EQ(csv::Field("say \"hi\""), "\"say \"\"hi\"\"\"");
}

TEST(CsvTest, SplitLineUndoesQuoting) {
  const auto fields = csv::SplitLine("x,\"a,b\",\"q\"\"q\",");
  ASSERT_EQ(fields.size(), 4u);
  EXPECT_EQ(fields[1], "a,b");
  EXPECT_EQ(fields[2], "q\"q");
  EXPECT_EQ(fields[3], "");
  EXPECT_THROW(csv::SplitLine("\"open"), Error);
}

TEST(CsvTest, NumberFormatting) {
  EXPECT_EQ(csv::Fixed(0.2419234, 6), "0.241923");
  EXPECT_EQ(csv::Fixed(0.6049, 2), "0.60");
  EXPECT_EQ(csv::Exact(0.5), "0.5");
  EXPECT_EQ(std::stod(csv::Exact(1.0 / 3.0)), 1.0 / 3.0);
}

}  // namespace
}  // namespace memaudit
