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

#ifndef MEMAUDIT_CORPUS_HPP_
#define MEMAUDIT_CORPUS_HPP_

// Article ingestion, paywall splitting, sentence extraction and
// date-window sampling.

#include <unistd.h>

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <unordered_set>
#include <utility>
#include <vector>

#include <json.hpp>

#include "memaudit/error.hpp"
#include "memaudit/random.hpp"
#include "memaudit/unicode.hpp"

namespace memaudit {

// Calendar date at day precision, serialized as YYYY-MM-DD.
class Date {
 public:
  Date() = default;
  explicit Date(std::chrono::year_month_day ymd) : ymd_(ymd) {}
  Date(int y, unsigned m, unsigned d)
      : ymd_(std::chrono::year{y}, std::chrono::month{m}, std::chrono::day{d}) {}

  static Date Parse(std::string_view s) {
    int y = 0;
    unsigned m = 0, d = 0;
    char tail = 0;
    const std::string buf(s);
    if (s.size() != 10 || s[4] != '-' || s[7] != '-' ||
        std::sscanf(buf.c_str(), "%4d-%2u-%2u%c", &y, &m, &d, &tail) != 3) {
      throw Error(ErrorKind::kParse, "invalid date '" + buf + "', expected YYYY-MM-DD");
    }
    Date date(y, m, d);
    if (!date.ymd_.ok()) {
      throw Error(ErrorKind::kParse, "invalid calendar date '" + buf + "'");
    }
    return date;
  }

  std::string ToString() const {
    char buf[16];
    std::snprintf(buf, sizeof(buf), "%04d-%02u-%02u", static_cast<int>(ymd_.year()),
                  static_cast<unsigned>(ymd_.month()), static_cast<unsigned>(ymd_.day()));
    return buf;
  }

  std::chrono::year_month_day ymd() const { return ymd_; }

  friend auto operator<=>(const Date&, const Date&) = default;
  friend bool operator==(const Date&, const Date&) = default;

 private:
  std::chrono::year_month_day ymd_{std::chrono::year{1970}, std::chrono::January,
                                   std::chrono::day{1}};
};

struct Article {
  std::string id;
  Date date;
  std::string public_part;
  std::string private_part;
  std::map<std::string, std::string> source_meta;
  // Set by ingestion when the record carried unsplit "text".
  bool needs_split = false;
  // Record supplied with an empty private part: the whole article is public.
  bool fully_public = false;

  std::string full_text() const { return public_part + private_part; }
};

struct CorpusFilter {
  std::optional<Date> date_min;
  std::optional<Date> date_max;
  std::optional<size_t> sample_size;
  uint64_t seed = 0;

  void Validate() const {
    if (date_min && date_max && *date_max < *date_min) {
      throw Error(ErrorKind::kInvalidConfig, "date_min is after date_max");
    }
  }
};

enum class SegmenterMode { kAuto, kWhitespace, kPerCharacter, kExternal };

inline std::string_view ToString(SegmenterMode mode) {
  switch (mode) {
    case SegmenterMode::kAuto: return "auto";
    case SegmenterMode::kWhitespace: return "whitespace";
    case SegmenterMode::kPerCharacter: return "per_character";
    case SegmenterMode::kExternal: return "external";
  }
  return "auto";
}

inline SegmenterMode ParseSegmenterMode(std::string_view s) {
  if (s == "auto") return SegmenterMode::kAuto;
  if (s == "whitespace") return SegmenterMode::kWhitespace;
  if (s == "per_character") return SegmenterMode::kPerCharacter;
  if (s == "external") return SegmenterMode::kExternal;
  throw Error(ErrorKind::kInvalidConfig, "unknown segmenter mode '" + std::string(s) + "'");
}

// kAuto resolves per text: per_character when at least half of the
// non-whitespace codepoints are CJK, whitespace otherwise.
struct SegmenterSpec {
  SegmenterMode mode = SegmenterMode::kAuto;
  std::optional<std::string> external_cmd;

  void Validate() const {
    if ((mode == SegmenterMode::kExternal) != external_cmd.has_value()) {
      throw Error(ErrorKind::kInvalidConfig,
                  "external_cmd must be set exactly when the segmenter mode is external");
    }
  }
};

// Half-open byte range of one word in the original string.
struct WordSpan {
  size_t begin = 0;
  size_t end = 0;
};

namespace internal {

inline std::vector<WordSpan> SegmentWhitespace(std::string_view text) {
  std::vector<WordSpan> words;
  const std::u32string cps = unicode::Decode(text);
  const std::vector<size_t> offsets = unicode::CodepointOffsets(text);
  size_t i = 0;
  while (i < cps.size()) {
    while (i < cps.size() && unicode::IsSpace(cps[i])) ++i;
    if (i == cps.size()) break;
    const size_t start = i;
    while (i < cps.size() && !unicode::IsSpace(cps[i])) ++i;
    words.push_back({offsets[start], offsets[i]});
  }
  return words;
}

inline std::vector<WordSpan> SegmentPerCharacter(std::string_view text) {
  std::vector<WordSpan> words;
  const std::u32string cps = unicode::Decode(text);
  const std::vector<size_t> offsets = unicode::CodepointOffsets(text);
  for (size_t i = 0; i < cps.size(); ++i) {
    if (!unicode::IsSpace(cps[i])) words.push_back({offsets[i], offsets[i + 1]});
  }
  return words;
}

// Runs `cmd` with the text on stdin; its stdout is a whitespace-separated
// token stream (e.g. `mecab -Owakati`). Tokens are located in the original
// text in order so that no characters are fabricated.
inline std::vector<WordSpan> SegmentExternal(std::string_view text, const std::string& cmd) {
  namespace fs = std::filesystem;
  static std::atomic<uint64_t> counter{0};
  const fs::path input = fs::temp_directory_path() /
                         ("memaudit-seg-" + std::to_string(::getpid()) + "-" +
                          std::to_string(counter.fetch_add(1)) + ".txt");
  {
    std::ofstream out(input, std::ios::binary);
    out << text;
  }
  const std::string shell = cmd + " < '" + input.string() + "'";
  FILE* pipe = ::popen(shell.c_str(), "r");
  if (pipe == nullptr) {
    fs::remove(input);
    throw Error(ErrorKind::kInvalidConfig, "cannot run segmenter command: " + cmd);
  }
  std::string output;
  char buf[4096];
  size_t n;
  while ((n = std::fread(buf, 1, sizeof(buf), pipe)) > 0) output.append(buf, n);
  const int status = ::pclose(pipe);
  fs::remove(input);
  if (status != 0) {
    throw Error(ErrorKind::kInvalidConfig,
                "segmenter command failed with status " + std::to_string(status));
  }
  std::vector<WordSpan> words;
  size_t cursor = 0;
  for (const WordSpan& token : SegmentWhitespace(output)) {
    const std::string_view tok = std::string_view(output).substr(token.begin, token.end - token.begin);
    if (tok == "EOS") continue;
    const size_t at = text.find(tok, cursor);
    if (at == std::string_view::npos) {
      throw Error(ErrorKind::kParse, "segmenter token '" + std::string(tok) +
                                         "' does not align with the input text");
    }
    words.push_back({at, at + tok.size()});
    cursor = at + tok.size();
  }
  return words;
}

}  // namespace internal

inline SegmenterMode ResolveMode(const SegmenterSpec& seg, std::string_view text) {
  if (seg.mode != SegmenterMode::kAuto) return seg.mode;
  return unicode::CjkRatio(text) >= 0.5 ? SegmenterMode::kPerCharacter
                                        : SegmenterMode::kWhitespace;
}

inline std::vector<WordSpan> Segment(std::string_view text, const SegmenterSpec& seg) {
  seg.Validate();
  switch (ResolveMode(seg, text)) {
    case SegmenterMode::kWhitespace: return internal::SegmentWhitespace(text);
    case SegmenterMode::kPerCharacter: return internal::SegmentPerCharacter(text);
    case SegmenterMode::kExternal: return internal::SegmentExternal(text, *seg.external_cmd);
    case SegmenterMode::kAuto: break;
  }
  throw Error(ErrorKind::kInternal, "unresolved segmenter mode");
}

inline size_t WordCount(std::string_view text, const SegmenterSpec& seg) {
  return Segment(text, seg).size();
}

// Words kept in the public part of an article of `total_words` words.
constexpr size_t PaywallBoundary(size_t total_words) {
  return std::min<size_t>(200, std::max<size_t>(1, total_words / 2));
}

// Public part = the shorter of the first 200 words or half the words
// (never fewer than one). The cut is taken on the original string, so
// public + private reproduces `full_text` byte for byte.
inline std::pair<std::string, std::string> SplitPaywall(std::string_view full_text,
                                                        const SegmenterSpec& seg) {
  const std::vector<WordSpan> words = Segment(full_text, seg);
  if (words.empty()) return {std::string(full_text), std::string()};
  const size_t cut = words[PaywallBoundary(words.size()) - 1].end;
  return {std::string(full_text.substr(0, cut)), std::string(full_text.substr(cut))};
}

struct SentenceOptions {
  // Full-width terminators end a sentence unconditionally; ASCII ones only
  // when followed by whitespace or the end of the text.
  std::vector<char32_t> wide_terminators = {U'。', U'！', U'？'};
  std::vector<char32_t> ascii_terminators = {U'.', U'!', U'?'};
  // A '.' that completes one of these tokens does not end a sentence.
  std::vector<std::string> abbreviations = {"e.g.", "i.e.", "etc.", "vs.", "Mr.",
                                            "Mrs.", "Ms.", "Dr.", "St.", "No."};
};

// Prefix of `text` through the end of its first sentence; closing quotes
// and brackets directly after the terminator stay with the sentence.
inline std::string FirstSentence(std::string_view text, const SentenceOptions& opts = {}) {
  const std::u32string cps = unicode::Decode(text);
  const std::vector<size_t> offsets = unicode::CodepointOffsets(text);
  auto contains = [](const std::vector<char32_t>& set, char32_t c) {
    return std::find(set.begin(), set.end(), c) != set.end();
  };
  auto is_closer = [](char32_t c) {
    return c == U'」' || c == U'』' || c == U'）' || c == U')' || c == U'"' ||
           c == U'\'' || c == U'”' || c == U'’' || c == U'】';
  };
  auto ends_with_abbreviation = [&](size_t i) {
    const std::string_view upto = text.substr(0, offsets[i + 1]);
    for (const std::string& abbr : opts.abbreviations) {
      if (upto.size() < abbr.size() || upto.substr(upto.size() - abbr.size()) != abbr) continue;
      const size_t start = upto.size() - abbr.size();
      if (start == 0) return true;
      const std::u32string before = unicode::Decode(upto.substr(0, start));
      if (unicode::IsSpace(before.back())) return true;
    }
    return false;
  };
  for (size_t i = 0; i < cps.size(); ++i) {
    bool ends = false;
    if (contains(opts.wide_terminators, cps[i])) {
      ends = true;
    } else if (contains(opts.ascii_terminators, cps[i])) {
      size_t j = i + 1;
      while (j < cps.size() && is_closer(cps[j])) ++j;
      ends = (j == cps.size() || unicode::IsSpace(cps[j])) &&
             !(cps[i] == U'.' && ends_with_abbreviation(i));
    }
    if (!ends) continue;
    size_t j = i + 1;
    while (j < cps.size() && is_closer(cps[j])) ++j;
    return std::string(text.substr(0, offsets[j]));
  }
  return std::string(text);
}

// Consecutive sentences; concatenating them reproduces `text`.
inline std::vector<std::string> SplitSentences(std::string_view text,
                                               const SentenceOptions& opts = {}) {
  std::vector<std::string> out;
  while (!text.empty()) {
    out.push_back(FirstSentence(text, opts));
    text.remove_prefix(out.back().size());
  }
  return out;
}

enum class CorpusFormat { kJsonl, kTextDirectory };

namespace internal {

inline Article ArticleFromJson(const nlohmann::json& record, size_t line) {
  auto fail = [line](const std::string& what) {
    return Error(ErrorKind::kParse, "line " + std::to_string(line) + ": " + what);
  };
  if (!record.is_object()) throw fail("record is not a JSON object");
  auto string_field = [&](const char* key) -> std::optional<std::string> {
    auto it = record.find(key);
    if (it == record.end()) return std::nullopt;
    if (!it->is_string()) throw fail(std::string("field \"") + key + "\" must be a string");
    return it->get<std::string>();
  };
  Article a;
  const auto id = string_field("id");
  if (!id || id->empty()) throw fail("missing \"id\"");
  a.id = *id;
  const auto date = string_field("date");
  if (!date) throw fail("missing \"date\"");
  try {
    a.date = Date::Parse(*date);
  } catch (const Error& e) {
    throw fail(e.what());
  }
  const auto pub = string_field("public");
  const auto priv = string_field("private");
  const auto text = string_field("text");
  if (pub) {
    if (pub->empty()) throw fail("\"public\" must be non-empty");
    a.public_part = *pub;
    a.private_part = priv.value_or("");
    a.fully_public = a.private_part.empty();
  } else if (text) {
    if (text->empty()) throw fail("\"text\" must be non-empty");
    a.public_part = *text;
    a.needs_split = true;
  } else {
    throw fail("record needs either \"public\"/\"private\" or \"text\"");
  }
  static const std::set<std::string> kKnown = {"id", "date", "public", "private", "text"};
  for (const auto& [key, value] : record.items()) {
    if (kKnown.count(key)) continue;
    a.source_meta[key] = value.is_string() ? value.get<std::string>() : value.dump();
  }
  return a;
}

}  // namespace internal

inline std::vector<Article> ParseJsonl(std::istream& in) {
  std::vector<Article> articles;
  std::unordered_set<std::string> seen;
  std::string line;
  size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    nlohmann::json record;
    try {
      record = nlohmann::json::parse(line);
    } catch (const nlohmann::json::parse_error& e) {
      throw Error(ErrorKind::kParse, "line " + std::to_string(line_no) + ": " + e.what());
    }
    Article a = internal::ArticleFromJson(record, line_no);
    if (!seen.insert(a.id).second) {
      throw Error(ErrorKind::kParse,
                  "line " + std::to_string(line_no) + ": duplicate id '" + a.id + "'");
    }
    articles.push_back(std::move(a));
  }
  return articles;
}

// Text directories hold one `<id>.txt` per article; the first line is the
// publication date (YYYY-MM-DD), the rest is the unsplit article text.
// Files are read in lexicographic order.
inline std::vector<Article> ReadTextDirectory(const std::filesystem::path& dir) {
  std::vector<std::filesystem::path> files;
  for (const auto& entry : std::filesystem::directory_iterator(dir)) {
    if (entry.is_regular_file() && entry.path().extension() == ".txt") files.push_back(entry.path());
  }
  std::sort(files.begin(), files.end());
  std::vector<Article> articles;
  for (const auto& file : files) {
    std::ifstream in(file, std::ios::binary);
    std::string date_line;
    std::getline(in, date_line);
    if (!date_line.empty() && date_line.back() == '\r') date_line.pop_back();
    std::stringstream rest;
    rest << in.rdbuf();
    Article a;
    a.id = file.stem().string();
    try {
      a.date = Date::Parse(date_line);
    } catch (const Error& e) {
      throw Error(ErrorKind::kParse, file.string() + ":1: " + e.what());
    }
    a.public_part = rest.str();
    if (a.public_part.empty()) throw Error(ErrorKind::kParse, file.string() + ": empty article");
    a.needs_split = true;
    articles.push_back(std::move(a));
  }
  return articles;
}

// Reads a corpus. Articles given as unsplit text come back with the full
// text in public_part and needs_split set; see ApplyPaywallSplit.
inline std::vector<Article> Ingest(const std::filesystem::path& path, CorpusFormat format) {
  if (!std::filesystem::exists(path)) {
    throw Error(ErrorKind::kMissingInput, "corpus not found: " + path.string());
  }
  if (format == CorpusFormat::kTextDirectory) return ReadTextDirectory(path);
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::kMissingInput, "cannot open corpus: " + path.string());
  return ParseJsonl(in);
}

inline void ApplyPaywallSplit(std::vector<Article>& articles, const SegmenterSpec& seg) {
  for (Article& a : articles) {
    if (!a.needs_split) continue;
    auto [pub, priv] = SplitPaywall(a.public_part, seg);
    a.public_part = std::move(pub);
    a.private_part = std::move(priv);
    a.needs_split = false;
  }
}

inline nlohmann::json ToJson(const Article& a) {
  nlohmann::json j = nlohmann::json::object();
  for (const auto& [key, value] : a.source_meta) j[key] = value;
  j["id"] = a.id;
  j["date"] = a.date.ToString();
  if (a.needs_split) {
    j["text"] = a.public_part;
  } else {
    j["public"] = a.public_part;
    j["private"] = a.private_part;
  }
  return j;
}

inline void WriteJsonl(std::ostream& out, const std::vector<Article>& articles) {
  for (const Article& a : articles) out << ToJson(a).dump() << '\n';
}

// Date-window filter, then a seeded uniform sample without replacement
// (partial Fisher-Yates over SplitMix64). Output is sorted by id.
inline std::vector<Article> FilterSample(const std::vector<Article>& articles,
                                         const CorpusFilter& filter) {
  filter.Validate();
  std::vector<const Article*> pool;
  for (const Article& a : articles) {
    if (filter.date_min && a.date < *filter.date_min) continue;
    if (filter.date_max && *filter.date_max < a.date) continue;
    pool.push_back(&a);
  }
  // Sampling runs over id order so the result does not depend on input order.
  std::sort(pool.begin(), pool.end(),
            [](const Article* x, const Article* y) { return x->id < y->id; });
  size_t take = pool.size();
  if (filter.sample_size) take = std::min(take, *filter.sample_size);
  SplitMix64 rng(filter.seed);
  for (size_t i = 0; i < take && take < pool.size(); ++i) {
    const size_t j = i + static_cast<size_t>(rng.Below(pool.size() - i));
    std::swap(pool[i], pool[j]);
  }
  pool.resize(take);
  std::sort(pool.begin(), pool.end(),
            [](const Article* x, const Article* y) { return x->id < y->id; });
  std::vector<Article> out;
  out.reserve(take);
  for (const Article* a : pool) out.push_back(*a);
  return out;
}

}  // namespace memaudit

#endif  // MEMAUDIT_CORPUS_HPP_
