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

#ifndef MEMAUDIT_EVALSET_HPP_
#define MEMAUDIT_EVALSET_HPP_

#include <algorithm>
#include <istream>
#include <map>
#include <ostream>
#include <string>
#include <unordered_set>
#include <utility>
#include <vector>

#include <json.hpp>

#include "memaudit/corpus.hpp"
#include "memaudit/error.hpp"
#include "memaudit/unicode.hpp"

namespace memaudit {

// Prompt = public part, reference = first sentence of the private part.
struct QuantExample {
  std::string article_id;
  std::string prompt;
  std::string reference;
  size_t prompt_len_chars = 0;
};

struct QuantSet {
  std::vector<QuantExample> examples;
  size_t skipped_empty_private = 0;
};

inline QuantSet BuildQuantSet(const std::vector<Article>& articles,
                              const SentenceOptions& sentences = {}) {
  QuantSet set;
  for (const Article& a : articles) {
    if (a.private_part.empty() || a.public_part.empty()) {
      ++set.skipped_empty_private;
      continue;
    }
    set.examples.push_back({a.id, a.public_part, FirstSentence(a.private_part, sentences),
                            unicode::Length(a.public_part)});
  }
  return set;
}

enum class Membership { kMember, kNonmember };

inline std::string_view ToString(Membership m) {
  return m == Membership::kMember ? "member" : "nonmember";
}

inline Membership ParseMembership(std::string_view s) {
  if (s == "member") return Membership::kMember;
  if (s == "nonmember") return Membership::kNonmember;
  throw Error(ErrorKind::kParse, "unknown label '" + std::string(s) + "'");
}

// Head-anchored prefix of an article holding exactly prompt_len words.
struct DetectExample {
  std::string article_id;
  std::string text;
  size_t prompt_len = 0;
  Membership label = Membership::kMember;
};

struct LabelCounts {
  size_t members = 0;
  size_t nonmembers = 0;
  friend bool operator==(const LabelCounts&, const LabelCounts&) = default;
};

// Survivors per prompt length after dropping articles that are too short.
using DetectSetStats = std::map<size_t, LabelCounts>;

struct DetectSet {
  std::vector<DetectExample> examples;
  DetectSetStats stats;
};

namespace internal {

inline std::pair<Date, Date> DateRange(const std::vector<Article>& articles) {
  auto [lo, hi] = std::minmax_element(
      articles.begin(), articles.end(),
      [](const Article& x, const Article& y) { return x.date < y.date; });
  return {lo->date, hi->date};
}

}  // namespace internal

// Truncates every article (public + private) to each prompt length. With
// `allow_overlap` false, member and nonmember publication windows must be
// disjoint and no id may carry both labels.
inline DetectSet BuildDetectSet(const std::vector<Article>& members,
                                const std::vector<Article>& nonmembers,
                                const std::vector<size_t>& lengths, const SegmenterSpec& seg,
                                bool allow_overlap = false) {
  if (lengths.empty()) throw Error(ErrorKind::kInvalidArgument, "no prompt lengths given");
  for (size_t i = 0; i < lengths.size(); ++i) {
    if (lengths[i] == 0 || (i > 0 && lengths[i] <= lengths[i - 1])) {
      throw Error(ErrorKind::kInvalidArgument,
                  "prompt lengths must be positive and strictly increasing");
    }
  }
  std::unordered_set<std::string> member_ids;
  for (const Article& a : members) member_ids.insert(a.id);
  for (const Article& a : nonmembers) {
    if (member_ids.count(a.id)) {
      throw Error(ErrorKind::kLeakage, "article '" + a.id + "' is both member and nonmember");
    }
  }
  if (!allow_overlap && !members.empty() && !nonmembers.empty()) {
    const auto [m_lo, m_hi] = internal::DateRange(members);
    const auto [n_lo, n_hi] = internal::DateRange(nonmembers);
    if (!(m_hi < n_lo) && !(n_hi < m_lo)) {
      throw Error(ErrorKind::kLeakage,
                  "member dates [" + m_lo.ToString() + ", " + m_hi.ToString() +
                      "] overlap nonmember dates [" + n_lo.ToString() + ", " +
                      n_hi.ToString() + "]");
    }
  }

  DetectSet set;
  for (size_t len : lengths) set.stats[len] = {};
  auto add = [&](const Article& a, Membership label) {
    const std::string full = a.full_text();
    const std::vector<WordSpan> words = Segment(full, seg);
    for (size_t len : lengths) {
      if (words.size() < len) break;
      set.examples.push_back({a.id, full.substr(0, words[len - 1].end), len, label});
      LabelCounts& c = set.stats[len];
      (label == Membership::kMember ? c.members : c.nonmembers) += 1;
    }
  };
  for (const Article& a : members) add(a, Membership::kMember);
  for (const Article& a : nonmembers) add(a, Membership::kNonmember);
  return set;
}

inline void WriteQuantJsonl(std::ostream& out, const std::vector<QuantExample>& examples) {
  for (const QuantExample& e : examples) {
    out << nlohmann::json{{"id", e.article_id}, {"prompt", e.prompt}, {"reference", e.reference}}
               .dump()
        << '\n';
  }
}

inline void WriteDetectJsonl(std::ostream& out, const std::vector<DetectExample>& examples) {
  for (const DetectExample& e : examples) {
    out << nlohmann::json{{"id", e.article_id},
                          {"text", e.text},
                          {"len", e.prompt_len},
                          {"label", ToString(e.label)}}
               .dump()
        << '\n';
  }
}

namespace internal {

template <typename Fn>
void ForEachJsonLine(std::istream& in, Fn&& fn) {
  std::string line;
  size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      fn(nlohmann::json::parse(line));
    } catch (const nlohmann::json::exception& e) {
      throw Error(ErrorKind::kParse, "line " + std::to_string(line_no) + ": " + e.what());
    } catch (const Error& e) {
      throw Error(e.kind(), "line " + std::to_string(line_no) + ": " + e.what());
    }
  }
}

}  // namespace internal

inline std::vector<QuantExample> ReadQuantJsonl(std::istream& in) {
  std::vector<QuantExample> out;
  internal::ForEachJsonLine(in, [&](const nlohmann::json& j) {
    QuantExample e;
    e.article_id = j.at("id").get<std::string>();
    e.prompt = j.at("prompt").get<std::string>();
    e.reference = j.at("reference").get<std::string>();
    e.prompt_len_chars = unicode::Length(e.prompt);
    out.push_back(std::move(e));
  });
  return out;
}

inline std::vector<DetectExample> ReadDetectJsonl(std::istream& in) {
  std::vector<DetectExample> out;
  internal::ForEachJsonLine(in, [&](const nlohmann::json& j) {
    DetectExample e;
    e.article_id = j.at("id").get<std::string>();
    e.text = j.at("text").get<std::string>();
    e.prompt_len = j.at("len").get<size_t>();
    e.label = ParseMembership(j.at("label").get<std::string>());
    out.push_back(std::move(e));
  });
  return out;
}

inline DetectSetStats TallyStats(const std::vector<DetectExample>& examples) {
  DetectSetStats stats;
  for (const DetectExample& e : examples) {
    LabelCounts& c = stats[e.prompt_len];
    (e.label == Membership::kMember ? c.members : c.nonmembers) += 1;
  }
  return stats;
}

}  // namespace memaudit

#endif  // MEMAUDIT_EVALSET_HPP_
