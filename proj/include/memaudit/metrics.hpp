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

#ifndef MEMAUDIT_METRICS_HPP_
#define MEMAUDIT_METRICS_HPP_

// Eidetic memorization (forward-matching characters) and approximate
// memorization (normalized Levenshtein similarity), plus their aggregates.

#include <algorithm>
#include <cstddef>
#include <istream>
#include <limits>
#include <numeric>
#include <optional>
#include <ostream>
#include <string>
#include <string_view>
#include <vector>

#include "memaudit/corpus.hpp"
#include "memaudit/csv.hpp"
#include "memaudit/error.hpp"
#include "memaudit/unicode.hpp"

namespace memaudit {

struct ScoringOptions {
  // NFKC width folding before comparison.
  bool normalize = true;
  // Score only the first sentence of the generation.
  bool truncate_generation = false;
  // Levenshtein band; exact whenever the true distance fits in the band.
  std::optional<size_t> levenshtein_band;
};

inline std::string Normalize(std::string_view text, bool enabled = true) {
  return enabled ? unicode::NormalizeNfkc(text) : std::string(text);
}

// Length in codepoints of the longest common prefix.
inline size_t Eidetic(std::u32string_view generated, std::u32string_view reference) {
  const size_t n = std::min(generated.size(), reference.size());
  size_t i = 0;
  while (i < n && generated[i] == reference[i]) ++i;
  return i;
}

inline size_t Eidetic(std::string_view generated, std::string_view reference,
                      const ScoringOptions& opts = {}) {
  return Eidetic(unicode::Decode(Normalize(generated, opts.normalize)),
                 unicode::Decode(Normalize(reference, opts.normalize)));
}

// Unit-cost edit distance over codepoints, two-row DP in O(min(|a|,|b|))
// space. With a band, cells farther than `band` from the diagonal are
// skipped; the result is exact when the distance is at most `band`.
inline size_t Levenshtein(std::u32string_view a, std::u32string_view b,
                          std::optional<size_t> band = std::nullopt) {
  if (a.size() < b.size()) std::swap(a, b);
  const size_t n = a.size();
  const size_t m = b.size();
  if (m == 0) return n;
  constexpr size_t kInf = std::numeric_limits<size_t>::max() / 2;
  if (band && n - m > *band) return n;

  std::vector<size_t> prev(m + 1), cur(m + 1);
  std::iota(prev.begin(), prev.end(), size_t{0});
  for (size_t i = 1; i <= n; ++i) {
    size_t lo = 1, hi = m;
    if (band) {
      lo = i > *band ? i - *band : 1;
      hi = std::min(m, i + *band);
      std::fill(cur.begin(), cur.end(), kInf);
    }
    cur[0] = (!band || i <= *band) ? i : kInf;
    for (size_t j = lo; j <= hi; ++j) {
      const size_t substitute = prev[j - 1] + (a[i - 1] == b[j - 1] ? 0 : 1);
      cur[j] = std::min({prev[j] + 1, cur[j - 1] + 1, substitute});
    }
    std::swap(prev, cur);
  }
  return std::min(prev[m], n);
}

inline size_t Levenshtein(std::string_view a, std::string_view b) {
  return Levenshtein(unicode::Decode(a), unicode::Decode(b));
}

// 1 - distance / max(len). Two empty strings are identical: 1.0.
inline double Approximate(std::u32string_view generated, std::u32string_view reference,
                          std::optional<size_t> band = std::nullopt) {
  const size_t longest = std::max(generated.size(), reference.size());
  if (longest == 0) return 1.0;
  const size_t distance = Levenshtein(generated, reference, band);
  return 1.0 - static_cast<double>(distance) / static_cast<double>(longest);
}

inline double Approximate(std::string_view generated, std::string_view reference,
                          const ScoringOptions& opts = {}) {
  return Approximate(unicode::Decode(Normalize(generated, opts.normalize)),
                     unicode::Decode(Normalize(reference, opts.normalize)),
                     opts.levenshtein_band);
}

struct MemorizationScore {
  std::string article_id;
  size_t eidetic = 0;
  double approximate = 0.0;
  size_t prompt_len_chars = 0;
};

inline MemorizationScore ScoreGeneration(std::string article_id, std::string_view generated,
                                         std::string_view reference, size_t prompt_len_chars,
                                         const ScoringOptions& opts = {}) {
  std::string candidate = opts.truncate_generation ? FirstSentence(generated)
                                                   : std::string(generated);
  const std::u32string g = unicode::Decode(Normalize(candidate, opts.normalize));
  const std::u32string r = unicode::Decode(Normalize(reference, opts.normalize));
  return {std::move(article_id), Eidetic(g, r), Approximate(g, r, opts.levenshtein_band),
          prompt_len_chars};
}

struct AggregateStats {
  size_t eidetic_max = 0;
  double eidetic_avg = 0.0;
  double approx_avg = 0.0;
  double approx_median = 0.0;
  size_t n = 0;
  friend bool operator==(const AggregateStats&, const AggregateStats&) = default;
};

inline double Median(std::vector<double> values) {
  if (values.empty()) throw Error(ErrorKind::kInvalidArgument, "median of an empty list");
  std::sort(values.begin(), values.end());
  const size_t mid = values.size() / 2;
  if (values.size() % 2 == 1) return values[mid];
  return (values[mid - 1] + values[mid]) / 2.0;
}

inline AggregateStats Aggregate(const std::vector<MemorizationScore>& scores) {
  if (scores.empty()) throw Error(ErrorKind::kInvalidArgument, "cannot aggregate zero scores");
  AggregateStats stats;
  stats.n = scores.size();
  // Sums are taken in sorted order so the result is permutation-invariant
  // to the last bit.
  std::vector<double> approx;
  std::vector<size_t> eidetic;
  approx.reserve(scores.size());
  eidetic.reserve(scores.size());
  for (const MemorizationScore& s : scores) {
    approx.push_back(s.approximate);
    eidetic.push_back(s.eidetic);
  }
  std::sort(approx.begin(), approx.end());
  stats.eidetic_max = *std::max_element(eidetic.begin(), eidetic.end());
  const size_t eidetic_sum = std::accumulate(eidetic.begin(), eidetic.end(), size_t{0});
  stats.eidetic_avg = static_cast<double>(eidetic_sum) / static_cast<double>(stats.n);
  stats.approx_avg = std::accumulate(approx.begin(), approx.end(), 0.0) /
                     static_cast<double>(stats.n);
  stats.approx_median = Median(std::move(approx));
  return stats;
}

struct ChunkRow {
  // Prompt-length range (lower, upper]; the first chunk has no lower bound.
  std::optional<size_t> lower_exclusive;
  size_t upper_inclusive = 0;
  double eidetic_avg = 0.0;
  double approx_avg = 0.0;
  size_t n = 0;
  friend bool operator==(const ChunkRow&, const ChunkRow&) = default;
};

// Sorts by prompt length (ties by id) and cuts into `n_chunks` contiguous
// groups of size/n_chunks; the remainder joins the last group.
inline std::vector<ChunkRow> ChunkByPromptLength(std::vector<MemorizationScore> scores,
                                                 size_t n_chunks) {
  if (n_chunks == 0) throw Error(ErrorKind::kInvalidArgument, "n_chunks must be positive");
  if (n_chunks > scores.size()) {
    throw Error(ErrorKind::kInvalidArgument, "more chunks (" + std::to_string(n_chunks) +
                                                 ") than examples (" +
                                                 std::to_string(scores.size()) + ")");
  }
  std::stable_sort(scores.begin(), scores.end(),
                   [](const MemorizationScore& x, const MemorizationScore& y) {
                     if (x.prompt_len_chars != y.prompt_len_chars) {
                       return x.prompt_len_chars < y.prompt_len_chars;
                     }
                     return x.article_id < y.article_id;
                   });
  const size_t base = scores.size() / n_chunks;
  std::vector<ChunkRow> rows;
  std::optional<size_t> lower;
  size_t begin = 0;
  for (size_t c = 0; c < n_chunks; ++c) {
    const size_t end = c + 1 == n_chunks ? scores.size() : begin + base;
    ChunkRow row;
    row.lower_exclusive = lower;
    row.n = end - begin;
    size_t eidetic_sum = 0;
    double approx_sum = 0.0;
    for (size_t i = begin; i < end; ++i) {
      eidetic_sum += scores[i].eidetic;
      approx_sum += scores[i].approximate;
      row.upper_inclusive = std::max(row.upper_inclusive, scores[i].prompt_len_chars);
    }
    row.eidetic_avg = static_cast<double>(eidetic_sum) / static_cast<double>(row.n);
    row.approx_avg = approx_sum / static_cast<double>(row.n);
    lower = row.upper_inclusive;
    rows.push_back(row);
    begin = end;
  }
  return rows;
}

inline void WriteScoresCsv(std::ostream& out, const std::vector<MemorizationScore>& scores) {
  out << "id,eidetic,approximate,prompt_len_chars\n";
  for (const MemorizationScore& s : scores) {
    out << csv::Field(s.article_id) << ',' << s.eidetic << ',' << csv::Exact(s.approximate)
        << ',' << s.prompt_len_chars << '\n';
  }
}

inline std::vector<MemorizationScore> ReadScoresCsv(std::istream& in) {
  std::vector<MemorizationScore> scores;
  std::string line;
  size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line_no == 1 || line.empty()) continue;
    const std::vector<std::string> f = csv::SplitLine(line);
    if (f.size() != 4) {
      throw Error(ErrorKind::kParse, "scores CSV line " + std::to_string(line_no) +
                                         ": expected 4 fields");
    }
    try {
      scores.push_back({f[0], std::stoul(f[1]), std::stod(f[2]), std::stoul(f[3])});
    } catch (const std::logic_error&) {
      throw Error(ErrorKind::kParse,
                  "scores CSV line " + std::to_string(line_no) + ": bad number");
    }
  }
  return scores;
}

}  // namespace memaudit

#endif  // MEMAUDIT_METRICS_HPP_
