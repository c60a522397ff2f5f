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

#ifndef MEMAUDIT_DETECTION_HPP_
#define MEMAUDIT_DETECTION_HPP_

// Min-k% Prob membership scores and their evaluation: ROC AUC and the
// true-positive rate at a capped false-positive rate.

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <ostream>
#include <span>
#include <string>
#include <tuple>
#include <vector>

#include "memaudit/backend.hpp"
#include "memaudit/csv.hpp"
#include "memaudit/error.hpp"
#include "memaudit/evalset.hpp"
#include "memaudit/parallel.hpp"

namespace memaudit {

// kLowest averages the least likely tokens (the usual Min-k% Prob);
// kHighest averages the most likely ones.
enum class TokenSelection { kLowest, kHighest };

inline std::string_view ToString(TokenSelection s) {
  return s == TokenSelection::kLowest ? "lowest" : "highest";
}

inline TokenSelection ParseTokenSelection(std::string_view s) {
  if (s == "lowest") return TokenSelection::kLowest;
  if (s == "highest") return TokenSelection::kHighest;
  throw Error(ErrorKind::kInvalidConfig, "unknown token selection '" + std::string(s) + "'");
}

struct MinKConfig {
  double k_percent = 10.0;
  TokenSelection direction = TokenSelection::kLowest;

  void Validate() const {
    if (!(k_percent > 0.0 && k_percent <= 100.0)) {
      throw Error(ErrorKind::kInvalidArgument, "k_percent must be in (0, 100]");
    }
  }
};

// Number of tokens averaged: max(1, floor(k/100 * n)).
inline size_t MinKCount(double k_percent, size_t n) {
  const double m = std::floor(k_percent * static_cast<double>(n) / 100.0);
  return std::max<size_t>(1, static_cast<size_t>(m));
}

inline double MinKProb(std::span<const double> logprobs, const MinKConfig& cfg) {
  cfg.Validate();
  if (logprobs.empty()) throw Error(ErrorKind::kInvalidArgument, "no logprobs to score");
  std::vector<double> sorted(logprobs.begin(), logprobs.end());
  if (cfg.direction == TokenSelection::kLowest) {
    std::sort(sorted.begin(), sorted.end());
  } else {
    std::sort(sorted.begin(), sorted.end(), std::greater<>());
  }
  const size_t m = MinKCount(cfg.k_percent, sorted.size());
  double sum = 0.0;
  for (size_t i = 0; i < m; ++i) sum += sorted[i];
  return sum / static_cast<double>(m);
}

inline double MinKProb(const TokenLogprobs& lp, const MinKConfig& cfg) {
  return MinKProb(std::span<const double>(lp.logprobs), cfg);
}

struct DetectionScore {
  std::string article_id;
  size_t prompt_len = 0;
  Membership label = Membership::kMember;
  double score = 0.0;  // higher means more likely a member
};

namespace internal {

struct ClassCounts {
  uint64_t members = 0;
  uint64_t nonmembers = 0;
};

// Distinct scores in ascending order with per-class counts.
inline std::vector<std::pair<double, ClassCounts>> GroupScores(
    const std::vector<DetectionScore>& scores) {
  ClassCounts total;
  std::vector<std::pair<double, Membership>> sorted;
  sorted.reserve(scores.size());
  for (const DetectionScore& s : scores) {
    if (!std::isfinite(s.score)) {
      throw Error(ErrorKind::kInvalidArgument, "non-finite detection score for " + s.article_id);
    }
    sorted.emplace_back(s.score, s.label);
    (s.label == Membership::kMember ? total.members : total.nonmembers) += 1;
  }
  if (total.members == 0 || total.nonmembers == 0) {
    throw Error(ErrorKind::kInvalidArgument,
                "detection metrics need at least one member and one nonmember");
  }
  std::sort(sorted.begin(), sorted.end(),
            [](const auto& a, const auto& b) { return a.first < b.first; });
  std::vector<std::pair<double, ClassCounts>> groups;
  for (const auto& [score, label] : sorted) {
    if (groups.empty() || groups.back().first != score) groups.push_back({score, {}});
    (label == Membership::kMember ? groups.back().second.members
                                  : groups.back().second.nonmembers) += 1;
  }
  return groups;
}

}  // namespace internal

// P(member score > nonmember score) with ties counted as 1/2, computed
// from integer pair counts.
inline double Auc(const std::vector<DetectionScore>& scores) {
  const auto groups = internal::GroupScores(scores);
  uint64_t members = 0, nonmembers = 0;
  for (const auto& [score, c] : groups) {
    members += c.members;
    nonmembers += c.nonmembers;
  }
  // Twice the Mann-Whitney U statistic.
  uint64_t twice_wins = 0;
  uint64_t nonmembers_below = 0;
  for (const auto& [score, c] : groups) {
    twice_wins += 2 * c.members * nonmembers_below + c.members * c.nonmembers;
    nonmembers_below += c.nonmembers;
  }
  return static_cast<double>(twice_wins) /
         (2.0 * static_cast<double>(members) * static_cast<double>(nonmembers));
}

// Highest TPR (percent) over thresholds t, predicting member iff
// score >= t, whose FPR does not exceed `fpr_cap`. Candidate thresholds are
// +inf, the midpoints between consecutive distinct scores and -inf.
inline double TprAtFpr(const std::vector<DetectionScore>& scores, double fpr_cap) {
  if (!(fpr_cap >= 0.0 && fpr_cap <= 1.0)) {
    throw Error(ErrorKind::kInvalidArgument, "fpr_cap must be in [0, 1]");
  }
  const auto groups = internal::GroupScores(scores);
  uint64_t members = 0, nonmembers = 0;
  for (const auto& [score, c] : groups) {
    members += c.members;
    nonmembers += c.nonmembers;
  }
  // Sweeping from +inf downwards; each distinct score crossed admits its group.
  uint64_t tp = 0, fp = 0;
  double best = 0.0;  // threshold +inf: nothing predicted member
  for (auto it = groups.rbegin(); it != groups.rend(); ++it) {
    tp += it->second.members;
    fp += it->second.nonmembers;
    const double fpr = static_cast<double>(fp) / static_cast<double>(nonmembers);
    if (fpr <= fpr_cap) {
      best = std::max(best, 100.0 * static_cast<double>(tp) / static_cast<double>(members));
    }
  }
  return best;
}

struct GridKey {
  double k_percent = 0.0;
  std::string model;
  size_t prompt_len = 0;
  friend auto operator<=>(const GridKey&, const GridKey&) = default;
  friend bool operator==(const GridKey&, const GridKey&) = default;
};

struct GridCell {
  double auc = 0.0;
  double tpr_at_fpr = 0.0;  // percent
  friend bool operator==(const GridCell&, const GridCell&) = default;
};

struct DetectionGrid {
  TokenSelection direction = TokenSelection::kLowest;
  double fpr_cap = 0.10;
  std::map<GridKey, GridCell> cells;

  std::string method() const { return "min_k_prob_" + std::string(ToString(direction)); }

  std::vector<double> ks() const {
    std::vector<double> out;
    for (const auto& [key, cell] : cells) {
      if (std::find(out.begin(), out.end(), key.k_percent) == out.end()) out.push_back(key.k_percent);
    }
    std::sort(out.begin(), out.end());
    return out;
  }
  std::vector<std::string> models() const {
    std::vector<std::string> out;
    for (const auto& [key, cell] : cells) {
      if (std::find(out.begin(), out.end(), key.model) == out.end()) out.push_back(key.model);
    }
    std::sort(out.begin(), out.end());
    return out;
  }
  std::vector<size_t> lengths() const {
    std::vector<size_t> out;
    for (const auto& [key, cell] : cells) {
      if (std::find(out.begin(), out.end(), key.prompt_len) == out.end()) out.push_back(key.prompt_len);
    }
    std::sort(out.begin(), out.end());
    return out;
  }

  void Merge(const DetectionGrid& other) {
    for (const auto& [key, cell] : other.cells) cells[key] = cell;
  }

  friend bool operator==(const DetectionGrid&, const DetectionGrid&) = default;
};

inline std::string FormatK(double k) {
  if (k == std::floor(k)) return std::to_string(static_cast<long long>(k));
  return csv::Fixed(k, 2);
}

inline void WriteGridCsv(std::ostream& out, const DetectionGrid& grid) {
  out << "method,k,model,prompt_len,auc,tpr_at_10fpr\n";
  for (const auto& [key, cell] : grid.cells) {
    out << grid.method() << ',' << FormatK(key.k_percent) << ',' << csv::Field(key.model) << ','
        << key.prompt_len << ',' << csv::Fixed(cell.auc, 2) << ','
        << csv::Fixed(cell.tpr_at_fpr, 1) << '\n';
  }
}

// One row per (k, model), AUC columns then TPR columns per prompt length.
inline void WriteGridMarkdown(std::ostream& out, const DetectionGrid& grid) {
  const auto lengths = grid.lengths();
  const std::string tpr_name = "TPR@" + FormatK(grid.fpr_cap * 100.0) + "%FPR";
  out << "| method | k | model |";
  for (size_t len : lengths) out << " AUC " << len << " |";
  for (size_t len : lengths) out << ' ' << tpr_name << ' ' << len << " |";
  out << "\n|---|---|---|";
  for (size_t i = 0; i < 2 * lengths.size(); ++i) out << "---:|";
  out << '\n';
  for (double k : grid.ks()) {
    for (const std::string& model : grid.models()) {
      out << "| " << grid.method() << " | " << FormatK(k) << " | " << model << " |";
      for (size_t len : lengths) {
        auto it = grid.cells.find({k, model, len});
        out << ' ' << (it == grid.cells.end() ? "-" : csv::Fixed(it->second.auc, 2)) << " |";
      }
      for (size_t len : lengths) {
        auto it = grid.cells.find({k, model, len});
        out << ' ' << (it == grid.cells.end() ? "-" : csv::Fixed(it->second.tpr_at_fpr, 1))
            << " |";
      }
      out << '\n';
    }
  }
}

struct DetectionRun {
  DetectionGrid grid;
  // Every (example, k) score, in example order then k order.
  std::vector<DetectionScore> scores;
  std::vector<double> score_ks;
  size_t logprob_fetches = 0;
};

// Fetches logprobs once per example, scores it for every k, and fills one
// grid cell per (k, prompt length) for this backend.
inline DetectionRun RunDetection(Backend& backend, const std::vector<DetectExample>& examples,
                                 const std::vector<double>& k_list,
                                 const std::vector<size_t>& lengths,
                                 TokenSelection direction = TokenSelection::kLowest,
                                 double fpr_cap = 0.10, size_t jobs = 1) {
  if (k_list.empty()) throw Error(ErrorKind::kInvalidArgument, "k_list is empty");
  for (double k : k_list) MinKConfig{k, direction}.Validate();
  std::vector<TokenLogprobs> logprobs(examples.size());
  std::atomic<size_t> fetches{0};
  ParallelFor(examples.size(), jobs, [&](size_t i) {
    try {
      logprobs[i] = ScoreLogprobs(backend, examples[i].text);
      ++fetches;
    } catch (const Error& e) {
      throw Error(e.kind(), "article '" + examples[i].article_id + "' (len " +
                                std::to_string(examples[i].prompt_len) + "): " + e.what());
    }
  });

  DetectionRun run;
  run.grid.direction = direction;
  run.grid.fpr_cap = fpr_cap;
  run.score_ks = k_list;
  run.logprob_fetches = fetches.load();
  const std::string& model = backend.descriptor().name;
  for (double k : k_list) {
    std::map<size_t, std::vector<DetectionScore>> by_length;
    for (size_t len : lengths) by_length[len];
    for (size_t i = 0; i < examples.size(); ++i) {
      const DetectExample& e = examples[i];
      DetectionScore s{e.article_id, e.prompt_len, e.label, MinKProb(logprobs[i], {k, direction})};
      run.scores.push_back(s);
      if (auto it = by_length.find(e.prompt_len); it != by_length.end()) it->second.push_back(s);
    }
    for (const auto& [len, scores] : by_length) {
      try {
        run.grid.cells[{k, model, len}] = {Auc(scores), TprAtFpr(scores, fpr_cap)};
      } catch (const Error& e) {
        throw Error(e.kind(), "prompt length " + std::to_string(len) + ": " + e.what());
      }
    }
  }
  return run;
}

}  // namespace memaudit

#endif  // MEMAUDIT_DETECTION_HPP_
