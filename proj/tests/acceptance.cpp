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

// Acceptance gate: one PASS/FAIL line per criterion; exits nonzero if any
// criterion fails.

#include <sys/wait.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <limits>
#include <set>
#include <string>
#include <vector>

#include "memaudit/memaudit.hpp"
#include "test_util.hpp"

namespace memaudit {
namespace {

using Clock = std::chrono::steady_clock;

double SecondsSince(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

int failures = 0;

void Report(bool pass, const std::string& name, const std::string& detail) {
  std::printf("%s %s: %s\n", pass ? "PASS" : "FAIL", name.c_str(), detail.c_str());
  std::fflush(stdout);
  if (!pass) ++failures;
}

std::string Format(const char* fmt, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof(buf), fmt, args...);
  return buf;
}

// ---- oracles ----

size_t BruteLevenshtein(std::u32string_view a, std::u32string_view b) {
  if (a.empty()) return b.size();
  if (b.empty()) return a.size();
  const size_t cost = a[0] == b[0] ? 0 : 1;
  return std::min({BruteLevenshtein(a.substr(1), b) + 1, BruteLevenshtein(a, b.substr(1)) + 1,
                   BruteLevenshtein(a.substr(1), b.substr(1)) + cost});
}

double PairwiseAuc(const std::vector<DetectionScore>& scores) {
  double wins = 0.0, pairs = 0.0;
  for (const auto& m : scores) {
    if (m.label != Membership::kMember) continue;
    for (const auto& n : scores) {
      if (n.label != Membership::kNonmember) continue;
      pairs += 1.0;
      wins += m.score > n.score ? 1.0 : m.score == n.score ? 0.5 : 0.0;
    }
  }
  return wins / pairs;
}

double ExhaustiveTpr(const std::vector<DetectionScore>& scores, double cap) {
  std::set<double> thresholds = {std::numeric_limits<double>::infinity(),
                                 -std::numeric_limits<double>::infinity()};
  for (const auto& s : scores) thresholds.insert(s.score);
  double best = 0.0;
  for (double t : thresholds) {
    double tp = 0, fp = 0, p = 0, n = 0;
    for (const auto& s : scores) {
      const bool member = s.label == Membership::kMember;
      (member ? p : n) += 1;
      if (s.score >= t) (member ? tp : fp) += 1;
    }
    if (fp / n <= cap) best = std::max(best, 100.0 * tp / p);
  }
  return best;
}

std::u32string RandomString(SplitMix64& rng, size_t max_len, uint64_t alphabet) {
  std::u32string s(rng.Below(max_len + 1), U'a');
  for (char32_t& c : s) c = U'a' + static_cast<char32_t>(rng.Below(alphabet));
  return s;
}

// ---- criteria ----

void LevenshteinOracle() {
  const auto start = Clock::now();
  SplitMix64 rng(1001);
  size_t mismatches = 0;
  for (int i = 0; i < 10000; ++i) {
    const std::u32string a = RandomString(rng, 8, 4);
    const std::u32string b = RandomString(rng, 8, 4);
    if (Levenshtein(a, b) != BruteLevenshtein(a, b)) ++mismatches;
  }
  const double secs = SecondsSince(start);
  Report(mismatches == 0 && secs < 10.0, "levenshtein-oracle",
         Format("10000 pairs, %zu mismatches, %.2f s (limit 10 s)", mismatches, secs));
}

void AucOracle() {
  SplitMix64 rng(1002);
  double worst = 0.0;
  size_t tpr_mismatches = 0;
  const std::vector<double> caps = {0.0, 0.05, 0.10, 0.25, 0.5, 1.0};
  for (int i = 0; i < 1000; ++i) {
    const size_t n = 2 + rng.Below(99);
    // Few distinct values force ties.
    const uint64_t distinct = 1 + rng.Below(n);
    std::vector<DetectionScore> scores;
    for (size_t j = 0; j < n; ++j) {
      const Membership label = j == 0   ? Membership::kMember
                               : j == 1 ? Membership::kNonmember
                               : rng.Below(2) ? Membership::kMember
                                              : Membership::kNonmember;
      scores.push_back({"x" + std::to_string(j), 0, label,
                        -static_cast<double>(rng.Below(distinct)) * 0.37});
    }
    worst = std::max(worst, std::abs(Auc(scores) - PairwiseAuc(scores)));
    for (double cap : caps) {
      if (TprAtFpr(scores, cap) != ExhaustiveTpr(scores, cap)) ++tpr_mismatches;
    }
  }
  Report(worst <= 1e-12 && tpr_mismatches == 0, "auc-oracle",
         Format("1000 sets, max |AUC - pairwise| = %.3g, %zu TPR@FPR mismatches over 6 caps",
                worst, tpr_mismatches));
}

void MinKOracle() {
  SplitMix64 rng(1003);
  size_t mismatches = 0, above_mean = 0;
  for (int i = 0; i < 1000; ++i) {
    std::vector<double> lp(1 + rng.Below(200));
    for (double& v : lp) v = -15.0 * rng.Uniform();
    const double k = 0.5 + 99.5 * rng.Uniform();
    std::vector<double> sorted = lp;
    std::sort(sorted.begin(), sorted.end());
    const size_t m =
        std::max<size_t>(1, static_cast<size_t>(std::floor(k * static_cast<double>(lp.size()) / 100.0)));
    double sum = 0.0;
    for (size_t j = 0; j < m; ++j) sum += sorted[j];
    const double got = MinKProb(lp, {k, TokenSelection::kLowest});
    if (got != sum / static_cast<double>(m)) ++mismatches;
    double mean = 0.0;
    for (double v : lp) mean += v;
    mean /= static_cast<double>(lp.size());
    if (got > mean) ++above_mean;
  }
  Report(mismatches == 0 && above_mean == 0, "min-k-oracle",
         Format("1000 vectors, %zu mismatches, %zu above the full mean", mismatches, above_mean));
}

void MetricInvariants() {
  SplitMix64 rng(1004);
  size_t cases = 0, violations = 0;
  auto check = [&](bool ok) {
    ++cases;
    if (!ok) ++violations;
  };
  for (int i = 0; i < 2000; ++i) {
    const std::u32string a = RandomString(rng, 16, 3);
    const std::u32string b = RandomString(rng, 16, 3);
    const std::u32string x = RandomString(rng, 6, 3);
    const double ab = Approximate(a, b);
    check(Eidetic(a, b) == Eidetic(b, a));
    check(ab == Approximate(b, a));
    check(Eidetic(a, b) <= std::min(a.size(), b.size()));
    check(ab >= 0.0 && ab <= 1.0);
    check(Eidetic(a, a) == a.size() && Approximate(a, a) == 1.0);
    check(Eidetic(a, a + x) == a.size());
  }
  for (int i = 0; i < 1000; ++i) {
    std::vector<MemorizationScore> scores(1 + rng.Below(80));
    for (size_t j = 0; j < scores.size(); ++j) {
      scores[j] = {"id" + std::to_string(j), rng.Below(60), rng.Uniform(), rng.Below(300)};
    }
    const auto rows = ChunkByPromptLength(scores, 1 + rng.Below(scores.size()));
    const AggregateStats global = Aggregate(scores);
    double eidetic = 0.0, approx = 0.0;
    for (const ChunkRow& r : rows) {
      eidetic += r.eidetic_avg * static_cast<double>(r.n);
      approx += r.approx_avg * static_cast<double>(r.n);
    }
    const double n = static_cast<double>(scores.size());
    check(std::abs(eidetic / n - global.eidetic_avg) <= 1e-9 &&
          std::abs(approx / n - global.approx_avg) <= 1e-9);
  }
  Report(violations == 0 && cases >= 10000, "metric-invariants",
         Format("%zu cases (minimum 10000), %zu violations", cases, violations));
}

// ---- synthetic n-gram setup ----

constexpr size_t kDups[] = {1, 4, 16};

struct SeedResult {
  double approx[3] = {};
  size_t eidetic_max[3] = {};
  double auc_longest[3] = {};
  size_t longest = 0;
  double shortest_chunk = 0.0;
  double longest_chunk = 0.0;
};

SeedResult RunSeed(uint64_t seed, const std::filesystem::path& dir) {
  DemoOptions demo;
  demo.seed = seed;
  CmdDemoCorpus(demo, dir / "demo.jsonl");
  RunConfig cfg;
  cfg.corpus = {dir / "demo.jsonl"};
  cfg.out = dir / "out";
  ApplySetting(cfg, "seed", std::to_string(seed));
  ApplySetting(cfg, "sample_size", "50");
  ApplySetting(cfg, "nonmember_sample_size", "50");
  ApplySetting(cfg, "k_list", "10");
  ApplySetting(cfg, "lengths", "32,64,128");
  for (size_t dup : kDups) {
    ApplySetting(cfg, "backend", Format("dup%zu=ngram;order=5;dup=%zu", dup, dup));
  }
  CmdIngest(cfg);
  CmdBuildEval(cfg);
  const auto quant = CmdQuantify(cfg);
  const DetectionGrid grid = CmdDetect(cfg);
  SeedResult r;
  r.longest = cfg.lengths.back();
  for (size_t i = 0; i < 3; ++i) {
    const AggregateStats stats = Aggregate(quant[i].scores);
    r.approx[i] = stats.approx_avg;
    r.eidetic_max[i] = stats.eidetic_max;
    r.auc_longest[i] = grid.cells.at({10, quant[i].backend, r.longest}).auc;
  }
  const auto chunks = ChunkByPromptLength(quant[2].scores, cfg.n_chunks);
  r.shortest_chunk = chunks.front().approx_avg;
  r.longest_chunk = chunks.back().approx_avg;
  return r;
}

void TrendCriteria() {
  std::vector<SeedResult> results;
  double seed0_secs = 0.0;
  for (uint64_t seed = 0; seed < 5; ++seed) {
    testing::TempDir dir;
    const auto start = Clock::now();
    results.push_back(RunSeed(seed, dir.path()));
    if (seed == 0) seed0_secs = SecondsSince(start);
  }

  const SeedResult& s0 = results[0];
  const bool increasing = s0.approx[0] < s0.approx[1] && s0.approx[1] < s0.approx[2];
  Report(increasing && s0.eidetic_max[2] >= s0.eidetic_max[0] && seed0_secs < 120.0,
         "memorization-trend",
         Format("approximate avg %.6f < %.6f < %.6f (dup 1/4/16), eidetic max %zu -> %zu, "
                "%.1f s (limit 120 s)",
                s0.approx[0], s0.approx[1], s0.approx[2], s0.eidetic_max[0], s0.eidetic_max[2],
                seed0_secs));

  int detect_ok = 0, length_ok = 0;
  std::string detect_detail, length_detail;
  for (size_t i = 0; i < results.size(); ++i) {
    const SeedResult& r = results[i];
    const bool d = r.auc_longest[2] >= r.auc_longest[0] && r.auc_longest[2] >= 0.55;
    const bool l = r.longest_chunk >= r.shortest_chunk;
    detect_ok += d;
    length_ok += l;
    detect_detail += Format(" seed%zu %.3f/%.3f%s", i, r.auc_longest[0], r.auc_longest[2],
                            d ? "" : "x");
    length_detail += Format(" seed%zu %.4f/%.4f%s", i, r.shortest_chunk, r.longest_chunk,
                            l ? "" : "x");
  }
  Report(detect_ok >= 4, "detection-trend",
         Format("%d/5 seeds; Min-10%% AUC at length %zu, dup1/dup16:", detect_ok,
                results[0].longest) +
             detect_detail);
  Report(length_ok >= 4, "prompt-length-trend",
         Format("%d/5 seeds; dup16 approximate avg, shortest/longest chunk:", length_ok) +
             length_detail);
}

int RunCli(const std::string& args) {
  const std::string cmd = std::string(MEMAUDIT_CLI) + " " + args + " >/dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

void Determinism() {
  testing::TempDir dir;
  const std::string corpus = (dir / "demo.jsonl").string();
  bool ok = RunCli("demo-corpus " + corpus) == 0;
  std::vector<std::filesystem::path> reports;
  for (const char* name : {"first", "second"}) {
    const std::string out = (dir / name).string();
    ok = ok && RunCli("-o " + out + " --seed 3 -b 'tiny=ngram;order=5;dup=4' run " + corpus) == 0;
    for (const auto& entry : std::filesystem::directory_iterator(dir / name)) {
      if (std::filesystem::exists(entry.path() / "report.md")) reports.push_back(entry.path());
    }
  }
  size_t compared = 0, differing = 0;
  if (ok && reports.size() == 2) {
    for (const auto& entry : std::filesystem::directory_iterator(reports[0])) {
      ++compared;
      const auto other = reports[1] / entry.path().filename();
      if (!std::filesystem::exists(other) ||
          testing::ReadFile(entry.path()) != testing::ReadFile(other)) {
        ++differing;
      }
    }
  }
  Report(ok && reports.size() == 2 && compared > 0 && differing == 0, "pipeline-determinism",
         Format("two CLI runs, %zu report files compared, %zu differ", compared, differing));
}

}  // namespace
}  // namespace memaudit

int main() {
  using namespace memaudit;
  LevenshteinOracle();
  AucOracle();
  MinKOracle();
  MetricInvariants();
  TrendCriteria();
  Determinism();
  std::printf("%d criteria failed\n", failures);
  return failures == 0 ? 0 : 1;
}
