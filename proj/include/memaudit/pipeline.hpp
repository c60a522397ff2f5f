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

#ifndef MEMAUDIT_PIPELINE_HPP_
#define MEMAUDIT_PIPELINE_HPP_

// End-to-end orchestration behind the CLI subcommands. Every artifact lives
// under RunConfig::out:
//
//   articles.jsonl                      ingest
//   eval/{quant,detect}.jsonl           build-eval
//   eval/detect_stats.csv
//   backends/<name>/scores.csv          quantify
//   backends/<name>/generations.jsonl
//   backends/<name>/grid.{json,csv}     detect
//   backends/<name>/detect_scores.csv
//   cache/<name>/                       response cache (remote backends)
//   <run-id>/report.{md,json}, *.csv    report

#include <algorithm>
#include <chrono>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <map>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <unordered_set>
#include <utility>
#include <vector>

#include <json.hpp>

#include "memaudit/backend.hpp"
#include "memaudit/corpus.hpp"
#include "memaudit/csv.hpp"
#include "memaudit/demo.hpp"
#include "memaudit/detection.hpp"
#include "memaudit/digest.hpp"
#include "memaudit/error.hpp"
#include "memaudit/evalset.hpp"
#include "memaudit/metrics.hpp"
#include "memaudit/ngram.hpp"
#include "memaudit/parallel.hpp"
#include "memaudit/random.hpp"
#include "memaudit/remote.hpp"
#include "memaudit/report.hpp"

namespace memaudit {

inline constexpr const char* kToolVersion = "0.1.0";

// Keeps the nonmember sample independent of the member sample.
inline constexpr uint64_t kNonmemberSeedSalt = 0x6E6F6E6D656D6265ULL;

struct RunConfig {
  std::vector<std::filesystem::path> corpus;
  // Members: sampled from this window, which must end by the cutoff.
  CorpusFilter members{Date(2021, 1, 1), Date(2021, 12, 31), 1000, 0};
  // Nonmembers: published after the cutoff.
  CorpusFilter nonmembers{Date(2023, 1, 1), Date(2023, 1, 31), 1000, kNonmemberSeedSalt};
  Date cutoff{2021, 12, 31};
  uint64_t seed = 0;
  SegmenterSpec segmenter;
  std::vector<std::string> backend_specs;
  size_t max_new_tokens = 128;
  ScoringOptions scoring;
  size_t n_chunks = 5;
  std::vector<double> k_list = {10, 20, 30, 40, 50, 60};
  std::vector<size_t> lengths = {32, 64, 128, 256, 512};
  double fpr_cap = 0.10;
  TokenSelection min_k_direction = TokenSelection::kLowest;
  size_t hist_bin_width = 10;
  size_t private_hist_cap = 200;
  bool allow_overlap = false;
  std::filesystem::path out = "memaudit-out";
  size_t jobs = 1;
  std::string run_id;
  bool timestamp = false;
  bool save_models = false;

  std::vector<BackendDescriptor> Backends() const {
    std::vector<BackendDescriptor> out;
    std::unordered_set<std::string> names;
    for (const std::string& spec : backend_specs) {
      BackendDescriptor d = BackendDescriptor::Parse(spec);
      if (spec.find(";max_new_tokens=") == std::string::npos) d.max_new_tokens = max_new_tokens;
      if (!names.insert(d.name).second) {
        throw Error(ErrorKind::kInvalidConfig, "duplicate backend name '" + d.name + "'");
      }
      out.push_back(std::move(d));
    }
    return out;
  }

  void Validate() const {
    members.Validate();
    nonmembers.Validate();
    segmenter.Validate();
    if (members.date_max && *members.date_max > cutoff) {
      throw Error(ErrorKind::kInvalidConfig, "member window extends past the training cutoff");
    }
    if (nonmembers.date_min && *nonmembers.date_min <= cutoff) {
      throw Error(ErrorKind::kInvalidConfig, "nonmember window starts before the training cutoff");
    }
    if (n_chunks == 0) throw Error(ErrorKind::kInvalidConfig, "n_chunks must be positive");
    if (k_list.empty()) throw Error(ErrorKind::kInvalidConfig, "k_list is empty");
    for (double k : k_list) MinKConfig{k, min_k_direction}.Validate();
    for (size_t i = 0; i < lengths.size(); ++i) {
      if (lengths[i] == 0 || (i > 0 && lengths[i] <= lengths[i - 1])) {
        throw Error(ErrorKind::kInvalidConfig, "lengths must be positive and increasing");
      }
    }
    if (!(fpr_cap >= 0.0 && fpr_cap <= 1.0)) {
      throw Error(ErrorKind::kInvalidConfig, "fpr_cap must be in [0, 1]");
    }
    if (hist_bin_width == 0) throw Error(ErrorKind::kInvalidConfig, "hist_bin_width must be >= 1");
    if (jobs == 0) throw Error(ErrorKind::kInvalidConfig, "jobs must be >= 1");
    Backends();
  }

  // Canonical text of every setting that can change results; output
  // location, parallelism and timestamps are excluded.
  std::string Canonical() const {
    std::ostringstream s;
    auto opt_date = [](const std::optional<Date>& d) { return d ? d->ToString() : "-"; };
    auto opt_size = [](const std::optional<size_t>& n) { return n ? std::to_string(*n) : "-"; };
    for (const auto& p : corpus) s << "corpus=" << p.string() << '\n';
    s << "member_window=" << opt_date(members.date_min) << ".." << opt_date(members.date_max)
      << "\nsample_size=" << opt_size(members.sample_size)
      << "\nnonmember_window=" << opt_date(nonmembers.date_min) << ".."
      << opt_date(nonmembers.date_max)
      << "\nnonmember_sample_size=" << opt_size(nonmembers.sample_size)
      << "\ncutoff=" << cutoff.ToString() << "\nseed=" << seed
      << "\nsegmenter=" << ToString(segmenter.mode) << ':' << segmenter.external_cmd.value_or("")
      << '\n';
    for (const auto& d : Backends()) s << "backend=" << d.ToSpec() << '\n';
    s << "normalize=" << scoring.normalize << "\ntruncate_generation=" << scoring.truncate_generation
      << "\nlevenshtein_band=" << scoring.levenshtein_band.value_or(0) << "\nn_chunks=" << n_chunks
      << "\nk_list=";
    for (double k : k_list) s << FormatK(k) << ',';
    s << "\nlengths=";
    for (size_t l : lengths) s << l << ',';
    s << "\nfpr_cap=" << csv::Fixed(fpr_cap, 6) << "\nmin_k_direction=" << ToString(min_k_direction)
      << "\nhist=" << hist_bin_width << ',' << private_hist_cap
      << "\nallow_overlap=" << allow_overlap << '\n';
    return s.str();
  }

  std::string Digest() const { return Sha256Hex(Canonical()); }

  std::string RunId() const { return run_id.empty() ? Digest().substr(0, 12) : run_id; }
};

namespace internal {

inline std::string Trim(std::string_view s) {
  const size_t b = s.find_first_not_of(" \t\r\n");
  if (b == std::string_view::npos) return {};
  const size_t e = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(b, e - b + 1));
}

inline std::vector<std::string> SplitList(std::string_view s) {
  std::vector<std::string> out;
  size_t start = 0;
  while (start <= s.size()) {
    const size_t comma = s.find(',', start);
    const std::string item = Trim(s.substr(start, comma == std::string_view::npos ? comma : comma - start));
    if (!item.empty()) out.push_back(item);
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return out;
}

inline bool ParseBool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
  if (v == "false" || v == "0" || v == "no" || v == "off") return false;
  throw Error(ErrorKind::kInvalidConfig, key + ": expected a boolean, got '" + v + "'");
}

inline uint64_t ParseUnsigned(const std::string& key, const std::string& v) {
  try {
    size_t used = 0;
    const unsigned long long n = std::stoull(v, &used);
    if (used != v.size() || v.front() == '-') throw std::invalid_argument(v);
    return n;
  } catch (const std::logic_error&) {
    throw Error(ErrorKind::kInvalidConfig, key + ": expected a non-negative integer, got '" + v + "'");
  }
}

inline double ParseReal(const std::string& key, const std::string& v) {
  try {
    size_t used = 0;
    const double d = std::stod(v, &used);
    if (used != v.size()) throw std::invalid_argument(v);
    return d;
  } catch (const std::logic_error&) {
    throw Error(ErrorKind::kInvalidConfig, key + ": expected a number, got '" + v + "'");
  }
}

inline std::optional<Date> ParseOptionalDate(const std::string& key, const std::string& v) {
  if (v.empty() || v == "none") return std::nullopt;
  try {
    return Date::Parse(v);
  } catch (const Error& e) {
    throw Error(ErrorKind::kInvalidConfig, key + ": " + e.what());
  }
}

inline std::optional<size_t> ParseOptionalSize(const std::string& key, const std::string& v) {
  if (v.empty() || v == "none" || v == "all") return std::nullopt;
  return ParseUnsigned(key, v);
}

}  // namespace internal

// Applies one documented key. `corpus` and `backend` append; everything
// else overwrites.
inline void ApplySetting(RunConfig& cfg, const std::string& key, const std::string& value) {
  using namespace internal;
  if (key == "corpus") {
    for (const std::string& p : SplitList(value)) cfg.corpus.emplace_back(p);
  } else if (key == "backend") {
    cfg.backend_specs.push_back(value);
  } else if (key == "member_date_min") {
    cfg.members.date_min = ParseOptionalDate(key, value);
  } else if (key == "member_date_max") {
    cfg.members.date_max = ParseOptionalDate(key, value);
  } else if (key == "sample_size") {
    cfg.members.sample_size = ParseOptionalSize(key, value);
  } else if (key == "nonmember_date_min") {
    cfg.nonmembers.date_min = ParseOptionalDate(key, value);
  } else if (key == "nonmember_date_max") {
    cfg.nonmembers.date_max = ParseOptionalDate(key, value);
  } else if (key == "nonmember_sample_size") {
    cfg.nonmembers.sample_size = ParseOptionalSize(key, value);
  } else if (key == "cutoff") {
    try {
      cfg.cutoff = Date::Parse(value);
    } catch (const Error& e) {
      throw Error(ErrorKind::kInvalidConfig, key + ": " + e.what());
    }
  } else if (key == "seed") {
    cfg.seed = ParseUnsigned(key, value);
  } else if (key == "segmenter") {
    cfg.segmenter.mode = ParseSegmenterMode(value);
  } else if (key == "segmenter_cmd") {
    cfg.segmenter.external_cmd = value.empty() ? std::nullopt : std::optional<std::string>(value);
  } else if (key == "max_new_tokens") {
    cfg.max_new_tokens = ParseUnsigned(key, value);
  } else if (key == "normalize") {
    cfg.scoring.normalize = ParseBool(key, value);
  } else if (key == "truncate_generation") {
    cfg.scoring.truncate_generation = ParseBool(key, value);
  } else if (key == "levenshtein_band") {
    const uint64_t band = ParseUnsigned(key, value);
    cfg.scoring.levenshtein_band = band == 0 ? std::nullopt : std::optional<size_t>(band);
  } else if (key == "n_chunks") {
    cfg.n_chunks = ParseUnsigned(key, value);
  } else if (key == "k_list") {
    cfg.k_list.clear();
    for (const std::string& k : SplitList(value)) cfg.k_list.push_back(ParseReal(key, k));
  } else if (key == "lengths") {
    cfg.lengths.clear();
    for (const std::string& l : SplitList(value)) cfg.lengths.push_back(ParseUnsigned(key, l));
  } else if (key == "fpr_cap") {
    cfg.fpr_cap = ParseReal(key, value);
  } else if (key == "min_k_direction") {
    cfg.min_k_direction = ParseTokenSelection(value);
  } else if (key == "hist_bin_width") {
    cfg.hist_bin_width = ParseUnsigned(key, value);
  } else if (key == "private_hist_cap") {
    cfg.private_hist_cap = ParseUnsigned(key, value);
  } else if (key == "allow_overlap") {
    cfg.allow_overlap = ParseBool(key, value);
  } else if (key == "out") {
    cfg.out = value;
  } else if (key == "jobs") {
    cfg.jobs = ParseUnsigned(key, value);
  } else if (key == "run_id") {
    cfg.run_id = value;
  } else if (key == "timestamp") {
    cfg.timestamp = ParseBool(key, value);
  } else if (key == "save_models") {
    cfg.save_models = ParseBool(key, value);
  } else {
    throw Error(ErrorKind::kInvalidConfig, "unknown config key '" + key + "'");
  }
  if (key == "seed") {
    cfg.members.seed = cfg.seed;
    cfg.nonmembers.seed = cfg.seed ^ kNonmemberSeedSalt;
  }
}

// Flat `key = value` lines; '#' starts a comment.
inline RunConfig ParseConfig(std::istream& in, RunConfig cfg = {}) {
  std::string line;
  size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (const size_t hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    const std::string trimmed = internal::Trim(line);
    if (trimmed.empty()) continue;
    const size_t eq = trimmed.find('=');
    if (eq == std::string::npos) {
      throw Error(ErrorKind::kInvalidConfig,
                  "config line " + std::to_string(line_no) + ": expected key = value");
    }
    try {
      ApplySetting(cfg, internal::Trim(trimmed.substr(0, eq)), internal::Trim(trimmed.substr(eq + 1)));
    } catch (const Error& e) {
      throw Error(e.kind(), "config line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  return cfg;
}

inline RunConfig LoadConfig(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::kMissingInput, "cannot open config " + path.string());
  return ParseConfig(in);
}

namespace internal {

inline std::filesystem::path ArticlesPath(const RunConfig& c) { return c.out / "articles.jsonl"; }
inline std::filesystem::path EvalDir(const RunConfig& c) { return c.out / "eval"; }
inline std::filesystem::path BackendDir(const RunConfig& c, const std::string& name) {
  return c.out / "backends" / name;
}

inline std::ifstream OpenInput(const std::filesystem::path& path, const char* hint) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw Error(ErrorKind::kMissingInput,
                "missing " + path.string() + " (run `" + hint + "` first)");
  }
  return in;
}

inline std::ofstream OpenOutput(const std::filesystem::path& path) {
  std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorKind::kMissingInput, "cannot write " + path.string());
  return out;
}

inline std::vector<Article> ReadArticles(const RunConfig& cfg) {
  std::ifstream in = OpenInput(ArticlesPath(cfg), "ingest");
  return ParseJsonl(in);
}

}  // namespace internal

struct IngestSummary {
  size_t articles = 0;
  size_t split = 0;
  size_t fully_public = 0;
};

inline IngestSummary CmdIngest(const RunConfig& cfg) {
  cfg.Validate();
  if (cfg.corpus.empty()) throw Error(ErrorKind::kMissingInput, "no corpus configured");
  std::vector<Article> all;
  std::unordered_set<std::string> ids;
  IngestSummary summary;
  for (const auto& path : cfg.corpus) {
    const CorpusFormat format = std::filesystem::is_directory(path) ? CorpusFormat::kTextDirectory
                                                                    : CorpusFormat::kJsonl;
    std::vector<Article> articles;
    try {
      articles = Ingest(path, format);
    } catch (const Error& e) {
      throw Error(e.kind(), path.string() + ": " + e.what());
    }
    for (Article& a : articles) {
      if (!ids.insert(a.id).second) {
        throw Error(ErrorKind::kParse, "duplicate id '" + a.id + "' across corpus files");
      }
      summary.split += a.needs_split ? 1 : 0;
      summary.fully_public += a.fully_public ? 1 : 0;
      all.push_back(std::move(a));
    }
  }
  ApplyPaywallSplit(all, cfg.segmenter);
  summary.articles = all.size();
  std::ofstream out = internal::OpenOutput(internal::ArticlesPath(cfg));
  WriteJsonl(out, all);
  return summary;
}

struct EvalSummary {
  size_t quant_examples = 0;
  size_t quant_skipped = 0;
  size_t detect_examples = 0;
  DetectSetStats stats;
};

inline EvalSummary CmdBuildEval(const RunConfig& cfg) {
  cfg.Validate();
  const std::vector<Article> articles = internal::ReadArticles(cfg);
  std::vector<Article> members = FilterSample(articles, cfg.members);
  std::vector<Article> nonmembers = FilterSample(articles, cfg.nonmembers);
  for (const Article& a : members) {
    if (a.date > cfg.cutoff) {
      throw Error(ErrorKind::kLeakage, "member '" + a.id + "' is dated after the cutoff");
    }
  }
  for (const Article& a : nonmembers) {
    if (a.date <= cfg.cutoff) {
      throw Error(ErrorKind::kLeakage, "nonmember '" + a.id + "' is dated before the cutoff");
    }
  }
  const QuantSet quant = BuildQuantSet(members);
  const DetectSet detect =
      BuildDetectSet(members, nonmembers, cfg.lengths, cfg.segmenter, cfg.allow_overlap);

  const auto dir = internal::EvalDir(cfg);
  {
    std::ofstream out = internal::OpenOutput(dir / "quant.jsonl");
    WriteQuantJsonl(out, quant.examples);
  }
  {
    std::ofstream out = internal::OpenOutput(dir / "detect.jsonl");
    WriteDetectJsonl(out, detect.examples);
  }
  {
    std::ofstream out = internal::OpenOutput(dir / "detect_stats.csv");
    out << "prompt_len,members,nonmembers\n";
    for (const auto& [len, c] : detect.stats) out << len << ',' << c.members << ',' << c.nonmembers << '\n';
  }
  {
    std::ofstream out = internal::OpenOutput(dir / "quant_skipped.txt");
    out << quant.skipped_empty_private << '\n';
  }
  return {quant.examples.size(), quant.skipped_empty_private, detect.examples.size(), detect.stats};
}

namespace internal {

inline std::vector<QuantExample> ReadQuantSet(const RunConfig& cfg) {
  std::ifstream in = OpenInput(EvalDir(cfg) / "quant.jsonl", "build-eval");
  return ReadQuantJsonl(in);
}

inline std::vector<DetectExample> ReadDetectSet(const RunConfig& cfg) {
  std::ifstream in = OpenInput(EvalDir(cfg) / "detect.jsonl", "build-eval");
  return ReadDetectJsonl(in);
}

inline NgramConfig NgramConfigFrom(const BackendDescriptor& d, uint64_t seed) {
  NgramConfig ng;
  ng.seed = seed;
  for (const auto& [key, value] : d.params) {
    if (key == "order") ng.order = ParseUnsigned(key, value);
    else if (key == "alpha") ng.smoothing_alpha = ParseReal(key, value);
    else if (key == "dup") ng.duplication_factor = ParseUnsigned(key, value);
    else if (key == "unit") ng.unit = ParseTrainingUnit(value);
    else if (key == "cache" || key == "retries" || key == "retry_delay_ms" || key == "timeout_s") continue;
    else throw Error(ErrorKind::kInvalidConfig, "unknown ngram option '" + key + "'");
  }
  ng.Validate();
  return ng;
}

}  // namespace internal

// Builds a backend. The built-in n-gram model either loads `endpoint` or
// trains on every ingested article up to the cutoff, counting the
// evaluation members `dup` times. Remote backends (and n-gram ones with
// cache=1) are wrapped in the on-disk response cache.
inline std::unique_ptr<Backend> MakeBackend(const RunConfig& cfg, const BackendDescriptor& d) {
  std::unique_ptr<Backend> backend;
  bool cache = d.kind != BackendKind::kBuiltinNgram;
  if (auto it = d.params.find("cache"); it != d.params.end()) {
    cache = internal::ParseBool("cache", it->second);
  }
  switch (d.kind) {
    case BackendKind::kBuiltinNgram: {
      if (d.endpoint) {
        backend = std::make_unique<NgramBackend>(d, NgramModel::Load(*d.endpoint));
        break;
      }
      const NgramConfig ng = internal::NgramConfigFrom(d, cfg.seed);
      std::vector<Article> training;
      for (Article& a : internal::ReadArticles(cfg)) {
        if (a.date <= cfg.cutoff) training.push_back(std::move(a));
      }
      std::unordered_set<std::string> members;
      for (const QuantExample& e : internal::ReadQuantSet(cfg)) members.insert(e.article_id);
      auto model = TrainNgram(training, ng, &members);
      if (cfg.save_models) {
        std::filesystem::create_directories(cfg.out / "models");
        model.Save(cfg.out / "models" / (d.name + ".json"));
      }
      backend = std::make_unique<NgramBackend>(d, std::move(model));
      break;
    }
    case BackendKind::kHttpRemote:
      backend = std::make_unique<HttpBackend>(d);
      break;
    case BackendKind::kStdioSubprocess:
      backend = std::make_unique<StdioBackend>(d);
      break;
  }
  if (cache) backend = std::make_unique<CachingBackend>(std::move(backend), cfg.out / "cache" / d.name);
  return backend;
}

struct QuantifyResult {
  std::string backend;
  std::vector<MemorizationScore> scores;
  std::vector<std::string> generations;
};

inline QuantifyResult QuantifyWith(Backend& backend, const std::vector<QuantExample>& examples,
                                   const ScoringOptions& scoring, size_t jobs) {
  QuantifyResult result;
  result.backend = backend.descriptor().name;
  result.generations.resize(examples.size());
  result.scores.resize(examples.size());
  const size_t max_new = backend.descriptor().max_new_tokens;
  ParallelFor(examples.size(), jobs, [&](size_t i) {
    const QuantExample& e = examples[i];
    try {
      result.generations[i] = GenerateGreedy(backend, e.prompt, max_new);
    } catch (const Error& err) {
      throw Error(err.kind(), "article '" + e.article_id + "': " + err.what());
    }
    result.scores[i] =
        ScoreGeneration(e.article_id, result.generations[i], e.reference, e.prompt_len_chars, scoring);
  });
  return result;
}

inline std::vector<QuantifyResult> CmdQuantify(const RunConfig& cfg) {
  cfg.Validate();
  const std::vector<QuantExample> examples = internal::ReadQuantSet(cfg);
  std::vector<QuantifyResult> results;
  for (const BackendDescriptor& d : cfg.Backends()) {
    auto backend = MakeBackend(cfg, d);
    QuantifyResult r = QuantifyWith(*backend, examples, cfg.scoring, cfg.jobs);
    const auto dir = internal::BackendDir(cfg, d.name);
    {
      std::ofstream out = internal::OpenOutput(dir / "scores.csv");
      WriteScoresCsv(out, r.scores);
    }
    {
      std::ofstream out = internal::OpenOutput(dir / "generations.jsonl");
      for (size_t i = 0; i < examples.size(); ++i) {
        out << nlohmann::json{{"id", examples[i].article_id}, {"generated", r.generations[i]}}.dump()
            << '\n';
      }
    }
    results.push_back(std::move(r));
  }
  return results;
}

inline DetectionGrid CmdDetect(const RunConfig& cfg) {
  cfg.Validate();
  const std::vector<DetectExample> examples = internal::ReadDetectSet(cfg);
  DetectionGrid merged;
  merged.direction = cfg.min_k_direction;
  merged.fpr_cap = cfg.fpr_cap;
  for (const BackendDescriptor& d : cfg.Backends()) {
    auto backend = MakeBackend(cfg, d);
    DetectionRun run = RunDetection(*backend, examples, cfg.k_list, cfg.lengths,
                                    cfg.min_k_direction, cfg.fpr_cap, cfg.jobs);
    const auto dir = internal::BackendDir(cfg, d.name);
    {
      std::ofstream out = internal::OpenOutput(dir / "grid.csv");
      WriteGridCsv(out, run.grid);
    }
    {
      std::ofstream out = internal::OpenOutput(dir / "grid.json");
      out << ToJson(run.grid).dump(2) << '\n';
    }
    {
      std::ofstream out = internal::OpenOutput(dir / "detect_scores.csv");
      out << "id,prompt_len,label,k,score\n";
      for (size_t i = 0; i < run.scores.size(); ++i) {
        const DetectionScore& s = run.scores[i];
        const double k = run.score_ks[i / examples.size()];
        out << csv::Field(s.article_id) << ',' << s.prompt_len << ',' << ToString(s.label) << ','
            << FormatK(k) << ',' << csv::Exact(s.score) << '\n';
      }
    }
    merged.Merge(run.grid);
  }
  return merged;
}

inline AuditReport BuildReport(const RunConfig& cfg) {
  cfg.Validate();
  AuditReport report;
  RunMetadata& m = report.metadata;
  m.tool_version = kToolVersion;
  m.config_digest = cfg.Digest();
  m.run_id = cfg.RunId();
  m.seed = cfg.seed;
  m.rng_algorithm = std::string(SplitMix64::kAlgorithm);
  m.segmenter = std::string(ToString(cfg.segmenter.mode));
  m.min_k_direction = std::string(ToString(cfg.min_k_direction));
  m.fpr_cap = cfg.fpr_cap;
  for (const BackendDescriptor& d : cfg.Backends()) m.backends.push_back(d.ToSpec());
  if (cfg.timestamp) {
    const std::time_t now = std::time(nullptr);
    char buf[32];
    std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&now));
    m.created = buf;
  }

  const std::vector<QuantExample> quant = internal::ReadQuantSet(cfg);
  report.quant_examples = quant.size();
  if (std::ifstream in(internal::EvalDir(cfg) / "quant_skipped.txt"); in) in >> report.quant_skipped;
  std::vector<size_t> public_lengths, private_lengths;
  for (const QuantExample& e : quant) {
    public_lengths.push_back(e.prompt_len_chars);
    private_lengths.push_back(unicode::Length(e.reference));
  }
  report.histograms["public_chars"] = MakeHistogram(public_lengths, cfg.hist_bin_width);
  report.histograms["private_first_sentence_chars"] =
      MakeHistogram(private_lengths, cfg.hist_bin_width, cfg.private_hist_cap);

  {
    const std::vector<DetectExample> detect = internal::ReadDetectSet(cfg);
    report.detect_stats = TallyStats(detect);
    for (size_t len : cfg.lengths) report.detect_stats[len];
  }

  report.detection.direction = cfg.min_k_direction;
  report.detection.fpr_cap = cfg.fpr_cap;
  for (const BackendDescriptor& d : cfg.Backends()) {
    const auto dir = internal::BackendDir(cfg, d.name);
    if (std::ifstream in(dir / "scores.csv", std::ios::binary); in) {
      const std::vector<MemorizationScore> scores = ReadScoresCsv(in);
      if (!scores.empty()) {
        report.quant_tables[d.name] = Aggregate(scores);
        report.chunk_tables[d.name] =
            ChunkByPromptLength(scores, std::min(cfg.n_chunks, scores.size()));
      }
    }
    if (std::ifstream in(dir / "grid.json", std::ios::binary); in) {
      report.detection.Merge(GridFromJson(nlohmann::json::parse(in)));
    }
  }
  return report;
}

inline std::filesystem::path CmdReport(const RunConfig& cfg) {
  const AuditReport report = BuildReport(cfg);
  const auto dir = cfg.out / report.metadata.run_id;
  WriteReport(report, dir);
  return dir;
}

inline size_t CmdDemoCorpus(const DemoOptions& opts, const std::filesystem::path& path) {
  const std::vector<Article> articles = GenerateDemoCorpus(opts);
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorKind::kMissingInput, "cannot write " + path.string());
  WriteJsonl(out, articles);
  return articles.size();
}

}  // namespace memaudit

#endif  // MEMAUDIT_PIPELINE_HPP_
