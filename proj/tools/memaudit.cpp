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

// memaudit: memorization and membership-inference audit for language models.

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "memaudit/memaudit.hpp"

namespace {

using memaudit::Error;
using memaudit::ErrorKind;

int ExitCode(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::kInvalidArgument:
    case ErrorKind::kInvalidConfig:
      return 2;
    case ErrorKind::kMissingInput:
      return 3;
    case ErrorKind::kParse:
      return 4;
    case ErrorKind::kTransport:
      return 5;
    case ErrorKind::kProtocol:
      return 6;
    case ErrorKind::kLeakage:
      return 7;
    case ErrorKind::kInternal:
      break;
  }
  return 1;
}

int Fail(ErrorKind kind, const std::string& message) {
  nlohmann::json j = {{"error", {{"kind", memaudit::ToString(kind)}, {"message", message}}}};
  std::cerr << j.dump() << std::endl;
  return ExitCode(kind);
}

struct Globals {
  std::string config;
  std::optional<uint64_t> seed;
  std::string out;
  std::optional<size_t> jobs;
  std::vector<std::string> backends;
  std::vector<std::string> sets;
};

memaudit::RunConfig Resolve(const Globals& g) {
  memaudit::RunConfig cfg;
  if (!g.config.empty()) cfg = memaudit::LoadConfig(g.config);
  if (!g.backends.empty()) {
    cfg.backend_specs.clear();
    for (const std::string& b : g.backends) memaudit::ApplySetting(cfg, "backend", b);
  }
  for (const std::string& kv : g.sets) {
    const size_t eq = kv.find('=');
    if (eq == std::string::npos) {
      throw Error(ErrorKind::kInvalidArgument, "--set expects key=value, got '" + kv + "'");
    }
    memaudit::ApplySetting(cfg, kv.substr(0, eq), kv.substr(eq + 1));
  }
  if (g.seed) memaudit::ApplySetting(cfg, "seed", std::to_string(*g.seed));
  if (!g.out.empty()) cfg.out = g.out;
  if (g.jobs) memaudit::ApplySetting(cfg, "jobs", std::to_string(*g.jobs));
  cfg.Validate();
  return cfg;
}

void PrintGrid(const memaudit::DetectionGrid& grid) {
  memaudit::WriteGridMarkdown(std::cout, grid);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Memorization and membership-inference audit"};
  app.require_subcommand(1);
  Globals g;
  app.add_option("-c,--config", g.config, "Config file (key = value lines)");
  app.add_option("--seed", g.seed, "Sampling seed");
  app.add_option("-o,--out", g.out, "Output directory");
  app.add_option("-j,--jobs", g.jobs, "Worker threads for backend calls");
  app.add_option("-b,--backend", g.backends,
                 "Backend spec [name=]kind[:endpoint][;key=value]..., repeatable");
  app.add_option("--set", g.sets, "Override a config key (key=value), repeatable");

  auto* ingest = app.add_subcommand("ingest", "Load corpora and apply the paywall split");
  std::vector<std::string> corpus_paths;
  ingest->add_option("corpus", corpus_paths, "JSONL files or text directories");

  app.add_subcommand("build-eval", "Sample members/nonmembers and write evaluation sets");
  app.add_subcommand("quantify", "Generate continuations and score memorization");
  app.add_subcommand("detect", "Score membership with Min-K% Prob");

  auto* report = app.add_subcommand("report", "Aggregate results into a report");
  std::string format = "markdown";
  report->add_option("--format", format, "Also print the report: markdown, csv or json");
  bool quiet = false;
  report->add_flag("-q,--quiet", quiet, "Only write files");

  auto* run = app.add_subcommand("run", "ingest, build-eval, quantify, detect and report");
  std::vector<std::string> run_corpus;
  run->add_option("corpus", run_corpus, "JSONL files or text directories");

  auto* demo = app.add_subcommand("demo-corpus", "Write a synthetic news corpus");
  memaudit::DemoOptions demo_opts;
  std::string demo_path;
  demo->add_option("path", demo_path, "Output JSONL")->required();
  demo->add_option("--docs", demo_opts.n_docs, "Number of articles");
  demo->add_option("--late", demo_opts.n_late, "Articles dated after the 2021 window");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    // --help exits 0; every other parse failure is a usage error.
    return app.exit(e) == 0 ? 0 : 2;
  }

  try {
    if (demo->parsed()) {
      if (g.seed) demo_opts.seed = *g.seed;
      const size_t n = memaudit::CmdDemoCorpus(demo_opts, demo_path);
      std::cout << "wrote " << n << " articles to " << demo_path << '\n';
      return 0;
    }
    memaudit::RunConfig cfg = Resolve(g);
    // Positional corpora replace the configured list.
    if (!corpus_paths.empty() || !run_corpus.empty()) {
      cfg.corpus.clear();
      for (const auto* list : {&corpus_paths, &run_corpus}) {
        for (const std::string& p : *list) cfg.corpus.emplace_back(p);
      }
    }
    const bool all = run->parsed();

    if (ingest->parsed() || all) {
      const auto s = memaudit::CmdIngest(cfg);
      std::cout << "ingest: " << s.articles << " articles, " << s.split << " split, "
                << s.fully_public << " fully public\n";
    }
    if (app.got_subcommand("build-eval") || all) {
      const auto s = memaudit::CmdBuildEval(cfg);
      std::cout << "build-eval: " << s.quant_examples << " quantification examples ("
                << s.quant_skipped << " skipped), " << s.detect_examples << " detection examples\n";
      for (const auto& [len, c] : s.stats) {
        std::cout << "  len " << len << ": " << c.members << " members, " << c.nonmembers
                  << " nonmembers\n";
      }
    }
    if (app.got_subcommand("quantify") || all) {
      for (const auto& r : memaudit::CmdQuantify(cfg)) {
        const auto stats = memaudit::Aggregate(r.scores);
        std::printf("quantify %s: n=%zu eidetic_max=%zu eidetic_avg=%.3f approx_avg=%.6f\n",
                    r.backend.c_str(), stats.n, stats.eidetic_max, stats.eidetic_avg,
                    stats.approx_avg);
      }
    }
    if (app.got_subcommand("detect") || all) {
      PrintGrid(memaudit::CmdDetect(cfg));
    }
    if (report->parsed() || all) {
      const auto dir = memaudit::CmdReport(cfg);
      if (!quiet && report->parsed()) {
        const auto r = memaudit::BuildReport(cfg);
        std::cout << memaudit::Render(r, memaudit::ParseReportFormat(format));
      }
      std::cout << "report: " << dir.string() << '\n';
    }
    return 0;
  } catch (const Error& e) {
    return Fail(e.kind(), e.what());
  } catch (const std::filesystem::filesystem_error& e) {
    return Fail(ErrorKind::kMissingInput, e.what());
  } catch (const std::exception& e) {
    return Fail(ErrorKind::kInternal, e.what());
  }
}
