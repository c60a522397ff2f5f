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
#include <sys/wait.h>

#include <algorithm>
#include <cstdlib>
#include <functional>
#include <sstream>
#include <string>
#include <vector>

#include "memaudit/pipeline.hpp"
#include "test_util.hpp"

namespace memaudit {
namespace {

ErrorKind KindOf(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.kind();
  }
  ADD_FAILURE() << "no error thrown";
  return ErrorKind::kInternal;
}

TEST(ConfigTest, ParsesKeysAndComments) {
  std::istringstream in(R"(# audit settings
corpus = a.jsonl, b.jsonl
corpus = dir/
backend = tiny=ngram;dup=4   # trailing comment
seed = 9
k_list = 10, 20.5
lengths = 32,64
min_k_direction = highest
member_date_min = 2021-03-01
sample_size = all
normalize = false
)");
  const RunConfig cfg = ParseConfig(in);
  EXPECT_EQ(cfg.corpus.size(), 3u);
  EXPECT_EQ(cfg.backend_specs, std::vector<std::string>{"tiny=ngram;dup=4"});
  EXPECT_EQ(cfg.seed, 9u);
  EXPECT_EQ(cfg.members.seed, 9u);
  EXPECT_EQ(cfg.nonmembers.seed, 9u ^ kNonmemberSeedSalt);
  EXPECT_EQ(cfg.k_list, (std::vector<double>{10, 20.5}));
  EXPECT_EQ(cfg.lengths, (std::vector<size_t>{32, 64}));
  EXPECT_EQ(cfg.min_k_direction, TokenSelection::kHighest);
  EXPECT_EQ(cfg.members.date_min, Date(2021, 3, 1));
  EXPECT_FALSE(cfg.members.sample_size.has_value());
  EXPECT_FALSE(cfg.scoring.normalize);
}

TEST(ConfigTest, DefaultSeedMatchesExplicitZero) {
  RunConfig explicit_zero;
  ApplySetting(explicit_zero, "seed", "0");
  EXPECT_EQ(explicit_zero.Digest(), RunConfig{}.Digest());
}

TEST(ConfigTest, Errors) {
  std::istringstream unknown("seed = 1\nsede = 2\n");
  try {
    ParseConfig(unknown);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kInvalidConfig);
    EXPECT_NE(std::string(e.what()).find("line 2"), std::string::npos) << e.what();
  }
  std::istringstream no_eq("seed 1\n");
  EXPECT_THROW(ParseConfig(no_eq), Error);
  RunConfig cfg;
  EXPECT_THROW(ApplySetting(cfg, "seed", "-1"), Error);
  EXPECT_THROW(ApplySetting(cfg, "fpr_cap", "0.1x"), Error);
  EXPECT_THROW(ApplySetting(cfg, "normalize", "maybe"), Error);
  EXPECT_THROW(ApplySetting(cfg, "cutoff", "2021-02-30"), Error);
  EXPECT_EQ(KindOf([] { LoadConfig("/nonexistent/memaudit.conf"); }), ErrorKind::kMissingInput);
}

TEST(ConfigTest, Validation) {
  RunConfig cfg;
  cfg.Validate();
  cfg.lengths = {64, 32};
  EXPECT_THROW(cfg.Validate(), Error);
  cfg = {};
  cfg.members.date_max = Date(2022, 6, 1);
  EXPECT_THROW(cfg.Validate(), Error);
  cfg = {};
  cfg.nonmembers.date_min = Date(2021, 6, 1);
  EXPECT_THROW(cfg.Validate(), Error);
  cfg = {};
  cfg.k_list = {0};
  EXPECT_THROW(cfg.Validate(), Error);
  cfg = {};
  cfg.backend_specs = {"x=ngram", "x=ngram;dup=2"};
  EXPECT_THROW(cfg.Validate(), Error);
}

TEST(ConfigTest, BackendsInheritMaxNewTokens) {
  RunConfig cfg;
  cfg.max_new_tokens = 40;
  cfg.backend_specs = {"a=ngram", "b=ngram;max_new_tokens=7"};
  const auto backends = cfg.Backends();
  EXPECT_EQ(backends[0].max_new_tokens, 40u);
  EXPECT_EQ(backends[1].max_new_tokens, 7u);
}

TEST(ConfigTest, DigestIgnoresLocationAndParallelism) {
  RunConfig a;
  RunConfig b;
  b.out = "/elsewhere";
  b.jobs = 8;
  b.timestamp = true;
  EXPECT_EQ(a.Digest(), b.Digest());
  EXPECT_EQ(a.RunId().size(), 12u);
  b.seed = 1;
  EXPECT_NE(a.Digest(), b.Digest());
  b = {};
  b.k_list = {10};
  EXPECT_NE(a.Digest(), b.Digest());
  b = {};
  b.run_id = "mine";
  EXPECT_EQ(b.RunId(), "mine");
}

class PipelineTest : public ::testing::Test {
 protected:
  void SetUp() override {
    DemoOptions demo;
    demo.n_docs = 120;
    demo.n_late = 40;
    CmdDemoCorpus(demo, dir_ / "demo.jsonl");
  }

  RunConfig Config(const std::string& out) const {
    RunConfig cfg;
    cfg.corpus = {dir_ / "demo.jsonl"};
    cfg.out = dir_ / out;
    cfg.backend_specs = {"tiny=ngram;order=4;dup=4"};
    cfg.max_new_tokens = 48;
    cfg.k_list = {10, 50};
    cfg.lengths = {32, 64};
    cfg.n_chunks = 2;
    return cfg;
  }

  static void RunAll(const RunConfig& cfg) {
    CmdIngest(cfg);
    CmdBuildEval(cfg);
    CmdQuantify(cfg);
    CmdDetect(cfg);
    CmdReport(cfg);
  }

  testing::TempDir dir_;
};

TEST_F(PipelineTest, EndToEnd) {
  const RunConfig cfg = Config("out");
  const IngestSummary ingest = CmdIngest(cfg);
  EXPECT_EQ(ingest.articles, 120u);
  EXPECT_EQ(ingest.split, 120u);
  const EvalSummary eval = CmdBuildEval(cfg);
  EXPECT_EQ(eval.quant_examples + eval.quant_skipped, 80u);
  EXPECT_GT(eval.detect_examples, 0u);

  const auto quant = CmdQuantify(cfg);
  ASSERT_EQ(quant.size(), 1u);
  EXPECT_EQ(quant[0].scores.size(), eval.quant_examples);
  EXPECT_EQ(quant[0].generations.size(), eval.quant_examples);
  const std::string scores = testing::ReadFile(cfg.out / "backends" / "tiny" / "scores.csv");
  EXPECT_EQ(static_cast<size_t>(std::count(scores.begin(), scores.end(), '\n')),
            eval.quant_examples + 1);

  const DetectionGrid grid = CmdDetect(cfg);
  EXPECT_EQ(grid.cells.size(), 4u);
  const auto report_dir = CmdReport(cfg);
  EXPECT_EQ(report_dir, cfg.out / cfg.RunId());
  const AuditReport report =
      ReportFromJson(nlohmann::json::parse(testing::ReadFile(report_dir / "report.json")));
  EXPECT_EQ(report.detection, grid);
  EXPECT_EQ(report.quant_tables.at("tiny"), Aggregate(quant[0].scores));
  EXPECT_EQ(report.chunk_tables.at("tiny").size(), 2u);
  EXPECT_EQ(report.metadata.config_digest, cfg.Digest());
}

TEST_F(PipelineTest, SingleCellGrid) {
  RunConfig cfg = Config("one");
  cfg.k_list = {10};
  cfg.lengths = {32};
  CmdIngest(cfg);
  CmdBuildEval(cfg);
  const DetectionGrid grid = CmdDetect(cfg);
  ASSERT_EQ(grid.cells.size(), 1u);
  EXPECT_TRUE(grid.cells.count({10, "tiny", 32}));
}

TEST_F(PipelineTest, RerunsAndParallelismAreByteIdentical) {
  RunConfig first = Config("first");
  RunConfig second = Config("second");
  second.jobs = 4;
  RunAll(first);
  RunAll(second);
  const std::string id = first.RunId();
  ASSERT_EQ(id, second.RunId());
  for (const char* file : {"report.md", "report.json", "detection.csv", "quant.csv"}) {
    EXPECT_EQ(testing::ReadFile(first.out / id / file), testing::ReadFile(second.out / id / file))
        << file;
  }
  EXPECT_EQ(testing::ReadFile(first.out / "backends/tiny/generations.jsonl"),
            testing::ReadFile(second.out / "backends/tiny/generations.jsonl"));
}

TEST_F(PipelineTest, SeedChangesTheSample) {
  RunConfig a = Config("a");
  a.members.sample_size = 30;
  RunConfig b = a;
  b.out = dir_ / "b";
  ApplySetting(b, "seed", "5");
  CmdIngest(a);
  CmdIngest(b);
  CmdBuildEval(a);
  CmdBuildEval(b);
  EXPECT_NE(testing::ReadFile(a.out / "eval/quant.jsonl"),
            testing::ReadFile(b.out / "eval/quant.jsonl"));
}

TEST_F(PipelineTest, LeakageGuard) {
  RunConfig cfg = Config("leak");
  cfg.members.date_max = std::nullopt;
  CmdIngest(cfg);
  EXPECT_EQ(KindOf([&] { CmdBuildEval(cfg); }), ErrorKind::kLeakage);
}

TEST_F(PipelineTest, StepsRequireTheirInputs) {
  const RunConfig cfg = Config("empty");
  EXPECT_EQ(KindOf([&] { CmdBuildEval(cfg); }), ErrorKind::kMissingInput);
  EXPECT_EQ(KindOf([&] { CmdQuantify(cfg); }), ErrorKind::kMissingInput);
  EXPECT_EQ(KindOf([&] { CmdDetect(cfg); }), ErrorKind::kMissingInput);
}

TEST_F(PipelineTest, DuplicateIdsAcrossCorporaAreRejected) {
  RunConfig cfg = Config("dup");
  cfg.corpus.push_back(dir_ / "demo.jsonl");
  EXPECT_THROW(CmdIngest(cfg), Error);
}

TEST_F(PipelineTest, RemoteResultsResumeFromCache) {
  // The adapter refuses to start once `down` exists, so the second pass
  // can only succeed from the response cache.
  const auto script = dir_ / "adapter.sh";
  testing::WriteFile(script, "if [ -e '" + (dir_ / "down").string() + "' ]; then exit 1; fi\n" +
                                 "exec '" + std::string(MEMAUDIT_FAKE_ADAPTER) + "' --order 4 " +
                                 "--text 'ニュース。'\n");
  RunConfig cfg = Config("remote");
  cfg.backend_specs = {"adapter=stdio:sh " + script.string() + ";retries=1"};
  CmdIngest(cfg);
  CmdBuildEval(cfg);
  const auto first = CmdQuantify(cfg);
  testing::WriteFile(dir_ / "down", "");
  const auto second = CmdQuantify(cfg);
  EXPECT_EQ(first[0].generations, second[0].generations);
  RunConfig uncached = cfg;
  uncached.backend_specs = {"adapter=stdio:sh " + script.string() + ";retries=1;cache=false"};
  EXPECT_EQ(KindOf([&] { CmdQuantify(uncached); }), ErrorKind::kTransport);
}

int RunCli(const std::string& args) {
  const std::string cmd = std::string(MEMAUDIT_CLI) + " " + args + " >/dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

TEST_F(PipelineTest, CliExitCodes) {
  const std::string out = (dir_ / "cli").string();
  const std::string corpus = (dir_ / "demo.jsonl").string();
  EXPECT_EQ(RunCli("--help"), 0);
  EXPECT_EQ(RunCli(""), 2);
  EXPECT_EQ(RunCli("frobnicate"), 2);
  EXPECT_EQ(RunCli("--set sede=1 -o " + out + " ingest " + corpus), 2);
  EXPECT_EQ(RunCli("-o " + out + " ingest /nonexistent.jsonl"), 3);
  EXPECT_EQ(RunCli("-o " + out + " quantify"), 3);
  testing::WriteFile(dir_ / "bad.jsonl", "{not json\n");
  EXPECT_EQ(RunCli("-o " + out + " ingest " + (dir_ / "bad.jsonl").string()), 4);
  EXPECT_EQ(RunCli("-o " + out + " --set member_date_max=none ingest " + corpus), 0);
  EXPECT_EQ(RunCli("-o " + out + " --set member_date_max=none build-eval"), 7);
  EXPECT_EQ(RunCli("-o " + out + " -b 'tiny=ngram;order=3' --set k_list=10 --set lengths=32 run " +
                   corpus),
            0);
}

}  // namespace
}  // namespace memaudit
