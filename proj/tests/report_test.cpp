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
#include <vector>

#include "memaudit/report.hpp"
#include "memaudit/random.hpp"
#include "test_util.hpp"

namespace memaudit {
namespace {

TEST(HistogramTest, Bins) {
  const std::vector<size_t> values = {5, 15, 25};
  const Histogram h = MakeHistogram(values, 10);
  EXPECT_EQ(h.bins, (std::vector<size_t>{1, 1, 1}));
  EXPECT_EQ(h.overflow, 0u);
  const std::vector<size_t> small = {0, 1, 2};
  EXPECT_EQ(MakeHistogram(small, 1).bins, (std::vector<size_t>{1, 1, 1}));
  const std::vector<size_t> edges = {0, 9, 10};
  EXPECT_EQ(MakeHistogram(edges, 10).bins, (std::vector<size_t>{2, 1}));
  EXPECT_TRUE(MakeHistogram(std::vector<size_t>{}, 10).bins.empty());
  EXPECT_THROW(MakeHistogram(values, 0), Error);
}

TEST(HistogramTest, CapSendsToOverflow) {
  const std::vector<size_t> values = {10, 200, 201, 5000};
  const Histogram h = MakeHistogram(values, 100, 200);
  EXPECT_EQ(h.bins, (std::vector<size_t>{1, 0, 1}));
  EXPECT_EQ(h.overflow, 2u);
}

TEST(HistogramTest, CountsAreConserved) {
  SplitMix64 rng(51);
  for (int iter = 0; iter < 500; ++iter) {
    std::vector<size_t> values(rng.Below(100));
    for (size_t& v : values) v = rng.Below(500);
    const size_t width = 1 + rng.Below(50);
    const std::optional<size_t> cap =
        rng.Below(2) == 0 ? std::nullopt : std::optional<size_t>(rng.Below(400));
    ASSERT_EQ(MakeHistogram(values, width, cap).total(), values.size());
  }
}

AuditReport Sample() {
  AuditReport r;
  r.metadata.tool_version = "0.1.0";
  r.metadata.run_id = "abc123def456";
  r.metadata.config_digest = "abc123def456789";
  r.metadata.seed = 7;
  r.metadata.rng_algorithm = "splitmix64";
  r.metadata.segmenter = "auto";
  r.metadata.min_k_direction = "lowest";
  r.metadata.backends = {"tiny=ngram;max_new_tokens=128"};
  r.quant_examples = 3;
  r.quant_skipped = 1;
  r.quant_tables["tiny"] = Aggregate({{"a", 25, 0.241923, 10},
                                      {"b", 2, 1.0 / 3.0, 20},
                                      {"c", 0, 0.05, 30}});
  r.chunk_tables["tiny"] = ChunkByPromptLength({{"a", 25, 0.241923, 10},
                                                {"b", 2, 1.0 / 3.0, 20},
                                                {"c", 0, 0.05, 30}},
                                               2);
  r.detection.cells[{10, "tiny", 32}] = {0.736, 21.5};
  r.detect_stats[32] = {4, 5};
  const std::vector<size_t> lengths = {120, 80, 450};
  r.histograms["private_part_chars"] = MakeHistogram(lengths, 100, 200);
  return r;
}

TEST(ReportTest, MarkdownRendering) {
  const std::string md = Render(Sample(), "markdown");
  EXPECT_NE(md.find("| tiny | 3 | 25 | 9.000 | 0.208419 | 0.241923 |"), std::string::npos) << md;
  EXPECT_NE(md.find("| min_k_prob_lowest | 10 | tiny | 0.74 | 21.5 |"), std::string::npos) << md;
  EXPECT_NE(md.find("| 32 | 4 | 5 |"), std::string::npos);
  EXPECT_NE(md.find("| -10 | 1 | 25.000000 | 0.241923 |"), std::string::npos) << md;
  EXPECT_NE(md.find("| >200 | 1 |"), std::string::npos);
  EXPECT_EQ(md.find("created"), std::string::npos);
  EXPECT_EQ(Render(Sample(), "md"), md);
}

TEST(ReportTest, CreatedAppearsOnlyWhenSet) {
  AuditReport r = Sample();
  r.metadata.created = "2026-01-01T00:00:00Z";
  EXPECT_NE(Render(r, "markdown").find("| created | 2026-01-01T00:00:00Z |"), std::string::npos);
}

TEST(ReportTest, JsonRoundTrip) {
  const AuditReport r = Sample();
  const AuditReport back = ReportFromJson(nlohmann::json::parse(Render(r, "json")));
  EXPECT_EQ(back, r);
  EXPECT_EQ(Render(back, "json"), Render(r, "json"));
  EXPECT_THROW(ReportFromJson(nlohmann::json::object()), Error);
}

TEST(ReportTest, GridJsonRoundTrip) {
  DetectionGrid grid;
  grid.direction = TokenSelection::kHighest;
  grid.fpr_cap = 0.05;
  grid.cells[{12.5, "a", 64}] = {0.123456789, 33.3333333};
  EXPECT_EQ(GridFromJson(ToJson(grid)), grid);
}

TEST(ReportTest, CsvTables) {
  const auto tables = CsvTables(Sample());
  std::vector<std::string> names;
  for (const auto& [name, body] : tables) names.push_back(name);
  EXPECT_EQ(names, (std::vector<std::string>{"quant", "chunks", "detection", "detect_stats",
                                             "histograms"}));
  EXPECT_EQ(tables[3].second, "prompt_len,members,nonmembers\n32,4,5\n");
  EXPECT_EQ(tables[4].second,
            "histogram,bin_start,bin_end,count\n"
            "private_part_chars,0,100,1\n"
            "private_part_chars,100,200,1\n"
            "private_part_chars,>200,,1\n");
}

TEST(ReportTest, RenderingIsDeterministic) {
  for (const char* format : {"markdown", "csv", "json"}) {
    EXPECT_EQ(Render(Sample(), format), Render(Sample(), format));
  }
  EXPECT_THROW(Render(Sample(), "html"), Error);
}

TEST(ReportTest, WriteReportFiles) {
  testing::TempDir dir;
  WriteReport(Sample(), dir / "out");
  for (const char* file : {"report.md", "report.json", "quant.csv", "chunks.csv", "detection.csv",
                           "detect_stats.csv", "histograms.csv"}) {
    EXPECT_TRUE(std::filesystem::exists(dir / "out" / file)) << file;
  }
  EXPECT_EQ(testing::ReadFile(dir / "out" / "report.md"), Render(Sample(), "markdown"));
}

}  // namespace
}  // namespace memaudit
