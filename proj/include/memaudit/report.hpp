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

#ifndef MEMAUDIT_REPORT_HPP_
#define MEMAUDIT_REPORT_HPP_

// Audit report assembly and rendering (Markdown, CSV, JSON). Rendering is
// a pure function of the report, so equal reports give equal bytes.

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <span>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "memaudit/csv.hpp"
#include "memaudit/detection.hpp"
#include "memaudit/error.hpp"
#include "memaudit/evalset.hpp"
#include "memaudit/metrics.hpp"

namespace memaudit {

// Half-open bins [i*w, (i+1)*w); values above `cap` go to `overflow`.
struct Histogram {
  size_t bin_width = 1;
  std::optional<size_t> cap;
  std::vector<size_t> bins;
  size_t overflow = 0;

  size_t total() const {
    size_t n = overflow;
    for (size_t c : bins) n += c;
    return n;
  }
  friend bool operator==(const Histogram&, const Histogram&) = default;
};

inline Histogram MakeHistogram(std::span<const size_t> values, size_t bin_width,
                               std::optional<size_t> cap = std::nullopt) {
  if (bin_width == 0) throw Error(ErrorKind::kInvalidArgument, "bin_width must be >= 1");
  Histogram h;
  h.bin_width = bin_width;
  h.cap = cap;
  for (size_t v : values) {
    if (cap && v > *cap) {
      ++h.overflow;
      continue;
    }
    const size_t bin = v / bin_width;
    if (bin >= h.bins.size()) h.bins.resize(bin + 1, 0);
    ++h.bins[bin];
  }
  return h;
}

struct RunMetadata {
  std::string tool_version;
  std::string run_id;
  std::string config_digest;
  uint64_t seed = 0;
  std::string rng_algorithm;
  std::string segmenter;
  std::string min_k_direction;
  double fpr_cap = 0.10;
  std::vector<std::string> backends;
  // Wall-clock creation time; empty unless requested, since it breaks
  // byte-identical reruns.
  std::string created;
  friend bool operator==(const RunMetadata&, const RunMetadata&) = default;
};

struct AuditReport {
  RunMetadata metadata;
  size_t quant_examples = 0;
  size_t quant_skipped = 0;
  std::map<std::string, AggregateStats> quant_tables;
  std::map<std::string, std::vector<ChunkRow>> chunk_tables;
  DetectionGrid detection;
  DetectSetStats detect_stats;
  std::map<std::string, Histogram> histograms;
  friend bool operator==(const AuditReport&, const AuditReport&) = default;
};

enum class ReportFormat { kMarkdown, kCsv, kJson };

inline ReportFormat ParseReportFormat(std::string_view s) {
  if (s == "markdown" || s == "md") return ReportFormat::kMarkdown;
  if (s == "csv") return ReportFormat::kCsv;
  if (s == "json") return ReportFormat::kJson;
  throw Error(ErrorKind::kInvalidArgument, "unknown report format '" + std::string(s) + "'");
}

inline nlohmann::json ToJson(const DetectionGrid& grid) {
  nlohmann::json cells = nlohmann::json::array();
  for (const auto& [key, cell] : grid.cells) {
    cells.push_back({{"k", key.k_percent}, {"model", key.model}, {"prompt_len", key.prompt_len},
                     {"auc", cell.auc}, {"tpr_at_fpr", cell.tpr_at_fpr}});
  }
  return {{"method", grid.method()},
          {"direction", ToString(grid.direction)},
          {"fpr_cap", grid.fpr_cap},
          {"cells", std::move(cells)}};
}

inline DetectionGrid GridFromJson(const nlohmann::json& j) {
  try {
    DetectionGrid grid;
    grid.direction = ParseTokenSelection(j.at("direction").get<std::string>());
    grid.fpr_cap = j.at("fpr_cap").get<double>();
    for (const auto& cell : j.at("cells")) {
      grid.cells[{cell.at("k").get<double>(), cell.at("model").get<std::string>(),
                  cell.at("prompt_len").get<size_t>()}] = {cell.at("auc").get<double>(),
                                                           cell.at("tpr_at_fpr").get<double>()};
    }
    return grid;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::kParse, std::string("malformed grid JSON: ") + e.what());
  }
}

inline nlohmann::json ToJson(const AuditReport& r) {
  using nlohmann::json;
  const RunMetadata& m = r.metadata;
  json meta = {{"tool_version", m.tool_version}, {"run_id", m.run_id},
               {"config_digest", m.config_digest}, {"seed", m.seed},
               {"rng_algorithm", m.rng_algorithm}, {"segmenter", m.segmenter},
               {"min_k_direction", m.min_k_direction}, {"fpr_cap", m.fpr_cap},
               {"backends", m.backends}};
  if (!m.created.empty()) meta["created"] = m.created;

  json quant = json::object();
  for (const auto& [name, s] : r.quant_tables) {
    quant[name] = {{"n", s.n}, {"eidetic_max", s.eidetic_max}, {"eidetic_avg", s.eidetic_avg},
                   {"approx_avg", s.approx_avg}, {"approx_median", s.approx_median}};
  }
  json chunks = json::object();
  for (const auto& [name, rows] : r.chunk_tables) {
    json arr = json::array();
    for (const ChunkRow& row : rows) {
      arr.push_back({{"lower_exclusive", row.lower_exclusive ? json(*row.lower_exclusive) : json()},
                     {"upper_inclusive", row.upper_inclusive},
                     {"n", row.n},
                     {"eidetic_avg", row.eidetic_avg},
                     {"approx_avg", row.approx_avg}});
    }
    chunks[name] = std::move(arr);
  }
  json stats = json::array();
  for (const auto& [len, c] : r.detect_stats) {
    stats.push_back({{"prompt_len", len}, {"members", c.members}, {"nonmembers", c.nonmembers}});
  }
  json hists = json::object();
  for (const auto& [name, h] : r.histograms) {
    hists[name] = {{"bin_width", h.bin_width}, {"cap", h.cap ? json(*h.cap) : json()},
                   {"bins", h.bins}, {"overflow", h.overflow}};
  }
  return {{"metadata", std::move(meta)},
          {"quant_examples", r.quant_examples},
          {"quant_skipped", r.quant_skipped},
          {"quant_tables", std::move(quant)},
          {"chunk_tables", std::move(chunks)},
          {"detection", ToJson(r.detection)},
          {"detect_stats", std::move(stats)},
          {"histograms", std::move(hists)}};
}

inline AuditReport ReportFromJson(const nlohmann::json& j) {
  try {
    AuditReport r;
    const auto& meta = j.at("metadata");
    RunMetadata& m = r.metadata;
    m.tool_version = meta.at("tool_version").get<std::string>();
    m.run_id = meta.at("run_id").get<std::string>();
    m.config_digest = meta.at("config_digest").get<std::string>();
    m.seed = meta.at("seed").get<uint64_t>();
    m.rng_algorithm = meta.at("rng_algorithm").get<std::string>();
    m.segmenter = meta.at("segmenter").get<std::string>();
    m.min_k_direction = meta.at("min_k_direction").get<std::string>();
    m.fpr_cap = meta.at("fpr_cap").get<double>();
    m.backends = meta.at("backends").get<std::vector<std::string>>();
    m.created = meta.value("created", std::string());
    r.quant_examples = j.at("quant_examples").get<size_t>();
    r.quant_skipped = j.at("quant_skipped").get<size_t>();
    for (const auto& [name, s] : j.at("quant_tables").items()) {
      r.quant_tables[name] = {s.at("eidetic_max").get<size_t>(), s.at("eidetic_avg").get<double>(),
                              s.at("approx_avg").get<double>(),
                              s.at("approx_median").get<double>(), s.at("n").get<size_t>()};
    }
    for (const auto& [name, rows] : j.at("chunk_tables").items()) {
      auto& out = r.chunk_tables[name];
      for (const auto& row : rows) {
        ChunkRow c;
        if (!row.at("lower_exclusive").is_null()) {
          c.lower_exclusive = row.at("lower_exclusive").get<size_t>();
        }
        c.upper_inclusive = row.at("upper_inclusive").get<size_t>();
        c.n = row.at("n").get<size_t>();
        c.eidetic_avg = row.at("eidetic_avg").get<double>();
        c.approx_avg = row.at("approx_avg").get<double>();
        out.push_back(c);
      }
    }
    r.detection = GridFromJson(j.at("detection"));
    for (const auto& row : j.at("detect_stats")) {
      r.detect_stats[row.at("prompt_len").get<size_t>()] = {row.at("members").get<size_t>(),
                                                            row.at("nonmembers").get<size_t>()};
    }
    for (const auto& [name, h] : j.at("histograms").items()) {
      Histogram& out = r.histograms[name];
      out.bin_width = h.at("bin_width").get<size_t>();
      if (!h.at("cap").is_null()) out.cap = h.at("cap").get<size_t>();
      out.bins = h.at("bins").get<std::vector<size_t>>();
      out.overflow = h.at("overflow").get<size_t>();
    }
    return r;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::kParse, std::string("malformed report JSON: ") + e.what());
  }
}

// Named CSV tables: quant, chunks, detection, detect_stats, histograms.
inline std::vector<std::pair<std::string, std::string>> CsvTables(const AuditReport& r) {
  std::vector<std::pair<std::string, std::string>> tables;
  {
    std::ostringstream out;
    out << "model,n,eidetic_max,eidetic_avg,approx_avg,approx_median\n";
    for (const auto& [name, s] : r.quant_tables) {
      out << csv::Field(name) << ',' << s.n << ',' << s.eidetic_max << ','
          << csv::Fixed(s.eidetic_avg, 6) << ',' << csv::Fixed(s.approx_avg, 6) << ','
          << csv::Fixed(s.approx_median, 6) << '\n';
    }
    tables.emplace_back("quant", out.str());
  }
  {
    std::ostringstream out;
    out << "model,lower_exclusive,upper_inclusive,n,eidetic_avg,approx_avg\n";
    for (const auto& [name, rows] : r.chunk_tables) {
      for (const ChunkRow& row : rows) {
        out << csv::Field(name) << ','
            << (row.lower_exclusive ? std::to_string(*row.lower_exclusive) : std::string()) << ','
            << row.upper_inclusive << ',' << row.n << ',' << csv::Fixed(row.eidetic_avg, 6) << ','
            << csv::Fixed(row.approx_avg, 6) << '\n';
      }
    }
    tables.emplace_back("chunks", out.str());
  }
  {
    std::ostringstream out;
    WriteGridCsv(out, r.detection);
    tables.emplace_back("detection", out.str());
  }
  {
    std::ostringstream out;
    out << "prompt_len,members,nonmembers\n";
    for (const auto& [len, c] : r.detect_stats) {
      out << len << ',' << c.members << ',' << c.nonmembers << '\n';
    }
    tables.emplace_back("detect_stats", out.str());
  }
  {
    std::ostringstream out;
    out << "histogram,bin_start,bin_end,count\n";
    for (const auto& [name, h] : r.histograms) {
      for (size_t i = 0; i < h.bins.size(); ++i) {
        out << csv::Field(name) << ',' << i * h.bin_width << ',' << (i + 1) * h.bin_width << ','
            << h.bins[i] << '\n';
      }
      if (h.cap) out << csv::Field(name) << ",>" << *h.cap << ",," << h.overflow << '\n';
    }
    tables.emplace_back("histograms", out.str());
  }
  return tables;
}

namespace internal {

inline void RenderMarkdown(std::ostream& out, const AuditReport& r) {
  const RunMetadata& m = r.metadata;
  out << "# Memorization audit report\n\n## Run\n\n| key | value |\n|---|---|\n";
  out << "| run id | " << m.run_id << " |\n";
  out << "| config digest | " << m.config_digest << " |\n";
  out << "| tool version | " << m.tool_version << " |\n";
  out << "| seed | " << m.seed << " (" << m.rng_algorithm << ") |\n";
  out << "| segmenter | " << m.segmenter << " |\n";
  out << "| Min-k% token selection | " << m.min_k_direction << " |\n";
  for (const std::string& b : m.backends) out << "| backend | `" << b << "` |\n";
  if (!m.created.empty()) out << "| created | " << m.created << " |\n";

  if (!r.quant_tables.empty()) {
    out << "\n## Memorization\n\n" << r.quant_examples << " evaluation examples ("
        << r.quant_skipped << " skipped for an empty private part).\n\n";
    out << "| model | n | eidetic max | eidetic average | approximate average | "
           "approximate median |\n|---|---:|---:|---:|---:|---:|\n";
    for (const auto& [name, s] : r.quant_tables) {
      out << "| " << name << " | " << s.n << " | " << s.eidetic_max << " | "
          << csv::Fixed(s.eidetic_avg, 3) << " | " << csv::Fixed(s.approx_avg, 6) << " | "
          << csv::Fixed(s.approx_median, 6) << " |\n";
    }
  }
  for (const auto& [name, rows] : r.chunk_tables) {
    out << "\n## Memorization by prompt length: " << name << "\n\n"
        << "| prompt length | n | eidetic | approximate |\n|---|---:|---:|---:|\n";
    for (const ChunkRow& row : rows) {
      out << "| " << (row.lower_exclusive ? std::to_string(*row.lower_exclusive) : std::string())
          << '-' << row.upper_inclusive << " | " << row.n << " | "
          << csv::Fixed(row.eidetic_avg, 6) << " | " << csv::Fixed(row.approx_avg, 6) << " |\n";
    }
  }
  if (!r.detect_stats.empty()) {
    out << "\n## Detection set\n\n| prompt length | members | nonmembers |\n|---:|---:|---:|\n";
    for (const auto& [len, c] : r.detect_stats) {
      out << "| " << len << " | " << c.members << " | " << c.nonmembers << " |\n";
    }
  }
  if (!r.detection.cells.empty()) {
    out << "\n## Detection\n\n";
    WriteGridMarkdown(out, r.detection);
  }
  for (const auto& [name, h] : r.histograms) {
    out << "\n## Histogram: " << name << "\n\n| characters | count |\n|---|---:|\n";
    for (size_t i = 0; i < h.bins.size(); ++i) {
      out << "| " << i * h.bin_width << '-' << (i + 1) * h.bin_width << " | " << h.bins[i]
          << " |\n";
    }
    if (h.cap) out << "| >" << *h.cap << " | " << h.overflow << " |\n";
  }
}

}  // namespace internal

inline std::string Render(const AuditReport& report, ReportFormat format) {
  std::ostringstream out;
  switch (format) {
    case ReportFormat::kMarkdown:
      internal::RenderMarkdown(out, report);
      break;
    case ReportFormat::kJson:
      out << ToJson(report).dump(2) << '\n';
      break;
    case ReportFormat::kCsv:
      for (const auto& [name, table] : CsvTables(report)) {
        out << "# " << name << ".csv\n" << table;
      }
      break;
  }
  return out.str();
}

inline std::string Render(const AuditReport& report, std::string_view format) {
  return Render(report, ParseReportFormat(format));
}

// Writes <dir>/report.md, report.json and one CSV per table.
inline void WriteReport(const AuditReport& report, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  auto write = [&](const std::string& file, const std::string& content) {
    std::ofstream out(dir / file, std::ios::binary);
    if (!out) throw Error(ErrorKind::kMissingInput, "cannot write " + (dir / file).string());
    out << content;
  };
  write("report.md", Render(report, ReportFormat::kMarkdown));
  write("report.json", Render(report, ReportFormat::kJson));
  for (const auto& [name, table] : CsvTables(report)) write(name + ".csv", table);
}

}  // namespace memaudit

#endif  // MEMAUDIT_REPORT_HPP_
