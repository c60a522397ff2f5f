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

#ifndef MEMAUDIT_NGRAM_HPP_
#define MEMAUDIT_NGRAM_HPP_

// Character n-gram language model with add-alpha smoothing. Serves as the
// built-in backend: trains in well under a second on desk-scale corpora
// and memorizes text in proportion to how often it was duplicated.
//
// Every training text is framed as BOS text EOS. A symbol is predicted
// from the longest suffix (at most order-1 symbols) of its history that
// was observed as a context during training:
//
//   P(c | ctx) = (count(ctx, c) + alpha) / (count(ctx) + alpha * V)
//
// where V counts the distinct characters plus EOS.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <map>
#include <mutex>
#include <set>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <utility>
#include <vector>

#include <json.hpp>

#include "memaudit/backend.hpp"
#include "memaudit/corpus.hpp"
#include "memaudit/digest.hpp"
#include "memaudit/error.hpp"
#include "memaudit/unicode.hpp"

namespace memaudit {

// What the model treats as one training document. Sentence units frame
// every sentence with BOS/EOS, so greedy decoding stops at a sentence end.
enum class TrainingUnit { kSentence, kArticle };

inline std::string_view ToString(TrainingUnit u) {
  return u == TrainingUnit::kSentence ? "sentence" : "article";
}

inline TrainingUnit ParseTrainingUnit(std::string_view s) {
  if (s == "sentence") return TrainingUnit::kSentence;
  if (s == "article") return TrainingUnit::kArticle;
  throw Error(ErrorKind::kInvalidConfig, "unknown training unit '" + std::string(s) + "'");
}

struct NgramConfig {
  size_t order = 5;
  double smoothing_alpha = 0.01;
  uint64_t duplication_factor = 1;
  uint64_t seed = 0;
  TrainingUnit unit = TrainingUnit::kSentence;

  void Validate() const {
    if (order < 1) throw Error(ErrorKind::kInvalidConfig, "n-gram order must be >= 1");
    if (!(smoothing_alpha > 0.0) || !std::isfinite(smoothing_alpha)) {
      throw Error(ErrorKind::kInvalidConfig, "smoothing_alpha must be > 0");
    }
    if (duplication_factor < 1) {
      throw Error(ErrorKind::kInvalidConfig, "duplication_factor must be >= 1");
    }
  }
};

class NgramModel {
 public:
  static constexpr char32_t kBos = U'\u0002';
  static constexpr char32_t kEos = U'\u0003';

  struct Context {
    uint64_t total = 0;
    std::map<char32_t, uint64_t> next;
  };

  NgramModel() = default;
  explicit NgramModel(const NgramConfig& cfg) : cfg_(cfg) { cfg_.Validate(); }

  const NgramConfig& config() const { return cfg_; }
  size_t vocab_size() const { return vocab_.size(); }
  size_t context_count() const { return contexts_.size(); }

  // Counts every n-gram of `text` `times` times, equivalent to appending
  // `times` copies of the text to the training multiset.
  void Add(std::string_view text, uint64_t times = 1) {
    if (times == 0) return;
    for (const std::string& unit : Units(text)) AddUnit(unit, times);
  }

  // Count of `symbol` after exactly `context` (no backoff).
  uint64_t Count(std::u32string_view context, char32_t symbol) const {
    auto it = contexts_.find(std::u32string(context));
    if (it == contexts_.end()) return 0;
    auto n = it->second.next.find(symbol);
    return n == it->second.next.end() ? 0 : n->second;
  }

  uint64_t ContextTotal(std::u32string_view context) const {
    auto it = contexts_.find(std::u32string(context));
    return it == contexts_.end() ? 0 : it->second.total;
  }

  // Longest observed context for a history ending at history.end().
  const Context& ContextFor(std::u32string_view history) const {
    const size_t max_len = std::min(cfg_.order - 1, history.size());
    for (size_t len = max_len + 1; len-- > 0;) {
      auto it = contexts_.find(std::u32string(history.substr(history.size() - len)));
      if (it != contexts_.end()) return it->second;
    }
    throw Error(ErrorKind::kInvalidArgument, "n-gram model has not been trained");
  }

  double LogProb(const Context& ctx, char32_t symbol) const {
    auto it = ctx.next.find(symbol);
    const double count = it == ctx.next.end() ? 0.0 : static_cast<double>(it->second);
    const double v = static_cast<double>(vocab_.size());
    return std::log((count + cfg_.smoothing_alpha) /
                    (static_cast<double>(ctx.total) + cfg_.smoothing_alpha * v));
  }

  // Greedy argmax decoding; ties go to the smaller codepoint. Stops at EOS.
  // The history is BOS plus the prompt's last unit.
  std::string Generate(std::string_view prompt, size_t max_new_tokens) const {
    const std::vector<std::string> units = Units(prompt);
    std::u32string history;
    history.push_back(kBos);
    if (!units.empty()) {
      for (char32_t c : unicode::Decode(units.back())) history.push_back(c);
    }
    std::u32string out;
    for (size_t step = 0; step < max_new_tokens; ++step) {
      const Context& ctx = ContextFor(history);
      char32_t best = kEos;
      uint64_t best_count = 0;
      for (const auto& [symbol, count] : ctx.next) {
        if (count > best_count) {
          best = symbol;
          best_count = count;
        }
      }
      if (best == kEos) break;
      out.push_back(best);
      history.push_back(best);
      if (history.size() > 4 * cfg_.order) history.erase(0, history.size() - cfg_.order);
    }
    return unicode::Encode(out);
  }

  // One token per codepoint, each conditioned on BOS plus the preceding
  // text of its unit.
  TokenLogprobs Score(std::string_view text) const {
    TokenLogprobs lp;
    for (const std::string& unit : Units(text)) {
      std::u32string history;
      history.push_back(kBos);
      for (char32_t c : unicode::Decode(unit)) {
        lp.tokens.push_back(unicode::Encode(c));
        lp.logprobs.push_back(LogProb(ContextFor(history), c));
        history.push_back(c);
      }
    }
    return lp;
  }

  nlohmann::json ToJson() const {
    std::vector<const std::pair<const std::u32string, Context>*> sorted;
    sorted.reserve(contexts_.size());
    for (const auto& entry : contexts_) sorted.push_back(&entry);
    std::sort(sorted.begin(), sorted.end(),
              [](const auto* a, const auto* b) { return a->first < b->first; });
    nlohmann::json contexts = nlohmann::json::array();
    for (const auto* entry : sorted) {
      nlohmann::json next = nlohmann::json::array();
      for (const auto& [symbol, count] : entry->second.next) {
        next.push_back({unicode::Encode(symbol), count});
      }
      contexts.push_back({unicode::Encode(entry->first), std::move(next)});
    }
    std::u32string vocab(vocab_.begin(), vocab_.end());
    return {{"header",
             {{"format", "memaudit-ngram"},
              {"version", 1},
              {"order", cfg_.order},
              {"alpha", cfg_.smoothing_alpha},
              {"vocab_size", vocab_.size()},
              {"seed", cfg_.seed},
              {"unit", ToString(cfg_.unit)}}},
            {"vocab", unicode::Encode(vocab)},
            {"contexts", std::move(contexts)}};
  }

  static NgramModel FromJson(const nlohmann::json& j) {
    try {
      const auto& header = j.at("header");
      if (header.at("format") != "memaudit-ngram") {
        throw Error(ErrorKind::kParse, "not a memaudit n-gram model");
      }
      NgramConfig cfg;
      cfg.order = header.at("order").get<size_t>();
      cfg.smoothing_alpha = header.at("alpha").get<double>();
      cfg.seed = header.at("seed").get<uint64_t>();
      cfg.unit = ParseTrainingUnit(header.at("unit").get<std::string>());
      NgramModel model(cfg);
      for (char32_t c : unicode::Decode(j.at("vocab").get<std::string>())) model.vocab_.insert(c);
      if (model.vocab_.size() != header.at("vocab_size").get<size_t>()) {
        throw Error(ErrorKind::kParse, "vocab_size does not match the vocabulary");
      }
      for (const auto& entry : j.at("contexts")) {
        Context& ctx = model.contexts_[unicode::Decode(entry.at(0).get<std::string>())];
        for (const auto& pair : entry.at(1)) {
          const std::u32string symbol = unicode::Decode(pair.at(0).get<std::string>());
          const uint64_t count = pair.at(1).get<uint64_t>();
          if (symbol.size() != 1) throw Error(ErrorKind::kParse, "bad symbol in model file");
          ctx.next[symbol[0]] = count;
          ctx.total += count;
        }
      }
      return model;
    } catch (const nlohmann::json::exception& e) {
      throw Error(ErrorKind::kParse, std::string("malformed n-gram model: ") + e.what());
    }
  }

  void Save(const std::filesystem::path& path) const {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error(ErrorKind::kMissingInput, "cannot write " + path.string());
    out << ToJson().dump() << '\n';
  }

  static NgramModel Load(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorKind::kMissingInput, "cannot read model " + path.string());
    try {
      return FromJson(nlohmann::json::parse(in));
    } catch (const nlohmann::json::parse_error& e) {
      throw Error(ErrorKind::kParse, path.string() + ": " + e.what());
    }
  }

  // Digest of the serialized counts.
  std::string Digest() const { return Sha256Hex(ToJson().dump()); }

 private:
  std::vector<std::string> Units(std::string_view text) const {
    if (cfg_.unit == TrainingUnit::kSentence) return SplitSentences(text);
    if (text.empty()) return {};
    return {std::string(text)};
  }

  void AddUnit(std::string_view text, uint64_t times) {
    std::u32string seq;
    seq.push_back(kBos);
    for (char32_t c : unicode::Decode(text)) {
      if (c == kBos || c == kEos) continue;
      seq.push_back(c);
    }
    seq.push_back(kEos);
    for (size_t i = 1; i < seq.size(); ++i) {
      vocab_.insert(seq[i]);
      const size_t max_len = std::min(cfg_.order - 1, i);
      for (size_t len = 0; len <= max_len; ++len) {
        Context& ctx = contexts_[seq.substr(i - len, len)];
        ctx.total += times;
        ctx.next[seq[i]] += times;
      }
    }
  }

  NgramConfig cfg_;
  std::set<char32_t> vocab_;
  std::unordered_map<std::u32string, Context> contexts_;
};

// Trains on public + private of every article. Articles whose id is in
// `duplicated` (or all articles when it is null) are counted
// duplication_factor times, the rest once.
inline NgramModel TrainNgram(const std::vector<Article>& corpus, const NgramConfig& cfg,
                             const std::unordered_set<std::string>* duplicated = nullptr) {
  if (corpus.empty()) throw Error(ErrorKind::kInvalidArgument, "training corpus is empty");
  NgramModel model(cfg);
  for (const Article& a : corpus) {
    const bool dup = duplicated == nullptr || duplicated->count(a.id) > 0;
    model.Add(a.full_text(), dup ? cfg.duplication_factor : 1);
  }
  return model;
}

class NgramBackend : public Backend {
 public:
  NgramBackend(BackendDescriptor descriptor, NgramModel model)
      : descriptor_(std::move(descriptor)), model_(std::move(model)) {}

  const BackendDescriptor& descriptor() const override { return descriptor_; }
  const NgramModel& model() const { return model_; }

  std::string Generate(const std::string& prompt, size_t max_new_tokens) override {
    return model_.Generate(prompt, max_new_tokens);
  }

  TokenLogprobs Logprobs(const std::string& text) override { return model_.Score(text); }

  std::string Fingerprint() const override {
    std::call_once(digest_once_, [this] { digest_ = model_.Digest(); });
    return descriptor_.ToSpec() + "#" + digest_;
  }

 private:
  BackendDescriptor descriptor_;
  NgramModel model_;
  mutable std::once_flag digest_once_;
  mutable std::string digest_;
};

}  // namespace memaudit

#endif  // MEMAUDIT_NGRAM_HPP_
