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

#ifndef MEMAUDIT_DEMO_HPP_
#define MEMAUDIT_DEMO_HPP_

// Seeded synthetic corpus of Japanese business-news articles built from
// template sentences with entity slots. Each article has a fact-dense lead
// sentence, a variable number of detail sentences and a short generic
// outlook, so lengths (and hence paywall boundaries) vary.

#include <array>
#include <cstdint>
#include <cstdio>
#include <string>
#include <string_view>
#include <vector>

#include "memaudit/corpus.hpp"
#include "memaudit/random.hpp"

namespace memaudit {

struct DemoOptions {
  size_t n_docs = 500;
  // Articles dated January 2023 (after the default training cutoff).
  size_t n_late = 50;
  uint64_t seed = 0;
  size_t min_detail = 2;
  size_t max_detail = 16;
};

namespace internal {

constexpr std::array<std::string_view, 40> kKatakana = {
    "ア", "イ", "ウ", "エ", "オ", "カ", "キ", "ク", "ケ", "コ", "サ", "シ", "ス", "セ",
    "ソ", "タ", "チ", "ツ", "テ", "ト", "ナ", "ニ", "ノ", "ハ", "ヒ", "フ", "ヘ", "ホ",
    "マ", "ミ", "ム", "メ", "モ", "ラ", "リ", "ル", "レ", "ロ", "ワ", "ン"};
constexpr std::array<std::string_view, 10> kCompanySuffix = {
    "工業", "電機", "ホールディングス", "商事", "化学", "製薬", "銀行", "証券", "自動車", "食品"};
constexpr std::array<std::string_view, 20> kSurname = {
    "佐藤", "鈴木", "高橋", "田中", "伊藤", "渡辺", "山本", "中村", "小林", "加藤",
    "吉田", "山田", "佐々木", "山口", "松本", "井上", "木村", "林", "清水", "山崎"};
constexpr std::array<std::string_view, 24> kGivenKanji = {
    "健", "一", "郎", "誠", "雄", "和", "彦", "太", "明", "正", "博", "隆",
    "美", "子", "恵", "直", "浩", "治", "修", "剛", "幸", "昭", "信", "久"};
constexpr std::array<std::string_view, 16> kPlace = {
    "北海道", "宮城県", "茨城県", "栃木県", "群馬県", "埼玉県", "千葉県", "神奈川県",
    "新潟県", "静岡県", "愛知県", "三重県", "大阪府", "兵庫県", "広島県", "福岡県"};
constexpr std::array<std::string_view, 12> kProductHead = {
    "半導体", "電池", "医薬品", "センサー", "鋼材", "樹脂", "冷凍食品", "電子部品",
    "産業機械", "蓄電池", "化粧品", "工作機械"};

// Slots: {C} company, {C2} second company, {P} person, {L} place,
// {X} product, {N} integer, {Q} percentage, {M} month, {D} day, {Y} year.
constexpr std::array<std::string_view, 5> kLead = {
    "{C}は{M}月{D}日、{L}に{X}の新工場を建設すると発表した。",
    "{C}は{M}月{D}日、{C2}と{X}事業で資本業務提携すると発表した。",
    "{C}は{M}月{D}日、{X}の生産能力を{Q}％増強する計画を明らかにした。",
    "{C}の{P}社長は{M}月{D}日、{X}事業を分社化する方針を示した。",
    "{C}は{M}月{D}日、{Y}年度の設備投資を{N}億円とすると発表した。",
};
constexpr std::array<std::string_view, 14> kDetail = {
    "投資額は約{N}億円で、{Y}年の稼働を目指す。",
    "{P}社長は記者会見で「{X}の需要は今後も拡大する」と述べた。",
    "同社の{Y}年{M}月期の連結純利益は前年同期比{Q}％増の{N}億円だった。",
    "{L}の工場では新たに{N}人を採用する計画だ。",
    "{X}の販売は海外市場で好調に推移している。",
    "東証プライム市場で{C}株は前日比{N}円高の{N}円で取引を終えた。",
    "{C2}も{L}での生産能力を{Q}％引き上げる方針を示している。",
    "{C}は{X}の開発で{C2}と共同研究を進めてきた。",
    "売上高は{N}億円と過去最高を更新する見通しだ。",
    "{P}氏は「脱炭素に向けた取り組みを加速する」と強調した。",
    "新会社には{C}が{Q}％、{C2}が残りを出資する。",
    "{L}の拠点は{Y}年に稼働した主力工場で、従業員は約{N}人。",
    "{X}の世界シェアは約{Q}％に達する。",
    "同社は{Y}年までに{X}の売上高を{N}億円に引き上げる目標を掲げる。",
};
constexpr std::array<std::string_view, 6> kOutlook = {
    "市場関係者の間では今後の需要動向を見極めたいとの声が多い。",
    "業界では同様の動きが広がる可能性がある。",
    "原材料価格の高騰が収益を圧迫するリスクも残る。",
    "円安が追い風となり、輸出企業の業績は堅調に推移している。",
    "政府も関連産業への支援策を拡充する方針だ。",
    "競合他社の動向も注目されそうだ。",
};

struct Cast {
  std::string company;
  std::string company2;
  std::string person;
  std::string place;
  std::string product;
};

inline std::string RandomKatakana(SplitMix64& rng, size_t min_len, size_t max_len) {
  const size_t len = min_len + rng.Below(max_len - min_len + 1);
  std::string s;
  for (size_t i = 0; i < len; ++i) s += kKatakana[rng.Below(kKatakana.size())];
  return s;
}

template <size_t N>
std::string_view Pick(SplitMix64& rng, const std::array<std::string_view, N>& items) {
  return items[rng.Below(N)];
}

inline std::string Fill(std::string_view tmpl, const Cast& cast, SplitMix64& rng) {
  std::string out;
  size_t i = 0;
  while (i < tmpl.size()) {
    if (tmpl[i] != '{') {
      out += tmpl[i++];
      continue;
    }
    const size_t close = tmpl.find('}', i);
    const std::string_view slot = tmpl.substr(i + 1, close - i - 1);
    i = close + 1;
    if (slot == "C") out += cast.company;
    else if (slot == "C2") out += cast.company2;
    else if (slot == "P") out += cast.person;
    else if (slot == "L") out += cast.place;
    else if (slot == "X") out += cast.product;
    else if (slot == "N") out += std::to_string(10 + rng.Below(9990));
    else if (slot == "Q") out += std::to_string(1 + rng.Below(60));
    else if (slot == "M") out += std::to_string(1 + rng.Below(12));
    else if (slot == "D") out += std::to_string(1 + rng.Below(28));
    else if (slot == "Y") out += std::to_string(2015 + rng.Below(15));
  }
  return out;
}

}  // namespace internal

inline std::vector<Article> GenerateDemoCorpus(const DemoOptions& opts) {
  using namespace internal;
  SplitMix64 rng(opts.seed);
  std::vector<Article> articles;
  articles.reserve(opts.n_docs);
  for (size_t d = 0; d < opts.n_docs; ++d) {
    Cast cast;
    cast.company = RandomKatakana(rng, 2, 4) + std::string(Pick(rng, kCompanySuffix));
    cast.company2 = RandomKatakana(rng, 2, 4) + std::string(Pick(rng, kCompanySuffix));
    cast.person = std::string(Pick(rng, kSurname)) + std::string(Pick(rng, kGivenKanji)) +
                  std::string(Pick(rng, kGivenKanji));
    cast.place = std::string(Pick(rng, kPlace));
    cast.product = RandomKatakana(rng, 1, 3) + std::string(Pick(rng, kProductHead));

    std::string text = Fill(Pick(rng, kLead), cast, rng);
    const size_t details =
        opts.min_detail + rng.Below(opts.max_detail - opts.min_detail + 1);
    for (size_t s = 0; s < details; ++s) text += Fill(Pick(rng, kDetail), cast, rng);
    const size_t outlook = 1 + rng.Below(2);
    for (size_t s = 0; s < outlook; ++s) text += Fill(Pick(rng, kOutlook), cast, rng);

    Article a;
    char id[32];
    std::snprintf(id, sizeof(id), "demo-%05zu", d + 1);
    a.id = id;
    const bool late = d >= opts.n_docs - std::min(opts.n_late, opts.n_docs);
    if (late) {
      a.date = Date(2023, 1, static_cast<unsigned>(1 + rng.Below(31)));
    } else {
      const auto day = std::chrono::sys_days(std::chrono::year{2021} / 1 / 1) +
                       std::chrono::days(rng.Below(365));
      a.date = Date(std::chrono::year_month_day(day));
    }
    a.public_part = std::move(text);
    a.needs_split = true;
    articles.push_back(std::move(a));
  }
  return articles;
}

}  // namespace memaudit

#endif  // MEMAUDIT_DEMO_HPP_
