// Copyright 2026 The tokenshap Authors.
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

#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>

#include "doctest.h"
#include "test_support.h"
#include "tokenshap/aggregate.h"
#include "tokenshap/error.h"

using namespace tokenshap;

namespace {

const Dimension kDim{"affective", {"AS1", "AS2", "SS2"}};

AttributionRecord record(std::string id, std::string cls, std::vector<std::string> tokens,
                         std::vector<double> phi) {
  AttributionRecord r;
  r.id = std::move(id);
  r.class_id = std::move(cls);
  r.method = "partition";
  r.tokens = std::move(tokens);
  r.phi = std::move(phi);
  return r;
}

AggregateTable table_of(const std::map<std::string, double>& values, std::string cls = "AS1") {
  AggregateTable t(kDim);
  for (const auto& [w, v] : values) t.set(w, cls, AggregateEntry{v, 1, 1});
  return t;
}

std::vector<std::string> words(const RankedWordList& l) {
  std::vector<std::string> out;
  for (const auto& e : l.entries) out.push_back(e.word);
  return out;
}

// Per-class F1 from a full confusion matrix, weighted by support.
double f1_oracle(const std::vector<std::string>& gold, const std::vector<std::string>& pred,
                 const Dimension& dim) {
  const std::size_t k = dim.classes.size();
  std::vector<std::vector<std::size_t>> cm(k, std::vector<std::size_t>(k, 0));
  for (std::size_t i = 0; i < gold.size(); ++i) ++cm[*dim.index_of(gold[i])][*dim.index_of(pred[i])];
  double weighted = 0.0;
  for (std::size_t c = 0; c < k; ++c) {
    std::size_t row = 0, col = 0;
    for (std::size_t j = 0; j < k; ++j) {
      row += cm[c][j];
      col += cm[j][c];
    }
    const std::size_t denom = row + col;
    const double f1 = denom == 0 ? 0.0 : static_cast<double>(2 * cm[c][c]) / denom;
    weighted += static_cast<double>(row) * f1;
  }
  return weighted / static_cast<double>(gold.size());
}

}  // namespace

TEST_CASE("avg_shap is the mean over occurrences") {
  const std::vector<AttributionRecord> recs = {
      record("u1", "SS2", {"compare", "the", "radius"}, {0.9, 0.0, 0.1}),
      record("u2", "SS2", {"Compare", "it"}, {0.7, 0.2}),
  };
  const auto t = aggregate_avg_shap(recs, kDim);
  REQUIRE(t.find("compare", "SS2"));
  CHECK(t.find("compare", "SS2")->avg_shap == doctest::Approx(0.8).epsilon(1e-15));
  CHECK(t.find("compare", "SS2")->occurrences == 2);
  CHECK(t.find("compare", "SS2")->utterances == 2);
  CHECK(t.find("walao", "SS2") == nullptr);
  CHECK(t.find("compare", "AS1") == nullptr);
}

TEST_CASE("repeated words count every occurrence unless averaging per utterance") {
  const std::vector<AttributionRecord> recs = {
      record("u1", "AS1", {"huh", "huh", "huh"}, {1.0, 1.0, 1.0}),
      record("u2", "AS1", {"huh"}, {-1.0}),
  };
  const auto occ = aggregate_avg_shap(recs, kDim);
  CHECK(occ.find("huh", "AS1")->avg_shap == 0.5);
  CHECK(occ.find("huh", "AS1")->occurrences == 4);
  CHECK(occ.find("huh", "AS1")->utterances == 2);
  AggregateOptions per_utt;
  per_utt.average = AverageMode::kUtterance;
  CHECK(aggregate_avg_shap(recs, kDim, per_utt).find("huh", "AS1")->avg_shap == 0.0);
}

TEST_CASE("subword pieces are summed into their word") {
  const std::vector<AttributionRecord> recs = {
      record("u1", "AS1", {"wal", "##ao", "la"}, {0.25, 0.5, 0.1}),
  };
  const auto t = aggregate_avg_shap(recs, kDim);
  CHECK(t.find("walao", "AS1")->avg_shap == 0.75);
  CHECK(t.find("wal", "AS1") == nullptr);
  AggregateOptions raw;
  raw.merge_subwords = false;
  CHECK(aggregate_avg_shap(recs, kDim, raw).find("##ao", "AS1")->avg_shap == 0.5);
}

TEST_CASE("gold scope keeps only the gold class of each utterance") {
  const std::vector<AttributionRecord> recs = {
      record("u1", "AS1", {"x"}, {1.0}),
      record("u1", "AS2", {"x"}, {2.0}),
      record("u2", "AS1", {"x"}, {3.0}),
  };
  AggregateOptions o;
  o.scope = ClassScope::kGold;
  o.gold_labels = {{"u1", "AS2"}, {"u2", "AS1"}};
  const auto t = aggregate_avg_shap(recs, kDim, o);
  CHECK(t.find("x", "AS1")->avg_shap == 3.0);
  CHECK(t.find("x", "AS2")->avg_shap == 2.0);
}

TEST_CASE("records from another dimension are rejected") {
  const std::vector<AttributionRecord> recs = {record("u1", "SS9", {"x"}, {1.0})};
  try {
    aggregate_avg_shap(recs, kDim);
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::kMixedDimension);
  }
}

TEST_CASE("aggregation is invariant to record order and satisfies its invariants") {
  std::mt19937_64 rng(31);
  std::uniform_real_distribution<double> val(-1.0, 1.0);
  const std::vector<std::string> vocab = {"a", "b", "c", "d", "E", "f", "##g"};
  std::vector<AttributionRecord> recs;
  for (int i = 0; i < 200; ++i) {
    std::vector<std::string> toks(1 + rng() % 6);
    std::vector<double> phi(toks.size());
    for (std::size_t j = 0; j < toks.size(); ++j) {
      toks[j] = vocab[rng() % vocab.size()];
      phi[j] = val(rng);
    }
    recs.push_back(record("u" + std::to_string(i), kDim.classes[rng() % 3], toks, phi));
  }
  const auto base = aggregate_avg_shap(recs, kDim);
  for (int t = 0; t < 10; ++t) {
    std::shuffle(recs.begin(), recs.end(), rng);
    CHECK(aggregate_avg_shap(recs, kDim) == base);
  }
  // Split accumulation merged back gives the same table.
  AvgShapAccumulator left(kDim, {}), right(kDim, {});
  for (std::size_t i = 0; i < recs.size(); ++i) (i % 2 ? left : right).add(recs[i]);
  left.merge(right);
  CHECK(left.finish() == base);
  for (const auto& [w, row] : base.words()) {
    for (const auto& [cls, e] : row) {
      CHECK(e.occurrences >= e.utterances);
      CHECK(e.utterances >= 1);
      CHECK(std::isfinite(e.avg_shap));
    }
  }
}

TEST_CASE("rank_top_words examples") {
  const auto l = rank_top_words(table_of({{"a", 0.8}, {"b", -0.5}, {"c", 0.1}}), "AS1", 2);
  REQUIRE(l.entries.size() == 2);
  CHECK(l.entries[0].word == "a");
  CHECK(l.entries[0].label == RankLabel{true, 1});
  CHECK(l.entries[1].word == "b");
  CHECK(l.entries[1].label == RankLabel{false, 1});

  const auto zeros = rank_top_words(table_of({{"x", 0.0}, {"y", 0.0}}), "AS1");
  for (const auto& e : zeros.entries) CHECK_FALSE(e.label.has_value());

  const auto huh = rank_top_words(table_of({{"huh", -0.77}, {"ok", 0.2}, {"la", -0.1}}), "AS1");
  CHECK(huh.entries[0].word == "huh");
  CHECK(huh.entries[0].label->to_string() == "N1");
  CHECK_THROWS_AS(rank_top_words(table_of({}), "AS1", 0), Error);
  CHECK_THROWS_AS(rank_top_words(table_of({}), "ZZ"), Error);
}

TEST_CASE("rank labels parse back") {
  for (int r = 1; r <= 10; ++r) {
    for (bool pos : {true, false}) {
      const RankLabel l{pos, r};
      CHECK(RankLabel::parse(l.to_string()) == l);
    }
  }
  CHECK_FALSE(RankLabel::parse("P0").has_value());
  CHECK_FALSE(RankLabel::parse("X1").has_value());
  CHECK_FALSE(RankLabel::parse("").has_value());
}

TEST_CASE("ranked lists satisfy ordering and labeling invariants") {
  std::mt19937_64 rng(77);
  for (int trial = 0; trial < 200; ++trial) {
    std::map<std::string, double> vals;
    const int count = static_cast<int>(rng() % 40);
    for (int i = 0; i < count; ++i) {
      // Coarse values force ties.
      vals["w" + std::to_string(rng() % 60)] = static_cast<double>(static_cast<int>(rng() % 9) - 4) / 4;
    }
    const std::size_t k = 1 + rng() % 25;
    const auto l = rank_top_words(table_of(vals), "AS1", k);
    CHECK(l.entries.size() == std::min(k, vals.size()));
    int pos = 0, neg = 0;
    for (std::size_t i = 0; i < l.entries.size(); ++i) {
      const auto& e = l.entries[i];
      if (i > 0) {
        const auto& p = l.entries[i - 1];
        CHECK((std::abs(p.avg_shap) > std::abs(e.avg_shap) ||
               (std::abs(p.avg_shap) == std::abs(e.avg_shap) && p.word < e.word)));
      }
      if (e.avg_shap > 0 && pos < 10) {
        CHECK(e.label == RankLabel{true, ++pos});
      } else if (e.avg_shap < 0 && neg < 10) {
        CHECK(e.label == RankLabel{false, ++neg});
      } else {
        CHECK_FALSE(e.label.has_value());
      }
    }
    // Brute force: the list is the k largest by (|v| desc, word asc).
    std::vector<std::pair<std::string, double>> all(vals.begin(), vals.end());
    std::sort(all.begin(), all.end(), [](const auto& a, const auto& b) {
      return std::abs(a.second) != std::abs(b.second) ? std::abs(a.second) > std::abs(b.second)
                                                      : a.first < b.first;
    });
    all.resize(std::min(k, all.size()));
    std::vector<std::string> expected;
    for (const auto& [w, v] : all) expected.push_back(w);
    CHECK(words(l) == expected);
  }
}

TEST_CASE("min_ratio diagnostic") {
  const auto l = rank_top_words(
      table_of({{"a", 0.8}, {"b", -0.7}, {"c", 0.6}, {"d", 0.5}, {"e", -0.4}}), "AS1");
  CHECK(min_ratio_diagnostic(l) == doctest::Approx(0.5).epsilon(1e-15));
  CHECK(min_ratio_diagnostic(rank_top_words(table_of({{"a", -0.3}}), "AS1")) == 1.0);
  CHECK(min_ratio_diagnostic(rank_top_words(table_of({{"a", 0.0}}), "AS1")) == 0.0);
}

TEST_CASE("task text frequency") {
  const std::vector<std::string> w = {"radius", "Circle"};
  const auto counts = task_text_frequency(w, "The radius of the RADIUS, not the circle's.");
  CHECK(counts.at("radius") == 2);
  CHECK(counts.at("circle") == 0);
  CHECK(task_text_frequency(w, "").at("radius") == 0);
  const std::vector<std::string> one = {"radius"};
  CHECK(task_text_frequency(one, "the radius of the radius").at("radius") == 2);
}

TEST_CASE("weighted F1 hand cases") {
  const Dimension d{"d", {"A", "B"}};
  const std::vector<std::string> gold = {"A", "A", "B", "B"};
  const std::vector<std::string> pred = {"A", "B", "B", "B"};
  const auto r = weighted_f1(gold, pred, d);
  CHECK(r.classes[0].f1 == doctest::Approx(2.0 / 3).epsilon(1e-15));
  CHECK(r.classes[1].f1 == doctest::Approx(4.0 / 5).epsilon(1e-15));
  CHECK(std::abs(r.weighted_f1 - 11.0 / 15) <= 1e-15);
  CHECK(weighted_f1(gold, gold, d).weighted_f1 == 1.0);
  CHECK_THROWS_AS(weighted_f1(gold, std::vector<std::string>{"A"}, d), Error);
}

TEST_CASE("weighted F1 equals the confusion-matrix oracle") {
  std::mt19937_64 rng(2024);
  for (int trial = 0; trial < 1000; ++trial) {
    const std::size_t k = 2 + rng() % 9;
    const Dimension d{"d", tokenshap::testing::class_names(k)};
    const std::size_t n = 1 + rng() % 60;
    std::vector<std::string> gold(n), pred(n);
    for (std::size_t i = 0; i < n; ++i) {
      gold[i] = d.classes[rng() % k];
      pred[i] = rng() % 3 == 0 ? gold[i] : d.classes[rng() % k];
    }
    const auto r = weighted_f1(gold, pred, d);
    CHECK(r.weighted_f1 == f1_oracle(gold, pred, d));
    for (const auto& c : r.classes) {
      CHECK(c.precision >= 0.0);
      CHECK(c.precision <= 1.0);
      CHECK(c.recall >= 0.0);
      CHECK(c.recall <= 1.0);
      // The harmonic-mean form agrees.
      const double h = c.precision + c.recall == 0.0
                           ? 0.0
                           : 2 * c.precision * c.recall / (c.precision + c.recall);
      CHECK(std::abs(h - c.f1) <= 1e-12);
    }
  }
}

TEST_CASE("aggregate and ranked CSVs round trip") {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> val(-1.0, 1.0);
  AggregateTable t(kDim);
  for (int i = 0; i < 30; ++i) {
    t.set("w,\"" + std::to_string(i), kDim.classes[rng() % 3],
          AggregateEntry{val(rng), 2 + rng() % 5, 1 + rng() % 2});
  }
  std::stringstream ss;
  write_aggregate_csv(ss, t);
  CHECK(read_aggregate_csv(ss, kDim) == t);

  std::vector<RankedWordList> lists;
  for (const auto& c : kDim.classes) lists.push_back(rank_top_words(t, c));
  std::stringstream rs;
  write_ranked_csv(rs, lists);
  CHECK(read_ranked_csv(rs) == lists);
}

TEST_CASE("aggregate CSV row shape for a single summary entry") {
  AggregateTable t(kDim);
  t.set("compare", "SS2", AggregateEntry{0.81, 12, 9});
  std::ostringstream out;
  write_aggregate_csv(out, t);
  CHECK(out.str() == "word,class,avg_shap,occurrences,utterances\ncompare,SS2,0.81,12,9\n");
}
