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

#include <cmath>
#include <random>
#include <sstream>

#include "doctest.h"
#include "tokenshap/error.h"
#include "tokenshap/simcheck.h"

using namespace tokenshap;

namespace {

EmbeddingStore parse(const std::string& text) {
  std::istringstream in(text);
  return EmbeddingStore::read_word2vec(in);
}

Errc error_code(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("expected an error");
  return Errc::kIo;
}

RankedWordList positives(std::string cls, std::vector<std::string> words) {
  RankedWordList l{std::move(cls), {}};
  int rank = 0;
  for (auto& w : words) l.entries.push_back(RankedEntry{w, 1.0, RankLabel{true, ++rank}});
  return l;
}

}  // namespace

TEST_CASE("word2vec text loading") {
  const auto s = parse("2 3\na 1 0 0\nb 0 1 0\n");
  CHECK(s.size() == 2);
  CHECK(s.dim() == 3);
  CHECK(*s.find("b") == std::vector<double>{0, 1, 0});
  CHECK(error_code([] { parse(""); }) == Errc::kMalformedHeader);
  CHECK(error_code([] { parse("x 3\n"); }) == Errc::kMalformedHeader);
  try {
    parse("2 3\na 1 0 0\nb 0 1\n");
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::kDimensionMismatch);
    CHECK(std::string(e.what()).find("line 3") != std::string::npos);
  }
  CHECK_THROWS_AS(parse("3 2\na 1 0\n"), Error);
}

TEST_CASE("duplicate words keep the last vector and warn") {
  const auto s = parse("2 2\na 1 0\na 0 1\n");
  CHECK(s.size() == 1);
  CHECK(*s.find("a") == std::vector<double>{0, 1});
  CHECK(s.warnings().size() == 1);
}

TEST_CASE("cosine hand cases") {
  const std::vector<double> x = {1, 0}, y = {0, 1}, d = {1, 1}, z = {0, 0};
  CHECK(cosine(x, x) == 1.0);
  CHECK(cosine(x, y) == 0.0);
  CHECK(std::abs(cosine(x, d) - 0.70711) <= 1e-5);
  CHECK(error_code([&] { cosine(x, z); }) == Errc::kZeroVector);
  CHECK(error_code([&] { cosine(x, std::vector<double>{1, 2, 3}); }) == Errc::kDimensionMismatch);
  const auto s = parse("1 2\na 1 0\n");
  CHECK(error_code([&] { cosine(s, "a", "zzz"); }) == Errc::kMissingWord);
}

TEST_CASE("cosine symmetry, scale invariance and range") {
  std::mt19937_64 rng(8);
  std::normal_distribution<double> g(0.0, 1.0);
  std::uniform_real_distribution<double> scale(1e-3, 1e3);
  for (int trial = 0; trial < 1000; ++trial) {
    const std::size_t dim = 1 + rng() % 50;
    std::vector<double> a(dim), b(dim);
    for (auto& v : a) v = g(rng);
    for (auto& v : b) v = g(rng);
    const double c = cosine(a, b);
    CHECK(c == cosine(b, a));
    CHECK(c >= -1.0);
    CHECK(c <= 1.0);
    std::vector<double> sa = a;
    const double k = scale(rng);
    for (auto& v : sa) v *= k;
    CHECK(std::abs(cosine(sa, b) - c) <= 1e-12);
    std::vector<double> na = a;
    for (auto& v : na) v = -v;
    CHECK(std::abs(cosine(na, b) + c) <= 1e-12);
    const double self = cosine(a, sa);
    CHECK(self <= 1.0);
    CHECK(std::abs(self - 1.0) <= 1e-12);
  }
}

TEST_CASE("spuriousness flags") {
  EmbeddingStore s(2);
  s.insert("anchor", {1.0, 0.0});
  s.insert("planted", {0.9, std::sqrt(1 - 0.81)});
  s.insert("filler", {0.0, 1.0});
  const std::vector<RankedWordList> lists = {positives("A", {"planted", "filler", "ghost"})};

  const auto rows = spuriousness_report(lists, {{"A", {"anchor"}}}, s, 0.3);
  REQUIRE(rows.size() == 3);
  CHECK(rows[0].flag == SpuriousFlag::kOk);
  CHECK(*rows[0].best_cosine == doctest::Approx(0.9));
  CHECK(rows[1].flag == SpuriousFlag::kSpurious);
  CHECK(rows[2].flag == SpuriousFlag::kNoVector);

  const auto self = spuriousness_report(std::vector{positives("A", {"anchor"})},
                                        {{"A", {"anchor"}}}, s, 0.999);
  CHECK(self[0].flag == SpuriousFlag::kOk);
  CHECK(*self[0].best_cosine == 1.0);

  for (const auto& r : spuriousness_report(lists, {{"A", {}}}, s, 0.3)) {
    if (r.word != "ghost") CHECK(r.flag == SpuriousFlag::kNoAnchor);
  }
  for (const auto& r : spuriousness_report(lists, {}, s, 0.3)) {
    if (r.word != "ghost") CHECK(r.flag == SpuriousFlag::kNoAnchor);
  }
}

TEST_CASE("only positively labeled words are checked") {
  EmbeddingStore s(2);
  s.insert("a", {1.0, 0.0});
  RankedWordList l{"A", {RankedEntry{"neg", -1.0, RankLabel{false, 1}},
                         RankedEntry{"zero", 0.0, std::nullopt},
                         RankedEntry{"a", 0.5, RankLabel{true, 1}}}};
  const auto rows = spuriousness_report(std::vector{l}, {{"A", {"a"}}}, s, 0.3);
  REQUIRE(rows.size() == 1);
  CHECK(rows[0].word == "a");
  std::ostringstream csv;
  write_spuriousness_csv(csv, rows);
  CHECK(csv.str() == "class,word,anchor,best_cosine,flag\nA,a,a,1,ok\n");
}
