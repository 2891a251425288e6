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

// Acceptance gate: one PASS/FAIL line per criterion, nonzero exit on any
// failure.

#include <unistd.h>

#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <random>
#include <regex>
#include <set>
#include <sstream>

#include "json.hpp"
#include "test_support.h"
#include "tokenshap/aggregate.h"
#include "tokenshap/attribution.h"
#include "tokenshap/cli.h"
#include "tokenshap/report.h"
#include "tokenshap/simcheck.h"
#include "tokenshap/textio.h"

using namespace tokenshap;
using namespace tokenshap::testing;
namespace fs = std::filesystem;

namespace {

const fs::path kDataDir = TOKENSHAP_DATA_DIR;

struct Verdict {
  bool pass = true;
  std::string detail;
};

using Clock = std::chrono::steady_clock;

double elapsed(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::string fmt(double x) {
  std::ostringstream s;
  s.precision(3);
  s << x;
  return s.str();
}

double value_of(ModelAdapter& m, const TokenizedUtterance& u, bool all, const std::string& cls) {
  MaskedInput in{&u, std::vector<bool>(u.size(), all)};
  return explained_value(m.predict_batch(std::span<const MaskedInput>(&in, 1)).front(),
                         m.dimension(), cls);
}

fs::path scratch(const std::string& name) {
  const fs::path dir =
      fs::temp_directory_path() / ("tokenshap_accept_" + std::to_string(::getpid())) / name;
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

int run_cli(const std::vector<std::string>& args, std::string* err = nullptr) {
  std::ostringstream out, e;
  const int code = cli::run(args, out, e);
  if (err) *err = e.str();
  return code;
}

// 1. Efficiency of the three exact-efficiency explainers.
Verdict efficiency() {
  const auto t0 = Clock::now();
  std::mt19937_64 rng(20260101);
  double worst = 0.0;
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t n = 2 + trial % 11;
    const auto kind = trial % 2 ? BuiltinKind::kKeywordSoftmax : BuiltinKind::kKeywordScore;
    auto m = make_builtin(random_keyword_spec(rng, n, 3, kind));
    const auto u = make_utterance(numbered_words(n));
    const auto tree = random_tree(rng, n);
    for (const auto& r : {exact_shapley(*m, u), owen_exact(*m, u, tree),
                          partition_attribute(*m, u, tree)}) {
      for (const auto& c : r.classes) {
        double sum = value_of(*m, u, false, c.class_id);
        for (double p : c.phi) sum += p;
        worst = std::max(worst, std::abs(sum - value_of(*m, u, true, c.class_id)));
      }
    }
  }
  const double secs = elapsed(t0);
  return {worst <= 1e-9 && secs < 60.0,
          "max |sum(phi)+v(0)-v(N)| = " + fmt(worst) + " (<= 1e-9), " + fmt(secs) + " s (< 60)"};
}

// 2. Partition agrees with the Owen oracle.
Verdict agreement() {
  const auto t0 = Clock::now();
  std::mt19937_64 rng(77);
  double worst = 0.0;
  for (int seed = 0; seed < 100; ++seed) {
    const std::size_t n = 1 + seed % 10;
    auto m = make_builtin(random_keyword_spec(rng, n, 2, BuiltinKind::kKeywordScore));
    const auto u = make_utterance(numbered_words(n));
    for (const auto& tree : {PartitionTree::contiguous_bisection(n), random_tree(rng, n)}) {
      const auto p = partition_attribute(*m, u, tree);
      const auto o = owen_exact(*m, u, tree);
      for (std::size_t c = 0; c < p.classes.size(); ++c) {
        worst = std::max(worst, max_abs_diff(p.classes[c].phi, o.classes[c].phi));
      }
    }
  }
  auto gate = make_builtin(and_gate_spec({"t0", "t1"}));
  const auto tree = PartitionTree::parse("((0,1),2)");
  const auto phi = partition_attribute(*gate, make_utterance({"t0", "t1", "t2"}), tree)
                       .for_class("A")
                       .phi;
  const bool gate_ok = phi == std::vector<double>{0.5, 0.5, 0.0};
  const double secs = elapsed(t0);
  return {worst <= 1e-9 && gate_ok && secs < 30.0,
          "max |partition-owen| = " + fmt(worst) + " (<= 1e-9), and-gate " +
              (gate_ok ? "(0.5,0.5,0)" : "WRONG") + ", " + fmt(secs) + " s (< 30)"};
}

// 3. Permutation sampling converges and is reproducible.
Verdict sampling() {
  std::mt19937_64 rng(8);
  auto m = make_builtin(random_keyword_spec(rng, 8, 3, BuiltinKind::kKeywordSoftmax));
  const auto u = make_utterance(numbered_words(8));
  const auto exact = exact_shapley(*m, u);
  const auto a = permutation_shapley(*m, u, 2000, 42);
  const auto b = permutation_shapley(*m, u, 2000, 42);
  double worst = 0.0;
  bool identical = true;
  for (std::size_t c = 0; c < exact.classes.size(); ++c) {
    worst = std::max(worst, max_abs_diff(a.classes[c].phi, exact.classes[c].phi));
    identical = identical && a.classes[c].phi == b.classes[c].phi;
  }
  return {worst <= 0.05 && identical, "max error " + fmt(worst) + " (<= 0.05), rerun " +
                                          (identical ? "bit-identical" : "DIFFERS")};
}

// 4. Distinct model evaluations at n = 10.
Verdict budget() {
  std::mt19937_64 rng(10);
  auto m = make_builtin(random_keyword_spec(rng, 10, 3, BuiltinKind::kKeywordSoftmax));
  const auto u = make_utterance(numbered_words(10));
  auto before = m->eval_count();
  exact_shapley(*m, u);
  const auto exact = m->eval_count() - before;
  before = m->eval_count();
  partition_attribute(*m, u, PartitionTree::contiguous_bisection(10));
  const auto part = m->eval_count() - before;
  return {exact == 1024 && part <= 42,
          "exact " + std::to_string(exact) + " (= 1024), partition " + std::to_string(part) +
              " (<= 42)"};
}

// 5. End-to-end pipeline on the bundled planted-keyword corpus.
Verdict planted_pipeline() {
  const auto t0 = Clock::now();
  const fs::path out = scratch("planted");
  std::string err;
  const int code = run_cli({"pipeline", "-c", (kDataDir / "config.json").string(), "--out-dir",
                            out.string()},
                           &err);
  if (code != 0) return {false, "pipeline exit " + std::to_string(code) + ": " + err};

  const auto manifest = nlohmann::json::parse(read_text_file(kDataDir / "planted.json"));
  const auto fillers = manifest["fillers"].get<std::vector<std::string>>();
  const auto planted = manifest["planted"].get<std::map<std::string, std::vector<std::string>>>();
  const auto corpus = load_corpus(kDataDir / "corpus.jsonl");
  const std::size_t n_classes = planted.size();

  std::ifstream ranked_in(out / "ranked.csv");
  const auto lists = read_ranked_csv(ranked_in);
  std::size_t planted_ok = 0, planted_total = 0;
  for (const auto& [cls, words] : planted) {
    const auto it = std::find_if(lists.begin(), lists.end(),
                                 [&](const auto& l) { return l.class_id == cls; });
    for (const auto& w : words) {
      ++planted_total;
      if (it == lists.end()) continue;
      for (const auto& e : it->entries) {
        if (e.word == w && e.avg_shap > 0.0) ++planted_ok;
      }
    }
  }

  const Dimension dim{"affective", {"AS1", "AS2", "AS3"}};
  std::ifstream agg_in(out / "aggregate.csv");
  const auto table = read_aggregate_csv(agg_in, dim);
  double filler_max = 0.0;
  std::size_t fillers_seen = 0;
  for (const auto& f : fillers) {
    const auto it = table.words().find(f);
    if (it == table.words().end()) continue;
    ++fillers_seen;
    for (const auto& [cls, e] : it->second) filler_max = std::max(filler_max, std::abs(e.avg_shap));
  }

  // Brute-force threshold count over the ranked lists.
  std::map<std::string, std::size_t> cover;
  for (const auto& l : lists) {
    for (const auto& e : l.entries) ++cover[e.word];
  }
  std::set<std::string> expected;
  for (const auto& [w, c] : cover) {
    if (c >= static_cast<std::size_t>(std::ceil(0.5 * n_classes))) expected.insert(w);
  }
  const std::string svg = read_text_file(out / "heatmap.svg");
  static const std::regex cell("class=\"cell\"[^>]*data-word=\"([^\"]*)\"");
  std::set<std::string> columns;
  for (std::sregex_iterator it(svg.begin(), svg.end(), cell), end; it != end; ++it) {
    columns.insert((*it)[1]);
  }
  const double secs = elapsed(t0);
  const bool ok = corpus.utterances.size() == 300 && planted_ok == planted_total &&
                  planted_total == 15 && fillers_seen == 50 && filler_max <= 1e-6 &&
                  columns == expected && !columns.empty() && secs < 120.0;
  return {ok, std::to_string(planted_ok) + "/" + std::to_string(planted_total) +
                  " planted words in top-20 with avg_shap > 0, max |filler avg_shap| " +
                  fmt(filler_max) + " over " + std::to_string(fillers_seen) +
                  " fillers (<= 1e-6), heatmap columns " + std::to_string(columns.size()) +
                  (columns == expected ? " match" : " DIFFER FROM") + " brute force, " +
                  fmt(secs) + " s (< 120)"};
}

// 6. Heatmap threshold rule.
Verdict threshold_rule() {
  bool ok = heatmap_threshold(10) == 5 && heatmap_threshold(3) == 2;
  for (std::size_t k = 1; k <= 64; ++k) {
    ok = ok && heatmap_threshold(k) == static_cast<std::size_t>(std::ceil(0.5 * k));
  }
  std::mt19937_64 rng(6);
  std::size_t mismatches = 0;
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t k = 1 + rng() % 12;
    const Dimension dim{"d", class_names(k)};
    std::vector<RankedWordList> lists;
    std::map<std::string, std::size_t> cover;
    for (const auto& c : dim.classes) {
      AggregateTable t(Dimension{"d", {c}});
      const std::size_t len = rng() % 25;
      for (std::size_t i = 0; i < len; ++i) {
        const double v = (static_cast<double>(rng() % 200) - 100.0) / 50.0;
        t.set("w" + std::to_string(rng() % 30), c, AggregateEntry{v, 1, 1});
      }
      lists.push_back(rank_top_words(t, c));
      for (const auto& e : lists.back().entries) ++cover[e.word];
    }
    std::vector<std::string> expected;
    for (const auto& [w, n] : cover) {
      if (static_cast<double>(n) >= std::ceil(0.5 * static_cast<double>(k))) expected.push_back(w);
    }
    auto got = build_heatmap(dim, lists).columns;
    std::sort(got.begin(), got.end());
    if (got != expected) ++mismatches;
  }
  return {ok && mismatches == 0, "threshold(10)=" + std::to_string(heatmap_threshold(10)) +
                                     ", threshold(3)=" + std::to_string(heatmap_threshold(3)) +
                                     ", " + std::to_string(mismatches) +
                                     "/100 collections differ from brute force"};
}

// 7. Weighted F1 against a confusion-matrix oracle.
Verdict weighted_f1_oracle() {
  std::mt19937_64 rng(7);
  std::size_t mismatches = 0;
  for (int trial = 0; trial < 1000; ++trial) {
    const std::size_t k = 2 + rng() % 8;
    const Dimension dim{"d", class_names(k)};
    const std::size_t n = 1 + rng() % 50;
    std::vector<std::string> gold(n), pred(n);
    std::vector<std::vector<std::size_t>> cm(k, std::vector<std::size_t>(k, 0));
    for (std::size_t i = 0; i < n; ++i) {
      const std::size_t g = rng() % k;
      const std::size_t p = rng() % 2 ? g : rng() % k;
      gold[i] = dim.classes[g];
      pred[i] = dim.classes[p];
      ++cm[g][p];
    }
    double oracle = 0.0;
    for (std::size_t c = 0; c < k; ++c) {
      std::size_t row = 0, col = 0;
      for (std::size_t j = 0; j < k; ++j) {
        row += cm[c][j];
        col += cm[j][c];
      }
      const double f1 = row + col == 0 ? 0.0 : static_cast<double>(2 * cm[c][c]) / (row + col);
      oracle += static_cast<double>(row) * f1;
    }
    oracle /= static_cast<double>(n);
    if (weighted_f1(gold, pred, dim).weighted_f1 != oracle) ++mismatches;
  }
  const Dimension ab{"d", {"A", "B"}};
  const std::vector<std::string> g = {"A", "A", "B", "B"}, p = {"A", "B", "B", "B"};
  const double hand = weighted_f1(g, p, ab).weighted_f1;
  const bool hand_ok = std::abs(hand - 11.0 / 15.0) <= 1e-15;
  return {mismatches == 0 && hand_ok, std::to_string(mismatches) +
                                          "/1000 mismatches (exact), hand case " + fmt(hand) +
                                          " (11/15)"};
}

// 8. Cosine properties.
Verdict cosine_properties() {
  std::mt19937_64 rng(8);
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::uniform_real_distribution<double> scale(1e-3, 1e3);
  std::size_t bad = 0;
  for (int trial = 0; trial < 1000; ++trial) {
    const std::size_t d = 1 + rng() % 64;
    std::vector<double> a(d), b(d);
    for (auto& x : a) x = gauss(rng);
    for (auto& x : b) x = gauss(rng);
    const double c = cosine(a, b);
    std::vector<double> sa = a;
    const double s = scale(rng);
    for (auto& x : sa) x *= s;
    const double self = cosine(a, sa);
    if (c != cosine(b, a) || std::abs(cosine(sa, b) - c) > 1e-12 || c < -1.0 || c > 1.0 ||
        self > 1.0 || std::abs(self - 1.0) > 1e-12) {
      ++bad;
    }
  }
  const std::vector<double> x = {1, 0}, y = {1, 1};
  const double hand = cosine(x, y);
  const bool hand_ok = std::abs(hand - 0.70711) <= 1e-5;
  return {bad == 0 && hand_ok, std::to_string(bad) + "/1000 pairs violate symmetry/scale/range, "
                                                     "cos((1,0),(1,1)) = " +
                                   fmt(hand)};
}

// 9. Every stage rerun with a fixed seed writes byte-identical files.
Verdict determinism() {
  const std::vector<std::string> stages = {"mask",    "correct", "explain", "aggregate", "rank",
                                           "heatmap", "freq",    "simcheck", "eval"};
  const std::string cfg = (kDataDir / "config.json").string();
  std::vector<fs::path> dirs;
  std::size_t compared = 0, differing = 0;
  for (const std::string method : {"partition", "permutation"}) {
    std::vector<fs::path> runs;
    for (const char* workers : {"1", "1", "4"}) {
      const fs::path out = scratch(method + "_" + std::to_string(runs.size()));
      for (const auto& stage : stages) {
        std::string err;
        const int code = run_cli({stage, "-c", cfg, "--out-dir", out.string(), "--method", method,
                                  "--n-perms", "20", "--seed", "42", "--workers", workers},
                                 &err);
        if (code != 0) return {false, stage + " exit " + std::to_string(code) + ": " + err};
      }
      runs.push_back(out);
    }
    for (const auto& entry : fs::directory_iterator(runs[0])) {
      const auto name = entry.path().filename();
      const std::string first = read_text_file(entry.path());
      for (std::size_t r = 1; r < runs.size(); ++r) {
        ++compared;
        if (!fs::exists(runs[r] / name) || read_text_file(runs[r] / name) != first) ++differing;
      }
    }
  }
  return {differing == 0 && compared > 0,
          std::to_string(compared) + " artifact reruns compared across reruns and worker counts, " +
              std::to_string(differing) + " differ"};
}

}  // namespace

int main() {
  const std::vector<std::pair<std::string, std::function<Verdict()>>> criteria = {
      {"efficiency", efficiency},
      {"partition/owen agreement", agreement},
      {"permutation convergence", sampling},
      {"evaluation budget", budget},
      {"planted-keyword pipeline", planted_pipeline},
      {"heatmap threshold", threshold_rule},
      {"weighted F1 oracle", weighted_f1_oracle},
      {"cosine properties", cosine_properties},
      {"determinism", determinism},
  };
  int failures = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    Verdict v;
    try {
      v = criteria[i].second();
    } catch (const std::exception& e) {
      v = {false, std::string("exception: ") + e.what()};
    }
    failures += v.pass ? 0 : 1;
    std::cout << (v.pass ? "PASS" : "FAIL") << " criterion " << i + 1 << " ("
              << criteria[i].first << "): " << v.detail << std::endl;
  }
  fs::remove_all(fs::temp_directory_path() / ("tokenshap_accept_" + std::to_string(::getpid())));
  return failures == 0 ? 0 : 1;
}
