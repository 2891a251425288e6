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

#include "tokenshap/simcheck.h"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include "tokenshap/error.h"
#include "tokenshap/textio.h"

namespace tokenshap {

bool EmbeddingStore::contains(std::string_view word) const {
  return vectors_.count(std::string(word)) > 0;
}

const std::vector<double>* EmbeddingStore::find(std::string_view word) const {
  auto it = vectors_.find(std::string(word));
  return it == vectors_.end() ? nullptr : &it->second;
}

bool EmbeddingStore::insert(std::string word, std::vector<double> vector) {
  if (vector.size() != dim_) {
    throw Error(Errc::kDimensionMismatch, "vector for '" + word + "' has " +
                                              std::to_string(vector.size()) +
                                              " values, expected " + std::to_string(dim_));
  }
  auto [it, inserted] = vectors_.insert_or_assign(std::move(word), std::move(vector));
  return inserted;
}

EmbeddingStore EmbeddingStore::read_word2vec(std::istream& in) {
  std::string line;
  std::size_t line_no = 0;
  long long count = -1;
  long long dim = -1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") != std::string::npos) break;
  }
  {
    std::istringstream header(line);
    std::string extra;
    if (line_no == 0 || !(header >> count >> dim) || (header >> extra) || count < 0 || dim < 1) {
      throw Error(Errc::kMalformedHeader, "word vectors: malformed header on line " +
                                              std::to_string(std::max<std::size_t>(line_no, 1)) +
                                              " (expected 'count dim')");
    }
  }
  EmbeddingStore store(static_cast<std::size_t>(dim));
  long long seen = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.find_first_not_of(" \t") == std::string::npos) continue;
    if (seen == count) {
      throw Error(Errc::kDimensionMismatch, "word vectors: line " + std::to_string(line_no) +
                                                " exceeds the declared count " +
                                                std::to_string(count));
    }
    std::istringstream fields(line);
    std::string word;
    fields >> word;
    std::vector<double> v;
    std::string tok;
    while (fields >> tok) {
      try {
        v.push_back(parse_double(tok));
      } catch (const Error&) {
        throw Error(Errc::kDimensionMismatch, "word vectors: line " + std::to_string(line_no) +
                                                  ": bad value '" + tok + "'");
      }
    }
    if (v.size() != store.dim_) {
      throw Error(Errc::kDimensionMismatch,
                  "word vectors: line " + std::to_string(line_no) + " ('" + word + "') has " +
                      std::to_string(v.size()) + " values, expected " + std::to_string(dim));
    }
    if (!store.insert(word, std::move(v))) {
      store.warnings_.push_back("duplicate vector for '" + word + "' on line " +
                                std::to_string(line_no) + "; keeping the last one");
    }
    ++seen;
  }
  if (seen != count) {
    throw Error(Errc::kDimensionMismatch, "word vectors: header declares " +
                                              std::to_string(count) + " vectors, found " +
                                              std::to_string(seen));
  }
  return store;
}

EmbeddingStore EmbeddingStore::load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(Errc::kIo, "cannot open " + path.string());
  return read_word2vec(in);
}

double cosine(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw Error(Errc::kDimensionMismatch, "cosine: length mismatch");
  double dot = 0.0, na = 0.0, nb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    dot += a[i] * b[i];
    na += a[i] * a[i];
    nb += b[i] * b[i];
  }
  if (na == 0.0 || nb == 0.0) throw Error(Errc::kZeroVector, "cosine: zero vector");
  return std::clamp(dot / (std::sqrt(na) * std::sqrt(nb)), -1.0, 1.0);
}

double cosine(const EmbeddingStore& store, std::string_view a, std::string_view b) {
  const auto* va = store.find(a);
  const auto* vb = store.find(b);
  if (!va) throw Error(Errc::kMissingWord, "no vector for '" + std::string(a) + "'");
  if (!vb) throw Error(Errc::kMissingWord, "no vector for '" + std::string(b) + "'");
  try {
    return cosine(*va, *vb);
  } catch (const Error& e) {
    throw Error(e.code(), "cosine('" + std::string(a) + "', '" + std::string(b) + "'): " + e.what());
  }
}

std::string_view flag_name(SpuriousFlag flag) {
  switch (flag) {
    case SpuriousFlag::kOk: return "ok";
    case SpuriousFlag::kSpurious: return "spurious";
    case SpuriousFlag::kNoVector: return "no-vector";
    case SpuriousFlag::kNoAnchor: return "no-anchor";
  }
  return "ok";
}

namespace {

bool usable(const std::vector<double>* v) {
  return v && std::any_of(v->begin(), v->end(), [](double x) { return x != 0.0; });
}

}  // namespace

std::vector<SpuriousRow> spuriousness_report(std::span<const RankedWordList> lists,
                                             const AnchorMap& anchors,
                                             const EmbeddingStore& store, double threshold) {
  if (!(threshold >= -1.0 && threshold <= 1.0)) {
    throw Error(Errc::kInvalidInput, "spuriousness threshold must lie in [-1, 1]");
  }
  std::vector<SpuriousRow> rows;
  for (const auto& list : lists) {
    auto anchor_it = anchors.find(list.class_id);
    for (const auto& entry : list.entries) {
      if (!entry.label || !entry.label->positive) continue;
      SpuriousRow row{list.class_id, entry.word, "", std::nullopt, SpuriousFlag::kOk};
      const auto* wv = store.find(entry.word);
      if (!usable(wv)) {
        row.flag = SpuriousFlag::kNoVector;
        rows.push_back(std::move(row));
        continue;
      }
      if (anchor_it != anchors.end()) {
        for (const auto& anchor : anchor_it->second) {
          const auto* av = store.find(anchor);
          if (!usable(av)) continue;
          const double c = cosine(*wv, *av);
          if (!row.best_cosine || c > *row.best_cosine) {
            row.best_cosine = c;
            row.anchor = anchor;
          }
        }
      }
      if (!row.best_cosine) {
        row.flag = SpuriousFlag::kNoAnchor;
      } else if (*row.best_cosine < threshold) {
        row.flag = SpuriousFlag::kSpurious;
      }
      rows.push_back(std::move(row));
    }
  }
  return rows;
}

void write_spuriousness_csv(std::ostream& out, std::span<const SpuriousRow> rows) {
  write_csv_row(out, {"class", "word", "anchor", "best_cosine", "flag"});
  for (const auto& r : rows) {
    write_csv_row(out, {r.class_id, r.word, r.anchor,
                        r.best_cosine ? format_double(*r.best_cosine) : "",
                        std::string(flag_name(r.flag))});
  }
}

}  // namespace tokenshap
