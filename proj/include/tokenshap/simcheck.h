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

#ifndef TOKENSHAP_SIMCHECK_H_
#define TOKENSHAP_SIMCHECK_H_

#include <cstddef>
#include <filesystem>
#include <istream>
#include <map>
#include <optional>
#include <ostream>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "tokenshap/aggregate.h"

namespace tokenshap {

// Word vectors of a single dimensionality. Read-only after loading.
class EmbeddingStore {
 public:
  EmbeddingStore() = default;
  explicit EmbeddingStore(std::size_t dim) : dim_(dim) {}

  std::size_t dim() const { return dim_; }
  std::size_t size() const { return vectors_.size(); }
  bool contains(std::string_view word) const;
  const std::vector<double>* find(std::string_view word) const;

  // Replaces any existing vector; returns false in that case.
  bool insert(std::string word, std::vector<double> vector);

  // Messages about recoverable problems seen while loading (duplicates).
  const std::vector<std::string>& warnings() const { return warnings_; }

  // word2vec text format: header "count dim", then "word v1 ... vdim" lines.
  // Throws kMalformedHeader or kDimensionMismatch (naming the line).
  static EmbeddingStore read_word2vec(std::istream& in);
  static EmbeddingStore load(const std::filesystem::path& path);

 private:
  std::size_t dim_ = 0;
  std::unordered_map<std::string, std::vector<double>> vectors_;
  std::vector<std::string> warnings_;
};

// a.b / (|a| |b|), clamped to [-1, 1]. Throws kDimensionMismatch or
// kZeroVector.
double cosine(std::span<const double> a, std::span<const double> b);
// Throws kMissingWord when either word has no vector.
double cosine(const EmbeddingStore& store, std::string_view a, std::string_view b);

enum class SpuriousFlag { kOk, kSpurious, kNoVector, kNoAnchor };
std::string_view flag_name(SpuriousFlag flag);

struct SpuriousRow {
  std::string class_id;
  std::string word;
  std::string anchor;                 // best anchor, empty when none
  std::optional<double> best_cosine;  // absent for kNoVector / kNoAnchor
  SpuriousFlag flag = SpuriousFlag::kOk;
};

using AnchorMap = std::map<std::string, std::set<std::string>>;

// For every P-labeled word: the highest cosine to any of the class's anchor
// words. Rows below `threshold` are flagged kSpurious. Words or anchors
// without vectors never raise.
std::vector<SpuriousRow> spuriousness_report(std::span<const RankedWordList> lists,
                                             const AnchorMap& anchors,
                                             const EmbeddingStore& store, double threshold);

// `class,word,anchor,best_cosine,flag`.
void write_spuriousness_csv(std::ostream& out, std::span<const SpuriousRow> rows);

}  // namespace tokenshap

#endif  // TOKENSHAP_SIMCHECK_H_
