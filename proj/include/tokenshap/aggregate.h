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

#ifndef TOKENSHAP_AGGREGATE_H_
#define TOKENSHAP_AGGREGATE_H_

#include <cstddef>
#include <istream>
#include <map>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "tokenshap/attribution.h"
#include "tokenshap/corpus.h"

namespace tokenshap {

// Mean over every occurrence, or mean of per-utterance means.
enum class AverageMode { kOccurrence, kUtterance };
// Which utterances feed a class's table: all of them, or only those whose
// gold label is that class.
enum class ClassScope { kAll, kGold };

struct AggregateOptions {
  AverageMode average = AverageMode::kOccurrence;
  ClassScope scope = ClassScope::kAll;
  // Fold "##piece" tokens into the preceding word by summing their values.
  bool merge_subwords = true;
  std::map<std::string, std::string> gold_labels;  // utterance id -> class, for kGold
};

struct AggregateEntry {
  double avg_shap = 0.0;
  std::size_t occurrences = 0;
  std::size_t utterances = 0;

  bool operator==(const AggregateEntry&) const = default;
};

// word -> class -> avgSHAP, for one dimension.
class AggregateTable {
 public:
  using Row = std::map<std::string, AggregateEntry>;

  AggregateTable() = default;
  explicit AggregateTable(Dimension dimension) : dimension_(std::move(dimension)) {}

  const Dimension& dimension() const { return dimension_; }
  const std::map<std::string, Row>& words() const { return words_; }
  const AggregateEntry* find(std::string_view word, std::string_view class_id) const;
  void set(const std::string& word, const std::string& class_id, AggregateEntry entry);

  bool operator==(const AggregateTable&) const = default;

 private:
  Dimension dimension_;
  std::map<std::string, Row> words_;
};

// Commutative, associative fold over attribution records. Samples are kept
// until finish() so the result does not depend on input order.
class AvgShapAccumulator {
 public:
  AvgShapAccumulator(Dimension dimension, AggregateOptions options);

  // Throws kMixedDimension when the record's class is not in the dimension.
  void add(const AttributionRecord& record);
  void merge(const AvgShapAccumulator& other);
  AggregateTable finish() const;

 private:
  struct Sample {
    std::string utterance;
    double value;
    bool operator<(const Sample& o) const {
      return utterance != o.utterance ? utterance < o.utterance : value < o.value;
    }
  };
  Dimension dimension_;
  AggregateOptions options_;
  std::map<std::pair<std::string, std::string>, std::vector<Sample>> samples_;
};

AggregateTable aggregate_avg_shap(std::span<const AttributionRecord> records,
                                  const Dimension& dimension,
                                  const AggregateOptions& options = {});

// Whole words with their summed values, after the subword merge rule.
std::vector<std::pair<std::string, double>> merge_word_pieces(
    std::span<const std::string> tokens, std::span<const double> values, bool merge_subwords);

// Lowercased aggregation key; "[NAME]"-style placeholders are kept as is.
std::string word_key(std::string_view token);

// P1..P10 or N1..N10.
struct RankLabel {
  bool positive = true;
  int rank = 1;

  std::string to_string() const;
  static std::optional<RankLabel> parse(std::string_view text);
  bool operator==(const RankLabel&) const = default;
};

struct RankedEntry {
  std::string word;
  double avg_shap = 0.0;
  std::optional<RankLabel> label;

  bool operator==(const RankedEntry&) const = default;
};

struct RankedWordList {
  std::string class_id;
  std::vector<RankedEntry> entries;

  bool operator==(const RankedWordList&) const = default;
};

inline constexpr std::size_t kDefaultTopK = 20;
inline constexpr int kMaxLabelsPerSign = 10;

// Top k words by |avg_shap| (ties by word), then up to ten P and ten N
// labels in that order. Zero values stay unlabeled.
RankedWordList rank_top_words(const AggregateTable& table, std::string_view class_id,
                              std::size_t k = kDefaultTopK);

// |last| / |first| of a ranked list; 0 when the first entry is zero.
double min_ratio_diagnostic(const RankedWordList& list);

// Whole-word counts of each (lowercased) word in the tokenized document.
std::map<std::string, std::size_t> task_text_frequency(std::span<const std::string> words,
                                                       std::string_view document);

struct ClassMetrics {
  std::string class_id;
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  std::size_t support = 0;
};

struct EvalReport {
  std::vector<ClassMetrics> classes;
  double weighted_precision = 0.0;
  double weighted_recall = 0.0;
  double weighted_f1 = 0.0;
  std::size_t total = 0;
};

// Per-class precision, recall, F1 (0/0 taken as 0) and their
// support-weighted means.
EvalReport weighted_f1(std::span<const std::string> gold, std::span<const std::string> predicted,
                       const Dimension& dimension);

// CSV I/O. Numbers use the shortest round-trip representation.
void write_aggregate_csv(std::ostream& out, const AggregateTable& table);
AggregateTable read_aggregate_csv(std::istream& in, const Dimension& dimension);
void write_ranked_csv(std::ostream& out, std::span<const RankedWordList> lists);
std::vector<RankedWordList> read_ranked_csv(std::istream& in);
void write_eval_csv(std::ostream& out, const EvalReport& report);

}  // namespace tokenshap

#endif  // TOKENSHAP_AGGREGATE_H_
