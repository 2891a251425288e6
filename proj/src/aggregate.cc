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

#include "tokenshap/aggregate.h"

#include <algorithm>
#include <cmath>
#include <set>

#include "tokenshap/error.h"
#include "tokenshap/textio.h"

namespace tokenshap {

const AggregateEntry* AggregateTable::find(std::string_view word,
                                           std::string_view class_id) const {
  auto w = words_.find(std::string(word));
  if (w == words_.end()) return nullptr;
  auto c = w->second.find(std::string(class_id));
  return c == w->second.end() ? nullptr : &c->second;
}

void AggregateTable::set(const std::string& word, const std::string& class_id,
                         AggregateEntry entry) {
  words_[word][class_id] = entry;
}

std::string word_key(std::string_view token) {
  if (token.size() > 2 && token.front() == '[' && token.back() == ']') {
    return std::string(token);
  }
  return to_lower_ascii(token);
}

std::vector<std::pair<std::string, double>> merge_word_pieces(
    std::span<const std::string> tokens, std::span<const double> values, bool merge_subwords) {
  std::vector<std::pair<std::string, double>> words;
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    const std::string& t = tokens[i];
    const bool piece = t.size() > 2 && t.compare(0, 2, "##") == 0;
    if (merge_subwords && piece) {
      if (words.empty()) {
        words.emplace_back(t.substr(2), values[i]);
      } else {
        words.back().first += t.substr(2);
        words.back().second += values[i];
      }
      continue;
    }
    words.emplace_back(t, values[i]);
  }
  return words;
}

AvgShapAccumulator::AvgShapAccumulator(Dimension dimension, AggregateOptions options)
    : dimension_(std::move(dimension)), options_(std::move(options)) {}

void AvgShapAccumulator::add(const AttributionRecord& record) {
  if (!dimension_.index_of(record.class_id)) {
    throw Error(Errc::kMixedDimension, "record for utterance '" + record.id + "' has class '" +
                                           record.class_id + "' outside dimension '" +
                                           dimension_.name + "'");
  }
  if (options_.scope == ClassScope::kGold) {
    auto it = options_.gold_labels.find(record.id);
    if (it == options_.gold_labels.end() || it->second != record.class_id) return;
  }
  for (auto& [word, value] : merge_word_pieces(record.tokens, record.phi, options_.merge_subwords)) {
    samples_[{word_key(word), record.class_id}].push_back(Sample{record.id, value});
  }
}

void AvgShapAccumulator::merge(const AvgShapAccumulator& other) {
  for (const auto& [key, list] : other.samples_) {
    auto& mine = samples_[key];
    mine.insert(mine.end(), list.begin(), list.end());
  }
}

namespace {

// Sums in ascending order so the total does not depend on arrival order.
double ordered_sum(std::vector<double> values) {
  std::sort(values.begin(), values.end());
  double total = 0.0;
  for (double v : values) total += v;
  return total;
}

}  // namespace

AggregateTable AvgShapAccumulator::finish() const {
  AggregateTable table(dimension_);
  for (const auto& [key, unsorted] : samples_) {
    std::vector<Sample> samples = unsorted;
    std::sort(samples.begin(), samples.end());
    AggregateEntry entry;
    entry.occurrences = samples.size();
    std::vector<double> per_utterance;
    std::vector<double> all;
    for (std::size_t i = 0; i < samples.size();) {
      std::size_t j = i;
      std::vector<double> group;
      while (j < samples.size() && samples[j].utterance == samples[i].utterance) {
        group.push_back(samples[j].value);
        all.push_back(samples[j].value);
        ++j;
      }
      const double n = static_cast<double>(group.size());
      per_utterance.push_back(ordered_sum(std::move(group)) / n);
      i = j;
    }
    entry.utterances = per_utterance.size();
    if (options_.average == AverageMode::kOccurrence) {
      entry.avg_shap = ordered_sum(std::move(all)) / static_cast<double>(entry.occurrences);
    } else {
      entry.avg_shap =
          ordered_sum(std::move(per_utterance)) / static_cast<double>(entry.utterances);
    }
    table.set(key.first, key.second, entry);
  }
  return table;
}

AggregateTable aggregate_avg_shap(std::span<const AttributionRecord> records,
                                  const Dimension& dimension, const AggregateOptions& options) {
  AvgShapAccumulator acc(dimension, options);
  for (const auto& r : records) acc.add(r);
  return acc.finish();
}

std::string RankLabel::to_string() const {
  return (positive ? "P" : "N") + std::to_string(rank);
}

std::optional<RankLabel> RankLabel::parse(std::string_view text) {
  if (text.size() < 2 || (text[0] != 'P' && text[0] != 'N')) return std::nullopt;
  try {
    const long long rank = parse_int(text.substr(1));
    if (rank < 1 || rank > kMaxLabelsPerSign) return std::nullopt;
    return RankLabel{text[0] == 'P', static_cast<int>(rank)};
  } catch (const Error&) {
    return std::nullopt;
  }
}

RankedWordList rank_top_words(const AggregateTable& table, std::string_view class_id,
                              std::size_t k) {
  if (k == 0) throw Error(Errc::kInvalidInput, "rank_top_words needs k >= 1");
  table.dimension().require_index(class_id);
  RankedWordList list;
  list.class_id = std::string(class_id);
  for (const auto& [word, row] : table.words()) {
    auto it = row.find(list.class_id);
    if (it != row.end()) list.entries.push_back(RankedEntry{word, it->second.avg_shap, {}});
  }
  std::sort(list.entries.begin(), list.entries.end(), [](const auto& a, const auto& b) {
    const double ma = std::abs(a.avg_shap);
    const double mb = std::abs(b.avg_shap);
    return ma != mb ? ma > mb : a.word < b.word;
  });
  if (list.entries.size() > k) list.entries.resize(k);
  int pos = 0;
  int neg = 0;
  for (auto& e : list.entries) {
    if (e.avg_shap > 0.0 && pos < kMaxLabelsPerSign) {
      e.label = RankLabel{true, ++pos};
    } else if (e.avg_shap < 0.0 && neg < kMaxLabelsPerSign) {
      e.label = RankLabel{false, ++neg};
    }
  }
  return list;
}

double min_ratio_diagnostic(const RankedWordList& list) {
  if (list.entries.empty()) {
    throw Error(Errc::kInvalidInput, "min_ratio_diagnostic needs a non-empty list");
  }
  const double first = std::abs(list.entries.front().avg_shap);
  if (first == 0.0) return 0.0;
  return std::abs(list.entries.back().avg_shap) / first;
}

std::map<std::string, std::size_t> task_text_frequency(std::span<const std::string> words,
                                                       std::string_view document) {
  std::map<std::string, std::size_t> counts;
  for (const auto& w : words) counts[word_key(w)] = 0;
  std::vector<Token> tokens;
  try {
    tokens = tokenize(document);
  } catch (const Error& e) {
    if (e.code() != Errc::kEmptyUtterance) throw;
  }
  for (const Token& t : tokens) {
    auto it = counts.find(t.surface);
    if (it != counts.end()) ++it->second;
  }
  return counts;
}

EvalReport weighted_f1(std::span<const std::string> gold, std::span<const std::string> predicted,
                       const Dimension& dimension) {
  if (gold.size() != predicted.size() || gold.empty()) {
    throw Error(Errc::kInvalidInput, "weighted_f1 needs equal, non-zero label counts");
  }
  const std::size_t k = dimension.classes.size();
  std::vector<std::size_t> tp(k, 0), fp(k, 0), fn(k, 0), support(k, 0);
  for (std::size_t i = 0; i < gold.size(); ++i) {
    const std::size_t g = dimension.require_index(gold[i]);
    const std::size_t p = dimension.require_index(predicted[i]);
    ++support[g];
    if (g == p) {
      ++tp[g];
    } else {
      ++fp[p];
      ++fn[g];
    }
  }
  auto ratio = [](std::size_t a, std::size_t b) {
    return b == 0 ? 0.0 : static_cast<double>(a) / static_cast<double>(b);
  };
  EvalReport report;
  report.total = gold.size();
  for (std::size_t c = 0; c < k; ++c) {
    ClassMetrics m;
    m.class_id = dimension.classes[c];
    m.precision = ratio(tp[c], tp[c] + fp[c]);
    m.recall = ratio(tp[c], tp[c] + fn[c]);
    m.f1 = ratio(2 * tp[c], 2 * tp[c] + fp[c] + fn[c]);
    m.support = support[c];
    const auto s = static_cast<double>(support[c]);
    report.weighted_precision += s * m.precision;
    report.weighted_recall += s * m.recall;
    report.weighted_f1 += s * m.f1;
    report.classes.push_back(m);
  }
  const auto total = static_cast<double>(report.total);
  report.weighted_precision /= total;
  report.weighted_recall /= total;
  report.weighted_f1 /= total;
  return report;
}

void write_aggregate_csv(std::ostream& out, const AggregateTable& table) {
  write_csv_row(out, {"word", "class", "avg_shap", "occurrences", "utterances"});
  for (const auto& [word, row] : table.words()) {
    for (const auto& cls : table.dimension().classes) {
      auto it = row.find(cls);
      if (it == row.end()) continue;
      const AggregateEntry& e = it->second;
      write_csv_row(out, {word, cls, format_double(e.avg_shap), std::to_string(e.occurrences),
                          std::to_string(e.utterances)});
    }
  }
}

AggregateTable read_aggregate_csv(std::istream& in, const Dimension& dimension) {
  auto rows = read_csv(in);
  if (rows.empty() ||
      rows[0] != CsvRow{"word", "class", "avg_shap", "occurrences", "utterances"}) {
    throw Error(Errc::kInvalidInput,
                "aggregate: expected header 'word,class,avg_shap,occurrences,utterances'");
  }
  AggregateTable table(dimension);
  for (std::size_t r = 1; r < rows.size(); ++r) {
    const CsvRow& row = rows[r];
    const std::string where = "aggregate row " + std::to_string(r + 1);
    if (row.size() != 5) throw Error(Errc::kInvalidInput, where + ": expected 5 fields");
    if (!dimension.index_of(row[1])) {
      throw Error(Errc::kMixedDimension, where + ": class '" + row[1] + "' outside dimension");
    }
    AggregateEntry e;
    e.avg_shap = parse_double(row[2]);
    e.occurrences = static_cast<std::size_t>(parse_int(row[3]));
    e.utterances = static_cast<std::size_t>(parse_int(row[4]));
    if (!std::isfinite(e.avg_shap) || e.utterances < 1 || e.occurrences < e.utterances) {
      throw Error(Errc::kInvalidInput, where + ": inconsistent entry");
    }
    table.set(row[0], row[1], e);
  }
  return table;
}

void write_ranked_csv(std::ostream& out, std::span<const RankedWordList> lists) {
  write_csv_row(out, {"class", "rank", "word", "avg_shap", "label"});
  for (const auto& list : lists) {
    for (std::size_t i = 0; i < list.entries.size(); ++i) {
      const auto& e = list.entries[i];
      write_csv_row(out, {list.class_id, std::to_string(i + 1), e.word, format_double(e.avg_shap),
                          e.label ? e.label->to_string() : ""});
    }
  }
}

std::vector<RankedWordList> read_ranked_csv(std::istream& in) {
  auto rows = read_csv(in);
  if (rows.empty() || rows[0] != CsvRow{"class", "rank", "word", "avg_shap", "label"}) {
    throw Error(Errc::kInvalidInput, "ranked: expected header 'class,rank,word,avg_shap,label'");
  }
  std::vector<RankedWordList> lists;
  for (std::size_t r = 1; r < rows.size(); ++r) {
    const CsvRow& row = rows[r];
    const std::string where = "ranked row " + std::to_string(r + 1);
    if (row.size() != 5) throw Error(Errc::kInvalidInput, where + ": expected 5 fields");
    auto it = std::find_if(lists.begin(), lists.end(),
                           [&](const auto& l) { return l.class_id == row[0]; });
    if (it == lists.end()) {
      lists.push_back(RankedWordList{row[0], {}});
      it = lists.end() - 1;
    }
    RankedEntry e;
    e.word = row[2];
    e.avg_shap = parse_double(row[3]);
    if (!row[4].empty()) {
      e.label = RankLabel::parse(row[4]);
      if (!e.label) throw Error(Errc::kInvalidInput, where + ": bad label '" + row[4] + "'");
    }
    it->entries.push_back(std::move(e));
  }
  return lists;
}

void write_eval_csv(std::ostream& out, const EvalReport& report) {
  write_csv_row(out, {"class", "precision", "recall", "f1", "support"});
  for (const auto& m : report.classes) {
    write_csv_row(out, {m.class_id, format_double(m.precision), format_double(m.recall),
                        format_double(m.f1), std::to_string(m.support)});
  }
  write_csv_row(out, {"weighted", format_double(report.weighted_precision),
                      format_double(report.weighted_recall), format_double(report.weighted_f1),
                      std::to_string(report.total)});
}

}  // namespace tokenshap
