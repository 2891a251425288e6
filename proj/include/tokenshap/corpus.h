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

#ifndef TOKENSHAP_CORPUS_H_
#define TOKENSHAP_CORPUS_H_

#include <cstddef>
#include <filesystem>
#include <istream>
#include <map>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace tokenshap {

enum class MaskCategory { kName, kResource, kLocation, kEntertainment, kDevice };

std::string_view category_name(MaskCategory category);  // "NAME", ...
std::optional<MaskCategory> parse_category(std::string_view name);
std::string placeholder_for(MaskCategory category);  // "[NAME]", ...

struct Token {
  std::string surface;
  std::size_t position = 0;
  std::optional<MaskCategory> mask;

  bool operator==(const Token&) const = default;
};

struct TokenizedUtterance {
  std::string id;
  std::vector<Token> tokens;
  std::optional<std::string> dimension;
  std::optional<std::string> gold_label;

  std::size_t size() const { return tokens.size(); }
  bool empty() const { return tokens.empty(); }
  std::vector<std::string> surfaces() const;

  bool operator==(const TokenizedUtterance&) const = default;
};

// A named, ordered class set (e.g. the affective states AS1..AS3).
struct Dimension {
  std::string name;
  std::vector<std::string> classes;

  // Throws kInvalidInput when classes are empty or repeated.
  void validate() const;
  std::optional<std::size_t> index_of(std::string_view class_id) const;
  // Throws kUnknownClass.
  std::size_t require_index(std::string_view class_id) const;
  bool operator==(const Dimension&) const = default;
};

// Splits on whitespace and punctuation, lowercases ASCII letters, and keeps
// intra-word apostrophes. Bracketed category placeholders such as "[NAME]"
// survive as single masked tokens. Throws kEmptyUtterance when nothing is
// left and kInvalidUtf8 on malformed input.
std::vector<Token> tokenize(std::string_view raw_text);

// Renders tokens back to text that tokenizes to the same sequence.
std::string detokenize(std::span<const Token> tokens);

struct GazetteerEntry {
  std::vector<std::string> phrase;
  MaskCategory category;
};

class Gazetteer {
 public:
  // The phrase is run through tokenize(). Throws kInvalidInput if the same
  // phrase was already added with a different category.
  void add(std::string_view phrase, MaskCategory category);

  // Longest phrase match starting at `begin`, as (length, category).
  std::optional<std::pair<std::size_t, MaskCategory>> longest_match(
      std::span<const Token> tokens, std::size_t begin) const;

  const std::vector<GazetteerEntry>& entries() const { return entries_; }
  bool empty() const { return entries_.empty(); }

  // CSV with header `phrase,category`.
  static Gazetteer from_csv(std::istream& in);
  static Gazetteer load(const std::filesystem::path& path);

 private:
  std::vector<GazetteerEntry> entries_;
  std::map<std::vector<std::string>, MaskCategory> index_;
  std::size_t max_len_ = 0;
};

enum class Decision { kPending, kAccept, kReject, kRecategorize };

// A proposed replacement of tokens [start, end) of the unmasked utterance.
struct MaskProposal {
  std::string utterance_id;
  std::size_t start = 0;
  std::size_t end = 0;
  MaskCategory category = MaskCategory::kName;
  std::string placeholder;
  Decision decision = Decision::kPending;
  std::optional<MaskCategory> new_category;  // set for kRecategorize

  bool operator==(const MaskProposal&) const = default;
};

struct MaskResult {
  TokenizedUtterance masked;
  std::vector<MaskProposal> proposals;
};

MaskResult apply_gazetteer(const TokenizedUtterance& utterance,
                           const Gazetteer& gazetteer);

// CSV header `utterance_id,start,end,category,placeholder,decision`.
// A blank decision reads as accept.
std::vector<MaskProposal> read_proposals(std::istream& in);
std::vector<MaskProposal> load_proposals(const std::filesystem::path& path);
void write_proposals(std::ostream& out, std::span<const MaskProposal> rows);

struct Corpus {
  std::vector<TokenizedUtterance> utterances;

  const TokenizedUtterance* find(std::string_view id) const;
};

// Rebuilds the masked corpus from the unmasked one and the reviewed rows:
// accepted rows become placeholders, recategorized rows become the new
// category's placeholder, rejected rows keep the original tokens. Throws
// kDanglingReference naming the 1-based row when a row points at an unknown
// utterance, an out-of-range span, or overlaps another row.
Corpus apply_corrections(std::span<const MaskProposal> rows,
                         const Corpus& unmasked);

// JSON Lines: {"id", "text", "dimension"?, "gold_label"?}. Utterances whose
// text tokenizes to nothing are kept with an empty token list. Duplicate ids
// are rejected.
Corpus read_corpus(std::istream& in);
Corpus load_corpus(const std::filesystem::path& path);
void write_corpus(std::ostream& out, const Corpus& corpus);

}  // namespace tokenshap

#endif  // TOKENSHAP_CORPUS_H_
