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

#include "tokenshap/corpus.h"

#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>

#include "json.hpp"
#include "tokenshap/error.h"
#include "tokenshap/textio.h"

namespace tokenshap {
namespace {

constexpr MaskCategory kAllCategories[] = {
    MaskCategory::kName, MaskCategory::kResource, MaskCategory::kLocation,
    MaskCategory::kEntertainment, MaskCategory::kDevice};

// Decodes one code point at `i`, advancing it. Returns -1 on malformed input.
long decode_utf8(std::string_view s, std::size_t& i) {
  const auto b0 = static_cast<unsigned char>(s[i]);
  if (b0 < 0x80) {
    ++i;
    return b0;
  }
  int extra;
  long cp;
  if ((b0 & 0xE0) == 0xC0) {
    extra = 1;
    cp = b0 & 0x1F;
  } else if ((b0 & 0xF0) == 0xE0) {
    extra = 2;
    cp = b0 & 0x0F;
  } else if ((b0 & 0xF8) == 0xF0) {
    extra = 3;
    cp = b0 & 0x07;
  } else {
    return -1;
  }
  for (int k = 1; k <= extra; ++k) {
    if (i + k >= s.size()) return -1;
    const auto b = static_cast<unsigned char>(s[i + k]);
    if ((b & 0xC0) != 0x80) return -1;
    cp = (cp << 6) | (b & 0x3F);
  }
  static constexpr long kMin[] = {0, 0x80, 0x800, 0x10000};
  if (cp < kMin[extra] || cp > 0x10FFFF || (cp >= 0xD800 && cp <= 0xDFFF)) {
    return -1;
  }
  i += static_cast<std::size_t>(extra) + 1;
  return cp;
}

bool is_ascii_alnum(long cp) {
  return (cp >= '0' && cp <= '9') || (cp >= 'a' && cp <= 'z') ||
         (cp >= 'A' && cp <= 'Z');
}

bool is_apostrophe(long cp) { return cp == '\'' || cp == 0x2018 || cp == 0x2019; }

// Non-ASCII code points count as word characters except common punctuation
// and spacing blocks.
bool is_word_char(long cp) {
  if (cp < 0x80) return is_ascii_alnum(cp);
  if (cp == 0x00A0 || (cp >= 0x00A1 && cp <= 0x00BF) || cp == 0x00D7 ||
      cp == 0x00F7) {
    return false;
  }
  if (cp >= 0x2000 && cp <= 0x206F) return false;  // general punctuation
  if (cp >= 0x3000 && cp <= 0x303F) return false;  // CJK punctuation
  if (cp == 0xFEFF) return false;
  return true;
}

std::optional<MaskCategory> placeholder_at(std::string_view s, std::size_t i,
                                           std::size_t& len) {
  if (s[i] != '[') return std::nullopt;
  const std::size_t close = s.find(']', i + 1);
  if (close == std::string_view::npos || close - i > 16) return std::nullopt;
  std::string inner(s.substr(i + 1, close - i - 1));
  for (char& c : inner) {
    if (c >= 'a' && c <= 'z') c = static_cast<char>(c - 'a' + 'A');
  }
  auto category = parse_category(inner);
  if (category) len = close - i + 1;
  return category;
}

}  // namespace

std::string_view category_name(MaskCategory category) {
  switch (category) {
    case MaskCategory::kName: return "NAME";
    case MaskCategory::kResource: return "RESOURCE";
    case MaskCategory::kLocation: return "LOCATION";
    case MaskCategory::kEntertainment: return "ENTERTAINMENT";
    case MaskCategory::kDevice: return "DEVICE";
  }
  return "NAME";
}

std::optional<MaskCategory> parse_category(std::string_view name) {
  for (MaskCategory c : kAllCategories) {
    if (category_name(c) == name) return c;
  }
  return std::nullopt;
}

std::string placeholder_for(MaskCategory category) {
  return "[" + std::string(category_name(category)) + "]";
}

std::vector<std::string> TokenizedUtterance::surfaces() const {
  std::vector<std::string> out;
  out.reserve(tokens.size());
  for (const Token& t : tokens) out.push_back(t.surface);
  return out;
}

void Dimension::validate() const {
  if (classes.empty()) {
    throw Error(Errc::kInvalidInput, "dimension '" + name + "' has no classes");
  }
  std::set<std::string> seen;
  for (const auto& c : classes) {
    if (c.empty() || !seen.insert(c).second) {
      throw Error(Errc::kInvalidInput,
                  "dimension '" + name + "' has empty or repeated class '" + c + "'");
    }
  }
}

std::optional<std::size_t> Dimension::index_of(std::string_view class_id) const {
  auto it = std::find(classes.begin(), classes.end(), class_id);
  if (it == classes.end()) return std::nullopt;
  return static_cast<std::size_t>(it - classes.begin());
}

std::size_t Dimension::require_index(std::string_view class_id) const {
  auto idx = index_of(class_id);
  if (!idx) {
    throw Error(Errc::kUnknownClass, "class '" + std::string(class_id) +
                                         "' is not in dimension '" + name + "'");
  }
  return *idx;
}

std::vector<Token> tokenize(std::string_view raw) {
  std::vector<Token> tokens;
  std::string current;
  auto flush = [&] {
    // Apostrophes only survive inside a word.
    while (!current.empty() && current.back() == '\'') current.pop_back();
    if (!current.empty()) {
      tokens.push_back(Token{to_lower_ascii(current), tokens.size(), std::nullopt});
      current.clear();
    }
  };
  std::size_t i = 0;
  while (i < raw.size()) {
    std::size_t len = 0;
    if (current.empty()) {
      if (auto category = placeholder_at(raw, i, len)) {
        tokens.push_back(Token{placeholder_for(*category), tokens.size(), category});
        i += len;
        continue;
      }
    }
    const std::size_t start = i;
    const long cp = decode_utf8(raw, i);
    if (cp < 0) {
      throw Error(Errc::kInvalidUtf8,
                  "invalid UTF-8 at byte " + std::to_string(start));
    }
    if (is_word_char(cp)) {
      current.append(raw.substr(start, i - start));
    } else if (is_apostrophe(cp) && !current.empty()) {
      current.push_back('\'');
    } else {
      flush();
    }
  }
  flush();
  if (tokens.empty()) throw Error(Errc::kEmptyUtterance, "empty utterance");
  return tokens;
}

std::string detokenize(std::span<const Token> tokens) {
  std::string out;
  for (const Token& t : tokens) {
    if (!out.empty()) out.push_back(' ');
    out += t.surface;
  }
  return out;
}

void Gazetteer::add(std::string_view phrase, MaskCategory category) {
  std::vector<std::string> words;
  for (Token& t : tokenize(phrase)) words.push_back(std::move(t.surface));
  auto [it, inserted] = index_.emplace(words, category);
  if (!inserted) {
    if (it->second != category) {
      throw Error(Errc::kInvalidInput, "gazetteer phrase '" + std::string(phrase) +
                                           "' listed under two categories");
    }
    return;
  }
  max_len_ = std::max(max_len_, words.size());
  entries_.push_back(GazetteerEntry{std::move(words), category});
}

std::optional<std::pair<std::size_t, MaskCategory>> Gazetteer::longest_match(
    std::span<const Token> tokens, std::size_t begin) const {
  const std::size_t limit = std::min(max_len_, tokens.size() - begin);
  std::vector<std::string> key;
  std::optional<std::pair<std::size_t, MaskCategory>> best;
  for (std::size_t len = 1; len <= limit; ++len) {
    const Token& t = tokens[begin + len - 1];
    if (t.mask) break;
    key.push_back(t.surface);
    auto it = index_.find(key);
    if (it != index_.end()) best = {len, it->second};
  }
  return best;
}

Gazetteer Gazetteer::from_csv(std::istream& in) {
  auto rows = read_csv(in);
  if (rows.empty() || rows[0] != CsvRow{"phrase", "category"}) {
    throw Error(Errc::kInvalidInput, "gazetteer: expected header 'phrase,category'");
  }
  Gazetteer g;
  for (std::size_t r = 1; r < rows.size(); ++r) {
    const CsvRow& row = rows[r];
    if (row.size() != 2) {
      throw Error(Errc::kInvalidInput,
                  "gazetteer row " + std::to_string(r + 1) + ": expected 2 fields");
    }
    auto category = parse_category(row[1]);
    if (!category) {
      throw Error(Errc::kInvalidInput, "gazetteer row " + std::to_string(r + 1) +
                                           ": unknown category '" + row[1] + "'");
    }
    try {
      g.add(row[0], *category);
    } catch (const Error& e) {
      throw Error(Errc::kInvalidInput,
                  "gazetteer row " + std::to_string(r + 1) + ": " + e.what());
    }
  }
  return g;
}

Gazetteer Gazetteer::load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(Errc::kIo, "cannot open " + path.string());
  return from_csv(in);
}

MaskResult apply_gazetteer(const TokenizedUtterance& utterance,
                           const Gazetteer& gazetteer) {
  MaskResult result;
  result.masked = utterance;
  result.masked.tokens.clear();
  const auto& tokens = utterance.tokens;
  std::size_t i = 0;
  while (i < tokens.size()) {
    auto match = gazetteer.empty() ? std::nullopt : gazetteer.longest_match(tokens, i);
    if (!match) {
      Token t = tokens[i];
      t.position = result.masked.tokens.size();
      result.masked.tokens.push_back(std::move(t));
      ++i;
      continue;
    }
    const auto [len, category] = *match;
    MaskProposal p;
    p.utterance_id = utterance.id;
    p.start = i;
    p.end = i + len;
    p.category = category;
    p.placeholder = placeholder_for(category);
    result.masked.tokens.push_back(
        Token{p.placeholder, result.masked.tokens.size(), category});
    result.proposals.push_back(std::move(p));
    i += len;
  }
  return result;
}

namespace {

const CsvRow kProposalHeader = {"utterance_id", "start", "end",
                                "category",     "placeholder", "decision"};

std::string decision_text(const MaskProposal& p) {
  switch (p.decision) {
    case Decision::kPending: return "";
    case Decision::kAccept: return "accept";
    case Decision::kReject: return "reject";
    case Decision::kRecategorize:
      return "recategorize:" +
             std::string(category_name(p.new_category.value_or(p.category)));
  }
  return "";
}

}  // namespace

std::vector<MaskProposal> read_proposals(std::istream& in) {
  auto rows = read_csv(in);
  if (rows.empty()) return {};
  if (rows[0] != kProposalHeader) {
    throw Error(Errc::kInvalidInput,
                "proposals: expected header "
                "'utterance_id,start,end,category,placeholder,decision'");
  }
  std::vector<MaskProposal> out;
  for (std::size_t r = 1; r < rows.size(); ++r) {
    const CsvRow& row = rows[r];
    const std::string where = "proposals row " + std::to_string(r + 1);
    if (row.size() != kProposalHeader.size()) {
      throw Error(Errc::kInvalidInput, where + ": expected 6 fields");
    }
    MaskProposal p;
    p.utterance_id = row[0];
    try {
      const long long start = parse_int(row[1]);
      const long long end = parse_int(row[2]);
      if (start < 0 || end <= start) throw Error(Errc::kInvalidInput, "bad span");
      p.start = static_cast<std::size_t>(start);
      p.end = static_cast<std::size_t>(end);
    } catch (const Error&) {
      throw Error(Errc::kInvalidInput, where + ": invalid span");
    }
    auto category = parse_category(row[3]);
    if (!category) {
      throw Error(Errc::kInvalidInput, where + ": unknown category '" + row[3] + "'");
    }
    p.category = *category;
    p.placeholder = row[4];
    const std::string& d = row[5];
    if (d.empty() || d == "accept") {
      p.decision = Decision::kAccept;
    } else if (d == "reject") {
      p.decision = Decision::kReject;
    } else if (d.rfind("recategorize:", 0) == 0) {
      auto target = parse_category(d.substr(13));
      if (!target) {
        throw Error(Errc::kInvalidInput, where + ": unknown category in '" + d + "'");
      }
      p.decision = Decision::kRecategorize;
      p.new_category = target;
    } else {
      throw Error(Errc::kInvalidInput, where + ": unknown decision '" + d + "'");
    }
    out.push_back(std::move(p));
  }
  return out;
}

std::vector<MaskProposal> load_proposals(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(Errc::kIo, "cannot open " + path.string());
  return read_proposals(in);
}

void write_proposals(std::ostream& out, std::span<const MaskProposal> rows) {
  write_csv_row(out, kProposalHeader);
  for (const MaskProposal& p : rows) {
    write_csv_row(out, {p.utterance_id, std::to_string(p.start), std::to_string(p.end),
                        std::string(category_name(p.category)), p.placeholder,
                        decision_text(p)});
  }
}

const TokenizedUtterance* Corpus::find(std::string_view id) const {
  for (const auto& u : utterances) {
    if (u.id == id) return &u;
  }
  return nullptr;
}

Corpus apply_corrections(std::span<const MaskProposal> rows, const Corpus& unmasked) {
  std::map<std::string, std::size_t> by_id;
  for (std::size_t i = 0; i < unmasked.utterances.size(); ++i) {
    by_id.emplace(unmasked.utterances[i].id, i);
  }
  // Per utterance: (start, row index).
  std::vector<std::vector<std::pair<std::size_t, std::size_t>>> spans(
      unmasked.utterances.size());
  for (std::size_t r = 0; r < rows.size(); ++r) {
    const MaskProposal& p = rows[r];
    const std::string where = "correction row " + std::to_string(r + 2);
    auto it = by_id.find(p.utterance_id);
    if (it == by_id.end()) {
      throw Error(Errc::kDanglingReference,
                  where + ": unknown utterance '" + p.utterance_id + "'");
    }
    const auto& u = unmasked.utterances[it->second];
    if (p.end <= p.start || p.end > u.tokens.size()) {
      throw Error(Errc::kDanglingReference,
                  where + ": span [" + std::to_string(p.start) + "," +
                      std::to_string(p.end) + ") outside utterance '" + u.id + "'");
    }
    spans[it->second].emplace_back(p.start, r);
  }

  Corpus out;
  out.utterances.reserve(unmasked.utterances.size());
  for (std::size_t ui = 0; ui < unmasked.utterances.size(); ++ui) {
    const TokenizedUtterance& u = unmasked.utterances[ui];
    auto& mine = spans[ui];
    std::sort(mine.begin(), mine.end());
    TokenizedUtterance m = u;
    m.tokens.clear();
    std::size_t next = 0;
    auto copy_until = [&](std::size_t stop) {
      for (; next < stop; ++next) {
        Token t = u.tokens[next];
        t.position = m.tokens.size();
        m.tokens.push_back(std::move(t));
      }
    };
    for (const auto& [start, r] : mine) {
      const MaskProposal& p = rows[r];
      if (start < next) {
        throw Error(Errc::kDanglingReference,
                    "correction row " + std::to_string(r + 2) +
                        ": span overlaps another row in utterance '" + u.id + "'");
      }
      copy_until(start);
      if (p.decision == Decision::kReject) {
        copy_until(p.end);
        continue;
      }
      MaskCategory category = p.category;
      if (p.decision == Decision::kRecategorize && p.new_category) {
        category = *p.new_category;
      }
      m.tokens.push_back(Token{placeholder_for(category), m.tokens.size(), category});
      next = p.end;
    }
    copy_until(u.tokens.size());
    out.utterances.push_back(std::move(m));
  }
  return out;
}

Corpus read_corpus(std::istream& in) {
  Corpus corpus;
  std::set<std::string> ids;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.find_first_not_of(" \t") == std::string::npos) continue;
    const std::string where = "corpus line " + std::to_string(line_no);
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::exception& e) {
      throw Error(Errc::kInvalidInput, where + ": " + e.what());
    }
    if (!j.is_object() || !j.contains("id") || !j["id"].is_string() ||
        !j.contains("text") || !j["text"].is_string()) {
      throw Error(Errc::kInvalidInput, where + ": needs string fields 'id' and 'text'");
    }
    TokenizedUtterance u;
    u.id = j["id"].get<std::string>();
    if (!ids.insert(u.id).second) {
      throw Error(Errc::kInvalidInput, where + ": duplicate id '" + u.id + "'");
    }
    if (j.contains("dimension") && j["dimension"].is_string()) {
      u.dimension = j["dimension"].get<std::string>();
    }
    if (j.contains("gold_label") && j["gold_label"].is_string()) {
      u.gold_label = j["gold_label"].get<std::string>();
    }
    try {
      u.tokens = tokenize(j["text"].get<std::string>());
    } catch (const Error& e) {
      if (e.code() != Errc::kEmptyUtterance) {
        throw Error(e.code(), where + ": " + e.what());
      }
    }
    corpus.utterances.push_back(std::move(u));
  }
  return corpus;
}

Corpus load_corpus(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(Errc::kIo, "cannot open " + path.string());
  return read_corpus(in);
}

void write_corpus(std::ostream& out, const Corpus& corpus) {
  for (const auto& u : corpus.utterances) {
    nlohmann::ordered_json j;
    j["id"] = u.id;
    j["text"] = detokenize(u.tokens);
    if (u.dimension) j["dimension"] = *u.dimension;
    if (u.gold_label) j["gold_label"] = *u.gold_label;
    out << j.dump() << '\n';
  }
}

}  // namespace tokenshap
