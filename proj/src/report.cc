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

#include "tokenshap/report.h"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>
#include <sstream>

#include "tokenshap/error.h"
#include "tokenshap/textio.h"

namespace tokenshap {
namespace {

constexpr int kCell = 32;
constexpr int kPad = 12;
constexpr int kCharWidth = 7;

bool is_hex_color(std::string_view s) {
  if (s.size() != 7 || s[0] != '#') return false;
  return std::all_of(s.begin() + 1, s.end(), [](char c) {
    return (c >= '0' && c <= '9') || (c >= 'a' && c <= 'f') || (c >= 'A' && c <= 'F');
  });
}

std::string xml_escape(std::string_view s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      case '\'': out += "&apos;"; break;
      default: out.push_back(c);
    }
  }
  return out;
}

int text_width(std::string_view s) { return static_cast<int>(s.size()) * kCharWidth; }

}  // namespace

Palette Palette::defaults() {
  Palette p;
  p.positive = {"#00441b", "#16562d", "#2c6940", "#427b52", "#588d64",
                "#6fa077", "#85b289", "#9bc49b", "#b1d7ae", "#c7e9c0"};
  p.negative = {"#a63603", "#b04715", "#b95826", "#c36938", "#cd7a4a",
                "#d68c5b", "#e09d6d", "#eaae7f", "#f3bf90", "#fdd0a2"};
  return p;
}

Palette Palette::from_json(const nlohmann::json& j) {
  Palette p = defaults();
  auto read_ramp = [&](const char* key, std::array<std::string, 10>& ramp) {
    if (!j.contains(key)) return;
    const auto values = j.at(key).get<std::vector<std::string>>();
    if (values.size() != ramp.size()) {
      throw Error(Errc::kInvalidInput, std::string("palette: '") + key + "' needs 10 colors");
    }
    for (std::size_t i = 0; i < values.size(); ++i) {
      if (!is_hex_color(values[i])) {
        throw Error(Errc::kInvalidInput, "palette: bad color '" + values[i] + "'");
      }
      ramp[i] = values[i];
    }
  };
  try {
    read_ramp("positive", p.positive);
    read_ramp("negative", p.negative);
    if (j.contains("empty")) p.empty = j.at("empty").get<std::string>();
  } catch (const nlohmann::json::exception& e) {
    throw Error(Errc::kInvalidInput, std::string("palette: ") + e.what());
  }
  if (!is_hex_color(p.empty)) throw Error(Errc::kInvalidInput, "palette: bad empty color");
  return p;
}

const std::string& Palette::color(const RankLabel& label) const {
  const auto& ramp = label.positive ? positive : negative;
  return ramp[static_cast<std::size_t>(std::clamp(label.rank, 1, 10) - 1)];
}

double relative_luminance(std::string_view hex) {
  if (!is_hex_color(hex)) throw Error(Errc::kInvalidInput, "bad color '" + std::string(hex) + "'");
  auto channel = [&](std::size_t at) {
    const double c = std::stoi(std::string(hex.substr(at, 2)), nullptr, 16) / 255.0;
    return c <= 0.04045 ? c / 12.92 : std::pow((c + 0.055) / 1.055, 2.4);
  };
  return 0.2126 * channel(1) + 0.7152 * channel(3) + 0.0722 * channel(5);
}

HeatmapSpec build_heatmap(const Dimension& dimension, std::span<const RankedWordList> lists) {
  dimension.validate();
  std::vector<const RankedWordList*> by_class(dimension.classes.size(), nullptr);
  for (const auto& list : lists) {
    const std::size_t c = dimension.require_index(list.class_id);
    if (by_class[c]) {
      throw Error(Errc::kInvalidInput, "two ranked lists for class '" + list.class_id + "'");
    }
    by_class[c] = &list;
  }
  for (std::size_t c = 0; c < by_class.size(); ++c) {
    if (!by_class[c]) {
      throw Error(Errc::kInvalidInput,
                  "no ranked list for class '" + dimension.classes[c] + "'");
    }
  }

  HeatmapSpec spec;
  spec.dimension = dimension.name;
  spec.rows = dimension.classes;
  spec.threshold = heatmap_threshold(dimension.classes.size());

  std::map<std::string, std::size_t> coverage;
  for (const RankedWordList* list : by_class) {
    std::set<std::string> seen;
    for (const auto& e : list->entries) {
      if (seen.insert(e.word).second) ++coverage[e.word];
    }
  }
  std::vector<std::pair<std::string, std::size_t>> kept;
  for (const auto& [word, count] : coverage) {
    if (count >= spec.threshold) kept.emplace_back(word, count);
  }
  std::stable_sort(kept.begin(), kept.end(),
                   [](const auto& a, const auto& b) { return a.second > b.second; });
  for (auto& [word, count] : kept) {
    spec.columns.push_back(word);
    spec.coverage.push_back(count);
  }

  spec.cells.assign(spec.rows.size(),
                    std::vector<std::optional<RankLabel>>(spec.columns.size()));
  for (std::size_t r = 0; r < spec.rows.size(); ++r) {
    for (const auto& e : by_class[r]->entries) {
      auto it = std::find(spec.columns.begin(), spec.columns.end(), e.word);
      if (it == spec.columns.end() || !e.label) continue;
      auto& cell = spec.cells[r][static_cast<std::size_t>(it - spec.columns.begin())];
      if (!cell) cell = e.label;
    }
  }
  return spec;
}

std::string render_svg(const HeatmapSpec& spec, const Palette& palette) {
  int row_label_w = 0;
  for (const auto& r : spec.rows) row_label_w = std::max(row_label_w, text_width(r));
  int col_label_h = 0;
  for (const auto& c : spec.columns) col_label_h = std::max(col_label_h, text_width(c));
  const int left = kPad + row_label_w + kPad;
  const int top = kPad + 20 + col_label_h + kPad;
  const int grid_w = kCell * static_cast<int>(spec.columns.size());
  const int grid_h = kCell * static_cast<int>(spec.rows.size());
  const int width = left + grid_w + kPad;
  const int height = top + grid_h + kPad;

  std::ostringstream svg;
  svg << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n"
      << "<svg xmlns=\"http://www.w3.org/2000/svg\" version=\"1.1\" width=\"" << width
      << "\" height=\"" << height << "\" viewBox=\"0 0 " << width << ' ' << height << "\">\n"
      << "<rect class=\"background\" x=\"0\" y=\"0\" width=\"" << width << "\" height=\""
      << height << "\" fill=\"#ffffff\"/>\n"
      << "<text class=\"title\" x=\"" << kPad << "\" y=\"" << kPad + 12
      << "\" font-family=\"sans-serif\" font-size=\"14\">" << xml_escape(spec.dimension)
      << " (words in at least " << spec.threshold << " of " << spec.rows.size()
      << " classes)</text>\n";

  svg << "<g class=\"cells\" stroke=\"#bbbbbb\" stroke-width=\"1\">\n";
  for (std::size_t r = 0; r < spec.rows.size(); ++r) {
    for (std::size_t c = 0; c < spec.columns.size(); ++c) {
      const auto& label = spec.cells[r][c];
      const int x = left + kCell * static_cast<int>(c);
      const int y = top + kCell * static_cast<int>(r);
      svg << "<rect class=\"cell\" x=\"" << x << "\" y=\"" << y << "\" width=\"" << kCell
          << "\" height=\"" << kCell << "\" fill=\""
          << (label ? palette.color(*label) : palette.empty) << "\" data-class=\""
          << xml_escape(spec.rows[r]) << "\" data-word=\"" << xml_escape(spec.columns[c])
          << "\" data-label=\"" << (label ? label->to_string() : "") << "\"/>\n";
    }
  }
  svg << "</g>\n";

  svg << "<g class=\"cell-labels\" font-family=\"sans-serif\" font-size=\"10\" "
         "text-anchor=\"middle\">\n";
  for (std::size_t r = 0; r < spec.rows.size(); ++r) {
    for (std::size_t c = 0; c < spec.columns.size(); ++c) {
      const auto& label = spec.cells[r][c];
      if (!label) continue;
      const double lum = relative_luminance(palette.color(*label));
      svg << "<text x=\"" << left + kCell * static_cast<int>(c) + kCell / 2 << "\" y=\""
          << top + kCell * static_cast<int>(r) + kCell / 2 + 4 << "\" fill=\""
          << (lum < 0.2 ? "#ffffff" : "#000000") << "\">" << label->to_string() << "</text>\n";
    }
  }
  svg << "</g>\n";

  svg << "<g class=\"row-labels\" font-family=\"sans-serif\" font-size=\"12\" "
         "text-anchor=\"end\">\n";
  for (std::size_t r = 0; r < spec.rows.size(); ++r) {
    svg << "<text x=\"" << left - kPad / 2 << "\" y=\""
        << top + kCell * static_cast<int>(r) + kCell / 2 + 4 << "\">"
        << xml_escape(spec.rows[r]) << "</text>\n";
  }
  svg << "</g>\n";

  svg << "<g class=\"column-labels\" font-family=\"sans-serif\" font-size=\"12\">\n";
  for (std::size_t c = 0; c < spec.columns.size(); ++c) {
    const int x = left + kCell * static_cast<int>(c) + kCell / 2 + 4;
    const int y = top - kPad / 2;
    svg << "<text x=\"" << x << "\" y=\"" << y << "\" transform=\"rotate(-90 " << x << ' ' << y
        << ")\">" << xml_escape(spec.columns[c]) << "</text>\n";
  }
  svg << "</g>\n";

  svg << "<g class=\"axes\" stroke=\"#000000\" stroke-width=\"1\">\n"
      << "<line x1=\"" << left << "\" y1=\"" << top << "\" x2=\"" << left << "\" y2=\""
      << top + grid_h << "\"/>\n"
      << "<line x1=\"" << left << "\" y1=\"" << top << "\" x2=\"" << left + grid_w << "\" y2=\""
      << top << "\"/>\n"
      << "</g>\n"
      << "</svg>\n";
  return svg.str();
}

void write_heatmap_csv(std::ostream& out, const HeatmapSpec& spec) {
  write_csv_row(out, {"class", "word", "label"});
  for (std::size_t r = 0; r < spec.rows.size(); ++r) {
    for (std::size_t c = 0; c < spec.columns.size(); ++c) {
      if (const auto& label = spec.cells[r][c]) {
        write_csv_row(out, {spec.rows[r], spec.columns[c], label->to_string()});
      }
    }
  }
}

}  // namespace tokenshap
