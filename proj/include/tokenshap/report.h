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

#ifndef TOKENSHAP_REPORT_H_
#define TOKENSHAP_REPORT_H_

#include <array>
#include <cstddef>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"
#include "tokenshap/aggregate.h"
#include "tokenshap/corpus.h"

namespace tokenshap {

// Ten-step ramps, index 0 = rank 1 (darkest).
struct Palette {
  std::array<std::string, 10> positive;
  std::array<std::string, 10> negative;
  std::string empty = "#ffffff";

  static Palette defaults();
  // {"positive": [10 x "#rrggbb"], "negative": [...], "empty"?: "#rrggbb"}.
  static Palette from_json(const nlohmann::json& j);
  const std::string& color(const RankLabel& label) const;
};

// WCAG relative luminance of a "#rrggbb" color.
double relative_luminance(std::string_view hex);

// ceil(0.5 * num_classes): 5 of 10 classes, 2 of 3.
inline std::size_t heatmap_threshold(std::size_t num_classes) { return (num_classes + 1) / 2; }

struct HeatmapSpec {
  std::string dimension;
  std::vector<std::string> rows;     // classes, declared order
  std::vector<std::string> columns;  // qualifying words
  std::vector<std::size_t> coverage; // per column: lists containing the word
  std::size_t threshold = 0;
  // cells[row][column]: the word's label in that class's list, if any.
  std::vector<std::vector<std::optional<RankLabel>>> cells;
};

// Keeps words present in at least heatmap_threshold() of the class lists,
// ordered by coverage (descending) then word. Needs exactly one list per
// class of the dimension.
HeatmapSpec build_heatmap(const Dimension& dimension, std::span<const RankedWordList> lists);

// Deterministic SVG 1.1: one rect per cell, class and word labels, axes.
std::string render_svg(const HeatmapSpec& spec, const Palette& palette = Palette::defaults());

// `class,word,label`, one row per labeled cell, row-major.
void write_heatmap_csv(std::ostream& out, const HeatmapSpec& spec);

}  // namespace tokenshap

#endif  // TOKENSHAP_REPORT_H_
