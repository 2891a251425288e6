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

#ifndef TOKENSHAP_CLI_H_
#define TOKENSHAP_CLI_H_

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <ostream>
#include <set>
#include <string>
#include <vector>

#include "json.hpp"
#include "tokenshap/aggregate.h"
#include "tokenshap/attribution.h"
#include "tokenshap/corpus.h"
#include "tokenshap/error.h"
#include "tokenshap/model.h"
#include "tokenshap/report.h"
#include "tokenshap/simcheck.h"

namespace tokenshap::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitValidation = 2;
inline constexpr int kExitStage = 3;

// Configuration problems detected before a stage starts (exit code 2).
class ValidationError : public Error {
 public:
  explicit ValidationError(const std::string& message) : Error(Errc::kInvalidInput, message) {}
};

struct RunConfig {
  std::filesystem::path corpus;
  std::filesystem::path gazetteer;
  std::filesystem::path corrections;
  std::filesystem::path input;  // explicit explain/eval input corpus
  std::vector<Dimension> dimensions;
  std::string dimension;  // active dimension name
  std::string model;      // "builtin:<file>" or "bridge:<command line>"
  Method method = Method::kPartition;
  std::optional<OutputMode> output_mode;
  std::optional<std::size_t> n_perms;
  std::uint64_t seed = 0;
  std::size_t exact_cap = 20;
  std::size_t owen_cap = 12;
  std::size_t workers = 1;
  std::filesystem::path out_dir = "out";
  std::size_t top_k = kDefaultTopK;
  MaskStyle mask_style = MaskStyle::kSubstitute;
  std::int64_t bridge_timeout_ms = 5000;
  AverageMode average = AverageMode::kOccurrence;
  ClassScope scope = ClassScope::kAll;
  bool merge_subwords = true;
  Palette palette = Palette::defaults();
  AnchorMap anchors;
  std::filesystem::path embeddings;
  double simcheck_threshold = 0.3;
  std::filesystem::path task_document;
  std::vector<std::string> frequency_words;
  std::string bench_utterance;
};

// Reads the JSON config; relative paths resolve against the file's
// directory. Unknown keys are rejected. Throws ValidationError.
RunConfig load_config(const std::filesystem::path& path);
RunConfig config_from_json(const nlohmann::json& j, const std::filesystem::path& base_dir);

// Entry point shared by the executable and the tests. Never throws.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace tokenshap::cli

#endif  // TOKENSHAP_CLI_H_
