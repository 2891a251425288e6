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

#ifndef TOKENSHAP_MODEL_H_
#define TOKENSHAP_MODEL_H_

#include <atomic>
#include <cstdint>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"
#include "tokenshap/corpus.h"

namespace tokenshap {

enum class OutputMode { kProbability, kScore };

std::string_view output_mode_name(OutputMode mode);
OutputMode parse_output_mode(std::string_view name);

// How an absent token reaches a text-consuming model.
enum class MaskStyle { kSubstitute, kDelete };

inline constexpr std::string_view kMaskToken = "[MASK]";

// One coalition of an utterance: present[i] is true when token i is visible.
struct MaskedInput {
  const TokenizedUtterance* utterance = nullptr;
  std::vector<bool> present;
};

// Visible tokens joined by single spaces; absent tokens become "[MASK]"
// (kSubstitute) or are dropped (kDelete).
std::string render_masked_text(const MaskedInput& input, MaskStyle style);

struct ScoreVector {
  std::vector<double> values;

  bool operator==(const ScoreVector&) const = default;
};

// The scalar game value v(S) for one class: the class component of the
// model output.
double explained_value(const ScoreVector& vector, const Dimension& dimension,
                       std::string_view target_class);

// Black-box classifier contract. Implementations override do_predict();
// predict_batch() validates shapes and outputs and keeps the evaluation
// count.
class ModelAdapter {
 public:
  virtual ~ModelAdapter() = default;
  ModelAdapter(const ModelAdapter&) = delete;
  ModelAdapter& operator=(const ModelAdapter&) = delete;

  const std::string& name() const { return name_; }
  const Dimension& dimension() const { return dimension_; }
  OutputMode output_mode() const { return mode_; }

  // Single-input evaluations requested so far.
  std::uint64_t eval_count() const { return evals_.load(); }

  // True when at most one batch may be in flight (external processes).
  virtual bool serialized() const { return false; }

  // All inputs must share one utterance length >= 1. Throws AdapterError
  // when the backend fails or returns malformed vectors.
  std::vector<ScoreVector> predict_batch(std::span<const MaskedInput> inputs);

 protected:
  ModelAdapter(std::string name, Dimension dimension, OutputMode mode);

  virtual std::vector<ScoreVector> do_predict(std::span<const MaskedInput> inputs) = 0;

 private:
  std::string name_;
  Dimension dimension_;
  OutputMode mode_;
  std::atomic<std::uint64_t> evals_{0};
  std::mutex serial_mu_;
};

enum class BuiltinKind { kConstant, kKeywordScore, kKeywordSoftmax, kAndGate };

// Parameters for the deterministic reference models. Keyword weights are
// matched against token surfaces exactly (tokens are already lowercased).
struct BuiltinSpec {
  BuiltinKind kind = BuiltinKind::kConstant;
  std::string name;
  std::string dimension = "default";
  std::vector<std::string> classes;
  std::vector<double> base;  // empty means all zeros
  std::map<std::string, std::map<std::string, double>> weights;  // class -> token -> w
  std::vector<std::string> triggers;
  std::string target;  // and-gate output class; defaults to the first class
  std::optional<OutputMode> output_mode;

  // Accepts {"kind", "classes", "base", "weights", "triggers",
  // "output_mode", "target"?, "name"?, "dimension"?}.
  static BuiltinSpec from_json(const nlohmann::json& j);
  static BuiltinSpec load(const std::filesystem::path& path);
  nlohmann::ordered_json to_json() const;
};

// Throws kUnknownModel, kNonFiniteWeight, or kInvalidInput.
std::unique_ptr<ModelAdapter> make_builtin(const BuiltinSpec& spec);

}  // namespace tokenshap

#endif  // TOKENSHAP_MODEL_H_
