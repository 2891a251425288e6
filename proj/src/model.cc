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

#include "tokenshap/model.h"

#include <algorithm>
#include <cmath>
#include <fstream>

#include "tokenshap/error.h"
#include "tokenshap/textio.h"

namespace tokenshap {

std::string_view output_mode_name(OutputMode mode) {
  return mode == OutputMode::kProbability ? "probability" : "score";
}

OutputMode parse_output_mode(std::string_view name) {
  if (name == "probability") return OutputMode::kProbability;
  if (name == "score") return OutputMode::kScore;
  throw Error(Errc::kInvalidInput, "unknown output_mode '" + std::string(name) + "'");
}

std::string render_masked_text(const MaskedInput& input, MaskStyle style) {
  std::string out;
  const auto& tokens = input.utterance->tokens;
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    std::string_view word = tokens[i].surface;
    if (!input.present[i]) {
      if (style == MaskStyle::kDelete) continue;
      word = kMaskToken;
    }
    if (!out.empty()) out.push_back(' ');
    out += word;
  }
  return out;
}

double explained_value(const ScoreVector& vector, const Dimension& dimension,
                       std::string_view target_class) {
  const std::size_t idx = dimension.require_index(target_class);
  if (idx >= vector.values.size()) {
    throw Error(Errc::kInvalidInput, "score vector shorter than dimension");
  }
  return vector.values[idx];
}

ModelAdapter::ModelAdapter(std::string name, Dimension dimension, OutputMode mode)
    : name_(std::move(name)), dimension_(std::move(dimension)), mode_(mode) {
  dimension_.validate();
}

std::vector<ScoreVector> ModelAdapter::predict_batch(std::span<const MaskedInput> inputs) {
  if (inputs.empty()) return {};
  const std::size_t n = inputs.front().utterance->tokens.size();
  if (n == 0) throw Error(Errc::kInvalidInput, "predict_batch: empty utterance");
  for (const MaskedInput& in : inputs) {
    if (in.utterance->tokens.size() != n || in.present.size() != n) {
      throw Error(Errc::kInvalidInput, "predict_batch: inputs differ in length");
    }
  }

  std::vector<ScoreVector> out;
  {
    std::unique_lock<std::mutex> lock(serial_mu_, std::defer_lock);
    if (serialized()) lock.lock();
    evals_.fetch_add(inputs.size());
    out = do_predict(inputs);
  }

  std::vector<std::size_t> all(inputs.size());
  for (std::size_t i = 0; i < all.size(); ++i) all[i] = i;
  if (out.size() != inputs.size()) {
    throw AdapterError("model returned " + std::to_string(out.size()) +
                           " vectors for a batch of " + std::to_string(inputs.size()),
                       all);
  }
  const std::size_t k = dimension_.classes.size();
  for (std::size_t i = 0; i < out.size(); ++i) {
    const auto& v = out[i].values;
    bool ok = v.size() == k;
    double sum = 0.0;
    for (double x : v) {
      ok = ok && std::isfinite(x);
      if (mode_ == OutputMode::kProbability) ok = ok && x >= 0.0 && x <= 1.0;
      sum += x;
    }
    if (ok && mode_ == OutputMode::kProbability) ok = std::abs(sum - 1.0) <= 1e-6;
    if (!ok) throw AdapterError("malformed score vector at batch index " + std::to_string(i), {i});
  }
  return out;
}

namespace {

BuiltinKind parse_kind(const std::string& kind) {
  if (kind == "constant") return BuiltinKind::kConstant;
  if (kind == "keyword-score") return BuiltinKind::kKeywordScore;
  if (kind == "keyword-softmax") return BuiltinKind::kKeywordSoftmax;
  if (kind == "and-gate") return BuiltinKind::kAndGate;
  throw Error(Errc::kUnknownModel, "unknown builtin model kind '" + kind + "'");
}

std::string_view kind_name(BuiltinKind kind) {
  switch (kind) {
    case BuiltinKind::kConstant: return "constant";
    case BuiltinKind::kKeywordScore: return "keyword-score";
    case BuiltinKind::kKeywordSoftmax: return "keyword-softmax";
    case BuiltinKind::kAndGate: return "and-gate";
  }
  return "constant";
}

class ConstantModel final : public ModelAdapter {
 public:
  ConstantModel(std::string name, Dimension dim, OutputMode mode, std::vector<double> values)
      : ModelAdapter(std::move(name), std::move(dim), mode), values_(std::move(values)) {}

 protected:
  std::vector<ScoreVector> do_predict(std::span<const MaskedInput> inputs) override {
    return std::vector<ScoreVector>(inputs.size(), ScoreVector{values_});
  }

 private:
  std::vector<double> values_;
};

// Per-class score base_c + sum of visible token weights; optionally
// softmax-normalized.
class KeywordModel final : public ModelAdapter {
 public:
  KeywordModel(std::string name, Dimension dim, bool softmax, std::vector<double> base,
               std::map<std::string, std::vector<double>> weights)
      : ModelAdapter(std::move(name), std::move(dim),
                     softmax ? OutputMode::kProbability : OutputMode::kScore),
        softmax_(softmax),
        base_(std::move(base)),
        weights_(std::move(weights)) {}

 protected:
  std::vector<ScoreVector> do_predict(std::span<const MaskedInput> inputs) override {
    std::vector<ScoreVector> out;
    out.reserve(inputs.size());
    for (const MaskedInput& in : inputs) {
      std::vector<double> s = base_;
      const auto& tokens = in.utterance->tokens;
      for (std::size_t i = 0; i < tokens.size(); ++i) {
        if (!in.present[i]) continue;
        auto it = weights_.find(tokens[i].surface);
        if (it == weights_.end()) continue;
        for (std::size_t c = 0; c < s.size(); ++c) s[c] += it->second[c];
      }
      if (softmax_) {
        const double mx = *std::max_element(s.begin(), s.end());
        double z = 0.0;
        for (double& x : s) {
          x = std::exp(x - mx);
          z += x;
        }
        for (double& x : s) x /= z;
      }
      out.push_back(ScoreVector{std::move(s)});
    }
    return out;
  }

 private:
  bool softmax_;
  std::vector<double> base_;
  std::map<std::string, std::vector<double>> weights_;
};

class AndGateModel final : public ModelAdapter {
 public:
  AndGateModel(std::string name, Dimension dim, std::size_t target,
               std::vector<std::string> triggers)
      : ModelAdapter(std::move(name), std::move(dim), OutputMode::kScore),
        target_(target),
        triggers_(std::move(triggers)) {}

 protected:
  std::vector<ScoreVector> do_predict(std::span<const MaskedInput> inputs) override {
    std::vector<ScoreVector> out;
    out.reserve(inputs.size());
    const std::size_t k = dimension().classes.size();
    for (const MaskedInput& in : inputs) {
      bool all = true;
      for (const auto& trigger : triggers_) {
        bool seen = false;
        const auto& tokens = in.utterance->tokens;
        for (std::size_t i = 0; i < tokens.size() && !seen; ++i) {
          seen = in.present[i] && tokens[i].surface == trigger;
        }
        all = all && seen;
      }
      std::vector<double> v(k, 0.0);
      v[target_] = all ? 1.0 : 0.0;
      out.push_back(ScoreVector{std::move(v)});
    }
    return out;
  }

 private:
  std::size_t target_;
  std::vector<std::string> triggers_;
};

void require_finite(double x, const std::string& what) {
  if (!std::isfinite(x)) throw Error(Errc::kNonFiniteWeight, "non-finite " + what);
}

}  // namespace

BuiltinSpec BuiltinSpec::from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw Error(Errc::kInvalidInput, "model spec must be a JSON object");
  BuiltinSpec spec;
  try {
    spec.kind = parse_kind(j.at("kind").get<std::string>());
    spec.classes = j.at("classes").get<std::vector<std::string>>();
    spec.name = j.value("name", std::string(kind_name(spec.kind)));
    spec.dimension = j.value("dimension", std::string("default"));
    if (j.contains("base")) spec.base = j.at("base").get<std::vector<double>>();
    if (j.contains("weights")) {
      spec.weights =
          j.at("weights").get<std::map<std::string, std::map<std::string, double>>>();
    }
    if (j.contains("triggers")) spec.triggers = j.at("triggers").get<std::vector<std::string>>();
    if (j.contains("target")) spec.target = j.at("target").get<std::string>();
    if (j.contains("output_mode")) {
      spec.output_mode = parse_output_mode(j.at("output_mode").get<std::string>());
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(Errc::kInvalidInput, std::string("model spec: ") + e.what());
  }
  return spec;
}

BuiltinSpec BuiltinSpec::load(const std::filesystem::path& path) {
  try {
    return from_json(nlohmann::json::parse(read_text_file(path)));
  } catch (const nlohmann::json::exception& e) {
    throw Error(Errc::kInvalidInput, path.string() + ": " + e.what());
  }
}

nlohmann::ordered_json BuiltinSpec::to_json() const {
  nlohmann::ordered_json j;
  j["kind"] = kind_name(kind);
  j["name"] = name;
  j["dimension"] = dimension;
  j["classes"] = classes;
  j["base"] = base;
  j["weights"] = weights;
  j["triggers"] = triggers;
  if (!target.empty()) j["target"] = target;
  if (output_mode) j["output_mode"] = output_mode_name(*output_mode);
  return j;
}

std::unique_ptr<ModelAdapter> make_builtin(const BuiltinSpec& spec) {
  Dimension dim{spec.dimension, spec.classes};
  dim.validate();
  const std::size_t k = dim.classes.size();
  std::vector<double> base = spec.base.empty() ? std::vector<double>(k, 0.0) : spec.base;
  if (base.size() != k) {
    throw Error(Errc::kInvalidInput, "model spec: base has " + std::to_string(base.size()) +
                                         " entries for " + std::to_string(k) + " classes");
  }
  for (double b : base) require_finite(b, "base value");
  const std::string name = spec.name.empty() ? std::string(kind_name(spec.kind)) : spec.name;

  switch (spec.kind) {
    case BuiltinKind::kConstant: {
      const OutputMode mode = spec.output_mode.value_or(OutputMode::kScore);
      if (mode == OutputMode::kProbability) {
        double sum = 0.0;
        for (double b : base) sum += b;
        const bool in_range =
            std::all_of(base.begin(), base.end(), [](double b) { return b >= 0.0 && b <= 1.0; });
        if (!in_range || std::abs(sum - 1.0) > 1e-6) {
          throw Error(Errc::kInvalidInput, "model spec: constant probabilities must sum to 1");
        }
      }
      return std::make_unique<ConstantModel>(name, dim, mode, base);
    }
    case BuiltinKind::kKeywordScore:
    case BuiltinKind::kKeywordSoftmax: {
      const bool softmax = spec.kind == BuiltinKind::kKeywordSoftmax;
      const OutputMode natural = softmax ? OutputMode::kProbability : OutputMode::kScore;
      if (spec.output_mode && *spec.output_mode != natural) {
        throw Error(Errc::kInvalidInput, "model spec: " + std::string(kind_name(spec.kind)) +
                                             " produces " +
                                             std::string(output_mode_name(natural)) + " output");
      }
      std::map<std::string, std::vector<double>> by_token;
      for (const auto& [cls, table] : spec.weights) {
        const std::size_t c = dim.require_index(cls);
        for (const auto& [token, w] : table) {
          require_finite(w, "weight for '" + token + "'");
          auto& row = by_token[token];
          if (row.empty()) row.assign(k, 0.0);
          row[c] = w;
        }
      }
      return std::make_unique<KeywordModel>(name, dim, softmax, base, std::move(by_token));
    }
    case BuiltinKind::kAndGate: {
      if (spec.output_mode && *spec.output_mode != OutputMode::kScore) {
        throw Error(Errc::kInvalidInput, "model spec: and-gate produces score output");
      }
      const std::size_t target = spec.target.empty() ? 0 : dim.require_index(spec.target);
      return std::make_unique<AndGateModel>(name, dim, target, spec.triggers);
    }
  }
  throw Error(Errc::kUnknownModel, "unknown builtin model kind");
}

}  // namespace tokenshap
