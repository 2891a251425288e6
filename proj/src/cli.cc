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

#include "tokenshap/cli.h"

#include <algorithm>
#include <chrono>
#include <fstream>
#include <iomanip>
#include <sstream>

#include "CLI11.hpp"
#include "tokenshap/bridge.h"
#include "tokenshap/textio.h"

namespace tokenshap::cli {
namespace fs = std::filesystem;

namespace {

// Artifact names inside the output directory.
constexpr const char* kMaskedFile = "masked.jsonl";
constexpr const char* kProposalsFile = "proposals.csv";
constexpr const char* kAttributionsFile = "attributions.jsonl";
constexpr const char* kSkippedFile = "skipped.csv";
constexpr const char* kAggregateFile = "aggregate.csv";
constexpr const char* kRankedFile = "ranked.csv";
constexpr const char* kMinRatioFile = "min_ratio.csv";
constexpr const char* kHeatmapSvgFile = "heatmap.svg";
constexpr const char* kHeatmapCsvFile = "heatmap.csv";
constexpr const char* kFrequencyFile = "frequency.csv";
constexpr const char* kSimcheckFile = "simcheck.csv";
constexpr const char* kEvalFile = "eval.csv";
constexpr const char* kPredictionsFile = "predictions.csv";
constexpr const char* kBenchFile = "bench.csv";

fs::path resolve(const fs::path& base, const std::string& p) {
  if (p.empty()) return {};
  fs::path path(p);
  return path.is_absolute() ? path : base / path;
}

template <typename T>
T get_field(const nlohmann::json& j, const char* key) {
  try {
    return j.at(key).get<T>();
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("config: field '") + key + "': " + e.what());
  }
}

void require_file(const fs::path& path, const std::string& what) {
  if (path.empty()) throw ValidationError(what + " is not configured");
  if (!fs::is_regular_file(path)) {
    throw ValidationError(what + " '" + path.string() + "' does not exist");
  }
}

// Writes through a temporary file so readers never see partial output.
void write_artifact(const fs::path& path, const std::string& content) {
  fs::create_directories(path.parent_path());
  fs::path tmp = path;
  tmp += ".tmp";
  write_text_file(tmp, content);
  fs::rename(tmp, path);
}

std::optional<Dimension> configured_dimension(const RunConfig& cfg) {
  if (cfg.dimensions.empty()) return std::nullopt;
  if (cfg.dimension.empty()) return cfg.dimensions.front();
  for (const auto& d : cfg.dimensions) {
    if (d.name == cfg.dimension) return d;
  }
  throw ValidationError("dimension '" + cfg.dimension + "' is not defined in 'dimensions'");
}

std::unique_ptr<ModelAdapter> open_model(const RunConfig& cfg) {
  const auto dim = configured_dimension(cfg);
  std::unique_ptr<ModelAdapter> model;
  if (cfg.model.rfind("builtin:", 0) == 0) {
    const fs::path path = cfg.model.substr(8);
    require_file(path, "builtin model spec");
    BuiltinSpec spec;
    try {
      spec = BuiltinSpec::load(path);
    } catch (const Error& e) {
      throw ValidationError(e.what());
    }
    if (dim) {
      if (spec.classes != dim->classes) {
        throw ValidationError("model classes do not match dimension '" + dim->name + "'");
      }
      spec.dimension = dim->name;
    }
    try {
      model = make_builtin(spec);
    } catch (const Error& e) {
      throw ValidationError(e.what());
    }
  } else if (cfg.model.rfind("bridge:", 0) == 0) {
    BridgeOptions options;
    options.timeout = std::chrono::milliseconds(cfg.bridge_timeout_ms);
    options.mask_style = cfg.mask_style;
    if (dim) {
      options.dimension_name = dim->name;
      options.expected_classes = dim->classes;
    }
    model = BridgeAdapter::launch(cfg.model.substr(7), options);
  } else {
    throw ValidationError("model must be 'builtin:<file>' or 'bridge:<command>', got '" +
                          cfg.model + "'");
  }
  if (cfg.output_mode && *cfg.output_mode != model->output_mode()) {
    throw ValidationError("configured output_mode '" +
                          std::string(output_mode_name(*cfg.output_mode)) + "' but model emits '" +
                          std::string(output_mode_name(model->output_mode())) + "'");
  }
  return model;
}

Dimension resolve_dimension(const RunConfig& cfg) {
  if (auto dim = configured_dimension(cfg)) return *dim;
  if (cfg.model.rfind("builtin:", 0) == 0) {
    const fs::path path = cfg.model.substr(8);
    require_file(path, "builtin model spec");
    try {
      const BuiltinSpec spec = BuiltinSpec::load(path);
      return Dimension{spec.dimension, spec.classes};
    } catch (const Error& e) {
      throw ValidationError(e.what());
    }
  }
  throw ValidationError("configure 'dimensions' (needed without a builtin model)");
}

ExplainOptions explain_options(const RunConfig& cfg) {
  ExplainOptions o;
  o.method = cfg.method;
  o.exact_cap = cfg.exact_cap;
  o.owen_cap = cfg.owen_cap;
  o.seed = cfg.seed;
  if (cfg.method == Method::kPermutation) {
    if (!cfg.n_perms || *cfg.n_perms == 0) {
      throw ValidationError("method 'permutation' needs n_perms >= 1");
    }
  }
  if (cfg.n_perms) o.n_perms = *cfg.n_perms;
  return o;
}

// Input corpus for explain/eval: --input, else the masked corpus when one
// exists, else the raw corpus.
fs::path explain_input(const RunConfig& cfg) {
  if (!cfg.input.empty()) return cfg.input;
  const fs::path masked = cfg.out_dir / kMaskedFile;
  if (fs::is_regular_file(masked)) return masked;
  return cfg.corpus;
}

std::string corpus_text(const Corpus& corpus) {
  std::ostringstream ss;
  write_corpus(ss, corpus);
  return ss.str();
}

std::vector<RankedWordList> load_ranked(const RunConfig& cfg) {
  const fs::path path = cfg.out_dir / kRankedFile;
  require_file(path, "ranked word list (run 'rank' first)");
  std::ifstream in(path, std::ios::binary);
  return read_ranked_csv(in);
}

// ---------------------------------------------------------------------------
// Stages

void stage_mask(const RunConfig& cfg, std::ostream& out) {
  require_file(cfg.corpus, "corpus");
  Gazetteer gazetteer;
  if (!cfg.gazetteer.empty()) {
    require_file(cfg.gazetteer, "gazetteer");
    gazetteer = Gazetteer::load(cfg.gazetteer);
  }
  const Corpus corpus = load_corpus(cfg.corpus);
  Corpus masked;
  std::vector<MaskProposal> proposals;
  for (const auto& u : corpus.utterances) {
    MaskResult r = apply_gazetteer(u, gazetteer);
    masked.utterances.push_back(std::move(r.masked));
    proposals.insert(proposals.end(), r.proposals.begin(), r.proposals.end());
  }
  std::ostringstream csv;
  write_proposals(csv, proposals);
  write_artifact(cfg.out_dir / kMaskedFile, corpus_text(masked));
  write_artifact(cfg.out_dir / kProposalsFile, csv.str());
  out << "mask: " << masked.utterances.size() << " utterances, " << proposals.size()
      << " proposals\n";
}

void stage_correct(const RunConfig& cfg, std::ostream& out) {
  require_file(cfg.corpus, "corpus");
  const fs::path rows_path =
      cfg.corrections.empty() ? cfg.out_dir / kProposalsFile : cfg.corrections;
  require_file(rows_path, "corrections file");
  const Corpus corpus = load_corpus(cfg.corpus);
  const auto rows = load_proposals(rows_path);
  const Corpus masked = apply_corrections(rows, corpus);
  write_artifact(cfg.out_dir / kMaskedFile, corpus_text(masked));
  const auto rejected = std::count_if(rows.begin(), rows.end(), [](const MaskProposal& p) {
    return p.decision == Decision::kReject;
  });
  out << "correct: " << rows.size() << " rows, " << rejected << " rejected\n";
}

void stage_explain(const RunConfig& cfg, std::ostream& out) {
  const fs::path input = explain_input(cfg);
  require_file(input, "corpus");
  const ExplainOptions options = explain_options(cfg);
  auto model = open_model(cfg);
  const Corpus corpus = load_corpus(input);
  const CorpusExplanation ex = explain_corpus(*model, corpus, options, cfg.workers);

  std::ostringstream jsonl;
  write_attribution_records(jsonl, ex.results);
  std::ostringstream skipped;
  write_csv_row(skipped, {"id", "reason"});
  for (const auto& s : ex.skipped) write_csv_row(skipped, {s.id, s.reason});
  write_artifact(cfg.out_dir / kAttributionsFile, jsonl.str());
  write_artifact(cfg.out_dir / kSkippedFile, skipped.str());
  out << "explain: " << ex.results.size() << " utterances explained with "
      << method_name(options.method) << ", " << ex.skipped.size() << " skipped";
  for (const auto& s : ex.skipped) out << (&s == &ex.skipped.front() ? ": " : ", ") << s.id;
  out << '\n';
}

void stage_aggregate(const RunConfig& cfg, std::ostream& out) {
  const fs::path path = cfg.out_dir / kAttributionsFile;
  require_file(path, "attributions (run 'explain' first)");
  const Dimension dim = resolve_dimension(cfg);
  AggregateOptions options;
  options.average = cfg.average;
  options.scope = cfg.scope;
  options.merge_subwords = cfg.merge_subwords;
  if (cfg.scope == ClassScope::kGold) {
    const fs::path input = explain_input(cfg);
    require_file(input, "corpus (needed for gold scope)");
    for (const auto& u : load_corpus(input).utterances) {
      if (u.gold_label) options.gold_labels[u.id] = *u.gold_label;
    }
  }
  std::ifstream in(path, std::ios::binary);
  const auto records = read_attribution_records(in);
  const AggregateTable table = aggregate_avg_shap(records, dim, options);
  std::ostringstream csv;
  write_aggregate_csv(csv, table);
  write_artifact(cfg.out_dir / kAggregateFile, csv.str());
  out << "aggregate: " << table.words().size() << " words from " << records.size()
      << " records\n";
}

void stage_rank(const RunConfig& cfg, std::ostream& out) {
  const fs::path path = cfg.out_dir / kAggregateFile;
  require_file(path, "aggregate table (run 'aggregate' first)");
  if (cfg.top_k == 0) throw ValidationError("top_k must be >= 1");
  const Dimension dim = resolve_dimension(cfg);
  std::ifstream in(path, std::ios::binary);
  const AggregateTable table = read_aggregate_csv(in, dim);
  std::vector<RankedWordList> lists;
  std::ostringstream ratios;
  write_csv_row(ratios, {"class", "entries", "min_ratio"});
  for (const auto& c : dim.classes) {
    lists.push_back(rank_top_words(table, c, cfg.top_k));
    const auto& l = lists.back();
    write_csv_row(ratios, {c, std::to_string(l.entries.size()),
                           l.entries.empty() ? "" : format_double(min_ratio_diagnostic(l))});
  }
  std::ostringstream csv;
  write_ranked_csv(csv, lists);
  write_artifact(cfg.out_dir / kRankedFile, csv.str());
  write_artifact(cfg.out_dir / kMinRatioFile, ratios.str());
  out << "rank: top " << cfg.top_k << " words for " << lists.size() << " classes\n";
}

void stage_heatmap(const RunConfig& cfg, std::ostream& out) {
  const Dimension dim = resolve_dimension(cfg);
  auto lists = load_ranked(cfg);
  for (const auto& c : dim.classes) {
    if (std::none_of(lists.begin(), lists.end(), [&](const auto& l) { return l.class_id == c; })) {
      lists.push_back(RankedWordList{c, {}});
    }
  }
  const HeatmapSpec spec = build_heatmap(dim, lists);
  std::ostringstream csv;
  write_heatmap_csv(csv, spec);
  write_artifact(cfg.out_dir / kHeatmapSvgFile, render_svg(spec, cfg.palette));
  write_artifact(cfg.out_dir / kHeatmapCsvFile, csv.str());
  out << "heatmap: " << spec.columns.size() << " words x " << spec.rows.size()
      << " classes (threshold " << spec.threshold << ")\n";
}

void stage_freq(const RunConfig& cfg, std::ostream& out) {
  require_file(cfg.task_document, "task document");
  std::vector<std::string> words = cfg.frequency_words;
  if (words.empty()) {
    std::set<std::string> unique;
    for (const auto& l : load_ranked(cfg)) {
      for (const auto& e : l.entries) unique.insert(e.word);
    }
    words.assign(unique.begin(), unique.end());
  }
  const auto counts = task_text_frequency(words, read_text_file(cfg.task_document));
  std::ostringstream csv;
  write_csv_row(csv, {"word", "count"});
  for (const auto& [word, count] : counts) write_csv_row(csv, {word, std::to_string(count)});
  write_artifact(cfg.out_dir / kFrequencyFile, csv.str());
  out << "freq: " << counts.size() << " words counted\n";
}

void stage_simcheck(const RunConfig& cfg, std::ostream& out, std::ostream& err) {
  require_file(cfg.embeddings, "embedding file");
  if (!(cfg.simcheck_threshold >= -1.0 && cfg.simcheck_threshold <= 1.0)) {
    throw ValidationError("simcheck threshold must lie in [-1, 1]");
  }
  const auto lists = load_ranked(cfg);
  const EmbeddingStore store = EmbeddingStore::load(cfg.embeddings);
  for (const auto& w : store.warnings()) err << "warning: " << w << '\n';
  const auto rows = spuriousness_report(lists, cfg.anchors, store, cfg.simcheck_threshold);
  std::ostringstream csv;
  write_spuriousness_csv(csv, rows);
  write_artifact(cfg.out_dir / kSimcheckFile, csv.str());
  const auto flagged = std::count_if(rows.begin(), rows.end(), [](const SpuriousRow& r) {
    return r.flag == SpuriousFlag::kSpurious;
  });
  out << "simcheck: " << rows.size() << " positive words checked, " << flagged << " flagged\n";
}

void stage_eval(const RunConfig& cfg, std::ostream& out) {
  const fs::path input = explain_input(cfg);
  require_file(input, "corpus");
  auto model = open_model(cfg);
  const Dimension& dim = model->dimension();
  const Corpus corpus = load_corpus(input);
  std::vector<std::string> ids, gold, predicted;
  for (const auto& u : corpus.utterances) {
    if (u.empty() || !u.gold_label) continue;
    if (u.dimension && *u.dimension != dim.name) continue;
    const MaskedInput full{&u, std::vector<bool>(u.size(), true)};
    const auto scores = model->predict_batch(std::span<const MaskedInput>(&full, 1));
    const auto& v = scores.front().values;
    const auto best = static_cast<std::size_t>(std::max_element(v.begin(), v.end()) - v.begin());
    ids.push_back(u.id);
    gold.push_back(*u.gold_label);
    predicted.push_back(dim.classes[best]);
  }
  if (gold.empty()) throw ValidationError("no gold-labeled utterances for evaluation");
  const EvalReport report = weighted_f1(gold, predicted, dim);
  std::ostringstream csv;
  write_eval_csv(csv, report);
  std::ostringstream preds;
  write_csv_row(preds, {"id", "gold", "predicted"});
  for (std::size_t i = 0; i < ids.size(); ++i) write_csv_row(preds, {ids[i], gold[i], predicted[i]});
  write_artifact(cfg.out_dir / kEvalFile, csv.str());
  write_artifact(cfg.out_dir / kPredictionsFile, preds.str());
  out << "eval: weighted F1 " << format_double(report.weighted_f1) << " over " << report.total
      << " utterances\n";
}

void stage_bench(const RunConfig& cfg, std::ostream& out) {
  const fs::path input = explain_input(cfg);
  require_file(input, "corpus");
  auto model = open_model(cfg);
  const Corpus corpus = load_corpus(input);
  const TokenizedUtterance* u = nullptr;
  if (!cfg.bench_utterance.empty()) {
    u = corpus.find(cfg.bench_utterance);
    if (!u) throw ValidationError("no utterance '" + cfg.bench_utterance + "'");
  } else {
    for (const auto& c : corpus.utterances) {
      if (!c.empty()) {
        u = &c;
        break;
      }
    }
  }
  if (!u || u->empty()) throw ValidationError("bench needs a non-empty utterance");
  const std::size_t n = u->size();
  const std::size_t n_perms = cfg.n_perms.value_or(ExplainOptions{}.n_perms);

  struct Row {
    std::string method, budget, evals, wall_ms;
  };
  std::vector<Row> rows;
  auto measure = [&](Method method, std::string budget, bool within_cap) {
    if (!within_cap) {
      rows.push_back({std::string(method_name(method)), budget, "skipped (cap)", ""});
      return;
    }
    ExplainOptions o;
    o.method = method;
    o.exact_cap = cfg.exact_cap;
    o.owen_cap = cfg.owen_cap;
    o.n_perms = n_perms;
    o.seed = cfg.seed;
    const auto before = model->eval_count();
    const auto t0 = std::chrono::steady_clock::now();
    explain_utterance(*model, *u, o);
    const auto t1 = std::chrono::steady_clock::now();
    const double ms = std::chrono::duration<double, std::milli>(t1 - t0).count();
    std::ostringstream wall;
    wall << std::fixed << std::setprecision(3) << ms;
    rows.push_back({std::string(method_name(method)), budget,
                    std::to_string(model->eval_count() - before), wall.str()});
  };
  const bool exact_ok = n <= std::min<std::size_t>(cfg.exact_cap, 30);
  measure(Method::kExact, exact_ok ? std::to_string(std::uint64_t{1} << n) : "2^" + std::to_string(n),
          exact_ok);
  measure(Method::kOwen, "", n <= std::min<std::size_t>(cfg.owen_cap, 30));
  measure(Method::kPartition, std::to_string(4 * n + 2), true);
  measure(Method::kPermutation, std::to_string(2 * n_perms * (n + 1)), true);

  std::ostringstream csv;
  write_csv_row(csv, {"utterance", "tokens", "method", "model_evals", "budget", "wall_ms"});
  for (const auto& r : rows) {
    write_csv_row(csv, {u->id, std::to_string(n), r.method, r.evals, r.budget, r.wall_ms});
  }
  write_artifact(cfg.out_dir / kBenchFile, csv.str());
  out << "bench: utterance '" << u->id << "' (" << n << " tokens)\n";
  out << std::left << std::setw(12) << "method" << std::setw(16) << "model_evals"
      << std::setw(12) << "budget" << "wall_ms\n";
  for (const auto& r : rows) {
    out << std::left << std::setw(12) << r.method << std::setw(16) << r.evals << std::setw(12)
        << r.budget << r.wall_ms << '\n';
  }
}

void write_error_record(std::ostream& err, const std::string& stage, std::string_view code,
                        const std::string& message) {
  nlohmann::ordered_json j;
  j["error"]["stage"] = stage;
  j["error"]["code"] = code;
  j["error"]["message"] = message;
  err << j.dump() << '\n';
}

}  // namespace

RunConfig config_from_json(const nlohmann::json& j, const fs::path& base) {
  static const std::set<std::string> kKnown = {
      "corpus",  "gazetteer",  "corrections", "input",         "dimensions",
      "dimension", "model",    "method",      "output_mode",   "n_perms",
      "seed",    "caps",       "workers",     "out_dir",       "top_k",
      "mask_style", "bridge_timeout_ms", "aggregate", "palette", "anchors",
      "embeddings", "simcheck_threshold", "task_document", "frequency_words",
      "bench_utterance"};
  if (!j.is_object()) throw ValidationError("config must be a JSON object");
  for (const auto& [key, value] : j.items()) {
    if (!kKnown.count(key)) throw ValidationError("config: unknown field '" + key + "'");
  }
  RunConfig cfg;
  auto path_field = [&](const char* key, fs::path& target) {
    if (j.contains(key)) target = resolve(base, get_field<std::string>(j, key));
  };
  path_field("corpus", cfg.corpus);
  path_field("gazetteer", cfg.gazetteer);
  path_field("corrections", cfg.corrections);
  path_field("input", cfg.input);
  path_field("out_dir", cfg.out_dir);
  path_field("embeddings", cfg.embeddings);
  path_field("task_document", cfg.task_document);
  if (!j.contains("out_dir")) cfg.out_dir = base / "out";
  if (j.contains("dimensions")) {
    for (const auto& d : get_field<nlohmann::json>(j, "dimensions")) {
      Dimension dim{get_field<std::string>(d, "name"),
                    get_field<std::vector<std::string>>(d, "classes")};
      try {
        dim.validate();
      } catch (const Error& e) {
        throw ValidationError(e.what());
      }
      cfg.dimensions.push_back(std::move(dim));
    }
  }
  if (j.contains("dimension")) cfg.dimension = get_field<std::string>(j, "dimension");
  if (j.contains("model")) {
    cfg.model = get_field<std::string>(j, "model");
    if (cfg.model.rfind("builtin:", 0) == 0) {
      cfg.model = "builtin:" + resolve(base, cfg.model.substr(8)).string();
    }
  }
  try {
    if (j.contains("method")) cfg.method = parse_method(get_field<std::string>(j, "method"));
    if (j.contains("output_mode")) {
      cfg.output_mode = parse_output_mode(get_field<std::string>(j, "output_mode"));
    }
  } catch (const ValidationError&) {
    throw;
  } catch (const Error& e) {
    throw ValidationError(e.what());
  }
  if (j.contains("n_perms")) cfg.n_perms = get_field<std::size_t>(j, "n_perms");
  if (j.contains("seed")) cfg.seed = get_field<std::uint64_t>(j, "seed");
  if (j.contains("caps")) {
    const auto caps = get_field<nlohmann::json>(j, "caps");
    if (caps.contains("exact")) cfg.exact_cap = get_field<std::size_t>(caps, "exact");
    if (caps.contains("owen")) cfg.owen_cap = get_field<std::size_t>(caps, "owen");
  }
  if (j.contains("workers")) cfg.workers = get_field<std::size_t>(j, "workers");
  if (j.contains("top_k")) cfg.top_k = get_field<std::size_t>(j, "top_k");
  if (j.contains("mask_style")) {
    const auto style = get_field<std::string>(j, "mask_style");
    if (style == "substitute") {
      cfg.mask_style = MaskStyle::kSubstitute;
    } else if (style == "delete") {
      cfg.mask_style = MaskStyle::kDelete;
    } else {
      throw ValidationError("mask_style must be 'substitute' or 'delete'");
    }
  }
  if (j.contains("bridge_timeout_ms")) {
    cfg.bridge_timeout_ms = get_field<std::int64_t>(j, "bridge_timeout_ms");
  }
  if (j.contains("aggregate")) {
    const auto agg = get_field<nlohmann::json>(j, "aggregate");
    if (agg.contains("average")) {
      const auto mode = get_field<std::string>(agg, "average");
      if (mode == "occurrence") {
        cfg.average = AverageMode::kOccurrence;
      } else if (mode == "utterance") {
        cfg.average = AverageMode::kUtterance;
      } else {
        throw ValidationError("aggregate.average must be 'occurrence' or 'utterance'");
      }
    }
    if (agg.contains("scope")) {
      const auto scope = get_field<std::string>(agg, "scope");
      if (scope == "all") {
        cfg.scope = ClassScope::kAll;
      } else if (scope == "gold") {
        cfg.scope = ClassScope::kGold;
      } else {
        throw ValidationError("aggregate.scope must be 'all' or 'gold'");
      }
    }
    if (agg.contains("merge_subwords")) cfg.merge_subwords = get_field<bool>(agg, "merge_subwords");
  }
  if (j.contains("palette")) {
    const auto& p = j.at("palette");
    try {
      if (p.is_string()) {
        cfg.palette = Palette::from_json(
            nlohmann::json::parse(read_text_file(resolve(base, p.get<std::string>()))));
      } else {
        cfg.palette = Palette::from_json(p);
      }
    } catch (const nlohmann::json::exception& e) {
      throw ValidationError(std::string("palette: ") + e.what());
    } catch (const Error& e) {
      throw ValidationError(e.what());
    }
  }
  if (j.contains("anchors")) {
    const auto& anchors = j.at("anchors");
    if (!anchors.is_object()) throw ValidationError("config: anchors must map class to words");
    for (const auto& [cls, words] : anchors.items()) {
      try {
        const auto list = words.get<std::vector<std::string>>();
        cfg.anchors[cls] = std::set<std::string>(list.begin(), list.end());
      } catch (const nlohmann::json::exception& e) {
        throw ValidationError("config: anchors." + cls + ": " + e.what());
      }
    }
  }
  if (j.contains("simcheck_threshold")) {
    cfg.simcheck_threshold = get_field<double>(j, "simcheck_threshold");
  }
  if (j.contains("frequency_words")) {
    cfg.frequency_words = get_field<std::vector<std::string>>(j, "frequency_words");
  }
  if (j.contains("bench_utterance")) {
    cfg.bench_utterance = get_field<std::string>(j, "bench_utterance");
  }
  return cfg;
}

RunConfig load_config(const fs::path& path) {
  if (!fs::is_regular_file(path)) {
    throw ValidationError("config file '" + path.string() + "' does not exist");
  }
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(read_text_file(path));
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError("config '" + path.string() + "': " + e.what());
  }
  return config_from_json(j, path.parent_path());
}

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Token attribution for black-box text classifiers", "tokenshap"};
  app.fallthrough();
  app.require_subcommand(1, 1);

  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> method, out_dir, model, corpus, gazetteer, corrections, input,
      document, embeddings, utterance, output_mode;
  std::optional<std::size_t> workers, n_perms, top_k;
  std::optional<double> threshold;
  std::vector<std::string> words;

  app.add_option("-c,--config", config_path, "JSON run configuration");
  app.add_option("--seed", seed, "Random seed for permutation sampling");
  app.add_option("--method", method, "exact | owen | partition | permutation");
  app.add_option("--workers", workers, "Parallel workers for explain");
  app.add_option("--out-dir", out_dir, "Directory for stage artifacts");
  app.add_option("--model", model, "builtin:<spec.json> or bridge:<command>");
  app.add_option("--output-mode", output_mode, "probability | score");
  app.add_option("--corpus", corpus, "Corpus JSONL");
  app.add_option("--gazetteer", gazetteer, "Gazetteer CSV");
  app.add_option("--corrections", corrections, "Reviewed proposals CSV");
  app.add_option("--input", input, "Corpus JSONL to explain or evaluate");
  app.add_option("--n-perms", n_perms, "Permutations for the permutation method");
  app.add_option("--top-k", top_k, "Words kept per class");
  app.add_option("--document", document, "Task text for freq");
  app.add_option("--words", words, "Words counted by freq");
  app.add_option("--embeddings", embeddings, "word2vec text file for simcheck");
  app.add_option("--threshold", threshold, "simcheck cosine threshold");
  app.add_option("--utterance", utterance, "Utterance id used by bench");

  const std::vector<std::pair<std::string, std::string>> commands = {
      {"mask", "Mask gazetteer entities and write review proposals"},
      {"correct", "Apply reviewed proposals to the corpus"},
      {"explain", "Compute per-token attributions (JSONL)"},
      {"aggregate", "Average attributions per word and class"},
      {"rank", "Rank and label the top words per class"},
      {"heatmap", "Render the cross-class heatmap (SVG + CSV)"},
      {"freq", "Count top words in a task document"},
      {"simcheck", "Flag positive words far from class anchor words"},
      {"eval", "Weighted F1 of the model on gold labels"},
      {"bench", "Compare model evaluations across methods"},
      {"pipeline", "mask, explain, aggregate, rank, heatmap"}};
  for (const auto& [name, help] : commands) app.add_subcommand(name, help);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitValidation;
  }
  const std::string stage = app.get_subcommands().front()->get_name();

  RunConfig cfg;
  try {
    if (!config_path.empty()) {
      cfg = load_config(config_path);
    } else {
      cfg.out_dir = "out";
    }
    if (seed) cfg.seed = *seed;
    if (method) cfg.method = parse_method(*method);
    if (workers) cfg.workers = *workers;
    if (out_dir) cfg.out_dir = *out_dir;
    if (model) cfg.model = *model;
    if (output_mode) cfg.output_mode = parse_output_mode(*output_mode);
    if (corpus) cfg.corpus = *corpus;
    if (gazetteer) cfg.gazetteer = *gazetteer;
    if (corrections) cfg.corrections = *corrections;
    if (input) cfg.input = *input;
    if (n_perms) cfg.n_perms = *n_perms;
    if (top_k) cfg.top_k = *top_k;
    if (document) cfg.task_document = *document;
    if (!words.empty()) cfg.frequency_words = words;
    if (embeddings) cfg.embeddings = *embeddings;
    if (threshold) cfg.simcheck_threshold = *threshold;
    if (utterance) cfg.bench_utterance = *utterance;
  } catch (const Error& e) {
    write_error_record(err, stage, "invalid_config", e.what());
    return kExitValidation;
  }

  std::string current = stage;
  try {
    auto run_stage = [&](const std::string& name) {
      current = name;
      if (name == "mask") stage_mask(cfg, out);
      else if (name == "correct") stage_correct(cfg, out);
      else if (name == "explain") stage_explain(cfg, out);
      else if (name == "aggregate") stage_aggregate(cfg, out);
      else if (name == "rank") stage_rank(cfg, out);
      else if (name == "heatmap") stage_heatmap(cfg, out);
      else if (name == "freq") stage_freq(cfg, out);
      else if (name == "simcheck") stage_simcheck(cfg, out, err);
      else if (name == "eval") stage_eval(cfg, out);
      else if (name == "bench") stage_bench(cfg, out);
    };
    if (stage == "pipeline") {
      for (const char* name : {"mask", "explain", "aggregate", "rank", "heatmap"}) run_stage(name);
    } else {
      run_stage(stage);
    }
  } catch (const ValidationError& e) {
    write_error_record(err, current, "invalid_config", e.what());
    return kExitValidation;
  } catch (const Error& e) {
    write_error_record(err, current, errc_name(e.code()), e.what());
    return kExitStage;
  } catch (const std::exception& e) {
    write_error_record(err, current, "internal", e.what());
    return kExitStage;
  }
  return kExitOk;
}

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  std::vector<const char*> argv;
  argv.push_back("tokenshap");
  for (const auto& a : args) argv.push_back(a.c_str());
  return run(static_cast<int>(argv.size()), argv.data(), out, err);
}

}  // namespace tokenshap::cli
