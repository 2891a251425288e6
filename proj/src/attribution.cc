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

#include "tokenshap/attribution.h"

#include <algorithm>
#include <atomic>
#include <bit>
#include <cctype>
#include <exception>
#include <functional>
#include <mutex>
#include <numeric>
#include <thread>

#include "json.hpp"
#include "tokenshap/coalition.h"
#include "tokenshap/error.h"
#include "tokenshap/rng.h"

namespace tokenshap {

std::string_view method_name(Method method) {
  switch (method) {
    case Method::kExact: return "exact";
    case Method::kOwen: return "owen";
    case Method::kPartition: return "partition";
    case Method::kPermutation: return "permutation";
  }
  return "exact";
}

Method parse_method(std::string_view name) {
  if (name == "exact") return Method::kExact;
  if (name == "owen") return Method::kOwen;
  if (name == "partition") return Method::kPartition;
  if (name == "permutation") return Method::kPermutation;
  throw Error(Errc::kInvalidInput, "unknown method '" + std::string(name) +
                                       "' (expected exact, owen, partition, permutation)");
}

// ---------------------------------------------------------------------------
// PartitionTree

std::size_t PartitionTree::add_leaf(std::size_t position) {
  Node node;
  node.leaf = position;
  node.members = {position};
  nodes_.push_back(std::move(node));
  return nodes_.size() - 1;
}

std::size_t PartitionTree::add_internal(std::size_t left, std::size_t right) {
  Node node;
  node.left = static_cast<int>(left);
  node.right = static_cast<int>(right);
  const auto& a = nodes_[left].members;
  const auto& b = nodes_[right].members;
  node.members.reserve(a.size() + b.size());
  std::merge(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(node.members));
  nodes_.push_back(std::move(node));
  return nodes_.size() - 1;
}

void PartitionTree::validate() const {
  const auto& members = nodes_[root_].members;
  for (std::size_t i = 0; i < members.size(); ++i) {
    if (members[i] != i) {
      throw Error(Errc::kInvalidInput,
                  "partition tree leaves must be exactly 0..n-1, each once");
    }
  }
}

PartitionTree PartitionTree::contiguous_bisection(std::size_t n) {
  if (n == 0) throw Error(Errc::kInvalidInput, "partition tree needs at least one token");
  PartitionTree tree;
  tree.n_ = n;
  tree.nodes_.reserve(2 * n - 1);
  std::function<std::size_t(std::size_t, std::size_t)> build = [&](std::size_t a,
                                                                    std::size_t b) {
    if (b - a == 1) return tree.add_leaf(a);
    const std::size_t mid = (a + b + 1) / 2;
    const std::size_t left = build(a, mid);
    const std::size_t right = build(mid, b);
    return tree.add_internal(left, right);
  };
  tree.root_ = build(0, n);
  return tree;
}

PartitionTree PartitionTree::parse(std::string_view text) {
  PartitionTree tree;
  std::size_t pos = 0;
  auto fail = [&](const std::string& what) -> Error {
    return Error(Errc::kInvalidInput, "partition tree '" + std::string(text) + "': " + what +
                                          " at offset " + std::to_string(pos));
  };
  auto skip_ws = [&] {
    while (pos < text.size() && std::isspace(static_cast<unsigned char>(text[pos]))) ++pos;
  };
  auto expect = [&](char c) {
    skip_ws();
    if (pos >= text.size() || text[pos] != c) throw fail(std::string("expected '") + c + "'");
    ++pos;
  };
  std::function<std::size_t()> node = [&]() -> std::size_t {
    skip_ws();
    if (pos < text.size() && text[pos] == '(') {
      ++pos;
      const std::size_t left = node();
      expect(',');
      const std::size_t right = node();
      expect(')');
      return tree.add_internal(left, right);
    }
    std::size_t start = pos;
    while (pos < text.size() && std::isdigit(static_cast<unsigned char>(text[pos]))) ++pos;
    if (start == pos) throw fail("expected a leaf index");
    return tree.add_leaf(std::stoul(std::string(text.substr(start, pos - start))));
  };
  tree.root_ = node();
  skip_ws();
  if (pos != text.size()) throw fail("trailing characters");
  tree.n_ = tree.nodes_[tree.root_].members.size();
  tree.validate();
  return tree;
}

bool PartitionTree::contiguous() const {
  return std::all_of(nodes_.begin(), nodes_.end(), [](const Node& node) {
    return node.members.back() - node.members.front() + 1 == node.members.size();
  });
}

std::string PartitionTree::to_string() const {
  std::function<std::string(std::size_t)> render = [&](std::size_t i) {
    const Node& node = nodes_[i];
    if (node.is_leaf()) return std::to_string(node.leaf);
    return "(" + render(static_cast<std::size_t>(node.left)) + "," +
           render(static_cast<std::size_t>(node.right)) + ")";
  };
  return render(root_);
}

// ---------------------------------------------------------------------------
// AttributionResult

const ClassAttribution& AttributionResult::for_class(std::string_view class_id) const {
  for (const auto& c : classes) {
    if (c.class_id == class_id) return c;
  }
  throw Error(Errc::kUnknownClass, "no attribution for class '" + std::string(class_id) + "'");
}

const std::string& AttributionResult::predicted_class() const {
  auto best = std::max_element(classes.begin(), classes.end(),
                               [](const auto& a, const auto& b) { return a.full < b.full; });
  return best->class_id;
}

namespace {

void require_nonempty(const TokenizedUtterance& utterance) {
  if (utterance.empty()) {
    throw Error(Errc::kEmptyUtterance, "utterance '" + utterance.id + "' has no tokens");
  }
}

void require_tree_fits(const PartitionTree& tree, const TokenizedUtterance& utterance) {
  if (tree.num_leaves() != utterance.size()) {
    throw Error(Errc::kInvalidInput, "partition tree has " + std::to_string(tree.num_leaves()) +
                                         " leaves for " + std::to_string(utterance.size()) +
                                         " tokens");
  }
}

void check_cap(const TokenizedUtterance& utterance, std::size_t cap, std::string_view method) {
  // Masks are 64-bit, so 2^n enumeration stops at 30 regardless of the cap.
  if (utterance.size() > cap || utterance.size() > 30) {
    throw Error(Errc::kCapExceeded,
                "utterance '" + utterance.id + "' has " + std::to_string(utterance.size()) +
                    " tokens; " + std::string(method) + " is capped at " +
                    std::to_string(std::min<std::size_t>(cap, 30)) +
                    " (use the partition or permutation method)");
  }
}

AttributionResult make_result(const TokenizedUtterance& utterance, const Dimension& dim,
                              Method method) {
  AttributionResult r;
  r.utterance_id = utterance.id;
  r.tokens = utterance.surfaces();
  r.method = method;
  for (const auto& c : dim.classes) {
    r.classes.push_back(ClassAttribution{c, 0.0, 0.0, std::vector<double>(utterance.size(), 0.0)});
  }
  return r;
}

// Evaluates the listed bitmask coalitions and stores them in a dense table
// indexed by mask, k values per entry.
void evaluate_masks(ModelAdapter& adapter, const TokenizedUtterance& utterance,
                    std::span<const std::uint64_t> masks, std::size_t batch_size,
                    std::vector<double>& table) {
  const std::size_t n = utterance.size();
  const std::size_t k = adapter.dimension().classes.size();
  std::vector<MaskedInput> batch;
  std::vector<std::uint64_t> batch_masks;
  auto flush = [&] {
    if (batch.empty()) return;
    auto scores = adapter.predict_batch(batch);
    for (std::size_t i = 0; i < batch.size(); ++i) {
      std::copy(scores[i].values.begin(), scores[i].values.end(),
                table.begin() + static_cast<std::ptrdiff_t>(batch_masks[i] * k));
    }
    batch.clear();
    batch_masks.clear();
  };
  for (std::uint64_t mask : masks) {
    std::vector<bool> present(n);
    for (std::size_t i = 0; i < n; ++i) present[i] = (mask >> i) & 1u;
    batch.push_back(MaskedInput{&utterance, std::move(present)});
    batch_masks.push_back(mask);
    if (batch.size() >= batch_size) flush();
  }
  flush();
}

}  // namespace

// ---------------------------------------------------------------------------
// Explainers

AttributionResult exact_shapley(ModelAdapter& adapter, const TokenizedUtterance& utterance,
                                std::size_t cap, std::size_t batch_size) {
  require_nonempty(utterance);
  check_cap(utterance, cap, "exact_shapley");
  const std::size_t n = utterance.size();
  const std::size_t k = adapter.dimension().classes.size();
  const std::uint64_t total = std::uint64_t{1} << n;

  std::vector<double> table(total * k);
  std::vector<std::uint64_t> masks(total);
  std::iota(masks.begin(), masks.end(), std::uint64_t{0});
  evaluate_masks(adapter, utterance, masks, std::max<std::size_t>(batch_size, 1), table);

  // weight[s] = s! (n - s - 1)! / n!
  std::vector<double> weight(n);
  weight[0] = 1.0 / static_cast<double>(n);
  for (std::size_t s = 0; s + 1 < n; ++s) {
    weight[s + 1] = weight[s] * static_cast<double>(s + 1) / static_cast<double>(n - 1 - s);
  }

  AttributionResult r = make_result(utterance, adapter.dimension(), Method::kExact);
  r.model_evals = total;
  std::vector<double> phi(k * n, 0.0);
  for (std::uint64_t mask = 0; mask < total; ++mask) {
    const auto size = static_cast<std::size_t>(std::popcount(mask));
    if (size == n) continue;
    const double w = weight[size];
    const double* without = &table[mask * k];
    for (std::size_t i = 0; i < n; ++i) {
      const std::uint64_t bit = std::uint64_t{1} << i;
      if (mask & bit) continue;
      const double* with = &table[(mask | bit) * k];
      for (std::size_t c = 0; c < k; ++c) phi[c * n + i] += w * (with[c] - without[c]);
    }
  }
  for (std::size_t c = 0; c < k; ++c) {
    auto& out = r.classes[c];
    out.base = table[c];
    out.full = table[(total - 1) * k + c];
    std::copy(phi.begin() + static_cast<std::ptrdiff_t>(c * n),
              phi.begin() + static_cast<std::ptrdiff_t>((c + 1) * n), out.phi.begin());
  }
  return r;
}

AttributionResult owen_exact(ModelAdapter& adapter, const TokenizedUtterance& utterance,
                             const PartitionTree& tree, std::size_t cap) {
  require_nonempty(utterance);
  check_cap(utterance, cap, "owen_exact");
  require_tree_fits(tree, utterance);
  const std::size_t n = utterance.size();
  const std::size_t k = adapter.dimension().classes.size();

  std::vector<int> ordinal(tree.num_nodes(), -1);
  int internal = 0;
  for (std::size_t i = 0; i < tree.num_nodes(); ++i) {
    if (!tree.node(i).is_leaf()) ordinal[i] = internal++;
  }
  const std::uint64_t orders = std::uint64_t{1} << internal;

  std::vector<std::size_t> order;
  std::function<void(std::size_t, std::uint64_t)> walk = [&](std::size_t i,
                                                             std::uint64_t swaps) {
    const auto& node = tree.node(i);
    if (node.is_leaf()) {
      order.push_back(node.leaf);
      return;
    }
    auto first = static_cast<std::size_t>(node.left);
    auto second = static_cast<std::size_t>(node.right);
    if ((swaps >> ordinal[i]) & 1u) std::swap(first, second);
    walk(first, swaps);
    walk(second, swaps);
  };
  auto leaf_order = [&](std::uint64_t swaps) {
    order.clear();
    walk(tree.root(), swaps);
  };

  std::vector<char> needed(std::size_t{1} << n, 0);
  needed[0] = 1;
  for (std::uint64_t swaps = 0; swaps < orders; ++swaps) {
    leaf_order(swaps);
    std::uint64_t mask = 0;
    for (std::size_t leaf : order) {
      mask |= std::uint64_t{1} << leaf;
      needed[mask] = 1;
    }
  }
  std::vector<std::uint64_t> masks;
  for (std::uint64_t m = 0; m < needed.size(); ++m) {
    if (needed[m]) masks.push_back(m);
  }
  std::vector<double> table(needed.size() * k, 0.0);
  evaluate_masks(adapter, utterance, masks, 1024, table);

  AttributionResult r = make_result(utterance, adapter.dimension(), Method::kOwen);
  r.model_evals = masks.size();
  std::vector<double> phi(k * n, 0.0);
  for (std::uint64_t swaps = 0; swaps < orders; ++swaps) {
    leaf_order(swaps);
    std::uint64_t mask = 0;
    for (std::size_t leaf : order) {
      const std::uint64_t next = mask | (std::uint64_t{1} << leaf);
      for (std::size_t c = 0; c < k; ++c) {
        phi[c * n + leaf] += table[next * k + c] - table[mask * k + c];
      }
      mask = next;
    }
  }
  const std::uint64_t full = (std::uint64_t{1} << n) - 1;
  for (std::size_t c = 0; c < k; ++c) {
    auto& out = r.classes[c];
    out.base = table[c];
    out.full = table[full * k + c];
    for (std::size_t i = 0; i < n; ++i) {
      out.phi[i] = phi[c * n + i] / static_cast<double>(orders);
    }
  }
  return r;
}

AttributionResult partition_attribute(ModelAdapter& adapter,
                                      const TokenizedUtterance& utterance,
                                      const PartitionTree& tree) {
  require_nonempty(utterance);
  require_tree_fits(tree, utterance);
  const std::size_t n = utterance.size();
  const std::size_t k = adapter.dimension().classes.size();

  CoalitionValues values(adapter, utterance);
  const Coalition empty(n);
  const Coalition all = Coalition::full(n);
  // inside[d]: only D visible; outside[d]: everything but D visible.
  std::vector<Coalition> inside(tree.num_nodes(), Coalition(n));
  std::vector<Coalition> outside(tree.num_nodes(), all);
  std::vector<Coalition> wanted = {empty, all};
  for (std::size_t d = 0; d < tree.num_nodes(); ++d) {
    for (std::size_t m : tree.node(d).members) {
      inside[d].set(m);
      outside[d].reset(m);
    }
    wanted.push_back(inside[d]);
    wanted.push_back(outside[d]);
  }
  values.prefetch(wanted);

  AttributionResult r = make_result(utterance, adapter.dimension(), Method::kPartition);
  const ScoreVector& v_empty = values.get(empty);
  const ScoreVector& v_all = values.get(all);
  std::vector<double> node_value(tree.num_nodes());
  for (std::size_t c = 0; c < k; ++c) {
    const double v0 = v_empty.values[c];
    const double vn = v_all.values[c];
    for (std::size_t d = 0; d < tree.num_nodes(); ++d) {
      const double lower = values.get(inside[d]).values[c] - v0;
      const double upper = vn - values.get(outside[d]).values[c];
      node_value[d] = 0.5 * (lower + upper);
    }
    auto& phi = r.classes[c].phi;
    std::function<void(std::size_t)> settle = [&](std::size_t d) {
      const auto& node = tree.node(d);
      if (node.is_leaf()) {
        phi[node.leaf] = node_value[d];
        return;
      }
      settle(static_cast<std::size_t>(node.left));
      settle(static_cast<std::size_t>(node.right));
      double sum = 0.0;
      for (std::size_t m : node.members) sum += phi[m];
      const double share = (node_value[d] - sum) / static_cast<double>(node.members.size());
      for (std::size_t m : node.members) phi[m] += share;
    };
    settle(tree.root());
    r.classes[c].base = v0;
    r.classes[c].full = vn;
  }
  r.model_evals = values.distinct_evaluations();
  return r;
}

AttributionResult permutation_shapley(ModelAdapter& adapter,
                                      const TokenizedUtterance& utterance,
                                      std::size_t n_perms, std::uint64_t seed,
                                      std::size_t batch_size) {
  require_nonempty(utterance);
  if (n_perms == 0) throw Error(Errc::kInvalidInput, "permutation_shapley needs n_perms >= 1");
  const std::size_t n = utterance.size();
  const std::size_t k = adapter.dimension().classes.size();

  PortableRng rng(derive_stream_seed(seed, utterance.id));
  CoalitionValues values(adapter, utterance, batch_size);
  std::vector<double> phi(k * n, 0.0);
  const std::size_t per_chunk = std::max<std::size_t>(1, batch_size / (2 * (n + 1)));

  std::vector<std::vector<std::size_t>> walks;
  std::vector<Coalition> wanted;
  for (std::size_t done = 0; done < n_perms;) {
    const std::size_t chunk = std::min(per_chunk, n_perms - done);
    walks.clear();
    wanted.clear();
    for (std::size_t p = 0; p < chunk; ++p) {
      std::vector<std::size_t> perm(n);
      std::iota(perm.begin(), perm.end(), std::size_t{0});
      rng.shuffle(std::span<std::size_t>(perm));
      walks.push_back(perm);
      std::reverse(perm.begin(), perm.end());
      walks.push_back(std::move(perm));
    }
    for (const auto& w : walks) {
      Coalition s(n);
      wanted.push_back(s);
      for (std::size_t i : w) {
        s.set(i);
        wanted.push_back(s);
      }
    }
    values.prefetch(wanted);
    for (const auto& w : walks) {
      Coalition s(n);
      const ScoreVector* prev = &values.get(s);
      for (std::size_t i : w) {
        s.set(i);
        const ScoreVector* cur = &values.get(s);
        for (std::size_t c = 0; c < k; ++c) phi[c * n + i] += cur->values[c] - prev->values[c];
        prev = cur;
      }
    }
    done += chunk;
  }

  AttributionResult r = make_result(utterance, adapter.dimension(), Method::kPermutation);
  r.seed = seed;
  const double walks_total = 2.0 * static_cast<double>(n_perms);
  const ScoreVector& v_empty = values.get(Coalition(n));
  const ScoreVector& v_all = values.get(Coalition::full(n));
  for (std::size_t c = 0; c < k; ++c) {
    r.classes[c].base = v_empty.values[c];
    r.classes[c].full = v_all.values[c];
    for (std::size_t i = 0; i < n; ++i) r.classes[c].phi[i] = phi[c * n + i] / walks_total;
  }
  r.model_evals = values.distinct_evaluations();
  return r;
}

AttributionResult explain_utterance(ModelAdapter& adapter, const TokenizedUtterance& utterance,
                                    const ExplainOptions& options) {
  switch (options.method) {
    case Method::kExact:
      return exact_shapley(adapter, utterance, options.exact_cap);
    case Method::kOwen:
      require_nonempty(utterance);
      return owen_exact(adapter, utterance,
                        PartitionTree::contiguous_bisection(utterance.size()), options.owen_cap);
    case Method::kPartition:
      require_nonempty(utterance);
      return partition_attribute(adapter, utterance,
                                 PartitionTree::contiguous_bisection(utterance.size()));
    case Method::kPermutation:
      return permutation_shapley(adapter, utterance, options.n_perms, options.seed);
  }
  throw Error(Errc::kInvalidInput, "unknown method");
}

CorpusExplanation explain_corpus(ModelAdapter& adapter, const Corpus& corpus,
                                 const ExplainOptions& options, std::size_t workers) {
  CorpusExplanation out;
  std::vector<const TokenizedUtterance*> todo;
  for (const auto& u : corpus.utterances) {
    if (u.empty()) {
      out.skipped.push_back(SkippedUtterance{u.id, "empty utterance"});
      continue;
    }
    if (options.method == Method::kExact) check_cap(u, options.exact_cap, "exact_shapley");
    if (options.method == Method::kOwen) check_cap(u, options.owen_cap, "owen_exact");
    todo.push_back(&u);
  }

  std::vector<std::optional<AttributionResult>> results(todo.size());
  std::vector<std::string> failures(todo.size());
  std::atomic<std::size_t> next{0};
  std::exception_ptr fatal;
  std::mutex fatal_mu;
  auto work = [&] {
    for (;;) {
      const std::size_t i = next.fetch_add(1);
      if (i >= todo.size()) return;
      try {
        results[i] = explain_utterance(adapter, *todo[i], options);
      } catch (const AdapterError& e) {
        failures[i] = e.what();
      } catch (...) {
        std::lock_guard<std::mutex> lock(fatal_mu);
        if (!fatal) fatal = std::current_exception();
        next.store(todo.size());
      }
    }
  };
  const std::size_t threads = std::min(std::max<std::size_t>(workers, 1), todo.size());
  if (threads <= 1) {
    work();
  } else {
    std::vector<std::jthread> pool;
    for (std::size_t t = 0; t < threads; ++t) pool.emplace_back(work);
  }
  if (fatal) std::rethrow_exception(fatal);

  for (std::size_t i = 0; i < todo.size(); ++i) {
    if (results[i]) {
      out.results.push_back(std::move(*results[i]));
    } else {
      out.skipped.push_back(SkippedUtterance{todo[i]->id, "adapter failure: " + failures[i]});
    }
  }
  std::sort(out.results.begin(), out.results.end(),
            [](const auto& a, const auto& b) { return a.utterance_id < b.utterance_id; });
  std::sort(out.skipped.begin(), out.skipped.end(),
            [](const auto& a, const auto& b) { return a.id < b.id; });
  return out;
}

// ---------------------------------------------------------------------------
// JSONL

std::vector<AttributionRecord> to_records(const AttributionResult& result) {
  std::vector<AttributionRecord> out;
  for (const auto& c : result.classes) {
    out.push_back(AttributionRecord{result.utterance_id, c.class_id,
                                    std::string(method_name(result.method)), c.base, c.phi,
                                    result.tokens, result.model_evals, result.seed});
  }
  return out;
}

void write_attribution_records(std::ostream& out, std::span<const AttributionResult> results) {
  for (const auto& result : results) {
    for (const auto& rec : to_records(result)) {
      nlohmann::ordered_json j;
      j["id"] = rec.id;
      j["class"] = rec.class_id;
      j["method"] = rec.method;
      j["base"] = rec.base;
      j["phi"] = rec.phi;
      j["tokens"] = rec.tokens;
      j["model_evals"] = rec.model_evals;
      if (rec.seed) j["seed"] = *rec.seed;
      out << j.dump() << '\n';
    }
  }
}

std::vector<AttributionRecord> read_attribution_records(std::istream& in) {
  std::vector<AttributionRecord> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      const auto j = nlohmann::json::parse(line);
      AttributionRecord rec;
      rec.id = j.at("id").get<std::string>();
      rec.class_id = j.at("class").get<std::string>();
      rec.method = j.at("method").get<std::string>();
      rec.base = j.at("base").get<double>();
      rec.phi = j.at("phi").get<std::vector<double>>();
      rec.tokens = j.at("tokens").get<std::vector<std::string>>();
      rec.model_evals = j.at("model_evals").get<std::uint64_t>();
      if (j.contains("seed") && !j["seed"].is_null()) rec.seed = j["seed"].get<std::uint64_t>();
      if (rec.phi.size() != rec.tokens.size()) {
        throw Error(Errc::kInvalidInput, "phi and tokens differ in length");
      }
      out.push_back(std::move(rec));
    } catch (const nlohmann::json::exception& e) {
      throw Error(Errc::kInvalidInput,
                  "attributions line " + std::to_string(line_no) + ": " + e.what());
    } catch (const Error& e) {
      throw Error(Errc::kInvalidInput,
                  "attributions line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  return out;
}

}  // namespace tokenshap
