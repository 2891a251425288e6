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

#ifndef TOKENSHAP_ATTRIBUTION_H_
#define TOKENSHAP_ATTRIBUTION_H_

#include <cstddef>
#include <cstdint>
#include <istream>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "tokenshap/corpus.h"
#include "tokenshap/model.h"

namespace tokenshap {

enum class Method { kExact, kOwen, kPartition, kPermutation };

std::string_view method_name(Method method);
Method parse_method(std::string_view name);

// Binary hierarchy over token positions 0..n-1.
class PartitionTree {
 public:
  struct Node {
    int left = -1;
    int right = -1;
    std::size_t leaf = 0;              // token position, leaves only
    std::vector<std::size_t> members;  // positions owned, ascending

    bool is_leaf() const { return left < 0; }
  };

  // Splits [a, b) at ceil((a + b) / 2) so the left half is never smaller.
  static PartitionTree contiguous_bisection(std::size_t n);

  // Parses nested pairs such as "((0,1),2)". Throws kInvalidInput unless the
  // leaves are exactly 0..n-1 and every group has two children.
  static PartitionTree parse(std::string_view text);

  std::size_t num_leaves() const { return n_; }
  std::size_t num_internal() const { return nodes_.size() - n_; }
  std::size_t root() const { return root_; }
  const Node& node(std::size_t index) const { return nodes_[index]; }
  std::size_t num_nodes() const { return nodes_.size(); }

  bool contiguous() const;
  std::string to_string() const;

 private:
  std::size_t n_ = 0;
  std::size_t root_ = 0;
  std::vector<Node> nodes_;

  std::size_t add_leaf(std::size_t position);
  std::size_t add_internal(std::size_t left, std::size_t right);
  void validate() const;
};

struct ClassAttribution {
  std::string class_id;
  double base = 0.0;  // v(empty)
  double full = 0.0;  // v(all tokens)
  std::vector<double> phi;
};

// Attributions of one utterance for every class of the model's dimension.
struct AttributionResult {
  std::string utterance_id;
  std::vector<std::string> tokens;
  Method method = Method::kExact;
  std::uint64_t model_evals = 0;
  std::optional<std::uint64_t> seed;
  std::vector<ClassAttribution> classes;

  // Throws kUnknownClass.
  const ClassAttribution& for_class(std::string_view class_id) const;
  // Argmax of v(all tokens); the default explained target.
  const std::string& predicted_class() const;
};

// Exact Shapley values by enumerating all 2^n coalitions.
// Throws kCapExceeded when n > cap.
AttributionResult exact_shapley(ModelAdapter& adapter, const TokenizedUtterance& utterance,
                                std::size_t cap = 20, std::size_t batch_size = 1024);

// Exact Owen values: the mean marginal contribution over every leaf order
// obtained by independently swapping the children of each internal node.
AttributionResult owen_exact(ModelAdapter& adapter, const TokenizedUtterance& utterance,
                             const PartitionTree& tree, std::size_t cap = 12);

// Recursive hierarchical estimate. Each node D is valued with two contexts,
// everything outside D hidden and everything outside D shown:
//   phi(D) = ((v(D) - v(0)) + (v(N) - v(N \ D))) / 2.
// After a node's children are valued, the gap between phi(D) and the sum of
// its leaves is spread equally over those leaves, so the root enforces
// sum(phi) = v(N) - v(0). Uses at most 4n distinct evaluations.
AttributionResult partition_attribute(ModelAdapter& adapter,
                                      const TokenizedUtterance& utterance,
                                      const PartitionTree& tree);

// Antithetic permutation sampling: each sampled order is walked forwards and
// backwards. The generator is PortableRng seeded with
// derive_stream_seed(seed, utterance.id).
AttributionResult permutation_shapley(ModelAdapter& adapter,
                                      const TokenizedUtterance& utterance,
                                      std::size_t n_perms, std::uint64_t seed,
                                      std::size_t batch_size = 256);

struct ExplainOptions {
  Method method = Method::kPartition;
  std::size_t exact_cap = 20;
  std::size_t owen_cap = 12;
  std::size_t n_perms = 200;
  std::uint64_t seed = 0;
};

// Dispatches on options.method; partition and owen use contiguous bisection.
AttributionResult explain_utterance(ModelAdapter& adapter, const TokenizedUtterance& utterance,
                                    const ExplainOptions& options);

struct SkippedUtterance {
  std::string id;
  std::string reason;
};

struct CorpusExplanation {
  std::vector<AttributionResult> results;  // sorted by utterance id
  std::vector<SkippedUtterance> skipped;   // sorted by utterance id
};

// Explains every non-empty utterance. Adapter failures and empty utterances
// are skipped and listed; a cap violation anywhere aborts before any model
// call.
CorpusExplanation explain_corpus(ModelAdapter& adapter, const Corpus& corpus,
                                 const ExplainOptions& options, std::size_t workers = 1);

// One JSONL line per (utterance, class).
struct AttributionRecord {
  std::string id;
  std::string class_id;
  std::string method;
  double base = 0.0;
  std::vector<double> phi;
  std::vector<std::string> tokens;
  std::uint64_t model_evals = 0;
  std::optional<std::uint64_t> seed;
};

std::vector<AttributionRecord> to_records(const AttributionResult& result);
void write_attribution_records(std::ostream& out, std::span<const AttributionResult> results);
std::vector<AttributionRecord> read_attribution_records(std::istream& in);

}  // namespace tokenshap

#endif  // TOKENSHAP_ATTRIBUTION_H_
