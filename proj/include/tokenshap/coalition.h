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

#ifndef TOKENSHAP_COALITION_H_
#define TOKENSHAP_COALITION_H_

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <unordered_map>
#include <vector>

#include "tokenshap/model.h"

namespace tokenshap {

// Fixed-size set of visible token positions.
class Coalition {
 public:
  Coalition() = default;
  explicit Coalition(std::size_t n) : n_(n), words_((n + 63) / 64, 0) {}

  static Coalition full(std::size_t n);
  static Coalition from_mask(std::uint64_t mask, std::size_t n);

  std::size_t universe() const { return n_; }
  bool test(std::size_t i) const { return (words_[i / 64] >> (i % 64)) & 1u; }
  void set(std::size_t i) { words_[i / 64] |= std::uint64_t{1} << (i % 64); }
  void reset(std::size_t i) { words_[i / 64] &= ~(std::uint64_t{1} << (i % 64)); }
  std::size_t count() const;

  std::vector<bool> to_flags() const;
  std::size_t hash() const;

  bool operator==(const Coalition&) const = default;

 private:
  std::size_t n_ = 0;
  std::vector<std::uint64_t> words_;
};

struct CoalitionHash {
  std::size_t operator()(const Coalition& c) const { return c.hash(); }
};

// Memoized model outputs over the coalitions of one utterance. Misses are
// sent to the adapter in batches; distinct_evaluations() counts them.
class CoalitionValues {
 public:
  CoalitionValues(ModelAdapter& adapter, const TokenizedUtterance& utterance,
                  std::size_t batch_size = 256);

  void prefetch(std::span<const Coalition> coalitions);
  const ScoreVector& get(const Coalition& coalition);

  std::uint64_t distinct_evaluations() const { return misses_; }
  std::size_t num_classes() const { return adapter_.dimension().classes.size(); }
  std::size_t num_tokens() const { return utterance_.tokens.size(); }

 private:
  ModelAdapter& adapter_;
  const TokenizedUtterance& utterance_;
  std::size_t batch_size_;
  std::unordered_map<Coalition, ScoreVector, CoalitionHash> cache_;
  std::uint64_t misses_ = 0;
};

}  // namespace tokenshap

#endif  // TOKENSHAP_COALITION_H_
