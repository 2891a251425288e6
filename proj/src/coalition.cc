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

#include "tokenshap/coalition.h"

#include <bit>

namespace tokenshap {

Coalition Coalition::full(std::size_t n) {
  Coalition c(n);
  for (std::size_t i = 0; i < n; ++i) c.set(i);
  return c;
}

Coalition Coalition::from_mask(std::uint64_t mask, std::size_t n) {
  Coalition c(n);
  if (!c.words_.empty()) {
    c.words_[0] = n >= 64 ? mask : mask & ((std::uint64_t{1} << n) - 1);
  }
  return c;
}

std::size_t Coalition::count() const {
  std::size_t total = 0;
  for (std::uint64_t w : words_) total += static_cast<std::size_t>(std::popcount(w));
  return total;
}

std::vector<bool> Coalition::to_flags() const {
  std::vector<bool> flags(n_);
  for (std::size_t i = 0; i < n_; ++i) flags[i] = test(i);
  return flags;
}

std::size_t Coalition::hash() const {
  // FNV-1a over the words.
  std::uint64_t h = 1469598103934665603ull ^ n_;
  for (std::uint64_t w : words_) {
    h ^= w;
    h *= 1099511628211ull;
    h ^= h >> 29;
  }
  return static_cast<std::size_t>(h);
}

CoalitionValues::CoalitionValues(ModelAdapter& adapter, const TokenizedUtterance& utterance,
                                 std::size_t batch_size)
    : adapter_(adapter), utterance_(utterance), batch_size_(batch_size == 0 ? 1 : batch_size) {}

void CoalitionValues::prefetch(std::span<const Coalition> coalitions) {
  std::vector<Coalition> pending;
  std::unordered_map<Coalition, bool, CoalitionHash> queued;
  auto flush = [&] {
    if (pending.empty()) return;
    std::vector<MaskedInput> inputs;
    inputs.reserve(pending.size());
    for (const Coalition& c : pending) inputs.push_back(MaskedInput{&utterance_, c.to_flags()});
    auto scores = adapter_.predict_batch(inputs);
    for (std::size_t i = 0; i < pending.size(); ++i) {
      cache_.emplace(std::move(pending[i]), std::move(scores[i]));
    }
    misses_ += pending.size();
    pending.clear();
    queued.clear();
  };
  for (const Coalition& c : coalitions) {
    if (cache_.count(c) || queued.count(c)) continue;
    queued.emplace(c, true);
    pending.push_back(c);
    if (pending.size() >= batch_size_) flush();
  }
  flush();
}

const ScoreVector& CoalitionValues::get(const Coalition& coalition) {
  auto it = cache_.find(coalition);
  if (it != cache_.end()) return it->second;
  prefetch(std::span<const Coalition>(&coalition, 1));
  return cache_.at(coalition);
}

}  // namespace tokenshap
