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

#ifndef TOKENSHAP_ERROR_H_
#define TOKENSHAP_ERROR_H_

#include <cstddef>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace tokenshap {

enum class Errc {
  kEmptyUtterance,
  kInvalidUtf8,
  kDanglingReference,
  kInvalidInput,
  kUnknownClass,
  kUnknownModel,
  kNonFiniteWeight,
  kAdapterFailure,
  kCapExceeded,
  kMixedDimension,
  kMalformedHeader,
  kDimensionMismatch,
  kMissingWord,
  kZeroVector,
  kIo,
};

// Stable machine-readable name, used in CLI error records.
std::string_view errc_name(Errc code);

class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& message)
      : std::runtime_error(message), code_(code) {}

  Errc code() const { return code_; }

 private:
  Errc code_;
};

// Raised by a ModelAdapter when a batch could not be scored.
class AdapterError : public Error {
 public:
  AdapterError(const std::string& message, std::vector<std::size_t> indices)
      : Error(Errc::kAdapterFailure, message), indices_(std::move(indices)) {}

  // Positions within the failed batch.
  const std::vector<std::size_t>& failed_indices() const { return indices_; }

 private:
  std::vector<std::size_t> indices_;
};

}  // namespace tokenshap

#endif  // TOKENSHAP_ERROR_H_
