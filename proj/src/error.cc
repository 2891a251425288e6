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

#include "tokenshap/error.h"

namespace tokenshap {

std::string_view errc_name(Errc code) {
  switch (code) {
    case Errc::kEmptyUtterance: return "empty_utterance";
    case Errc::kInvalidUtf8: return "invalid_utf8";
    case Errc::kDanglingReference: return "dangling_reference";
    case Errc::kInvalidInput: return "invalid_input";
    case Errc::kUnknownClass: return "unknown_class";
    case Errc::kUnknownModel: return "unknown_model";
    case Errc::kNonFiniteWeight: return "non_finite_weight";
    case Errc::kAdapterFailure: return "adapter_failure";
    case Errc::kCapExceeded: return "cap_exceeded";
    case Errc::kMixedDimension: return "mixed_dimension";
    case Errc::kMalformedHeader: return "malformed_header";
    case Errc::kDimensionMismatch: return "dimension_mismatch";
    case Errc::kMissingWord: return "missing_word";
    case Errc::kZeroVector: return "zero_vector";
    case Errc::kIo: return "io";
  }
  return "unknown";
}

}  // namespace tokenshap
