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

#ifndef TOKENSHAP_BRIDGE_H_
#define TOKENSHAP_BRIDGE_H_

#include <chrono>
#include <memory>
#include <optional>
#include <string>
#include <sys/types.h>

#include "json.hpp"
#include "tokenshap/model.h"

namespace tokenshap {

struct BridgeOptions {
  // Each request (handshake included) must be answered within this window.
  std::chrono::milliseconds timeout{5000};
  MaskStyle mask_style = MaskStyle::kSubstitute;
  std::string dimension_name = "default";
  // When set, the worker's advertised classes must match exactly.
  std::optional<std::vector<std::string>> expected_classes;
};

// Model adapter backed by an external worker process speaking line-delimited
// JSON over stdin/stdout:
//   -> {"op":"handshake"}
//   <- {"op":"handshake","model":str,"classes":[str],"output_mode":str}
//   -> {"op":"predict","id":int,"texts":[str]}
//   <- {"op":"predict","id":int,"probs":[[float]]} | {"op":"error",...}
//   -> {"op":"shutdown"}
// Requests are strictly serialized. A timeout, EOF, or malformed reply kills
// the worker; every later call fails with AdapterError.
class BridgeAdapter final : public ModelAdapter {
 public:
  // Runs `command` through /bin/sh -c and performs the handshake.
  static std::unique_ptr<BridgeAdapter> launch(const std::string& command,
                                               const BridgeOptions& options = {});
  ~BridgeAdapter() override;

  bool serialized() const override { return true; }
  bool alive() const { return pid_ > 0; }

 protected:
  std::vector<ScoreVector> do_predict(std::span<const MaskedInput> inputs) override;

 private:
  BridgeAdapter(std::string name, Dimension dim, OutputMode mode, pid_t pid, int fd,
                std::string pending, BridgeOptions options);

  void kill_worker();

  pid_t pid_;
  int fd_;
  std::string buffer_;
  BridgeOptions options_;
  std::int64_t next_id_ = 1;
};

namespace bridge_io {

// Low-level helpers shared with tests. Both throw Error(kAdapterFailure) on
// timeout or a closed peer.
void send_line(int fd, const std::string& line,
               std::chrono::steady_clock::time_point deadline);
std::string read_line(int fd, std::string& buffer,
                      std::chrono::steady_clock::time_point deadline);

}  // namespace bridge_io

}  // namespace tokenshap

#endif  // TOKENSHAP_BRIDGE_H_
