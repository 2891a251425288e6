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

// Stand-in bridge worker for tests. Serves a keyword model read from a
// builtin spec over the NDJSON stdio protocol, with optional injected faults:
//   bridge_stub <spec.json> [--fault garbage|error|die|hang|wrong-id|short-row --after N]

#include <unistd.h>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "json.hpp"

namespace {

struct Model {
  std::string kind;
  std::vector<std::string> classes;
  std::vector<double> base;
  std::map<std::string, std::map<std::string, double>> weights;

  std::vector<double> predict(const std::string& text) const {
    std::vector<double> s = base;
    std::istringstream words(text);
    std::string w;
    while (words >> w) {
      for (std::size_t c = 0; c < classes.size(); ++c) {
        auto cls = weights.find(classes[c]);
        if (cls == weights.end()) continue;
        auto it = cls->second.find(w);
        if (it != cls->second.end()) s[c] += it->second;
      }
    }
    if (kind != "keyword-softmax") return s;
    const double m = *std::max_element(s.begin(), s.end());
    double z = 0.0;
    for (double& x : s) z += (x = std::exp(x - m));
    for (double& x : s) x /= z;
    return s;
  }
};

void reply(const nlohmann::json& j) {
  std::cout << j.dump() << '\n' << std::flush;
}

}  // namespace

int main(int argc, char** argv) {
  if (argc < 2) {
    std::cerr << "usage: bridge_stub <spec.json> [--fault MODE --after N]\n";
    return 2;
  }
  std::string fault;
  long after = 0;
  for (int i = 2; i + 1 < argc; i += 2) {
    const std::string flag = argv[i];
    if (flag == "--fault") fault = argv[i + 1];
    if (flag == "--after") after = std::stol(argv[i + 1]);
  }

  std::ifstream in(argv[1]);
  const auto spec = nlohmann::json::parse(in);
  Model model;
  model.kind = spec.at("kind").get<std::string>();
  model.classes = spec.at("classes").get<std::vector<std::string>>();
  model.base = spec.value("base", std::vector<double>(model.classes.size(), 0.0));
  if (spec.contains("weights")) {
    model.weights = spec["weights"].get<std::map<std::string, std::map<std::string, double>>>();
  }
  const std::string mode = model.kind == "keyword-softmax" ? "probability" : "score";

  long served = 0;
  std::string line;
  while (std::getline(std::cin, line)) {
    nlohmann::json req;
    try {
      req = nlohmann::json::parse(line);
    } catch (const nlohmann::json::exception&) {
      reply({{"op", "error"}, {"message", "malformed request"}});
      continue;
    }
    const std::string op = req.value("op", "");
    if (op == "handshake") {
      reply({{"op", "handshake"}, {"model", "stub-" + model.kind}, {"classes", model.classes},
             {"output_mode", mode}});
    } else if (op == "shutdown") {
      return 0;
    } else if (op == "predict") {
      const auto id = req.at("id");
      if (!fault.empty() && served++ >= after) {
        if (fault == "garbage") {
          std::cout << "{not json\n" << std::flush;
          continue;
        }
        if (fault == "error") {
          reply({{"op", "error"}, {"id", id}, {"message", "model failure"}});
          served = 0;
          fault.clear();
          continue;
        }
        if (fault == "die") return 1;
        if (fault == "hang") {
          for (;;) std::this_thread::sleep_for(std::chrono::seconds(60));
        }
        if (fault == "wrong-id") {
          reply({{"op", "predict"}, {"id", id.get<long>() + 100}, {"probs", nlohmann::json::array()}});
          continue;
        }
        if (fault == "short-row") {
          reply({{"op", "predict"}, {"id", id}, {"probs", {{0.5}}}});
          continue;
        }
      }
      nlohmann::json rows = nlohmann::json::array();
      for (const auto& t : req.at("texts")) rows.push_back(model.predict(t.get<std::string>()));
      reply({{"op", "predict"}, {"id", id}, {"probs", rows}});
    } else {
      reply({{"op", "error"}, {"message", "unknown op"}});
    }
  }
  return 0;
}
