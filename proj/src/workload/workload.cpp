/* Copyright 2026 The prefixsim Authors. All Rights Reserved.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
==============================================================================*/

#include "prefixsim/workload/workload.h"

#include <cmath>
#include <json.hpp>
#include <limits>

namespace prefixsim::workload {

using nlohmann::json;

uint64_t mix64(uint64_t z) {
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

uint64_t SplitMix64::next() {
  state_ += 0x9e3779b97f4a7c15ULL;
  return mix64(state_);
}

double SplitMix64::next_open_unit() {
  // (k + 1) / 2^53 for k in [0, 2^53).
  return static_cast<double>((next() >> 11) + 1) * 0x1.0p-53;
}

const char* to_string(Pattern p) {
  switch (p) {
    case Pattern::kReact:
      return "react";
    case Pattern::kReflexion:
      return "reflexion";
    case Pattern::kCustom:
      return "custom";
  }
  return "custom";
}

Pattern pattern_from_string(const std::string& s) {
  if (s == "react") return Pattern::kReact;
  if (s == "reflexion") return Pattern::kReflexion;
  if (s == "custom") return Pattern::kCustom;
  throw ConfigError("workload.pattern: unknown pattern '" + s + "'");
}

namespace {

std::vector<AgentProfile> four_agents(uint32_t ext, uint32_t out) {
  std::vector<AgentProfile> agents;
  for (const char* m : {"A", "B", "C", "D"}) {
    agents.push_back(AgentProfile{m, ext, out});
  }
  return agents;
}

}  // namespace

WorkloadConfig WorkloadConfig::react() {
  WorkloadConfig c;
  c.pattern = Pattern::kReact;
  c.initial_prompt_len = 512;
  c.turns = 3;
  c.agents = four_agents(64, 128);
  return c;
}

WorkloadConfig WorkloadConfig::reflexion() {
  WorkloadConfig c;
  c.pattern = Pattern::kReflexion;
  c.initial_prompt_len = 512;
  c.turns = 3;
  c.agents = four_agents(96, 256);
  return c;
}

void WorkloadConfig::validate() const {
  if (!(arrival_rate > 0)) throw ConfigError("workload.arrival_rate: must be > 0");
  if (!(duration_s > 0)) throw ConfigError("workload.duration_s: must be > 0");
  if (turns < 1) throw ConfigError("workload.turns: must be >= 1");
  if (agents.empty()) throw ConfigError("workload.agents: must be non-empty");
  for (const auto& a : agents) a.validate();
}

size_t Workload::request_count() const {
  size_t n = 0;
  for (const auto& s : sessions) n += s.steps();
  return n;
}

Workload generate(const WorkloadConfig& config) {
  config.validate();
  Workload w;
  w.token_seed = mix64(config.seed ^ 0x746f6b656e73ULL);
  SplitMix64 rng(config.seed);
  const int64_t horizon_us = round_half_up(config.duration_s * 1e6);
  int64_t t_us = 0;
  SessionId next_id = 0;
  for (;;) {
    const double gap_s = -std::log(rng.next_open_unit()) / config.arrival_rate;
    t_us += round_half_up(gap_s * 1e6);
    if (t_us > horizon_us) {
      break;
    }
    if (next_id > std::numeric_limits<uint32_t>::max()) {
      throw ConfigError("workload: session count exceeds 2^32");
    }
    SessionSpec s;
    s.session_id = next_id++;
    s.arrival_time = SimTime(t_us);
    s.initial_prompt_len = config.initial_prompt_len;
    s.turns = config.turns;
    s.agent_chain = config.agents;
    s.shape = config.shape;
    w.sessions.push_back(std::move(s));
  }
  return w;
}

TokenSeq synth_tokens(uint64_t token_seed, SessionId session_id, TokenPurpose purpose,
                      uint32_t turn, uint32_t agent, uint32_t length) {
  const uint64_t stream = mix64(token_seed ^ mix64((static_cast<uint64_t>(purpose) << 56) ^
                                                   (static_cast<uint64_t>(turn) << 28) ^
                                                   static_cast<uint64_t>(agent)));
  std::vector<TokenId> tokens(length);
  for (uint32_t i = 0; i < length; ++i) {
    const uint64_t low = mix64(stream + i) & 0xFFFFFFFFULL;
    tokens[i] = (static_cast<uint64_t>(session_id) << 32) | low;
  }
  return TokenSeq(std::move(tokens));
}

std::string export_workload(const Workload& workload) {
  json doc;
  doc["schema_version"] = 1;
  doc["token_seed"] = workload.token_seed;
  json sessions = json::array();
  for (const auto& s : workload.sessions) {
    json agents = json::array();
    for (const auto& a : s.agent_chain) {
      agents.push_back({{"model", a.model_id},
                        {"input_extension_len", a.input_extension_len},
                        {"output_len", a.output_len}});
    }
    sessions.push_back({{"session_id", s.session_id},
                        {"arrival_us", s.arrival_time.us()},
                        {"initial_prompt_len", s.initial_prompt_len},
                        {"turns", s.turns},
                        {"shape", s.shape == SessionShape::kChain ? "chain" : "fanout"},
                        {"agents", agents}});
  }
  doc["sessions"] = sessions;
  return doc.dump(1) + "\n";
}

Workload import_workload(const std::string& text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("workload file: ") + e.what());
  }
  try {
    if (doc.at("schema_version").get<int>() != 1) {
      throw ConfigError("workload file: unsupported schema_version");
    }
    Workload w;
    w.token_seed = doc.at("token_seed").get<uint64_t>();
    for (const auto& js : doc.at("sessions")) {
      SessionSpec s;
      s.session_id = js.at("session_id").get<uint64_t>();
      s.arrival_time = SimTime(js.at("arrival_us").get<int64_t>());
      s.initial_prompt_len = js.at("initial_prompt_len").get<uint32_t>();
      s.turns = js.at("turns").get<uint32_t>();
      const auto shape = js.at("shape").get<std::string>();
      if (shape != "chain" && shape != "fanout") {
        throw ConfigError("workload file: unknown shape '" + shape + "'");
      }
      s.shape = shape == "chain" ? SessionShape::kChain : SessionShape::kFanOut;
      for (const auto& ja : js.at("agents")) {
        s.agent_chain.push_back(AgentProfile{ja.at("model").get<std::string>(),
                                             ja.at("input_extension_len").get<uint32_t>(),
                                             ja.at("output_len").get<uint32_t>()});
      }
      s.validate();
      w.sessions.push_back(std::move(s));
    }
    return w;
  } catch (const json::exception& e) {
    throw ConfigError(std::string("workload file: ") + e.what());
  }
}

}  // namespace prefixsim::workload
