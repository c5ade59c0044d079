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

#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "prefixsim/core/types.h"

namespace prefixsim::workload {

// SplitMix64. Portable: every implementation that follows the published
// constants reproduces the same stream.
class SplitMix64 {
 public:
  explicit SplitMix64(uint64_t seed) : state_(seed) {}

  uint64_t next();
  // Uniform in (0, 1], 53-bit resolution.
  double next_open_unit();

 private:
  uint64_t state_;
};

// Stateless SplitMix64 finalizer.
uint64_t mix64(uint64_t x);

enum class Pattern { kReact, kReflexion, kCustom };

const char* to_string(Pattern p);
Pattern pattern_from_string(const std::string& s);

struct WorkloadConfig {
  Pattern pattern = Pattern::kReact;
  double arrival_rate = 4.0;  // sessions / s
  double duration_s = 100.0;
  uint64_t seed = 1;
  uint32_t initial_prompt_len = 512;
  uint32_t turns = 3;
  SessionShape shape = SessionShape::kChain;
  std::vector<AgentProfile> agents;

  // Reference shapes: shared-prefix dominant, reflexion heavier per step.
  static WorkloadConfig react();
  static WorkloadConfig reflexion();

  void validate() const;
};

struct Workload {
  uint64_t token_seed = 0;
  std::vector<SessionSpec> sessions;

  size_t request_count() const;
  bool operator==(const Workload&) const = default;
};

// Poisson session arrivals over [0, duration]; every session follows the
// configured agent chain.
Workload generate(const WorkloadConfig& config);

enum class TokenPurpose : uint64_t { kPrompt = 0, kExtension = 1, kOutput = 2 };

// Deterministic synthetic tokens. The session id occupies the high 32 bits of
// every token so that different sessions never share a prefix.
TokenSeq synth_tokens(uint64_t token_seed, SessionId session_id, TokenPurpose purpose,
                      uint32_t turn, uint32_t agent, uint32_t length);

// Deterministic JSON export / import so that separate runs can consume one
// byte-identical trace.
std::string export_workload(const Workload& workload);
Workload import_workload(const std::string& text);

}  // namespace prefixsim::workload
