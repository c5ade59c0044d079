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

#include "prefixsim/core/types.h"

#include <algorithm>
#include <cmath>

namespace prefixsim {

int64_t round_half_up(double us) {
  return static_cast<int64_t>(std::floor(us + 0.5));
}

bool is_prefix_of(const TokenSeq& a, const TokenSeq& b) {
  if (a.size() > b.size()) {
    return false;
  }
  return std::equal(a.tokens().begin(), a.tokens().end(), b.tokens().begin());
}

void AgentProfile::validate() const {
  if (model_id.empty()) {
    throw ConfigError("agent model_id must be non-empty");
  }
  if (output_len < 1) {
    throw ConfigError("agent " + model_id + ": output_len must be >= 1");
  }
}

void SessionSpec::validate() const {
  if (turns < 1) {
    throw ConfigError("session turns must be >= 1");
  }
  if (agent_chain.empty()) {
    throw ConfigError("session agent_chain must be non-empty");
  }
  for (const auto& agent : agent_chain) {
    agent.validate();
  }
}

uint64_t SessionSpec::final_context_len() const {
  uint64_t per_turn = 0;
  for (const auto& agent : agent_chain) {
    per_turn += agent.input_extension_len + agent.output_len;
  }
  return initial_prompt_len + static_cast<uint64_t>(turns) * per_turn;
}

void extend_context(SessionState& s, const TokenSeq& new_tokens) {
  if (s.status != SessionStatus::kActive) {
    throw std::logic_error("extend_context on a session that is not active");
  }
  s.context.append(new_tokens);
}

const char* to_string(EventKind kind) {
  switch (kind) {
    case EventKind::kSessionArrival:
      return "SessionArrival";
    case EventKind::kPrefillStart:
      return "PrefillStart";
    case EventKind::kPrefillComplete:
      return "PrefillComplete";
    case EventKind::kHandoffComplete:
      return "HandoffComplete";
    case EventKind::kDecodeStep:
      return "DecodeStep";
    case EventKind::kRequestComplete:
      return "RequestComplete";
    case EventKind::kSessionComplete:
      return "SessionComplete";
  }
  return "Unknown";
}

}  // namespace prefixsim
