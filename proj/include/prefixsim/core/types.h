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

#include <compare>
#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace prefixsim {

// Virtual time in integer microseconds since simulation start.
class SimTime {
 public:
  constexpr SimTime() = default;
  constexpr explicit SimTime(int64_t us) : us_(us) {}

  static constexpr SimTime zero() { return SimTime(0); }
  static constexpr SimTime max() {
    return SimTime(std::numeric_limits<int64_t>::max());
  }

  constexpr int64_t us() const { return us_; }
  constexpr double seconds() const { return static_cast<double>(us_) / 1e6; }

  constexpr SimTime operator+(SimTime d) const { return SimTime(us_ + d.us_); }
  constexpr SimTime operator-(SimTime d) const { return SimTime(us_ - d.us_); }
  constexpr SimTime& operator+=(SimTime d) {
    us_ += d.us_;
    return *this;
  }
  constexpr auto operator<=>(const SimTime&) const = default;

 private:
  int64_t us_ = 0;
};

// Durations share the representation.
using Duration = SimTime;

// Rounds a non-negative microsecond quantity half-up to an integer.
int64_t round_half_up(double us);

using TokenId = uint64_t;
using ModelId = std::string;
using SessionId = uint64_t;
using RequestId = uint64_t;
using WorkerId = uint32_t;

// Ordered token-id sequence. Carries prefix identity only.
class TokenSeq {
 public:
  TokenSeq() = default;
  explicit TokenSeq(std::vector<TokenId> tokens) : tokens_(std::move(tokens)) {}
  TokenSeq(std::initializer_list<TokenId> tokens) : tokens_(tokens) {}

  size_t size() const { return tokens_.size(); }
  bool empty() const { return tokens_.empty(); }
  TokenId operator[](size_t i) const { return tokens_[i]; }
  std::span<const TokenId> view() const { return tokens_; }
  std::span<const TokenId> slice(size_t offset, size_t len) const {
    return std::span<const TokenId>(tokens_).subspan(offset, len);
  }
  const std::vector<TokenId>& tokens() const { return tokens_; }

  void append(const TokenSeq& other) {
    tokens_.insert(tokens_.end(), other.tokens_.begin(), other.tokens_.end());
  }
  TokenSeq prefix(size_t len) const {
    return TokenSeq(std::vector<TokenId>(tokens_.begin(), tokens_.begin() + len));
  }

  bool operator==(const TokenSeq&) const = default;

 private:
  std::vector<TokenId> tokens_;
};

// True iff `a` equals the first |a| elements of `b`.
bool is_prefix_of(const TokenSeq& a, const TokenSeq& b);

struct AgentProfile {
  ModelId model_id;
  uint32_t input_extension_len = 0;
  uint32_t output_len = 1;

  void validate() const;
  bool operator==(const AgentProfile&) const = default;
};

// How the agents of one turn see the session context.
//   kChain:  agent i reads [context; ext_i] and its output is appended before
//            agent i+1 runs.
//   kFanOut: every agent of a turn reads [turn-start context; ext_i]; the
//            branches are committed to the context in agent order once the
//            turn is over.
enum class SessionShape { kChain, kFanOut };

struct SessionSpec {
  SessionId session_id = 0;
  SimTime arrival_time;
  uint32_t initial_prompt_len = 0;
  uint32_t turns = 1;
  std::vector<AgentProfile> agent_chain;
  SessionShape shape = SessionShape::kChain;

  void validate() const;
  size_t steps() const { return static_cast<size_t>(turns) * agent_chain.size(); }
  // initial_prompt_len + turns * sum(ext + out).
  uint64_t final_context_len() const;
  bool operator==(const SessionSpec&) const = default;
};

enum class SessionStatus { kWaitingAdmission, kActive, kDone };

struct SessionState {
  SessionSpec spec;
  TokenSeq context;
  uint32_t turn_index = 0;
  uint32_t step_index = 0;
  std::optional<WorkerId> pinned_prefill_worker;
  SessionStatus status = SessionStatus::kWaitingAdmission;
  bool failed = false;

  const AgentProfile& current_agent() const { return spec.agent_chain[step_index]; }
};

// Appends `new_tokens` to an active session's context.
void extend_context(SessionState& s, const TokenSeq& new_tokens);

struct Request {
  RequestId request_id = 0;
  SessionId session_id = 0;
  ModelId model_id;
  TokenSeq context_snapshot;
  uint32_t output_len = 1;
  SimTime issue_time;
  uint32_t turn = 0;
  uint32_t step = 0;
};

enum class EventKind {
  kSessionArrival,
  kPrefillStart,
  kPrefillComplete,
  kHandoffComplete,
  kDecodeStep,
  kRequestComplete,
  kSessionComplete,
};

const char* to_string(EventKind kind);

struct SimEvent {
  SimTime time;
  uint64_t seq = 0;
  EventKind kind = EventKind::kSessionArrival;
  SessionId session = 0;
  RequestId request = 0;
  WorkerId worker = 0;

  // Strict total order on (time, seq).
  bool operator<(const SimEvent& o) const {
    return time != o.time ? time < o.time : seq < o.seq;
  }
};

struct CapacityExhausted : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace prefixsim
