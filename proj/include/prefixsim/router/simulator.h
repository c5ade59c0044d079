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
#include <map>
#include <memory>
#include <string>
#include <vector>

#include "prefixsim/cluster/event_loop.h"
#include "prefixsim/cluster/workers.h"
#include "prefixsim/core/types.h"
#include "prefixsim/cost/cost_model.h"
#include "prefixsim/kv/block_pool.h"
#include "prefixsim/router/router.h"
#include "prefixsim/workload/workload.h"

namespace prefixsim::router {

struct FleetConfig {
  ServingMode mode = ServingMode::kPrefillShare;
  // Shared prefill pool size; baseline always runs one prefill worker per
  // model. 0 selects one per model.
  uint32_t prefill_workers = 0;
  uint32_t decode_workers_per_model = 1;
  uint32_t max_batch = 256;  // 0: unbounded
  uint64_t decode_capacity_blocks = 4096;
};

struct CacheConfig {
  uint32_t block_size = 16;
  uint64_t prefill_capacity_blocks = 16384;
};

struct RunConfig {
  uint32_t max_concurrent_sessions = 0;  // 0: unbounded
  uint64_t seed = 1;
  double warmup_fraction = 0.1;
  int64_t livelock_bound_us = 600'000'000;
  bool trace = false;
};

struct SimulationConfig {
  FleetConfig fleet;
  cost::CostParams cost;
  CacheConfig cache;
  RunConfig run;
};

struct RequestRecord {
  RequestId request_id = 0;
  SessionId session_id = 0;
  ModelId model_id;
  uint32_t turn = 0;
  uint32_t step = 0;
  uint64_t prompt_tokens = 0;
  uint64_t matched_tokens = 0;
  uint32_t output_len = 0;
  WorkerId prefill_worker = 0;
  WorkerId decode_worker = 0;
  SimTime issue_time;
  SimTime prefill_start;
  SimTime prefill_end;
  SimTime handoff_end;
  Duration handoff_duration;
  bool staged = false;
  bool failed = false;
  std::vector<SimTime> token_times;

  bool completed() const { return !failed && token_times.size() == output_len; }
  SimTime complete_time() const { return token_times.back(); }
};

struct NamespaceStats {
  uint64_t matched_tokens = 0;
  uint64_t lookup_tokens = 0;
  uint64_t peak_footprint_tokens = 0;
};

struct SimResult {
  SimTime end_time;
  std::vector<RequestRecord> requests;  // ordered by request_id
  std::map<kv::Namespace, NamespaceStats> namespaces;
  uint64_t matched_tokens = 0;
  uint64_t lookup_tokens = 0;
  uint64_t peak_footprint_tokens = 0;  // peak over time of the sum over namespaces
  uint64_t evictions = 0;
  uint64_t staged_handoffs = 0;
  uint64_t failed_requests = 0;
  uint64_t failed_sessions = 0;
  uint64_t sessions_completed = 0;
  uint64_t events_processed = 0;
  std::vector<uint64_t> decode_peak_resident_tokens;
  std::string trace;  // empty unless tracing was enabled

  double hit_ratio() const {
    return lookup_tokens == 0 ? 0.0
                              : static_cast<double>(matched_tokens) / lookup_tokens;
  }
};

// Distinct model ids in first-appearance order over the sessions' chains.
std::vector<ModelId> models_of(const workload::Workload& workload);

// One discrete-event run of a workload through the configured fleet.
class ServingSimulator {
 public:
  ServingSimulator(SimulationConfig config, workload::Workload workload);
  ~ServingSimulator();

  SimResult run();

 private:
  class Impl;
  std::unique_ptr<Impl> impl_;
};

// Convenience wrapper.
SimResult simulate(const SimulationConfig& config, const workload::Workload& workload);

}  // namespace prefixsim::router
