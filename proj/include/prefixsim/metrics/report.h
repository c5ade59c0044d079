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
#include <span>
#include <string>
#include <vector>

#include "prefixsim/metrics/config.h"
#include "prefixsim/router/simulator.h"

namespace prefixsim::metrics {

inline constexpr int kReportSchemaVersion = 1;

// Nearest-rank percentile: sorted[ceil(p/100 * n) - 1]. Throws on empty input.
int64_t percentile(std::vector<int64_t> values, double p);

// Output tokens generated in [warmup_fraction * end, end] per second of that
// window. 0 if the window is empty.
double throughput(std::span<const router::RequestRecord> records, SimTime end,
                  double warmup_fraction);

struct RequestMetrics {
  RequestId request_id = 0;
  SessionId session_id = 0;
  ModelId model_id;
  bool failed = false;
  int64_t ttft_us = 0;  // issue -> first generated token
  int64_t e2e_us = 0;   // issue -> last generated token
  uint32_t out_tokens = 0;
  std::vector<int64_t> itl_us;  // out_tokens - 1 gaps
};

RequestMetrics request_metrics(const router::RequestRecord& record);

struct Aggregates {
  uint64_t requests = 0;
  uint64_t completed_requests = 0;
  uint64_t failed_requests = 0;
  uint64_t sessions_completed = 0;
  uint64_t generated_tokens = 0;
  int64_t end_time_us = 0;
  int64_t p95_e2e_us = 0;
  double mean_ttft_us = 0;
  int64_t p95_ttft_us = 0;
  double mean_itl_us = 0;
  double throughput_tok_s = 0;
  double prefix_hit_ratio = 0;
  std::map<std::string, double> hit_ratio_by_namespace;
  uint64_t peak_footprint_tokens = 0;
  std::map<std::string, uint64_t> peak_footprint_by_namespace;
  uint64_t staged_handoffs = 0;
  uint64_t evictions = 0;
};

struct MetricsReport {
  RunSpec spec;
  std::vector<RequestMetrics> requests;
  Aggregates aggregates;
};

// Aggregates everything from the per-request records and pool statistics.
MetricsReport build_report(const RunSpec& spec, const router::SimResult& result);

// Structured report: config echo, metric definitions, aggregates.
std::string report_json(const MetricsReport& report);
// request_id,session_id,model_id,ttft_us,e2e_us,out_tokens
std::string requests_csv(const MetricsReport& report);

}  // namespace prefixsim::metrics
