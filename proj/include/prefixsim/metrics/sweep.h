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
#include <optional>
#include <string>
#include <vector>

#include "prefixsim/metrics/config.h"
#include "prefixsim/metrics/report.h"
#include "prefixsim/router/router.h"

namespace prefixsim::metrics {

enum class SweepAxis { kArrivalRate, kMaxConcurrentSessions };

const char* to_string(SweepAxis axis);
SweepAxis axis_from_string(const std::string& s);

struct SweepSpec {
  SweepAxis axis = SweepAxis::kArrivalRate;
  std::vector<double> values;
  std::vector<router::ServingMode> modes;
  // Arrival-rate sweeps only: per cell, pick the cap from `cap_grid` that
  // maximizes throughput.
  bool auto_concurrency = false;
  std::vector<uint32_t> cap_grid;
  unsigned jobs = 1;
};

struct SweepCell {
  double value = 0;
  router::ServingMode mode = router::ServingMode::kBaseline;
  uint64_t seed = 0;
  uint32_t max_concurrent_sessions = 0;  // chosen cap under auto-concurrency
  MetricsReport report;
};

// Per-cell seed: a function of the master seed and the axis value only, so
// both modes of a cell consume the same workload.
uint64_t cell_seed(uint64_t master_seed, double value);

// Runs one configuration end to end.
MetricsReport run_once(const RunSpec& spec);
// Same, but against a pre-generated workload.
MetricsReport run_once(const RunSpec& spec, const workload::Workload& workload);

// Runs the (value x mode) grid. Rows come back ordered by (value position,
// mode position); cells are independent so permuting `values` permutes rows.
std::vector<SweepCell> sweep(const RunSpec& base, const SweepSpec& sweep_spec);

// One row per cell.
std::string sweep_table_csv(SweepAxis axis, const std::vector<SweepCell>& cells);

// Directory name for a cell's report files.
std::string cell_dir_name(SweepAxis axis, const SweepCell& cell);

}  // namespace prefixsim::metrics
