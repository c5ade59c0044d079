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

#include "prefixsim/metrics/sweep.h"

#include <atomic>
#include <bit>
#include <charconv>
#include <exception>
#include <mutex>
#include <thread>

#include "prefixsim/workload/workload.h"

namespace prefixsim::metrics {

namespace {

std::string format_value(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

RunSpec apply_axis(RunSpec spec, SweepAxis axis, double value) {
  if (axis == SweepAxis::kArrivalRate) {
    spec.workload.arrival_rate = value;
  } else {
    if (value < 0 || value != static_cast<double>(static_cast<uint32_t>(value))) {
      throw ConfigError("sweep: max_concurrent_sessions values must be non-negative integers");
    }
    spec.sim.run.max_concurrent_sessions = static_cast<uint32_t>(value);
  }
  return spec;
}

// Runs fn(i) for i in [0, n) on up to `jobs` threads; rethrows the first
// failure.
template <typename Fn>
void parallel_for(size_t n, unsigned jobs, Fn fn) {
  if (jobs <= 1 || n <= 1) {
    for (size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<size_t> next{0};
  std::exception_ptr error;
  std::mutex error_mu;
  std::vector<std::thread> threads;
  for (unsigned t = 0; t < std::min<size_t>(jobs, n); ++t) {
    threads.emplace_back([&] {
      for (size_t i = next++; i < n; i = next++) {
        try {
          fn(i);
        } catch (...) {
          std::lock_guard<std::mutex> lock(error_mu);
          if (!error) error = std::current_exception();
        }
      }
    });
  }
  for (auto& th : threads) th.join();
  if (error) std::rethrow_exception(error);
}

}  // namespace

const char* to_string(SweepAxis axis) {
  return axis == SweepAxis::kArrivalRate ? "arrival_rate" : "max_concurrent_sessions";
}

SweepAxis axis_from_string(const std::string& s) {
  if (s == "arrival_rate") return SweepAxis::kArrivalRate;
  if (s == "max_concurrent_sessions") return SweepAxis::kMaxConcurrentSessions;
  throw ConfigError("sweep axis must be 'arrival_rate' or 'max_concurrent_sessions', got '" +
                    s + "'");
}

uint64_t cell_seed(uint64_t master_seed, double value) {
  return workload::mix64(master_seed ^ workload::mix64(std::bit_cast<uint64_t>(value)));
}

MetricsReport run_once(const RunSpec& spec, const workload::Workload& workload) {
  router::SimResult result = router::simulate(spec.sim, workload);
  return build_report(spec, result);
}

MetricsReport run_once(const RunSpec& spec) {
  return run_once(spec, workload::generate(spec.workload));
}

std::vector<SweepCell> sweep(const RunSpec& base, const SweepSpec& s) {
  if (s.values.empty()) {
    throw ConfigError("sweep: values must be non-empty");
  }
  if (s.modes.empty()) {
    throw ConfigError("sweep: modes must be non-empty");
  }
  if (s.auto_concurrency) {
    if (s.axis != SweepAxis::kArrivalRate) {
      throw ConfigError("sweep: --auto-concurrency applies to arrival_rate sweeps only");
    }
    if (s.cap_grid.empty()) {
      throw ConfigError("sweep: --auto-concurrency needs a non-empty cap grid");
    }
  }

  struct Task {
    size_t cell;
    RunSpec spec;
  };
  std::vector<SweepCell> cells;
  std::vector<Task> tasks;
  for (double value : s.values) {
    const uint64_t seed = cell_seed(base.sim.run.seed, value);
    for (router::ServingMode mode : s.modes) {
      RunSpec spec = apply_axis(base, s.axis, value);
      spec.sim.fleet.mode = mode;
      spec.sim.run.seed = seed;
      spec.workload.seed = seed;
      SweepCell cell;
      cell.value = value;
      cell.mode = mode;
      cell.seed = seed;
      cell.max_concurrent_sessions = spec.sim.run.max_concurrent_sessions;
      if (s.auto_concurrency) {
        for (uint32_t cap : s.cap_grid) {
          RunSpec capped = spec;
          capped.sim.run.max_concurrent_sessions = cap;
          tasks.push_back(Task{cells.size(), std::move(capped)});
        }
      } else {
        tasks.push_back(Task{cells.size(), std::move(spec)});
      }
      cells.push_back(std::move(cell));
    }
  }

  std::vector<MetricsReport> reports(tasks.size());
  parallel_for(tasks.size(), s.jobs, [&](size_t i) {
    // Traces are per-run debugging output, not part of sweep results.
    RunSpec spec = tasks[i].spec;
    spec.sim.run.trace = false;
    reports[i] = run_once(spec);
  });

  // Highest throughput wins; ties keep the earlier (grid-order) cap.
  std::vector<bool> filled(cells.size(), false);
  for (size_t i = 0; i < tasks.size(); ++i) {
    SweepCell& cell = cells[tasks[i].cell];
    if (!filled[tasks[i].cell] ||
        reports[i].aggregates.throughput_tok_s > cell.report.aggregates.throughput_tok_s) {
      cell.report = std::move(reports[i]);
      cell.max_concurrent_sessions = tasks[i].spec.sim.run.max_concurrent_sessions;
      filled[tasks[i].cell] = true;
    }
  }
  return cells;
}

std::string sweep_table_csv(SweepAxis axis, const std::vector<SweepCell>& cells) {
  std::string out = "# schema_version=" + std::to_string(kReportSchemaVersion) + "\n";
  out += std::string(to_string(axis)) +
         ",mode,seed,max_concurrent_sessions,throughput_tok_s,p95_e2e_us,mean_ttft_us,"
         "p95_ttft_us,prefix_hit_ratio,peak_footprint_tokens,staged_handoffs,evictions,"
         "failed_requests\n";
  for (const auto& c : cells) {
    const Aggregates& a = c.report.aggregates;
    out += format_value(c.value) + "," + router::to_string(c.mode) + "," +
           std::to_string(c.seed) + "," + std::to_string(c.max_concurrent_sessions) + "," +
           format_value(a.throughput_tok_s) + "," + std::to_string(a.p95_e2e_us) + "," +
           format_value(a.mean_ttft_us) + "," + std::to_string(a.p95_ttft_us) + "," +
           format_value(a.prefix_hit_ratio) + "," + std::to_string(a.peak_footprint_tokens) +
           "," + std::to_string(a.staged_handoffs) + "," + std::to_string(a.evictions) + "," +
           std::to_string(a.failed_requests) + "\n";
  }
  return out;
}

std::string cell_dir_name(SweepAxis axis, const SweepCell& cell) {
  return std::string(to_string(axis)) + "=" + format_value(cell.value) + "_" +
         router::to_string(cell.mode);
}

}  // namespace prefixsim::metrics
