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

#include "prefixsim/metrics/report.h"

#include <algorithm>
#include <cmath>
#include <json.hpp>
#include <stdexcept>

namespace prefixsim::metrics {

using nlohmann::ordered_json;

int64_t percentile(std::vector<int64_t> values, double p) {
  if (values.empty()) {
    throw std::invalid_argument("percentile of an empty list");
  }
  if (p < 0 || p > 100) {
    throw std::invalid_argument("percentile rank must be in [0, 100]");
  }
  std::sort(values.begin(), values.end());
  // p * n / 100 computed in integers where possible to avoid 0.95 * 100 = 94.999...
  const double exact = p * static_cast<double>(values.size()) / 100.0;
  auto rank = static_cast<size_t>(std::ceil(exact - 1e-9));
  rank = std::clamp<size_t>(rank, 1, values.size());
  return values[rank - 1];
}

double throughput(std::span<const router::RequestRecord> records, SimTime end,
                  double warmup_fraction) {
  const int64_t start_us = round_half_up(warmup_fraction * static_cast<double>(end.us()));
  const int64_t window_us = end.us() - start_us;
  if (window_us <= 0) {
    return 0.0;
  }
  uint64_t tokens = 0;
  for (const auto& r : records) {
    for (SimTime t : r.token_times) {
      if (t.us() >= start_us && t <= end) {
        ++tokens;
      }
    }
  }
  return static_cast<double>(tokens) / (static_cast<double>(window_us) / 1e6);
}

RequestMetrics request_metrics(const router::RequestRecord& r) {
  RequestMetrics m;
  m.request_id = r.request_id;
  m.session_id = r.session_id;
  m.model_id = r.model_id;
  m.failed = !r.completed();
  m.out_tokens = static_cast<uint32_t>(r.token_times.size());
  if (m.failed) {
    return m;
  }
  m.ttft_us = (r.token_times.front() - r.issue_time).us();
  m.e2e_us = (r.token_times.back() - r.issue_time).us();
  for (size_t i = 1; i < r.token_times.size(); ++i) {
    m.itl_us.push_back((r.token_times[i] - r.token_times[i - 1]).us());
  }
  return m;
}

MetricsReport build_report(const RunSpec& spec, const router::SimResult& result) {
  MetricsReport report;
  report.spec = spec;
  Aggregates& a = report.aggregates;
  std::vector<int64_t> e2e;
  std::vector<int64_t> ttft;
  double ttft_sum = 0;
  double itl_sum = 0;
  uint64_t itl_count = 0;
  for (const auto& r : result.requests) {
    RequestMetrics m = request_metrics(r);
    a.generated_tokens += m.out_tokens;
    if (m.failed) {
      ++a.failed_requests;
    } else {
      ++a.completed_requests;
      e2e.push_back(m.e2e_us);
      ttft.push_back(m.ttft_us);
      ttft_sum += static_cast<double>(m.ttft_us);
      for (int64_t gap : m.itl_us) {
        itl_sum += static_cast<double>(gap);
      }
      itl_count += m.itl_us.size();
    }
    report.requests.push_back(std::move(m));
  }
  a.requests = result.requests.size();
  a.sessions_completed = result.sessions_completed;
  a.end_time_us = result.end_time.us();
  if (!e2e.empty()) {
    a.p95_e2e_us = percentile(e2e, 95);
    a.p95_ttft_us = percentile(ttft, 95);
    a.mean_ttft_us = ttft_sum / static_cast<double>(ttft.size());
  }
  a.mean_itl_us = itl_count == 0 ? 0.0 : itl_sum / static_cast<double>(itl_count);
  a.throughput_tok_s =
      throughput(result.requests, result.end_time, spec.sim.run.warmup_fraction);
  a.prefix_hit_ratio = result.hit_ratio();
  for (const auto& [ns, stats] : result.namespaces) {
    a.hit_ratio_by_namespace[ns.to_string()] =
        stats.lookup_tokens == 0
            ? 0.0
            : static_cast<double>(stats.matched_tokens) / stats.lookup_tokens;
    a.peak_footprint_by_namespace[ns.to_string()] = stats.peak_footprint_tokens;
  }
  a.peak_footprint_tokens = result.peak_footprint_tokens;
  a.staged_handoffs = result.staged_handoffs;
  a.evictions = result.evictions;
  return report;
}

std::string report_json(const MetricsReport& report) {
  const Aggregates& a = report.aggregates;
  ordered_json doc;
  doc["schema_version"] = kReportSchemaVersion;
  doc["config"] = ordered_json::parse(config_to_json(report.spec));
  doc["definitions"] = {
      {"time_unit", "microseconds"},
      {"issue_time", "session arrival for a session's first request, else the "
                     "completion time of the previous request"},
      {"ttft", "issue to first generated token"},
      {"e2e", "issue to last generated token"},
      {"percentile", "nearest-rank"},
      {"throughput", "output tokens generated in [warmup_fraction * end_time, end_time] "
                     "divided by the window length"},
      {"prefix_hit_ratio", "token-weighted: sum of matched tokens / sum of looked-up "
                           "prompt tokens over all prefill lookups"},
      {"peak_footprint_tokens", "peak over time of indexed prefill-cache token slots "
                                "summed over namespaces"}};
  ordered_json hit_ns = ordered_json::object();
  for (const auto& [ns, v] : a.hit_ratio_by_namespace) hit_ns[ns] = v;
  ordered_json peak_ns = ordered_json::object();
  for (const auto& [ns, v] : a.peak_footprint_by_namespace) peak_ns[ns] = v;
  doc["aggregates"] = {{"requests", a.requests},
                       {"completed_requests", a.completed_requests},
                       {"failed_requests", a.failed_requests},
                       {"sessions_completed", a.sessions_completed},
                       {"generated_tokens", a.generated_tokens},
                       {"end_time_us", a.end_time_us},
                       {"p95_e2e_us", a.p95_e2e_us},
                       {"mean_ttft_us", a.mean_ttft_us},
                       {"p95_ttft_us", a.p95_ttft_us},
                       {"mean_itl_us", a.mean_itl_us},
                       {"throughput_tok_s", a.throughput_tok_s},
                       {"prefix_hit_ratio", a.prefix_hit_ratio},
                       {"prefix_hit_ratio_by_namespace", hit_ns},
                       {"peak_footprint_tokens", a.peak_footprint_tokens},
                       {"peak_footprint_tokens_by_namespace", peak_ns},
                       {"staged_handoffs", a.staged_handoffs},
                       {"evictions", a.evictions}};
  return doc.dump(1) + "\n";
}

std::string requests_csv(const MetricsReport& report) {
  std::string out = "# schema_version=" + std::to_string(kReportSchemaVersion) + "\n";
  out += "request_id,session_id,model_id,ttft_us,e2e_us,out_tokens\n";
  for (const auto& m : report.requests) {
    out += std::to_string(m.request_id) + "," + std::to_string(m.session_id) + "," +
           m.model_id + ",";
    if (m.failed) {
      out += ",,";
    } else {
      out += std::to_string(m.ttft_us) + "," + std::to_string(m.e2e_us) + ",";
    }
    out += std::to_string(m.out_tokens) + "\n";
  }
  return out;
}

}  // namespace prefixsim::metrics
