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

#include <CLI11.hpp>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "prefixsim/metrics/config.h"
#include "prefixsim/metrics/report.h"
#include "prefixsim/metrics/sweep.h"
#include "prefixsim/router/simulator.h"
#include "prefixsim/workload/workload.h"

namespace {

using prefixsim::ConfigError;
using namespace prefixsim::metrics;
namespace router = prefixsim::router;
namespace workload = prefixsim::workload;

constexpr int kExitConfig = 2;
constexpr int kExitFailures = 3;

struct CommonOptions {
  std::string config_path;
  std::string out_dir = ".";
  std::optional<std::string> mode;
  std::optional<uint64_t> seed;
  bool allow_failures = false;
};

RunSpec load(const CommonOptions& o) {
  RunSpec spec = load_config_file(o.config_path);
  if (o.mode) {
    spec.sim.fleet.mode = router::mode_from_string(*o.mode);
  }
  if (o.seed) {
    spec.sim.run.seed = *o.seed;
    spec.workload.seed = *o.seed;
  }
  return spec;
}

std::string join_path(const std::string& dir, const std::string& name) {
  return (std::filesystem::path(dir) / name).string();
}

void write_report_files(const std::string& dir, const MetricsReport& report) {
  write_file_atomic(join_path(dir, "report.json"), report_json(report));
  write_file_atomic(join_path(dir, "requests.csv"), requests_csv(report));
}

std::vector<std::string> split_csv(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

std::vector<double> parse_doubles(const std::string& s, const char* flag) {
  std::vector<double> out;
  for (const auto& item : split_csv(s)) {
    try {
      size_t used = 0;
      out.push_back(std::stod(item, &used));
      if (used != item.size()) throw std::invalid_argument(item);
    } catch (const std::exception&) {
      throw ConfigError(std::string(flag) + ": not a number: '" + item + "'");
    }
  }
  return out;
}

int cmd_run(const CommonOptions& o, const std::string& workload_path, bool trace_only) {
  RunSpec spec = load(o);
  if (trace_only) spec.sim.run.trace = true;
  const workload::Workload w = workload_path.empty()
                                   ? workload::generate(spec.workload)
                                   : workload::import_workload(read_file(workload_path));
  router::SimResult result = router::simulate(spec.sim, w);
  if (spec.sim.run.trace) {
    write_file_atomic(join_path(o.out_dir, "trace.txt"), result.trace);
  }
  if (trace_only) {
    return 0;
  }
  MetricsReport report = build_report(spec, result);
  write_report_files(o.out_dir, report);
  const Aggregates& a = report.aggregates;
  std::cout << "mode=" << router::to_string(spec.sim.fleet.mode) << " requests=" << a.requests
            << " failed=" << a.failed_requests << " throughput_tok_s=" << a.throughput_tok_s
            << " p95_e2e_us=" << a.p95_e2e_us << " hit_ratio=" << a.prefix_hit_ratio << "\n";
  if (a.failed_requests > 0 && !o.allow_failures) {
    std::cerr << "simctl: " << a.failed_requests
              << " request(s) failed (pass --allow-failures to accept)\n";
    return kExitFailures;
  }
  return 0;
}

int cmd_sweep(const CommonOptions& o, const std::string& axis, const std::string& values,
              const std::string& modes, bool auto_concurrency, const std::string& caps,
              unsigned jobs) {
  RunSpec base = load(o);
  SweepSpec s;
  s.axis = axis_from_string(axis);
  s.values = parse_doubles(values, "--values");
  for (const auto& m : split_csv(modes)) s.modes.push_back(router::mode_from_string(m));
  s.auto_concurrency = auto_concurrency;
  for (double c : parse_doubles(caps, "--caps")) {
    if (c < 0 || c != static_cast<double>(static_cast<uint32_t>(c))) {
      throw ConfigError("--caps: caps must be non-negative integers");
    }
    s.cap_grid.push_back(static_cast<uint32_t>(c));
  }
  s.jobs = jobs == 0 ? 1 : jobs;

  const std::vector<SweepCell> cells = sweep(base, s);
  uint64_t failed = 0;
  for (const auto& cell : cells) {
    write_report_files(join_path(o.out_dir, cell_dir_name(s.axis, cell)), cell.report);
    failed += cell.report.aggregates.failed_requests;
  }
  const std::string table = sweep_table_csv(s.axis, cells);
  write_file_atomic(join_path(o.out_dir, "sweep.csv"), table);
  std::cout << table;
  if (failed > 0 && !o.allow_failures) {
    std::cerr << "simctl: " << failed
              << " request(s) failed across the grid (pass --allow-failures to accept)\n";
    return kExitFailures;
  }
  return 0;
}

int cmd_export(const CommonOptions& o, const std::string& out_path) {
  RunSpec spec = load(o);
  write_file_atomic(out_path, workload::export_workload(workload::generate(spec.workload)));
  return 0;
}

void add_common(CLI::App* sub, CommonOptions& o, bool with_out_dir) {
  sub->add_option("config", o.config_path, "JSON config file")->required();
  sub->add_option("--mode", o.mode, "Override fleet.mode: baseline | prefillshare");
  sub->add_option("--seed", o.seed, "Override run.seed");
  if (with_out_dir) {
    sub->add_option("--out-dir", o.out_dir, "Directory for output files");
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"simctl: multi-model disaggregated serving simulator"};
  app.require_subcommand(1);

  CommonOptions run_opts;
  std::string run_workload;
  auto* run = app.add_subcommand("run", "Run one simulation and write report files");
  add_common(run, run_opts, true);
  run->add_option("--workload", run_workload, "Replay an exported workload file");
  run->add_flag("--allow-failures", run_opts.allow_failures,
                "Exit 0 even if some requests failed");

  CommonOptions trace_opts;
  std::string trace_workload;
  auto* trace = app.add_subcommand("trace", "Run one simulation and write trace.txt only");
  add_common(trace, trace_opts, true);
  trace->add_option("--workload", trace_workload, "Replay an exported workload file");

  CommonOptions sweep_opts;
  std::string axis = "arrival_rate";
  std::string values;
  std::string modes = "baseline,prefillshare";
  std::string caps = "10,20,30,40,50,60,70,80,90,100,110,120,130,140,150,160";
  bool auto_concurrency = false;
  unsigned jobs = 1;
  auto* sw = app.add_subcommand("sweep", "Run a (value x mode) grid");
  add_common(sw, sweep_opts, true);
  sw->add_option("--axis", axis, "arrival_rate | max_concurrent_sessions")->capture_default_str();
  sw->add_option("--values", values, "Comma-separated axis values")->required();
  sw->add_option("--modes", modes, "Comma-separated modes")->capture_default_str();
  sw->add_flag("--auto-concurrency", auto_concurrency,
               "Per cell, pick the cap from --caps with the highest throughput");
  sw->add_option("--caps", caps, "Cap grid for --auto-concurrency")->capture_default_str();
  sw->add_option("--jobs", jobs, "Cells run in parallel")->capture_default_str();
  sw->add_flag("--allow-failures", sweep_opts.allow_failures,
               "Exit 0 even if some requests failed");

  CommonOptions export_opts;
  std::string export_out = "workload.json";
  auto* ex = app.add_subcommand("export-workload", "Write the generated workload to a file");
  add_common(ex, export_opts, false);
  ex->add_option("-o,--output", export_out, "Output path")->capture_default_str();

  CLI11_PARSE(app, argc, argv);

  try {
    if (run->parsed()) return cmd_run(run_opts, run_workload, false);
    if (trace->parsed()) return cmd_run(trace_opts, trace_workload, true);
    if (sw->parsed()) {
      return cmd_sweep(sweep_opts, axis, values, modes, auto_concurrency, caps, jobs);
    }
    if (ex->parsed()) return cmd_export(export_opts, export_out);
  } catch (const ConfigError& e) {
    std::cerr << "simctl: config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << "simctl: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
