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

#include "prefixsim/metrics/config.h"

#include <filesystem>
#include <fstream>
#include <json.hpp>
#include <set>
#include <sstream>

namespace prefixsim::metrics {

using nlohmann::json;
using nlohmann::ordered_json;

namespace {

// Reads typed fields from one config section and rejects unknown keys.
class Section {
 public:
  Section(const json& root, const std::string& name) : name_(name) {
    auto it = root.find(name);
    if (it == root.end()) {
      throw ConfigError("missing section '" + name + "'");
    }
    if (!it->is_object()) {
      throw ConfigError("section '" + name + "' must be an object");
    }
    obj_ = &*it;
  }

  template <typename T>
  void optional(const char* key, T& out) {
    seen_.insert(key);
    auto it = obj_->find(key);
    if (it == obj_->end()) {
      return;
    }
    try {
      out = it->get<T>();
    } catch (const json::exception&) {
      throw ConfigError("field '" + path(key) + "': wrong type");
    }
  }

  template <typename T>
  void required(const char* key, T& out) {
    if (!obj_->contains(key)) {
      throw ConfigError("missing field '" + path(key) + "'");
    }
    optional(key, out);
  }

  const json* raw(const char* key) {
    seen_.insert(key);
    auto it = obj_->find(key);
    return it == obj_->end() ? nullptr : &*it;
  }

  void finish() const {
    for (const auto& [key, value] : obj_->items()) {
      if (!seen_.count(key)) {
        throw ConfigError("unknown field '" + path(key) + "'");
      }
    }
  }

  std::string path(const std::string& key) const { return name_ + "." + key; }

 private:
  std::string name_;
  const json* obj_ = nullptr;
  std::set<std::string> seen_;
};

std::string line_col(const std::string& text, size_t byte) {
  size_t line = 1;
  size_t col = 1;
  for (size_t i = 0; i < byte && i < text.size(); ++i) {
    if (text[i] == '\n') {
      ++line;
      col = 1;
    } else {
      ++col;
    }
  }
  return "line " + std::to_string(line) + ", column " + std::to_string(col);
}

SessionShape shape_from_string(const std::string& s) {
  if (s == "chain") return SessionShape::kChain;
  if (s == "fanout") return SessionShape::kFanOut;
  throw ConfigError("workload.shape: expected 'chain' or 'fanout', got '" + s + "'");
}

}  // namespace

RunSpec parse_config(const std::string& text) {
  json root;
  try {
    root = json::parse(text);
  } catch (const json::parse_error& e) {
    const size_t at = e.byte == 0 ? 0 : e.byte - 1;
    throw ConfigError("config syntax error at " + line_col(text, at) + ": " + e.what());
  }
  if (!root.is_object()) {
    throw ConfigError("config root must be an object");
  }
  for (const auto& [key, value] : root.items()) {
    static const std::set<std::string> kSections = {"fleet", "cost", "workload", "cache",
                                                    "run"};
    if (!kSections.count(key)) {
      throw ConfigError("unknown section '" + key + "'");
    }
  }

  RunSpec spec;
  auto& fleet = spec.sim.fleet;
  {
    Section s(root, "fleet");
    std::string mode;
    s.required("mode", mode);
    fleet.mode = router::mode_from_string(mode);
    s.optional("prefill_workers", fleet.prefill_workers);
    s.optional("decode_workers_per_model", fleet.decode_workers_per_model);
    s.optional("max_batch", fleet.max_batch);
    s.optional("decode_capacity_blocks", fleet.decode_capacity_blocks);
    s.finish();
  }
  {
    Section s(root, "cost");
    auto& c = spec.sim.cost;
    s.optional("prefill_fixed_overhead_us", c.prefill_fixed_overhead_us);
    s.optional("prefill_rate_tok_s", c.prefill_rate_tok_s);
    s.optional("decode_step_base_us", c.decode_step_base_us);
    s.optional("decode_step_per_request_us", c.decode_step_per_request_us);
    s.optional("decode_step_per_kv_ktoken_us", c.decode_step_per_kv_ktoken_us);
    s.optional("kv_bytes_per_token", c.kv_bytes_per_token);
    s.optional("transfer_bandwidth_bytes_s", c.transfer_bandwidth_bytes_s);
    s.optional("staging_threshold", c.staging_threshold);
    s.optional("staging_penalty", c.staging_penalty);
    s.finish();
    c.validate();
  }
  {
    Section s(root, "workload");
    std::string pattern;
    s.required("pattern", pattern);
    const auto p = workload::pattern_from_string(pattern);
    auto& w = spec.workload;
    w = p == workload::Pattern::kReflexion ? workload::WorkloadConfig::reflexion()
                                           : workload::WorkloadConfig::react();
    w.pattern = p;
    s.required("arrival_rate", w.arrival_rate);
    s.required("duration_s", w.duration_s);
    s.optional("initial_prompt_len", w.initial_prompt_len);
    s.optional("turns", w.turns);
    std::string shape = "chain";
    s.optional("shape", shape);
    w.shape = shape_from_string(shape);
    if (const json* agents = s.raw("agents")) {
      if (!agents->is_array()) {
        throw ConfigError("field 'workload.agents' must be an array");
      }
      w.agents.clear();
      for (size_t i = 0; i < agents->size(); ++i) {
        const json& a = (*agents)[i];
        const std::string where = "workload.agents[" + std::to_string(i) + "]";
        AgentProfile profile;
        try {
          profile.model_id = a.at("model").get<std::string>();
          profile.input_extension_len = a.at("input_extension_len").get<uint32_t>();
          profile.output_len = a.at("output_len").get<uint32_t>();
        } catch (const json::exception&) {
          throw ConfigError("field '" + where +
                            "' needs model, input_extension_len and output_len");
        }
        w.agents.push_back(profile);
      }
    } else if (p == workload::Pattern::kCustom) {
      throw ConfigError("missing field 'workload.agents' (required for pattern 'custom')");
    }
    s.finish();
  }
  {
    Section s(root, "cache");
    s.optional("block_size", spec.sim.cache.block_size);
    s.optional("prefill_capacity_blocks", spec.sim.cache.prefill_capacity_blocks);
    s.finish();
  }
  {
    Section s(root, "run");
    auto& r = spec.sim.run;
    s.optional("max_concurrent_sessions", r.max_concurrent_sessions);
    s.optional("seed", r.seed);
    s.optional("warmup_fraction", r.warmup_fraction);
    s.optional("livelock_bound_us", r.livelock_bound_us);
    s.optional("trace", r.trace);
    s.finish();
    if (r.warmup_fraction < 0 || r.warmup_fraction >= 1) {
      throw ConfigError("run.warmup_fraction: must be in [0, 1)");
    }
    if (r.livelock_bound_us <= 0) {
      throw ConfigError("run.livelock_bound_us: must be > 0");
    }
  }
  spec.workload.seed = spec.sim.run.seed;
  spec.workload.validate();
  if (spec.sim.cache.block_size == 0) {
    throw ConfigError("cache.block_size: must be > 0");
  }
  return spec;
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw ConfigError("cannot open '" + path + "'");
  }
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

RunSpec load_config_file(const std::string& path) {
  try {
    return parse_config(read_file(path));
  } catch (const ConfigError& e) {
    throw ConfigError(path + ": " + e.what());
  }
}

std::string config_to_json(const RunSpec& spec, int indent) {
  const auto& f = spec.sim.fleet;
  const auto& c = spec.sim.cost;
  const auto& w = spec.workload;
  const auto& r = spec.sim.run;
  ordered_json doc;
  doc["fleet"] = {{"mode", router::to_string(f.mode)},
                  {"prefill_workers", f.prefill_workers},
                  {"decode_workers_per_model", f.decode_workers_per_model},
                  {"max_batch", f.max_batch},
                  {"decode_capacity_blocks", f.decode_capacity_blocks}};
  doc["cost"] = {{"prefill_fixed_overhead_us", c.prefill_fixed_overhead_us},
                 {"prefill_rate_tok_s", c.prefill_rate_tok_s},
                 {"decode_step_base_us", c.decode_step_base_us},
                 {"decode_step_per_request_us", c.decode_step_per_request_us},
                 {"decode_step_per_kv_ktoken_us", c.decode_step_per_kv_ktoken_us},
                 {"kv_bytes_per_token", c.kv_bytes_per_token},
                 {"transfer_bandwidth_bytes_s", c.transfer_bandwidth_bytes_s},
                 {"staging_threshold", c.staging_threshold},
                 {"staging_penalty", c.staging_penalty}};
  ordered_json agents = ordered_json::array();
  for (const auto& a : w.agents) {
    agents.push_back({{"model", a.model_id},
                      {"input_extension_len", a.input_extension_len},
                      {"output_len", a.output_len}});
  }
  doc["workload"] = {{"pattern", workload::to_string(w.pattern)},
                     {"arrival_rate", w.arrival_rate},
                     {"duration_s", w.duration_s},
                     {"initial_prompt_len", w.initial_prompt_len},
                     {"turns", w.turns},
                     {"shape", w.shape == SessionShape::kChain ? "chain" : "fanout"},
                     {"agents", agents}};
  doc["cache"] = {{"block_size", spec.sim.cache.block_size},
                  {"prefill_capacity_blocks", spec.sim.cache.prefill_capacity_blocks}};
  doc["run"] = {{"max_concurrent_sessions", r.max_concurrent_sessions},
                {"seed", r.seed},
                {"warmup_fraction", r.warmup_fraction},
                {"livelock_bound_us", r.livelock_bound_us},
                {"trace", r.trace}};
  return doc.dump(indent);
}

void write_file_atomic(const std::string& path, const std::string& contents) {
  namespace fs = std::filesystem;
  const fs::path target(path);
  if (target.has_parent_path()) {
    fs::create_directories(target.parent_path());
  }
  const fs::path tmp = target.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) {
      throw std::runtime_error("cannot write '" + tmp.string() + "'");
    }
    out << contents;
    if (!out.flush()) {
      throw std::runtime_error("short write to '" + tmp.string() + "'");
    }
  }
  fs::rename(tmp, target);
}

}  // namespace prefixsim::metrics
