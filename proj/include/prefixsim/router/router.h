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
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "prefixsim/core/types.h"
#include "prefixsim/kv/block_pool.h"

namespace prefixsim::router {

// kBaseline: one isolated prefill/decode pair per model, per-model cache
// namespaces. kPrefillShare: a shared prefill pool caching under one
// namespace, fronting per-model decode workers.
enum class ServingMode { kBaseline, kPrefillShare };

const char* to_string(ServingMode mode);
ServingMode mode_from_string(const std::string& s);

// session -> prefill worker. An entry never changes once recorded.
class RoutingTable {
 public:
  std::optional<WorkerId> find(SessionId session) const;
  void pin(SessionId session, WorkerId worker);
  size_t size() const { return entries_.size(); }

 private:
  std::map<SessionId, WorkerId> entries_;
};

// Fleet layout: prefill workers take ids [0, P); decode workers for model i
// take ids P + i*K .. P + i*K + K - 1 where K is decode workers per model.
class Router {
 public:
  Router(ServingMode mode, std::vector<ModelId> models, uint32_t prefill_workers,
         uint32_t decode_workers_per_model);

  ServingMode mode() const { return mode_; }
  const std::vector<ModelId>& models() const { return models_; }
  uint32_t prefill_worker_count() const { return prefill_workers_; }
  uint32_t decode_worker_count() const {
    return static_cast<uint32_t>(models_.size()) * decode_per_model_;
  }

  // `prefill_loads[w]` is the queued-plus-running job count of worker w.
  WorkerId route_prefill(SessionId session, const ModelId& model,
                         std::span<const size_t> prefill_loads);

  // Least resident KV among the model's decode workers, lowest id on ties.
  WorkerId route_decode(const ModelId& model,
                        std::span<const uint64_t> decode_resident_tokens) const;

  kv::Namespace namespace_for(const ModelId& model) const;

  const RoutingTable& table() const { return table_; }
  size_t model_index(const ModelId& model) const;

 private:
  ServingMode mode_;
  std::vector<ModelId> models_;
  uint32_t prefill_workers_;
  uint32_t decode_per_model_;
  RoutingTable table_;
};

}  // namespace prefixsim::router
