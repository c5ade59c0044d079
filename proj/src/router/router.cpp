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

#include "prefixsim/router/router.h"

#include <algorithm>
#include <stdexcept>

namespace prefixsim::router {

const char* to_string(ServingMode mode) {
  return mode == ServingMode::kBaseline ? "baseline" : "prefillshare";
}

ServingMode mode_from_string(const std::string& s) {
  if (s == "baseline") return ServingMode::kBaseline;
  if (s == "prefillshare") return ServingMode::kPrefillShare;
  throw ConfigError("fleet.mode: expected 'baseline' or 'prefillshare', got '" + s + "'");
}

std::optional<WorkerId> RoutingTable::find(SessionId session) const {
  auto it = entries_.find(session);
  if (it == entries_.end()) {
    return std::nullopt;
  }
  return it->second;
}

void RoutingTable::pin(SessionId session, WorkerId worker) {
  auto [it, inserted] = entries_.emplace(session, worker);
  if (!inserted && it->second != worker) {
    throw std::logic_error("routing table: session " + std::to_string(session) +
                           " is already pinned to another worker");
  }
}

Router::Router(ServingMode mode, std::vector<ModelId> models, uint32_t prefill_workers,
               uint32_t decode_workers_per_model)
    : mode_(mode), models_(std::move(models)), prefill_workers_(prefill_workers),
      decode_per_model_(decode_workers_per_model) {
  if (models_.empty()) {
    throw ConfigError("fleet: at least one model is required");
  }
  if (decode_per_model_ == 0) {
    throw ConfigError("fleet.decode_workers_per_model: must be >= 1");
  }
  if (mode_ == ServingMode::kBaseline) {
    prefill_workers_ = static_cast<uint32_t>(models_.size());
  } else if (prefill_workers_ == 0) {
    throw ConfigError("fleet.prefill_workers: must be >= 1");
  }
}

size_t Router::model_index(const ModelId& model) const {
  auto it = std::find(models_.begin(), models_.end(), model);
  if (it == models_.end()) {
    throw ConfigError("router: unknown model_id '" + model + "'");
  }
  return static_cast<size_t>(it - models_.begin());
}

WorkerId Router::route_prefill(SessionId session, const ModelId& model,
                               std::span<const size_t> prefill_loads) {
  const size_t index = model_index(model);
  if (mode_ == ServingMode::kBaseline) {
    return static_cast<WorkerId>(index);
  }
  if (auto pinned = table_.find(session)) {
    return *pinned;
  }
  WorkerId best = 0;
  for (WorkerId w = 1; w < prefill_workers_; ++w) {
    if (prefill_loads[w] < prefill_loads[best]) {
      best = w;
    }
  }
  table_.pin(session, best);
  return best;
}

WorkerId Router::route_decode(const ModelId& model,
                              std::span<const uint64_t> decode_resident_tokens) const {
  const size_t first = model_index(model) * decode_per_model_;
  size_t best = first;
  for (size_t d = first + 1; d < first + decode_per_model_; ++d) {
    if (decode_resident_tokens[d] < decode_resident_tokens[best]) {
      best = d;
    }
  }
  return static_cast<WorkerId>(prefill_workers_ + best);
}

kv::Namespace Router::namespace_for(const ModelId& model) const {
  if (mode_ == ServingMode::kPrefillShare) {
    model_index(model);
    return kv::Namespace::shared();
  }
  return kv::Namespace::per_model(models_[model_index(model)]);
}

}  // namespace prefixsim::router
