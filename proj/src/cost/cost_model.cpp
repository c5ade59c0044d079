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

#include "prefixsim/cost/cost_model.h"

#include <stdexcept>
#include <string>

namespace prefixsim::cost {

namespace {

void require(bool ok, const char* field, const char* what) {
  if (!ok) {
    throw ConfigError(std::string("cost.") + field + ": " + what);
  }
}

}  // namespace

void CostParams::validate() const {
  require(prefill_fixed_overhead_us >= 0, "prefill_fixed_overhead_us", "must be >= 0");
  require(prefill_rate_tok_s > 0, "prefill_rate_tok_s", "must be > 0");
  require(decode_step_base_us >= 0, "decode_step_base_us", "must be >= 0");
  require(decode_step_per_request_us >= 0, "decode_step_per_request_us", "must be >= 0");
  require(decode_step_per_kv_ktoken_us >= 0, "decode_step_per_kv_ktoken_us",
          "must be >= 0");
  require(kv_bytes_per_token > 0, "kv_bytes_per_token", "must be > 0");
  require(transfer_bandwidth_bytes_s > 0, "transfer_bandwidth_bytes_s", "must be > 0");
  require(staging_threshold > 0 && staging_threshold <= 1, "staging_threshold",
          "must be in (0, 1]");
  require(staging_penalty >= 1, "staging_penalty", "must be >= 1");
}

CostModel::CostModel(CostParams params) : params_(params) { params_.validate(); }

Duration CostModel::prefill_time(uint64_t new_tokens) const {
  const double compute_us = static_cast<double>(new_tokens) * 1e6 / params_.prefill_rate_tok_s;
  return Duration(round_half_up(params_.prefill_fixed_overhead_us) +
                  round_half_up(compute_us));
}

Duration CostModel::decode_step_time(uint64_t batch_size,
                                     uint64_t resident_kv_tokens) const {
  if (batch_size == 0) {
    throw std::invalid_argument("decode_step_time: batch_size must be >= 1");
  }
  const double us = params_.decode_step_base_us +
                    params_.decode_step_per_request_us * static_cast<double>(batch_size) +
                    params_.decode_step_per_kv_ktoken_us *
                        (static_cast<double>(resident_kv_tokens) / 1000.0);
  return Duration(round_half_up(us));
}

Duration CostModel::handoff_time(uint64_t tokens, double decode_resident_fraction) const {
  const double seconds = static_cast<double>(tokens) * params_.kv_bytes_per_token /
                         params_.transfer_bandwidth_bytes_s;
  int64_t us = round_half_up(seconds * 1e6);
  if (staging_engaged(decode_resident_fraction)) {
    us = round_half_up(static_cast<double>(us) * params_.staging_penalty);
  }
  return Duration(us);
}

}  // namespace prefixsim::cost
