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

#include "prefixsim/core/types.h"

namespace prefixsim::cost {

// Linear latency model. Defaults are an order-of-magnitude calibration for an
// 8B model on an A100-class device; they are configuration, not measurements.
struct CostParams {
  double prefill_fixed_overhead_us = 2000.0;
  double prefill_rate_tok_s = 8000.0;
  double decode_step_base_us = 10000.0;
  double decode_step_per_request_us = 500.0;
  double decode_step_per_kv_ktoken_us = 50.0;
  double kv_bytes_per_token = 262144.0;
  double transfer_bandwidth_bytes_s = 64.0 * 1024 * 1024 * 1024;
  double staging_threshold = 0.9;
  double staging_penalty = 4.0;

  // Throws ConfigError naming the offending field.
  void validate() const;
  bool operator==(const CostParams&) const = default;
};

class CostModel {
 public:
  explicit CostModel(CostParams params);

  const CostParams& params() const { return params_; }

  // Overhead plus compute for `new_tokens` uncached prompt tokens.
  Duration prefill_time(uint64_t new_tokens) const;

  // One synchronous step advancing `batch_size` requests by one token.
  // Precondition: batch_size >= 1.
  Duration decode_step_time(uint64_t batch_size, uint64_t resident_kv_tokens) const;

  // KV transfer of `tokens` to a decode worker whose resident KV occupies
  // `decode_resident_fraction` of its capacity (may exceed 1).
  Duration handoff_time(uint64_t tokens, double decode_resident_fraction) const;

  bool staging_engaged(double decode_resident_fraction) const {
    return decode_resident_fraction > params_.staging_threshold;
  }

 private:
  CostParams params_;
};

}  // namespace prefixsim::cost
