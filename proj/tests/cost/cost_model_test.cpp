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

#include <gtest/gtest.h>

namespace prefixsim::cost {
namespace {

const CostModel kDefault{CostParams{}};

TEST(CostModel, PrefillExamples) {
  EXPECT_EQ(kDefault.prefill_time(0).us(), 2000);
  EXPECT_EQ(kDefault.prefill_time(8000).us(), 1'002'000);
  // 1 token at 8000 tok/s is 125 us.
  EXPECT_EQ(kDefault.prefill_time(1).us(), 2125);
}

TEST(CostModel, PrefillIsMonotone) {
  for (uint64_t n = 0; n < 5000; n += 7) {
    EXPECT_LE(kDefault.prefill_time(n), kDefault.prefill_time(n + 1));
  }
}

TEST(CostModel, DecodeStepExamples) {
  EXPECT_EQ(kDefault.decode_step_time(1, 0).us(), 10500);
  EXPECT_EQ(kDefault.decode_step_time(4, 2000).us(), 10000 + 2000 + 100);
  EXPECT_THROW(kDefault.decode_step_time(0, 0), std::invalid_argument);
}

TEST(CostModel, DecodeStepIsLinearInResidentKv) {
  const int64_t at_kv = kDefault.decode_step_time(3, 6000).us();
  const int64_t at_double = kDefault.decode_step_time(3, 12000).us();
  EXPECT_EQ(at_double - at_kv, 50 * 6);
  EXPECT_LT(kDefault.decode_step_time(3, 6000), kDefault.decode_step_time(4, 6000));
}

TEST(CostModel, HandoffExamples) {
  EXPECT_EQ(kDefault.handoff_time(0, 0.0).us(), 0);
  // 1024 * 262144 B at 64 GiB/s = 1/256 s.
  EXPECT_EQ(kDefault.handoff_time(1024, 0.5).us(), 3906);
  EXPECT_EQ(kDefault.handoff_time(1024, 0.95).us(), 15624);
  // Exactly at the threshold is not above it; oversubscription is.
  EXPECT_EQ(kDefault.handoff_time(1024, 0.9).us(), 3906);
  EXPECT_EQ(kDefault.handoff_time(1024, 1.7).us(), 15624);
}

TEST(CostParams, ValidateNamesTheField) {
  CostParams p;
  p.staging_penalty = 0.5;
  try {
    p.validate();
    FAIL() << "expected ConfigError";
  } catch (const ConfigError& e) {
    EXPECT_NE(std::string(e.what()).find("cost.staging_penalty"), std::string::npos);
  }
  p = CostParams{};
  p.prefill_rate_tok_s = 0;
  EXPECT_THROW(p.validate(), ConfigError);
  p = CostParams{};
  p.staging_threshold = 0;
  EXPECT_THROW(p.validate(), ConfigError);
  p.staging_threshold = 1.0;
  EXPECT_NO_THROW(p.validate());
}

}  // namespace
}  // namespace prefixsim::cost
