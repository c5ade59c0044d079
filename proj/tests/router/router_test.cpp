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

#include <gtest/gtest.h>

#include <vector>

namespace prefixsim::router {
namespace {

const std::vector<ModelId> kModels = {"A", "B", "C", "D"};

TEST(RoutingTable, PinIsWriteOnce) {
  RoutingTable t;
  EXPECT_FALSE(t.find(1));
  t.pin(1, 2);
  t.pin(1, 2);
  EXPECT_EQ(t.find(1), std::optional<WorkerId>(2));
  EXPECT_THROW(t.pin(1, 3), std::logic_error);
  EXPECT_EQ(t.size(), 1u);
}

TEST(Router, BaselineUsesTheModelsDedicatedWorker) {
  Router r(ServingMode::kBaseline, kModels, 1, 1);
  EXPECT_EQ(r.prefill_worker_count(), 4u);
  const std::vector<size_t> loads = {9, 9, 9, 0};
  EXPECT_EQ(r.route_prefill(7, "A", loads), 0u);
  EXPECT_EQ(r.route_prefill(7, "C", loads), 2u);
  EXPECT_EQ(r.namespace_for("B"), kv::Namespace::per_model("B"));
}

TEST(Router, PrefillShareTakesLeastLoadedLowestIdOnTies) {
  Router r(ServingMode::kPrefillShare, kModels, 4, 1);
  EXPECT_EQ(r.route_prefill(1, "A", std::vector<size_t>{2, 1, 1, 3}), 1u);
  EXPECT_EQ(r.route_prefill(2, "A", std::vector<size_t>{0, 0, 0, 0}), 0u);
  EXPECT_EQ(r.namespace_for("D"), kv::Namespace::shared());
}

TEST(Router, PrefillSharePinsTheSessionForever) {
  Router r(ServingMode::kPrefillShare, kModels, 4, 1);
  EXPECT_EQ(r.route_prefill(5, "A", std::vector<size_t>{3, 3, 0, 3}), 2u);
  // Worker 2 is now the most loaded, and the session still goes there under any model.
  for (const ModelId& m : kModels) {
    EXPECT_EQ(r.route_prefill(5, m, std::vector<size_t>{0, 0, 50, 0}), 2u);
  }
  EXPECT_EQ(r.table().find(5), std::optional<WorkerId>(2));
}

TEST(Router, DecodeRoutingStaysWithinTheModel) {
  Router r(ServingMode::kPrefillShare, kModels, 2, 2);
  // Loads are indexed by decode slot; model B owns slots 2 and 3, which are
  // worker ids 4 and 5 after the two prefill workers.
  const std::vector<uint64_t> resident = {7, 7, 50, 40, 0, 0, 0, 0};
  EXPECT_EQ(r.route_decode("B", resident), 5u);
  EXPECT_EQ(r.route_decode("A", resident), 2u);
  EXPECT_EQ(r.decode_worker_count(), 8u);
}

TEST(Router, UnknownModelIsAConfigError) {
  Router r(ServingMode::kPrefillShare, kModels, 4, 1);
  EXPECT_THROW(r.route_prefill(1, "Z", std::vector<size_t>{0, 0, 0, 0}), ConfigError);
  EXPECT_THROW(r.namespace_for("Z"), ConfigError);
  EXPECT_THROW(Router(ServingMode::kBaseline, {}, 1, 1), ConfigError);
  EXPECT_THROW(Router(ServingMode::kPrefillShare, kModels, 0, 1), ConfigError);
}

TEST(ServingMode, RoundTripsThroughStrings) {
  EXPECT_EQ(mode_from_string(to_string(ServingMode::kBaseline)), ServingMode::kBaseline);
  EXPECT_EQ(mode_from_string(to_string(ServingMode::kPrefillShare)), ServingMode::kPrefillShare);
  EXPECT_THROW(mode_from_string("shared"), ConfigError);
}

}  // namespace
}  // namespace prefixsim::router
