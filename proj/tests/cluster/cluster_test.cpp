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

#include "prefixsim/cluster/event_loop.h"
#include "prefixsim/cluster/workers.h"

#include <gtest/gtest.h>

#include <random>

namespace prefixsim::cluster {
namespace {

TEST(EventLoop, EmptyLoopReturnsZero) {
  EventLoop loop;
  EXPECT_EQ(loop.run_until_idle([](const SimEvent&) {}, Duration(1000)), SimTime(0));
  EXPECT_EQ(loop.processed(), 0u);
}

TEST(EventLoop, DispatchesByTimeThenInsertionOrder) {
  EventLoop loop;
  loop.schedule(SimTime(10), EventKind::kSessionArrival, 1);
  loop.schedule(SimTime(5), EventKind::kSessionArrival, 2);
  loop.schedule(SimTime(10), EventKind::kSessionArrival, 3);
  loop.schedule(SimTime(5), EventKind::kSessionArrival, 4);
  std::vector<SessionId> order;
  const SimTime end = loop.run_until_idle(
      [&](const SimEvent& ev) { order.push_back(ev.session); }, Duration(1'000'000));
  EXPECT_EQ(order, (std::vector<SessionId>{2, 4, 1, 3}));
  EXPECT_EQ(end, SimTime(10));
}

TEST(EventLoop, RandomSchedulesDispatchInTotalOrder) {
  std::mt19937_64 rng(17);
  EventLoop loop;
  for (int i = 0; i < 500; ++i) {
    loop.schedule(SimTime(static_cast<int64_t>(rng() % 50)), EventKind::kSessionArrival);
  }
  SimEvent prev{SimTime(-1), 0};
  bool first = true;
  loop.run_until_idle(
      [&](const SimEvent& ev) {
        if (!first) {
          EXPECT_TRUE(prev < ev);
        }
        first = false;
        prev = ev;
        // Handlers may schedule at the current instant.
        if (ev.seq < 500 && rng() % 4 == 0) loop.schedule(ev.time, EventKind::kSessionArrival);
      },
      Duration(1'000'000));
}

TEST(EventLoop, RejectsEventsInThePast) {
  EventLoop loop;
  loop.schedule(SimTime(10), EventKind::kSessionArrival);
  EXPECT_THROW(loop.run_until_idle(
                   [&](const SimEvent&) { loop.schedule(SimTime(9), EventKind::kSessionArrival); },
                   Duration(1000)),
               std::logic_error);
}

TEST(EventLoop, GapAboveBoundIsALivelock) {
  EventLoop loop;
  loop.schedule(SimTime(5000), EventKind::kSessionArrival);
  EXPECT_THROW(loop.run_until_idle([](const SimEvent&) {}, Duration(1000)), std::runtime_error);
}

TEST(Admission, CapOneIsStrictlySerialAndFifo) {
  AdmissionController ac(1);
  EXPECT_EQ(ac.admit(10), AdmissionController::Decision::kAdmitted);
  EXPECT_EQ(ac.admit(11), AdmissionController::Decision::kQueued);
  EXPECT_EQ(ac.admit(12), AdmissionController::Decision::kQueued);
  EXPECT_EQ(ac.active_count(), 1u);
  EXPECT_EQ(ac.complete(), std::optional<SessionId>(11));
  EXPECT_EQ(ac.complete(), std::optional<SessionId>(12));
  EXPECT_EQ(ac.complete(), std::nullopt);
  EXPECT_EQ(ac.active_count(), 0u);
  EXPECT_THROW(ac.complete(), std::logic_error);
}

TEST(Admission, ZeroCapIsUnbounded) {
  AdmissionController ac(0);
  for (SessionId s = 0; s < 1000; ++s) {
    EXPECT_EQ(ac.admit(s), AdmissionController::Decision::kAdmitted);
  }
  EXPECT_EQ(ac.waiting(), 0u);
}

TEST(Admission, ActiveNeverExceedsCap) {
  std::mt19937_64 rng(5);
  AdmissionController ac(7);
  SessionId next = 0;
  for (int i = 0; i < 5000; ++i) {
    if (ac.active_count() > 0 && rng() % 2 == 0) {
      ac.complete();
    } else {
      ac.admit(next++);
    }
    ASSERT_LE(ac.active_count(), 7u);
    if (ac.waiting() > 0) {
      ASSERT_EQ(ac.active_count(), 7u);
    }
  }
}

TEST(PrefillWorker, ServesFcfs) {
  PrefillWorker w(0, 16, 64);
  EXPECT_TRUE(w.enqueue(1));
  EXPECT_FALSE(w.enqueue(2));
  EXPECT_EQ(w.start_next(), 1u);
  EXPECT_FALSE(w.enqueue(3));
  EXPECT_EQ(w.load(), 3u);
  EXPECT_THROW(w.start_next(), std::logic_error);
  EXPECT_TRUE(w.finish());
  EXPECT_EQ(w.start_next(), 2u);
  EXPECT_TRUE(w.finish());
  EXPECT_EQ(w.start_next(), 3u);
  EXPECT_FALSE(w.finish());
  EXPECT_THROW(w.finish(), std::logic_error);
}

TEST(DecodeWorker, HandTracedBatchWithMidFlightJoiner) {
  DecodeWorker w(0, "A", 0, 10000);
  // r1: 2 tokens from a 100-token context; r2: 3 tokens from 50.
  EXPECT_TRUE(w.join(1, 2, 100));
  EXPECT_TRUE(w.join(2, 3, 50));
  EXPECT_EQ(w.resident_tokens(), 150u);

  EXPECT_EQ(w.begin_step(), 2u);
  // r3 arrives while step 1 is in flight and waits for the next boundary.
  EXPECT_FALSE(w.join(3, 1, 10));
  EXPECT_EQ(w.resident_tokens(), 160u);
  auto s1 = w.end_step();
  EXPECT_EQ(s1.advanced, (std::vector<RequestId>{1, 2}));
  EXPECT_TRUE(s1.completed.empty());
  EXPECT_EQ(w.resident_tokens(), 162u);

  EXPECT_EQ(w.begin_step(), 3u);
  auto s2 = w.end_step();
  EXPECT_EQ(s2.advanced, (std::vector<RequestId>{1, 2, 3}));
  EXPECT_EQ(s2.completed, (std::vector<RequestId>{1, 3}));
  // r1 (102) and r3 (11) are released; r2 holds 52.
  EXPECT_EQ(w.resident_tokens(), 52u);
  EXPECT_EQ(w.peak_resident_tokens(), 165u);

  EXPECT_EQ(w.begin_step(), 1u);
  auto s3 = w.end_step();
  EXPECT_EQ(s3.completed, (std::vector<RequestId>{2}));
  EXPECT_EQ(w.resident_tokens(), 0u);
  EXPECT_EQ(w.begin_step(), 0u);
  EXPECT_FALSE(w.stepping());
}

TEST(DecodeWorker, MaxBatchDefersOverflow) {
  DecodeWorker w(0, "A", 2, 10000);
  w.join(1, 1, 0);
  w.join(2, 1, 0);
  w.join(3, 1, 0);
  EXPECT_EQ(w.begin_step(), 2u);
  EXPECT_EQ(w.waiting(), 1u);
  EXPECT_EQ(w.end_step().completed, (std::vector<RequestId>{1, 2}));
  EXPECT_EQ(w.begin_step(), 1u);
}

TEST(DecodeWorker, ReloadIsChargedOnEntryStepOnly) {
  DecodeWorker w(0, "A", 0, 10000);
  w.join(1, 2, 10, Duration(300));
  w.join(2, 2, 10, Duration(200));
  w.begin_step();
  EXPECT_EQ(w.step_reload(), Duration(500));
  w.end_step();
  w.begin_step();
  EXPECT_EQ(w.step_reload(), Duration(0));
}

TEST(DecodeWorker, RejectsMisuse) {
  DecodeWorker w(0, "A", 0, 100);
  EXPECT_THROW(w.join(1, 0, 10), std::invalid_argument);
  EXPECT_THROW(w.end_step(), std::logic_error);
  w.join(1, 1, 10);
  w.begin_step();
  EXPECT_THROW(w.begin_step(), std::logic_error);
  EXPECT_DOUBLE_EQ(w.resident_fraction(), 0.1);
}

}  // namespace
}  // namespace prefixsim::cluster
