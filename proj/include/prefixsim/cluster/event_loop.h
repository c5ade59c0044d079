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
#include <functional>
#include <queue>
#include <vector>

#include "prefixsim/core/types.h"

namespace prefixsim::cluster {

// Min-heap of SimEvents ordered by (time, seq). seq is assigned in scheduling
// order, so same-time events fire in the order they were scheduled.
class EventLoop {
 public:
  using Handler = std::function<void(const SimEvent&)>;

  // Schedules an event; `time` must not precede now().
  uint64_t schedule(SimTime time, EventKind kind, SessionId session = 0,
                    RequestId request = 0, WorkerId worker = 0);

  // Pops and handles events until the heap is empty. Throws
  // std::runtime_error if the next event lies more than `livelock_bound`
  // past the current time. Returns the time of the last event (0 if none).
  SimTime run_until_idle(const Handler& handler, Duration livelock_bound);

  SimTime now() const { return now_; }
  bool empty() const { return heap_.empty(); }
  size_t pending() const { return heap_.size(); }
  uint64_t processed() const { return processed_; }

 private:
  struct Later {
    bool operator()(const SimEvent& a, const SimEvent& b) const { return b < a; }
  };

  std::priority_queue<SimEvent, std::vector<SimEvent>, Later> heap_;
  SimTime now_;
  uint64_t next_seq_ = 0;
  uint64_t processed_ = 0;
};

}  // namespace prefixsim::cluster
