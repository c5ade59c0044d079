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

#include <stdexcept>
#include <string>

namespace prefixsim::cluster {

uint64_t EventLoop::schedule(SimTime time, EventKind kind, SessionId session,
                             RequestId request, WorkerId worker) {
  if (time < now_) {
    throw std::logic_error("event scheduled in the past: " + std::to_string(time.us()) +
                           " < " + std::to_string(now_.us()));
  }
  SimEvent ev;
  ev.time = time;
  ev.seq = next_seq_++;
  ev.kind = kind;
  ev.session = session;
  ev.request = request;
  ev.worker = worker;
  heap_.push(ev);
  return ev.seq;
}

SimTime EventLoop::run_until_idle(const Handler& handler, Duration livelock_bound) {
  while (!heap_.empty()) {
    const SimEvent ev = heap_.top();
    heap_.pop();
    if (ev.time - now_ > livelock_bound) {
      throw std::runtime_error("livelock: no event for " +
                               std::to_string((ev.time - now_).us()) + " us after t=" +
                               std::to_string(now_.us()));
    }
    now_ = ev.time;
    ++processed_;
    handler(ev);
  }
  return now_;
}

}  // namespace prefixsim::cluster
