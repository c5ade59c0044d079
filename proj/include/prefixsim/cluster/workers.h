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
#include <deque>
#include <optional>
#include <vector>

#include "prefixsim/core/types.h"
#include "prefixsim/kv/block_pool.h"

namespace prefixsim::cluster {

// Caps the number of simultaneously active sessions; excess arrivals wait in
// FIFO order. A cap of 0 means unlimited.
class AdmissionController {
 public:
  enum class Decision { kAdmitted, kQueued };

  explicit AdmissionController(uint32_t max_concurrent_sessions)
      : cap_(max_concurrent_sessions) {}

  Decision admit(SessionId session);
  // Frees one slot; returns the waiting session admitted into it, if any.
  std::optional<SessionId> complete();

  uint32_t cap() const { return cap_; }
  uint32_t active_count() const { return active_; }
  size_t waiting() const { return wait_queue_.size(); }

 private:
  uint32_t cap_;
  uint32_t active_ = 0;
  std::deque<SessionId> wait_queue_;
};

// Runs one prefill job at a time, FCFS, against its own prefix cache.
class PrefillWorker {
 public:
  PrefillWorker(WorkerId id, uint32_t block_size, uint64_t capacity_blocks)
      : id_(id), pool_(block_size, capacity_blocks) {}

  WorkerId id() const { return id_; }
  kv::BlockPool& pool() { return pool_; }
  const kv::BlockPool& pool() const { return pool_; }

  // Queues a job. Returns true when the worker was idle and should start it
  // now.
  bool enqueue(RequestId request);
  // Takes the head of the queue as the running job.
  RequestId start_next();
  // Marks the running job done. Returns true if another job is queued.
  bool finish();

  bool busy() const { return running_.has_value(); }
  // Queued jobs plus the running one; the routing load signal.
  size_t load() const { return queue_.size() + (busy() ? 1 : 0); }
  size_t queued() const { return queue_.size(); }

 private:
  WorkerId id_;
  kv::BlockPool pool_;
  std::deque<RequestId> queue_;
  std::optional<RequestId> running_;
};

// Synchronous-step batched decoder: every step advances each member of the
// active batch by one token. Requests that arrive while a step is in flight
// join at the next step boundary.
class DecodeWorker {
 public:
  struct Member {
    RequestId request = 0;
    uint32_t remaining = 0;
    uint64_t resident_tokens = 0;
    Duration reload;  // staged KV brought back before the first step
  };

  struct StepOutcome {
    std::vector<RequestId> advanced;   // every member, in batch order
    std::vector<RequestId> completed;  // members that produced their last token
  };

  DecodeWorker(WorkerId id, ModelId model, uint32_t max_batch, uint64_t capacity_tokens)
      : id_(id), model_(std::move(model)), max_batch_(max_batch),
        capacity_tokens_(capacity_tokens) {}

  WorkerId id() const { return id_; }
  const ModelId& model() const { return model_; }

  // Admits a handed-off request holding `context_tokens` of KV. A non-zero
  // `reload` is charged to the first step the request takes part in. Returns
  // true when the worker is idle and a step should be started.
  bool join(RequestId request, uint32_t output_len, uint64_t context_tokens,
            Duration reload = Duration{});

  // Fills the batch from the waiting queue and returns its size (0: idle).
  size_t begin_step();
  // Reload time of the members that entered the batch at the last begin_step.
  Duration step_reload() const { return step_reload_; }
  // Completes the in-flight step.
  StepOutcome end_step();

  bool stepping() const { return stepping_; }
  size_t batch_size() const { return batch_.size(); }
  size_t waiting() const { return waiting_.size(); }
  uint64_t resident_tokens() const { return resident_tokens_; }
  uint64_t capacity_tokens() const { return capacity_tokens_; }
  double resident_fraction() const {
    return static_cast<double>(resident_tokens_) / static_cast<double>(capacity_tokens_);
  }
  uint64_t peak_resident_tokens() const { return peak_resident_tokens_; }

 private:
  WorkerId id_;
  ModelId model_;
  uint32_t max_batch_;
  uint64_t capacity_tokens_;
  uint64_t resident_tokens_ = 0;
  uint64_t peak_resident_tokens_ = 0;
  bool stepping_ = false;
  Duration step_reload_;
  std::vector<Member> batch_;
  std::deque<Member> waiting_;
};

}  // namespace prefixsim::cluster
