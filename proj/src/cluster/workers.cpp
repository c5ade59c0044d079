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

#include "prefixsim/cluster/workers.h"

#include <algorithm>
#include <stdexcept>

namespace prefixsim::cluster {

AdmissionController::Decision AdmissionController::admit(SessionId session) {
  if (cap_ == 0 || active_ < cap_) {
    ++active_;
    return Decision::kAdmitted;
  }
  wait_queue_.push_back(session);
  return Decision::kQueued;
}

std::optional<SessionId> AdmissionController::complete() {
  if (active_ == 0) {
    throw std::logic_error("admission: completion with no active session");
  }
  --active_;
  if (wait_queue_.empty()) {
    return std::nullopt;
  }
  const SessionId next = wait_queue_.front();
  wait_queue_.pop_front();
  ++active_;
  return next;
}

bool PrefillWorker::enqueue(RequestId request) {
  queue_.push_back(request);
  return !busy() && queue_.size() == 1;
}

RequestId PrefillWorker::start_next() {
  if (busy() || queue_.empty()) {
    throw std::logic_error("prefill worker: start_next while busy or empty");
  }
  running_ = queue_.front();
  queue_.pop_front();
  return *running_;
}

bool PrefillWorker::finish() {
  if (!busy()) {
    throw std::logic_error("prefill worker: finish while idle");
  }
  running_.reset();
  return !queue_.empty();
}

bool DecodeWorker::join(RequestId request, uint32_t output_len, uint64_t context_tokens,
                        Duration reload) {
  if (output_len == 0) {
    throw std::invalid_argument("decode join: output_len must be >= 1");
  }
  waiting_.push_back(Member{request, output_len, context_tokens, reload});
  resident_tokens_ += context_tokens;
  peak_resident_tokens_ = std::max(peak_resident_tokens_, resident_tokens_);
  return !stepping_;
}

size_t DecodeWorker::begin_step() {
  if (stepping_) {
    throw std::logic_error("decode worker: step already in flight");
  }
  step_reload_ = Duration{};
  while (!waiting_.empty() && (max_batch_ == 0 || batch_.size() < max_batch_)) {
    step_reload_ = step_reload_ + waiting_.front().reload;
    batch_.push_back(waiting_.front());
    waiting_.pop_front();
  }
  stepping_ = !batch_.empty();
  return batch_.size();
}

DecodeWorker::StepOutcome DecodeWorker::end_step() {
  if (!stepping_) {
    throw std::logic_error("decode worker: end_step without a step in flight");
  }
  stepping_ = false;
  StepOutcome out;
  std::vector<Member> still_running;
  still_running.reserve(batch_.size());
  resident_tokens_ += batch_.size();
  peak_resident_tokens_ = std::max(peak_resident_tokens_, resident_tokens_);
  for (Member& m : batch_) {
    out.advanced.push_back(m.request);
    --m.remaining;
    ++m.resident_tokens;
    if (m.remaining == 0) {
      resident_tokens_ -= m.resident_tokens;
      out.completed.push_back(m.request);
    } else {
      still_running.push_back(m);
    }
  }
  batch_ = std::move(still_running);
  return out;
}

}  // namespace prefixsim::cluster
