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

#include "prefixsim/router/simulator.h"

#include <algorithm>
#include <cinttypes>
#include <cstdio>
#include <stdexcept>

namespace prefixsim::router {

using cluster::AdmissionController;
using cluster::DecodeWorker;
using cluster::EventLoop;
using cluster::PrefillWorker;
using workload::TokenPurpose;

std::vector<ModelId> models_of(const workload::Workload& workload) {
  std::vector<ModelId> models;
  for (const auto& s : workload.sessions) {
    for (const auto& a : s.agent_chain) {
      if (std::find(models.begin(), models.end(), a.model_id) == models.end()) {
        models.push_back(a.model_id);
      }
    }
  }
  return models;
}

namespace {

struct InFlight {
  kv::Namespace ns;
  std::vector<kv::BlockId> lookup_pins;
  std::vector<kv::BlockId> path_pins;
};

// Per-session bookkeeping beyond SessionState.
struct SessionRuntime {
  SessionState state;
  bool first_request_issued = false;
  std::vector<TokenSeq> branch_outputs;  // fan-out: one per agent of the turn
};

}  // namespace

class ServingSimulator::Impl {
 public:
  Impl(SimulationConfig config, workload::Workload workload)
      : config_(std::move(config)),
        workload_(std::move(workload)),
        cost_(config_.cost),
        router_(config_.fleet.mode, models_of(workload_),
                config_.fleet.prefill_workers == 0
                    ? static_cast<uint32_t>(models_of(workload_).size())
                    : config_.fleet.prefill_workers,
                config_.fleet.decode_workers_per_model),
        admission_(config_.run.max_concurrent_sessions) {
    if (config_.cache.block_size == 0) {
      throw ConfigError("cache.block_size: must be > 0");
    }
    if (config_.fleet.decode_capacity_blocks == 0) {
      throw ConfigError("fleet.decode_capacity_blocks: must be > 0");
    }
    for (WorkerId w = 0; w < router_.prefill_worker_count(); ++w) {
      prefill_.emplace_back(w, config_.cache.block_size, config_.cache.prefill_capacity_blocks);
    }
    for (auto& worker : prefill_) {
      worker.pool().set_eviction_observer([this](const kv::KvBlock& b) {
        ns_current_[b.ns] -= config_.cache.block_size;
        total_current_ -= config_.cache.block_size;
      });
    }
    const uint64_t decode_capacity_tokens =
        config_.fleet.decode_capacity_blocks * config_.cache.block_size;
    const uint32_t per_model = config_.fleet.decode_workers_per_model;
    for (size_t m = 0; m < router_.models().size(); ++m) {
      for (uint32_t k = 0; k < per_model; ++k) {
        const auto id = static_cast<WorkerId>(router_.prefill_worker_count() + decode_.size());
        decode_.emplace_back(id, router_.models()[m], config_.fleet.max_batch,
                             decode_capacity_tokens);
      }
    }
    for (const auto& spec : workload_.sessions) {
      spec.validate();
      SessionRuntime rt;
      rt.state.spec = spec;
      if (!sessions_.emplace(spec.session_id, std::move(rt)).second) {
        throw ConfigError("workload: duplicate session id " + std::to_string(spec.session_id));
      }
    }
  }

  SimResult run() {
    for (const auto& spec : workload_.sessions) {
      loop_.schedule(spec.arrival_time, EventKind::kSessionArrival, spec.session_id);
    }
    result_.end_time = loop_.run_until_idle([this](const SimEvent& ev) { handle(ev); },
                                            Duration(config_.run.livelock_bound_us));
    for (const auto& [id, rt] : sessions_) {
      if (rt.state.status != SessionStatus::kDone) {
        throw std::runtime_error("simulation stalled: session " + std::to_string(id) +
                                 " never completed");
      }
    }
    for (const auto& worker : prefill_) {
      result_.evictions += worker.pool().stats().eviction_count;
    }
    for (const auto& worker : decode_) {
      result_.decode_peak_resident_tokens.push_back(worker.peak_resident_tokens());
    }
    result_.events_processed = loop_.processed();
    result_.requests = std::move(records_);
    return std::move(result_);
  }

 private:
  void handle(const SimEvent& ev) {
    switch (ev.kind) {
      case EventKind::kSessionArrival:
        on_session_arrival(ev);
        break;
      case EventKind::kPrefillStart:
        on_prefill_start(ev);
        break;
      case EventKind::kPrefillComplete:
        on_prefill_complete(ev);
        break;
      case EventKind::kHandoffComplete:
        on_handoff_complete(ev);
        break;
      case EventKind::kDecodeStep:
        on_decode_step(ev);
        break;
      case EventKind::kRequestComplete:
        on_request_complete(ev);
        break;
      case EventKind::kSessionComplete:
        on_session_complete(ev);
        break;
    }
  }

  void trace(const SimEvent& ev, const char* session, const char* step,
             const std::string& detail) {
    if (!config_.run.trace) {
      return;
    }
    char head[160];
    std::snprintf(head, sizeof(head), "%" PRId64 " %" PRIu64 " %s %s %s %u ", ev.time.us(),
                  ev.seq, to_string(ev.kind), session, step, ev.worker);
    result_.trace += head;
    result_.trace += detail.empty() ? "-" : detail;
    result_.trace += '\n';
  }

  void trace_request(const SimEvent& ev, const RequestRecord& r, const std::string& detail) {
    if (!config_.run.trace) {
      return;
    }
    const std::string session = std::to_string(r.session_id);
    const std::string step = std::to_string(r.turn) + "." + std::to_string(r.step);
    trace(ev, session.c_str(), step.c_str(), detail);
  }

  // --- sessions -----------------------------------------------------------

  void on_session_arrival(const SimEvent& ev) {
    const auto decision = admission_.admit(ev.session);
    const std::string session = std::to_string(ev.session);
    trace(ev, session.c_str(), "-",
          decision == AdmissionController::Decision::kAdmitted ? "admitted" : "queued");
    if (decision == AdmissionController::Decision::kAdmitted) {
      activate(ev.session);
    }
  }

  void activate(SessionId id) {
    SessionRuntime& rt = sessions_.at(id);
    rt.state.status = SessionStatus::kActive;
    rt.state.context = workload::synth_tokens(workload_.token_seed, id, TokenPurpose::kPrompt, 0,
                                              0, rt.state.spec.initial_prompt_len);
    dispatch_step(rt);
  }

  // Issues the request for the session's current (turn, step).
  void dispatch_step(SessionRuntime& rt) {
    SessionState& s = rt.state;
    const AgentProfile& agent = s.current_agent();
    const TokenSeq extension =
        workload::synth_tokens(workload_.token_seed, s.spec.session_id, TokenPurpose::kExtension,
                               s.turn_index, s.step_index, agent.input_extension_len);

    RequestRecord rec;
    rec.request_id = records_.size();
    rec.session_id = s.spec.session_id;
    rec.model_id = agent.model_id;
    rec.turn = s.turn_index;
    rec.step = s.step_index;
    rec.output_len = agent.output_len;
    rec.issue_time = rt.first_request_issued ? loop_.now() : s.spec.arrival_time;
    rt.first_request_issued = true;

    TokenSeq context;
    if (s.spec.shape == SessionShape::kChain) {
      extend_context(s, extension);
      context = s.context;
    } else {
      context = s.context;
      context.append(extension);
    }
    rec.prompt_tokens = context.size();

    std::vector<size_t> loads;
    loads.reserve(prefill_.size());
    for (const auto& w : prefill_) {
      loads.push_back(w.load());
    }
    rec.prefill_worker = router_.route_prefill(s.spec.session_id, agent.model_id, loads);
    if (router_.mode() == ServingMode::kPrefillShare) {
      s.pinned_prefill_worker = rec.prefill_worker;
    }

    Request req;
    req.request_id = rec.request_id;
    req.session_id = s.spec.session_id;
    req.model_id = agent.model_id;
    req.context_snapshot = std::move(context);
    req.output_len = agent.output_len;
    req.issue_time = rec.issue_time;
    req.turn = s.turn_index;
    req.step = s.step_index;

    records_.push_back(std::move(rec));
    requests_.push_back(std::move(req));
    inflight_.push_back(InFlight{router_.namespace_for(agent.model_id), {}, {}});

    PrefillWorker& worker = prefill_[records_.back().prefill_worker];
    if (worker.enqueue(records_.back().request_id)) {
      loop_.schedule(loop_.now(), EventKind::kPrefillStart, s.spec.session_id, 0, worker.id());
    }
  }

  void on_request_complete(const SimEvent& ev) {
    const RequestRecord& rec = records_[ev.request];
    SessionRuntime& rt = sessions_.at(rec.session_id);
    SessionState& s = rt.state;
    trace_request(ev, rec, "tokens=" + std::to_string(rec.token_times.size()));
    requests_[ev.request].context_snapshot = TokenSeq();

    const AgentProfile& agent = s.current_agent();
    const TokenSeq output =
        workload::synth_tokens(workload_.token_seed, s.spec.session_id, TokenPurpose::kOutput,
                               s.turn_index, s.step_index, agent.output_len);
    if (s.spec.shape == SessionShape::kChain) {
      extend_context(s, output);
    } else {
      rt.branch_outputs.push_back(output);
    }

    if (++s.step_index == s.spec.agent_chain.size()) {
      if (s.spec.shape == SessionShape::kFanOut) {
        commit_fan_out_turn(rt);
      }
      s.step_index = 0;
      ++s.turn_index;
    }
    if (s.turn_index == s.spec.turns) {
      loop_.schedule(loop_.now(), EventKind::kSessionComplete, s.spec.session_id);
    } else {
      dispatch_step(rt);
    }
  }

  void commit_fan_out_turn(SessionRuntime& rt) {
    SessionState& s = rt.state;
    for (uint32_t a = 0; a < s.spec.agent_chain.size(); ++a) {
      extend_context(s, workload::synth_tokens(workload_.token_seed, s.spec.session_id,
                                               TokenPurpose::kExtension, s.turn_index, a,
                                               s.spec.agent_chain[a].input_extension_len));
      extend_context(s, rt.branch_outputs[a]);
    }
    rt.branch_outputs.clear();
  }

  void fail_request(const SimEvent& ev, RequestRecord& rec) {
    rec.failed = true;
    ++result_.failed_requests;
    ++result_.failed_sessions;
    trace_request(ev, rec, "failed=CapacityExhausted");
    requests_[rec.request_id].context_snapshot = TokenSeq();
    SessionState& s = sessions_.at(rec.session_id).state;
    s.failed = true;
    loop_.schedule(loop_.now(), EventKind::kSessionComplete, s.spec.session_id);
  }

  void on_session_complete(const SimEvent& ev) {
    SessionState& s = sessions_.at(ev.session).state;
    s.status = SessionStatus::kDone;
    if (!s.failed) {
      ++result_.sessions_completed;
    }
    const std::string session = std::to_string(ev.session);
    trace(ev, session.c_str(), "-",
          "context=" + std::to_string(s.context.size()) + (s.failed ? " failed" : ""));
    s.context = TokenSeq();
    if (auto next = admission_.complete()) {
      activate(*next);
    }
  }

  // --- prefill ------------------------------------------------------------

  void on_prefill_start(const SimEvent& ev) {
    PrefillWorker& worker = prefill_[ev.worker];
    const RequestId id = worker.start_next();
    RequestRecord& rec = records_[id];
    const Request& req = requests_[id];
    InFlight& fl = inflight_[id];

    kv::PrefixMatch match =
        worker.pool().longest_prefix_match(fl.ns, req.context_snapshot, loop_.now());
    fl.lookup_pins = std::move(match.blocks);
    rec.matched_tokens = match.matched_tokens;
    rec.prefill_start = loop_.now();

    NamespaceStats& ns = result_.namespaces[fl.ns];
    ns.matched_tokens += match.matched_tokens;
    ns.lookup_tokens += req.context_snapshot.size();
    result_.matched_tokens += match.matched_tokens;
    result_.lookup_tokens += req.context_snapshot.size();

    const Duration d = cost_.prefill_time(req.context_snapshot.size() - match.matched_tokens);
    trace_request(ev, rec,
                  "req=" + std::to_string(id) + " ns=" + fl.ns.to_string() +
                      " matched=" + std::to_string(match.matched_tokens) +
                      " new=" + std::to_string(req.context_snapshot.size() - match.matched_tokens));
    loop_.schedule(loop_.now() + d, EventKind::kPrefillComplete, req.session_id, id,
                   worker.id());
  }

  void on_prefill_complete(const SimEvent& ev) {
    PrefillWorker& worker = prefill_[ev.worker];
    RequestRecord& rec = records_[ev.request];
    const Request& req = requests_[ev.request];
    InFlight& fl = inflight_[ev.request];
    rec.prefill_end = loop_.now();

    bool ok = true;
    try {
      kv::InsertResult ins = worker.pool().insert(fl.ns, req.context_snapshot, loop_.now(), true);
      const uint64_t added = ins.allocated.size() * config_.cache.block_size;
      ns_current_[fl.ns] += added;
      total_current_ += added;
      NamespaceStats& ns = result_.namespaces[fl.ns];
      ns.peak_footprint_tokens = std::max(ns.peak_footprint_tokens, ns_current_[fl.ns]);
      result_.peak_footprint_tokens = std::max(result_.peak_footprint_tokens, total_current_);
      fl.path_pins = std::move(ins.pinned);
    } catch (const CapacityExhausted&) {
      ok = false;
    }
    worker.pool().release(fl.lookup_pins);
    fl.lookup_pins.clear();

    if (worker.finish()) {
      loop_.schedule(loop_.now(), EventKind::kPrefillStart, 0, 0, worker.id());
    }
    if (!ok) {
      fail_request(ev, rec);
      return;
    }
    handoff(ev, rec, req);
  }

  // --- handoff / decode ---------------------------------------------------

  void handoff(const SimEvent& ev, RequestRecord& rec, const Request& req) {
    std::vector<uint64_t> resident;
    resident.reserve(decode_.size());
    for (const auto& w : decode_) {
      resident.push_back(w.resident_tokens());
    }
    rec.decode_worker = router_.route_decode(req.model_id, resident);
    const DecodeWorker& target = decode_[rec.decode_worker - router_.prefill_worker_count()];
    const double fraction = target.resident_fraction();
    rec.staged = cost_.staging_engaged(fraction);
    rec.handoff_duration = cost_.handoff_time(req.context_snapshot.size(), fraction);
    if (rec.staged) {
      ++result_.staged_handoffs;
    }
    trace_request(ev, rec,
                  "req=" + std::to_string(rec.request_id) +
                      " decode=" + std::to_string(rec.decode_worker) +
                      " handoff_us=" + std::to_string(rec.handoff_duration.us()) +
                      (rec.staged ? " staged" : ""));
    loop_.schedule(loop_.now() + rec.handoff_duration, EventKind::kHandoffComplete,
                   req.session_id, rec.request_id, rec.decode_worker);
  }

  void on_handoff_complete(const SimEvent& ev) {
    RequestRecord& rec = records_[ev.request];
    InFlight& fl = inflight_[ev.request];
    rec.handoff_end = loop_.now();
    prefill_[rec.prefill_worker].pool().release(fl.path_pins);
    fl.path_pins.clear();
    trace_request(ev, rec, "req=" + std::to_string(rec.request_id));

    DecodeWorker& worker = decode_[ev.worker - router_.prefill_worker_count()];
    const Duration reload = rec.staged ? rec.handoff_duration : Duration{};
    if (worker.join(rec.request_id, rec.output_len, rec.prompt_tokens, reload)) {
      start_decode_step(worker);
    }
  }

  void start_decode_step(DecodeWorker& worker) {
    const uint64_t resident = worker.resident_tokens();
    const size_t batch = worker.begin_step();
    if (batch == 0) {
      return;
    }
    const Duration d = cost_.decode_step_time(batch, resident) + worker.step_reload();
    loop_.schedule(loop_.now() + d, EventKind::kDecodeStep, 0, 0, worker.id());
  }

  void on_decode_step(const SimEvent& ev) {
    DecodeWorker& worker = decode_[ev.worker - router_.prefill_worker_count()];
    const auto outcome = worker.end_step();
    for (RequestId id : outcome.advanced) {
      records_[id].token_times.push_back(loop_.now());
    }
    trace(ev, "-", "-",
          "batch=" + std::to_string(outcome.advanced.size()) +
              " done=" + std::to_string(outcome.completed.size()));
    for (RequestId id : outcome.completed) {
      loop_.schedule(loop_.now(), EventKind::kRequestComplete, records_[id].session_id, id,
                     worker.id());
    }
    start_decode_step(worker);
  }

  SimulationConfig config_;
  workload::Workload workload_;
  cost::CostModel cost_;
  Router router_;
  AdmissionController admission_;
  EventLoop loop_;
  std::vector<PrefillWorker> prefill_;
  std::vector<DecodeWorker> decode_;
  std::map<SessionId, SessionRuntime> sessions_;
  std::vector<RequestRecord> records_;
  std::vector<Request> requests_;
  std::vector<InFlight> inflight_;
  std::map<kv::Namespace, uint64_t> ns_current_;
  uint64_t total_current_ = 0;
  SimResult result_;
};

ServingSimulator::ServingSimulator(SimulationConfig config, workload::Workload workload)
    : impl_(std::make_unique<Impl>(std::move(config), std::move(workload))) {}

ServingSimulator::~ServingSimulator() = default;

SimResult ServingSimulator::run() { return impl_->run(); }

SimResult simulate(const SimulationConfig& config, const workload::Workload& workload) {
  return ServingSimulator(config, workload).run();
}

}  // namespace prefixsim::router
