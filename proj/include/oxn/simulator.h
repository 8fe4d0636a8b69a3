// Copyright 2026 The OXN Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Deterministic discrete-event simulation of a microservice call graph.
//
// A request enters at the entry service, waits for a free worker (FIFO),
// is processed for a lognormally distributed service time and then fans
// out in parallel along the outgoing call edges. A call completes once its
// own processing and all of its sub-calls are done. Every step is reported
// as a RawEvent which the telemetry layer turns into metrics and traces.
//
// Faults are modifiers evaluated by the event loop; they never mutate the
// SueSpec, so reverting a fault at its end time restores the original
// behavior exactly.

#pragma once

#include <cstdint>
#include <deque>
#include <functional>
#include <map>
#include <queue>
#include <span>
#include <string>
#include <vector>

#include "oxn/config.h"
#include "oxn/rng.h"
#include "oxn/treatments.h"

namespace oxn {

using ServiceIndex = std::uint16_t;
using RequestId = std::uint32_t;
using UserId = std::uint32_t;

enum class Outcome : std::uint8_t { kOk, kError, kTimeout };

std::string_view outcome_name(Outcome o);

enum class RawEventKind : std::uint8_t {
  kSpanOpen,
  kSpanClose,
  kCounterIncrement,
  kCpuBusy,
  // Queue depth (waiting + in service) of a service changed; feeds
  // custom_gauge points. Only emitted when enabled in SimOptions.
  kGaugeSet,
};

/// Instrumentation event emitted by the simulator.
struct RawEvent {
  RawEventKind kind = RawEventKind::kCounterIncrement;
  Outcome outcome = Outcome::kOk;  // kSpanClose
  ServiceIndex service = 0;
  Millis time = 0;
  std::uint64_t trace_id = 0;        // span events
  std::uint64_t span_id = 0;         // span events
  std::uint64_t parent_span_id = 0;  // kSpanOpen; 0 for roots
  double value = 0.0;                // busy ms (kCpuBusy) or depth (kGaugeSet)

  bool operator==(const RawEvent&) const = default;
};

/// One call's path through a service, as seen by the simulator.
struct HopRecord {
  ServiceIndex service = 0;
  Millis sent = 0;        // when the caller issued the call
  Millis network_ms = 0;  // base latency plus fault penalties
  Millis arrival = 0;
  Millis start = -1;      // processing start; -1 if never processed
  Millis service_ms = 0;  // drawn processing time
  Millis end = 0;         // call completion
  Outcome outcome = Outcome::kOk;
};

struct RequestRecord {
  RequestId id = 0;
  UserId user = 0;
  Millis start = 0;
  Millis end = -1;  // -1 while outstanding
  Outcome outcome = Outcome::kOk;
  std::vector<HopRecord> hops;  // hops[0] is the entry call

  bool finished() const { return end >= 0; }
};

struct SimOptions {
  Millis client_timeout = 10 * kMillisPerSecond;
  bool emit_queue_gauge = false;
  bool record_hops = true;
};

/// Simulation state for one run. Single-threaded; may be moved between
/// threads but never shared.
class Simulation {
 public:
  Simulation(SueSpec sue, std::uint64_t seed, FaultSchedule schedule = {},
             SimOptions options = {});

  Simulation(Simulation&&) = default;
  Simulation& operator=(Simulation&&) = default;
  Simulation(const Simulation&) = delete;
  Simulation& operator=(const Simulation&) = delete;

  /// Schedules a request from `user` arriving at the entry service at
  /// `at` (which must not lie in the past).
  RequestId issue_request(UserId user, Millis at);

  /// Processes every event with timestamp <= t and advances the clock to t.
  void run_until(Millis t);

  /// Schedules an arbitrary action inside the event loop.
  void schedule_action(Millis at, std::function<void(Simulation&, Millis)> action);

  /// Called once per request when it completes, fails or times out.
  void on_request_finished(std::function<void(Simulation&, const RequestRecord&)> callback);

  Millis now() const { return now_; }
  const SueSpec& sue() const { return sue_; }
  std::uint64_t seed() const { return seed_; }
  const FaultSchedule& schedule() const { return schedule_; }
  ServiceIndex service_index(std::string_view id) const;
  ServiceIndex entry_service() const { return entry_; }

  const std::vector<RawEvent>& events() const { return events_; }
  std::vector<RawEvent> take_events() { return std::move(events_); }
  const std::vector<RequestRecord>& requests() const { return requests_; }

  /// Requests issued but not yet finished from the client's point of view.
  int outstanding_requests() const { return outstanding_; }
  int max_outstanding_requests() const { return max_outstanding_; }
  std::size_t pending_events() const { return queue_.size(); }
  /// Calls fully processed by a service so far.
  std::uint64_t processed_calls(ServiceIndex s) const { return services_[s].processed; }
  bool fault_active(ServiceIndex s) const;

 private:
  enum class EventType : std::uint8_t {
    kArrive,
    kServiceDone,
    kFail,
    kTimeout,
    kFaultStart,
    kFaultEnd,
    kAction,
  };

  struct Event {
    Millis time;
    std::uint64_t seq;
    EventType type;
    std::uint32_t a;
    std::uint32_t b;
    bool operator>(const Event& o) const {
      return time != o.time ? time > o.time : seq > o.seq;
    }
  };

  struct Call {
    RequestId request;
    ServiceIndex service;
    std::int32_t parent;  // call index, -1 for the root
    std::uint32_t hop;    // index into the request's hops
    std::uint64_t span_id;
    std::uint32_t pending_children = 0;
    bool processed = false;
    bool done = false;
    bool in_service = false;
    bool corrupted = false;
    Outcome outcome = Outcome::kOk;
    // Remaining processing when the service was paused mid-call.
    Millis frozen_remaining = -1;
  };

  struct ServiceState {
    int busy = 0;
    std::deque<std::uint32_t> queue;
    std::uint64_t processed = 0;
    Rng service_rng;
    // Active fault indices into schedule_.entries.
    std::vector<std::uint32_t> active;
    bool paused = false;
    bool killed = false;
    Millis pause_started = 0;
    std::vector<std::uint32_t> frozen;  // in-service calls held by a pause
  };

  struct OutEdge {
    ServiceIndex callee;
    double calls_per_request;
    Millis latency_ms;
    Rng fanout_rng;
  };

  void push(Millis t, EventType type, std::uint32_t a = 0, std::uint32_t b = 0);
  void dispatch(const Event& e);
  void emit(RawEvent e) { events_.push_back(e); }
  void emit_depth(ServiceIndex s);

  std::uint32_t new_call(RequestId request, ServiceIndex service, std::int32_t parent, Millis sent,
                         Millis network_ms, bool corrupted);
  void arrive(std::uint32_t call);
  void try_start(ServiceIndex s);
  void start_processing(std::uint32_t call);
  void service_done(std::uint32_t call);
  void finish_processing(std::uint32_t call);
  void complete(std::uint32_t call, Outcome outcome);
  void finish_request(RequestRecord& r, Millis end, Outcome outcome);
  void timeout(RequestId request);
  void fault_start(std::uint32_t index);
  void fault_end(std::uint32_t index);

  const ScheduledFault* active_fault(ServiceIndex s) const;
  double stress_factor(ServiceIndex s) const;

  SueSpec sue_;
  std::uint64_t seed_;
  FaultSchedule schedule_;
  SimOptions options_;
  Millis now_ = 0;
  std::uint64_t next_seq_ = 0;
  ServiceIndex entry_ = 0;

  std::priority_queue<Event, std::vector<Event>, std::greater<>> queue_;
  std::vector<ServiceState> services_;
  std::vector<std::vector<OutEdge>> out_edges_;
  std::vector<ServiceIndex> fault_targets_;
  Rng fault_rng_;

  std::vector<Call> calls_;
  std::vector<RequestRecord> requests_;
  std::vector<RawEvent> events_;
  std::map<std::uint32_t, std::function<void(Simulation&, Millis)>> actions_;
  std::uint32_t next_action_ = 0;
  std::vector<std::function<void(Simulation&, const RequestRecord&)>> listeners_;
  int outstanding_ = 0;
  int max_outstanding_ = 0;
};

}  // namespace oxn
