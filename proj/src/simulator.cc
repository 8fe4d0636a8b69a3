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

#include "oxn/simulator.h"

#include <algorithm>
#include <cmath>

namespace oxn {

std::string_view outcome_name(Outcome o) {
  switch (o) {
    case Outcome::kOk:
      return "ok";
    case Outcome::kError:
      return "error";
    case Outcome::kTimeout:
      return "timeout";
  }
  return "?";
}

namespace {

template <class... Ts>
struct Overloaded : Ts... {
  using Ts::operator()...;
};

Millis to_millis(double ms) { return static_cast<Millis>(std::llround(std::max(0.0, ms))); }

}  // namespace

Simulation::Simulation(SueSpec sue, std::uint64_t seed, FaultSchedule schedule, SimOptions options)
    : sue_(std::move(sue)),
      seed_(seed),
      schedule_(std::move(schedule)),
      options_(options),
      fault_rng_(Rng(seed).split("faults")) {
  if (sue_.services.empty()) throw ConfigError("SUE has no services");
  const Rng root(seed);
  services_.resize(sue_.services.size());
  out_edges_.resize(sue_.services.size());
  for (std::size_t i = 0; i < sue_.services.size(); ++i) {
    services_[i].service_rng = root.split("service:" + sue_.services[i].id);
  }
  for (const auto& e : sue_.edges) {
    const ServiceIndex caller = service_index(e.caller);
    out_edges_[caller].push_back({service_index(e.callee), e.calls_per_request, e.latency_ms,
                                  root.split("edge:" + e.caller + "->" + e.callee)});
  }
  const auto entries = sue_.entry_services();
  if (entries.size() != 1) throw ConfigError("SUE must have exactly one entry service");
  entry_ = service_index(entries.front());

  for (std::uint32_t i = 0; i < schedule_.entries.size(); ++i) {
    const auto& f = schedule_.entries[i];
    fault_targets_.push_back(service_index(f.target));
    push(f.start, EventType::kFaultStart, i);
    push(f.end, EventType::kFaultEnd, i);
  }
}

ServiceIndex Simulation::service_index(std::string_view id) const {
  for (std::size_t i = 0; i < sue_.services.size(); ++i) {
    if (sue_.services[i].id == id) return static_cast<ServiceIndex>(i);
  }
  throw ConfigError("unknown service '" + std::string(id) + "'");
}

void Simulation::push(Millis t, EventType type, std::uint32_t a, std::uint32_t b) {
  queue_.push(Event{t, next_seq_++, type, a, b});
}

RequestId Simulation::issue_request(UserId user, Millis at) {
  if (at < now_) throw RuntimeError("request issued in the past");
  const auto id = static_cast<RequestId>(requests_.size());
  RequestRecord r;
  r.id = id;
  r.user = user;
  r.start = at;
  requests_.push_back(std::move(r));
  const std::uint32_t root = new_call(id, entry_, -1, at, 0, false);
  push(at, EventType::kArrive, root);
  push(at + options_.client_timeout, EventType::kTimeout, id);
  ++outstanding_;
  max_outstanding_ = std::max(max_outstanding_, outstanding_);
  return id;
}

void Simulation::schedule_action(Millis at, std::function<void(Simulation&, Millis)> action) {
  if (at < now_) throw RuntimeError("action scheduled in the past");
  const std::uint32_t id = next_action_++;
  actions_.emplace(id, std::move(action));
  push(at, EventType::kAction, id);
}

void Simulation::on_request_finished(std::function<void(Simulation&, const RequestRecord&)> callback) {
  listeners_.push_back(std::move(callback));
}

void Simulation::run_until(Millis t) {
  if (t < now_) throw RuntimeError("run_until target lies in the past");
  while (!queue_.empty() && queue_.top().time <= t) {
    const Event e = queue_.top();
    queue_.pop();
    now_ = e.time;
    dispatch(e);
  }
  now_ = t;
}

void Simulation::dispatch(const Event& e) {
  switch (e.type) {
    case EventType::kArrive:
      arrive(e.a);
      break;
    case EventType::kServiceDone:
      service_done(e.a);
      break;
    case EventType::kFail:
      if (!calls_[e.a].done) complete(e.a, Outcome::kError);
      break;
    case EventType::kTimeout:
      timeout(e.a);
      break;
    case EventType::kFaultStart:
      fault_start(e.a);
      break;
    case EventType::kFaultEnd:
      fault_end(e.a);
      break;
    case EventType::kAction: {
      auto node = actions_.extract(e.a);
      node.mapped()(*this, now_);
      break;
    }
  }
}

bool Simulation::fault_active(ServiceIndex s) const { return !services_[s].active.empty(); }

const ScheduledFault* Simulation::active_fault(ServiceIndex s) const {
  const auto& active = services_[s].active;
  return active.empty() ? nullptr : &schedule_.entries[active.back()];
}

double Simulation::stress_factor(ServiceIndex s) const {
  double factor = 1.0;
  for (std::uint32_t i : services_[s].active) {
    if (const auto* st = std::get_if<StressFault>(&schedule_.entries[i].effect)) factor *= st->factor;
  }
  return factor;
}

void Simulation::emit_depth(ServiceIndex s) {
  if (!options_.emit_queue_gauge) return;
  RawEvent ev;
  ev.kind = RawEventKind::kGaugeSet;
  ev.service = s;
  ev.time = now_;
  ev.value = static_cast<double>(services_[s].busy + services_[s].queue.size());
  emit(ev);
}

std::uint32_t Simulation::new_call(RequestId request, ServiceIndex service, std::int32_t parent,
                                   Millis sent, Millis network_ms, bool corrupted) {
  Call c;
  c.request = request;
  c.service = service;
  c.parent = parent;
  c.span_id = calls_.size() + 1;
  c.corrupted = corrupted;
  auto& hops = requests_[request].hops;
  c.hop = static_cast<std::uint32_t>(hops.size());
  if (options_.record_hops || parent < 0) {
    HopRecord h;
    h.service = service;
    h.sent = sent;
    h.network_ms = network_ms;
    h.arrival = sent + network_ms;
    hops.push_back(h);
  } else {
    c.hop = 0;
  }
  calls_.push_back(c);
  return static_cast<std::uint32_t>(calls_.size() - 1);
}

void Simulation::arrive(std::uint32_t id) {
  Call& c = calls_[id];
  RawEvent open;
  open.kind = RawEventKind::kSpanOpen;
  open.service = c.service;
  open.time = now_;
  open.trace_id = c.request + 1ULL;
  open.span_id = c.span_id;
  open.parent_span_id = c.parent < 0 ? 0 : calls_[c.parent].span_id;
  emit(open);

  ServiceState& s = services_[c.service];
  const ServiceSpec& spec = sue_.services[c.service];
  if (s.killed || c.corrupted) {
    push(now_ + to_millis(spec.error_response_time_ms), EventType::kFail, id);
    return;
  }
  s.queue.push_back(id);
  emit_depth(c.service);
  try_start(c.service);
}

void Simulation::try_start(ServiceIndex sidx) {
  ServiceState& s = services_[sidx];
  while (!s.paused && !s.killed && !s.queue.empty() &&
         s.busy < sue_.services[sidx].workers) {
    const std::uint32_t id = s.queue.front();
    s.queue.pop_front();
    start_processing(id);
  }
}

void Simulation::start_processing(std::uint32_t id) {
  Call& c = calls_[id];
  ServiceState& s = services_[c.service];
  const ServiceSpec& spec = sue_.services[c.service];
  ++s.busy;
  c.in_service = true;
  const double factor = stress_factor(c.service);
  const Millis service_ms =
      to_millis(s.service_rng.lognormal_median(spec.service_time.median_ms * factor,
                                               spec.service_time.sigma));
  if (options_.record_hops) {
    auto& hop = requests_[c.request].hops[c.hop];
    hop.start = now_;
    hop.service_ms = service_ms;
  }
  RawEvent busy;
  busy.kind = RawEventKind::kCpuBusy;
  busy.service = c.service;
  busy.time = now_;
  busy.value = spec.cpu_per_request_ms * factor;
  if (busy.value > 0) emit(busy);
  push(now_ + service_ms, EventType::kServiceDone, id);
}

void Simulation::service_done(std::uint32_t id) {
  Call& c = calls_[id];
  if (c.done || !c.in_service) return;  // dropped by a kill
  ServiceState& s = services_[c.service];
  if (s.paused) {
    // Suspended mid-processing: remember the work left at pause start.
    c.frozen_remaining = now_ - s.pause_started;
    s.frozen.push_back(id);
    return;
  }
  finish_processing(id);
}

void Simulation::finish_processing(std::uint32_t id) {
  Call& c = calls_[id];
  ServiceState& s = services_[c.service];
  --s.busy;
  c.in_service = false;
  c.processed = true;
  ++s.processed;

  RawEvent inc;
  inc.kind = RawEventKind::kCounterIncrement;
  inc.service = c.service;
  inc.time = now_;
  emit(inc);
  emit_depth(c.service);

  // Fan out along the call graph. Fractional calls-per-request resolve
  // through a per-edge Bernoulli draw.
  const ServiceIndex sidx = c.service;
  const RequestId request = c.request;
  std::uint32_t spawned = 0;
  for (auto& edge : out_edges_[sidx]) {
    const double whole = std::floor(edge.calls_per_request);
    int n = static_cast<int>(whole);
    if (edge.fanout_rng.bernoulli(edge.calls_per_request - whole)) ++n;
    for (int k = 0; k < n; ++k) {
      Millis network = edge.latency_ms;
      bool corrupted = false;
      double retransmit_cpu = 0.0;
      if (const auto* f = active_fault(edge.callee)) {
        std::visit(
            Overloaded{[](const PauseFault&) {}, [](const KillFault&) {}, [](const StressFault&) {},
                       [&](const NetworkDelayFault& d) {
                         network += to_millis(fault_rng_.uniform(static_cast<double>(d.min_ms),
                                                                 static_cast<double>(d.max_ms)));
                       },
                       [&](const PacketLossFault& l) {
                         const auto retransmits = fault_rng_.geometric_failures(l.probability);
                         network += static_cast<Millis>(retransmits) * l.retransmit_delay_ms;
                         retransmit_cpu = static_cast<double>(retransmits) * l.retransmit_cpu_ms;
                       },
                       [&](const PacketCorruptionFault& l) {
                         const auto retransmits = fault_rng_.geometric_failures(l.probability);
                         network += static_cast<Millis>(retransmits) * l.retransmit_delay_ms;
                         retransmit_cpu = static_cast<double>(retransmits) * l.retransmit_cpu_ms;
                         corrupted = fault_rng_.bernoulli(l.probability);
                       }},
            f->effect);
      }
      if (retransmit_cpu > 0) {
        RawEvent busy;
        busy.kind = RawEventKind::kCpuBusy;
        busy.service = edge.callee;
        busy.time = now_;
        busy.value = retransmit_cpu;
        emit(busy);
      }
      const std::uint32_t child =
          new_call(request, edge.callee, static_cast<std::int32_t>(id), now_, network, corrupted);
      push(now_ + network, EventType::kArrive, child);
      ++spawned;
    }
  }
  calls_[id].pending_children = spawned;
  try_start(sidx);
  if (spawned == 0) complete(id, calls_[id].outcome);
}

void Simulation::complete(std::uint32_t id, Outcome outcome) {
  Call& c = calls_[id];
  c.done = true;
  c.outcome = outcome;
  RawEvent close;
  close.kind = RawEventKind::kSpanClose;
  close.outcome = outcome;
  close.service = c.service;
  close.time = now_;
  close.trace_id = c.request + 1ULL;
  close.span_id = c.span_id;
  emit(close);

  RequestRecord& r = requests_[c.request];
  if (options_.record_hops || c.parent < 0) {
    auto& hop = r.hops[c.hop];
    hop.end = now_;
    hop.outcome = outcome;
  }

  if (c.parent < 0) {
    if (!r.finished()) finish_request(r, now_, outcome);
    return;
  }
  Call& parent = calls_[c.parent];
  if (outcome != Outcome::kOk) parent.outcome = Outcome::kError;
  if (parent.done) return;
  if (--parent.pending_children == 0 && parent.processed) {
    complete(static_cast<std::uint32_t>(c.parent), parent.outcome);
  }
}

void Simulation::finish_request(RequestRecord& r, Millis end, Outcome outcome) {
  r.end = end;
  r.outcome = outcome;
  --outstanding_;
  for (auto& listener : listeners_) listener(*this, r);
}

void Simulation::timeout(RequestId request) {
  RequestRecord& r = requests_[request];
  if (r.finished()) return;
  finish_request(r, now_, Outcome::kTimeout);
}

void Simulation::fault_start(std::uint32_t index) {
  const ServiceIndex target = fault_targets_[index];
  ServiceState& s = services_[target];
  s.active.push_back(index);
  const auto& effect = schedule_.entries[index].effect;
  if (std::holds_alternative<PauseFault>(effect)) {
    s.paused = true;
    s.pause_started = now_;
  } else if (std::holds_alternative<KillFault>(effect)) {
    s.killed = true;
    // Crash: everything waiting or in service fails immediately.
    std::vector<std::uint32_t> dropped(s.queue.begin(), s.queue.end());
    s.queue.clear();
    for (std::uint32_t id = 0; id < calls_.size(); ++id) {
      if (calls_[id].service == target && calls_[id].in_service) dropped.push_back(id);
    }
    std::sort(dropped.begin(), dropped.end());
    for (std::uint32_t id : dropped) {
      Call& c = calls_[id];
      if (c.in_service) {
        c.in_service = false;
        --s.busy;
      }
      complete(id, Outcome::kError);
    }
    s.frozen.clear();
    emit_depth(target);
  }
}

void Simulation::fault_end(std::uint32_t index) {
  const ServiceIndex target = fault_targets_[index];
  ServiceState& s = services_[target];
  s.active.erase(std::find(s.active.begin(), s.active.end(), index));
  const auto& effect = schedule_.entries[index].effect;
  if (std::holds_alternative<PauseFault>(effect)) {
    s.paused = false;
    for (std::uint32_t id : s.frozen) {
      push(now_ + calls_[id].frozen_remaining, EventType::kServiceDone, id);
    }
    s.frozen.clear();
    try_start(target);
  } else if (std::holds_alternative<KillFault>(effect)) {
    s.killed = false;
  }
}

}  // namespace oxn
