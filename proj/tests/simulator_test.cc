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


#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>

#include "oxn/simulator.h"
#include "oxn/treatments.h"
#include "oxn/workload.h"

namespace oxn {
namespace {

ServiceSpec svc(const std::string& id, double median, double sigma = 0.0, int workers = 1,
                double cpu = 0.0) {
  ServiceSpec s;
  s.id = id;
  s.workers = workers;
  s.service_time = {median, sigma};
  s.cpu_per_request_ms = cpu;
  s.error_response_time_ms = 2.0;
  return s;
}

FaultSchedule one_fault(FaultEffect effect, const std::string& target, Millis start, Millis end) {
  return FaultSchedule{{{"f", target, effect, start, end}}};
}

SueSpec fanout_sue() {
  SueSpec sue;
  sue.services = {svc("a", 4, 0.5, 4, 1.0), svc("b", 6, 0.6, 2, 2.0), svc("c", 3, 0.4, 1, 1.0)};
  sue.edges = {{"a", "b", 1.0, 2}, {"a", "c", 0.5, 1}};
  return sue;
}

TEST(SimulationTest, SingleServiceLatency) {
  SueSpec sue;
  sue.services = {svc("a", 10)};
  Simulation sim(sue, 1);
  sim.issue_request(0, 100);
  sim.run_until(1000);
  ASSERT_EQ(sim.requests().size(), 1u);
  EXPECT_EQ(sim.requests()[0].end - sim.requests()[0].start, 10);
  EXPECT_EQ(sim.now(), 1000);
}

TEST(SimulationTest, ChainLatencyIsAdditive) {
  SueSpec sue;
  sue.services = {svc("a", 10), svc("b", 10)};
  sue.edges = {{"a", "b", 1.0, 5}};
  Simulation sim(sue, 1);
  sim.issue_request(0, 0);
  sim.run_until(1000);
  EXPECT_EQ(sim.requests()[0].end - sim.requests()[0].start, 25);
}

TEST(SimulationTest, SeedsDetermineEvents) {
  auto run = [](std::uint64_t seed) {
    Simulation sim(fanout_sue(), seed);
    WorkloadSpec w;
    w.users = 5;
    w.duration = 20000;
    w.think_time = {200, 0.5};
    run_workload(sim, w);
    return sim.take_events();
  };
  const auto a = run(1), b = run(1), c = run(2);
  EXPECT_EQ(a, b);
  ASSERT_FALSE(a.empty());
  ASSERT_FALSE(c.empty());
  EXPECT_NE(a.front().time, c.front().time);
}

TEST(SimulationTest, EventsAreTimeOrdered) {
  Simulation sim(fanout_sue(), 3);
  WorkloadSpec w;
  w.users = 20;
  w.duration = 30000;
  w.think_time = {50, 0.5};
  run_workload(sim, w);
  const auto& ev = sim.events();
  for (std::size_t i = 1; i < ev.size(); ++i) ASSERT_LE(ev[i - 1].time, ev[i].time);
}

// Reference replay: given the recorded arrivals and service-time draws,
// recompute FIFO starts per service and request latencies from scratch.
TEST(SimulationTest, MatchesFifoReplay) {
  const SueSpec sue = fanout_sue();
  Simulation sim(sue, 5);
  WorkloadSpec w;
  w.users = 50;
  w.duration = 60000;
  w.think_time = {100, 0.5};
  run_workload(sim, w);

  struct Item {
    Millis ready;
    std::size_t request;
    std::size_t hop;
  };
  const auto& reqs = sim.requests();
  std::map<std::pair<std::size_t, std::size_t>, Millis> start, done;

  auto replay = [&](ServiceIndex s, std::vector<Item> items) {
    std::stable_sort(items.begin(), items.end(),
                     [](const Item& x, const Item& y) { return x.ready < y.ready; });
    std::vector<Millis> free_at(sue.services[s].workers, 0);
    for (const auto& it : items) {
      auto slot = std::min_element(free_at.begin(), free_at.end());
      const Millis st = std::max(*slot, it.ready);
      const Millis fin = st + reqs[it.request].hops[it.hop].service_ms;
      *slot = fin;
      start[{it.request, it.hop}] = st;
      done[{it.request, it.hop}] = fin;
    }
  };

  std::vector<Item> entry;
  for (std::size_t r = 0; r < reqs.size(); ++r) entry.push_back({reqs[r].start, r, 0});
  replay(0, entry);
  for (ServiceIndex s : {ServiceIndex{1}, ServiceIndex{2}}) {
    std::vector<Item> items;
    for (std::size_t r = 0; r < reqs.size(); ++r) {
      for (std::size_t h = 1; h < reqs[r].hops.size(); ++h) {
        const auto& hop = reqs[r].hops[h];
        if (hop.service != s) continue;
        items.push_back({done[{r, 0}] + hop.network_ms, r, h});
      }
    }
    replay(s, items);
  }

  std::size_t exact = 0, total = 0;
  double sim_latency = 0.0, ref_latency = 0.0;
  std::size_t finished = 0;
  for (std::size_t r = 0; r < reqs.size(); ++r) {
    if (!reqs[r].finished()) continue;
    Millis end = done[{r, 0}];
    for (std::size_t h = 0; h < reqs[r].hops.size(); ++h) {
      ++total;
      if (start[{r, h}] == reqs[r].hops[h].start) ++exact;
      end = std::max(end, done[{r, h}]);
    }
    sim_latency += static_cast<double>(reqs[r].end - reqs[r].start);
    ref_latency += static_cast<double>(end - reqs[r].start);
    ++finished;
  }
  ASSERT_GT(finished, 1000u);
  EXPECT_GE(static_cast<double>(exact) / total, 0.99);
  EXPECT_NEAR(sim_latency / finished, ref_latency / finished, 0.1 * ref_latency / finished);
}

TEST(SimulationTest, SpansNestAndClose) {
  Simulation sim(fanout_sue(), 9);
  WorkloadSpec w;
  w.users = 10;
  w.duration = 20000;
  w.think_time = {100, 0.3};
  run_workload(sim, w);
  std::map<std::pair<std::uint64_t, std::uint64_t>, std::pair<Millis, Millis>> spans;
  std::map<std::pair<std::uint64_t, std::uint64_t>, std::uint64_t> parent;
  for (const auto& e : sim.events()) {
    if (e.kind == RawEventKind::kSpanOpen) {
      spans[{e.trace_id, e.span_id}] = {e.time, -1};
      parent[{e.trace_id, e.span_id}] = e.parent_span_id;
    } else if (e.kind == RawEventKind::kSpanClose) {
      ASSERT_TRUE(spans.count({e.trace_id, e.span_id}));
      spans[{e.trace_id, e.span_id}].second = e.time;
    }
  }
  for (const auto& [key, iv] : spans) {
    ASSERT_GE(iv.second, iv.first);
    const auto p = parent[key];
    if (p == 0) continue;
    const auto& piv = spans.at({key.first, p});
    EXPECT_GE(iv.first, piv.first);
    EXPECT_LE(iv.second, piv.second);
  }
}

TEST(SimulationTest, CpuConservationWithoutFaults) {
  const SueSpec sue = fanout_sue();
  Simulation sim(sue, 4);
  WorkloadSpec w;
  w.users = 10;
  w.duration = 30000;
  w.think_time = {100, 0.3};
  run_workload(sim, w);
  std::vector<double> busy(sue.services.size(), 0.0);
  for (const auto& e : sim.events()) {
    if (e.kind == RawEventKind::kCpuBusy) busy[e.service] += e.value;
  }
  for (ServiceIndex s = 0; s < sue.services.size(); ++s) {
    EXPECT_DOUBLE_EQ(busy[s], sue.services[s].cpu_per_request_ms * sim.processed_calls(s));
  }
}

TEST(SimulationTest, StressInflatesCpu) {
  const SueSpec sue = fanout_sue();
  auto cpu_of_b = [&](FaultSchedule schedule) {
    Simulation sim(sue, 4, std::move(schedule));
    WorkloadSpec w;
    w.users = 10;
    w.duration = 30000;
    w.think_time = {100, 0.3};
    run_workload(sim, w);
    double busy = 0.0;
    for (const auto& e : sim.events()) {
      if (e.kind == RawEventKind::kCpuBusy && e.service == 1) busy += e.value;
    }
    return std::pair{busy, sue.services[1].cpu_per_request_ms * sim.processed_calls(1)};
  };
  const auto [stressed, nominal] = cpu_of_b(one_fault(StressFault{3.0}, "b", 10000, 20000));
  EXPECT_GT(stressed, nominal);
}

TEST(SimulationTest, EmptyScheduleNeverActivatesFaults) {
  Simulation sim(fanout_sue(), 1);
  bool any = false;
  for (Millis t = 0; t < 10000; t += 1000) {
    sim.schedule_action(t, [&](Simulation& s, Millis) {
      for (ServiceIndex i = 0; i < 3; ++i) any = any || s.fault_active(i);
    });
  }
  sim.run_until(10000);
  EXPECT_FALSE(any);
}

TEST(SimulationTest, PauseStopsProcessing) {
  SueSpec sue;
  sue.services = {svc("a", 1, 0, 8), svc("b", 5, 0, 2)};
  sue.edges = {{"a", "b", 1.0, 0}};
  Simulation sim(sue, 2, one_fault(PauseFault{}, "b", 180000, 240000));
  WorkloadSpec w;
  w.users = 5;
  w.duration = 300000;
  w.think_time = {500, 0.2};
  run_workload(sim, w);
  std::size_t in_window = 0, after = 0;
  for (const auto& e : sim.events()) {
    if (e.kind != RawEventKind::kCounterIncrement || e.service != 1) continue;
    // A call already in service at t0 completes only after the pause.
    if (e.time >= 180000 && e.time < 240000) ++in_window;
    if (e.time >= 240000) ++after;
  }
  EXPECT_EQ(in_window, 0u);
  EXPECT_GT(after, 0u);
}

TEST(SimulationTest, PauseFreezesInServiceWork) {
  SueSpec sue;
  sue.services = {svc("a", 100)};
  Simulation sim(sue, 1, one_fault(PauseFault{}, "a", 50, 1050));
  sim.issue_request(0, 0);
  sim.run_until(5000);
  // 50 ms done before the pause, the remaining 50 ms after it ends.
  EXPECT_EQ(sim.requests()[0].end, 1100);
}

TEST(SimulationTest, KillFailsFastAndZeroesCpu) {
  SueSpec sue;
  sue.services = {svc("a", 1, 0, 8, 0.5), svc("b", 5, 0, 2, 3.0)};
  sue.edges = {{"a", "b", 1.0, 0}};
  Simulation sim(sue, 2, one_fault(KillFault{}, "b", 10000, 20000));
  WorkloadSpec w;
  w.users = 5;
  w.duration = 30000;
  w.think_time = {100, 0.2};
  run_workload(sim, w);
  for (const auto& e : sim.events()) {
    if (e.kind == RawEventKind::kCpuBusy && e.service == 1) {
      EXPECT_FALSE(e.time >= 10000 && e.time < 20000);
    }
  }
  std::size_t errors = 0;
  for (const auto& r : sim.requests()) {
    if (r.start > 10000 && r.end < 20000 && r.finished()) {
      EXPECT_EQ(r.outcome, Outcome::kError);
      EXPECT_EQ(r.end - r.start, 1 + 2);  // a's processing + error response time
      ++errors;
    }
  }
  EXPECT_GT(errors, 0u);
}

TEST(SimulationTest, NetworkDelayStaysInBounds) {
  SueSpec sue;
  sue.services = {svc("a", 1, 0, 64), svc("b", 1, 0, 64)};
  sue.edges = {{"a", "b", 1.0, 3}};
  Simulation sim(sue, 8, one_fault(NetworkDelayFault{0, 90}, "b", 1000, 20000));
  for (int i = 0; i < 500; ++i) sim.issue_request(static_cast<UserId>(i), 2000 + i * 20);
  sim.run_until(40000);
  Millis lo = 1000, hi = 0;
  for (const auto& r : sim.requests()) {
    lo = std::min(lo, r.hops[1].network_ms);
    hi = std::max(hi, r.hops[1].network_ms);
  }
  EXPECT_GE(lo, 3);
  EXPECT_LE(hi, 93);
  EXPECT_GT(hi - lo, 60);
}

TEST(SimulationTest, PacketLossAddsRetransmitPenalties) {
  SueSpec sue;
  sue.services = {svc("a", 1, 0, 64), svc("b", 1, 0, 64)};
  sue.edges = {{"a", "b", 1.0, 0}};
  Simulation sim(sue, 8, one_fault(PacketLossFault{0.15, 200, 0.0}, "b", 1000, 200000));
  const int n = 4000;
  for (int i = 0; i < n; ++i) sim.issue_request(static_cast<UserId>(i), 2000 + i * 20);
  sim.run_until(300000);
  int penalized = 0;
  for (const auto& r : sim.requests()) {
    EXPECT_EQ(r.hops[1].network_ms % 200, 0);
    penalized += r.hops[1].network_ms > 0 ? 1 : 0;
  }
  // P(at least one retransmit) = 0.15; 3 sigma band.
  const double sd = std::sqrt(n * 0.15 * 0.85);
  EXPECT_NEAR(penalized, n * 0.15, 3 * sd);
}

TEST(SimulationTest, ClientTimeoutReleasesUser) {
  SueSpec sue;
  sue.services = {svc("a", 50000)};
  SimOptions opt;
  opt.client_timeout = 1000;
  Simulation sim(sue, 1, {}, opt);
  sim.issue_request(0, 0);
  sim.run_until(2000);
  EXPECT_EQ(sim.requests()[0].outcome, Outcome::kTimeout);
  EXPECT_EQ(sim.requests()[0].end, 1000);
  EXPECT_EQ(sim.outstanding_requests(), 0);
}

TEST(WorkloadTest, ClosedLoopArithmetic) {
  SueSpec sue;
  sue.services = {svc("a", 10)};
  Simulation sim(sue, 1);
  WorkloadSpec w;
  w.users = 1;
  w.duration = 60000;
  w.think_time = {1000, 0.0};
  run_workload(sim, w);
  std::size_t completed = 0;
  for (const auto& r : sim.requests()) completed += (r.finished() && r.outcome == Outcome::kOk) ? 1 : 0;
  EXPECT_EQ(completed, 60000u / 1010u);
}

TEST(WorkloadTest, InFlightBoundAndCutoff) {
  Simulation sim(fanout_sue(), 12);
  WorkloadSpec w;
  w.users = 50;
  w.duration = 600000;
  w.ramp_up = 10000;
  w.think_time = {1000, 0.25};
  run_workload(sim, w);
  EXPECT_LE(sim.max_outstanding_requests(), 50);
  for (const auto& r : sim.requests()) {
    EXPECT_LT(r.start, w.duration);
    EXPECT_TRUE(r.finished());
  }
}

TEST(WorkloadTest, IdenticalSeedIdenticalRecords) {
  auto run = [] {
    Simulation sim(fanout_sue(), 77);
    WorkloadSpec w;
    w.users = 8;
    w.duration = 30000;
    run_workload(sim, w);
    std::vector<std::pair<Millis, Millis>> out;
    for (const auto& r : sim.requests()) out.emplace_back(r.start, r.end);
    return out;
  };
  EXPECT_EQ(run(), run());
}

}  // namespace
}  // namespace oxn
