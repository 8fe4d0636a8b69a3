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

#include "oxn/workload.h"

#include <cmath>
#include <memory>
#include <string>
#include <vector>

namespace oxn {

namespace {

struct UserPool {
  WorkloadSpec spec;
  std::vector<Rng> think_rngs;
  UserId first_user = 0;

  Millis think(UserId user) {
    auto& rng = think_rngs[user - first_user];
    const double ms = rng.lognormal_median(spec.think_time.median_ms, spec.think_time.sigma);
    return static_cast<Millis>(std::llround(std::max(0.0, ms)));
  }

  bool owns(UserId user) const {
    return user >= first_user && user < first_user + think_rngs.size();
  }
};

void schedule_issue(Simulation& sim, const std::shared_ptr<UserPool>& pool, UserId user, Millis at) {
  if (at >= pool->spec.duration) return;
  sim.schedule_action(at, [user](Simulation& s, Millis now) { s.issue_request(user, now); });
}

}  // namespace

void drive(Simulation& sim, const WorkloadSpec& w, std::uint64_t seed) {
  auto pool = std::make_shared<UserPool>();
  pool->spec = w;
  const Rng root = Rng(seed).split("users");
  for (int i = 0; i < w.users; ++i) {
    pool->think_rngs.push_back(root.split(static_cast<std::uint64_t>(i)));
  }
  sim.on_request_finished([pool](Simulation& s, const RequestRecord& r) {
    if (!pool->owns(r.user)) return;
    schedule_issue(s, pool, r.user, r.end + pool->think(r.user));
  });
  for (int i = 0; i < w.users; ++i) {
    const auto user = static_cast<UserId>(i);
    const Millis wake = w.ramp_up * i / w.users;
    schedule_issue(sim, pool, user, std::max(sim.now(), wake + pool->think(user)));
  }
}

void run_workload(Simulation& sim, const WorkloadSpec& w) {
  drive(sim, w, sim.seed());
  sim.run_until(w.duration + w.timeout);
}

}  // namespace oxn
