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

#include "oxn/treatments.h"

#include <algorithm>

namespace oxn {

namespace {

template <class... Ts>
struct Overloaded : Ts... {
  using Ts::operator()...;
};

void check_rate(double rate, const std::string& name) {
  if (!(rate >= 0.0 && rate <= 1.0)) {
    throw ConfigError("treatment '" + name + "': sampling rate must lie in [0, 1]");
  }
}

}  // namespace

SueSpec apply_instrumentation(const SueSpec& sue, std::span<const TreatmentSpec> treatments) {
  SueSpec out = sue;
  for (const auto& t : treatments) {
    if (t.is_fault()) {
      throw ConfigError("treatment '" + t.name + "' is a fault, not an instrumentation change");
    }
    std::visit(
        Overloaded{[&](const MetricSamplingChange& c) {
                     auto it = std::find_if(out.metric_points.begin(), out.metric_points.end(),
                                            [&](const MetricPointSpec& m) { return m.name == c.metric; });
                     if (it == out.metric_points.end()) {
                       throw ConfigError("treatment '" + t.name + "': unknown metric '" + c.metric + "'");
                     }
                     const Millis aggregation = c.aggregation_interval.value_or(c.interval);
                     if (c.interval <= 0 || aggregation < c.interval || aggregation % c.interval != 0) {
                       throw ConfigError("treatment '" + t.name +
                                         "': interval must be positive and divide the aggregation interval");
                     }
                     it->sampling_interval = c.interval;
                     it->aggregation_interval = aggregation;
                   },
                   [&](const TracingRateChange& c) {
                     check_rate(c.rate, t.name);
                     out.trace_config.rate = c.rate;
                   },
                   [&](const TracingStrategyChange& c) { out.trace_config.strategy = c.strategy; }},
        t.instrumentation());
  }
  return out;
}

FaultSchedule compile_schedule(std::span<const TreatmentSpec> treatments, Millis workload_duration) {
  FaultSchedule schedule;
  for (const auto& t : treatments) {
    if (!t.is_fault()) {
      throw ConfigError("treatment '" + t.name + "' is an instrumentation change, not a fault");
    }
    const auto& f = t.fault();
    if (!(f.start > 0 && f.start < f.end && f.end < workload_duration)) {
      throw ConfigError("treatment '" + t.name + "': window outside run duration");
    }
    schedule.entries.push_back({t.name, f.target, f.effect, f.start, f.end});
  }
  std::stable_sort(schedule.entries.begin(), schedule.entries.end(),
                   [](const ScheduledFault& a, const ScheduledFault& b) { return a.start < b.start; });
  return schedule;
}

std::vector<TreatmentSpec> instrumentation_treatments(std::span<const TreatmentSpec> treatments) {
  std::vector<TreatmentSpec> out;
  std::copy_if(treatments.begin(), treatments.end(), std::back_inserter(out),
               [](const TreatmentSpec& t) { return !t.is_fault(); });
  return out;
}

std::vector<TreatmentSpec> fault_treatments(std::span<const TreatmentSpec> treatments) {
  std::vector<TreatmentSpec> out;
  std::copy_if(treatments.begin(), treatments.end(), std::back_inserter(out),
               [](const TreatmentSpec& t) { return t.is_fault(); });
  return out;
}

}  // namespace oxn
