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

#pragma once

#include <span>
#include <string>
#include <vector>

#include "oxn/config.h"

namespace oxn {

/// One runtime fault: what it does, where, and when. The window is
/// half-open, [start, end): the effect applies at start and is reverted at
/// end.
struct ScheduledFault {
  std::string fault_id;
  std::string target;
  FaultEffect effect;
  Millis start = 0;
  Millis end = 0;

  bool operator==(const ScheduledFault&) const = default;
};

/// Fault entries sorted by start time. Immutable once compiled.
struct FaultSchedule {
  std::vector<ScheduledFault> entries;

  bool empty() const { return entries.empty(); }
  bool operator==(const FaultSchedule&) const = default;
};

/// Applies instrumentation treatments in order and returns the modified
/// SUE. Throws ConfigError for a fault treatment, an unknown metric or a
/// rate outside [0, 1].
SueSpec apply_instrumentation(const SueSpec& sue, std::span<const TreatmentSpec> treatments);

/// Translates fault treatments into a schedule sorted by start time.
/// Throws ConfigError for instrumentation treatments or windows outside
/// (0, workload_duration).
FaultSchedule compile_schedule(std::span<const TreatmentSpec> treatments, Millis workload_duration);

/// Splits a treatment list into instrumentation and fault parts.
std::vector<TreatmentSpec> instrumentation_treatments(std::span<const TreatmentSpec> treatments);
std::vector<TreatmentSpec> fault_treatments(std::span<const TreatmentSpec> treatments);

}  // namespace oxn
