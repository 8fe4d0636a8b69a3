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

#include <cstdint>

#include "oxn/config.h"
#include "oxn/simulator.h"

namespace oxn {

/// Attaches a closed-loop user population to `sim`.
///
/// User i wakes at i * ramp_up / users, pauses for one think time, then
/// loops: issue a request, wait until it finishes (or times out), think.
/// No request is issued at or after `w.duration`. Each user draws think
/// times from its own stream derived from `seed`.
void drive(Simulation& sim, const WorkloadSpec& w, std::uint64_t seed);

/// Runs `sim` through the workload and lets in-flight requests drain for
/// one client timeout.
void run_workload(Simulation& sim, const WorkloadSpec& w);

}  // namespace oxn
