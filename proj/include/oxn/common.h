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
#include <stdexcept>
#include <string>

namespace oxn {

/// Simulation time. All internal time is integer milliseconds since the
/// experiment started; config files use decimal seconds.
using Millis = std::int64_t;

inline constexpr Millis kMillisPerSecond = 1000;

/// Observations in (t1, t1 + kSettlingMargin] after a fault are neither
/// normal nor fault; they are excluded from detector training and testing.
inline constexpr Millis kSettlingMargin = 30 * kMillisPerSecond;

/// Converts a decimal number of seconds to milliseconds, rounding to the
/// nearest millisecond.
Millis seconds_to_millis(double seconds);

/// Base class for all errors raised by the engine.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed or invalid experiment input. Maps to CLI exit code 1.
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// Failure while running an experiment. Maps to CLI exit code 2.
class RuntimeError : public Error {
 public:
  using Error::Error;
};

}  // namespace oxn
