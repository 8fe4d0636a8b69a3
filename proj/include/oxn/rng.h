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
#include <string_view>

namespace oxn {

/// splitmix64 finalizer. Used both to seed generators and as a stateless
/// hash for counter-based draws.
constexpr std::uint64_t mix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

/// Derives an independent child seed from a parent seed and a stream key.
constexpr std::uint64_t derive_seed(std::uint64_t parent, std::uint64_t key) {
  return mix64(parent ^ mix64(key + 0x632be59bd9b4e019ULL));
}

/// FNV-1a, used to turn stream names into keys.
constexpr std::uint64_t hash_name(std::string_view name) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (char c : name) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001b3ULL;
  }
  return h;
}

/// Maps 64 random bits to a double uniformly distributed in [0, 1).
constexpr double bits_to_unit(std::uint64_t bits) {
  return static_cast<double>(bits >> 11) * 0x1.0p-53;
}

/// xoshiro256++ generator with a splittable seeding scheme.
///
/// Distributions are implemented here rather than taken from <random>
/// because the standard library distributions are not specified bit-for-bit
/// and would break cross-platform reproducibility of runs.
class Rng {
 public:
  using result_type = std::uint64_t;

  explicit Rng(std::uint64_t seed = 0);

  /// Returns an independent generator for the named sub-stream.
  Rng split(std::uint64_t key) const;
  Rng split(std::string_view name) const { return split(hash_name(name)); }

  std::uint64_t next();
  std::uint64_t operator()() { return next(); }
  static constexpr std::uint64_t min() { return 0; }
  static constexpr std::uint64_t max() { return ~std::uint64_t{0}; }

  /// Uniform in [0, 1).
  double uniform();
  /// Uniform in [lo, hi].
  double uniform(double lo, double hi);
  /// Uniform integer in [0, n).
  std::uint64_t below(std::uint64_t n);
  bool bernoulli(double p);
  double standard_normal();
  double normal(double mean, double stddev);
  /// Lognormal parameterized by its median; sigma is the log-space stddev.
  /// sigma == 0 returns the median exactly.
  double lognormal_median(double median, double sigma);
  /// Number of failures before the first success when each trial fails
  /// with probability p.
  std::uint64_t geometric_failures(double p);

 private:
  std::uint64_t seed_;
  std::uint64_t s_[4];
};

}  // namespace oxn
