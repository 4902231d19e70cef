/*
 * Copyright 2026 The Pipecrawl Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *      http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#ifndef PIPECRAWL_RNG_HPP_
#define PIPECRAWL_RNG_HPP_

#include <cmath>
#include <cstdint>
#include <random>
#include <string_view>

namespace pipecrawl {

// Version tag recorded in every report. The engine is std::mt19937_64 (bit
// exact per the C++ standard); all distribution sampling is implemented here
// rather than with std:: distributions, whose output is not portable across
// standard library implementations.
inline constexpr const char* kRngVersion = "pipecrawl-rng-v1/mt19937_64";

// splitmix64 finalizer, used to derive independent stream seeds.
inline std::uint64_t mix_seed(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

// FNV-1a 64-bit, used for stream names and scenario digests.
inline std::uint64_t fnv1a64(std::string_view s, std::uint64_t h = 0xcbf29ce484222325ULL) {
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

// Seed for a named sensor/model stream. Streams are decoupled so that adding
// draws to one model never perturbs another.
inline std::uint64_t derive_stream_seed(std::uint64_t base_seed, std::string_view stream) {
  return mix_seed(base_seed ^ fnv1a64(stream));
}

// One deterministic random stream.
class RngStream {
 public:
  explicit RngStream(std::uint64_t seed) : engine_(seed) {}

  RngStream(std::uint64_t base_seed, std::string_view stream)
      : engine_(derive_stream_seed(base_seed, stream)) {}

  // Uniform on [0, 1) with 53 random bits.
  double uniform() {
    return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
  }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // Standard normal via the Marsaglia polar method (one spare cached).
  double gaussian() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    double u, v, s;
    do {
      u = 2.0 * uniform() - 1.0;
      v = 2.0 * uniform() - 1.0;
      s = u * u + v * v;
    } while (s >= 1.0 || s == 0.0);
    const double m = std::sqrt(-2.0 * std::log(s) / s);
    spare_ = v * m;
    has_spare_ = true;
    return u * m;
  }

  double gaussian(double mu, double sigma) { return mu + sigma * gaussian(); }

  // Uniform integer on [0, n). Rejection keeps the draw unbiased.
  std::uint64_t integer(std::uint64_t n) {
    const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
    std::uint64_t x;
    do {
      x = engine_();
    } while (x >= limit);
    return x % n;
  }

  // Poisson by inversion of exponential arrivals, run in log space so large
  // means do not underflow. O(mean) draws; means here stay below ~1e5.
  long long poisson(double mean) {
    if (mean <= 0.0) return 0;
    long long k = 0;
    double acc = 0.0;
    while (true) {
      acc += -std::log(1.0 - uniform());
      if (acc >= mean) return k;
      ++k;
    }
  }

 private:
  std::mt19937_64 engine_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

}  // namespace pipecrawl

#endif  // PIPECRAWL_RNG_HPP_
