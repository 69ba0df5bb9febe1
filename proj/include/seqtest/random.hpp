#pragma once

#include <cmath>
#include <cstdint>

namespace seqtest {

// Deterministic per-trial random stream.  Streams are derived from
// (master seed, point index, trial index) only, so simulation results do
// not depend on how trials are scheduled across worker threads.
class RandomStream {
 public:
  RandomStream(std::uint64_t master_seed, std::uint64_t point_index,
               std::uint64_t trial_index) {
    state_ = mix(master_seed + 0x9E3779B97F4A7C15ull * (point_index + 1));
    state_ = mix(state_ ^ (0xBF58476D1CE4E5B9ull * (trial_index + 1)));
    state_ = mix(state_);
  }

  explicit RandomStream(std::uint64_t seed) { state_ = mix(seed); }

  // splitmix64 step
  std::uint64_t next_u64() {
    std::uint64_t z = (state_ += 0x9E3779B97F4A7C15ull);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
  }

  // uniform on (0, 1]
  double uniform01() {
    return static_cast<double>((next_u64() >> 11) + 1) * 0x1.0p-53;
  }

  // standard normal, Box-Muller with one cached variate
  double normal() {
    if (has_cache_) {
      has_cache_ = false;
      return cache_;
    }
    const double u1 = uniform01();
    const double u2 = uniform01();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double phi = 6.283185307179586476925286766559 * u2;
    cache_ = r * std::sin(phi);
    has_cache_ = true;
    return r * std::cos(phi);
  }

  double normal(double mean, double stddev) { return mean + stddev * normal(); }

  bool bernoulli(double p) { return uniform01() <= p; }

 private:
  static std::uint64_t mix(std::uint64_t z) {
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
  }

  std::uint64_t state_ = 0;
  double cache_ = 0.0;
  bool has_cache_ = false;
};

}  // namespace seqtest
