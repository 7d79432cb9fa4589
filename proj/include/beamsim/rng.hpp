// SPDX-License-Identifier: Apache-2.0

#ifndef BEAMSIM_RNG_HPP
#define BEAMSIM_RNG_HPP

#include <complex>
#include <cmath>
#include <cstdint>
#include <random>

namespace beamsim {

// Seeded random source with implementation-independent output: the engine is
// the (standardized) mt19937_64 and all value transforms are done here rather
// than through std distributions, so a given seed produces the same stream on
// every platform and standard library.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  // Independent stream for a (base seed, element index) pair. Uses the
  // splitmix64 finalizer on seed + (index+1)*golden so streams are O(1) to
  // derive and results do not depend on generation order or worker count.
  static Rng stream(std::uint64_t seed, std::uint64_t index) {
    std::uint64_t z = seed + (index + 1) * 0x9E3779B97F4A7C15ull;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return Rng(z ^ (z >> 31));
  }

  std::uint64_t next_u64() { return engine_(); }

  // Uniform on [0, 1), 53-bit resolution.
  double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // Box-Muller without spare caching: every call consumes exactly two
  // uniforms, keeping draw counts predictable for stream reproducibility.
  double gaussian(double mean, double stddev) {
    double u1 = 1.0 - uniform();  // (0, 1]
    double u2 = uniform();
    double r = std::sqrt(-2.0 * std::log(u1));
    return mean + stddev * r * std::cos(2.0 * M_PI * u2);
  }

  // Circularly-symmetric complex Gaussian with total variance `variance`.
  std::complex<double> complex_gaussian(double variance) {
    double s = std::sqrt(variance / 2.0);
    double re = gaussian(0.0, s);
    double im = gaussian(0.0, s);
    return {re, im};
  }

 private:
  std::mt19937_64 engine_;
};

}  // namespace beamsim

#endif
