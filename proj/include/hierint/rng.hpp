#pragma once

#include <cmath>
#include <cstdint>
#include <random>

namespace hierint {

// All simulation output must be byte-reproducible for a fixed seed, so the
// distribution transforms live here instead of <random>: the standard engine
// is bit-exact across platforms, the standard distributions are not.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t bits() { return engine_(); }

  // Uniform on [0, 1), 53-bit resolution.
  double uniform01() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  // Box-Muller; the second deviate is cached, so draws come in a fixed order.
  double normal() {
    if (have_spare_) {
      have_spare_ = false;
      return spare_;
    }
    double u1 = 1.0 - uniform01();  // (0, 1], keeps log finite
    double u2 = uniform01();
    double r = std::sqrt(-2.0 * std::log(u1));
    double a = 2.0 * M_PI * u2;
    spare_ = r * std::sin(a);
    have_spare_ = true;
    return r * std::cos(a);
  }

  double exponential(double rate = 1.0) { return -std::log(1.0 - uniform01()) / rate; }

  int rademacher() { return (engine_() >> 63) ? 1 : -1; }

  // Uniform on [-sqrt(3), sqrt(3)]: unit variance, bounded support.
  double uniform_scaled() { return (2.0 * uniform01() - 1.0) * 1.7320508075688772; }

 private:
  std::mt19937_64 engine_;
  double spare_ = 0.0;
  bool have_spare_ = false;
};

// SplitMix64 step, used to derive independent streams from one base seed.
inline std::uint64_t mix64(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

// Stream seed for replication `rep` of task `task` under `base`. Stable: the
// same triple always maps to the same stream, independent of scheduling.
inline std::uint64_t derive_stream(std::uint64_t base, std::uint64_t task, std::uint64_t rep) {
  std::uint64_t h = mix64(base ^ 0x243f6a8885a308d3ULL);
  h = mix64(h ^ (task + 0x13198a2e03707344ULL));
  h = mix64(h ^ (rep + 0xa4093822299f31d0ULL));
  return h;
}

}  // namespace hierint
