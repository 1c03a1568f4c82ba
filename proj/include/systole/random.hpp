#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <optional>
#include <random>

namespace systole {

/// Seed-deterministic generator with a fully specified output stream.
///
/// The engine is std::mt19937_64, whose sequence is fixed by the standard.
/// Uniform doubles take the top 53 bits of one engine word: (x >> 11) * 2^-53,
/// giving values in [0, 1). Normal deviates use the Box–Muller transform on
/// two consecutive uniforms (u1, u2): r = sqrt(-2 ln(1 - u1)), angle = 2 pi u2,
/// returning r cos(angle) first and caching r sin(angle) for the next call.
/// No std:: distribution is involved, so streams agree across standard libraries.
class DeterministicRng {
 public:
  explicit DeterministicRng(std::uint64_t seed) : engine_(seed) {}

  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  double normal() {
    if (cached_) {
      const double v = *cached_;
      cached_.reset();
      return v;
    }
    const double u1 = 1.0 - uniform();  // (0, 1]
    const double u2 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double a = 2.0 * std::numbers::pi * u2;
    cached_ = r * std::sin(a);
    return r * std::cos(a);
  }

  std::uint64_t next_u64() { return engine_(); }

 private:
  std::mt19937_64 engine_;
  std::optional<double> cached_;
};

}  // namespace systole
