#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <span>

namespace gcmm {

inline constexpr double kLogTwoPi = 1.8378770664093454836;
inline constexpr double kHalfLogTwoPi = 0.91893853320467274178;

// Standard normal cdf, accurate over the full double range.
double normal_cdf(double z);

// Inverse of normal_cdf for p in (0, 1). Rational initial guess refined by
// one Halley step against normal_cdf, giving close to full double precision.
double normal_quantile(double p);

inline double log_normal_pdf(double z) { return -0.5 * z * z - kHalfLogTwoPi; }

double log_sum_exp(std::span<const double> xs);

uint64_t splitmix64(uint64_t x);

// Derives an independent seed for a named sub-stream of a run seed.
// Used wherever one user-facing seed drives several generators.
uint64_t mix_seed(uint64_t seed, uint64_t stream);

// Deterministic random source. Wraps mt19937_64 and hand-rolls the
// uniform and normal transforms so that draw sequences depend only on the
// seed, not on the standard library's distribution implementations.
class Rng {
 public:
  explicit Rng(uint64_t seed) : engine_(seed) {}

  // Uniform on the open interval (0, 1); never returns 0 or 1.
  double uniform01() {
    return (static_cast<double>(engine_() >> 11) + 0.5) * 0x1.0p-53;
  }

  // Standard normal via Box-Muller. Consumes two uniforms per draw and
  // keeps no cached state, so consumption per call is fixed.
  double normal() {
    double u1 = uniform01();
    double u2 = uniform01();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586477 * u2);
  }

  // Uniform index in [0, n). n must be positive.
  std::size_t index(std::size_t n) {
    std::size_t i = static_cast<std::size_t>(uniform01() * static_cast<double>(n));
    return i >= n ? n - 1 : i;
  }

  uint64_t raw() { return engine_(); }

 private:
  std::mt19937_64 engine_;
};

}  // namespace gcmm
