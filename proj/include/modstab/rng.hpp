#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>

#include "modstab/types.hpp"

namespace modstab {

/// splitmix64 finalizer; used to derive independent substream seeds.
constexpr std::uint64_t mix64(std::uint64_t z) noexcept {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

/// Seeded stream with platform-independent draws. The std distributions are
/// implementation defined, so conversions from raw engine output are done here.
class Stream {
 public:
  explicit Stream(std::uint64_t seed) : engine_(mix64(seed)) {}

  /// Counter-derived substream: identical regardless of how probes are partitioned.
  static Stream substream(std::uint64_t seed, std::uint64_t index) {
    return Stream(mix64(seed) ^ mix64(index + 0x632be59bd9b4e019ULL));
  }

  /// Uniform on [0, 1).
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  Scalar unit_complex() { return std::polar(1.0, 2.0 * std::numbers::pi * uniform()); }

  /// Uniform in the closed disc of the given radius.
  Scalar disc(double radius) {
    const double r = radius * std::sqrt(uniform());
    return std::polar(r, 2.0 * std::numbers::pi * uniform());
  }

  CVec disc_vector(std::size_t dim, double radius) {
    CVec v(dim);
    for (std::size_t i = 0; i < dim; ++i) v[i] = disc(radius);
    return v;
  }

  /// A point of the Euclidean ball of the given radius in C^dim (not uniform).
  CVec ball_vector(std::size_t dim, double radius) {
    CVec v = disc_vector(dim, 1.0);
    const double n = v.euclidean();
    if (n > 1.0) v = v / n;
    return radius * std::sqrt(uniform()) * v;
  }

  std::uint64_t next_u64() { return engine_(); }

 private:
  std::mt19937_64 engine_;
};

}  // namespace modstab
