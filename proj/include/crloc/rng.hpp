#pragma once

#include <cstdint>
#include <random>

namespace crloc {

/// SplitMix64 finalizer. Used to fan a base seed out into per-item seeds.
constexpr uint64_t mix64(uint64_t x) {
  x ^= x >> 30;
  x *= 0xBF58476D1CE4E5B9ull;
  x ^= x >> 27;
  x *= 0x94D049BB133111EBull;
  x ^= x >> 31;
  return x;
}

/// seed_i = mix(base + phi * (i+1)); distinct indices give independent streams.
constexpr uint64_t derive_seed(uint64_t base, uint64_t index) {
  return mix64(base + 0x9E3779B97F4A7C15ull * (index + 1));
}

/// Seedable generator with explicitly coded transforms so draws are
/// reproducible across platforms: mt19937_64 raw stream, 53-bit uniforms,
/// Box-Muller normals (pair cached), inverse-CDF exponentials.
class Rng {
public:
  explicit Rng(uint64_t seed) : gen_(seed) {}

  uint64_t raw() { return gen_(); }

  /// Uniform on [0, 1).
  double uniform() { return static_cast<double>(gen_() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  /// Standard normal via Box-Muller; the second value of each pair is cached.
  double normal();

  double normal(double mean, double stddev) { return mean + stddev * normal(); }

  /// Exponential with the given scale (mean) parameter.
  double exponential(double scale);

private:
  std::mt19937_64 gen_;
  double cached_ = 0.0;
  bool has_cached_ = false;
};

}  // namespace crloc
