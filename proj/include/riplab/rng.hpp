#pragma once

#include <cmath>
#include <cstdint>

namespace riplab {

/// Deterministic pseudo-random generator with an explicitly pinned
/// algorithm. std::mt19937 would be reproducible too, but the normal
/// distribution adapters in libstdc++/libc++ are not specified bit-for-bit,
/// and seeded experiment reruns must be byte-identical across toolchains.
/// splitmix64 is the usual seeding/splitting function; normals come from a
/// fixed Box-Muller transform.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next_u64() {
    // splitmix64 step (Steele, Lea, Flood 2014 public-domain constants)
    std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  /// Uniform in [0,1) with 53 bits of mantissa.
  double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  /// Uniform index in {0, ..., m-1}. Modulo bias is below 2^-50 for the
  /// desk-scale m used here and keeps the stream position deterministic.
  std::uint64_t uniform_index(std::uint64_t m) { return next_u64() % m; }

  /// Standard normal via Box-Muller. One value per call; the partner value
  /// is cached so the stream consumes exactly two uniforms per pair.
  double normal() {
    if (have_spare_) {
      have_spare_ = false;
      return spare_;
    }
    double u1 = uniform();
    double u2 = uniform();
    // Guard the log against u1 == 0.
    while (u1 <= 0.0) u1 = uniform();
    const double radius = std::sqrt(-2.0 * std::log(u1));
    const double angle = 6.283185307179586476925286766559 * u2;
    spare_ = radius * std::sin(angle);
    have_spare_ = true;
    return radius * std::cos(angle);
  }

  /// Derive an independent stream for a named component. Mixing the tag
  /// through the output function decorrelates streams even for adjacent
  /// seeds, and the derivation is a pure function of (seed, tag).
  static std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t tag) {
    Rng mixer(seed ^ (0xa0761d6478bd642fULL * (tag + 1)));
    return mixer.next_u64();
  }

 private:
  std::uint64_t state_;
  double spare_ = 0.0;
  bool have_spare_ = false;
};

}  // namespace riplab
