#pragma once

#include <bit>
#include <cmath>
#include <cstdint>
#include <vector>

#include "gcrn/errors.hpp"

namespace gcrn {

// Seeded pseudo-random generator with a fixed, portable algorithm:
// xoshiro256** for the stream, splitmix64 for seeding and substream
// derivation, and explicit uniform/normal transforms. Standard-library
// engines/distributions are implementation-defined, which would break
// byte-identical dataset regeneration.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) {
    std::uint64_t x = seed;
    for (auto& s : state_) s = splitmix64(x);
  }

  // Deterministic substream for (seed, stream, index); used to give each
  // generated scene its own independent generator.
  static Rng derive(std::uint64_t seed, std::uint64_t stream,
                    std::uint64_t index = 0) {
    std::uint64_t x = seed;
    std::uint64_t h = splitmix64(x);
    x = h ^ stream;
    h = splitmix64(x);
    x = h ^ index;
    return Rng(splitmix64(x));
  }

  std::uint64_t next_u64() {
    const std::uint64_t result = rotl(state_[1] * 5, 7) * 9;
    const std::uint64_t t = state_[1] << 17;
    state_[2] ^= state_[0];
    state_[3] ^= state_[1];
    state_[1] ^= state_[2];
    state_[0] ^= state_[3];
    state_[2] ^= t;
    state_[3] = rotl(state_[3], 45);
    return result;
  }

  // Uniform on [0,1), 53-bit resolution.
  double uniform() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
  }

  double uniform(double a, double b) { return a + (b - a) * uniform(); }

  // Uniform integer in [0, bound) via masked rejection; exactly uniform.
  std::uint64_t uniform_int(std::uint64_t bound) {
    if (bound == 0) throw ValidationError("uniform_int: bound must be >= 1");
    const std::uint64_t m = bound - 1;
    const std::uint64_t mask =
        m == 0 ? 0 : (~std::uint64_t{0} >> std::countl_zero(m));
    for (;;) {
      const std::uint64_t v = next_u64() & mask;
      if (v < bound) return v;
    }
  }

  // Standard normal via Box-Muller; always consumes exactly two uniforms.
  double normal() {
    const double u1 = uniform();
    const double u2 = uniform();
    const double r = std::sqrt(-2.0 * std::log1p(-u1));
    return r * std::cos(2.0 * 3.14159265358979323846 * u2);
  }

  template <typename T>
  void shuffle(std::vector<T>& v) {
    for (std::size_t i = v.size(); i > 1; --i) {
      const std::size_t j = static_cast<std::size_t>(uniform_int(i));
      std::swap(v[i - 1], v[j]);
    }
  }

 private:
  static std::uint64_t splitmix64(std::uint64_t& x) {
    x += 0x9E3779B97F4A7C15ULL;
    std::uint64_t z = x;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
  }

  static std::uint64_t rotl(std::uint64_t v, int k) {
    return (v << k) | (v >> (64 - k));
  }

  std::uint64_t state_[4];
};

}  // namespace gcrn
