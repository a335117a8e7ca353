#pragma once

#include <cstdint>

namespace dronecap {

// splitmix64; used to derive independent stream seeds from a base seed plus
// stream coordinates, so parallel and serial runs draw identical numbers.
inline std::uint64_t splitmix64(std::uint64_t& state) {
  std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

inline std::uint64_t derive_seed(std::uint64_t base, std::uint64_t a, std::uint64_t b = 0,
                                 std::uint64_t c = 0) {
  std::uint64_t s = base;
  std::uint64_t h = splitmix64(s);
  s ^= a * 0xff51afd7ed558ccdULL;
  h ^= splitmix64(s);
  s ^= b * 0xc4ceb9fe1a85ec53ULL;
  h ^= splitmix64(s);
  s ^= c * 0x2545f4914f6cdd1dULL;
  h ^= splitmix64(s);
  return h;
}

// xoshiro256++; cheap enough for per-pixel noise.
class FastRng {
 public:
  explicit FastRng(std::uint64_t seed) {
    std::uint64_t s = seed;
    for (auto& w : state_) w = splitmix64(s);
  }

  std::uint64_t next() {
    const std::uint64_t result = rotl(state_[0] + state_[3], 23) + state_[0];
    const std::uint64_t t = state_[1] << 17;
    state_[2] ^= state_[0];
    state_[3] ^= state_[1];
    state_[1] ^= state_[2];
    state_[0] ^= state_[3];
    state_[2] ^= t;
    state_[3] = rotl(state_[3], 45);
    return result;
  }

  // Uniform in [0, 1).
  double uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

  // Approximate standard normal: sum of four independent 16-bit uniforms from
  // one draw, rescaled to unit variance. Exact mean/variance, light tails;
  // fine for sensor noise.
  double gaussian() {
    const std::uint64_t w = next();
    const std::int64_t s = static_cast<std::int64_t>(w & 0xffff) + ((w >> 16) & 0xffff) +
                           ((w >> 32) & 0xffff) + ((w >> 48) & 0xffff) - 2 * 65535;
    // variance of one lane is (2^32 - 1) / 12; scale the 4-lane sum to 1.
    return static_cast<double>(s) * 2.6432189770275726e-05;
  }

 private:
  static std::uint64_t rotl(std::uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }
  std::uint64_t state_[4];
};

}  // namespace dronecap
