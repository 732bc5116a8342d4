#pragma once

#include <cmath>
#include <cstdint>

namespace rlra {

// Counter-based SplitMix64 generator. The sequence is fully determined by the
// seed and is identical on every platform:
//   state_{k+1} = state_k + 0x9E3779B97F4A7C15
//   output(z)   = fmix(z) with the two xor-shift/multiply rounds below.
// uniform01() maps the top 53 bits to [0,1); uniform_pm1() is 2u-1 in [-1,1);
// gaussian() applies the Box-Muller transform to two uniform01() draws.
class SplitMix64 {
 public:
  explicit SplitMix64(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next_u64() {
    std::uint64_t z = (state_ += 0x9E3779B97F4A7C15ull);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
  }

  double uniform01() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  double uniform_pm1() { return 2.0 * uniform01() - 1.0; }

  double gaussian() {
    // Box-Muller; draws two uniforms per call. u1 is nudged away from zero so
    // the logarithm is finite.
    double u1 = uniform01();
    double u2 = uniform01();
    if (u1 <= 0.0) u1 = 0x1.0p-53;
    constexpr double two_pi = 6.283185307179586476925286766559;
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(two_pi * u2);
  }

 private:
  std::uint64_t state_;
};

}  // namespace rlra
