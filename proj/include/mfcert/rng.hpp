#pragma once

// Reproducibility contract. Every random number in the project flows from a
// single 64-bit master seed through the functions below; no std::random
// machinery is used anywhere, so ensemble output is bit-identical across
// platforms with IEEE doubles and across thread counts.
//
//   substream_seed(master, r) = splitmix64_mix(master + (r + 1) * GOLDEN)
//   per-replica generator     = xoshiro256++ whose 4-word state is filled by
//                               four further splitmix64 steps from that seed
//
// GOLDEN = 0x9E3779B97F4A7C15 (the splitmix64 increment). Uniform doubles use
// the top 53 bits; exponential variates use -log(u) with u in (0, 1].

#include <array>
#include <cmath>
#include <cstdint>

namespace mfcert::rng {

inline constexpr std::uint64_t kGolden = 0x9E3779B97F4A7C15ULL;

/// splitmix64 finalizer (Stafford mix 13).
inline std::uint64_t mix64(std::uint64_t z) {
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

/// Seed for replica `replica` of the stream family rooted at `master`.
inline std::uint64_t substream_seed(std::uint64_t master, std::uint64_t replica) {
  return mix64(master + (replica + 1) * kGolden);
}

/// xoshiro256++ with splitmix64 state initialization.
class Stream {
 public:
  explicit Stream(std::uint64_t seed) {
    std::uint64_t s = seed;
    for (auto& word : state_) {
      s += kGolden;
      word = mix64(s);
    }
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

  /// Uniform double in [0, 1).
  double uniform01() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

  /// Unit-mean exponential variate; never evaluates log(0).
  double exponential() {
    const double u = static_cast<double>((next() >> 11) + 1) * 0x1.0p-53;
    return -std::log(u);
  }

 private:
  static std::uint64_t rotl(std::uint64_t x, int k) {
    return (x << k) | (x >> (64 - k));
  }

  std::array<std::uint64_t, 4> state_;
};

}  // namespace mfcert::rng
