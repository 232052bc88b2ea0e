#pragma once

#include <cmath>
#include <cstdint>
#include <random>

namespace aucshift {

// Stream derivation: every consumer of randomness owns an independent engine
// seeded by hashing (seed, replicate, resample, purpose). Results therefore
// depend only on those coordinates, never on execution order or thread count.

inline std::uint64_t mix64(std::uint64_t z) {
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

namespace stream {
inline constexpr std::uint64_t population = 1;
inline constexpr std::uint64_t selection = 2;
inline constexpr std::uint64_t rwd = 3;
inline constexpr std::uint64_t boot_validation = 4;
inline constexpr std::uint64_t boot_rwd = 5;
inline constexpr std::uint64_t oracle = 6;
inline constexpr std::uint64_t fixture = 7;
}  // namespace stream

inline std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t replicate,
                                 std::uint64_t resample, std::uint64_t purpose) {
  constexpr std::uint64_t golden = 0x9E3779B97F4A7C15ULL;
  std::uint64_t h = 0x243F6A8885A308D3ULL;
  h = mix64(h ^ (seed + golden));
  h = mix64(h ^ (replicate + golden));
  h = mix64(h ^ (resample + golden));
  h = mix64(h ^ (purpose + golden));
  return h;
}

// mt19937_64 output is fully pinned by the standard; uniform/normal are
// derived with explicit bit arithmetic (not std::*_distribution, whose
// algorithms vary across standard libraries), so sequences are portable.
class Rng {
 public:
  explicit Rng(std::uint64_t stream_seed) : eng_(stream_seed) {}

  std::uint64_t next_u64() { return eng_(); }

  // Uniform on [0,1) with 53 random bits.
  double uniform() {
    return static_cast<double>(eng_() >> 11) * 0x1.0p-53;
  }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // Standard normal via Box-Muller; the second deviate of each pair is cached.
  double normal() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    double u1 = 1.0 - uniform();  // (0,1]: keeps log() finite
    double u2 = uniform();
    double r = std::sqrt(-2.0 * std::log(u1));
    double theta = 2.0 * 3.14159265358979323846 * u2;
    spare_ = r * std::sin(theta);
    has_spare_ = true;
    return r * std::cos(theta);
  }

  double normal(double mean, double sd) { return mean + sd * normal(); }

  // Unbiased integer on [0, n) by rejection.
  std::uint64_t below(std::uint64_t n) {
    const std::uint64_t threshold = -n % n;  // 2^64 mod n
    for (;;) {
      std::uint64_t r = eng_();
      if (r >= threshold) return r % n;
    }
  }

 private:
  std::mt19937_64 eng_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace aucshift
