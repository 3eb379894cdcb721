#pragma once

#include <cstdint>

namespace stegcost {

/// xorshift64* generator. One step:
///   x ^= x >> 12;  x ^= x << 25;  x ^= x >> 27;  out = x * 0x2545F4914F6CDD1D
/// The state is initialised from the user seed through one splitmix64 round
/// (zero maps to a fixed nonzero constant). uniform() takes the top 53 bits of
/// the output, giving a double in [0, 1).
class Xorshift64Star {
 public:
  explicit Xorshift64Star(std::uint64_t seed = 0) : state_(mix(seed)) {}

  static Xorshift64Star from_state(std::uint64_t state) {
    Xorshift64Star rng;
    rng.state_ = state == 0 ? kZeroStateReplacement : state;
    return rng;
  }

  std::uint64_t next() {
    state_ ^= state_ >> 12;
    state_ ^= state_ << 25;
    state_ ^= state_ >> 27;
    return state_ * 0x2545F4914F6CDD1DULL;
  }

  double uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

  /// Uniform integer in [0, n), n > 0.
  std::uint64_t below(std::uint64_t n) {
    return static_cast<std::uint64_t>(uniform() * static_cast<double>(n)) % n;
  }

  std::uint64_t state() const { return state_; }

  /// splitmix64 finaliser, also used to derive per-item seeds.
  static std::uint64_t mix(std::uint64_t z) {
    z += 0x9E3779B97F4A7C15ULL;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    z ^= z >> 31;
    return z == 0 ? kZeroStateReplacement : z;
  }

 private:
  static constexpr std::uint64_t kZeroStateReplacement = 0x853C49E6748FEA9BULL;
  std::uint64_t state_;
};

/// Seed for item `index` of a batch seeded with `seed`.
inline std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t index) {
  return Xorshift64Star::mix(seed ^ Xorshift64Star::mix(index + 0x632BE59BD9B4E019ULL));
}

}  // namespace stegcost
