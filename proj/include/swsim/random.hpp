#pragma once

#include <cstdint>
#include <cstring>
#include <limits>

namespace swsim {

inline constexpr std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

/// Mix an ordered tuple of 64-bit words into a single key.
template <class... Words>
constexpr std::uint64_t hash_key(std::uint64_t seed, Words... words) {
  std::uint64_t h = splitmix64(seed);
  ((h = splitmix64(h ^ splitmix64(static_cast<std::uint64_t>(words)))), ...);
  return h;
}

inline std::uint64_t double_bits(double v) {
  std::uint64_t bits;
  std::memcpy(&bits, &v, sizeof bits);
  return bits;
}

/// SplitMix64 generator; satisfies UniformRandomBitGenerator.
class SplitMix64 {
 public:
  using result_type = std::uint64_t;

  explicit SplitMix64(std::uint64_t seed) : state_(seed) {}

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }

  result_type operator()() {
    state_ += 0x9e3779b97f4a7c15ULL;
    std::uint64_t z = state_;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  /// Uniform double in [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>((*this)() >> 11) * 0x1.0p-53; }

 private:
  std::uint64_t state_;
};

/// Purpose tags for keyed sub-streams.
enum class Purpose : std::uint64_t {
  allocation = 1,
  cohort,
  outcome,
  baseline_age,
  widowhood,
  attrition,
  cluster_effect,
  participant_effect,
  residual,
};

/// A node in a tree of independent random streams. Children are derived by
/// hashing keys, so results never depend on the order in which streams are
/// visited.
class RandomStream {
 public:
  explicit RandomStream(std::uint64_t key) : key_(key) {}

  template <class... Words>
  RandomStream child(Purpose purpose, Words... words) const {
    return RandomStream(hash_key(key_, static_cast<std::uint64_t>(purpose),
                                 static_cast<std::uint64_t>(words)...));
  }

  SplitMix64 engine() const { return SplitMix64(key_); }
  std::uint64_t key() const { return key_; }

 private:
  std::uint64_t key_;
};

}  // namespace swsim
