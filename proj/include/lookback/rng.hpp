#pragma once

#include <cmath>
#include <cstdint>
#include <string_view>

namespace lookback {

namespace detail {
inline std::uint64_t splitmix64(std::uint64_t& state) {
  std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}
inline std::uint64_t fnv1a64(std::string_view s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}
}  // namespace detail

// xoshiro256** stream with splitmix64 seeding. Every random decision in the
// artifact flows through streams derived from one master seed via
// Rng::derive(seed, tag[, index]); the derivation is position-independent, so
// reordering or parallelizing consumers cannot change what each one draws.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) {
    std::uint64_t sm = seed;
    for (auto& word : s_) word = detail::splitmix64(sm);
  }

  static Rng derive(std::uint64_t seed, std::string_view tag) {
    std::uint64_t sm = seed ^ detail::fnv1a64(tag);
    return Rng(detail::splitmix64(sm));
  }
  static Rng derive(std::uint64_t seed, std::string_view tag, std::uint64_t index) {
    std::uint64_t sm = seed ^ detail::fnv1a64(tag);
    std::uint64_t base = detail::splitmix64(sm);
    std::uint64_t mix = base ^ (index + 0x9e3779b97f4a7c15ULL);
    return Rng(detail::splitmix64(mix));
  }

  std::uint64_t next_u64() {
    const std::uint64_t result = rotl(s_[1] * 5, 7) * 9;
    const std::uint64_t t = s_[1] << 17;
    s_[2] ^= s_[0];
    s_[3] ^= s_[1];
    s_[1] ^= s_[2];
    s_[0] ^= s_[3];
    s_[2] ^= t;
    s_[3] = rotl(s_[3], 45);
    return result;
  }

  // Uniform in [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  // Unbiased integer in [0, n).
  std::int64_t uniform_int(std::int64_t n) {
    const std::uint64_t un = static_cast<std::uint64_t>(n);
    const std::uint64_t bound = un == 0 ? 0 : (0ULL - un) % un;  // 2^64 mod n
    std::uint64_t r;
    do {
      r = next_u64();
    } while (r < bound);
    return static_cast<std::int64_t>(r % un);
  }

  // Box-Muller without a cached spare, so the generator state alone is the
  // full RNG state.
  double normal() {
    double u1;
    do {
      u1 = uniform();
    } while (u1 <= 0.0);
    const double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
  }

 private:
  static std::uint64_t rotl(std::uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }
  std::uint64_t s_[4];
};

}  // namespace lookback
