#ifndef POLAR_RNG_HPP
#define POLAR_RNG_HPP

#include <cstdint>

namespace polar {

// xoshiro256++ (Blackman & Vigna, public domain reference algorithm), seeded
// through splitmix64. Streams are derived as stream(master_seed, index) with
// the index hashed into the splitmix state, so replications can run in any
// order and still see the same numbers.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) { seed_from(seed); }

  static Rng stream(std::uint64_t master_seed, std::uint64_t index) {
    return Rng(fmix64(master_seed ^ fmix64(index + 0x9E3779B97F4A7C15ULL)));
  }

  std::uint64_t next_u64() {
    const std::uint64_t result = rotl(s_[0] + s_[3], 23) + s_[0];
    const std::uint64_t t = s_[1] << 17;
    s_[2] ^= s_[0];
    s_[3] ^= s_[1];
    s_[1] ^= s_[2];
    s_[0] ^= s_[3];
    s_[2] ^= t;
    s_[3] = rotl(s_[3], 45);
    return result;
  }

  // Uniform on the open interval (0, 1).
  double uniform01() {
    return (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1.0p-53;
  }

 private:
  std::uint64_t s_[4];

  void seed_from(std::uint64_t seed) {
    std::uint64_t x = seed;
    for (auto& w : s_) {
      x += 0x9E3779B97F4A7C15ULL;
      w = fmix64(x);
    }
  }

  static std::uint64_t rotl(std::uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }

  // murmur3 64-bit finalizer
  static std::uint64_t fmix64(std::uint64_t k) {
    k ^= k >> 33;
    k *= 0xFF51AFD7ED558CCDULL;
    k ^= k >> 33;
    k *= 0xC4CEB9FE1A85EC53ULL;
    k ^= k >> 33;
    return k;
  }
};

}  // namespace polar

#endif  // POLAR_RNG_HPP
