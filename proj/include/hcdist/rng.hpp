#ifndef HCDIST_RNG_HPP
#define HCDIST_RNG_HPP

#include <cstdint>

namespace hcdist {

// SplitMix64 finalizer. All randomness in the library is a pure function of
// (seed, key..., counter) so results never depend on evaluation order.
constexpr std::uint64_t mix64(std::uint64_t x) noexcept {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

constexpr std::uint64_t hash_combine(std::uint64_t seed, std::uint64_t a) noexcept {
  return mix64(seed ^ mix64(a + 0x632be59bd9b4e019ULL));
}

constexpr std::uint64_t hash_combine(std::uint64_t seed, std::uint64_t a,
                                     std::uint64_t b) noexcept {
  return hash_combine(hash_combine(seed, a), b);
}

// Uniform double in [0, 1) from the top 53 bits.
constexpr double to_unit(std::uint64_t h) noexcept {
  return static_cast<double>(h >> 11) * 0x1.0p-53;
}

// Uniform integer in [0, bound) by multiply-shift; bound must be > 0.
constexpr std::uint64_t scale_below(std::uint64_t h, std::uint64_t bound) noexcept {
  return static_cast<std::uint64_t>((static_cast<unsigned __int128>(h) * bound) >> 64);
}

/// Counter-based stream: draw k of node v under seed s is hash(s, v, k).
class NodeRng {
 public:
  NodeRng() = default;
  NodeRng(std::uint64_t seed, std::uint64_t stream) noexcept
      : key_(hash_combine(seed, stream)) {}

  std::uint64_t next() noexcept { return hash_combine(key_, counter_++); }
  std::uint64_t below(std::uint64_t bound) noexcept { return scale_below(next(), bound); }
  double unit() noexcept { return to_unit(next()); }
  std::uint64_t draws() const noexcept { return counter_; }

 private:
  std::uint64_t key_ = 0;
  std::uint64_t counter_ = 0;
};

}  // namespace hcdist

#endif  // HCDIST_RNG_HPP
