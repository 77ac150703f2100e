#pragma once

#include <cstdint>

namespace dctshield {

inline constexpr std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ull;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
  return x ^ (x >> 31);
}

/// Counter-based random stream: the draw at position n depends only on
/// (seed, tag, n), so any iteration order or thread split reproduces the
/// same values.
class CounterStream {
 public:
  constexpr CounterStream(std::uint64_t seed, std::uint64_t tag)
      : key_(splitmix64(seed ^ splitmix64(tag ^ 0x5DEECE66Dull))) {}

  constexpr std::uint64_t bits(std::uint64_t position) const {
    return splitmix64(key_ + position * 0x9E3779B97F4A7C15ull);
  }

  /// Uniform on the open interval (0, 1) with 53-bit resolution.
  constexpr double uniform_open(std::uint64_t position) const {
    return (static_cast<double>(bits(position) >> 11) + 0.5) * 0x1.0p-53;
  }

 private:
  std::uint64_t key_;
};

// stream tags
inline constexpr std::uint64_t kDitherTagBase = 0x100;
inline constexpr std::uint64_t kDeblockTag = 0x200;

}  // namespace dctshield
