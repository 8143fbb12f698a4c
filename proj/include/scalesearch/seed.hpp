// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <limits>
#include <span>
#include <string_view>

namespace scalesearch {

using Seed = std::uint64_t;

// Seed mixing recipe (frozen; the remote server reimplements it bit-exactly):
//
//   mix64(z):  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9
//              z = (z ^ (z >> 27)) * 0x94D049BB133111EB
//              return z ^ (z >> 31)
//
//   derive_seed(parent, scale, branch, position):
//     h = mix64(parent + 0x9E3779B97F4A7C15)
//     h = mix64(h ^ ((scale    + 1) * 0xD1B54A32D192ED03))
//     h = mix64(h ^ ((branch   + 1) * 0xABC98388FB8FAC03))
//     h = mix64(h ^ ((position + 1) * 0x8CB92BA72F3D8DD7))
//     return h
//
// All arithmetic is modulo 2^64. Each stage is a bijection of the running
// value, so the result is injective in each argument with the others fixed.

inline constexpr std::uint64_t kGolden = 0x9E3779B97F4A7C15ULL;

constexpr std::uint64_t mix64(std::uint64_t z) noexcept {
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

constexpr Seed derive_seed(Seed parent, std::uint64_t scale, std::uint64_t branch,
                           std::uint64_t position) noexcept {
  std::uint64_t h = mix64(parent + kGolden);
  h = mix64(h ^ ((scale + 1) * 0xD1B54A32D192ED03ULL));
  h = mix64(h ^ ((branch + 1) * 0xABC98388FB8FAC03ULL));
  h = mix64(h ^ ((position + 1) * 0x8CB92BA72F3D8DD7ULL));
  return h;
}

/// SplitMix64 stream. Satisfies UniformRandomBitGenerator so it can feed
/// <algorithm> utilities, but the helpers below are what cross-language code
/// relies on.
class SplitMix64 {
 public:
  using result_type = std::uint64_t;

  explicit constexpr SplitMix64(Seed seed) noexcept : state_(seed) {}

  constexpr result_type operator()() noexcept {
    state_ += kGolden;
    return mix64(state_);
  }

  /// Uniform double in [0, 1) from the top 53 bits of the next output.
  constexpr double next_unit() noexcept {
    return static_cast<double>((*this)() >> 11) * 0x1.0p-53;
  }

  /// floor(next_unit() * n), clamped to n - 1. n must be positive.
  constexpr std::uint64_t next_below(std::uint64_t n) noexcept {
    const auto v = static_cast<std::uint64_t>(next_unit() * static_cast<double>(n));
    return v < n ? v : n - 1;
  }

  static constexpr result_type min() noexcept { return 0; }
  static constexpr result_type max() noexcept {
    return std::numeric_limits<result_type>::max();
  }

 private:
  std::uint64_t state_;
};

/// 64-bit FNV-1a over raw bytes.
constexpr std::uint64_t fnv1a(std::string_view bytes) noexcept {
  std::uint64_t h = 0xCBF29CE484222325ULL;
  for (const char ch : bytes) {
    h ^= static_cast<unsigned char>(ch);
    h *= 0x100000001B3ULL;
  }
  return h;
}

/// FNV-1a over 32-bit values, each fed as four little-endian bytes.
constexpr std::uint64_t fnv1a(std::span<const std::uint32_t> values) noexcept {
  std::uint64_t h = 0xCBF29CE484222325ULL;
  for (const std::uint32_t v : values) {
    for (int shift = 0; shift < 32; shift += 8) {
      h ^= (v >> shift) & 0xFFu;
      h *= 0x100000001B3ULL;
    }
  }
  return h;
}

}  // namespace scalesearch
