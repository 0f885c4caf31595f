// Copyright 2026 The BinaryShield Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

// Deterministic, platform-independent randomness.
//
// Every random quantity in the library (bit-flip noise, pseudo embeddings,
// synthetic corpora) comes from the SplitMix64 counter stream below, so the
// same seed yields the same bytes on every platform and standard library.
// Draw k of stream `seed` is
//
//     mix64(seed + (k + 1) * 0x9E3779B97F4A7C15)
//
// and a uniform double in [0, 1) takes the top 53 bits of that word.

#include <cstdint>
#include <string_view>

namespace binaryshield {

inline constexpr std::uint64_t kGoldenGamma = 0x9E3779B97F4A7C15ULL;

/// SplitMix64 finalizer (Stafford variant 13).
constexpr std::uint64_t mix64(std::uint64_t z) noexcept {
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

/// Word `index` of the counter stream keyed by `seed`.
constexpr std::uint64_t counter_word(std::uint64_t seed,
                                     std::uint64_t index) noexcept {
  return mix64(seed + (index + 1) * kGoldenGamma);
}

/// Maps a 64-bit word to [0, 1) using its top 53 bits.
constexpr double to_unit_double(std::uint64_t word) noexcept {
  return static_cast<double>(word >> 11) * 0x1.0p-53;
}

/// Child seed for an independent sub-stream (e.g. one per prompt).
constexpr std::uint64_t derive_seed(std::uint64_t seed,
                                    std::uint64_t stream) noexcept {
  return mix64(mix64(seed ^ 0xD1B54A32D192ED03ULL) + stream * kGoldenGamma);
}

/// Sequential view over a counter stream. Copyable; copies replay the same
/// sequence from the copied position.
class CounterRng {
 public:
  using result_type = std::uint64_t;

  explicit constexpr CounterRng(std::uint64_t seed) noexcept : seed_(seed) {}

  static constexpr result_type min() noexcept { return 0; }
  static constexpr result_type max() noexcept { return ~result_type{0}; }

  constexpr result_type operator()() noexcept {
    return counter_word(seed_, counter_++);
  }

  constexpr double uniform() noexcept { return to_unit_double((*this)()); }

  /// Uniform integer in [0, n). Lemire's multiply-shift with rejection.
  std::uint64_t below(std::uint64_t n) noexcept {
    if (n <= 1) return 0;
    const std::uint64_t threshold = (0 - n) % n;
    for (;;) {
      const unsigned __int128 m =
          static_cast<unsigned __int128>((*this)()) * n;
      if (static_cast<std::uint64_t>(m) >= threshold) {
        return static_cast<std::uint64_t>(m >> 64);
      }
    }
  }

  constexpr std::uint64_t seed() const noexcept { return seed_; }
  constexpr std::uint64_t position() const noexcept { return counter_; }

 private:
  std::uint64_t seed_;
  std::uint64_t counter_ = 0;
};

/// Stable 64-bit string hash: FNV-1a over the bytes, then mix64 so every
/// output bit depends on every input byte.
constexpr std::uint64_t stable_hash64(std::string_view bytes) noexcept {
  std::uint64_t h = 0xCBF29CE484222325ULL;
  for (const char c : bytes) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001B3ULL;
  }
  return mix64(h);
}

}  // namespace binaryshield
