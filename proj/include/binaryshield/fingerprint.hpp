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

// Dense embedding -> sign-quantized bits -> randomized-response bits, and
// Hamming arithmetic over the packed representation.
//
// Packed layout: bit i lives in byte i / 8 at position i % 8 (LSB first).
// Bits past dim - 1 in the last byte are always zero.

#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "binaryshield/error.hpp"
#include "binaryshield/rng.hpp"

namespace binaryshield {

inline constexpr std::size_t kDefaultDim = 768;

constexpr std::size_t packed_size(std::size_t dim) noexcept {
  return (dim + 7) / 8;
}

/// Packs a sequence of 0/1 values LSB-first.
inline std::vector<std::uint8_t> pack_bits(std::span<const std::uint8_t> bits) {
  std::vector<std::uint8_t> out(packed_size(bits.size()), 0);
  for (std::size_t i = 0; i < bits.size(); ++i) {
    if (bits[i] > 1) {
      throw InvalidArgument("bit " + std::to_string(i) + " is not 0 or 1");
    }
    out[i / 8] |= static_cast<std::uint8_t>(bits[i] << (i % 8));
  }
  return out;
}

/// Throws CorruptFrame unless `bytes` is a valid packing of `dim` bits.
inline void validate_packed(std::span<const std::uint8_t> bytes,
                            std::size_t dim) {
  if (dim == 0) throw CorruptFrame("dimension must be positive");
  if (bytes.size() != packed_size(dim)) {
    throw CorruptFrame("packed length " + std::to_string(bytes.size()) +
                       " does not match dim " + std::to_string(dim) +
                       " (expected " + std::to_string(packed_size(dim)) + ")");
  }
  if (const std::size_t used = dim % 8; used != 0) {
    const auto mask = static_cast<std::uint8_t>(0xFFu << used);
    if (bytes.back() & mask) throw CorruptFrame("nonzero padding bits");
  }
}

inline std::vector<std::uint8_t> unpack_bits(std::span<const std::uint8_t> bytes,
                                             std::size_t dim) {
  validate_packed(bytes, dim);
  std::vector<std::uint8_t> bits(dim);
  for (std::size_t i = 0; i < dim; ++i) bits[i] = (bytes[i / 8] >> (i % 8)) & 1u;
  return bits;
}

/// XOR + popcount over equal-length packed buffers, eight bytes at a time.
inline std::size_t hamming_packed(std::span<const std::uint8_t> a,
                                  std::span<const std::uint8_t> b) noexcept {
  const std::size_t n = a.size() < b.size() ? a.size() : b.size();
  std::size_t i = 0;
  std::size_t total = 0;
  for (; i + 8 <= n; i += 8) {
    std::uint64_t x, y;
    std::memcpy(&x, a.data() + i, 8);
    std::memcpy(&y, b.data() + i, 8);
    total += static_cast<std::size_t>(std::popcount(x ^ y));
  }
  for (; i < n; ++i) {
    total += static_cast<std::size_t>(
        std::popcount(static_cast<unsigned>(a[i] ^ b[i])));
  }
  return total;
}

/// A real-valued embedding as returned by a provider.
class DenseEmbedding {
 public:
  DenseEmbedding(std::vector<float> values, std::string model_id)
      : values_(std::move(values)), model_id_(std::move(model_id)) {
    if (values_.empty()) throw InvalidArgument("embedding must be non-empty");
    for (std::size_t i = 0; i < values_.size(); ++i) {
      if (!std::isfinite(values_[i])) throw NonFiniteValue(i);
    }
  }

  std::span<const float> values() const noexcept { return values_; }
  std::size_t dim() const noexcept { return values_.size(); }
  const std::string& model_id() const noexcept { return model_id_; }

  friend bool operator==(const DenseEmbedding&, const DenseEmbedding&) = default;

 private:
  std::vector<float> values_;
  std::string model_id_;
};

/// d packed bits with zero padding.
class BinaryFingerprint {
 public:
  BinaryFingerprint() = default;

  /// Validates length and padding; throws CorruptFrame otherwise.
  static BinaryFingerprint from_bytes(std::vector<std::uint8_t> bytes,
                                      std::size_t dim) {
    validate_packed(bytes, dim);
    return BinaryFingerprint(std::move(bytes), dim);
  }

  static BinaryFingerprint from_bits(std::span<const std::uint8_t> bits) {
    if (bits.empty()) throw InvalidArgument("dimension must be positive");
    return BinaryFingerprint(pack_bits(bits), bits.size());
  }

  std::span<const std::uint8_t> bytes() const noexcept { return bytes_; }
  std::size_t dim() const noexcept { return dim_; }

  bool bit(std::size_t i) const noexcept {
    return (bytes_[i / 8] >> (i % 8)) & 1u;
  }

  std::size_t popcount() const noexcept {
    std::size_t total = 0;
    for (const auto b : bytes_) total += std::popcount(static_cast<unsigned>(b));
    return total;
  }

  friend bool operator==(const BinaryFingerprint&,
                         const BinaryFingerprint&) = default;

 private:
  BinaryFingerprint(std::vector<std::uint8_t> bytes, std::size_t dim)
      : bytes_(std::move(bytes)), dim_(dim) {}

  std::vector<std::uint8_t> bytes_;
  std::size_t dim_ = 0;
};

/// keep probability p = e^a / (e^a + 1), computed as 1 / (1 + e^-a) so that
/// large budgets saturate at 1 instead of overflowing.
inline double keep_probability(double alpha) {
  if (!(alpha > 0.0) || !std::isfinite(alpha)) {
    throw InvalidArgument("privacy budget alpha must be finite and > 0, got " +
                          std::to_string(alpha));
  }
  return 1.0 / (1.0 + std::exp(-alpha));
}

/// Per-bit privacy budget for randomized response, in nats.
class PrivacyBudget {
 public:
  explicit PrivacyBudget(double alpha)
      : alpha_(alpha),
        keep_(binaryshield::keep_probability(alpha)),
        flip_(1.0 / (1.0 + std::exp(alpha))) {}

  double alpha() const noexcept { return alpha_; }
  double keep_probability() const noexcept { return keep_; }
  double flip_probability() const noexcept { return flip_; }

  friend bool operator==(const PrivacyBudget& a, const PrivacyBudget& b) {
    return a.alpha_ == b.alpha_;
  }

 private:
  double alpha_;
  double keep_;
  double flip_;
};

inline double keep_probability(const PrivacyBudget& budget) noexcept {
  return budget.keep_probability();
}

/// Randomized-response output. The noise seed is a local reproducibility
/// handle and is never serialized into exchange frames.
class PrivatizedFingerprint {
 public:
  PrivatizedFingerprint(BinaryFingerprint bits, PrivacyBudget budget,
                        std::uint64_t noise_seed)
      : bits_(std::move(bits)), budget_(budget), noise_seed_(noise_seed) {}

  const BinaryFingerprint& fingerprint() const noexcept { return bits_; }
  std::span<const std::uint8_t> bytes() const noexcept { return bits_.bytes(); }
  std::size_t dim() const noexcept { return bits_.dim(); }
  const PrivacyBudget& budget() const noexcept { return budget_; }
  std::uint64_t noise_seed() const noexcept { return noise_seed_; }

  friend bool operator==(const PrivatizedFingerprint&,
                         const PrivatizedFingerprint&) = default;

 private:
  BinaryFingerprint bits_;
  PrivacyBudget budget_;
  std::uint64_t noise_seed_;
};

/// Anything exposing packed bytes and a dimension.
template <typename T>
concept PackedBits = requires(const T& t) {
  { t.bytes() } -> std::convertible_to<std::span<const std::uint8_t>>;
  { t.dim() } -> std::convertible_to<std::size_t>;
};

/// Number of differing bit positions. Throws DimensionMismatch on unequal dims.
template <PackedBits A, PackedBits B>
std::size_t hamming(const A& a, const B& b) {
  if (a.dim() != b.dim()) throw DimensionMismatch(a.dim(), b.dim());
  return hamming_packed(a.bytes(), b.bytes());
}

/// Sign quantization: bit i is 1 iff value i is strictly positive.
inline BinaryFingerprint quantize(const DenseEmbedding& e) {
  const auto values = e.values();
  std::vector<std::uint8_t> bytes(packed_size(values.size()), 0);
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (values[i] > 0.0f) bytes[i / 8] |= static_cast<std::uint8_t>(1u << (i % 8));
  }
  return BinaryFingerprint::from_bytes(std::move(bytes), values.size());
}

/// Randomized response. Exactly dim uniforms are drawn from the counter
/// stream of `seed`, draw i deciding bit i: kept iff u_i < p, else flipped.
inline PrivatizedFingerprint randomize(const BinaryFingerprint& b,
                                       const PrivacyBudget& budget,
                                       std::uint64_t seed) {
  const double p = budget.keep_probability();
  std::vector<std::uint8_t> out(b.bytes().begin(), b.bytes().end());
  for (std::size_t i = 0; i < b.dim(); ++i) {
    const double u = to_unit_double(counter_word(seed, i));
    if (!(u < p)) out[i / 8] ^= static_cast<std::uint8_t>(1u << (i % 8));
  }
  return PrivatizedFingerprint(BinaryFingerprint::from_bytes(std::move(out), b.dim()),
                               budget, seed);
}

/// E[H(b, randomize(b))] = (1 - p) d.
inline double expected_self_distortion(const PrivacyBudget& budget,
                                       std::size_t dim) {
  if (dim == 0) throw InvalidArgument("dimension must be >= 1");
  return budget.flip_probability() * static_cast<double>(dim);
}

/// Expected distance between two independent randomizations of the same
/// bits: each position disagrees with probability 2p(1 - p).
inline double expected_pairwise_distortion(const PrivacyBudget& budget,
                                           std::size_t dim) {
  const double p = budget.keep_probability();
  return 2.0 * p * (1.0 - p) * static_cast<double>(dim);
}

}  // namespace binaryshield
