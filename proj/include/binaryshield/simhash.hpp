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

// 64-bit SimHash baseline.
//
// Features are lowercase word unigrams ("tok") and adjacent bigrams
// ("tok1 tok2"), weighted by occurrence count. Each feature hashes with
// stable_hash64; bit j of the result is 1 iff the weighted vote for bit j is
// strictly positive.

#include <array>
#include <bit>
#include <cstdint>
#include <map>
#include <string>
#include <string_view>

#include "binaryshield/rng.hpp"
#include "binaryshield/text.hpp"

namespace binaryshield {

struct SimHashFingerprint {
  std::uint64_t bits = 0;
  std::size_t feature_count = 0;

  static constexpr std::size_t dim() noexcept { return 64; }
  friend bool operator==(const SimHashFingerprint&, const SimHashFingerprint&) = default;
};

/// Weighted feature multiset of a text.
inline std::map<std::string, std::int64_t> simhash_features(std::string_view text) {
  const auto tokens = tokenize_words(text);
  std::map<std::string, std::int64_t> features;
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    ++features[tokens[i]];
    if (i + 1 < tokens.size()) ++features[tokens[i] + " " + tokens[i + 1]];
  }
  return features;
}

inline SimHashFingerprint simhash(std::string_view text) {
  const auto features = simhash_features(text);
  std::array<std::int64_t, 64> votes{};
  for (const auto& [feature, weight] : features) {
    const std::uint64_t h = stable_hash64(feature);
    for (int j = 0; j < 64; ++j) votes[j] += ((h >> j) & 1u) ? weight : -weight;
  }
  SimHashFingerprint fp;
  for (int j = 0; j < 64; ++j) {
    if (votes[j] > 0) fp.bits |= std::uint64_t{1} << j;
  }
  fp.feature_count = features.size();
  return fp;
}

constexpr std::size_t simhash_distance(const SimHashFingerprint& a,
                                       const SimHashFingerprint& b) noexcept {
  return static_cast<std::size_t>(std::popcount(a.bits ^ b.bits));
}

}  // namespace binaryshield
