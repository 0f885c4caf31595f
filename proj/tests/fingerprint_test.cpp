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

#include "binaryshield/fingerprint.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <vector>

#include "oracles.hpp"

namespace binaryshield {
namespace {

using testing_oracles::naive_hamming;
using testing_oracles::random_bits;

DenseEmbedding Emb(std::vector<float> v) { return DenseEmbedding(std::move(v), "test"); }

TEST(QuantizeTest, SignRuleWithZeroMappingToZero) {
  const auto fp = quantize(Emb({0.3f, -1.2f, 0.0f, 2.5f}));
  ASSERT_EQ(fp.dim(), 4u);
  EXPECT_TRUE(fp.bit(0));
  EXPECT_FALSE(fp.bit(1));
  EXPECT_FALSE(fp.bit(2));
  EXPECT_TRUE(fp.bit(3));
  EXPECT_EQ(fp.bytes()[0], 0b1001);
}

TEST(QuantizeTest, NegativeZeroIsNotPositive) {
  EXPECT_FALSE(quantize(Emb({-0.0f})).bit(0));
}

TEST(QuantizeTest, AllNegative768GivesNinetySixZeroBytes) {
  const auto fp = quantize(Emb(std::vector<float>(768, -0.5f)));
  ASSERT_EQ(fp.bytes().size(), 96u);
  for (const auto b : fp.bytes()) EXPECT_EQ(b, 0);
}

TEST(QuantizeTest, GaussianPopcountNearHalf) {
  // Sign-symmetric generator: popcount ~ Binomial(768, 1/2), sd = sqrt(768)/2.
  const auto values = testing_oracles::gaussian_vector(768, 12345);
  const auto fp = quantize(Emb(values));
  EXPECT_NEAR(static_cast<double>(fp.popcount()), 384.0, 4 * 13.8564);
}

TEST(QuantizeTest, PopcountEqualsPositiveCount) {
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    const auto v = testing_oracles::gaussian_vector(100 + seed, seed);
    std::size_t positive = 0;
    for (const float x : v) positive += x > 0.0f;
    EXPECT_EQ(quantize(Emb(v)).popcount(), positive);
  }
}

TEST(QuantizeTest, PositiveScalingDoesNotChangeBits) {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    auto v = testing_oracles::gaussian_vector(768, seed);
    const auto base = quantize(Emb(v));
    for (const float s : {0.001f, 0.5f, 3.0f, 1000.0f}) {
      auto scaled = v;
      for (auto& x : scaled) x *= s;
      EXPECT_EQ(quantize(Emb(scaled)), base);
    }
  }
}

TEST(QuantizeTest, NonFiniteRejectedWithIndex) {
  try {
    Emb({1.0f, 2.0f, std::nanf(""), 3.0f});
    FAIL() << "expected NonFiniteValue";
  } catch (const NonFiniteValue& e) {
    EXPECT_EQ(e.index(), 2u);
  }
  EXPECT_THROW(Emb({INFINITY}), NonFiniteValue);
}

TEST(KeepProbabilityTest, ReferenceAndOracleValues) {
  EXPECT_NEAR(keep_probability(0.25), 0.562, 5e-4);
  // e^2 / (e^2 + 1), evaluated at 30 digits.
  EXPECT_NEAR(keep_probability(2.0), 0.880797077977882444, 1e-15);
  EXPECT_NEAR(keep_probability(1.0), 0.731058578630004879, 1e-15);
}

TEST(KeepProbabilityTest, LimitsAndMonotonicity) {
  EXPECT_NEAR(keep_probability(1e-9), 0.5, 1e-9);
  EXPECT_GT(keep_probability(1e-9), 0.5);
  EXPECT_NEAR(keep_probability(40.0), 1.0, 1e-15);
  double prev = 0.5;
  for (double a = 0.05; a < 10; a += 0.05) {
    const double p = keep_probability(a);
    EXPECT_GT(p, prev);
    prev = p;
  }
}

TEST(KeepProbabilityTest, RejectsNonPositiveAlpha) {
  EXPECT_THROW(keep_probability(0.0), InvalidArgument);
  EXPECT_THROW(keep_probability(-1.0), InvalidArgument);
  EXPECT_THROW(keep_probability(std::nan("")), InvalidArgument);
  EXPECT_THROW(PrivacyBudget(0.0), InvalidArgument);
}

TEST(ExpectedSelfDistortionTest, Values) {
  EXPECT_NEAR(expected_self_distortion(PrivacyBudget(0.2), 768), 345.7274900640169, 1e-9);
  EXPECT_NEAR(expected_self_distortion(PrivacyBudget(2.0), 768), 91.54784411298628, 1e-9);
  EXPECT_NEAR(expected_self_distortion(PrivacyBudget(60.0), 768), 0.0, 1e-20);
  EXPECT_THROW(expected_self_distortion(PrivacyBudget(1.0), 0), InvalidArgument);
}

TEST(ExpectedPairwiseDistortionTest, MatchesEnumeratedDisagreementProbability) {
  for (const double alpha : {0.25, 1.0, 2.0, 3.0}) {
    const double p = keep_probability(alpha);
    // Enumerate the four keep/flip outcomes of two independent draws.
    double disagree = 0.0;
    for (int first_keeps = 0; first_keeps < 2; ++first_keeps) {
      for (int second_keeps = 0; second_keeps < 2; ++second_keeps) {
        const double prob = (first_keeps ? p : 1 - p) * (second_keeps ? p : 1 - p);
        if (first_keeps != second_keeps) disagree += prob;
      }
    }
    EXPECT_NEAR(expected_pairwise_distortion(PrivacyBudget(alpha), 768), disagree * 768, 1e-9);
  }
  EXPECT_NEAR(expected_pairwise_distortion(PrivacyBudget(2.0), 768), 161.2701471797860, 1e-9);
}

TEST(PackBitsTest, LsbFirstLayout) {
  const std::vector<std::uint8_t> bits = {1, 0, 0, 0, 0, 0, 0, 0, 1};
  const auto bytes = pack_bits(bits);
  ASSERT_EQ(bytes.size(), 2u);
  EXPECT_EQ(bytes[0], 0x01);
  EXPECT_EQ(bytes[1], 0x01);
  EXPECT_EQ(pack_bits(std::vector<std::uint8_t>(768, 1)).size(), 96u);
}

TEST(PackBitsTest, RoundTripAgainstPerBitOracle) {
  for (std::uint64_t seed = 0; seed < 200; ++seed) {
    const std::size_t dim = 1 + seed * 7 % 800;
    const auto bits = random_bits(dim, seed);
    const auto bytes = pack_bits(bits);
    for (std::size_t i = 0; i < dim; ++i) {
      ASSERT_EQ((bytes[i / 8] >> (i % 8)) & 1, bits[i]);
    }
    EXPECT_EQ(unpack_bits(bytes, dim), bits);
    EXPECT_EQ(pack_bits(unpack_bits(bytes, dim)), bytes);
  }
}

TEST(PackBitsTest, RejectsBadInput) {
  EXPECT_THROW(pack_bits(std::vector<std::uint8_t>{0, 2}), InvalidArgument);
  EXPECT_THROW(unpack_bits(std::vector<std::uint8_t>{0x00, 0x02}, 9), CorruptFrame);
  EXPECT_THROW(unpack_bits(std::vector<std::uint8_t>{0x00}, 9), CorruptFrame);
  EXPECT_NO_THROW(unpack_bits(std::vector<std::uint8_t>{0xFF, 0x01}, 9));
  EXPECT_THROW(BinaryFingerprint::from_bytes({0x10}, 4), CorruptFrame);
}

TEST(HammingTest, SmallCases) {
  const auto a = BinaryFingerprint::from_bits(std::vector<std::uint8_t>{1, 0, 1, 1});
  const auto b = BinaryFingerprint::from_bits(std::vector<std::uint8_t>{1, 1, 1, 0});
  EXPECT_EQ(hamming(a, a), 0u);
  EXPECT_EQ(hamming(a, b), 2u);
}

TEST(HammingTest, DimensionMismatchNamesBoth) {
  const auto a = BinaryFingerprint::from_bits(std::vector<std::uint8_t>(8, 0));
  const auto b = BinaryFingerprint::from_bits(std::vector<std::uint8_t>(16, 0));
  try {
    hamming(a, b);
    FAIL();
  } catch (const DimensionMismatch& e) {
    EXPECT_EQ(e.expected(), 8u);
    EXPECT_EQ(e.actual(), 16u);
  }
}

TEST(HammingTest, ExhaustiveAgainstNaiveOracleSmallDims) {
  for (std::size_t dim = 1; dim <= 8; ++dim) {
    for (std::uint32_t x = 0; x < (1u << dim); ++x) {
      for (std::uint32_t y = 0; y < (1u << dim); ++y) {
        std::vector<std::uint8_t> bx(dim), by(dim);
        for (std::size_t i = 0; i < dim; ++i) {
          bx[i] = (x >> i) & 1;
          by[i] = (y >> i) & 1;
        }
        const auto fa = BinaryFingerprint::from_bits(bx);
        const auto fb = BinaryFingerprint::from_bits(by);
        ASSERT_EQ(hamming(fa, fb), naive_hamming(bx, by));
      }
    }
  }
}

TEST(HammingTest, MetricPropertiesOnRandomTriples) {
  for (std::uint64_t seed = 0; seed < 300; ++seed) {
    const auto a = BinaryFingerprint::from_bits(random_bits(768, 3 * seed));
    const auto b = BinaryFingerprint::from_bits(random_bits(768, 3 * seed + 1));
    const auto c = BinaryFingerprint::from_bits(random_bits(768, 3 * seed + 2));
    EXPECT_EQ(hamming(a, b), hamming(b, a));
    EXPECT_EQ(hamming(a, a), 0u);
    EXPECT_NE(hamming(a, b), 0u);
    EXPECT_LE(hamming(a, c), hamming(a, b) + hamming(b, c));
  }
}

TEST(RandomizeTest, DeterministicPerSeed) {
  const auto b = BinaryFingerprint::from_bits(random_bits(768, 7));
  const PrivacyBudget budget(1.0);
  EXPECT_EQ(randomize(b, budget, 42), randomize(b, budget, 42));
  EXPECT_NE(randomize(b, budget, 42).fingerprint(), randomize(b, budget, 43).fingerprint());
  EXPECT_EQ(randomize(b, budget, 42).noise_seed(), 42u);
}

TEST(RandomizeTest, FollowsPerBitDrawOrderContract) {
  // Independent re-derivation of the contract: draw i is the i-th word of
  // the counter stream mapped to [0, 1); bit kept iff u < p.
  const auto bits = random_bits(300, 99);
  const auto b = BinaryFingerprint::from_bits(bits);
  const PrivacyBudget budget(0.7);
  const auto out = randomize(b, budget, 2024);
  CounterRng rng(2024);
  for (std::size_t i = 0; i < bits.size(); ++i) {
    const double u = rng.uniform();
    const std::uint8_t expected = u < budget.keep_probability() ? bits[i] : 1 - bits[i];
    ASSERT_EQ(out.fingerprint().bit(i), expected == 1) << "bit " << i;
  }
}

TEST(RandomizeTest, HugeAlphaIsIdentity) {
  const auto b = BinaryFingerprint::from_bits(random_bits(768, 5));
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    EXPECT_EQ(randomize(b, PrivacyBudget(50.0), seed).fingerprint(), b);
  }
}

TEST(RandomizeTest, PaddingStaysZero) {
  const auto b = BinaryFingerprint::from_bits(random_bits(13, 5));
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    const auto out = randomize(b, PrivacyBudget(0.1), seed);
    EXPECT_EQ(out.bytes()[1] & 0xE0, 0);
  }
}

// Sample mean over n seeds within 4 standard errors of (1 - p) d.
void ExpectMeanSelfDistance(double alpha, std::size_t n) {
  const PrivacyBudget budget(alpha);
  const auto b = BinaryFingerprint::from_bits(random_bits(768, 11));
  double sum = 0.0;
  for (std::uint64_t seed = 0; seed < n; ++seed) {
    sum += static_cast<double>(hamming(b, randomize(b, budget, derive_seed(77, seed))));
  }
  const double p = budget.keep_probability();
  const double se = std::sqrt(768 * p * (1 - p) / static_cast<double>(n));
  EXPECT_NEAR(sum / static_cast<double>(n), (1 - p) * 768, 4 * se) << "alpha " << alpha;
}

TEST(RandomizeTest, MeanSelfDistanceMatchesTheory) {
  ExpectMeanSelfDistance(0.25, 500);  // ~336
  ExpectMeanSelfDistance(1.0, 500);   // ~206.5
  ExpectMeanSelfDistance(2.0, 500);
}

TEST(HammingTest, IndependentRandomPairsNearHalf) {
  double sum = 0.0;
  for (std::uint64_t i = 0; i < 1000; ++i) {
    const auto a = BinaryFingerprint::from_bits(random_bits(768, 2 * i + 1000));
    const auto b = BinaryFingerprint::from_bits(random_bits(768, 2 * i + 1001));
    sum += static_cast<double>(hamming(a, b));
  }
  // Binomial(768, 1/2) mean over 1000 pairs: se = 13.86 / sqrt(1000).
  EXPECT_NEAR(sum / 1000.0, 384.0, 4 * 13.8564 / std::sqrt(1000.0));
}

}  // namespace
}  // namespace binaryshield
