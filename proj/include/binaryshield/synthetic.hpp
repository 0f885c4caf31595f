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

// Seeded synthetic corpora for evaluation without an LLM.
//
// Prompts are sequences of distinct pseudo-words. An attack "variant" is the
// base prompt with a controlled number of token positions replaced by fresh
// words, so detection difficulty is set directly by the substitution count:
//
//   V1, V3, V5, V10, V20   that many tokens replaced
//   PARAPHRASE             paraphrase_fraction of the tokens replaced
//
// Benign pairs are two independently drawn prompts.

#include <algorithm>
#include <cmath>
#include <string>
#include <unordered_set>
#include <vector>

#include "binaryshield/dataset.hpp"
#include "binaryshield/rng.hpp"

namespace binaryshield::synthetic {

/// Deterministic vocabulary of distinct lowercase pseudo-words.
class Vocabulary {
 public:
  explicit Vocabulary(std::size_t size = 20000, std::uint64_t seed = 0x5EED) {
    static constexpr const char* kOnsets[] = {"b", "c", "d", "f", "g", "h", "j", "k", "l", "m",
                                              "n", "p", "r", "s", "t", "v", "w", "z", "br", "st",
                                              "tr", "pl", "gr", "sh", "ch", "th", "kr", "fl"};
    static constexpr const char* kVowels[] = {"a", "e", "i", "o", "u", "ai", "ou", "ea", "io"};
    CounterRng rng(seed);
    std::unordered_set<std::string> seen;
    while (words_.size() < size) {
      const std::size_t syllables = 2 + rng.below(3);
      std::string w;
      for (std::size_t s = 0; s < syllables; ++s) {
        w += kOnsets[rng.below(std::size(kOnsets))];
        w += kVowels[rng.below(std::size(kVowels))];
      }
      if (seen.insert(w).second) words_.push_back(std::move(w));
    }
  }

  std::size_t size() const noexcept { return words_.size(); }
  const std::string& operator[](std::size_t i) const { return words_[i]; }

 private:
  std::vector<std::string> words_;
};

inline const Vocabulary& default_vocabulary() {
  static const Vocabulary v;
  return v;
}

/// `n` distinct vocabulary indices.
inline std::vector<std::size_t> draw_distinct(CounterRng& rng, std::size_t n, std::size_t vocab) {
  std::unordered_set<std::size_t> used;
  std::vector<std::size_t> out;
  out.reserve(n);
  while (out.size() < n) {
    const std::size_t w = rng.below(vocab);
    if (used.insert(w).second) out.push_back(w);
  }
  return out;
}

inline std::string join(const std::vector<std::size_t>& idx, const Vocabulary& vocab) {
  std::string s;
  for (std::size_t i = 0; i < idx.size(); ++i) {
    if (i) s += ' ';
    s += vocab[idx[i]];
  }
  return s;
}

/// Replaces `count` distinct positions with words absent from the prompt.
inline std::vector<std::size_t> substitute(const std::vector<std::size_t>& base, std::size_t count,
                                           CounterRng& rng, std::size_t vocab) {
  count = std::min(count, base.size());
  std::vector<std::size_t> out = base;
  std::unordered_set<std::size_t> present(base.begin(), base.end());
  std::vector<std::size_t> positions(base.size());
  for (std::size_t i = 0; i < positions.size(); ++i) positions[i] = i;
  for (std::size_t i = 0; i < count; ++i) {
    const std::size_t j = i + rng.below(positions.size() - i);
    std::swap(positions[i], positions[j]);
    std::size_t w;
    do {
      w = rng.below(vocab);
    } while (present.count(w));
    present.insert(w);
    out[positions[i]] = w;
  }
  return out;
}

inline std::size_t substitution_count(VariantType v, std::size_t tokens, double paraphrase_fraction) {
  switch (v) {
    case VariantType::kV1: return 1;
    case VariantType::kV3: return 3;
    case VariantType::kV5: return 5;
    case VariantType::kV10: return 10;
    case VariantType::kV20: return 20;
    case VariantType::kParaphrase:
      return static_cast<std::size_t>(std::lround(paraphrase_fraction * static_cast<double>(tokens)));
    case VariantType::kBenignPair: return tokens;
  }
  return 0;
}

struct PairCorpusConfig {
  std::size_t attack_pairs = 500;
  std::size_t benign_pairs = 500;
  std::size_t tokens_per_prompt = 40;
  /// Attack pairs cycle through these variant types in order.
  std::vector<VariantType> variants = {VariantType::kV1,  VariantType::kV3,  VariantType::kV5,
                                       VariantType::kV10, VariantType::kV20, VariantType::kParaphrase};
  double paraphrase_fraction = 0.6;
  std::uint64_t seed = 1;
};

/// Attack pairs first, then benign pairs; ids "a<i>" and "b<i>".
inline std::vector<PairRecord> generate_pairs(const PairCorpusConfig& cfg,
                                              const Vocabulary& vocab = default_vocabulary()) {
  if (cfg.tokens_per_prompt == 0) throw InvalidArgument("tokens_per_prompt must be positive");
  if (cfg.attack_pairs > 0 && cfg.variants.empty()) throw InvalidArgument("no variant types");
  std::vector<PairRecord> out;
  out.reserve(cfg.attack_pairs + cfg.benign_pairs);
  for (std::size_t i = 0; i < cfg.attack_pairs; ++i) {
    CounterRng rng(derive_seed(cfg.seed, 2 * i));
    const VariantType v = cfg.variants[i % cfg.variants.size()];
    const auto base = draw_distinct(rng, cfg.tokens_per_prompt, vocab.size());
    const auto variant = substitute(
        base, substitution_count(v, cfg.tokens_per_prompt, cfg.paraphrase_fraction), rng, vocab.size());
    out.push_back({"a" + std::to_string(i), join(base, vocab), join(variant, vocab), 1, v});
  }
  for (std::size_t i = 0; i < cfg.benign_pairs; ++i) {
    CounterRng rng(derive_seed(cfg.seed, 2 * i + 1));
    const auto a = draw_distinct(rng, cfg.tokens_per_prompt, vocab.size());
    const auto b = draw_distinct(rng, cfg.tokens_per_prompt, vocab.size());
    out.push_back({"b" + std::to_string(i), join(a, vocab), join(b, vocab), 0, VariantType::kBenignPair});
  }
  return out;
}

struct HybridCorpusConfig {
  std::size_t benign_records = 10000;
  std::size_t attack_groups = 50;
  std::size_t variants_per_group = 3;  // stored in the corpus
  std::size_t queries_per_group = 1;   // held out as queries
  std::size_t tokens_per_prompt = 40;
  double substitution_fraction = 0.3;
  std::uint64_t seed = 2;
};

struct HybridCorpus {
  std::vector<CorpusRecord> corpus;
  std::vector<CorpusRecord> queries;
};

/// Benign traffic interleaved with attack variants; each group's base prompt
/// is never stored, only its variants, and queries are further variants.
inline HybridCorpus generate_hybrid_corpus(const HybridCorpusConfig& cfg,
                                           const Vocabulary& vocab = default_vocabulary()) {
  HybridCorpus out;
  const std::size_t subs = static_cast<std::size_t>(
      std::lround(cfg.substitution_fraction * static_cast<double>(cfg.tokens_per_prompt)));
  std::vector<CorpusRecord> attacks;
  for (std::size_t g = 0; g < cfg.attack_groups; ++g) {
    CounterRng rng(derive_seed(cfg.seed, 1'000'000'000ULL + g));
    const auto base = draw_distinct(rng, cfg.tokens_per_prompt, vocab.size());
    const std::string group = "g" + std::to_string(g);
    for (std::size_t v = 0; v < cfg.variants_per_group; ++v) {
      attacks.push_back({"atk-" + std::to_string(g) + "-" + std::to_string(v),
                         join(substitute(base, subs, rng, vocab.size()), vocab), true, group});
    }
    for (std::size_t q = 0; q < cfg.queries_per_group; ++q) {
      out.queries.push_back({"q-" + std::to_string(g) + "-" + std::to_string(q),
                             join(substitute(base, subs, rng, vocab.size()), vocab), true, group});
    }
  }
  // Interleave attacks at evenly spaced positions in the benign stream.
  const std::size_t total = cfg.benign_records + attacks.size();
  out.corpus.reserve(total);
  std::size_t next_attack = 0;
  std::size_t benign = 0;
  for (std::size_t pos = 0; pos < total; ++pos) {
    const bool place_attack =
        next_attack < attacks.size() && pos * attacks.size() >= next_attack * total;
    if (place_attack) {
      out.corpus.push_back(attacks[next_attack++]);
    } else {
      CounterRng rng(derive_seed(cfg.seed, benign));
      out.corpus.push_back({"ben-" + std::to_string(benign),
                            join(draw_distinct(rng, cfg.tokens_per_prompt, vocab.size()), vocab), false,
                            std::nullopt});
      ++benign;
    }
  }
  return out;
}

/// Prompts with a random mix of PII for redaction fuzzing.
inline std::vector<std::string> pii_fuzz_corpus(std::size_t n, std::uint64_t seed) {
  static constexpr const char* kFirst[] = {"John", "Mary", "Alice", "Carlos", "Priya", "Wei", "Emily", "James"};
  static constexpr const char* kLast[] = {"Smith", "Garcia", "Chen", "Patel", "Johnson", "Nguyen", "Brooks"};
  static constexpr const char* kPlaces[] = {"London", "New York", "Seattle", "Tokyo", "Berlin"};
  static constexpr const char* kOrgs[] = {"Microsoft", "Wells Fargo", "Acme Widgets Inc", "PayPal"};
  static constexpr const char* kCards[] = {"4111 1111 1111 1111", "5500-0000-0000-0004", "4012888888881881"};
  static constexpr const char* kGlue[] = {"please", "ignore", "previous", "instructions", "and", "send",
                                          "the", "data", "to", "now", "urgent", "account", "reveal",
                                          "system", "prompt", "from", "for", "with", "my", "Transfer"};
  static constexpr const char* kPunct[] = {" ", " ", " ", ", ", ". ", "; ", " (", ") ", "'s ", ": "};
  const Vocabulary& vocab = default_vocabulary();
  std::vector<std::string> out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    CounterRng rng(derive_seed(seed, i));
    const auto digits = [&](std::size_t k) {
      std::string s;
      for (std::size_t j = 0; j < k; ++j) s += static_cast<char>('0' + rng.below(10));
      return s;
    };
    std::string text;
    const std::size_t parts = 6 + rng.below(14);
    for (std::size_t p = 0; p < parts; ++p) {
      switch (rng.below(16)) {
        case 0: text += std::string(kFirst[rng.below(std::size(kFirst))]) + " " + kLast[rng.below(std::size(kLast))]; break;
        case 1: text += vocab[rng.below(vocab.size())] + "." + digits(2) + "@" + vocab[rng.below(vocab.size())] + ".com"; break;
        case 2: text += digits(3) + "-" + digits(3) + "-" + digits(4); break;
        case 3: text += std::to_string(100 + rng.below(500)) + "-" + std::to_string(10 + rng.below(89)) + "-" + std::to_string(1000 + rng.below(8999)); break;
        case 4: text += kCards[rng.below(std::size(kCards))]; break;
        case 5: text += std::to_string(rng.below(256)) + "." + std::to_string(rng.below(256)) + "." + std::to_string(rng.below(256)) + "." + std::to_string(rng.below(256)); break;
        case 6: text += "https://" + vocab[rng.below(vocab.size())] + ".example.org/" + vocab[rng.below(vocab.size())]; break;
        case 7: text += "20" + digits(2) + "-0" + std::to_string(1 + rng.below(9)) + "-1" + std::to_string(rng.below(9)); break;
        case 8: text += kPlaces[rng.below(std::size(kPlaces))]; break;
        case 9: text += kOrgs[rng.below(std::size(kOrgs))]; break;
        case 10: text += "$" + std::to_string(1 + rng.below(99999)); break;
        case 11: text += digits(6 + rng.below(6)); break;
        case 12: text += kFirst[rng.below(std::size(kFirst))]; break;
        default: text += kGlue[rng.below(std::size(kGlue))]; break;
      }
      text += kPunct[rng.below(std::size(kPunct))];
    }
    out.push_back(std::move(text));
  }
  return out;
}

}  // namespace binaryshield::synthetic
