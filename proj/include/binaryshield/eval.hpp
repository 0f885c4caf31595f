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

// Evaluation harness: threshold sweeps, privacy-utility sweeps, noise
// calibration, Accuracy@k, storage accounting and scan benchmarks.
//
// Expensive, noise-free work (redaction, embedding, quantization, SimHash) is
// done once in prepare_*; the noisy stages are then cheap to repeat per
// (alpha, seed) cell.
//
// CSV schemas (version 1, header row always present):
//   pr_sweep      tau,tp,fp,tn,fn,precision,recall,f1,accuracy
//   alpha_sweep   alpha,seeds,mean_f1,mean_precision,mean_recall,mean_tau,tp,fp,tn,fn
//   calibration   alpha,n,mean,std,theory,std_err,z
//                 (last row: random_baseline,pairs,mean,std with empty tail)
//   accuracy_at_k method,corpus_size,queries,k,accuracy
//   storage       count,dim,float_bytes,dense_bytes,binary_bytes,ratio,snapshot_bytes
//   scan          mode,corpus_size,queries,k,total_seconds,mean_query_seconds

#include <algorithm>
#include <bit>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <map>
#include <mutex>
#include <numeric>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <thread>
#include <tuple>
#include <utility>
#include <vector>

#include "binaryshield/dataset.hpp"
#include "binaryshield/embedding.hpp"
#include "binaryshield/fingerprint.hpp"
#include "binaryshield/pii.hpp"
#include "binaryshield/simhash.hpp"
#include "binaryshield/store.hpp"
#include "binaryshield/synthetic.hpp"
#include "json.hpp"

namespace binaryshield {

namespace eval_detail {

inline std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.10g", v);
  return buf;
}

/// Runs fn(i) for i in [0, n) over up to `threads` workers. Results must be
/// written to per-index slots so ordering never depends on completion.
template <typename Fn>
void parallel_for(std::size_t n, std::size_t threads, Fn&& fn) {
  threads = std::max<std::size_t>(1, std::min(threads, n));
  if (threads == 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::mutex mu;
  std::size_t next = 0;
  std::exception_ptr error;
  std::vector<std::thread> pool;
  for (std::size_t t = 0; t < threads; ++t) {
    pool.emplace_back([&] {
      for (;;) {
        std::size_t i;
        {
          std::lock_guard lock(mu);
          if (next >= n || error) return;
          i = next++;
        }
        try {
          fn(i);
        } catch (...) {
          std::lock_guard lock(mu);
          if (!error) error = std::current_exception();
        }
      }
    });
  }
  for (auto& t : pool) t.join();
  if (error) std::rethrow_exception(error);
}

inline RedactedPrompt sanitize(const Redactor* redactor, const std::string& text) {
  return redactor ? redactor->redact(text) : RedactedPrompt::assume_redacted(text);
}

}  // namespace eval_detail

// ---------------------------------------------------------------------------
// Metrics

struct ConfusionMatrix {
  std::size_t tp = 0, fp = 0, tn = 0, fn = 0;

  std::size_t total() const noexcept { return tp + fp + tn + fn; }
  /// 0/0 is defined as 0 for every ratio.
  double precision() const noexcept { return tp + fp ? double(tp) / double(tp + fp) : 0.0; }
  double recall() const noexcept { return tp + fn ? double(tp) / double(tp + fn) : 0.0; }
  double accuracy() const noexcept { return total() ? double(tp + tn) / double(total()) : 0.0; }
  double f1() const noexcept {
    const double p = precision(), r = recall();
    return p + r > 0.0 ? 2.0 * p * r / (p + r) : 0.0;
  }

  ConfusionMatrix& operator+=(const ConfusionMatrix& o) noexcept {
    tp += o.tp;
    fp += o.fp;
    tn += o.tn;
    fn += o.fn;
    return *this;
  }
  friend bool operator==(const ConfusionMatrix&, const ConfusionMatrix&) = default;
};

struct PRPoint {
  std::size_t tau = 0;
  double precision = 0, recall = 0, f1 = 0, accuracy = 0;
  ConfusionMatrix confusion;
};

inline PRPoint make_point(std::size_t tau, const ConfusionMatrix& c) {
  return {tau, c.precision(), c.recall(), c.f1(), c.accuracy(), c};
}

/// Predicts positive iff distance <= tau (or > tau when `inverted`).
inline ConfusionMatrix confusion_at(std::span<const std::size_t> distances, std::span<const int> labels,
                                    std::size_t tau, bool inverted = false) {
  if (distances.size() != labels.size()) throw InvalidArgument("distances and labels differ in length");
  ConfusionMatrix c;
  for (std::size_t i = 0; i < distances.size(); ++i) {
    const bool predicted = inverted ? distances[i] > tau : distances[i] <= tau;
    const bool actual = labels[i] == 1;
    if (predicted && actual) ++c.tp;
    else if (predicted) ++c.fp;
    else if (actual) ++c.fn;
    else ++c.tn;
  }
  return c;
}

struct PRSweep {
  std::vector<PRPoint> points;
  PRPoint optimum;  // max F1, ties to the smallest tau

  std::string to_csv() const {
    std::string out = "tau,tp,fp,tn,fn,precision,recall,f1,accuracy\n";
    for (const auto& p : points) {
      out += std::to_string(p.tau) + "," + std::to_string(p.confusion.tp) + "," +
             std::to_string(p.confusion.fp) + "," + std::to_string(p.confusion.tn) + "," +
             std::to_string(p.confusion.fn) + "," + eval_detail::fmt(p.precision) + "," +
             eval_detail::fmt(p.recall) + "," + eval_detail::fmt(p.f1) + "," +
             eval_detail::fmt(p.accuracy) + "\n";
    }
    return out;
  }
};

inline void require_both_classes(std::span<const int> labels) {
  const bool pos = std::count(labels.begin(), labels.end(), 1) > 0;
  const bool neg = std::count(labels.begin(), labels.end(), 0) > 0;
  if (!pos || !neg) throw InvalidArgument("pr_sweep needs both attack (1) and benign (0) pairs");
}

/// Sweeps integer tau over [tau_min, tau_max]. Runs in O(n + range) using a
/// distance histogram.
inline PRSweep pr_sweep(std::span<const std::size_t> distances, std::span<const int> labels,
                        std::size_t tau_min, std::size_t tau_max) {
  if (distances.empty()) throw InvalidArgument("pr_sweep needs at least one pair");
  if (distances.size() != labels.size()) throw InvalidArgument("distances and labels differ in length");
  if (tau_min > tau_max) throw InvalidArgument("empty tau range");
  require_both_classes(labels);
  const std::size_t top = std::max(tau_max, *std::max_element(distances.begin(), distances.end()));
  std::vector<std::size_t> pos(top + 1, 0), neg(top + 1, 0);
  std::size_t n_pos = 0, n_neg = 0;
  for (std::size_t i = 0; i < distances.size(); ++i) {
    if (labels[i] == 1) ++pos[distances[i]], ++n_pos;
    else ++neg[distances[i]], ++n_neg;
  }
  PRSweep out;
  std::size_t cum_pos = 0, cum_neg = 0;
  for (std::size_t t = 0; t < tau_min; ++t) cum_pos += pos[t], cum_neg += neg[t];
  bool have = false;
  for (std::size_t t = tau_min; t <= tau_max; ++t) {
    cum_pos += pos[t];
    cum_neg += neg[t];
    const ConfusionMatrix c{cum_pos, cum_neg, n_neg - cum_neg, n_pos - cum_pos};
    out.points.push_back(make_point(t, c));
    if (!have || out.points.back().f1 > out.optimum.f1) {
      out.optimum = out.points.back();
      have = true;
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Pair preparation

/// Noise-free per-pair material for both methods.
struct PreparedPairs {
  std::vector<BinaryFingerprint> a, b;
  std::vector<SimHashFingerprint> sa, sb;
  std::vector<int> labels;
  std::vector<VariantType> variants;
  std::size_t dim = 0;
};

/// Redacts (when a redactor is given), embeds and quantizes both sides of
/// every pair. Embedding is batched through the provider.
inline PreparedPairs prepare_pairs(const std::vector<PairRecord>& pairs, const EmbeddingProvider& provider,
                                   const Redactor* redactor = nullptr, std::size_t threads = 1) {
  if (pairs.empty()) throw InvalidArgument("no pairs");
  PreparedPairs out;
  const std::size_t n = pairs.size();
  out.dim = provider.dim();
  out.a.resize(n);
  out.b.resize(n);
  out.sa.resize(n);
  out.sb.resize(n);
  out.labels.resize(n);
  out.variants.resize(n);
  std::vector<RedactedPrompt> texts(2 * n, RedactedPrompt::assume_redacted(""));
  eval_detail::parallel_for(n, threads, [&](std::size_t i) {
    texts[2 * i] = eval_detail::sanitize(redactor, pairs[i].prompt_a);
    texts[2 * i + 1] = eval_detail::sanitize(redactor, pairs[i].prompt_b);
    out.sa[i] = simhash(texts[2 * i].text());
    out.sb[i] = simhash(texts[2 * i + 1].text());
    out.labels[i] = pairs[i].label;
    out.variants[i] = pairs[i].variant_type;
  });
  const auto embeddings = provider.embed_batch(texts);
  for (std::size_t i = 0; i < n; ++i) {
    out.a[i] = quantize(embeddings[2 * i]);
    out.b[i] = quantize(embeddings[2 * i + 1]);
  }
  return out;
}

/// Noise seeds: side a of pair i uses derive_seed(seed, 2i), side b 2i + 1.
/// A null budget means the zero-noise pipeline.
inline std::vector<std::size_t> binaryshield_distances(const PreparedPairs& p,
                                                       const std::optional<PrivacyBudget>& budget,
                                                       std::uint64_t seed) {
  std::vector<std::size_t> d(p.a.size());
  for (std::size_t i = 0; i < d.size(); ++i) {
    if (!budget) {
      d[i] = hamming(p.a[i], p.b[i]);
    } else {
      d[i] = hamming(randomize(p.a[i], *budget, derive_seed(seed, 2 * i)),
                     randomize(p.b[i], *budget, derive_seed(seed, 2 * i + 1)));
    }
  }
  return d;
}

inline std::vector<std::size_t> simhash_distances(const PreparedPairs& p) {
  std::vector<std::size_t> d(p.sa.size());
  for (std::size_t i = 0; i < d.size(); ++i) d[i] = simhash_distance(p.sa[i], p.sb[i]);
  return d;
}

struct Method {
  enum class Kind { kBinaryShield, kSimHash } kind = Kind::kBinaryShield;
  std::optional<double> alpha = 2.0;  // nullopt: zero-noise pipeline
  std::uint64_t seed = 0;

  static Method binaryshield(double a, std::uint64_t s) { return {Kind::kBinaryShield, a, s}; }
  static Method no_noise() { return {Kind::kBinaryShield, std::nullopt, 0}; }
  static Method simhash() { return {Kind::kSimHash, std::nullopt, 0}; }
};

/// Full sweep over tau in [0, dim] (dim = 64 for SimHash) unless overridden.
inline PRSweep pr_sweep(const PreparedPairs& p, const Method& m,
                        std::optional<std::pair<std::size_t, std::size_t>> tau_range = std::nullopt) {
  const bool sim = m.kind == Method::Kind::kSimHash;
  const auto d = sim ? simhash_distances(p)
                     : binaryshield_distances(
                           p, m.alpha ? std::optional<PrivacyBudget>(PrivacyBudget(*m.alpha)) : std::nullopt, m.seed);
  const std::size_t dim = sim ? SimHashFingerprint::dim() : p.dim;
  const auto range = tau_range.value_or(std::pair<std::size_t, std::size_t>{0, dim});
  return pr_sweep(d, p.labels, range.first, range.second);
}

// ---------------------------------------------------------------------------
// Alpha sweep

struct AlphaRow {
  double alpha = 0;
  std::size_t seeds = 0;
  double mean_f1 = 0, mean_precision = 0, mean_recall = 0, mean_tau = 0;
  ConfusionMatrix confusion;  // summed over seeds at each seed's optimum
};

struct AlphaSweep {
  std::vector<AlphaRow> rows;

  std::string to_csv() const {
    std::string out = "alpha,seeds,mean_f1,mean_precision,mean_recall,mean_tau,tp,fp,tn,fn\n";
    for (const auto& r : rows) {
      out += eval_detail::fmt(r.alpha) + "," + std::to_string(r.seeds) + "," + eval_detail::fmt(r.mean_f1) +
             "," + eval_detail::fmt(r.mean_precision) + "," + eval_detail::fmt(r.mean_recall) + "," +
             eval_detail::fmt(r.mean_tau) + "," + std::to_string(r.confusion.tp) + "," +
             std::to_string(r.confusion.fp) + "," + std::to_string(r.confusion.tn) + "," +
             std::to_string(r.confusion.fn) + "\n";
    }
    return out;
  }
};

/// Seed s of every alpha uses derive_seed(base_seed, s), so all alphas see
/// the same uniforms (common random numbers) and the curve is smooth in alpha.
inline AlphaSweep alpha_sweep(const PreparedPairs& p, const std::vector<double>& alphas,
                              std::size_t seeds_per_alpha, std::uint64_t base_seed, std::size_t threads = 1) {
  if (alphas.empty()) throw InvalidArgument("no alphas");
  if (seeds_per_alpha == 0) throw InvalidArgument("seeds_per_alpha must be >= 1");
  require_both_classes(p.labels);
  std::vector<PRPoint> cells(alphas.size() * seeds_per_alpha);
  eval_detail::parallel_for(cells.size(), threads, [&](std::size_t c) {
    const double alpha = alphas[c / seeds_per_alpha];
    const std::uint64_t seed = derive_seed(base_seed, c % seeds_per_alpha);
    cells[c] = pr_sweep(p, Method::binaryshield(alpha, seed)).optimum;
  });
  AlphaSweep out;
  for (std::size_t a = 0; a < alphas.size(); ++a) {
    AlphaRow row;
    row.alpha = alphas[a];
    row.seeds = seeds_per_alpha;
    for (std::size_t s = 0; s < seeds_per_alpha; ++s) {
      const auto& pt = cells[a * seeds_per_alpha + s];
      row.mean_f1 += pt.f1;
      row.mean_precision += pt.precision;
      row.mean_recall += pt.recall;
      row.mean_tau += double(pt.tau);
      row.confusion += pt.confusion;
    }
    const double n = double(seeds_per_alpha);
    row.mean_f1 /= n;
    row.mean_precision /= n;
    row.mean_recall /= n;
    row.mean_tau /= n;
    out.rows.push_back(row);
  }
  return out;
}

/// Spearman rank correlation with average ranks for ties.
inline double spearman(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size() || x.size() < 2) throw InvalidArgument("spearman needs two equal-length series");
  const auto ranks = [](const std::vector<double>& v) {
    std::vector<std::size_t> idx(v.size());
    std::iota(idx.begin(), idx.end(), 0);
    std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return v[a] < v[b]; });
    std::vector<double> r(v.size());
    for (std::size_t i = 0; i < idx.size();) {
      std::size_t j = i;
      while (j + 1 < idx.size() && v[idx[j + 1]] == v[idx[i]]) ++j;
      for (std::size_t k = i; k <= j; ++k) r[idx[k]] = (double(i) + double(j)) / 2.0 + 1.0;
      i = j + 1;
    }
    return r;
  };
  const auto rx = ranks(x), ry = ranks(y);
  const double mx = std::accumulate(rx.begin(), rx.end(), 0.0) / double(rx.size());
  const double my = std::accumulate(ry.begin(), ry.end(), 0.0) / double(ry.size());
  double sxy = 0, sxx = 0, syy = 0;
  for (std::size_t i = 0; i < rx.size(); ++i) {
    sxy += (rx[i] - mx) * (ry[i] - my);
    sxx += (rx[i] - mx) * (rx[i] - mx);
    syy += (ry[i] - my) * (ry[i] - my);
  }
  return sxx > 0 && syy > 0 ? sxy / std::sqrt(sxx * syy) : 0.0;
}

/// Best F1 achievable by a score-blind classifier: predicting everything
/// positive gives 2P / (2P + N) for P positives and N negatives.
inline double chance_f1(std::size_t positives, std::size_t negatives) {
  return positives ? 2.0 * double(positives) / (2.0 * double(positives) + double(negatives)) : 0.0;
}

// ---------------------------------------------------------------------------
// Noise calibration

struct CalibrationRow {
  double alpha = 0;
  std::size_t n = 0;
  double mean = 0, std = 0, theory = 0, std_err = 0, z = 0;
};

struct Calibration {
  std::vector<CalibrationRow> rows;
  std::size_t baseline_pairs = 0;
  double baseline_mean = 0, baseline_std = 0;

  std::string to_csv() const {
    std::string out = "alpha,n,mean,std,theory,std_err,z\n";
    for (const auto& r : rows) {
      out += eval_detail::fmt(r.alpha) + "," + std::to_string(r.n) + "," + eval_detail::fmt(r.mean) + "," +
             eval_detail::fmt(r.std) + "," + eval_detail::fmt(r.theory) + "," + eval_detail::fmt(r.std_err) +
             "," + eval_detail::fmt(r.z) + "\n";
    }
    out += "random_baseline," + std::to_string(baseline_pairs) + "," + eval_detail::fmt(baseline_mean) + "," +
           eval_detail::fmt(baseline_std) + ",,,\n";
    return out;
  }
};

inline std::pair<double, double> mean_and_sample_std(const std::vector<double>& v) {
  const double n = double(v.size());
  const double mean = std::accumulate(v.begin(), v.end(), 0.0) / n;
  double ss = 0;
  for (double x : v) ss += (x - mean) * (x - mean);
  return {mean, v.size() > 1 ? std::sqrt(ss / (n - 1)) : 0.0};
}

/// Fingerprints n synthetic prompts with the pseudo provider, randomizes each
/// once per alpha and compares self-distance with (1 - p) d. The random
/// baseline draws `baseline_pairs` pairs of uniform d-bit vectors.
inline Calibration calibrate_noise(std::size_t n_prompts, const std::vector<double>& alphas, std::size_t dim,
                                   std::uint64_t seed, std::size_t baseline_pairs = 1000) {
  if (n_prompts < 100) throw InvalidArgument("calibrate_noise needs at least 100 prompts");
  const PseudoEmbedder provider(dim);
  const auto& vocab = synthetic::default_vocabulary();
  std::vector<BinaryFingerprint> bits;
  bits.reserve(n_prompts);
  for (std::size_t i = 0; i < n_prompts; ++i) {
    CounterRng rng(derive_seed(seed, i));
    bits.push_back(quantize(provider.embed_text(synthetic::join(synthetic::draw_distinct(rng, 40, vocab.size()), vocab))));
  }
  Calibration out;
  for (std::size_t a = 0; a < alphas.size(); ++a) {
    const PrivacyBudget budget(alphas[a]);
    std::vector<double> d(n_prompts);
    const std::uint64_t alpha_seed = derive_seed(seed ^ 0xA1FA, a);
    for (std::size_t i = 0; i < n_prompts; ++i) {
      d[i] = double(hamming(bits[i], randomize(bits[i], budget, derive_seed(alpha_seed, i))));
    }
    CalibrationRow row;
    row.alpha = alphas[a];
    row.n = n_prompts;
    std::tie(row.mean, row.std) = mean_and_sample_std(d);
    const double p = budget.keep_probability();
    row.theory = expected_self_distortion(budget, dim);
    row.std_err = std::sqrt(double(dim) * p * (1 - p) / double(n_prompts));
    row.z = (row.mean - row.theory) / row.std_err;
    out.rows.push_back(row);
  }
  std::vector<double> base(baseline_pairs);
  CounterRng rng(derive_seed(seed, 0xBA5E));
  const std::size_t words = (dim + 63) / 64;
  for (auto& v : base) {
    std::size_t d = 0;
    for (std::size_t w = 0; w < words; ++w) {
      std::uint64_t x = rng() ^ rng();
      const std::size_t lim = std::min<std::size_t>(64, dim - 64 * w);
      if (lim < 64) x &= (std::uint64_t{1} << lim) - 1;
      d += static_cast<std::size_t>(std::popcount(x));
    }
    v = double(d);
  }
  out.baseline_pairs = baseline_pairs;
  if (baseline_pairs) std::tie(out.baseline_mean, out.baseline_std) = mean_and_sample_std(base);
  return out;
}

// ---------------------------------------------------------------------------
// Accuracy@k

enum class SearchMethod { kBinaryShield, kSimHash, kDense };

inline std::string_view search_method_name(SearchMethod m) noexcept {
  switch (m) {
    case SearchMethod::kBinaryShield: return "binaryshield";
    case SearchMethod::kSimHash: return "simhash";
    case SearchMethod::kDense: return "dense";
  }
  return "?";
}

/// Noise-free material for a corpus or query set.
struct PreparedRecords {
  std::vector<std::string> ids;
  std::vector<std::optional<std::string>> groups;
  std::vector<BinaryFingerprint> bits;
  std::vector<SimHashFingerprint> simhashes;
  std::vector<std::vector<float>> dense;  // filled when keep_dense
  std::size_t dim = 0;
};

inline PreparedRecords prepare_records(const std::vector<CorpusRecord>& records, const EmbeddingProvider& provider,
                                       const Redactor* redactor = nullptr, bool keep_dense = true,
                                       std::size_t threads = 1) {
  PreparedRecords out;
  const std::size_t n = records.size();
  out.dim = provider.dim();
  out.ids.resize(n);
  out.groups.resize(n);
  out.bits.resize(n);
  out.simhashes.resize(n);
  if (keep_dense) out.dense.resize(n);
  constexpr std::size_t kChunk = 512;
  eval_detail::parallel_for((n + kChunk - 1) / kChunk, threads, [&](std::size_t c) {
    const std::size_t begin = c * kChunk, end = std::min(n, begin + kChunk);
    std::vector<RedactedPrompt> texts;
    for (std::size_t i = begin; i < end; ++i) {
      texts.push_back(eval_detail::sanitize(redactor, records[i].text));
      out.ids[i] = records[i].id;
      out.groups[i] = records[i].attack_group;
      out.simhashes[i] = simhash(texts.back().text());
    }
    const auto emb = provider.embed_batch(texts);
    for (std::size_t i = begin; i < end; ++i) {
      out.bits[i] = quantize(emb[i - begin]);
      if (keep_dense) out.dense[i].assign(emb[i - begin].values().begin(), emb[i - begin].values().end());
    }
  });
  return out;
}

struct AccuracyRow {
  SearchMethod method = SearchMethod::kBinaryShield;
  std::size_t corpus_size = 0, queries = 0, k = 0;
  double accuracy = 0;
};

struct AccuracyAtK {
  std::vector<AccuracyRow> rows;

  std::string to_csv() const {
    std::string out = "method,corpus_size,queries,k,accuracy\n";
    for (const auto& r : rows) {
      out += std::string(search_method_name(r.method)) + "," + std::to_string(r.corpus_size) + "," +
             std::to_string(r.queries) + "," + std::to_string(r.k) + "," + eval_detail::fmt(r.accuracy) + "\n";
    }
    return out;
  }
};

/// For each query, search the corpus and record whether any of the first k
/// results shares the query's attack_group. Corpus entries are randomized
/// with derive_seed(seed, i), query j with derive_seed(seed ^ ~0, j).
inline AccuracyAtK accuracy_at_k(const PreparedRecords& corpus, const PreparedRecords& queries,
                                 SearchMethod method, std::vector<std::size_t> k_values,
                                 std::optional<double> alpha, std::uint64_t seed, std::size_t threads = 1) {
  if (k_values.empty()) throw InvalidArgument("no k values");
  if (std::find(k_values.begin(), k_values.end(), 0u) != k_values.end()) throw InvalidArgument("k must be >= 1");
  std::sort(k_values.begin(), k_values.end());
  k_values.erase(std::unique(k_values.begin(), k_values.end()), k_values.end());
  std::set<std::string> corpus_groups;
  for (const auto& g : corpus.groups) {
    if (g) corpus_groups.insert(*g);
  }
  std::vector<std::string> offenders;
  for (std::size_t j = 0; j < queries.ids.size(); ++j) {
    if (!queries.groups[j] || !corpus_groups.count(*queries.groups[j])) offenders.push_back(queries.ids[j]);
  }
  if (!offenders.empty()) {
    std::string list;
    for (std::size_t i = 0; i < offenders.size() && i < 20; ++i) list += (i ? ", " : "") + offenders[i];
    throw InvalidArgument("queries without a matching attack_group in the corpus: " + list +
                          (offenders.size() > 20 ? ", ..." : ""));
  }
  if (method == SearchMethod::kDense && (corpus.dense.size() != corpus.ids.size() ||
                                         queries.dense.size() != queries.ids.size())) {
    throw InvalidArgument("dense method needs prepared dense vectors");
  }
  const std::size_t kmax = k_values.back();
  const std::optional<PrivacyBudget> budget =
      alpha ? std::optional<PrivacyBudget>(PrivacyBudget(*alpha)) : std::nullopt;
  const auto privatize = [&](const BinaryFingerprint& b, std::uint64_t s) {
    return budget ? randomize(b, *budget, s).fingerprint() : b;
  };

  FingerprintStore store;
  std::vector<std::size_t> first_hit(queries.ids.size(), SIZE_MAX);
  if (method == SearchMethod::kSimHash) {
    // 64-bit scan; same (distance, index) ordering as the store.
    eval_detail::parallel_for(queries.ids.size(), threads, [&](std::size_t j) {
      std::vector<std::pair<std::size_t, std::size_t>> d(corpus.ids.size());
      for (std::size_t i = 0; i < d.size(); ++i) d[i] = {simhash_distance(queries.simhashes[j], corpus.simhashes[i]), i};
      const std::size_t k = std::min(kmax, d.size());
      std::partial_sort(d.begin(), d.begin() + static_cast<std::ptrdiff_t>(k), d.end());
      for (std::size_t r = 0; r < k; ++r) {
        if (corpus.groups[d[r].second] == queries.groups[j]) {
          first_hit[j] = r;
          break;
        }
      }
    });
  } else {
    std::vector<StoredFingerprint> batch(corpus.ids.size());
    for (std::size_t i = 0; i < batch.size(); ++i) {
      const auto b = privatize(corpus.bits[i], derive_seed(seed, i));
      batch[i].id = std::to_string(i);
      batch[i].dim = b.dim();
      batch[i].bits.assign(b.bytes().begin(), b.bytes().end());
      if (method == SearchMethod::kDense) batch[i].dense = corpus.dense[i];
    }
    store.insert_batch(std::move(batch));
    eval_detail::parallel_for(queries.ids.size(), threads, [&](std::size_t j) {
      std::vector<std::size_t> order;
      if (method == SearchMethod::kDense) {
        for (const auto& [m, sim] : store.dense_topk(queries.dense[j], kmax)) order.push_back(std::stoul(m.id));
      } else {
        const auto q = privatize(queries.bits[j], derive_seed(seed ^ ~std::uint64_t{0}, j));
        for (const auto& m : store.search_topk(q.bytes(), kmax)) order.push_back(std::stoul(m.id));
      }
      for (std::size_t r = 0; r < order.size(); ++r) {
        if (corpus.groups[order[r]] == queries.groups[j]) {
          first_hit[j] = r;
          break;
        }
      }
    });
  }
  AccuracyAtK out;
  for (const auto k : k_values) {
    std::size_t hits = 0;
    for (const auto r : first_hit) hits += r < k;
    out.rows.push_back({method, corpus.ids.size(), queries.ids.size(), k,
                        queries.ids.empty() ? 0.0 : double(hits) / double(queries.ids.size())});
  }
  return out;
}

// ---------------------------------------------------------------------------
// Storage

struct StorageReport {
  std::size_t count = 0, dim = 0, float_bytes = 0;
  std::uint64_t dense_bytes = 0, binary_bytes = 0;
  double ratio = 0;
  std::optional<std::uint64_t> snapshot_bytes;  // measured, when requested

  std::string to_csv() const {
    return "count,dim,float_bytes,dense_bytes,binary_bytes,ratio,snapshot_bytes\n" + std::to_string(count) + "," +
           std::to_string(dim) + "," + std::to_string(float_bytes) + "," + std::to_string(dense_bytes) + "," +
           std::to_string(binary_bytes) + "," + eval_detail::fmt(ratio) + "," +
           (snapshot_bytes ? std::to_string(*snapshot_bytes) : std::string()) + "\n";
  }
};

/// Payload arithmetic; with `measure`, also builds a store of `count` random
/// fingerprints (ids "0".."count-1", no metadata) and reports its snapshot size.
inline StorageReport storage_report(std::size_t count, std::size_t dim, std::size_t float_bytes,
                                    bool measure = false, std::uint64_t seed = 0) {
  if (count == 0 || dim == 0) throw InvalidArgument("count and dim must be positive");
  if (float_bytes != 4 && float_bytes != 8) throw InvalidArgument("float_bytes must be 4 or 8");
  StorageReport r;
  r.count = count;
  r.dim = dim;
  r.float_bytes = float_bytes;
  r.dense_bytes = std::uint64_t(count) * dim * float_bytes;
  r.binary_bytes = std::uint64_t(count) * packed_size(dim);
  r.ratio = double(r.dense_bytes) / double(r.binary_bytes);
  if (measure) {
    FingerprintStore store;
    std::vector<StoredFingerprint> batch(count);
    CounterRng rng(seed);
    for (std::size_t i = 0; i < count; ++i) {
      batch[i].id = std::to_string(i);
      batch[i].dim = dim;
      batch[i].bits.resize(packed_size(dim));
      for (auto& b : batch[i].bits) b = static_cast<std::uint8_t>(rng());
      if (dim % 8) batch[i].bits.back() &= static_cast<std::uint8_t>((1u << (dim % 8)) - 1);
    }
    store.insert_batch(std::move(batch));
    r.snapshot_bytes = store.snapshot_bytes().size();
  }
  return r;
}

// ---------------------------------------------------------------------------
// Scan benchmark

enum class ScanMode { kPackedHamming, kDenseCosine };

inline std::string_view scan_mode_name(ScanMode m) noexcept {
  return m == ScanMode::kPackedHamming ? "PACKED_HAMMING" : "DENSE_COSINE";
}

struct TimingReport {
  ScanMode mode = ScanMode::kPackedHamming;
  std::size_t corpus_size = 0, queries = 0, k = 0;
  double total_seconds = 0;
  std::vector<double> query_seconds;

  double mean_query_seconds() const noexcept { return queries ? total_seconds / double(queries) : 0.0; }

  std::string to_csv() const {
    return "mode,corpus_size,queries,k,total_seconds,mean_query_seconds\n" + std::string(scan_mode_name(mode)) + "," +
           std::to_string(corpus_size) + "," + std::to_string(queries) + "," + std::to_string(k) + "," +
           eval_detail::fmt(total_seconds) + "," + eval_detail::fmt(mean_query_seconds()) + "\n";
  }

  nlohmann::ordered_json to_json() const {
    nlohmann::ordered_json j;
    j["mode"] = scan_mode_name(mode);
    j["corpus_size"] = corpus_size;
    j["queries"] = queries;
    j["k"] = k;
    j["total_seconds"] = total_seconds;
    j["mean_query_seconds"] = mean_query_seconds();
    j["query_seconds"] = query_seconds;
    return j;
  }
};

/// Times top-k search for every query, single pass, in the store's current
/// threading mode. Binary queries are packed bytes; dense queries floats.
inline TimingReport scan_benchmark(const FingerprintStore& store, ScanMode mode,
                                   const std::vector<std::vector<std::uint8_t>>& binary_queries,
                                   const std::vector<std::vector<float>>& dense_queries, std::size_t k = 5) {
  using Clock = std::chrono::steady_clock;
  TimingReport r;
  r.mode = mode;
  r.corpus_size = store.size();
  r.k = k;
  if (mode == ScanMode::kDenseCosine && !store.has_dense()) {
    throw InvalidArgument("DENSE_COSINE benchmark needs a store with dense vectors");
  }
  const std::size_t n = mode == ScanMode::kPackedHamming ? binary_queries.size() : dense_queries.size();
  r.queries = n;
  r.query_seconds.reserve(n);
  std::size_t sink = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const auto t0 = Clock::now();
    if (mode == ScanMode::kPackedHamming) {
      sink += store.search_topk(binary_queries[i], k).size();
    } else {
      sink += store.dense_topk(dense_queries[i], k).size();
    }
    const double s = std::chrono::duration<double>(Clock::now() - t0).count();
    r.query_seconds.push_back(s);
    r.total_seconds += s;
  }
  if (sink == SIZE_MAX) std::abort();  // keeps the searches observable
  return r;
}

/// Coefficient of determination of the least-squares line y = a + b x.
inline double linear_fit_r2(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size() || x.size() < 2) throw InvalidArgument("linear fit needs two equal-length series");
  const double n = double(x.size());
  const double mx = std::accumulate(x.begin(), x.end(), 0.0) / n;
  const double my = std::accumulate(y.begin(), y.end(), 0.0) / n;
  double sxy = 0, sxx = 0, syy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxy += (x[i] - mx) * (y[i] - my);
    sxx += (x[i] - mx) * (x[i] - mx);
    syy += (y[i] - my) * (y[i] - my);
  }
  if (sxx == 0 || syy == 0) return 0.0;
  return sxy * sxy / (sxx * syy);
}

}  // namespace binaryshield
