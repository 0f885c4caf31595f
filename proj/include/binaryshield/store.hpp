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

// Per-service fingerprint log with brute-force Hamming search.
//
// Entries are kept as contiguous 64-bit words (ceil(dim / 64) per entry) so a
// scan is one XOR + popcount per word. Results are ordered by
// (distance, insertion sequence), which makes every search deterministic.
//
// Snapshot layout (integers little-endian):
//   magic   8 bytes "BSFP\0\0\0\1"
//   dim     u32
//   count   u64
//   record  u32 id_len | id | u32 dim | u8 has_alpha | [f64 alpha]
//           | ceil(dim/8) packed bytes | u32 n_meta | n_meta x (u32 klen | key | u32 vlen | value)

#include <algorithm>
#include <array>
#include <bit>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <map>
#include <mutex>
#include <optional>
#include <queue>
#include <shared_mutex>
#include <span>
#include <string>
#include <thread>
#include <unordered_map>
#include <utility>
#include <vector>

#include "binaryshield/error.hpp"
#include "binaryshield/fingerprint.hpp"

namespace binaryshield {

using Metadata = std::map<std::string, std::string>;

struct StoredFingerprint {
  std::string id;
  std::vector<std::uint8_t> bits;
  std::size_t dim = 0;
  std::optional<double> alpha;
  Metadata metadata;
  std::uint64_t inserted_at = 0;  // assigned by the store
  std::vector<float> dense;       // optional parallel dense vector
};

struct MatchResult {
  std::string id;
  std::size_t distance = 0;
  std::size_t metadata_overlap = 0;
  std::uint64_t sequence = 0;

  friend bool operator==(const MatchResult&, const MatchResult&) = default;
};

/// Number of key/value pairs present and equal in both maps.
inline std::size_t metadata_overlap(const Metadata& a, const Metadata& b) {
  std::size_t n = 0;
  for (const auto& [k, v] : a) {
    const auto it = b.find(k);
    if (it != b.end() && it->second == v) ++n;
  }
  return n;
}

/// Optional metadata context for a search. Overlap is always reported;
/// it filters only when min_overlap > 0.
struct MetadataFilter {
  const Metadata* query = nullptr;
  std::size_t min_overlap = 0;
};

/// Shared mutex that stops admitting new readers once a writer is waiting,
/// so a steady stream of searches cannot starve inserts.
class WriterPreferringMutex {
 public:
  void lock() {
    std::lock_guard gate(gate_);
    rw_.lock();
  }
  bool try_lock() {
    std::unique_lock gate(gate_, std::try_to_lock);
    return gate.owns_lock() && rw_.try_lock();
  }
  void unlock() { rw_.unlock(); }

  void lock_shared() {
    { std::lock_guard gate(gate_); }
    rw_.lock_shared();
  }
  bool try_lock_shared() {
    std::unique_lock gate(gate_, std::try_to_lock);
    return gate.owns_lock() && rw_.try_lock_shared();
  }
  void unlock_shared() { rw_.unlock_shared(); }

 private:
  std::mutex gate_;
  std::shared_mutex rw_;
};

class FingerprintStore {
 public:
  FingerprintStore() = default;
  explicit FingerprintStore(std::size_t dim) : dim_(dim) {
    if (dim == 0) throw InvalidArgument("store dim must be positive");
    words_ = (dim + 63) / 64;
  }

  FingerprintStore(const FingerprintStore& o) {
    std::shared_lock lock(o.mu_);
    copy_from(o);
  }
  FingerprintStore& operator=(const FingerprintStore& o) {
    if (this != &o) {
      std::unique_lock a(mu_, std::defer_lock);
      std::shared_lock b(o.mu_, std::defer_lock);
      std::lock(a, b);
      copy_from(o);
    }
    return *this;
  }

  FingerprintStore(FingerprintStore&& o) noexcept {
    std::unique_lock lock(o.mu_);
    move_from(std::move(o));
  }
  FingerprintStore& operator=(FingerprintStore&& o) noexcept {
    if (this != &o) {
      std::unique_lock a(mu_, std::defer_lock);
      std::unique_lock b(o.mu_, std::defer_lock);
      std::lock(a, b);
      move_from(std::move(o));
    }
    return *this;
  }

  std::size_t dim() const {
    std::shared_lock lock(mu_);
    return dim_;
  }
  std::size_t size() const {
    std::shared_lock lock(mu_);
    return ids_.size();
  }

  /// Scan fan-out. 1 (default) scans on the calling thread.
  void set_search_threads(std::size_t n) { threads_ = n == 0 ? 1 : n; }

  void insert(StoredFingerprint fp) {
    std::unique_lock lock(mu_);
    insert_locked(std::move(fp));
  }

  /// All-or-nothing: validated up front, then inserted under one lock.
  void insert_batch(std::vector<StoredFingerprint> fps) {
    std::unique_lock lock(mu_);
    std::size_t dim = dim_;
    std::unordered_map<std::string, int> fresh;
    for (const auto& fp : fps) {
      validate_locked(fp, dim);
      if (dim == 0) dim = fp.dim;
      if (!fresh.emplace(fp.id, 0).second) throw InvalidArgument("duplicate id '" + fp.id + "'");
    }
    for (auto& fp : fps) insert_locked(std::move(fp));
  }

  /// Every entry with distance <= tau, ordered by (distance, sequence).
  std::vector<MatchResult> search_threshold(std::span<const std::uint8_t> query, std::size_t tau,
                                            MetadataFilter filter = {}) const {
    std::shared_lock lock(mu_);
    const auto q = prepare_query(query, tau);
    if (ids_.empty()) return {};
    std::vector<std::vector<std::pair<std::size_t, std::size_t>>> parts(shards());
    run_sharded([&](std::size_t shard, std::size_t begin, std::size_t end) {
      auto& hits = parts[shard];
      for (std::size_t i = begin; i < end; ++i) {
        const std::size_t d = distance_to(q, i);
        if (d <= tau) hits.emplace_back(d, i);
      }
    });
    std::vector<std::pair<std::size_t, std::size_t>> hits;
    for (auto& p : parts) hits.insert(hits.end(), p.begin(), p.end());
    std::sort(hits.begin(), hits.end());
    return materialize(hits, filter);
  }

  /// |{entries with distance <= tau}| without materializing ids.
  std::size_t count_within(std::span<const std::uint8_t> query, std::size_t tau) const {
    std::shared_lock lock(mu_);
    const auto q = prepare_query(query, tau);
    std::size_t n = 0;
    for (std::size_t i = 0; i < ids_.size(); ++i) n += distance_to(q, i) <= tau;
    return n;
  }

  /// The k nearest entries by (distance, sequence). k larger than the store
  /// returns the whole store.
  std::vector<MatchResult> search_topk(std::span<const std::uint8_t> query, std::size_t k,
                                       MetadataFilter filter = {}) const {
    if (k == 0) throw InvalidArgument("k must be >= 1");
    std::shared_lock lock(mu_);
    const auto q = prepare_query(query, dim_ ? dim_ : query.size() * 8);
    if (ids_.empty()) return {};
    using Key = std::pair<std::size_t, std::size_t>;  // (distance, index)
    std::vector<std::vector<Key>> parts(shards());
    const bool filtering = filter.query && filter.min_overlap > 0;
    run_sharded([&](std::size_t shard, std::size_t begin, std::size_t end) {
      std::priority_queue<Key> heap;  // max-heap of the current best k
      for (std::size_t i = begin; i < end; ++i) {
        if (filtering && metadata_overlap(*filter.query, metadata_[i]) < filter.min_overlap) continue;
        const Key key{distance_to(q, i), i};
        if (heap.size() < k) {
          heap.push(key);
        } else if (key < heap.top()) {
          heap.pop();
          heap.push(key);
        }
      }
      auto& out = parts[shard];
      out.reserve(heap.size());
      while (!heap.empty()) {
        out.push_back(heap.top());
        heap.pop();
      }
    });
    std::vector<Key> all;
    for (auto& p : parts) all.insert(all.end(), p.begin(), p.end());
    std::sort(all.begin(), all.end());
    if (all.size() > k) all.resize(k);
    return materialize(all, {filter.query, 0});
  }

  /// True when every entry carries a dense vector of one common length.
  bool has_dense() const {
    std::shared_lock lock(mu_);
    return !ids_.empty() && dense_count_ == ids_.size();
  }

  /// Top-k by cosine similarity over the dense side-table, highest first,
  /// ties by sequence. `distance` in the result is unused (0); the similarity
  /// is returned alongside.
  std::vector<std::pair<MatchResult, float>> dense_topk(std::span<const float> query,
                                                        std::size_t k) const {
    if (k == 0) throw InvalidArgument("k must be >= 1");
    std::shared_lock lock(mu_);
    if (ids_.empty()) return {};
    if (dense_count_ != ids_.size()) throw InvalidArgument("store lacks dense vectors for cosine scan");
    if (query.size() != dense_dim_) throw DimensionMismatch(dense_dim_, query.size());
    const float qn = std::sqrt(dot(query.data(), query.data(), dense_dim_));
    using Key = std::pair<float, std::size_t>;
    // Min-heap on similarity; on equal similarity prefer the lower index.
    const auto worse = [](const Key& a, const Key& b) {
      if (a.first != b.first) return a.first > b.first;
      return a.second < b.second;
    };
    std::priority_queue<Key, std::vector<Key>, decltype(worse)> heap(worse);
    for (std::size_t i = 0; i < ids_.size(); ++i) {
      const float denom = qn * dense_norms_[i];
      const float sim = denom > 0.0f ? dot(query.data(), dense_.data() + i * dense_dim_, dense_dim_) / denom
                                     : 0.0f;
      const Key key{sim, i};
      if (heap.size() < k) {
        heap.push(key);
      } else if (sim > heap.top().first) {
        heap.pop();
        heap.push(key);
      }
    }
    std::vector<Key> best;
    while (!heap.empty()) {
      best.push_back(heap.top());
      heap.pop();
    }
    std::sort(best.begin(), best.end(), [](const Key& a, const Key& b) {
      if (a.first != b.first) return a.first > b.first;
      return a.second < b.second;
    });
    std::vector<std::pair<MatchResult, float>> out;
    for (const auto& [sim, i] : best) out.push_back({{ids_[i], 0, 0, sequence_[i]}, sim});
    return out;
  }

  /// Reconstructs entry `index` (insertion order).
  StoredFingerprint entry(std::size_t index) const {
    std::shared_lock lock(mu_);
    if (index >= ids_.size()) throw InvalidArgument("entry index out of range");
    StoredFingerprint fp;
    fp.id = ids_[index];
    fp.dim = dim_;
    fp.bits = bytes_of(index);
    fp.alpha = alphas_[index];
    fp.metadata = metadata_[index];
    fp.inserted_at = sequence_[index];
    if (dense_count_ == ids_.size() && dense_dim_ > 0) {
      fp.dense.assign(dense_.begin() + static_cast<std::ptrdiff_t>(index * dense_dim_),
                      dense_.begin() + static_cast<std::ptrdiff_t>((index + 1) * dense_dim_));
    }
    return fp;
  }

  /// Bytes of packed fingerprint payload: count * ceil(dim / 8).
  std::size_t payload_bytes() const {
    std::shared_lock lock(mu_);
    return ids_.size() * packed_size(dim_);
  }

  /// Approximate resident bytes: word array, ids, metadata, bookkeeping.
  std::size_t memory_bytes() const {
    std::shared_lock lock(mu_);
    std::size_t total = bits_.capacity() * sizeof(std::uint64_t) +
                        sequence_.capacity() * sizeof(std::uint64_t) +
                        alphas_.capacity() * sizeof(std::optional<double>) +
                        ids_.capacity() * sizeof(std::string) +
                        metadata_.capacity() * sizeof(Metadata) +
                        dense_.capacity() * sizeof(float) + dense_norms_.capacity() * sizeof(float);
    for (const auto& id : ids_) total += id.capacity() > 15 ? id.capacity() + 1 : 0;
    for (const auto& m : metadata_) {
      for (const auto& [k, v] : m) total += 64 + k.size() + v.size();
    }
    total += index_.size() * 48;
    return total;
  }

  void save_snapshot(const std::string& path) const;
  static FingerprintStore load_snapshot(const std::string& path);

  /// Serialized snapshot bytes (same content save_snapshot writes).
  std::string snapshot_bytes() const;

 private:
  struct Query {
    std::vector<std::uint64_t> words;
  };

  static float dot(const float* a, const float* b, std::size_t n) noexcept {
    float acc[8] = {0, 0, 0, 0, 0, 0, 0, 0};
    std::size_t i = 0;
    for (; i + 8 <= n; i += 8) {
      for (int j = 0; j < 8; ++j) acc[j] += a[i + j] * b[i + j];
    }
    float s = 0.0f;
    for (; i < n; ++i) s += a[i] * b[i];
    for (const float v : acc) s += v;
    return s;
  }

  void copy_from(const FingerprintStore& o) {
    dim_ = o.dim_;
    words_ = o.words_;
    bits_ = o.bits_;
    ids_ = o.ids_;
    sequence_ = o.sequence_;
    alphas_ = o.alphas_;
    metadata_ = o.metadata_;
    index_ = o.index_;
    next_sequence_ = o.next_sequence_;
    dense_ = o.dense_;
    dense_norms_ = o.dense_norms_;
    dense_dim_ = o.dense_dim_;
    dense_count_ = o.dense_count_;
    threads_ = o.threads_;
  }

  void move_from(FingerprintStore&& o) noexcept {
    dim_ = o.dim_;
    words_ = o.words_;
    bits_ = std::move(o.bits_);
    ids_ = std::move(o.ids_);
    sequence_ = std::move(o.sequence_);
    alphas_ = std::move(o.alphas_);
    metadata_ = std::move(o.metadata_);
    index_ = std::move(o.index_);
    next_sequence_ = o.next_sequence_;
    dense_ = std::move(o.dense_);
    dense_norms_ = std::move(o.dense_norms_);
    dense_dim_ = o.dense_dim_;
    dense_count_ = o.dense_count_;
    threads_ = o.threads_;
  }

  void validate_locked(const StoredFingerprint& fp, std::size_t dim) const {
    if (fp.dim == 0) throw InvalidArgument("fingerprint dim must be positive");
    if (dim != 0 && fp.dim != dim) throw DimensionMismatch(dim, fp.dim);
    validate_packed(fp.bits, fp.dim);
    if (index_.count(fp.id)) throw InvalidArgument("duplicate id '" + fp.id + "'");
    if (!fp.dense.empty()) {
      if (dense_dim_ != 0 && fp.dense.size() != dense_dim_) {
        throw DimensionMismatch(dense_dim_, fp.dense.size());
      }
      for (std::size_t i = 0; i < fp.dense.size(); ++i) {
        if (!std::isfinite(fp.dense[i])) throw NonFiniteValue(i);
      }
    }
  }

  void insert_locked(StoredFingerprint fp) {
    validate_locked(fp, dim_);
    if (dim_ == 0) {
      dim_ = fp.dim;
      words_ = (dim_ + 63) / 64;
    }
    const std::size_t index = ids_.size();
    bits_.resize(bits_.size() + words_, 0);
    std::memcpy(bits_.data() + index * words_, fp.bits.data(), fp.bits.size());
    index_.emplace(fp.id, index);
    ids_.push_back(std::move(fp.id));
    sequence_.push_back(next_sequence_++);
    alphas_.push_back(fp.alpha);
    metadata_.push_back(std::move(fp.metadata));
    if (!fp.dense.empty()) {
      if (dense_dim_ == 0) dense_dim_ = fp.dense.size();
      dense_.resize((index + 1) * dense_dim_, 0.0f);
      dense_norms_.resize(index + 1, 0.0f);
      std::copy(fp.dense.begin(), fp.dense.end(), dense_.begin() + static_cast<std::ptrdiff_t>(index * dense_dim_));
      dense_norms_[index] = std::sqrt(dot(fp.dense.data(), fp.dense.data(), dense_dim_));
      ++dense_count_;
    } else if (dense_dim_ != 0) {
      dense_.resize((index + 1) * dense_dim_, 0.0f);
      dense_norms_.resize(index + 1, 0.0f);
    }
  }

  Query prepare_query(std::span<const std::uint8_t> query, std::size_t tau) const {
    if (dim_ != 0) {
      if (query.size() != packed_size(dim_)) {
        throw DimensionMismatch(dim_, query.size() * 8);
      }
      validate_packed(query, dim_);
      if (tau > dim_) {
        throw InvalidArgument("tau " + std::to_string(tau) + " exceeds dim " + std::to_string(dim_));
      }
    }
    Query q;
    q.words.assign(words_ ? words_ : (query.size() + 7) / 8, 0);
    std::memcpy(q.words.data(), query.data(), query.size());
    return q;
  }

  std::size_t distance_to(const Query& q, std::size_t i) const noexcept {
    const std::uint64_t* row = bits_.data() + i * words_;
    std::size_t d = 0;
    for (std::size_t w = 0; w < words_; ++w) d += static_cast<std::size_t>(std::popcount(row[w] ^ q.words[w]));
    return d;
  }

  std::vector<std::uint8_t> bytes_of(std::size_t i) const {
    std::vector<std::uint8_t> out(packed_size(dim_));
    std::memcpy(out.data(), bits_.data() + i * words_, out.size());
    return out;
  }

  std::size_t shards() const noexcept {
    return std::max<std::size_t>(1, std::min<std::size_t>(threads_, ids_.size()));
  }

  template <typename Fn>
  void run_sharded(Fn&& fn) const {
    const std::size_t n = ids_.size();
    const std::size_t s = shards();
    if (s == 1) {
      fn(0, 0, n);
      return;
    }
    std::vector<std::thread> pool;
    for (std::size_t t = 0; t < s; ++t) {
      pool.emplace_back([&, t] { fn(t, n * t / s, n * (t + 1) / s); });
    }
    for (auto& th : pool) th.join();
  }

  std::vector<MatchResult> materialize(const std::vector<std::pair<std::size_t, std::size_t>>& hits,
                                       MetadataFilter filter) const {
    std::vector<MatchResult> out;
    out.reserve(hits.size());
    for (const auto& [d, i] : hits) {
      const std::size_t overlap = filter.query ? metadata_overlap(*filter.query, metadata_[i]) : 0;
      if (overlap < filter.min_overlap) continue;
      out.push_back({ids_[i], d, overlap, sequence_[i]});
    }
    return out;
  }

  mutable WriterPreferringMutex mu_;
  std::size_t dim_ = 0;
  std::size_t words_ = 0;
  std::vector<std::uint64_t> bits_;
  std::vector<std::string> ids_;
  std::vector<std::uint64_t> sequence_;
  std::vector<std::optional<double>> alphas_;
  std::vector<Metadata> metadata_;
  std::unordered_map<std::string, std::size_t> index_;
  std::uint64_t next_sequence_ = 0;
  std::vector<float> dense_;
  std::vector<float> dense_norms_;
  std::size_t dense_dim_ = 0;
  std::size_t dense_count_ = 0;
  std::size_t threads_ = 1;
};

// ---------------------------------------------------------------------------
// Snapshots

inline constexpr std::array<char, 8> kSnapshotMagic = {'B', 'S', 'F', 'P', '\0', '\0', '\0', '\1'};

namespace snapshot_detail {

inline void put_u32(std::string& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out += static_cast<char>((v >> (8 * i)) & 0xFF);
}
inline void put_u64(std::string& out, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) out += static_cast<char>((v >> (8 * i)) & 0xFF);
}
inline void put_str(std::string& out, const std::string& s) {
  put_u32(out, static_cast<std::uint32_t>(s.size()));
  out += s;
}

/// Bounds-checked little-endian reader over an in-memory snapshot.
class Cursor {
 public:
  Cursor(std::string_view data, const std::string& path) : data_(data), path_(path) {}

  std::string_view take(std::size_t n, const char* what) {
    if (data_.size() - pos_ < n) throw CorruptFile(path_ + ": truncated " + what);
    const auto out = data_.substr(pos_, n);
    pos_ += n;
    return out;
  }
  std::uint64_t uint(std::size_t bytes, const char* what) {
    const auto b = take(bytes, what);
    std::uint64_t v = 0;
    for (std::size_t i = 0; i < bytes; ++i) v |= std::uint64_t{static_cast<unsigned char>(b[i])} << (8 * i);
    return v;
  }
  std::string str(const char* what) {
    const auto n = uint(4, what);
    return std::string(take(n, what));
  }
  bool done() const noexcept { return pos_ == data_.size(); }

 private:
  std::string_view data_;
  std::string path_;
  std::size_t pos_ = 0;
};

}  // namespace snapshot_detail

inline std::string FingerprintStore::snapshot_bytes() const {
  using namespace snapshot_detail;
  std::shared_lock lock(mu_);
  std::string out(kSnapshotMagic.begin(), kSnapshotMagic.end());
  put_u32(out, static_cast<std::uint32_t>(dim_));
  put_u64(out, ids_.size());
  for (std::size_t i = 0; i < ids_.size(); ++i) {
    put_str(out, ids_[i]);
    put_u32(out, static_cast<std::uint32_t>(dim_));
    out += static_cast<char>(alphas_[i] ? 1 : 0);
    if (alphas_[i]) put_u64(out, std::bit_cast<std::uint64_t>(*alphas_[i]));
    const auto bytes = bytes_of(i);
    out.append(reinterpret_cast<const char*>(bytes.data()), bytes.size());
    put_u32(out, static_cast<std::uint32_t>(metadata_[i].size()));
    for (const auto& [k, v] : metadata_[i]) {
      put_str(out, k);
      put_str(out, v);
    }
  }
  return out;
}

inline void FingerprintStore::save_snapshot(const std::string& path) const {
  const std::string data = snapshot_bytes();
  const std::string tmp = path + ".tmp";
  {
    std::ofstream f(tmp, std::ios::binary | std::ios::trunc);
    if (!f) throw IoError(tmp, "cannot open for writing");
    f.write(data.data(), static_cast<std::streamsize>(data.size()));
    if (!f) throw IoError(tmp, "write failed");
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) throw IoError(path, "rename failed: " + ec.message());
}

inline FingerprintStore FingerprintStore::load_snapshot(const std::string& path) {
  using namespace snapshot_detail;
  std::ifstream f(path, std::ios::binary);
  if (!f) throw IoError(path, "cannot open snapshot");
  const std::string data((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
  Cursor c(data, path);
  if (c.take(8, "magic") != std::string_view(kSnapshotMagic.data(), 8)) {
    throw CorruptFile(path + ": bad snapshot magic");
  }
  const auto dim = static_cast<std::size_t>(c.uint(4, "header"));
  const auto count = c.uint(8, "header");
  FingerprintStore store;
  if (dim) store = FingerprintStore(dim);
  for (std::uint64_t r = 0; r < count; ++r) {
    StoredFingerprint fp;
    fp.id = c.str("record id");
    fp.dim = static_cast<std::size_t>(c.uint(4, "record dim"));
    if (fp.dim != dim) throw CorruptFile(path + ": record dim differs from header");
    const auto has_alpha = c.uint(1, "alpha flag");
    if (has_alpha > 1) throw CorruptFile(path + ": bad alpha flag");
    if (has_alpha) fp.alpha = std::bit_cast<double>(c.uint(8, "alpha"));
    const auto bytes = c.take(packed_size(dim), "fingerprint bits");
    fp.bits.assign(bytes.begin(), bytes.end());
    const auto n_meta = c.uint(4, "metadata count");
    for (std::uint64_t m = 0; m < n_meta; ++m) {
      auto k = c.str("metadata key");
      auto v = c.str("metadata value");
      fp.metadata.emplace(std::move(k), std::move(v));
    }
    try {
      store.insert(std::move(fp));
    } catch (const CorruptFrame& e) {
      throw CorruptFile(path + ": " + e.what());
    }
  }
  if (!c.done()) throw CorruptFile(path + ": trailing bytes after last record");
  return store;
}

}  // namespace binaryshield
