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

#include "binaryshield/store.hpp"

#include <gtest/gtest.h>

#include <filesystem>
#include <thread>

#include "oracles.hpp"

namespace binaryshield {
namespace {

using testing_oracles::full_sort;
using testing_oracles::random_bits;

StoredFingerprint make(const std::string& id, const std::vector<std::uint8_t>& bits,
                       Metadata meta = {}) {
  StoredFingerprint fp;
  fp.id = id;
  fp.dim = bits.size();
  fp.bits = pack_bits(bits);
  fp.metadata = std::move(meta);
  return fp;
}

struct Fixture {
  FingerprintStore store;
  std::vector<std::vector<std::uint8_t>> entries;
  std::vector<std::string> ids;
};

Fixture random_store(std::size_t n, std::size_t dim, std::uint64_t seed, bool with_near = true) {
  Fixture f;
  std::vector<std::uint8_t> centre = random_bits(dim, seed);
  for (std::size_t i = 0; i < n; ++i) {
    auto b = random_bits(dim, seed * 1000003 + i + 1);
    if (with_near && i % 7 == 0) {
      // Near the centre so small taus have something to return.
      b = centre;
      auto flips = random_bits(dim, seed + 17 * i);
      for (std::size_t j = 0; j < dim; j += 5) b[j] ^= flips[j];
    }
    f.ids.push_back("e" + std::to_string(i));
    f.entries.push_back(b);
    f.store.insert(make(f.ids.back(), b));
  }
  return f;
}

TEST(StoreTest, InsertThenFindSelf) {
  FingerprintStore s;
  const auto b = random_bits(768, 1);
  s.insert(make("x", b));
  const auto hits = s.search_threshold(pack_bits(b), 0);
  ASSERT_EQ(hits.size(), 1u);
  EXPECT_EQ(hits[0].id, "x");
  EXPECT_EQ(hits[0].distance, 0u);
  EXPECT_EQ(s.dim(), 768u);
}

TEST(StoreTest, DuplicateIdAndDimMismatchLeaveStoreUnchanged) {
  FingerprintStore s;
  s.insert(make("x", random_bits(768, 1)));
  EXPECT_THROW(s.insert(make("x", random_bits(768, 2))), InvalidArgument);
  EXPECT_THROW(s.insert(make("y", random_bits(64, 2))), DimensionMismatch);
  EXPECT_EQ(s.size(), 1u);
  EXPECT_THROW(s.insert_batch({make("a", random_bits(768, 3)), make("a", random_bits(768, 4))}),
               InvalidArgument);
  EXPECT_EQ(s.size(), 1u);
  EXPECT_THROW(s.search_threshold(pack_bits(random_bits(64, 1)), 3), DimensionMismatch);
  EXPECT_THROW(s.search_threshold(pack_bits(random_bits(768, 1)), 769), InvalidArgument);
  EXPECT_THROW(s.search_topk(pack_bits(random_bits(768, 1)), 0), InvalidArgument);
}

TEST(StoreTest, ThresholdEdges) {
  auto f = random_store(50, 768, 3);
  const auto q = random_bits(768, 999);
  EXPECT_EQ(f.store.search_threshold(pack_bits(q), 768).size(), 50u);
  EXPECT_TRUE(f.store.search_threshold(pack_bits(q), 0).empty());
  EXPECT_TRUE(FingerprintStore().search_threshold(pack_bits(q), 10).empty());
}

TEST(StoreTest, ThresholdAndTopKMatchOracleOnRandomStores) {
  for (std::uint64_t seed : {1, 2, 3}) {
    for (std::size_t dim : {64, 100, 768}) {
      auto f = random_store(seed == 3 ? 10000 : 600, dim, seed);
      const auto q = random_bits(dim, seed + 5555);
      const auto oracle = full_sort(f.entries, f.ids, q);
      for (std::size_t tau : {std::size_t{0}, dim / 8, dim / 3, dim / 2, dim}) {
        const auto got = f.store.search_threshold(pack_bits(q), tau);
        std::size_t expect_n = 0;
        while (expect_n < oracle.size() && oracle[expect_n].distance <= tau) ++expect_n;
        ASSERT_EQ(got.size(), expect_n) << dim << " " << tau;
        for (std::size_t i = 0; i < got.size(); ++i) {
          ASSERT_EQ(got[i].id, oracle[i].id);
          ASSERT_EQ(got[i].distance, oracle[i].distance);
        }
        EXPECT_EQ(f.store.count_within(pack_bits(q), tau), expect_n);
      }
      for (std::size_t k : {1, 5, 37}) {
        const auto got = f.store.search_topk(pack_bits(q), k);
        ASSERT_EQ(got.size(), k);
        for (std::size_t i = 0; i < k; ++i) ASSERT_EQ(got[i].id, oracle[i].id);
      }
    }
  }
}

TEST(StoreTest, ShardedSearchMatchesSingleThreaded) {
  auto f = random_store(5000, 768, 8);
  const auto q = pack_bits(random_bits(768, 77));
  const auto a = f.store.search_threshold(q, 384);
  const auto ka = f.store.search_topk(q, 25);
  f.store.set_search_threads(4);
  const auto b = f.store.search_threshold(q, 384);
  const auto kb = f.store.search_topk(q, 25);
  ASSERT_EQ(a.size(), b.size());
  for (std::size_t i = 0; i < a.size(); ++i) EXPECT_EQ(a[i].id, b[i].id);
  for (std::size_t i = 0; i < ka.size(); ++i) EXPECT_EQ(ka[i].id, kb[i].id);
}

TEST(StoreTest, ThresholdIsMonotoneAndTopKIsPrefixClosed) {
  auto f = random_store(2000, 768, 4);
  const auto q = pack_bits(random_bits(768, 4242));
  std::vector<std::string> prev;
  for (std::size_t tau = 0; tau <= 768; tau += 16) {
    const auto hits = f.store.search_threshold(q, tau);
    ASSERT_GE(hits.size(), prev.size());
    std::set<std::string> ids;
    for (const auto& h : hits) ids.insert(h.id);
    for (const auto& p : prev) ASSERT_TRUE(ids.count(p)) << tau;
    prev.clear();
    for (const auto& h : hits) prev.push_back(h.id);
  }
  auto last = f.store.search_topk(q, 1);
  for (std::size_t k = 2; k <= 40; ++k) {
    const auto cur = f.store.search_topk(q, k);
    for (std::size_t i = 0; i < last.size(); ++i) ASSERT_EQ(cur[i].id, last[i].id) << k;
    last = cur;
  }
}

TEST(StoreTest, TopKBeyondSizeAndDuplicateFirst) {
  FingerprintStore s;
  const auto q = random_bits(768, 9);
  s.insert(make("other", random_bits(768, 10)));
  s.insert(make("dup", q));
  s.insert(make("dup2", q));
  const auto hits = s.search_topk(pack_bits(q), 10);
  ASSERT_EQ(hits.size(), 3u);
  EXPECT_EQ(hits[0].id, "dup");  // tie broken by insertion order
  EXPECT_EQ(hits[1].id, "dup2");
}

TEST(StoreTest, PlantedEntriesAreExactlyTheThresholdHits) {
  FingerprintStore s;
  for (int i = 0; i < 1000; ++i) s.insert(make("r" + std::to_string(i), random_bits(768, 500 + i)));
  const auto q = random_bits(768, 4);
  for (int p = 0; p < 5; ++p) {
    auto b = q;
    for (int j = 0; j < 4 * p + 3; ++j) b[(j * 131 + p) % 768] ^= 1;
    s.insert(make("planted" + std::to_string(p), b));
  }
  const auto hits = s.search_threshold(pack_bits(q), 20);
  ASSERT_EQ(hits.size(), 5u);
  for (int p = 0; p < 5; ++p) {
    EXPECT_EQ(hits[p].id, "planted" + std::to_string(p));
    EXPECT_EQ(hits[p].distance, static_cast<std::size_t>(4 * p + 3));
  }
}

TEST(StoreTest, MetadataOverlapReportedAndFilterOptional) {
  FingerprintStore s;
  const auto q = random_bits(64, 1);
  s.insert(make("a", q, {{"service", "mail"}, {"tier", "gold"}}));
  s.insert(make("b", q, {{"service", "chat"}}));
  const Metadata qm = {{"service", "mail"}, {"tier", "gold"}, {"x", "y"}};
  auto hits = s.search_threshold(pack_bits(q), 0, {&qm, 0});
  ASSERT_EQ(hits.size(), 2u);
  EXPECT_EQ(hits[0].metadata_overlap, 2u);
  EXPECT_EQ(hits[1].metadata_overlap, 0u);
  hits = s.search_threshold(pack_bits(q), 0, {&qm, 1});
  ASSERT_EQ(hits.size(), 1u);
  EXPECT_EQ(hits[0].id, "a");
  EXPECT_EQ(s.search_topk(pack_bits(q), 5, {&qm, 2}).size(), 1u);
}

TEST(StoreTest, PayloadIs96BytesPerEntryAt768) {
  FingerprintStore s;
  std::vector<StoredFingerprint> batch;
  for (int i = 0; i < 100000; ++i) {
    StoredFingerprint fp;
    fp.id = std::to_string(i);
    fp.dim = 768;
    fp.bits.assign(96, static_cast<std::uint8_t>(i));
    batch.push_back(std::move(fp));
  }
  s.insert_batch(std::move(batch));
  EXPECT_EQ(s.size(), 100000u);
  EXPECT_EQ(s.payload_bytes(), 9'600'000u);
  EXPECT_GE(s.memory_bytes(), s.payload_bytes());
  // Bookkeeping (id, sequence, index slot, metadata header) stays under 256 B.
  EXPECT_LT(s.memory_bytes(), 100000u * (96 + 256));
}

TEST(StoreTest, SnapshotRoundTrip) {
  auto f = random_store(300, 100, 6);
  auto fp = make("meta", random_bits(100, 1), {{"k", "v"}, {"service", "mail"}});
  fp.alpha = 2.0;
  f.store.insert(fp);
  const auto path = (std::filesystem::temp_directory_path() /
                     ("bs_snap_" + std::to_string(::getpid()) + ".bsfp"))
                        .string();
  f.store.save_snapshot(path);
  const auto loaded = FingerprintStore::load_snapshot(path);
  EXPECT_EQ(loaded.snapshot_bytes(), f.store.snapshot_bytes());
  EXPECT_EQ(loaded.size(), 301u);
  const auto e = loaded.entry(300);
  EXPECT_EQ(e.id, "meta");
  EXPECT_EQ(e.alpha, 2.0);
  EXPECT_EQ(e.metadata, fp.metadata);
  EXPECT_EQ(e.bits, fp.bits);
  const auto q = pack_bits(random_bits(100, 31));
  const auto a = f.store.search_topk(q, 10), b = loaded.search_topk(q, 10);
  for (std::size_t i = 0; i < 10; ++i) EXPECT_EQ(a[i].id, b[i].id);

  auto bytes = f.store.snapshot_bytes();
  EXPECT_EQ(bytes.substr(0, 8), std::string("BSFP\0\0\0\1", 8));
  for (const std::string& bad : {bytes.substr(0, bytes.size() - 1), bytes + "x",
                                 std::string("XXXX") + bytes.substr(4)}) {
    {
      std::ofstream out(path, std::ios::binary | std::ios::trunc);
      out << bad;
    }
    EXPECT_THROW(FingerprintStore::load_snapshot(path), Error);
  }
  std::filesystem::remove(path);
}

TEST(StoreTest, SnapshotByteLayout) {
  FingerprintStore s;
  StoredFingerprint fp;
  fp.id = "a";
  fp.dim = 8;
  fp.bits = {0x5A};
  fp.metadata = {{"k", "v"}};
  s.insert(fp);
  const std::string expected(
      "BSFP\0\0\0\1"
      "\x08\0\0\0"
      "\x01\0\0\0\0\0\0\0"
      "\x01\0\0\0a"
      "\x08\0\0\0"
      "\0"
      "\x5A"
      "\x01\0\0\0"
      "\x01\0\0\0k\x01\0\0\0v",
      8 + 4 + 8 + 5 + 4 + 1 + 1 + 4 + 10);
  EXPECT_EQ(s.snapshot_bytes(), expected);
}

TEST(StoreTest, DenseTopKMatchesBruteForceCosine) {
  FingerprintStore s;
  std::vector<std::vector<float>> vecs;
  for (int i = 0; i < 500; ++i) {
    auto v = testing_oracles::gaussian_vector(64, 100 + i);
    auto fp = make("d" + std::to_string(i), random_bits(64, i));
    fp.dense = v;
    vecs.push_back(v);
    s.insert(fp);
  }
  ASSERT_TRUE(s.has_dense());
  const auto q = testing_oracles::gaussian_vector(64, 9);
  std::vector<std::pair<double, int>> oracle;
  for (int i = 0; i < 500; ++i) {
    double d = 0, na = 0, nb = 0;
    for (int j = 0; j < 64; ++j) {
      d += double(q[j]) * vecs[i][j];
      na += double(q[j]) * q[j];
      nb += double(vecs[i][j]) * vecs[i][j];
    }
    oracle.push_back({-d / std::sqrt(na * nb), i});
  }
  std::sort(oracle.begin(), oracle.end());
  const auto got = s.dense_topk(q, 5);
  ASSERT_EQ(got.size(), 5u);
  for (int i = 0; i < 5; ++i) {
    EXPECT_EQ(got[i].first.id, "d" + std::to_string(oracle[i].second));
    EXPECT_NEAR(got[i].second, -oracle[i].first, 1e-5);
  }
}

TEST(StoreTest, ConcurrentReadersWithWriter) {
  FingerprintStore s;
  for (int i = 0; i < 1000; ++i) s.insert(make("s" + std::to_string(i), random_bits(256, i)));
  std::atomic<bool> stop{false};
  std::atomic<int> bad{0};
  std::vector<std::thread> readers;
  const auto q = pack_bits(random_bits(256, 1));
  for (int r = 0; r < 4; ++r) {
    readers.emplace_back([&] {
      while (!stop) {
        const auto hits = s.search_topk(q, 10);
        for (std::size_t i = 1; i < hits.size(); ++i) {
          if (hits[i].distance < hits[i - 1].distance) ++bad;
        }
      }
    });
  }
  for (int i = 0; i < 500; ++i) s.insert(make("w" + std::to_string(i), random_bits(256, 5000 + i)));
  stop = true;
  for (auto& t : readers) t.join();
  EXPECT_EQ(bad.load(), 0);
  EXPECT_EQ(s.size(), 1500u);
}

}  // namespace
}  // namespace binaryshield
