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

// Embedding providers. All of them consume RedactedPrompt, never raw text.
//
//   PseudoEmbedder     deterministic token-hash embedding, no model needed
//   FileCacheProvider  lookup in a .bsemb cache keyed by SHA-256 of the text
//   RemoteEmbedder     OpenAI-style embeddings endpoint over HttpTransport
//
// Cache file layout (all integers little-endian):
//   magic   8 bytes  "BSEMB\0\0\1"
//   dim     u32
//   count   u32
//   record  u32 key_len | key bytes | dim x f32

#include <array>
#include <bit>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <functional>
#include <memory>
#include <mutex>
#include <optional>
#include <span>
#include <string>
#include <thread>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "binaryshield/encoding.hpp"
#include "binaryshield/error.hpp"
#include "binaryshield/fingerprint.hpp"
#include "binaryshield/pii.hpp"
#include "binaryshield/rng.hpp"
#include "binaryshield/text.hpp"
#include "json.hpp"

namespace binaryshield {

enum class ProviderKind { kPseudo, kFileCache, kRemoteHttp };

inline std::optional<ProviderKind> parse_provider_kind(std::string_view s) {
  if (s == "pseudo") return ProviderKind::kPseudo;
  if (s == "cache" || s == "file_cache") return ProviderKind::kFileCache;
  if (s == "remote" || s == "remote_http") return ProviderKind::kRemoteHttp;
  return std::nullopt;
}

struct ProviderConfig {
  ProviderKind kind = ProviderKind::kPseudo;
  std::size_t dim = kDefaultDim;
  std::string model_id = "pseudo-token-hash-v1";
  std::optional<std::string> endpoint_url;
  std::optional<std::string> api_key_env_var;
  std::string auth_header = "Authorization";
  std::optional<std::string> cache_path;
  std::chrono::milliseconds request_timeout{30000};
  std::size_t max_batch = 100;
  std::size_t max_in_flight = 4;

  void validate() const {
    if (dim == 0) throw InvalidArgument("provider dim must be positive");
    if (max_batch == 0) throw InvalidArgument("max_batch must be positive");
    if (max_in_flight == 0) throw InvalidArgument("max_in_flight must be positive");
    if (kind == ProviderKind::kRemoteHttp && !endpoint_url) {
      throw InvalidArgument("remote provider requires endpoint_url");
    }
    if (kind == ProviderKind::kFileCache && !cache_path) {
      throw InvalidArgument("file-cache provider requires cache_path");
    }
  }
};

/// Cache lookup failed; carries the content key.
class MissingEmbedding : public Error {
 public:
  explicit MissingEmbedding(std::string key)
      : Error("no cached embedding for key " + key), key_(std::move(key)) {}
  const std::string& key() const noexcept { return key_; }

 private:
  std::string key_;
};

/// Remote call failed after retries. `status` is 0 for connection-level
/// failures; `chunk` identifies the failing batch chunk.
class TransportError : public Error {
 public:
  TransportError(const std::string& what, int status, int attempts, bool retryable,
                 std::size_t chunk = 0)
      : Error(what + " (status " + std::to_string(status) + ", attempts " +
              std::to_string(attempts) + ", chunk " + std::to_string(chunk) + ")"),
        status_(status),
        attempts_(attempts),
        retryable_(retryable),
        chunk_(chunk) {}

  int status() const noexcept { return status_; }
  int attempts() const noexcept { return attempts_; }
  bool retryable() const noexcept { return retryable_; }
  std::size_t chunk() const noexcept { return chunk_; }

 private:
  int status_;
  int attempts_;
  bool retryable_;
  std::size_t chunk_;
};

/// Cache key: lowercase hex SHA-256 of the exact redacted bytes.
inline std::string content_key(const RedactedPrompt& text) {
  return sha256_hex(text.text());
}

class EmbeddingProvider {
 public:
  virtual ~EmbeddingProvider() = default;

  virtual std::size_t dim() const noexcept = 0;
  virtual const std::string& model_id() const noexcept = 0;

  virtual DenseEmbedding embed(const RedactedPrompt& text) const = 0;

  /// Order-preserving. Default is one embed() per element.
  virtual std::vector<DenseEmbedding> embed_batch(
      std::span<const RedactedPrompt> texts) const {
    if (texts.empty()) throw InvalidArgument("embed_batch needs at least one text");
    std::vector<DenseEmbedding> out;
    out.reserve(texts.size());
    for (const auto& t : texts) out.push_back(embed(t));
    return out;
  }

 protected:
  static void require_text(const RedactedPrompt& text) {
    if (trim(text.text()).empty()) throw InvalidArgument("cannot embed empty text");
  }
};

// ---------------------------------------------------------------------------

/// Each lowercase word token seeds a counter stream that expands to a
/// +-1/sqrt(dim) vector; the text embedding is the L2-normalized sum. Texts
/// with no word tokens use the trimmed text itself as the single token.
class PseudoEmbedder final : public EmbeddingProvider {
 public:
  explicit PseudoEmbedder(std::size_t dim = kDefaultDim,
                          std::string model_id = "pseudo-token-hash-v1")
      : dim_(dim), model_id_(std::move(model_id)) {
    if (dim_ == 0) throw InvalidArgument("dim must be positive");
  }

  std::size_t dim() const noexcept override { return dim_; }
  const std::string& model_id() const noexcept override { return model_id_; }

  DenseEmbedding embed(const RedactedPrompt& text) const override {
    require_text(text);
    return embed_text(text.text());
  }

  /// Token-vector sum for arbitrary text. Exposed for tests and synthetic
  /// experiments that bypass redaction.
  DenseEmbedding embed_text(std::string_view text) const {
    auto tokens = tokenize_words(text);
    if (tokens.empty()) tokens.emplace_back(trim(text));
    // Integer tallies keep exact cancellation; scaling happens once at the end.
    std::vector<std::int64_t> acc(dim_, 0);
    for (const auto& tok : tokens) {
      const std::uint64_t seed = stable_hash64(tok);
      for (std::size_t j = 0; j < dim_; j += 64) {
        const std::uint64_t word = counter_word(seed, j / 64);
        const std::size_t lim = std::min<std::size_t>(64, dim_ - j);
        for (std::size_t b = 0; b < lim; ++b) acc[j + b] += ((word >> b) & 1u) ? 1 : -1;
      }
    }
    double norm = 0.0;
    for (const auto v : acc) norm += static_cast<double>(v) * static_cast<double>(v);
    norm = std::sqrt(norm);
    std::vector<float> values(dim_);
    for (std::size_t i = 0; i < dim_; ++i) {
      values[i] = static_cast<float>(norm > 0.0 ? static_cast<double>(acc[i]) / norm : 0.0);
    }
    return DenseEmbedding(std::move(values), model_id_);
  }

 private:
  std::size_t dim_;
  std::string model_id_;
};

// ---------------------------------------------------------------------------
// Cache file I/O

inline constexpr std::array<char, 8> kCacheMagic = {'B', 'S', 'E', 'M', 'B', '\0', '\0', '\1'};

namespace detail {

inline void put_u32(std::string& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out += static_cast<char>((v >> (8 * i)) & 0xFF);
}

inline std::uint32_t get_u32(const unsigned char* p) noexcept {
  return std::uint32_t{p[0]} | (std::uint32_t{p[1]} << 8) | (std::uint32_t{p[2]} << 16) |
         (std::uint32_t{p[3]} << 24);
}

inline void put_f32(std::string& out, float f) { put_u32(out, std::bit_cast<std::uint32_t>(f)); }

inline bool read_exact(std::istream& in, void* dst, std::size_t n) {
  in.read(static_cast<char*>(dst), static_cast<std::streamsize>(n));
  return static_cast<std::size_t>(in.gcount()) == n;
}

inline std::uint32_t read_u32(std::istream& in, const std::string& path, const char* what) {
  unsigned char b[4];
  if (!read_exact(in, b, 4)) throw CorruptFile(path + ": truncated " + what);
  return get_u32(b);
}

}  // namespace detail

struct CacheHeader {
  std::uint32_t dim = 0;
  std::uint32_t count = 0;
};

/// Streams a cache file record by record without loading it whole.
class CacheReader {
 public:
  explicit CacheReader(const std::string& path) : path_(path), in_(path, std::ios::binary) {
    if (!in_) throw IoError(path, "cannot open embedding cache");
    char magic[8];
    if (!detail::read_exact(in_, magic, 8) || std::memcmp(magic, kCacheMagic.data(), 8) != 0) {
      throw CorruptFile(path + ": bad embedding-cache magic");
    }
    header_.dim = detail::read_u32(in_, path, "header");
    header_.count = detail::read_u32(in_, path, "header");
    if (header_.dim == 0) throw CorruptFile(path + ": zero dimension in header");
  }

  const CacheHeader& header() const noexcept { return header_; }

  struct Record {
    std::string key;
    std::vector<float> values;
    std::uint64_t values_offset = 0;
  };

  /// Next record, or nullopt at a clean end of file.
  std::optional<Record> next() {
    unsigned char lenb[4];
    in_.read(reinterpret_cast<char*>(lenb), 4);
    if (in_.gcount() == 0 && in_.eof()) return std::nullopt;
    if (in_.gcount() != 4) throw CorruptFile(path_ + ": truncated record length");
    const std::uint32_t klen = detail::get_u32(lenb);
    if (klen == 0 || klen > 4096) throw CorruptFile(path_ + ": implausible key length");
    Record r;
    r.key.resize(klen);
    if (!detail::read_exact(in_, r.key.data(), klen)) throw CorruptFile(path_ + ": truncated key");
    r.values_offset = static_cast<std::uint64_t>(in_.tellg());
    std::vector<unsigned char> raw(std::size_t{header_.dim} * 4);
    if (!detail::read_exact(in_, raw.data(), raw.size())) {
      throw CorruptFile(path_ + ": truncated vector for key " + r.key);
    }
    r.values.resize(header_.dim);
    for (std::size_t i = 0; i < header_.dim; ++i) {
      r.values[i] = std::bit_cast<float>(detail::get_u32(raw.data() + 4 * i));
    }
    return r;
  }

 private:
  std::string path_;
  std::ifstream in_;
  CacheHeader header_;
};

/// Appends `records` to a cache file, creating it when absent, and rewrites
/// the header count. Keys must be new to the file.
inline void append_cache_records(
    const std::string& path, std::uint32_t dim,
    const std::vector<std::pair<std::string, std::vector<float>>>& records) {
  namespace fs = std::filesystem;
  const bool exists = fs::exists(path);
  std::uint32_t count = 0;
  if (exists) {
    CacheReader r(path);
    if (r.header().dim != dim) {
      throw CorruptFile(path + ": header dim " + std::to_string(r.header().dim) +
                        " does not match provider dim " + std::to_string(dim));
    }
    count = r.header().count;
  }
  std::string blob;
  for (const auto& [key, values] : records) {
    if (values.size() != dim) throw InvalidArgument("record dim mismatch for key " + key);
    detail::put_u32(blob, static_cast<std::uint32_t>(key.size()));
    blob += key;
    for (const float f : values) detail::put_f32(blob, f);
  }
  std::fstream f;
  if (exists) {
    f.open(path, std::ios::binary | std::ios::in | std::ios::out);
  } else {
    f.open(path, std::ios::binary | std::ios::out | std::ios::trunc);
  }
  if (!f) throw IoError(path, "cannot open for writing");
  std::string header(kCacheMagic.begin(), kCacheMagic.end());
  detail::put_u32(header, dim);
  detail::put_u32(header, count + static_cast<std::uint32_t>(records.size()));
  if (exists) {
    f.seekp(0, std::ios::end);
    f.write(blob.data(), static_cast<std::streamsize>(blob.size()));
    f.seekp(0, std::ios::beg);
    f.write(header.data(), static_cast<std::streamsize>(header.size()));
  } else {
    f.write(header.data(), static_cast<std::streamsize>(header.size()));
    f.write(blob.data(), static_cast<std::streamsize>(blob.size()));
  }
  f.flush();
  if (!f) throw IoError(path, "write failed");
}

/// Keys every distinct text by content hash and appends embeddings for keys
/// not yet in the cache. Returns the number of records appended. A re-run
/// over the same input leaves the file byte-for-byte unchanged.
inline std::size_t build_cache(std::span<const RedactedPrompt> texts,
                               const EmbeddingProvider& source, const std::string& path) {
  std::unordered_set<std::string> present;
  if (std::filesystem::exists(path)) {
    CacheReader r(path);
    if (r.header().dim != source.dim()) {
      throw CorruptFile(path + ": header dim " + std::to_string(r.header().dim) +
                        " does not match provider dim " + std::to_string(source.dim()));
    }
    std::uint32_t seen = 0;
    while (auto rec = r.next()) {
      present.insert(rec->key);
      ++seen;
    }
    if (seen != r.header().count) {
      throw CorruptFile(path + ": header count " + std::to_string(r.header().count) +
                        " but " + std::to_string(seen) + " records");
    }
  }
  std::vector<RedactedPrompt> todo;
  std::vector<std::string> keys;
  for (const auto& t : texts) {
    auto key = content_key(t);
    if (present.insert(key).second) {
      keys.push_back(std::move(key));
      todo.push_back(t);
    }
  }
  if (todo.empty()) return 0;
  const auto embeddings = source.embed_batch(todo);
  std::vector<std::pair<std::string, std::vector<float>>> records;
  records.reserve(todo.size());
  for (std::size_t i = 0; i < todo.size(); ++i) {
    const auto v = embeddings[i].values();
    records.emplace_back(keys[i], std::vector<float>(v.begin(), v.end()));
  }
  append_cache_records(path, static_cast<std::uint32_t>(source.dim()), records);
  return records.size();
}

/// Lookup-only provider over a cache file. The index (key -> file offset) is
/// built once; vector reads are serialized on one stream.
class FileCacheProvider final : public EmbeddingProvider {
 public:
  FileCacheProvider(const std::string& path, std::string model_id = "file-cache",
                    std::optional<std::size_t> expected_dim = std::nullopt)
      : path_(path), model_id_(std::move(model_id)) {
    CacheReader r(path);
    dim_ = r.header().dim;
    if (expected_dim && *expected_dim != dim_) {
      throw CorruptFile(path + ": header dim " + std::to_string(dim_) +
                        " does not match configured dim " + std::to_string(*expected_dim));
    }
    std::uint32_t seen = 0;
    while (auto rec = r.next()) {
      if (!offsets_.emplace(rec->key, rec->values_offset).second) {
        throw CorruptFile(path + ": duplicate key " + rec->key);
      }
      ++seen;
    }
    if (seen != r.header().count) {
      throw CorruptFile(path + ": header count " + std::to_string(r.header().count) +
                        " but " + std::to_string(seen) + " records");
    }
    in_.open(path, std::ios::binary);
    if (!in_) throw IoError(path, "cannot reopen embedding cache");
  }

  std::size_t dim() const noexcept override { return dim_; }
  const std::string& model_id() const noexcept override { return model_id_; }
  std::size_t size() const noexcept { return offsets_.size(); }

  DenseEmbedding embed(const RedactedPrompt& text) const override {
    require_text(text);
    auto key = content_key(text);
    const auto it = offsets_.find(key);
    if (it == offsets_.end()) throw MissingEmbedding(std::move(key));
    std::vector<unsigned char> raw(dim_ * 4);
    {
      std::lock_guard lock(mu_);
      in_.clear();
      in_.seekg(static_cast<std::streamoff>(it->second));
      if (!detail::read_exact(in_, raw.data(), raw.size())) {
        throw CorruptFile(path_ + ": truncated vector for key " + it->first);
      }
    }
    std::vector<float> values(dim_);
    for (std::size_t i = 0; i < dim_; ++i) {
      values[i] = std::bit_cast<float>(detail::get_u32(raw.data() + 4 * i));
    }
    return DenseEmbedding(std::move(values), model_id_);
  }

 private:
  std::string path_;
  std::string model_id_;
  std::size_t dim_ = 0;
  std::unordered_map<std::string, std::uint64_t> offsets_;
  mutable std::mutex mu_;
  mutable std::ifstream in_;
};

// ---------------------------------------------------------------------------
// Remote provider

struct HttpRequest {
  std::string url;
  std::vector<std::pair<std::string, std::string>> headers;
  std::string body;
  std::chrono::milliseconds timeout{30000};
};

/// status == 0 means the request never produced an HTTP response.
struct HttpResponse {
  int status = 0;
  std::string body;
  std::string error;
};

class HttpTransport {
 public:
  virtual ~HttpTransport() = default;
  virtual HttpResponse post(const HttpRequest& request) = 0;
};

struct RetryPolicy {
  int max_attempts = 3;
  std::chrono::milliseconds initial_backoff{250};
  std::function<void(std::chrono::milliseconds)> sleep = [](std::chrono::milliseconds d) {
    std::this_thread::sleep_for(d);
  };

  static bool retryable_status(int status) noexcept {
    return status == 0 || status == 429 || (status >= 500 && status <= 599);
  }
};

/// Embeddings over HTTP: POST {"model": ..., "input": [...]} and read
/// {"data": [{"index": i, "embedding": [...]}, ...]}. The bearer token is
/// read from the configured environment variable at request time.
class RemoteEmbedder final : public EmbeddingProvider {
 public:
  RemoteEmbedder(ProviderConfig config, std::shared_ptr<HttpTransport> transport,
                 RetryPolicy retry = {})
      : config_(std::move(config)), transport_(std::move(transport)), retry_(std::move(retry)) {
    if (config_.kind != ProviderKind::kRemoteHttp) config_.kind = ProviderKind::kRemoteHttp;
    config_.validate();
    if (!transport_) throw InvalidArgument("remote provider needs a transport");
  }

  std::size_t dim() const noexcept override { return config_.dim; }
  const std::string& model_id() const noexcept override { return config_.model_id; }

  DenseEmbedding embed(const RedactedPrompt& text) const override {
    require_text(text);
    auto out = request_chunk(std::span<const RedactedPrompt>(&text, 1), 0);
    return std::move(out.front());
  }

  /// Splits into ceil(n / max_batch) requests; any failing chunk fails the
  /// whole batch and is named in the error.
  std::vector<DenseEmbedding> embed_batch(std::span<const RedactedPrompt> texts) const override {
    if (texts.empty()) throw InvalidArgument("embed_batch needs at least one text");
    for (const auto& t : texts) require_text(t);
    const std::size_t chunks = (texts.size() + config_.max_batch - 1) / config_.max_batch;
    std::vector<std::vector<DenseEmbedding>> results(chunks);
    std::vector<std::exception_ptr> errors(chunks);
    const auto run = [&](std::size_t c) {
      const std::size_t begin = c * config_.max_batch;
      const std::size_t n = std::min(config_.max_batch, texts.size() - begin);
      try {
        results[c] = request_chunk(texts.subspan(begin, n), c);
      } catch (...) {
        errors[c] = std::current_exception();
      }
    };
    if (chunks == 1 || config_.max_in_flight == 1) {
      for (std::size_t c = 0; c < chunks; ++c) run(c);
    } else {
      std::vector<std::thread> workers;
      std::mutex mu;
      std::size_t next = 0;
      const std::size_t n_workers = std::min(config_.max_in_flight, chunks);
      for (std::size_t w = 0; w < n_workers; ++w) {
        workers.emplace_back([&] {
          for (;;) {
            std::size_t c;
            {
              std::lock_guard lock(mu);
              if (next >= chunks) return;
              c = next++;
            }
            run(c);
          }
        });
      }
      for (auto& t : workers) t.join();
    }
    for (const auto& e : errors) {
      if (e) std::rethrow_exception(e);
    }
    std::vector<DenseEmbedding> out;
    out.reserve(texts.size());
    for (auto& chunk : results) {
      for (auto& e : chunk) out.push_back(std::move(e));
    }
    return out;
  }

 private:
  std::vector<DenseEmbedding> request_chunk(std::span<const RedactedPrompt> texts,
                                            std::size_t chunk) const {
    nlohmann::ordered_json body;
    body["model"] = config_.model_id;
    body["input"] = nlohmann::json::array();
    for (const auto& t : texts) body["input"].push_back(t.text());

    HttpRequest req;
    req.url = *config_.endpoint_url;
    req.body = body.dump();
    req.timeout = config_.request_timeout;
    req.headers.emplace_back("Content-Type", "application/json");
    if (config_.api_key_env_var) {
      if (const char* key = std::getenv(config_.api_key_env_var->c_str())) {
        const bool bearer = config_.auth_header == "Authorization";
        req.headers.emplace_back(config_.auth_header, bearer ? std::string("Bearer ") + key : key);
      }
    }

    std::chrono::milliseconds backoff = retry_.initial_backoff;
    HttpResponse resp;
    int attempt = 0;
    for (;;) {
      ++attempt;
      resp = transport_->post(req);
      const bool ok = resp.status >= 200 && resp.status < 300;
      if (ok) break;
      const bool retryable = RetryPolicy::retryable_status(resp.status);
      if (!retryable || attempt >= retry_.max_attempts) {
        throw TransportError(resp.status == 0 ? "request failed: " + resp.error
                                              : "embedding endpoint returned error",
                             resp.status, attempt, retryable, chunk);
      }
      retry_.sleep(backoff);
      backoff *= 2;
    }
    return parse_response(resp.body, texts.size(), attempt, chunk);
  }

  std::vector<DenseEmbedding> parse_response(const std::string& body, std::size_t expected,
                                             int attempts, std::size_t chunk) const {
    const auto fail = [&](const std::string& what) {
      return TransportError("malformed embedding response: " + what, 200, attempts, false, chunk);
    };
    nlohmann::json j = nlohmann::json::parse(body, nullptr, false);
    if (j.is_discarded() || !j.is_object()) throw fail("body is not a JSON object");
    std::vector<std::optional<std::vector<float>>> slots(expected);
    if (j.contains("data") && j["data"].is_array()) {
      const auto& data = j["data"];
      if (data.size() != expected) throw fail("expected " + std::to_string(expected) + " embeddings");
      for (std::size_t i = 0; i < data.size(); ++i) {
        const auto& item = data[i];
        if (!item.is_object() || !item.contains("embedding")) throw fail("item lacks 'embedding'");
        std::size_t idx = i;
        if (item.contains("index")) {
          if (!item["index"].is_number_unsigned()) throw fail("bad 'index'");
          idx = item["index"].get<std::size_t>();
        }
        if (idx >= expected || slots[idx]) throw fail("index out of range or repeated");
        slots[idx] = to_vector(item["embedding"], fail);
      }
    } else if (j.contains("embeddings") && j["embeddings"].is_array()) {
      const auto& data = j["embeddings"];
      if (data.size() != expected) throw fail("expected " + std::to_string(expected) + " embeddings");
      for (std::size_t i = 0; i < data.size(); ++i) slots[i] = to_vector(data[i], fail);
    } else {
      throw fail("no 'data' array");
    }
    std::vector<DenseEmbedding> out;
    out.reserve(expected);
    for (auto& s : slots) {
      try {
        out.emplace_back(std::move(*s), config_.model_id);
      } catch (const NonFiniteValue& e) {
        throw fail(e.what());
      }
    }
    return out;
  }

  template <typename Fail>
  std::vector<float> to_vector(const nlohmann::json& arr, const Fail& fail) const {
    if (!arr.is_array()) throw fail("embedding is not an array");
    if (arr.size() != config_.dim) {
      throw fail("embedding length " + std::to_string(arr.size()) + " != dim " +
                 std::to_string(config_.dim));
    }
    std::vector<float> v;
    v.reserve(arr.size());
    for (const auto& x : arr) {
      if (!x.is_number()) throw fail("non-numeric embedding value");
      v.push_back(x.get<float>());
    }
    return v;
  }

  ProviderConfig config_;
  std::shared_ptr<HttpTransport> transport_;
  RetryPolicy retry_;
};

/// Builds the provider named by `config`. Remote providers need a transport.
inline std::unique_ptr<EmbeddingProvider> make_provider(
    const ProviderConfig& config, std::shared_ptr<HttpTransport> transport = nullptr) {
  config.validate();
  switch (config.kind) {
    case ProviderKind::kPseudo:
      return std::make_unique<PseudoEmbedder>(config.dim, config.model_id);
    case ProviderKind::kFileCache:
      return std::make_unique<FileCacheProvider>(*config.cache_path, config.model_id, config.dim);
    case ProviderKind::kRemoteHttp:
      return std::make_unique<RemoteEmbedder>(config, std::move(transport));
  }
  throw InvalidArgument("unknown provider kind");
}

}  // namespace binaryshield
