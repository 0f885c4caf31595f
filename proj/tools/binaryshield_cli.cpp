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

// binaryshield: command-line driver.
//
// Exit codes: 0 success, 1 data or I/O error, 2 usage error.
// Settings precedence: flag > BINARYSHIELD_* environment > --config file > default.
// Every file output is written to a temporary sibling and renamed on success.
// Outputs that carry raw prompt text must have "local-only" in their name.

#include <unistd.h>

#include <cinttypes>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "binaryshield/dataset.hpp"
#include "binaryshield/embedding.hpp"
#include "binaryshield/eval.hpp"
#include "binaryshield/fingerprint.hpp"
#include "binaryshield/http_transport.hpp"
#include "binaryshield/pii.hpp"
#include "binaryshield/protocol.hpp"
#include "binaryshield/simhash.hpp"
#include "binaryshield/store.hpp"
#include "binaryshield/synthetic.hpp"
#include "json.hpp"

namespace {

namespace fs = std::filesystem;
namespace bs = binaryshield;
using json = nlohmann::json;
using ojson = nlohmann::ordered_json;

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// ---------------------------------------------------------------------------
// Files

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw bs::IoError(path, "cannot open");
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_atomic(const std::string& path, const std::string& data) {
  const std::string tmp = path + ".tmp-" + std::to_string(::getpid());
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw bs::IoError(tmp, "cannot open for writing");
    out.write(data.data(), static_cast<std::streamsize>(data.size()));
    out.flush();
    if (!out) {
      std::error_code ec;
      fs::remove(tmp, ec);
      throw bs::IoError(tmp, "write failed");
    }
  }
  std::error_code ec;
  fs::rename(tmp, path, ec);
  if (ec) {
    fs::remove(tmp, ec);
    throw bs::IoError(path, "rename failed");
  }
}

bool is_local_only(const std::string& path) {
  return fs::path(path).filename().string().find("local-only") != std::string::npos;
}

void require_local_only(const std::string& path, const char* flag) {
  if (!is_local_only(path)) {
    throw UsageError(std::string(flag) + " carries prompt text; its file name must contain \"local-only\": " +
                     path);
  }
}

void require_readable(const std::string& path) {
  if (!fs::is_regular_file(path)) throw UsageError("no such file: " + path);
}

// ---------------------------------------------------------------------------
// Layered settings

/// Options accepted by every subcommand. Unset optionals fall through to the
/// environment, then the config file, then the default.
struct CommonFlags {
  std::string config;
  std::optional<std::size_t> dim;
  std::optional<double> alpha;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> tau;
  std::optional<std::string> provider;
  std::optional<std::string> endpoint;
  std::optional<std::string> api_key_env;
  std::optional<std::string> cache;
  std::optional<std::string> model;
  std::optional<std::string> rules;
  std::optional<std::size_t> threads;
  std::optional<std::string> format;
  bool no_redact = false;
};

struct Settings {
  std::size_t dim = bs::kDefaultDim;
  double alpha = 2.0;
  std::uint64_t seed = 0;
  std::optional<std::size_t> tau;
  bs::ProviderConfig provider;
  std::optional<std::string> rules;
  std::size_t threads = 1;
  std::string format = "json";
  bool redact = true;
};

template <typename T>
T parse_value(const std::string& text, const std::string& source) {
  try {
    std::size_t used = 0;
    T v{};
    if constexpr (std::is_same_v<T, double>) {
      v = std::stod(text, &used);
    } else if constexpr (std::is_same_v<T, std::string>) {
      return text;
    } else {
      if (!text.empty() && text[0] == '-') throw std::invalid_argument("negative");
      v = static_cast<T>(std::stoull(text, &used, 0));
    }
    if (used != text.size()) throw std::invalid_argument("trailing characters");
    return v;
  } catch (const std::exception&) {
    throw UsageError("invalid value '" + text + "' from " + source);
  }
}

class Layers {
 public:
  explicit Layers(const std::string& config_path) {
    std::string path = config_path;
    if (path.empty()) {
      if (const char* env = std::getenv("BINARYSHIELD_CONFIG")) path = env;
    }
    if (path.empty()) return;
    require_readable(path);
    file_ = json::parse(read_file(path), nullptr, false);
    if (file_.is_discarded() || !file_.is_object()) throw UsageError("config file is not a JSON object: " + path);
    source_ = path;
  }

  template <typename T>
  std::optional<T> lookup(const std::optional<T>& flag, const char* env, const char* key,
                          const char* section = nullptr) const {
    if (flag) return flag;
    if (const char* v = std::getenv(env)) return parse_value<T>(v, std::string("$") + env);
    const json* node = &file_;
    if (section) {
      if (!file_.contains(section)) return std::nullopt;
      node = &file_[section];
      if (!node->is_object()) throw UsageError(source_ + ": '" + section + "' must be an object");
    }
    if (!node->is_object() || !node->contains(key)) return std::nullopt;
    const auto& v = (*node)[key];
    try {
      if constexpr (std::is_same_v<T, std::string>) return v.get<std::string>();
      else if constexpr (std::is_same_v<T, double>) return v.get<double>();
      else {
        if (!v.is_number_unsigned()) throw std::invalid_argument("not unsigned");
        return v.get<T>();
      }
    } catch (const std::exception&) {
      throw UsageError(source_ + ": bad value for '" + key + "'");
    }
  }

 private:
  json file_ = json::object();
  std::string source_;
};

Settings resolve(const CommonFlags& f) {
  const Layers l(f.config);
  Settings s;
  s.dim = l.lookup(f.dim, "BINARYSHIELD_DIM", "dim").value_or(s.dim);
  s.alpha = l.lookup(f.alpha, "BINARYSHIELD_ALPHA", "alpha").value_or(s.alpha);
  s.seed = l.lookup(f.seed, "BINARYSHIELD_SEED", "seed").value_or(s.seed);
  s.tau = l.lookup(f.tau, "BINARYSHIELD_TAU", "tau");
  s.rules = l.lookup(f.rules, "BINARYSHIELD_RULES", "rules");
  s.threads = l.lookup(f.threads, "BINARYSHIELD_THREADS", "threads").value_or(s.threads);
  s.format = l.lookup(f.format, "BINARYSHIELD_FORMAT", "format").value_or(s.format);
  s.redact = !f.no_redact;

  if (s.dim == 0) throw UsageError("dim must be positive");
  if (s.threads == 0) throw UsageError("threads must be positive");
  if (s.format != "json" && s.format != "table") throw UsageError("format must be json or table");
  try {
    (void)bs::PrivacyBudget(s.alpha);
  } catch (const bs::Error& e) {
    throw UsageError(e.what());
  }

  const std::string kind = l.lookup(f.provider, "BINARYSHIELD_PROVIDER", "kind", "provider").value_or("pseudo");
  const auto parsed = bs::parse_provider_kind(kind);
  if (!parsed) throw UsageError("unknown provider '" + kind + "' (pseudo, cache, remote)");
  s.provider.kind = *parsed;
  s.provider.dim = s.dim;
  s.provider.endpoint_url = l.lookup(f.endpoint, "BINARYSHIELD_ENDPOINT", "endpoint_url", "provider");
  s.provider.api_key_env_var =
      l.lookup(f.api_key_env, "BINARYSHIELD_API_KEY_ENV", "api_key_env_var", "provider").value_or("BINARYSHIELD_API_KEY");
  s.provider.cache_path = l.lookup(f.cache, "BINARYSHIELD_CACHE", "cache_path", "provider");
  const std::string default_model = *parsed == bs::ProviderKind::kPseudo      ? "pseudo-token-hash-v1"
                                    : *parsed == bs::ProviderKind::kFileCache ? "file-cache"
                                                                              : "remote";
  s.provider.model_id = l.lookup(f.model, "BINARYSHIELD_MODEL", "model_id", "provider").value_or(default_model);
  s.provider.max_batch = l.lookup<std::size_t>(std::nullopt, "BINARYSHIELD_MAX_BATCH", "max_batch", "provider")
                             .value_or(s.provider.max_batch);
  s.provider.request_timeout = std::chrono::milliseconds(
      l.lookup<std::size_t>(std::nullopt, "BINARYSHIELD_TIMEOUT_MS", "timeout_ms", "provider")
          .value_or(static_cast<std::size_t>(s.provider.request_timeout.count())));
  try {
    s.provider.validate();
  } catch (const bs::Error& e) {
    throw UsageError(e.what());
  }
  if (s.provider.cache_path && s.provider.kind == bs::ProviderKind::kFileCache) require_readable(*s.provider.cache_path);
  if (s.rules) require_readable(*s.rules);
  return s;
}

void add_common(CLI::App* sub, CommonFlags& f) {
  sub->add_option("--config", f.config, "JSON config file (also $BINARYSHIELD_CONFIG)");
  sub->add_option("--dim", f.dim, "Embedding dimension [768] ($BINARYSHIELD_DIM)");
  sub->add_option("--alpha", f.alpha, "Per-bit privacy budget [2.0] ($BINARYSHIELD_ALPHA)");
  sub->add_option("--seed", f.seed, "Base seed [0] ($BINARYSHIELD_SEED)");
  sub->add_option("--provider", f.provider, "Embedding provider: pseudo|cache|remote ($BINARYSHIELD_PROVIDER)");
  sub->add_option("--endpoint", f.endpoint, "Remote embeddings URL ($BINARYSHIELD_ENDPOINT)");
  sub->add_option("--api-key-env", f.api_key_env,
                  "Env var holding the bearer token [BINARYSHIELD_API_KEY] ($BINARYSHIELD_API_KEY_ENV)");
  sub->add_option("--cache", f.cache, "Embedding cache file ($BINARYSHIELD_CACHE)");
  sub->add_option("--model", f.model, "Model id ($BINARYSHIELD_MODEL)");
  sub->add_option("--rules", f.rules, "PII rule file ($BINARYSHIELD_RULES)");
  sub->add_option("--threads", f.threads, "Worker threads [1] ($BINARYSHIELD_THREADS)");
  sub->add_option("--format", f.format, "Stdout format: json|table [json] ($BINARYSHIELD_FORMAT)");
  sub->add_flag("--no-redact", f.no_redact, "Treat input text as already sanitized");
}

std::unique_ptr<bs::RuleRedactor> make_redactor(const Settings& s) {
  if (!s.rules) return std::make_unique<bs::RuleRedactor>();
  return std::make_unique<bs::RuleRedactor>(bs::RuleSet::parse(read_file(*s.rules)));
}

std::unique_ptr<bs::EmbeddingProvider> make_provider(const Settings& s) {
  std::shared_ptr<bs::HttpTransport> transport;
  if (s.provider.kind == bs::ProviderKind::kRemoteHttp) transport = std::make_shared<bs::HttplibTransport>();
  return bs::make_provider(s.provider, transport);
}

// ---------------------------------------------------------------------------
// Output

/// Prints a flat summary object as one JSON line or an aligned two-column table.
void emit(const Settings& s, const ojson& summary) {
  if (s.format == "json") {
    std::cout << summary.dump() << "\n";
    return;
  }
  std::size_t width = 0;
  for (const auto& [k, v] : summary.items()) width = std::max(width, k.size());
  for (const auto& [k, v] : summary.items()) {
    std::cout << k << std::string(width - k.size() + 2, ' ') << (v.is_string() ? v.get<std::string>() : v.dump())
              << "\n";
  }
}

// ---------------------------------------------------------------------------
// Prompt input

struct PromptLine {
  std::size_t line = 0;
  std::string id;
  std::string text;
  bs::Metadata metadata;
};

/// JSONL with "id" and "text" (extra keys ignored, so corpus files work) and
/// an optional string-valued "metadata" object.
std::vector<PromptLine> read_prompts(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw bs::IoError(path, "cannot open");
  std::vector<PromptLine> out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (bs::trim(line).empty()) continue;
    const auto obj = json::parse(line, nullptr, false);
    if (obj.is_discarded() || !obj.is_object()) throw bs::SchemaError(lineno, "expected a JSON object");
    PromptLine p;
    p.line = lineno;
    if (!obj.contains("id") || !obj["id"].is_string()) throw bs::SchemaError(lineno, "missing string 'id'");
    if (!obj.contains("text") || !obj["text"].is_string()) throw bs::SchemaError(lineno, "missing string 'text'");
    p.id = obj["id"].get<std::string>();
    p.text = obj["text"].get<std::string>();
    if (obj.contains("metadata")) {
      if (!obj["metadata"].is_object()) throw bs::SchemaError(lineno, "'metadata' must be an object");
      for (const auto& [k, v] : obj["metadata"].items()) {
        if (!v.is_string()) throw bs::SchemaError(lineno, "metadata values must be strings");
        p.metadata[k] = v.get<std::string>();
      }
    }
    out.push_back(std::move(p));
  }
  return out;
}

struct Failure {
  std::size_t line;
  std::string id;
  std::string what;
};

void report_failures(const std::vector<Failure>& failures) {
  for (const auto& f : failures) std::cerr << "line " << f.line << " (" << f.id << "): " << f.what << "\n";
}

/// Sanitizes every prompt and embeds the non-empty ones in one batch. Slots
/// of failed records stay empty and are listed in `failures`.
std::vector<std::optional<bs::DenseEmbedding>> embed_prompts(const std::vector<PromptLine>& prompts,
                                                             const bs::Redactor* redactor,
                                                             const bs::EmbeddingProvider& provider,
                                                             std::size_t max_batch,
                                                             std::vector<bs::RedactedPrompt>* texts_out,
                                                             std::vector<Failure>& failures) {
  std::vector<std::optional<bs::DenseEmbedding>> out(prompts.size());
  std::vector<bs::RedactedPrompt> texts;
  std::vector<std::size_t> slot;
  for (std::size_t i = 0; i < prompts.size(); ++i) {
    auto r = redactor ? redactor->redact(prompts[i].text) : bs::RedactedPrompt::assume_redacted(prompts[i].text);
    if (bs::trim(r.text()).empty()) {
      failures.push_back({prompts[i].line, prompts[i].id, "empty text"});
      continue;
    }
    texts.push_back(std::move(r));
    slot.push_back(i);
  }
  if (texts_out) *texts_out = texts;
  if (texts.empty()) return out;
  try {
    const auto emb = provider.embed_batch(texts);
    for (std::size_t j = 0; j < emb.size(); ++j) out[slot[j]] = emb[j];
  } catch (const bs::TransportError& e) {
    const std::size_t lo = e.chunk() * max_batch, hi = std::min(texts.size(), lo + max_batch);
    for (std::size_t j = lo; j < hi; ++j) failures.push_back({prompts[slot[j]].line, prompts[slot[j]].id, e.what()});
    if (lo >= texts.size()) failures.push_back({0, "-", e.what()});
  } catch (const bs::MissingEmbedding& e) {
    failures.push_back({0, "-", e.what()});
  }
  return out;
}

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (!bs::trim(item).empty()) out.emplace_back(bs::trim(item));
  }
  return out;
}

template <typename T>
std::vector<T> parse_list(const std::string& s, const char* flag) {
  std::vector<T> out;
  for (const auto& item : split_list(s)) out.push_back(parse_value<T>(item, flag));
  if (out.empty()) throw UsageError(std::string(flag) + " needs at least one value");
  return out;
}

// ---------------------------------------------------------------------------
// Commands

int cmd_fingerprint(const Settings& s, const std::string& input, const std::string& out, const std::string& service,
                    std::int64_t issued_at) {
  const auto prompts = read_prompts(input);
  const auto redactor = make_redactor(s);
  const auto provider = make_provider(s);
  const bs::PrivacyBudget budget(s.alpha);
  std::vector<Failure> failures;
  const auto emb =
      embed_prompts(prompts, s.redact ? redactor.get() : nullptr, *provider, s.provider.max_batch, nullptr, failures);
  std::string frames;
  for (std::size_t i = 0; i < prompts.size(); ++i) {
    if (!emb[i]) continue;
    try {
      const auto priv = bs::randomize(bs::quantize(*emb[i]), budget, bs::derive_seed(s.seed, i));
      bs::CompositeFingerprint f;
      f.origin_service = service;
      f.fingerprint_id = prompts[i].id;
      f.dim = priv.dim();
      f.alpha = s.alpha;
      f.bits.assign(priv.bytes().begin(), priv.bytes().end());
      f.metadata = prompts[i].metadata;
      f.issued_at = issued_at;
      frames += bs::encode_frame(f);
    } catch (const bs::Error& e) {
      failures.push_back({prompts[i].line, prompts[i].id, e.what()});
    }
  }
  if (!failures.empty()) {
    report_failures(failures);
    std::cerr << failures.size() << " record(s) failed; " << out << " not written\n";
    return 1;
  }
  write_atomic(out, frames);
  emit(s, ojson{{"command", "fingerprint"}, {"records", prompts.size()}, {"alpha", s.alpha}, {"dim", s.dim},
                {"out", out}});
  return 0;
}

int cmd_redact(const Settings& s, const std::string& input, const std::string& out, bool with_original,
               const std::string& histogram) {
  require_local_only(out, "--out");
  const auto prompts = read_prompts(input);
  const auto redactor = make_redactor(s);
  bs::EntityCounts totals;
  std::string lines;
  for (const auto& p : prompts) {
    const auto r = redactor->redact(p.text);
    totals += r.entity_counts();
    ojson j;
    j["id"] = p.id;
    j["text"] = r.text();
    j["entity_counts"] = r.entity_counts().nonzero();
    j["original_length"] = r.original_length();
    if (with_original) j["original"] = p.text;
    lines += j.dump() + "\n";
  }
  write_atomic(out, lines);
  if (!histogram.empty()) {
    std::string csv = "entity_type,count\n";
    for (std::size_t i = 0; i < bs::kEntityTypeCount; ++i) {
      csv += std::string(bs::kEntityNames[i]) + "," + std::to_string(totals[static_cast<bs::EntityType>(i)]) + "\n";
    }
    write_atomic(histogram, csv);
  }
  ojson summary{{"command", "redact"}, {"records", prompts.size()}, {"out", out}};
  for (const auto& [name, n] : totals.nonzero()) summary[name] = n;
  emit(s, summary);
  return 0;
}

int cmd_simhash(const Settings& s, const std::string& input, const std::string& out) {
  const auto prompts = read_prompts(input);
  const auto redactor = make_redactor(s);
  std::string lines;
  for (const auto& p : prompts) {
    const auto text = s.redact ? redactor->redact(p.text).text() : p.text;
    const auto h = bs::simhash(text);
    char hex[17];
    std::snprintf(hex, sizeof hex, "%016" PRIx64, h.bits);
    lines += ojson{{"id", p.id}, {"simhash", hex}, {"feature_count", h.feature_count}}.dump() + "\n";
  }
  write_atomic(out, lines);
  emit(s, ojson{{"command", "simhash"}, {"records", prompts.size()}, {"out", out}});
  return 0;
}

int cmd_embed_cache_build(Settings s, const std::string& input, const std::string& out) {
  if (s.provider.kind == bs::ProviderKind::kFileCache) throw UsageError("embed-cache build needs a pseudo or remote provider");
  const auto prompts = read_prompts(input);
  const auto redactor = make_redactor(s);
  const auto provider = make_provider(s);
  std::vector<bs::RedactedPrompt> texts;
  for (const auto& p : prompts) {
    auto r = s.redact ? redactor->redact(p.text) : bs::RedactedPrompt::assume_redacted(p.text);
    if (bs::trim(r.text()).empty()) {
      std::cerr << "line " << p.line << " (" << p.id << "): empty text\n";
      return 1;
    }
    texts.push_back(std::move(r));
  }
  // Appends happen on a private copy so a failed run leaves `out` untouched.
  const std::string tmp = out + ".tmp-" + std::to_string(::getpid());
  std::error_code ec;
  if (fs::exists(out)) fs::copy_file(out, tmp, fs::copy_options::overwrite_existing);
  std::size_t appended = 0;
  try {
    appended = texts.empty() ? 0 : bs::build_cache(texts, *provider, tmp);
    if (!fs::exists(tmp)) bs::append_cache_records(tmp, static_cast<std::uint32_t>(provider->dim()), {});
  } catch (...) {
    fs::remove(tmp, ec);
    throw;
  }
  fs::rename(tmp, out);
  const bs::FileCacheProvider check(out);
  emit(s, ojson{{"command", "embed-cache build"}, {"records", prompts.size()}, {"appended", appended},
                {"cache_size", check.size()}, {"dim", check.dim()}, {"out", out}});
  return 0;
}

std::vector<std::pair<std::size_t, bs::CompositeFingerprint>> read_frames(const std::string& path,
                                                                         std::vector<Failure>& failures) {
  std::ifstream in(path);
  if (!in) throw bs::IoError(path, "cannot open");
  std::vector<std::pair<std::size_t, bs::CompositeFingerprint>> out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (bs::trim(line).empty()) continue;
    try {
      out.emplace_back(lineno, bs::decode_frame(line));
    } catch (const bs::DecodeError& e) {
      failures.push_back({lineno, std::string(bs::decode_error_name(e.kind())), e.what()});
    }
  }
  return out;
}

int cmd_store_build(const Settings& s, const std::string& input, const std::string& out) {
  std::vector<Failure> failures;
  const auto frames = read_frames(input, failures);
  if (!failures.empty()) {
    report_failures(failures);
    return 1;
  }
  bs::FingerprintStore store;
  std::vector<bs::StoredFingerprint> batch;
  for (const auto& [line, f] : frames) {
    bs::StoredFingerprint fp;
    fp.id = f.fingerprint_id;
    fp.bits = f.bits;
    fp.dim = f.dim;
    fp.alpha = f.alpha;
    fp.metadata = f.metadata;
    batch.push_back(std::move(fp));
  }
  store.insert_batch(std::move(batch));
  write_atomic(out, store.snapshot_bytes());
  emit(s, ojson{{"command", "store build"}, {"entries", store.size()},
                {"dim", store.size() ? store.dim() : 0}, {"out", out}});
  return 0;
}

int cmd_search(const Settings& s, const std::string& store_path, const std::string& query_path,
               std::optional<std::size_t> topk, std::size_t min_overlap) {
  if (topk && s.tau) throw UsageError("give either --tau or --topk, not both");
  if (!topk && !s.tau) throw UsageError("one of --tau or --topk is required");
  if (topk && *topk == 0) throw UsageError("--topk must be >= 1");
  auto store = bs::FingerprintStore::load_snapshot(store_path);
  store.set_search_threads(s.threads);
  std::vector<Failure> failures;
  const auto queries = read_frames(query_path, failures);
  if (!failures.empty()) {
    report_failures(failures);
    return 1;
  }
  for (const auto& [line, q] : queries) {
    const bs::MetadataFilter filter{&q.metadata, min_overlap};
    const auto matches = topk ? store.search_topk(q.bits, *topk, filter) : store.search_threshold(q.bits, *s.tau, filter);
    if (s.format == "json") {
      ojson j;
      j["query"] = q.fingerprint_id;
      if (topk) j["topk"] = *topk;
      else j["tau"] = *s.tau;
      j["matches"] = ojson::array();
      for (const auto& m : matches) {
        j["matches"].push_back({{"id", m.id}, {"distance", m.distance}, {"metadata_overlap", m.metadata_overlap}});
      }
      std::cout << j.dump() << "\n";
    } else {
      std::cout << "query " << q.fingerprint_id << ": " << matches.size() << " match(es)\n";
      for (const auto& m : matches) {
        std::cout << "  " << m.id << "  distance=" << m.distance << "  metadata_overlap=" << m.metadata_overlap << "\n";
      }
    }
  }
  return 0;
}

int cmd_simulate(const Settings& s, const std::string& scenario_path, const std::string& out) {
  const auto scenario = bs::load_scenario(scenario_path);
  std::unique_ptr<bs::RuleRedactor> redactor;
  if (s.rules) redactor = make_redactor(s);
  const auto report = bs::simulate_campaign(scenario, redactor.get());
  if (!out.empty()) write_atomic(out, bs::to_json(report).dump(2) + "\n");
  if (s.format == "json") std::cout << bs::to_json(report).dump() << "\n";
  else std::cout << bs::format_table(report);
  return 0;
}

std::vector<bs::PairRecord> load_pairs_checked(const std::string& path) {
  const auto loaded = bs::load_pairs(path);
  if (loaded.report.dropped_empty || loaded.report.dropped_duplicate) {
    std::cerr << path << ": dropped " << loaded.report.dropped_empty << " empty and "
              << loaded.report.dropped_duplicate << " duplicate pair(s)\n";
  }
  return loaded.records;
}

int cmd_pr_sweep(const Settings& s, const std::string& pairs_path, const std::string& method,
                 std::optional<std::size_t> tau_min, std::optional<std::size_t> tau_max, const std::string& out) {
  bs::Method m;
  if (method == "binaryshield") m = bs::Method::binaryshield(s.alpha, s.seed);
  else if (method == "simhash") m = bs::Method::simhash();
  else if (method == "no-noise") m = bs::Method::no_noise();
  else throw UsageError("--method must be binaryshield, simhash or no-noise");
  const auto pairs = load_pairs_checked(pairs_path);
  const auto redactor = make_redactor(s);
  const auto provider = make_provider(s);
  const auto prepared = bs::prepare_pairs(pairs, *provider, s.redact ? redactor.get() : nullptr, s.threads);
  const std::size_t dim = method == "simhash" ? 64 : prepared.dim;
  const auto sweep = bs::pr_sweep(prepared, m, std::pair{tau_min.value_or(0), tau_max.value_or(dim)});
  write_atomic(out, sweep.to_csv());
  const auto& o = sweep.optimum;
  emit(s, ojson{{"command", "eval pr-sweep"}, {"method", method}, {"pairs", pairs.size()},
                {"optimal_tau", o.tau}, {"f1", o.f1}, {"precision", o.precision}, {"recall", o.recall},
                {"accuracy", o.accuracy}, {"out", out}});
  return 0;
}

int cmd_alpha_sweep(const Settings& s, const std::string& pairs_path, const std::string& alphas_text,
                    std::size_t seeds, const std::string& out) {
  const auto alphas = parse_list<double>(alphas_text, "--alphas");
  for (const double a : alphas) {
    if (!(a > 0) || !std::isfinite(a)) throw UsageError("--alphas values must be positive and finite");
  }
  if (seeds == 0) throw UsageError("--seeds-per-alpha must be >= 1");
  const auto pairs = load_pairs_checked(pairs_path);
  const auto redactor = make_redactor(s);
  const auto provider = make_provider(s);
  const auto prepared = bs::prepare_pairs(pairs, *provider, s.redact ? redactor.get() : nullptr, s.threads);
  const auto sweep = bs::alpha_sweep(prepared, alphas, seeds, s.seed, s.threads);
  write_atomic(out, sweep.to_csv());
  std::vector<double> f1;
  for (const auto& r : sweep.rows) f1.push_back(r.mean_f1);
  ojson summary{{"command", "eval alpha-sweep"}, {"pairs", pairs.size()}, {"cells", alphas.size() * seeds}};
  if (alphas.size() >= 2) summary["spearman_alpha_f1"] = bs::spearman(alphas, f1);
  const auto positives = static_cast<std::size_t>(std::count(prepared.labels.begin(), prepared.labels.end(), 1));
  summary["chance_f1"] = bs::chance_f1(positives, prepared.labels.size() - positives);
  summary["out"] = out;
  emit(s, summary);
  return 0;
}

int cmd_calibrate(const Settings& s, std::size_t prompts, const std::string& alphas_text, std::size_t baseline,
                  const std::string& out) {
  const auto alphas = parse_list<double>(alphas_text, "--alphas");
  if (prompts < 100) throw UsageError("--prompts must be >= 100");
  for (const double a : alphas) {
    if (!(a > 0) || !std::isfinite(a)) throw UsageError("--alphas values must be positive and finite");
  }
  const auto cal = bs::calibrate_noise(prompts, alphas, s.dim, s.seed, baseline);
  write_atomic(out, cal.to_csv());
  double max_z = 0;
  for (const auto& r : cal.rows) max_z = std::max(max_z, std::abs(r.z));
  emit(s, ojson{{"command", "eval calibrate-noise"}, {"prompts", prompts}, {"alphas", alphas.size()},
                {"max_abs_z", max_z}, {"baseline_mean", cal.baseline_mean}, {"baseline_std", cal.baseline_std},
                {"out", out}});
  return 0;
}

int cmd_accuracy(const Settings& s, const std::string& corpus_path, const std::string& queries_path,
                 const std::string& method, const std::string& k_text, bool no_noise, const std::string& out) {
  bs::SearchMethod m;
  if (method == "binaryshield") m = bs::SearchMethod::kBinaryShield;
  else if (method == "simhash") m = bs::SearchMethod::kSimHash;
  else if (method == "dense") m = bs::SearchMethod::kDense;
  else throw UsageError("--method must be binaryshield, simhash or dense");
  const auto ks = parse_list<std::size_t>(k_text, "--k");
  for (const auto k : ks) {
    if (k == 0) throw UsageError("--k values must be >= 1");
  }
  const auto corpus = bs::load_corpus(corpus_path).records;
  const auto queries = bs::load_corpus(queries_path).records;
  const auto redactor = make_redactor(s);
  const auto provider = make_provider(s);
  const bs::Redactor* r = s.redact ? redactor.get() : nullptr;
  const bool dense = m == bs::SearchMethod::kDense;
  const auto pc = bs::prepare_records(corpus, *provider, r, dense, s.threads);
  const auto pq = bs::prepare_records(queries, *provider, r, dense, s.threads);
  const auto result =
      bs::accuracy_at_k(pc, pq, m, ks, no_noise ? std::nullopt : std::optional<double>(s.alpha), s.seed, s.threads);
  write_atomic(out, result.to_csv());
  ojson summary{{"command", "eval accuracy-at-k"}, {"method", method}, {"corpus_size", corpus.size()},
                {"queries", queries.size()}};
  for (const auto& row : result.rows) summary["accuracy@" + std::to_string(row.k)] = row.accuracy;
  summary["out"] = out;
  emit(s, summary);
  return 0;
}

int cmd_storage(const Settings& s, std::size_t count, std::size_t float_bytes, bool measure, const std::string& out) {
  if (count == 0) throw UsageError("--count must be >= 1");
  if (float_bytes != 4 && float_bytes != 8) throw UsageError("--float-bytes must be 4 or 8");
  const auto r = bs::storage_report(count, s.dim, float_bytes, measure, s.seed);
  if (!out.empty()) write_atomic(out, r.to_csv());
  ojson summary{{"command", "eval storage"}, {"count", count}, {"dim", s.dim}, {"float_bytes", float_bytes},
                {"dense_bytes", r.dense_bytes}, {"binary_bytes", r.binary_bytes}, {"ratio", r.ratio}};
  if (r.snapshot_bytes) summary["snapshot_bytes"] = *r.snapshot_bytes;
  emit(s, summary);
  return 0;
}

/// Random unit-norm Gaussian corpus: timing depends only on sizes, so no
/// embedding work is needed. Bits are the sign quantization of the vectors.
struct BenchData {
  bs::FingerprintStore store;
  std::vector<std::vector<std::uint8_t>> binary_queries;
  std::vector<std::vector<float>> dense_queries;
};

std::vector<float> gaussian_unit(std::size_t dim, std::uint64_t seed) {
  bs::CounterRng rng(seed);
  std::normal_distribution<float> dist(0.0f, 1.0f);
  std::vector<float> v(dim);
  double norm = 0;
  for (auto& x : v) x = dist(rng), norm += double(x) * x;
  const auto inv = static_cast<float>(1.0 / std::sqrt(norm));
  for (auto& x : v) x *= inv;
  return v;
}

BenchData make_bench_data(std::size_t corpus_size, std::size_t queries, std::size_t dim, std::uint64_t seed,
                          bool dense) {
  BenchData d;
  std::vector<bs::StoredFingerprint> batch(corpus_size);
  for (std::size_t i = 0; i < corpus_size; ++i) {
    auto v = gaussian_unit(dim, bs::derive_seed(seed, i));
    const auto bits = bs::quantize(bs::DenseEmbedding(v, "bench-gaussian"));
    batch[i].id = std::to_string(i);
    batch[i].dim = dim;
    batch[i].bits.assign(bits.bytes().begin(), bits.bytes().end());
    if (dense) batch[i].dense = std::move(v);
  }
  d.store.insert_batch(std::move(batch));
  for (std::size_t j = 0; j < queries; ++j) {
    auto v = gaussian_unit(dim, bs::derive_seed(seed ^ ~std::uint64_t{0}, j));
    const auto bits = bs::quantize(bs::DenseEmbedding(v, "bench-gaussian"));
    d.binary_queries.emplace_back(bits.bytes().begin(), bits.bytes().end());
    d.dense_queries.push_back(std::move(v));
  }
  return d;
}

int cmd_bench_scan(const Settings& s, std::size_t corpus_size, std::size_t queries, const std::string& mode,
                   std::size_t k, const std::string& out) {
  if (mode != "packed" && mode != "dense" && mode != "both") throw UsageError("--mode must be packed, dense or both");
  if (corpus_size == 0) throw UsageError("--corpus-size must be >= 1");
  if (k == 0) throw UsageError("--k must be >= 1");
  auto data = make_bench_data(corpus_size, queries, s.dim, s.seed, mode != "packed");
  data.store.set_search_threads(s.threads);
  ojson report{{"command", "bench scan"}, {"corpus_size", corpus_size}, {"queries", queries}, {"dim", s.dim},
               {"k", k}, {"threads", s.threads}};
  std::optional<bs::TimingReport> packed, dense;
  if (mode != "dense") {
    packed = bs::scan_benchmark(data.store, bs::ScanMode::kPackedHamming, data.binary_queries, data.dense_queries, k);
    report["packed_seconds"] = packed->total_seconds;
  }
  if (mode != "packed") {
    dense = bs::scan_benchmark(data.store, bs::ScanMode::kDenseCosine, data.binary_queries, data.dense_queries, k);
    report["dense_seconds"] = dense->total_seconds;
  }
  if (packed && dense && packed->total_seconds > 0) report["speedup"] = dense->total_seconds / packed->total_seconds;
  if (!out.empty()) {
    ojson full = report;
    if (packed) full["packed"] = packed->to_json();
    if (dense) full["dense"] = dense->to_json();
    write_atomic(out, full.dump(2) + "\n");
  }
  report["out"] = out;
  emit(s, report);
  return 0;
}

int cmd_gen_pairs(const Settings& s, const std::string& out, std::size_t attack, std::size_t benign,
                  std::size_t tokens, const std::string& variants, double paraphrase_fraction) {
  require_local_only(out, "--out");
  bs::synthetic::PairCorpusConfig cfg;
  cfg.attack_pairs = attack;
  cfg.benign_pairs = benign;
  cfg.tokens_per_prompt = tokens;
  cfg.paraphrase_fraction = paraphrase_fraction;
  cfg.seed = s.seed;
  if (!variants.empty()) {
    cfg.variants.clear();
    for (const auto& v : split_list(variants)) {
      const auto parsed = bs::parse_variant(v);
      if (!parsed || *parsed == bs::VariantType::kBenignPair) throw UsageError("unknown attack variant '" + v + "'");
      cfg.variants.push_back(*parsed);
    }
  }
  if (!(paraphrase_fraction >= 0 && paraphrase_fraction <= 1)) throw UsageError("--paraphrase-fraction must be in [0, 1]");
  const auto pairs = bs::synthetic::generate_pairs(cfg);
  std::string lines;
  for (const auto& p : pairs) lines += bs::to_json(p).dump() + "\n";
  write_atomic(out, lines);
  emit(s, ojson{{"command", "gen pairs"}, {"pairs", pairs.size()}, {"out", out}});
  return 0;
}

int cmd_gen_corpus(const Settings& s, const std::string& corpus_out, const std::string& queries_out,
                   const bs::synthetic::HybridCorpusConfig& base) {
  require_local_only(corpus_out, "--out-corpus");
  require_local_only(queries_out, "--out-queries");
  auto cfg = base;
  cfg.seed = s.seed;
  if (!(cfg.substitution_fraction >= 0 && cfg.substitution_fraction <= 1)) {
    throw UsageError("--substitution-fraction must be in [0, 1]");
  }
  const auto h = bs::synthetic::generate_hybrid_corpus(cfg);
  std::string c, q;
  for (const auto& r : h.corpus) c += bs::to_json(r).dump() + "\n";
  for (const auto& r : h.queries) q += bs::to_json(r).dump() + "\n";
  write_atomic(corpus_out, c);
  write_atomic(queries_out, q);
  emit(s, ojson{{"command", "gen corpus"}, {"corpus", h.corpus.size()}, {"queries", h.queries.size()},
                {"out_corpus", corpus_out}, {"out_queries", queries_out}});
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"binaryshield: privacy-preserving prompt fingerprints for cross-boundary threat intelligence"};
  app.require_subcommand(1);
  app.set_version_flag("--version", "binaryshield 1.0.0");
  CommonFlags common;
  std::function<int(const Settings&)> action;

  // fingerprint
  std::string input, out, service = "local";
  std::int64_t issued_at = 0;
  {
    auto* c = app.add_subcommand("fingerprint", "Redact, embed, quantize and randomize prompts into exchange frames");
    add_common(c, common);
    c->add_option("--input", input, "Prompts JSONL ({\"id\", \"text\", optional \"metadata\"})")->required();
    c->add_option("--out", out, "Frames JSONL")->required();
    c->add_option("--service", service, "origin_service written into every frame")->capture_default_str();
    c->add_option("--issued-at", issued_at, "issued_at written into every frame (unix seconds)")->capture_default_str();
    c->callback([&] { action = [&](const Settings& s) { return cmd_fingerprint(s, input, out, service, issued_at); }; });
  }
  // redact
  bool with_original = false;
  std::string histogram;
  {
    auto* c = app.add_subcommand("redact", "Replace PII spans with typed placeholders");
    add_common(c, common);
    c->add_option("--input", input, "Prompts JSONL")->required();
    c->add_option("--out", out, "Redacted JSONL (id, text, entity_counts, original_length); name must contain \"local-only\"")
        ->required();
    c->add_flag("--with-original", with_original, "Also copy the raw text");
    c->add_option("--histogram", histogram, "Entity histogram CSV");
    c->callback([&] { action = [&](const Settings& s) { return cmd_redact(s, input, out, with_original, histogram); }; });
  }
  // simhash
  {
    auto* c = app.add_subcommand("simhash", "64-bit SimHash fingerprints (baseline)");
    add_common(c, common);
    c->add_option("--input", input, "Prompts JSONL")->required();
    c->add_option("--out", out, "JSONL (id, simhash hex, feature_count)")->required();
    c->callback([&] { action = [&](const Settings& s) { return cmd_simhash(s, input, out); }; });
  }
  // embed-cache build
  {
    auto* c = app.add_subcommand("embed-cache", "Embedding cache files");
    c->require_subcommand(1);
    auto* b = c->add_subcommand("build", "Embed redacted prompts and append new keys to a cache file");
    add_common(b, common);
    b->add_option("--input", input, "Prompts JSONL")->required();
    b->add_option("--out", out, "Cache file (.bsemb)")->required();
    b->callback([&] { action = [&](const Settings& s) { return cmd_embed_cache_build(s, input, out); }; });
  }
  // store build
  {
    auto* c = app.add_subcommand("store", "Fingerprint store snapshots");
    c->require_subcommand(1);
    auto* b = c->add_subcommand("build", "Build a snapshot from frames");
    add_common(b, common);
    b->add_option("--input", input, "Frames JSONL")->required();
    b->add_option("--out", out, "Snapshot file (.bsfp)")->required();
    b->callback([&] { action = [&](const Settings& s) { return cmd_store_build(s, input, out); }; });
  }
  // search
  std::string store_path, query_path;
  std::optional<std::size_t> topk;
  std::size_t min_overlap = 0;
  {
    auto* c = app.add_subcommand("search", "Threshold or top-k Hamming search");
    add_common(c, common);
    c->add_option("--store", store_path, "Snapshot file")->required();
    c->add_option("--query", query_path, "Frame file (one or more frames, one per line)")->required();
    c->add_option("--tau", common.tau, "Match threshold ($BINARYSHIELD_TAU)");
    c->add_option("--topk", topk, "Return the k nearest entries");
    c->add_option("--min-overlap", min_overlap, "Require this many equal metadata pairs")->capture_default_str();
    c->callback([&] {
      action = [&](const Settings& s) { return cmd_search(s, store_path, query_path, topk, min_overlap); };
    });
  }
  // simulate
  std::string scenario;
  {
    auto* c = app.add_subcommand("simulate", "Run a multi-service correlation scenario");
    add_common(c, common);
    c->add_option("--scenario", scenario, "Scenario JSON")->required();
    c->add_option("--out", out, "Report JSON");
    c->callback([&] { action = [&](const Settings& s) { return cmd_simulate(s, scenario, out); }; });
  }
  // eval
  std::string pairs_path, method = "binaryshield", alphas = "0.25,0.5,0.75,1,1.25,1.5,1.75,2,2.25,2.5,2.75,3";
  std::optional<std::size_t> tau_min, tau_max;
  std::size_t seeds_per_alpha = 5, prompts = 500, baseline = 1000, count = 100000, float_bytes = 4;
  std::string corpus_path, queries_path, k_values = "1,3,5";
  bool no_noise = false, measure = false;
  {
    auto* e = app.add_subcommand("eval", "Evaluation experiments (CSV outputs)");
    e->require_subcommand(1);
    auto* pr = e->add_subcommand("pr-sweep", "Precision/recall/F1 over integer thresholds");
    add_common(pr, common);
    pr->add_option("--pairs", pairs_path, "PairRecord JSONL")->required();
    pr->add_option("--method", method, "binaryshield|simhash|no-noise")->capture_default_str();
    pr->add_option("--tau-min", tau_min, "Sweep start [0]");
    pr->add_option("--tau-max", tau_max, "Sweep end [dim]");
    pr->add_option("--out", out, "CSV")->required();
    pr->callback([&] {
      action = [&](const Settings& s) { return cmd_pr_sweep(s, pairs_path, method, tau_min, tau_max, out); };
    });

    auto* as = e->add_subcommand("alpha-sweep", "Optimal F1 per privacy budget, averaged over seeds");
    add_common(as, common);
    as->add_option("--pairs", pairs_path, "PairRecord JSONL")->required();
    as->add_option("--alphas", alphas, "Comma-separated budgets")->capture_default_str();
    as->add_option("--seeds-per-alpha", seeds_per_alpha, "Noise seeds per budget")->capture_default_str();
    as->add_option("--out", out, "CSV")->required();
    as->callback([&] {
      action = [&](const Settings& s) { return cmd_alpha_sweep(s, pairs_path, alphas, seeds_per_alpha, out); };
    });

    auto* cn = e->add_subcommand("calibrate-noise", "Empirical vs expected self-Hamming distortion");
    add_common(cn, common);
    cn->add_option("--prompts", prompts, "Synthetic prompts per budget")->capture_default_str();
    cn->add_option("--alphas", alphas, "Comma-separated budgets")->capture_default_str();
    cn->add_option("--baseline-pairs", baseline, "Uniform random pairs for the baseline")->capture_default_str();
    cn->add_option("--out", out, "CSV")->required();
    cn->callback([&] { action = [&](const Settings& s) { return cmd_calibrate(s, prompts, alphas, baseline, out); }; });

    auto* ak = e->add_subcommand("accuracy-at-k", "Top-k retrieval of attack variants from a corpus");
    add_common(ak, common);
    ak->add_option("--corpus", corpus_path, "CorpusRecord JSONL")->required();
    ak->add_option("--queries", queries_path, "CorpusRecord JSONL; every query needs an attack_group")->required();
    ak->add_option("--method", method, "binaryshield|simhash|dense")->capture_default_str();
    ak->add_option("--k", k_values, "Comma-separated k values")->capture_default_str();
    ak->add_flag("--no-noise", no_noise, "Skip randomized response (binaryshield method)");
    ak->add_option("--out", out, "CSV")->required();
    ak->callback([&] {
      action = [&](const Settings& s) {
        return cmd_accuracy(s, corpus_path, queries_path, method, k_values, no_noise, out);
      };
    });

    auto* st = e->add_subcommand("storage", "Dense vs packed payload sizes");
    add_common(st, common);
    st->add_option("--count", count, "Number of fingerprints")->capture_default_str();
    st->add_option("--float-bytes", float_bytes, "4 (float32) or 8 (float64)")->capture_default_str();
    st->add_flag("--measure", measure, "Also build a store and report its snapshot size");
    st->add_option("--out", out, "CSV");
    st->callback([&] { action = [&](const Settings& s) { return cmd_storage(s, count, float_bytes, measure, out); }; });
  }
  // bench
  std::size_t corpus_size = 100000, bench_queries = 968, k = 5;
  std::string mode = "both";
  {
    auto* b = app.add_subcommand("bench", "Benchmarks");
    b->require_subcommand(1);
    auto* sc = b->add_subcommand("scan", "Packed Hamming vs dense cosine brute-force top-k");
    add_common(sc, common);
    sc->add_option("--corpus-size", corpus_size, "Stored entries")->capture_default_str();
    sc->add_option("--queries", bench_queries, "Query count")->capture_default_str();
    sc->add_option("--mode", mode, "packed|dense|both")->capture_default_str();
    sc->add_option("--k", k, "Top-k")->capture_default_str();
    sc->add_option("--out", out, "Timing JSON");
    sc->callback([&] {
      action = [&](const Settings& s) { return cmd_bench_scan(s, corpus_size, bench_queries, mode, k, out); };
    });
  }
  // gen
  std::size_t attack = 500, benign = 500, tokens = 40;
  std::string variants;
  double paraphrase_fraction = 0.6;
  std::string corpus_out, queries_out;
  bs::synthetic::HybridCorpusConfig hybrid;
  {
    auto* g = app.add_subcommand("gen", "Seeded synthetic datasets (raw text: names must contain local-only)");
    g->require_subcommand(1);
    auto* gp = g->add_subcommand("pairs", "Attack-variant and benign prompt pairs");
    add_common(gp, common);
    gp->add_option("--out", out, "PairRecord JSONL")->required();
    gp->add_option("--attack-pairs", attack, "Attack pairs")->capture_default_str();
    gp->add_option("--benign-pairs", benign, "Benign pairs")->capture_default_str();
    gp->add_option("--tokens", tokens, "Tokens per prompt")->capture_default_str();
    gp->add_option("--variants", variants, "Comma-separated variant types [V1,V3,V5,V10,V20,PARAPHRASE]");
    gp->add_option("--paraphrase-fraction", paraphrase_fraction, "Tokens replaced for PARAPHRASE")
        ->capture_default_str();
    gp->callback([&] {
      action = [&](const Settings& s) {
        return cmd_gen_pairs(s, out, attack, benign, tokens, variants, paraphrase_fraction);
      };
    });

    auto* gc = g->add_subcommand("corpus", "Hybrid corpus with held-out attack-variant queries");
    add_common(gc, common);
    gc->add_option("--out-corpus", corpus_out, "CorpusRecord JSONL")->required();
    gc->add_option("--out-queries", queries_out, "CorpusRecord JSONL")->required();
    gc->add_option("--benign", hybrid.benign_records, "Benign records")->capture_default_str();
    gc->add_option("--attack-groups", hybrid.attack_groups, "Distinct attacks")->capture_default_str();
    gc->add_option("--variants-per-group", hybrid.variants_per_group, "Stored variants per attack")
        ->capture_default_str();
    gc->add_option("--queries-per-group", hybrid.queries_per_group, "Held-out queries per attack")
        ->capture_default_str();
    gc->add_option("--tokens", hybrid.tokens_per_prompt, "Tokens per prompt")->capture_default_str();
    gc->add_option("--substitution-fraction", hybrid.substitution_fraction, "Tokens replaced per variant")
        ->capture_default_str();
    gc->callback([&] {
      action = [&](const Settings& s) { return cmd_gen_corpus(s, corpus_out, queries_out, hybrid); };
    });
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::Success& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }
  try {
    const Settings settings = resolve(common);
    return action(settings);
  } catch (const UsageError& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
