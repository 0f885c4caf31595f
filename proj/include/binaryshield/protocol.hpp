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

// Cross-service correlation: composite fingerprints, the newline-delimited
// exchange frame, count-only broadcast replies, and an in-process campaign
// simulator.
//
// Frame: one line of JSON with exactly these keys, in this order, then '\n':
//
//   {"version":1,"origin_service":"S2","fingerprint_id":"S2-000001","dim":768,
//    "alpha":2.0,"bits_base64":"...","metadata":{"k":"v"},"issued_at":1700000000}
//
// bits_base64 is standard padded base64 of the LSB-first packed bits.
//
// Nothing in this header serializes prompt text. Peers only ever see frames,
// and the origin only ever sees match counts.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "binaryshield/dataset.hpp"
#include "binaryshield/embedding.hpp"
#include "binaryshield/encoding.hpp"
#include "binaryshield/error.hpp"
#include "binaryshield/fingerprint.hpp"
#include "binaryshield/pii.hpp"
#include "binaryshield/rng.hpp"
#include "binaryshield/store.hpp"
#include "json.hpp"

namespace binaryshield {

inline constexpr int kFrameVersion = 1;

struct CompositeFingerprint {
  int version = kFrameVersion;
  std::string origin_service;
  std::string fingerprint_id;
  std::size_t dim = 0;
  double alpha = 0.0;
  std::vector<std::uint8_t> bits;  // packed, decoded from bits_base64
  Metadata metadata;
  std::int64_t issued_at = 0;

  friend bool operator==(const CompositeFingerprint&, const CompositeFingerprint&) = default;

  std::span<const std::uint8_t> bytes() const noexcept { return bits; }
};

/// Structural checks shared by encode and decode. Throws InvalidArgument.
inline void validate_composite(const CompositeFingerprint& f) {
  if (f.version != kFrameVersion) throw InvalidArgument("unsupported frame version");
  if (f.origin_service.empty()) throw InvalidArgument("origin_service must be non-empty");
  if (f.fingerprint_id.empty()) throw InvalidArgument("fingerprint_id must be non-empty");
  if (f.dim == 0) throw InvalidArgument("dim must be positive");
  if (!(f.alpha > 0.0) || !std::isfinite(f.alpha)) throw InvalidArgument("alpha must be finite and > 0");
  validate_packed(f.bits, f.dim);
  for (const auto& [k, v] : f.metadata) {
    if (k.find('\n') != std::string::npos || v.find('\n') != std::string::npos) {
      throw InvalidArgument("metadata must not contain newlines");
    }
  }
}

inline std::string encode_frame(const CompositeFingerprint& f) {
  validate_composite(f);
  nlohmann::ordered_json j;
  j["version"] = f.version;
  j["origin_service"] = f.origin_service;
  j["fingerprint_id"] = f.fingerprint_id;
  j["dim"] = f.dim;
  j["alpha"] = f.alpha;
  j["bits_base64"] = base64_encode(f.bits);
  j["metadata"] = nlohmann::ordered_json::object();
  for (const auto& [k, v] : f.metadata) j["metadata"][k] = v;
  j["issued_at"] = f.issued_at;
  return j.dump() + "\n";
}

enum class DecodeErrorKind {
  kMalformed,
  kMissingKey,
  kBadType,
  kUnknownKey,
  kUnsupportedVersion,
  kBadBase64,
  kWrongLength,
  kNonzeroPadding,
  kBadMetadata,
  kBadValue,
};

inline std::string_view decode_error_name(DecodeErrorKind k) noexcept {
  switch (k) {
    case DecodeErrorKind::kMalformed: return "malformed_frame";
    case DecodeErrorKind::kMissingKey: return "missing_key";
    case DecodeErrorKind::kBadType: return "bad_type";
    case DecodeErrorKind::kUnknownKey: return "unknown_key";
    case DecodeErrorKind::kUnsupportedVersion: return "unsupported_version";
    case DecodeErrorKind::kBadBase64: return "bad_base64";
    case DecodeErrorKind::kWrongLength: return "wrong_length";
    case DecodeErrorKind::kNonzeroPadding: return "nonzero_padding";
    case DecodeErrorKind::kBadMetadata: return "bad_metadata";
    case DecodeErrorKind::kBadValue: return "bad_value";
  }
  return "unknown";
}

/// Frame rejection naming the failure kind and the offending field.
class DecodeError : public CorruptFrame {
 public:
  DecodeError(DecodeErrorKind kind, std::string field, const std::string& detail)
      : CorruptFrame(std::string(decode_error_name(kind)) + " in '" + field + "': " + detail),
        kind_(kind),
        field_(std::move(field)) {}

  DecodeErrorKind kind() const noexcept { return kind_; }
  const std::string& field() const noexcept { return field_; }

 private:
  DecodeErrorKind kind_;
  std::string field_;
};

struct DecodeOptions {
  /// Strict rejects unknown keys; lenient skips them and records a warning.
  bool strict = true;
  std::vector<std::string>* warnings = nullptr;
};

inline CompositeFingerprint decode_frame(std::string_view frame, const DecodeOptions& opts = {}) {
  using K = DecodeErrorKind;
  if (!frame.empty() && frame.back() == '\n') frame.remove_suffix(1);
  if (frame.find('\n') != std::string_view::npos) {
    throw DecodeError(K::kMalformed, "frame", "frame must be a single line");
  }
  const auto j = nlohmann::json::parse(frame, nullptr, false);
  if (j.is_discarded() || !j.is_object()) throw DecodeError(K::kMalformed, "frame", "not a JSON object");

  static constexpr std::string_view kKeys[] = {"version", "dim",      "alpha",    "origin_service",
                                               "fingerprint_id", "bits_base64", "metadata", "issued_at"};
  for (const auto& [key, _] : j.items()) {
    if (std::find(std::begin(kKeys), std::end(kKeys), key) == std::end(kKeys)) {
      if (opts.strict) throw DecodeError(K::kUnknownKey, key, "not part of the frame schema");
      if (opts.warnings) opts.warnings->push_back("ignored unknown key '" + key + "'");
    }
  }
  const auto field = [&](const char* key) -> const nlohmann::json& {
    if (!j.contains(key)) throw DecodeError(K::kMissingKey, key, "required");
    return j[key];
  };
  const auto integer = [&](const char* key) -> std::int64_t {
    const auto& v = field(key);
    if (!v.is_number_integer()) throw DecodeError(K::kBadType, key, "expected integer");
    return v.get<std::int64_t>();
  };
  const auto string = [&](const char* key) -> std::string {
    const auto& v = field(key);
    if (!v.is_string()) throw DecodeError(K::kBadType, key, "expected string");
    return v.get<std::string>();
  };

  CompositeFingerprint f;
  const auto version = integer("version");
  if (version != kFrameVersion) {
    throw DecodeError(K::kUnsupportedVersion, "version", "got " + std::to_string(version));
  }
  f.version = static_cast<int>(version);
  f.origin_service = string("origin_service");
  f.fingerprint_id = string("fingerprint_id");
  if (f.origin_service.empty()) throw DecodeError(K::kBadValue, "origin_service", "empty");
  if (f.fingerprint_id.empty()) throw DecodeError(K::kBadValue, "fingerprint_id", "empty");
  const auto dim = integer("dim");
  if (dim <= 0) throw DecodeError(K::kBadValue, "dim", "must be positive");
  f.dim = static_cast<std::size_t>(dim);
  const auto& alpha = field("alpha");
  if (!alpha.is_number()) throw DecodeError(K::kBadType, "alpha", "expected number");
  f.alpha = alpha.get<double>();
  if (!(f.alpha > 0.0) || !std::isfinite(f.alpha)) throw DecodeError(K::kBadValue, "alpha", "must be finite and > 0");
  auto bits = base64_decode(string("bits_base64"));
  if (!bits) throw DecodeError(K::kBadBase64, "bits_base64", "not strict padded base64");
  if (bits->size() != packed_size(f.dim)) {
    throw DecodeError(K::kWrongLength, "bits_base64",
                      "decoded " + std::to_string(bits->size()) + " bytes, dim " +
                          std::to_string(f.dim) + " needs " + std::to_string(packed_size(f.dim)));
  }
  if (f.dim % 8 != 0 && (bits->back() >> (f.dim % 8)) != 0) {
    throw DecodeError(K::kNonzeroPadding, "bits_base64", "padding bits beyond dim are set");
  }
  f.bits = std::move(*bits);
  const auto& meta = field("metadata");
  if (!meta.is_object()) throw DecodeError(K::kBadType, "metadata", "expected object");
  for (const auto& [k, v] : meta.items()) {
    if (!v.is_string()) throw DecodeError(K::kBadType, "metadata." + k, "expected string");
    const auto s = v.get<std::string>();
    if (k.find('\n') != std::string::npos || s.find('\n') != std::string::npos) {
      throw DecodeError(K::kBadMetadata, "metadata." + k, "newline in metadata");
    }
    f.metadata.emplace(k, s);
  }
  f.issued_at = integer("issued_at");
  return f;
}

// ---------------------------------------------------------------------------
// Services

/// What a peer does locally when a broadcast matches. Actions are recorded,
/// not executed; ids of the local matches never leave the peer.
struct ResponsePolicy {
  std::string action = "log";
  std::size_t min_matches = 1;
};

struct PolicyEvent {
  std::string service_id;
  std::string fingerprint_id;
  std::string action;
  std::vector<MatchResult> local_matches;
};

struct ServiceNode {
  std::string service_id;
  FingerprintStore store;
  std::size_t tau = 0;
  ResponsePolicy policy;
  /// Fires inside the peer when a broadcast meets policy.min_matches.
  std::function<void(const PolicyEvent&)> on_policy;

  ServiceNode() = default;
  ServiceNode(std::string id, std::size_t dim, std::size_t tau_, ResponsePolicy p = {})
      : service_id(std::move(id)), store(dim), tau(tau_), policy(std::move(p)) {
    if (service_id.empty()) throw InvalidArgument("service_id must be non-empty");
    if (tau > dim) throw InvalidArgument("tau " + std::to_string(tau) + " exceeds dim " + std::to_string(dim));
  }
};

/// Aggregate-only answer to a broadcast.
struct CorrelationReply {
  std::string service_id;
  std::string fingerprint_id;
  std::size_t match_count = 0;
  std::size_t tau_used = 0;
  std::optional<std::string> error;
  bool policy_fired = false;

  friend bool operator==(const CorrelationReply&, const CorrelationReply&) = default;
};

inline nlohmann::ordered_json to_json(const CorrelationReply& r) {
  nlohmann::ordered_json j;
  j["service_id"] = r.service_id;
  j["fingerprint_id"] = r.fingerprint_id;
  j["match_count"] = r.match_count;
  j["tau_used"] = r.tau_used;
  if (r.error) j["error"] = *r.error;
  j["policy_fired"] = r.policy_fired;
  return j;
}

/// One peer's side of a broadcast: threshold search, count, local policy.
inline CorrelationReply answer(ServiceNode& peer, const CompositeFingerprint& f) {
  CorrelationReply r;
  r.service_id = peer.service_id;
  r.fingerprint_id = f.fingerprint_id;
  r.tau_used = peer.tau;
  if (peer.store.size() == 0) return r;
  if (peer.store.dim() != f.dim) {
    r.error = "dimension mismatch: peer dim " + std::to_string(peer.store.dim()) + ", frame dim " +
              std::to_string(f.dim);
    return r;
  }
  auto matches = peer.store.search_threshold(f.bits, peer.tau, {&f.metadata, 0});
  r.match_count = matches.size();
  if (r.match_count > 0 && r.match_count >= peer.policy.min_matches) {
    r.policy_fired = true;
    if (peer.on_policy) {
      peer.on_policy({peer.service_id, f.fingerprint_id, peer.policy.action, std::move(matches)});
    }
  }
  return r;
}

/// Sends `f` to every peer except its origin. Replies are sorted by
/// service_id; a failing peer yields an error reply without affecting others.
inline std::vector<CorrelationReply> broadcast(const CompositeFingerprint& f,
                                               std::span<ServiceNode* const> peers) {
  validate_composite(f);
  std::vector<ServiceNode*> order;
  for (auto* p : peers) {
    if (p && p->service_id != f.origin_service) order.push_back(p);
  }
  if (order.empty()) throw InvalidArgument("broadcast needs at least one peer");
  std::sort(order.begin(), order.end(),
            [](const ServiceNode* a, const ServiceNode* b) { return a->service_id < b->service_id; });
  std::vector<CorrelationReply> replies;
  replies.reserve(order.size());
  for (auto* p : order) {
    try {
      replies.push_back(answer(*p, f));
    } catch (const std::exception& e) {
      CorrelationReply r;
      r.service_id = p->service_id;
      r.fingerprint_id = f.fingerprint_id;
      r.tau_used = p->tau;
      r.error = e.what();
      replies.push_back(std::move(r));
    }
  }
  return replies;
}

// ---------------------------------------------------------------------------
// Ingest

/// Everything needed to turn a raw prompt into a privatized fingerprint.
struct Pipeline {
  const Redactor* redactor = nullptr;
  const EmbeddingProvider* provider = nullptr;
  PrivacyBudget budget{2.0};
};

struct IngestRequest {
  std::string fingerprint_id;
  Metadata metadata;
  std::uint64_t noise_seed = 0;
  std::int64_t issued_at = 0;
};

/// redact -> embed -> quantize -> randomize -> compose, then store locally.
/// Nothing is stored if any stage fails.
inline CompositeFingerprint ingest_detection(ServiceNode& node, std::string_view raw_prompt,
                                             const IngestRequest& req, const Pipeline& pipeline) {
  if (!pipeline.redactor || !pipeline.provider) throw InvalidArgument("pipeline needs a redactor and a provider");
  const RedactedPrompt redacted = pipeline.redactor->redact(raw_prompt);
  const DenseEmbedding e = pipeline.provider->embed(redacted);
  const PrivatizedFingerprint priv = randomize(quantize(e), pipeline.budget, req.noise_seed);

  CompositeFingerprint f;
  f.origin_service = node.service_id;
  f.fingerprint_id = req.fingerprint_id;
  f.dim = priv.dim();
  f.alpha = pipeline.budget.alpha();
  f.bits.assign(priv.bytes().begin(), priv.bytes().end());
  f.metadata = req.metadata;
  f.issued_at = req.issued_at;
  validate_composite(f);

  StoredFingerprint stored;
  stored.id = f.fingerprint_id;
  stored.bits = f.bits;
  stored.dim = f.dim;
  stored.alpha = f.alpha;
  stored.metadata = f.metadata;
  node.store.insert(std::move(stored));
  return f;
}

// ---------------------------------------------------------------------------
// Campaign simulation
//
// Scenario file (JSON):
//
//   {
//     "alpha": 2.0,                 privacy budget for every service
//     "dim": 768,                   pseudo-embedder dimension
//     "seed": 7,                    root of all noise seeds
//     "start_time": 1700000000,     logical clock origin (unix seconds)
//     "tick_seconds": 60,           clock advance per event
//     "provider": {"kind": "pseudo"}            or {"kind": "cache", "path": "..."}
//     "rules": "pii_rules.conf",    optional redaction rule file
//     "services": [
//       {"id": "S1", "tau": 200,
//        "policy": {"action": "block", "min_matches": 1},
//        "corpus": "s1.jsonl",                  optional, CorpusRecord lines
//        "prompts": [{"text": "...", "attack_group": "g1"}]}   optional inline
//     ],
//     "events": [
//       {"type": "detect", "service": "S2", "prompt": "...",
//        "attack_group": "g1", "metadata": {"channel": "api"}}
//     ]
//   }
//
// Relative paths resolve against the scenario file's directory. A "detect"
// event ingests into the origin's log and broadcasts; "ingest" only stores.

/// Rejection of a scenario, naming the JSON location (and line for files).
class ScenarioError : public Error {
 public:
  ScenarioError(const std::string& where, const std::string& what)
      : Error("scenario " + where + ": " + what), where_(where) {}
  const std::string& where() const noexcept { return where_; }

 private:
  std::string where_;
};

struct ScenarioPrompt {
  std::string text;
  std::optional<std::string> attack_group;
};

struct ScenarioService {
  std::string id;
  std::size_t tau = 0;
  ResponsePolicy policy;
  std::vector<ScenarioPrompt> prompts;  // corpus file records then inline prompts
};

struct ScenarioEvent {
  enum class Type { kDetect, kIngest } type = Type::kDetect;
  std::string service;
  std::string prompt;
  std::optional<std::string> attack_group;
  Metadata metadata;
};

struct Scenario {
  double alpha = 2.0;
  std::size_t dim = kDefaultDim;
  std::uint64_t seed = 0;
  std::int64_t start_time = 1700000000;
  std::int64_t tick_seconds = 60;
  ProviderConfig provider;
  std::optional<std::string> rules_path;
  std::vector<ScenarioService> services;
  std::vector<ScenarioEvent> events;
};

namespace scenario_detail {

inline const nlohmann::json& get(const nlohmann::json& obj, const std::string& where, const char* key) {
  if (!obj.contains(key)) throw ScenarioError(where, std::string("missing required key '") + key + "'");
  return obj[key];
}

inline std::string get_string(const nlohmann::json& obj, const std::string& where, const char* key) {
  const auto& v = get(obj, where, key);
  if (!v.is_string()) throw ScenarioError(where + "." + key, "expected string");
  return v.get<std::string>();
}

inline std::uint64_t get_uint(const nlohmann::json& obj, const std::string& where, const char* key) {
  const auto& v = get(obj, where, key);
  if (!v.is_number_unsigned()) throw ScenarioError(where + "." + key, "expected non-negative integer");
  return v.get<std::uint64_t>();
}

inline std::optional<std::string> opt_string(const nlohmann::json& obj, const std::string& where,
                                             const char* key) {
  if (!obj.contains(key) || obj[key].is_null()) return std::nullopt;
  if (!obj[key].is_string()) throw ScenarioError(where + "." + key, "expected string");
  return obj[key].get<std::string>();
}

inline Metadata get_metadata(const nlohmann::json& obj, const std::string& where) {
  Metadata m;
  if (!obj.contains("metadata")) return m;
  const auto& meta = obj["metadata"];
  if (!meta.is_object()) throw ScenarioError(where + ".metadata", "expected object");
  for (const auto& [k, v] : meta.items()) {
    if (!v.is_string()) throw ScenarioError(where + ".metadata." + k, "expected string");
    m.emplace(k, v.get<std::string>());
  }
  return m;
}

inline std::size_t line_of(std::string_view text, std::size_t byte) {
  return 1 + static_cast<std::size_t>(std::count(text.begin(),
                                                 text.begin() + static_cast<std::ptrdiff_t>(std::min(byte, text.size())),
                                                 '\n'));
}

}  // namespace scenario_detail

/// Parses scenario JSON. `base_dir` resolves relative corpus and rule paths.
inline Scenario parse_scenario(std::string_view text, const std::filesystem::path& base_dir = {}) {
  using namespace scenario_detail;
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ScenarioError("line " + std::to_string(line_of(text, e.byte == 0 ? 0 : e.byte - 1)),
                        "malformed JSON");
  }
  if (!j.is_object()) throw ScenarioError("$", "expected object");
  Scenario s;
  if (j.contains("alpha")) {
    if (!j["alpha"].is_number()) throw ScenarioError("$.alpha", "expected number");
    s.alpha = j["alpha"].get<double>();
  }
  try {
    (void)PrivacyBudget(s.alpha);
  } catch (const InvalidArgument& e) {
    throw ScenarioError("$.alpha", e.what());
  }
  if (j.contains("dim")) s.dim = get_uint(j, "$", "dim");
  if (s.dim == 0) throw ScenarioError("$.dim", "must be positive");
  if (j.contains("seed")) s.seed = get_uint(j, "$", "seed");
  if (j.contains("start_time")) {
    if (!j["start_time"].is_number_integer()) throw ScenarioError("$.start_time", "expected integer");
    s.start_time = j["start_time"].get<std::int64_t>();
  }
  if (j.contains("tick_seconds")) s.tick_seconds = static_cast<std::int64_t>(get_uint(j, "$", "tick_seconds"));
  s.provider.dim = s.dim;
  if (j.contains("provider")) {
    const auto& p = j["provider"];
    if (!p.is_object()) throw ScenarioError("$.provider", "expected object");
    const auto kind_name = get_string(p, "$.provider", "kind");
    const auto kind = parse_provider_kind(kind_name);
    if (!kind || *kind == ProviderKind::kRemoteHttp) {
      throw ScenarioError("$.provider.kind", "expected 'pseudo' or 'cache', got '" + kind_name + "'");
    }
    s.provider.kind = *kind;
    if (auto m = opt_string(p, "$.provider", "model_id")) s.provider.model_id = *m;
    if (*kind == ProviderKind::kFileCache) {
      s.provider.cache_path = (base_dir / get_string(p, "$.provider", "path")).string();
    }
  }
  if (auto r = opt_string(j, "$", "rules")) s.rules_path = (base_dir / *r).string();

  const auto& services = get(j, "$", "services");
  if (!services.is_array() || services.empty()) throw ScenarioError("$.services", "expected non-empty array");
  std::set<std::string> ids;
  for (std::size_t i = 0; i < services.size(); ++i) {
    const std::string where = "$.services[" + std::to_string(i) + "]";
    const auto& sj = services[i];
    if (!sj.is_object()) throw ScenarioError(where, "expected object");
    ScenarioService svc;
    svc.id = get_string(sj, where, "id");
    if (svc.id.empty()) throw ScenarioError(where + ".id", "must be non-empty");
    if (!ids.insert(svc.id).second) throw ScenarioError(where + ".id", "duplicate service id '" + svc.id + "'");
    svc.tau = get_uint(sj, where, "tau");
    if (svc.tau > s.dim) throw ScenarioError(where + ".tau", "exceeds dim");
    if (sj.contains("policy")) {
      const auto& pj = sj["policy"];
      if (!pj.is_object()) throw ScenarioError(where + ".policy", "expected object");
      if (auto a = opt_string(pj, where + ".policy", "action")) svc.policy.action = *a;
      if (pj.contains("min_matches")) svc.policy.min_matches = get_uint(pj, where + ".policy", "min_matches");
    }
    if (auto corpus = opt_string(sj, where, "corpus")) {
      const auto path = (base_dir / *corpus).string();
      try {
        for (auto& r : load_corpus(path).records) svc.prompts.push_back({std::move(r.text), std::move(r.attack_group)});
      } catch (const SchemaError& e) {
        throw ScenarioError(where + ".corpus (" + path + ")", e.what());
      } catch (const IoError& e) {
        throw ScenarioError(where + ".corpus", e.what());
      }
    }
    if (sj.contains("prompts")) {
      const auto& pj = sj["prompts"];
      if (!pj.is_array()) throw ScenarioError(where + ".prompts", "expected array");
      for (std::size_t k = 0; k < pj.size(); ++k) {
        const std::string pw = where + ".prompts[" + std::to_string(k) + "]";
        if (!pj[k].is_object()) throw ScenarioError(pw, "expected object");
        svc.prompts.push_back({get_string(pj[k], pw, "text"), opt_string(pj[k], pw, "attack_group")});
      }
    }
    s.services.push_back(std::move(svc));
  }

  const auto& events = get(j, "$", "events");
  if (!events.is_array()) throw ScenarioError("$.events", "expected array");
  for (std::size_t i = 0; i < events.size(); ++i) {
    const std::string where = "$.events[" + std::to_string(i) + "]";
    const auto& ej = events[i];
    if (!ej.is_object()) throw ScenarioError(where, "expected object");
    ScenarioEvent ev;
    const auto type = get_string(ej, where, "type");
    if (type == "detect") {
      ev.type = ScenarioEvent::Type::kDetect;
    } else if (type == "ingest") {
      ev.type = ScenarioEvent::Type::kIngest;
    } else {
      throw ScenarioError(where + ".type", "expected 'detect' or 'ingest', got '" + type + "'");
    }
    ev.service = get_string(ej, where, "service");
    if (!ids.count(ev.service)) throw ScenarioError(where + ".service", "unknown service '" + ev.service + "'");
    ev.prompt = get_string(ej, where, "prompt");
    if (trim(ev.prompt).empty()) throw ScenarioError(where + ".prompt", "must be non-empty");
    ev.attack_group = opt_string(ej, where, "attack_group");
    ev.metadata = get_metadata(ej, where);
    s.events.push_back(std::move(ev));
  }
  return s;
}

inline Scenario load_scenario(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError(path, "cannot open scenario");
  std::stringstream ss;
  ss << in.rdbuf();
  try {
    return parse_scenario(ss.str(), std::filesystem::path(path).parent_path());
  } catch (const ScenarioError& e) {
    throw ScenarioError(path + ": " + e.where(), e.what());
  }
}

struct EventReport {
  std::size_t index = 0;
  std::string type;
  std::int64_t clock = 0;
  std::string origin;
  std::string fingerprint_id;
  std::optional<std::string> attack_group;
  std::size_t frame_bytes = 0;
  std::vector<CorrelationReply> replies;
};

struct CampaignReport {
  std::vector<std::string> services;
  double alpha = 0.0;
  std::size_t dim = 0;
  std::vector<EventReport> events;
  /// service -> total matches it reported across all broadcasts.
  std::map<std::string, std::size_t> totals;
  /// service -> number of broadcasts it matched at least once.
  std::map<std::string, std::size_t> events_matched;
  /// attack_group -> services (sorted) that matched a broadcast of that group.
  std::map<std::string, std::vector<std::string>> linkage;
  std::vector<PolicyEvent> policy_log;  // local to the simulation; ids stay out of to_json
};

inline nlohmann::ordered_json to_json(const CampaignReport& r) {
  nlohmann::ordered_json j;
  j["services"] = r.services;
  j["alpha"] = r.alpha;
  j["dim"] = r.dim;
  j["events"] = nlohmann::ordered_json::array();
  for (const auto& e : r.events) {
    nlohmann::ordered_json ej;
    ej["index"] = e.index;
    ej["type"] = e.type;
    ej["clock"] = e.clock;
    ej["origin"] = e.origin;
    ej["fingerprint_id"] = e.fingerprint_id;
    ej["attack_group"] = e.attack_group ? nlohmann::ordered_json(*e.attack_group) : nlohmann::ordered_json();
    ej["frame_bytes"] = e.frame_bytes;
    ej["replies"] = nlohmann::ordered_json::array();
    for (const auto& rep : e.replies) ej["replies"].push_back(to_json(rep));
    j["events"].push_back(std::move(ej));
  }
  j["totals"] = nlohmann::ordered_json::object();
  for (const auto& s : r.services) {
    j["totals"][s] = {{"matches", r.totals.count(s) ? r.totals.at(s) : 0},
                      {"events_matched", r.events_matched.count(s) ? r.events_matched.at(s) : 0}};
  }
  j["linkage"] = nlohmann::ordered_json::object();
  for (const auto& [g, svcs] : r.linkage) j["linkage"][g] = svcs;
  return j;
}

/// Fixed-width text rendering of a report.
inline std::string format_table(const CampaignReport& r) {
  std::ostringstream out;
  out << "event  clock        origin      fingerprint        group       replies\n";
  for (const auto& e : r.events) {
    std::string replies;
    for (const auto& rep : e.replies) {
      if (!replies.empty()) replies += ' ';
      replies += rep.service_id + "=" + (rep.error ? std::string("ERR") : std::to_string(rep.match_count));
    }
    char line[256];
    std::snprintf(line, sizeof line, "%-6zu %-12lld %-11s %-18s %-11s ", e.index,
                  static_cast<long long>(e.clock), e.origin.c_str(), e.fingerprint_id.c_str(),
                  e.attack_group ? e.attack_group->c_str() : "-");
    out << line << (e.type == "ingest" ? std::string("(stored only)") : replies) << '\n';
  }
  out << "\nservice      matches  events_matched\n";
  for (const auto& s : r.services) {
    char line[128];
    std::snprintf(line, sizeof line, "%-12s %-8zu %zu\n", s.c_str(), r.totals.count(s) ? r.totals.at(s) : 0,
                  r.events_matched.count(s) ? r.events_matched.at(s) : 0);
    out << line;
  }
  out << "\nattack_group  services\n";
  for (const auto& [g, svcs] : r.linkage) {
    out << g << std::string(g.size() < 14 ? 14 - g.size() : 1, ' ');
    for (std::size_t i = 0; i < svcs.size(); ++i) out << (i ? "," : "") << svcs[i];
    out << '\n';
  }
  return out.str();
}

/// Replays a scenario: preload every service's corpus, then run events in
/// order. Frames travel encoded and are decoded by peers. Deterministic for a
/// fixed scenario.
inline CampaignReport simulate_campaign(const Scenario& s, const Redactor* redactor = nullptr) {
  std::unique_ptr<RuleRedactor> owned_redactor;
  if (!redactor) {
    if (s.rules_path) {
      std::ifstream in(*s.rules_path);
      if (!in) throw IoError(*s.rules_path, "cannot open rule file");
      std::stringstream ss;
      ss << in.rdbuf();
      owned_redactor = std::make_unique<RuleRedactor>(RuleSet::parse(ss.str()));
    } else {
      owned_redactor = std::make_unique<RuleRedactor>();
    }
    redactor = owned_redactor.get();
  }
  const auto provider = make_provider(s.provider);
  Pipeline pipeline{redactor, provider.get(), PrivacyBudget(s.alpha)};

  CampaignReport report;
  report.alpha = s.alpha;
  report.dim = provider->dim();

  std::vector<std::unique_ptr<ServiceNode>> nodes;
  std::map<std::string, ServiceNode*> by_id;
  std::map<std::string, std::size_t> next_serial;
  for (const auto& svc : s.services) {
    auto node = std::make_unique<ServiceNode>(svc.id, provider->dim(), svc.tau, svc.policy);
    node->on_policy = [&report](const PolicyEvent& e) { report.policy_log.push_back(e); };
    by_id[svc.id] = node.get();
    report.services.push_back(svc.id);
    nodes.push_back(std::move(node));
  }
  std::sort(report.services.begin(), report.services.end());

  const auto fingerprint_id = [&](const std::string& service) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "-%06zu", ++next_serial[service]);
    return service + buf;
  };
  const auto noise_seed = [&](const std::string& service, std::size_t serial) {
    return derive_seed(derive_seed(s.seed, stable_hash64(service)), serial);
  };

  // Preload: historical detections, issued before the clock starts.
  for (const auto& svc : s.services) {
    auto& node = *by_id[svc.id];
    for (const auto& p : svc.prompts) {
      IngestRequest req;
      req.fingerprint_id = fingerprint_id(svc.id);
      req.noise_seed = noise_seed(svc.id, next_serial[svc.id]);
      req.issued_at = s.start_time;
      ingest_detection(node, p.text, req, pipeline);
    }
  }

  std::vector<ServiceNode*> all;
  for (auto& n : nodes) all.push_back(n.get());
  std::set<std::string> groups_seen;
  for (std::size_t i = 0; i < s.events.size(); ++i) {
    const auto& ev = s.events[i];
    auto& origin = *by_id.at(ev.service);
    IngestRequest req;
    req.fingerprint_id = fingerprint_id(ev.service);
    req.noise_seed = noise_seed(ev.service, next_serial[ev.service]);
    req.issued_at = s.start_time + static_cast<std::int64_t>(i + 1) * s.tick_seconds;
    req.metadata = ev.metadata;
    const auto composite = ingest_detection(origin, ev.prompt, req, pipeline);

    EventReport er;
    er.index = i;
    er.type = ev.type == ScenarioEvent::Type::kDetect ? "detect" : "ingest";
    er.clock = req.issued_at;
    er.origin = ev.service;
    er.fingerprint_id = composite.fingerprint_id;
    er.attack_group = ev.attack_group;
    if (ev.attack_group) report.linkage.try_emplace(*ev.attack_group);
    if (ev.type == ScenarioEvent::Type::kDetect && all.size() > 1) {
      const std::string frame = encode_frame(composite);
      er.frame_bytes = frame.size();
      const auto received = decode_frame(frame);
      er.replies = broadcast(received, all);
      for (const auto& r : er.replies) {
        report.totals[r.service_id] += r.match_count;
        if (r.match_count > 0) {
          ++report.events_matched[r.service_id];
          if (ev.attack_group) {
            auto& v = report.linkage[*ev.attack_group];
            if (std::find(v.begin(), v.end(), r.service_id) == v.end()) {
              v.push_back(r.service_id);
              std::sort(v.begin(), v.end());
            }
          }
        }
      }
    }
    report.events.push_back(std::move(er));
  }
  return report;
}

}  // namespace binaryshield
