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

// JSONL evaluation inputs.
//
// Pair file, one object per line:
//   {"id": "p1", "prompt_a": "...", "prompt_b": "...", "label": 1, "variant_type": "V5"}
// Corpus file, one object per line:
//   {"id": "c1", "text": "...", "is_attack": true, "attack_group": "g7"}
//
// Loading drops records whose prompts are empty or whitespace, and records
// that repeat an earlier record's content (same prompt pair / same text);
// both are tallied in the load report. Duplicate ids are an error.

#include <array>
#include <fstream>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <unordered_set>
#include <vector>

#include "binaryshield/error.hpp"
#include "binaryshield/text.hpp"
#include "json.hpp"

namespace binaryshield {

enum class VariantType { kV1, kV3, kV5, kV10, kV20, kParaphrase, kBenignPair };

inline constexpr std::array<std::string_view, 7> kVariantNames = {
    "V1", "V3", "V5", "V10", "V20", "PARAPHRASE", "BENIGN_PAIR"};

constexpr std::string_view variant_name(VariantType v) noexcept {
  return kVariantNames[static_cast<std::size_t>(v)];
}

inline std::optional<VariantType> parse_variant(std::string_view s) {
  for (std::size_t i = 0; i < kVariantNames.size(); ++i) {
    if (kVariantNames[i] == s) return static_cast<VariantType>(i);
  }
  return std::nullopt;
}

struct PairRecord {
  std::string id;
  std::string prompt_a;
  std::string prompt_b;
  int label = 0;
  VariantType variant_type = VariantType::kBenignPair;

  friend bool operator==(const PairRecord&, const PairRecord&) = default;
};

struct CorpusRecord {
  std::string id;
  std::string text;
  bool is_attack = false;
  std::optional<std::string> attack_group;

  friend bool operator==(const CorpusRecord&, const CorpusRecord&) = default;
};

struct LoadReport {
  std::size_t lines = 0;
  std::size_t loaded = 0;
  std::size_t dropped_empty = 0;
  std::size_t dropped_duplicate = 0;
};

template <typename T>
struct Loaded {
  std::vector<T> records;
  LoadReport report;
};

namespace dataset_detail {

inline const nlohmann::json& require(const nlohmann::json& obj, const char* key, std::size_t line) {
  if (!obj.contains(key)) throw SchemaError(line, std::string("missing required key '") + key + "'");
  return obj[key];
}

inline std::string require_string(const nlohmann::json& obj, const char* key, std::size_t line) {
  const auto& v = require(obj, key, line);
  if (!v.is_string()) throw SchemaError(line, std::string("'") + key + "' must be a string");
  return v.get<std::string>();
}

template <typename Fn>
void for_each_line(const std::string& path, Fn&& fn) {
  std::ifstream in(path);
  if (!in) throw IoError(path, "cannot open");
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (trim(line).empty()) continue;
    nlohmann::json obj = nlohmann::json::parse(line, nullptr, false);
    if (obj.is_discarded()) throw SchemaError(lineno, "malformed JSON");
    if (!obj.is_object()) throw SchemaError(lineno, "record must be a JSON object");
    fn(obj, lineno);
  }
}

}  // namespace dataset_detail

inline PairRecord parse_pair(const nlohmann::json& obj, std::size_t line) {
  using namespace dataset_detail;
  PairRecord r;
  r.id = require_string(obj, "id", line);
  r.prompt_a = require_string(obj, "prompt_a", line);
  r.prompt_b = require_string(obj, "prompt_b", line);
  const auto& label = require(obj, "label", line);
  if (!label.is_number_integer() || (label.get<int>() != 0 && label.get<int>() != 1)) {
    throw SchemaError(line, "'label' must be 0 or 1");
  }
  r.label = label.get<int>();
  const auto vname = require_string(obj, "variant_type", line);
  const auto v = parse_variant(vname);
  if (!v) throw SchemaError(line, "unknown variant_type '" + vname + "'");
  r.variant_type = *v;
  if ((r.label == 1) != (r.variant_type != VariantType::kBenignPair)) {
    throw SchemaError(line, "label 1 requires an attack variant_type and label 0 requires BENIGN_PAIR");
  }
  return r;
}

inline CorpusRecord parse_corpus_record(const nlohmann::json& obj, std::size_t line) {
  using namespace dataset_detail;
  CorpusRecord r;
  r.id = require_string(obj, "id", line);
  r.text = require_string(obj, "text", line);
  const auto& atk = require(obj, "is_attack", line);
  if (!atk.is_boolean()) throw SchemaError(line, "'is_attack' must be a boolean");
  r.is_attack = atk.get<bool>();
  if (obj.contains("attack_group") && !obj["attack_group"].is_null()) {
    if (!obj["attack_group"].is_string()) throw SchemaError(line, "'attack_group' must be a string");
    r.attack_group = obj["attack_group"].get<std::string>();
  }
  if (r.is_attack != r.attack_group.has_value()) {
    throw SchemaError(line, "'attack_group' must be present exactly when is_attack is true");
  }
  return r;
}

inline Loaded<PairRecord> load_pairs(const std::string& path) {
  Loaded<PairRecord> out;
  std::unordered_set<std::string> ids;
  std::set<std::pair<std::string, std::string>> seen;
  dataset_detail::for_each_line(path, [&](const nlohmann::json& obj, std::size_t line) {
    ++out.report.lines;
    auto r = parse_pair(obj, line);
    if (!ids.insert(r.id).second) throw SchemaError(line, "duplicate id '" + r.id + "'");
    if (trim(r.prompt_a).empty() || trim(r.prompt_b).empty()) {
      ++out.report.dropped_empty;
      return;
    }
    if (!seen.emplace(r.prompt_a, r.prompt_b).second) {
      ++out.report.dropped_duplicate;
      return;
    }
    out.records.push_back(std::move(r));
  });
  out.report.loaded = out.records.size();
  return out;
}

inline Loaded<CorpusRecord> load_corpus(const std::string& path) {
  Loaded<CorpusRecord> out;
  std::unordered_set<std::string> ids;
  std::unordered_set<std::string> seen;
  dataset_detail::for_each_line(path, [&](const nlohmann::json& obj, std::size_t line) {
    ++out.report.lines;
    auto r = parse_corpus_record(obj, line);
    if (!ids.insert(r.id).second) throw SchemaError(line, "duplicate id '" + r.id + "'");
    if (trim(r.text).empty()) {
      ++out.report.dropped_empty;
      return;
    }
    if (!seen.insert(r.text).second) {
      ++out.report.dropped_duplicate;
      return;
    }
    out.records.push_back(std::move(r));
  });
  out.report.loaded = out.records.size();
  return out;
}

inline nlohmann::ordered_json to_json(const PairRecord& r) {
  nlohmann::ordered_json j;
  j["id"] = r.id;
  j["prompt_a"] = r.prompt_a;
  j["prompt_b"] = r.prompt_b;
  j["label"] = r.label;
  j["variant_type"] = variant_name(r.variant_type);
  return j;
}

inline nlohmann::ordered_json to_json(const CorpusRecord& r) {
  nlohmann::ordered_json j;
  j["id"] = r.id;
  j["text"] = r.text;
  j["is_attack"] = r.is_attack;
  if (r.attack_group) j["attack_group"] = *r.attack_group;
  return j;
}

template <typename Record>
void write_jsonl(const std::string& path, const std::vector<Record>& records) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError(path, "cannot open for writing");
  for (const auto& r : records) out << to_json(r).dump() << '\n';
  if (!out) throw IoError(path, "write failed");
}

}  // namespace binaryshield
