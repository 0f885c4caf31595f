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

// Rule-based PII detection and placeholder substitution.
//
// A RuleSet is parsed from a small line-oriented config (see
// config/pii_rules.conf, which mirrors kDefaultPiiRules below):
//
//   version 1
//   rule    <ENTITY> <priority> <validator> <ECMAScript regex ...>
//   matcher <ENTITY> <priority> person | lexicon:<list>
//   list    <name> <Word,Word Word,...>
//
// Lower priority numbers win ties. Validators: none, luhn, ssn, ipv4, date.
// Overlapping candidates resolve by longer span, then priority, then
// earlier start.

#include <algorithm>
#include <array>
#include <cctype>
#include <istream>
#include <map>
#include <memory>
#include <optional>
#include <regex>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <unordered_set>
#include <utility>
#include <vector>

#include "binaryshield/error.hpp"

namespace binaryshield {

enum class EntityType {
  kPerson,
  kEmail,
  kPhone,
  kSsn,
  kCreditCard,
  kIpAddress,
  kUrl,
  kDate,
  kLocation,
  kOrganization,
  kAmount,
  kAccount,
};

inline constexpr std::size_t kEntityTypeCount = 12;

inline constexpr std::array<std::string_view, kEntityTypeCount> kEntityNames = {
    "PERSON",   "EMAIL", "PHONE",    "SSN",          "CREDIT_CARD", "IP_ADDRESS",
    "URL",      "DATE",  "LOCATION", "ORGANIZATION", "AMOUNT",      "ACCOUNT"};

constexpr std::string_view entity_name(EntityType t) noexcept {
  return kEntityNames[static_cast<std::size_t>(t)];
}

inline std::optional<EntityType> parse_entity_type(std::string_view name) {
  for (std::size_t i = 0; i < kEntityTypeCount; ++i) {
    if (kEntityNames[i] == name) return static_cast<EntityType>(i);
  }
  return std::nullopt;
}

inline std::string placeholder(EntityType t) {
  return "[" + std::string(entity_name(t)) + "]";
}

struct EntitySpan {
  std::size_t start = 0;
  std::size_t end = 0;  // exclusive
  EntityType type = EntityType::kPerson;
  std::string matched_text;

  std::size_t length() const noexcept { return end - start; }
  friend bool operator==(const EntitySpan&, const EntitySpan&) = default;
};

/// Per-type tallies, indexed by EntityType.
class EntityCounts {
 public:
  std::size_t operator[](EntityType t) const noexcept {
    return counts_[static_cast<std::size_t>(t)];
  }
  std::size_t& operator[](EntityType t) noexcept {
    return counts_[static_cast<std::size_t>(t)];
  }
  std::size_t total() const noexcept {
    std::size_t n = 0;
    for (const auto c : counts_) n += c;
    return n;
  }
  EntityCounts& operator+=(const EntityCounts& o) noexcept {
    for (std::size_t i = 0; i < kEntityTypeCount; ++i) counts_[i] += o.counts_[i];
    return *this;
  }
  /// Nonzero entries keyed by entity name.
  std::map<std::string, std::size_t> nonzero() const {
    std::map<std::string, std::size_t> out;
    for (std::size_t i = 0; i < kEntityTypeCount; ++i) {
      if (counts_[i]) out.emplace(kEntityNames[i], counts_[i]);
    }
    return out;
  }
  friend bool operator==(const EntityCounts&, const EntityCounts&) = default;

 private:
  std::array<std::size_t, kEntityTypeCount> counts_{};
};

class Redactor;

/// Text that has been through a Redactor. Only a Redactor (or an explicit
/// assume_redacted for pre-sanitized datasets) can produce one, so APIs that
/// take RedactedPrompt cannot be handed raw prompts by accident.
class RedactedPrompt {
 public:
  const std::string& text() const noexcept { return text_; }
  const EntityCounts& entity_counts() const noexcept { return counts_; }
  std::size_t original_length() const noexcept { return original_length_; }

  /// For corpora already sanitized upstream (e.g. loaded from a redacted
  /// dataset). Counts are zero.
  static RedactedPrompt assume_redacted(std::string text) {
    const auto n = text.size();
    return RedactedPrompt(std::move(text), {}, n);
  }

 private:
  friend class Redactor;
  RedactedPrompt(std::string text, EntityCounts counts, std::size_t original)
      : text_(std::move(text)), counts_(counts), original_length_(original) {}

  std::string text_;
  EntityCounts counts_;
  std::size_t original_length_ = 0;
};

/// Resolves overlapping candidates: longer span, then lower priority value,
/// then earlier start. Result is sorted by start.
struct Candidate {
  EntitySpan span;
  int priority = 0;
};

inline std::vector<EntitySpan> resolve_overlaps(std::vector<Candidate> cands) {
  std::sort(cands.begin(), cands.end(), [](const Candidate& a, const Candidate& b) {
    if (a.span.length() != b.span.length()) return a.span.length() > b.span.length();
    if (a.priority != b.priority) return a.priority < b.priority;
    if (a.span.start != b.span.start) return a.span.start < b.span.start;
    return static_cast<int>(a.span.type) < static_cast<int>(b.span.type);
  });
  std::vector<EntitySpan> accepted;
  for (auto& c : cands) {
    const bool clash = std::any_of(accepted.begin(), accepted.end(), [&](const EntitySpan& s) {
      return c.span.start < s.end && s.start < c.span.end;
    });
    if (!clash) accepted.push_back(std::move(c.span));
  }
  std::sort(accepted.begin(), accepted.end(),
            [](const EntitySpan& a, const EntitySpan& b) { return a.start < b.start; });
  return accepted;
}

/// Pluggable detector. Implementations must be immutable after construction.
class Redactor {
 public:
  virtual ~Redactor() = default;

  virtual std::vector<EntitySpan> detect(std::string_view text) const = 0;

  /// Replaces every detected span with its placeholder, right to left, and
  /// repeats until detection finds nothing, so the output is a fixed point.
  RedactedPrompt redact(std::string_view text) const {
    std::string current(text);
    EntityCounts counts;
    for (int pass = 0; pass < kMaxPasses; ++pass) {
      const auto spans = detect(current);
      if (spans.empty()) break;
      for (auto it = spans.rbegin(); it != spans.rend(); ++it) {
        current.replace(it->start, it->length(), placeholder(it->type));
        ++counts[it->type];
      }
    }
    return RedactedPrompt(std::move(current), counts, text.size());
  }

 private:
  static constexpr int kMaxPasses = 8;
};

// ---------------------------------------------------------------------------
// Validators

inline std::string digits_of(std::string_view s) {
  std::string d;
  for (const char c : s) {
    if (c >= '0' && c <= '9') d += c;
  }
  return d;
}

inline bool luhn_valid(std::string_view text) {
  const std::string d = digits_of(text);
  if (d.size() < 13 || d.size() > 19) return false;
  int sum = 0;
  bool dbl = false;
  for (auto it = d.rbegin(); it != d.rend(); ++it) {
    int v = *it - '0';
    if (dbl) {
      v *= 2;
      if (v > 9) v -= 9;
    }
    sum += v;
    dbl = !dbl;
  }
  return sum % 10 == 0;
}

/// Area 001-899 except 666, group 01-99, serial 0001-9999.
inline bool ssn_valid(std::string_view text) {
  const std::string d = digits_of(text);
  if (d.size() != 9) return false;
  const int area = std::stoi(d.substr(0, 3));
  const int group = std::stoi(d.substr(3, 2));
  const int serial = std::stoi(d.substr(5, 4));
  return area != 0 && area != 666 && area < 900 && group != 0 && serial != 0;
}

inline bool ipv4_valid(std::string_view text) {
  int octets = 0;
  std::size_t i = 0;
  while (i <= text.size()) {
    const std::size_t dot = text.find('.', i);
    const std::string_view part =
        text.substr(i, dot == std::string_view::npos ? std::string_view::npos : dot - i);
    if (part.empty() || part.size() > 3) return false;
    if (part.size() > 1 && part[0] == '0') return false;
    int v = 0;
    for (const char c : part) {
      if (c < '0' || c > '9') return false;
      v = v * 10 + (c - '0');
    }
    if (v > 255) return false;
    ++octets;
    if (dot == std::string_view::npos) break;
    i = dot + 1;
  }
  return octets == 4;
}

/// Numeric dates only (YYYY-MM-DD, M/D/Y); month-name forms always pass.
inline bool date_valid(std::string_view text) {
  if (text.empty() || !std::isdigit(static_cast<unsigned char>(text[0]))) return true;
  int parts[3] = {0, 0, 0};
  int n = 0;
  std::size_t first_len = 0;
  std::size_t len = 0;
  for (const char c : text) {
    if (c >= '0' && c <= '9') {
      parts[n] = parts[n] * 10 + (c - '0');
      ++len;
    } else {
      if (n == 0) first_len = len;
      if (++n > 2) return false;
    }
  }
  int month, day;
  if (first_len == 4) {
    month = parts[1];
    day = parts[2];
  } else {
    month = parts[0];
    day = parts[1];
  }
  return month >= 1 && month <= 12 && day >= 1 && day <= 31;
}

// ---------------------------------------------------------------------------
// Rule set

inline constexpr std::string_view kDefaultPiiRules = R"RULES(# BinaryShield PII rule set.
# Syntax:
#   version 1
#   rule    <ENTITY> <priority> <validator> <ECMAScript regex>
#   matcher <ENTITY> <priority> person | lexicon:<list>
#   list    <name> <comma-separated entries>
# Lower priority wins ties between equal-length overlapping matches.
version 1

matcher PERSON 0 person
rule EMAIL 1 none [A-Za-z0-9._%+-]+@[A-Za-z0-9-]+(?:\.[A-Za-z0-9-]+)*\.[A-Za-z]{2,}
rule PHONE 2 none (?:\+1[-. ]?)?(?:\(\d{3}\) ?|\b\d{3}[-. ])\d{3}[-. ]\d{4}\b
rule SSN 3 ssn \b\d{3}-\d{2}-\d{4}\b
rule CREDIT_CARD 4 luhn \b\d(?:[ -]?\d){12,18}\b
rule IP_ADDRESS 5 ipv4 \b\d{1,3}\.\d{1,3}\.\d{1,3}\.\d{1,3}\b
rule URL 6 none \b(?:https?://|www\.)[^\s<>"']*[^\s<>"'.,;:!?)\]]
rule DATE 7 date \b\d{4}-\d{2}-\d{2}\b
rule DATE 7 date \b\d{1,2}/\d{1,2}/\d{2,4}\b
rule DATE 7 none \b(?:January|February|March|April|May|June|July|August|September|October|November|December) \d{1,2}(?:st|nd|rd|th)?(?:, \d{4})?\b
matcher LOCATION 8 lexicon:locations
matcher ORGANIZATION 9 lexicon:organizations
rule ORGANIZATION 9 none \b(?:[A-Z][A-Za-z&]+ )+(?:Inc|Corp|Corporation|LLC|Ltd|Bank|Group|Foundation)\b
rule AMOUNT 10 none [$€£] ?\d[\d,]*(?:\.\d+)?(?: ?(?:k|K|million|billion)\b)?
rule AMOUNT 10 none \b\d[\d,]*(?:\.\d+)? ?(?:USD|EUR|GBP|dollars|euros)\b
rule ACCOUNT 11 none \b\d{6,}\b

list first_names James,John,Robert,Michael,David,William,Richard,Joseph,Thomas,Charles,Christopher,Daniel,Matthew,Anthony,Donald,Steven,Paul,Andrew,Joshua,Kenneth,Kevin,Brian,George,Timothy,Ronald,Edward,Jason,Jeffrey,Ryan,Jacob,Gary,Nicholas,Eric,Jonathan,Stephen,Larry,Justin,Scott,Brandon,Benjamin,Samuel,Gregory,Alexander,Patrick,Jack,Dennis,Jerry,Tyler,Aaron,Jose,Adam,Nathan,Henry,Zachary,Douglas,Peter,Kyle,Noah,Ethan,Jeremy,Christian,Walter,Keith,Austin,Roger,Terry,Sean,Gerald,Carl,Dylan,Harold,Jordan,Jesse,Bryan,Lawrence,Arthur,Gabriel,Bruce,Logan,Albert,Juan,Elijah,Mary,Patricia,Jennifer,Linda,Elizabeth,Barbara,Susan,Jessica,Sarah,Karen,Lisa,Nancy,Betty,Sandra,Margaret,Ashley,Kimberly,Emily,Donna,Michelle,Carol,Amanda,Melissa,Deborah,Stephanie,Dorothy,Rebecca,Sharon,Laura,Cynthia,Amy,Kathleen,Angela,Shirley,Brenda,Emma,Anna,Pamela,Nicole,Samantha,Katherine,Christine,Helen,Debra,Rachel,Carolyn,Janet,Maria,Catherine,Heather,Diane,Olivia,Julie,Joyce,Victoria,Ruth,Virginia,Lauren,Kelly,Christina,Joan,Evelyn,Judith,Andrea,Hannah,Megan,Cheryl,Jacqueline,Martha,Madison,Teresa,Gloria,Sara,Janice,Ann,Kathryn,Abigail,Sophia,Frances,Jean,Alice,Judy,Isabella,Julia,Denise,Amber,Danielle,Marilyn,Beverly,Charlotte,Natalie,Theresa,Diana,Brittany,Doris,Kayla,Alexis,Lori,Priya,Wei,Mohammed,Ahmed,Fatima,Aisha,Raj,Ravi,Carlos,Luis,Sofia,Lucas,Liam,Mia,Chloe
list last_names Smith,Johnson,Williams,Jones,Garcia,Miller,Davis,Rodriguez,Martinez,Hernandez,Lopez,Gonzalez,Wilson,Anderson,Taylor,Thomas,Moore,Jackson,Martin,Lee,Perez,Thompson,Harris,Sanchez,Clark,Ramirez,Lewis,Robinson,Walker,Allen,Wright,Scott,Torres,Nguyen,Hill,Flores,Adams,Nelson,Baker,Hall,Rivera,Campbell,Mitchell,Carter,Roberts,Gomez,Phillips,Evans,Turner,Diaz,Parker,Cruz,Edwards,Collins,Reyes,Stewart,Morris,Morales,Murphy,Cook,Rogers,Gutierrez,Ortiz,Morgan,Cooper,Peterson,Bailey,Reed,Kelly,Howard,Ramos,Kim,Cox,Ward,Richardson,Watson,Brooks,Chavez,Wood,Bennett,Gray,Mendoza,Ruiz,Hughes,Price,Alvarez,Castillo,Sanders,Patel,Myers,Long,Ross,Foster,Jimenez,Chen,Wang,Singh,Kumar,Khan,Schmidt,Muller
list titles Mr,Mrs,Ms,Miss,Dr,Prof
list locations New York,Los Angeles,San Francisco,Chicago,Seattle,Boston,Houston,Dallas,Miami,Atlanta,Denver,Phoenix,London,Paris,Berlin,Madrid,Rome,Tokyo,Beijing,Shanghai,Mumbai,Delhi,Sydney,Toronto,Vancouver,Dublin,Amsterdam,Singapore,Hong Kong,California,Texas,Florida,Washington,Canada,Mexico,Germany,France,Spain,Italy,Japan,China,India,Australia,Brazil,Ireland,United States,United Kingdom
list organizations Microsoft,Google,Amazon,Apple,Meta,OpenAI,Anthropic,IBM,Oracle,Intel,Nvidia,Netflix,Tesla,Walmart,Visa,Mastercard,PayPal,Chase,Citibank,Wells Fargo,Bank of America,Goldman Sachs,Morgan Stanley,HSBC,Barclays,FBI,CIA,IRS,NASA
)RULES";

enum class Validator { kNone, kLuhn, kSsn, kIpv4, kDate };

inline std::optional<Validator> parse_validator(std::string_view name) {
  if (name == "none") return Validator::kNone;
  if (name == "luhn") return Validator::kLuhn;
  if (name == "ssn") return Validator::kSsn;
  if (name == "ipv4") return Validator::kIpv4;
  if (name == "date") return Validator::kDate;
  return std::nullopt;
}

inline bool run_validator(Validator v, std::string_view text) {
  switch (v) {
    case Validator::kNone: return true;
    case Validator::kLuhn: return luhn_valid(text);
    case Validator::kSsn: return ssn_valid(text);
    case Validator::kIpv4: return ipv4_valid(text);
    case Validator::kDate: return date_valid(text);
  }
  return false;
}

struct RegexRule {
  EntityType type;
  int priority;
  Validator validator;
  std::string pattern;
  std::regex compiled;
};

struct MatcherRule {
  EntityType type;
  int priority;
  std::string kind;  // "person" or "lexicon:<list>"
};

/// Parsed, compiled rule configuration. Immutable once built.
class RuleSet {
 public:
  static RuleSet parse(std::string_view config) {
    RuleSet rs;
    std::istringstream in{std::string(config)};
    std::string line;
    std::size_t lineno = 0;
    bool saw_version = false;
    while (std::getline(in, line)) {
      ++lineno;
      if (!line.empty() && line.back() == '\r') line.pop_back();
      std::string_view view(line);
      while (!view.empty() && (view.front() == ' ' || view.front() == '\t')) view.remove_prefix(1);
      if (view.empty() || view.front() == '#') continue;
      std::istringstream ls{std::string(view)};
      std::string keyword;
      ls >> keyword;
      if (keyword == "version") {
        int v = 0;
        ls >> v;
        if (v != 1) throw SchemaError(lineno, "unsupported rule-set version");
        saw_version = true;
      } else if (keyword == "rule") {
        std::string type_name, validator_name;
        int priority = 0;
        if (!(ls >> type_name >> priority >> validator_name)) {
          throw SchemaError(lineno, "rule needs <ENTITY> <priority> <validator> <pattern>");
        }
        std::string pattern;
        std::getline(ls >> std::ws, pattern);
        const auto type = parse_entity_type(type_name);
        if (!type) throw SchemaError(lineno, "unknown entity type '" + type_name + "'");
        const auto validator = parse_validator(validator_name);
        if (!validator) throw SchemaError(lineno, "unknown validator '" + validator_name + "'");
        if (pattern.empty()) throw SchemaError(lineno, "empty pattern");
        std::regex compiled;
        try {
          compiled = std::regex(pattern, std::regex::ECMAScript | std::regex::optimize);
        } catch (const std::regex_error& e) {
          throw SchemaError(lineno, "bad pattern: " + std::string(e.what()));
        }
        rs.regex_rules_.push_back({*type, priority, *validator, pattern, std::move(compiled)});
      } else if (keyword == "matcher") {
        std::string type_name, kind;
        int priority = 0;
        if (!(ls >> type_name >> priority >> kind)) {
          throw SchemaError(lineno, "matcher needs <ENTITY> <priority> <kind>");
        }
        const auto type = parse_entity_type(type_name);
        if (!type) throw SchemaError(lineno, "unknown entity type '" + type_name + "'");
        if (kind != "person" && kind.rfind("lexicon:", 0) != 0) {
          throw SchemaError(lineno, "unknown matcher kind '" + kind + "'");
        }
        rs.matchers_.push_back({*type, priority, kind});
      } else if (keyword == "list") {
        std::string name, rest;
        ls >> name;
        std::getline(ls >> std::ws, rest);
        auto& entries = rs.lists_[name];
        std::size_t pos = 0;
        while (pos <= rest.size()) {
          const std::size_t comma = rest.find(',', pos);
          std::string item = rest.substr(pos, comma == std::string::npos ? std::string::npos : comma - pos);
          while (!item.empty() && item.back() == ' ') item.pop_back();
          while (!item.empty() && item.front() == ' ') item.erase(item.begin());
          if (!item.empty()) entries.push_back(std::move(item));
          if (comma == std::string::npos) break;
          pos = comma + 1;
        }
      } else {
        throw SchemaError(lineno, "unknown directive '" + keyword + "'");
      }
    }
    if (!saw_version) throw SchemaError(0, "rule set lacks a 'version' line");
    for (const auto& m : rs.matchers_) {
      if (m.kind.rfind("lexicon:", 0) == 0 && !rs.lists_.count(m.kind.substr(8))) {
        throw SchemaError(0, "matcher refers to undefined list '" + m.kind.substr(8) + "'");
      }
    }
    return rs;
  }

  static const RuleSet& defaults() {
    static const RuleSet rs = parse(kDefaultPiiRules);
    return rs;
  }

  const std::vector<RegexRule>& regex_rules() const noexcept { return regex_rules_; }
  const std::vector<MatcherRule>& matchers() const noexcept { return matchers_; }

  const std::vector<std::string>& list(const std::string& name) const {
    static const std::vector<std::string> empty;
    const auto it = lists_.find(name);
    return it == lists_.end() ? empty : it->second;
  }

 private:
  std::vector<RegexRule> regex_rules_;
  std::vector<MatcherRule> matchers_;
  std::map<std::string, std::vector<std::string>> lists_;
};

/// Deterministic rule engine: regexes with validators, a dictionary-driven
/// person-name matcher and exact lexicon matchers.
class RuleRedactor final : public Redactor {
 public:
  explicit RuleRedactor(RuleSet rules = RuleSet::defaults()) : rules_(std::move(rules)) {
    const auto load = [](const std::vector<std::string>& v) {
      return std::unordered_set<std::string>(v.begin(), v.end());
    };
    first_names_ = load(rules_.list("first_names"));
    last_names_ = load(rules_.list("last_names"));
    titles_ = load(rules_.list("titles"));
  }

  const RuleSet& rules() const noexcept { return rules_; }

  std::vector<EntitySpan> detect(std::string_view text) const override {
    return resolve_overlaps(candidates(text));
  }

  /// Every raw candidate before overlap resolution.
  std::vector<Candidate> candidates(std::string_view text) const {
    std::vector<Candidate> out;
    for (const auto& rule : rules_.regex_rules()) {
      using It = std::regex_iterator<std::string_view::const_iterator>;
      for (It it(text.begin(), text.end(), rule.compiled), end; it != end; ++it) {
        const auto& m = *it;
        if (m.length(0) == 0) continue;
        const auto start = static_cast<std::size_t>(m.position(0));
        const auto len = static_cast<std::size_t>(m.length(0));
        const std::string_view matched = text.substr(start, len);
        if (!run_validator(rule.validator, matched)) continue;
        out.push_back({{start, start + len, rule.type, std::string(matched)}, rule.priority});
      }
    }
    for (const auto& m : rules_.matchers()) {
      if (m.kind == "person") {
        person_candidates(text, m, out);
      } else {
        lexicon_candidates(text, m, rules_.list(m.kind.substr(8)), out);
      }
    }
    return out;
  }

 private:
  struct Word {
    std::size_t start;
    std::size_t end;
  };

  static bool is_alpha(char c) noexcept {
    return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z');
  }

  /// Leading uppercase letter followed by at least one lowercase letter.
  static bool capitalized(std::string_view w) noexcept {
    if (w.size() < 2 || !(w[0] >= 'A' && w[0] <= 'Z')) return false;
    return std::any_of(w.begin() + 1, w.end(), [](char c) { return c >= 'a' && c <= 'z'; });
  }

  void person_candidates(std::string_view text, const MatcherRule& rule,
                         std::vector<Candidate>& out) const {
    std::vector<Word> words;
    for (std::size_t i = 0; i < text.size();) {
      if (!is_alpha(text[i])) {
        ++i;
        continue;
      }
      std::size_t j = i;
      while (j < text.size() && is_alpha(text[j])) ++j;
      // Skip words glued to digits or other word bytes (e.g. "abcJohn9").
      const bool glued_left = i > 0 && (std::isdigit(static_cast<unsigned char>(text[i - 1])) ||
                                        static_cast<unsigned char>(text[i - 1]) >= 0x80);
      const bool glued_right = j < text.size() && (std::isdigit(static_cast<unsigned char>(text[j])) ||
                                                   static_cast<unsigned char>(text[j]) >= 0x80);
      if (!glued_left && !glued_right) words.push_back({i, j});
      i = j;
    }
    const auto str = [&](const Word& w) { return std::string(text.substr(w.start, w.end - w.start)); };
    const auto emit = [&](std::size_t s, std::size_t e) {
      out.push_back({{s, e, rule.type, std::string(text.substr(s, e - s))}, rule.priority});
    };
    for (std::size_t k = 0; k < words.size(); ++k) {
      const std::string w = str(words[k]);
      if (!capitalized(w)) continue;
      const bool first = first_names_.count(w) > 0;
      if (first) emit(words[k].start, words[k].end);
      if (k + 1 < words.size()) {
        const Word& next = words[k + 1];
        const std::string nw = str(next);
        const std::string_view gap = text.substr(words[k].end, next.start - words[k].end);
        if (capitalized(nw)) {
          if (gap == " " && (first || last_names_.count(nw))) emit(words[k].start, next.end);
          if ((gap == " " || gap == ". ") && titles_.count(w)) emit(words[k].start, next.end);
        }
      }
    }
  }

  static void lexicon_candidates(std::string_view text, const MatcherRule& rule,
                                 const std::vector<std::string>& entries,
                                 std::vector<Candidate>& out) {
    for (const auto& entry : entries) {
      for (std::size_t pos = text.find(entry); pos != std::string_view::npos;
           pos = text.find(entry, pos + 1)) {
        const std::size_t end = pos + entry.size();
        const bool left_ok = pos == 0 || !is_alpha(text[pos - 1]);
        const bool right_ok = end == text.size() || !is_alpha(text[end]);
        if (left_ok && right_ok) {
          out.push_back({{pos, end, rule.type, entry}, rule.priority});
        }
      }
    }
  }

  RuleSet rules_;
  std::unordered_set<std::string> first_names_;
  std::unordered_set<std::string> last_names_;
  std::unordered_set<std::string> titles_;
};

/// Accumulates detect() counts over a corpus, with a tally of records that
/// could not be read.
class EntityHistogram {
 public:
  void add(const Redactor& redactor, std::string_view text) {
    for (const auto& span : redactor.detect(text)) ++counts_[span.type];
    ++records_;
  }
  void add_unreadable() noexcept { ++unreadable_; }

  const EntityCounts& counts() const noexcept { return counts_; }
  std::size_t records() const noexcept { return records_; }
  std::size_t unreadable() const noexcept { return unreadable_; }

  /// entity_type,count for every type, in enum order.
  std::string to_csv() const {
    std::string csv = "entity_type,count\n";
    for (std::size_t i = 0; i < kEntityTypeCount; ++i) {
      csv += std::string(kEntityNames[i]) + "," +
             std::to_string(counts_[static_cast<EntityType>(i)]) + "\n";
    }
    return csv;
  }

 private:
  EntityCounts counts_;
  std::size_t records_ = 0;
  std::size_t unreadable_ = 0;
};

template <typename Range>
EntityCounts entity_histogram(const Redactor& redactor, const Range& corpus) {
  EntityHistogram h;
  for (const auto& text : corpus) h.add(redactor, text);
  return h.counts();
}

}  // namespace binaryshield
