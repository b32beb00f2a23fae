// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The drbml Authors

#include "drbml/response_parser.hpp"

#include <algorithm>
#include <cctype>

#include <json.hpp>

namespace drbml {

namespace {

using nlohmann::json;

bool is_alpha(char c) { return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z'); }
bool is_alnum(char c) { return is_alpha(c) || (c >= '0' && c <= '9'); }
bool is_space(char c) { return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v'; }
char ascii_lower(char c) { return (c >= 'A' && c <= 'Z') ? static_cast<char>(c - 'A' + 'a') : c; }

/// Lower-cased text with markdown emphasis removed, and the origin of every
/// kept byte.
struct Normalized {
  std::string text;
  std::vector<std::size_t> origin;

  TextSpan span(std::size_t begin, std::size_t end) const {
    if (text.empty()) return {};
    const std::size_t b = origin[std::min(begin, origin.size() - 1)];
    const std::size_t e = end == 0 ? b : origin[std::min(end, origin.size()) - 1] + 1;
    return {b, e};
  }
};

Normalized normalize(std::string_view raw) {
  Normalized n;
  n.text.reserve(raw.size());
  n.origin.reserve(raw.size());
  for (std::size_t i = 0; i < raw.size(); ++i) {
    const char c = raw[i];
    if (c == '*' || c == '`') continue;
    if (c == '_') {
      const bool inner = i > 0 && i + 1 < raw.size() && is_alnum(raw[i - 1]) && is_alnum(raw[i + 1]);
      if (!inner) continue;
    }
    n.text.push_back(ascii_lower(c));
    n.origin.push_back(i);
  }
  return n;
}

constexpr std::string_view kNegativeCues[] = {
    "no data race",
    "no data-race",
    "no race condition",
    "there are no data races",
    "does not contain",
    "doesn't contain",
    "does not have a data race",
    "doesn't have a data race",
    "does not have any data race",
    "does not exhibit",
    "doesn't exhibit",
    "not contain any data race",
    "free of data race",
    "data race free",
    "data-race-free",
    "race-free",
    "no potential data race",
    "don't think there",
    "do not think there",
    "no evidence of a data race",
};

constexpr std::string_view kAffirmativeCues[] = {
    "there is a data race",
    "there is a potential data race",
    "there are data races",
    "there are potential data races",
    "there is data race",
    "contains a data race",
    "contains data race",
    "contains a potential data race",
    "has a data race",
    "exhibits data race",
    "exhibits a data race",
    "data race is present",
    "data races are present",
    "data race exists",
    "data races exist",
    "data race occurs in",
    "data race in the",
    "leads to a data race",
    "causes a data race",
    "results in a data race",
};

struct CueCount {
  int affirmative = 0;
  int negative = 0;
  std::optional<std::pair<std::size_t, std::size_t>> first_affirmative;
  std::optional<std::pair<std::size_t, std::size_t>> first_negative;
};

// Affirmative matches that overlap a negative match do not count.
CueCount count_cues(std::string_view text, std::size_t offset) {
  CueCount count;
  std::vector<std::pair<std::size_t, std::size_t>> negative_spans;
  for (std::string_view cue : kNegativeCues) {
    for (std::size_t at = text.find(cue); at != std::string_view::npos; at = text.find(cue, at + 1)) {
      const bool overlaps = std::any_of(negative_spans.begin(), negative_spans.end(), [&](auto s) {
        return at < s.second && s.first < at + cue.size();
      });
      if (overlaps) continue;
      negative_spans.emplace_back(at, at + cue.size());
      ++count.negative;
      if (!count.first_negative || at + offset < count.first_negative->first) {
        count.first_negative = std::make_pair(at + offset, at + offset + cue.size());
      }
    }
  }
  std::vector<std::pair<std::size_t, std::size_t>> affirmative_spans;
  for (std::string_view cue : kAffirmativeCues) {
    for (std::size_t at = text.find(cue); at != std::string_view::npos; at = text.find(cue, at + 1)) {
      const auto overlaps = [&](const auto& spans) {
        return std::any_of(spans.begin(), spans.end(), [&](auto s) {
          return at < s.second && s.first < at + cue.size();
        });
      };
      if (overlaps(negative_spans) || overlaps(affirmative_spans)) continue;
      affirmative_spans.emplace_back(at, at + cue.size());
      ++count.affirmative;
      if (!count.first_affirmative || at + offset < count.first_affirmative->first) {
        count.first_affirmative = std::make_pair(at + offset, at + offset + cue.size());
      }
    }
  }
  return count;
}

// Layer 1: the first word, skipping punctuation, markdown and an
// "answer:"-style label.
std::optional<std::pair<Verdict, std::pair<std::size_t, std::size_t>>> leading_token(
    const std::string& text) {
  std::size_t pos = 0;
  for (int words = 0; words < 3; ++words) {
    while (pos < text.size() && !is_alpha(text[pos])) ++pos;
    const std::size_t begin = pos;
    while (pos < text.size() && is_alpha(text[pos])) ++pos;
    const std::string_view word(text.data() + begin, pos - begin);
    if (word.empty()) return std::nullopt;
    if (word == "yes") return std::make_pair(Verdict::Yes, std::make_pair(begin, pos));
    if (word == "no") return std::make_pair(Verdict::No, std::make_pair(begin, pos));
    const bool label = word == "answer" || word == "response" || word == "verdict" ||
                       word == "final" || word == "result";
    if (!label) return std::nullopt;
  }
  return std::nullopt;
}

std::size_t first_sentence_end(const std::string& text) {
  std::size_t pos = 0;
  while (pos < text.size() && is_space(text[pos])) ++pos;
  for (; pos < text.size(); ++pos) {
    const char c = text[pos];
    if (c == '\n') return pos;
    if ((c == '.' || c == '!' || c == '?') && (pos + 1 == text.size() || is_space(text[pos + 1]))) {
      return pos + 1;
    }
  }
  return text.size();
}

// Scans `"data_race": <value>` occurrences.
std::optional<std::pair<Verdict, std::pair<std::size_t, std::size_t>>> data_race_field(
    const std::string& text, std::vector<std::string>& diagnostics) {
  std::optional<Verdict> found;
  std::pair<std::size_t, std::size_t> where{};
  static constexpr std::string_view kKey = "data_race";
  for (std::size_t at = text.find(kKey); at != std::string::npos; at = text.find(kKey, at + 1)) {
    if (at == 0 || (text[at - 1] != '"' && text[at - 1] != '\'')) continue;
    std::size_t pos = at + kKey.size();
    if (pos >= text.size() || (text[pos] != '"' && text[pos] != '\'')) continue;
    ++pos;
    while (pos < text.size() && is_space(text[pos])) ++pos;
    if (pos >= text.size() || text[pos] != ':') continue;
    ++pos;
    while (pos < text.size() && (is_space(text[pos]) || text[pos] == '"' || text[pos] == '\'')) ++pos;
    const std::size_t begin = pos;
    while (pos < text.size() && is_alnum(text[pos])) ++pos;
    const std::string_view value(text.data() + begin, pos - begin);
    std::optional<Verdict> v;
    if (value == "1" || value == "true" || value == "yes") v = Verdict::Yes;
    if (value == "0" || value == "false" || value == "no") v = Verdict::No;
    if (!v) continue;
    if (found && *found != *v) {
      diagnostics.push_back("conflicting \"data_race\" fields in JSON");
      return std::nullopt;
    }
    if (!found) where = {at - 1, pos};
    found = v;
  }
  if (!found) return std::nullopt;
  return std::make_pair(*found, where);
}

// ---- pairs -------------------------------------------------------------

constexpr int kMaxDepth = 64;
constexpr std::size_t kMaxFragment = 1 << 20;

/// End (exclusive) of the balanced bracket group opening at `start`, if any.
std::optional<std::size_t> balanced_end(std::string_view text, std::size_t start) {
  std::vector<char> stack;
  char quote = 0;
  for (std::size_t i = start; i < text.size() && i - start < kMaxFragment; ++i) {
    const char c = text[i];
    if (quote != 0) {
      if (c == '\\') {
        ++i;
      } else if (c == quote) {
        quote = 0;
      } else if (c == '\n' && quote == '\'') {
        return std::nullopt;
      }
      continue;
    }
    if (c == '"') {
      quote = c;
    } else if (c == '\'' && !(i > start && is_alnum(text[i - 1]))) {
      quote = c;
    } else if (c == '{' || c == '[') {
      stack.push_back(c == '{' ? '}' : ']');
    } else if (c == '}' || c == ']') {
      if (stack.empty() || stack.back() != c) return std::nullopt;
      stack.pop_back();
      if (stack.empty()) return i + 1;
    }
  }
  return std::nullopt;
}

std::optional<std::string> as_string(const json& v) {
  if (v.is_string()) return v.get<std::string>();
  if (v.is_number_integer()) return std::to_string(v.get<long long>());
  return std::nullopt;
}

std::optional<int> as_int(const json& v) {
  if (v.is_number_integer()) {
    const long long x = v.get<long long>();
    if (x < 0 || x > 100000000) return std::nullopt;
    return static_cast<int>(x);
  }
  if (v.is_number_float()) {
    const double x = v.get<double>();
    if (!(x >= 0 && x <= 1e8) || x != static_cast<double>(static_cast<int>(x))) return std::nullopt;
    return static_cast<int>(x);
  }
  if (v.is_string()) {
    const std::string s = v.get<std::string>();
    if (s.empty() || s.size() > 9 || !std::all_of(s.begin(), s.end(), [](char c) { return c >= '0' && c <= '9'; })) {
      return std::nullopt;
    }
    return std::stoi(s);
  }
  return std::nullopt;
}

const json* first_key(const json& obj, std::initializer_list<const char*> keys) {
  for (const char* key : keys) {
    if (const auto it = obj.find(key); it != obj.end()) return &*it;
  }
  return nullptr;
}

// [a, b, c, d] and [[a, b], [c, d]] both flatten to a, b, c, d.
std::vector<json> flatten(const json& v) {
  std::vector<json> out;
  if (!v.is_array()) {
    out.push_back(v);
    return out;
  }
  for (const json& item : v) {
    if (item.is_array()) {
      for (const json& inner : item) out.push_back(inner);
    } else {
      out.push_back(item);
    }
  }
  return out;
}

void pairs_from_object(const json& obj, PairExtraction& out) {
  const json* names_field = first_key(obj, {"variable_names", "name", "names"});
  if (names_field == nullptr) return;
  const auto names = flatten(*names_field);
  const json* lines_field = first_key(obj, {"variable_locations", "line", "lines"});
  const json* cols_field = first_key(obj, {"col", "cols", "column", "columns"});
  const json* ops_field = first_key(obj, {"operation_types", "operation", "operations"});
  const auto lines = lines_field ? flatten(*lines_field) : std::vector<json>{};
  const auto cols = cols_field ? flatten(*cols_field) : std::vector<json>{};
  const auto ops = ops_field ? flatten(*ops_field) : std::vector<json>{};

  if (names.size() < 2) {
    out.diagnostics.push_back("pair object with fewer than two names: " + obj.dump(-1, ' ', false, nlohmann::json::error_handler_t::replace));
    return;
  }
  if (names.size() % 2 != 0) {
    out.diagnostics.push_back("odd number of names; last name ignored: " + obj.dump(-1, ' ', false, nlohmann::json::error_handler_t::replace));
  }
  const auto two_ints = [](const std::vector<json>& values, std::size_t k) -> std::optional<std::array<int, 2>> {
    if (values.size() < 2 * k + 2) return std::nullopt;
    const auto a = as_int(values[2 * k]);
    const auto b = as_int(values[2 * k + 1]);
    if (!a || !b) return std::nullopt;
    return std::array<int, 2>{*a, *b};
  };
  for (std::size_t k = 0; 2 * k + 1 < names.size(); ++k) {
    const auto first = as_string(names[2 * k]);
    const auto second = as_string(names[2 * k + 1]);
    if (!first || !second) {
      out.diagnostics.push_back("non-string variable name in: " + obj.dump(-1, ' ', false, nlohmann::json::error_handler_t::replace));
      continue;
    }
    ParsedPair pair;
    pair.names = {*first, *second};
    pair.lines = two_ints(lines, k);
    pair.cols = two_ints(cols, k);
    if (lines_field && !pair.lines) out.diagnostics.push_back("unusable line numbers in: " + obj.dump(-1, ' ', false, nlohmann::json::error_handler_t::replace));
    if (ops.size() >= 2 * k + 2) {
      const auto a = as_string(ops[2 * k]);
      const auto b = as_string(ops[2 * k + 1]);
      const auto op_a = a ? parse_access_op(*a) : std::nullopt;
      const auto op_b = b ? parse_access_op(*b) : std::nullopt;
      if (op_a && op_b) {
        pair.operations = std::array<AccessOp, 2>{*op_a, *op_b};
      } else {
        out.diagnostics.push_back("unrecognized operation types in: " + obj.dump(-1, ' ', false, nlohmann::json::error_handler_t::replace));
      }
    }
    out.pairs.push_back(std::move(pair));
  }
}

void walk(const json& v, int depth, PairExtraction& out) {
  if (depth > kMaxDepth) {
    out.diagnostics.push_back("JSON nesting too deep; remainder ignored");
    return;
  }
  if (v.is_object()) {
    if (first_key(v, {"variable_names", "name", "names"}) != nullptr) {
      pairs_from_object(v, out);
      return;
    }
    for (const auto& item : v) walk(item, depth + 1, out);
  } else if (v.is_array()) {
    for (const auto& item : v) walk(item, depth + 1, out);
  }
}

std::optional<json> parse_fragment(std::string_view fragment, bool& relaxed) {
  relaxed = false;
  json doc = json::parse(fragment, nullptr, false);
  if (!doc.is_discarded()) return doc;
  doc = json::parse(relax_json(fragment), nullptr, false);
  if (!doc.is_discarded()) {
    relaxed = true;
    return doc;
  }
  return std::nullopt;
}

std::string excerpt(std::string_view s) {
  constexpr std::size_t kMax = 120;
  if (s.size() <= kMax) return std::string(s);
  return std::string(s.substr(0, kMax)) + "...";
}

bool is_expr_char(char c) {
  return is_alnum(c) || c == '_' || c == '[' || c == ']' || c == '+' || c == '-' || c == '*' ||
         c == '/' || c == '.' || c == '>' || c == '(' || c == ')';
}

struct Mention {
  std::string expr;
  int line;
};

std::vector<Mention> prose_mentions(std::string_view raw) {
  std::string lowered(raw);
  std::transform(lowered.begin(), lowered.end(), lowered.begin(), ascii_lower);
  std::vector<Mention> mentions;
  static constexpr std::string_view kPhrases[] = {" at line ", " on line ", " in line "};
  std::vector<std::pair<std::size_t, std::size_t>> hits;
  for (std::string_view phrase : kPhrases) {
    for (std::size_t at = lowered.find(phrase); at != std::string::npos; at = lowered.find(phrase, at + 1)) {
      hits.emplace_back(at, phrase.size());
    }
  }
  std::sort(hits.begin(), hits.end());
  for (const auto& [at, len] : hits) {
    std::size_t pos = at + len;
    const std::size_t digits = pos;
    while (pos < raw.size() && raw[pos] >= '0' && raw[pos] <= '9' && pos - digits < 9) ++pos;
    if (pos == digits) continue;
    const int line = std::stoi(std::string(raw.substr(digits, pos - digits)));

    std::size_t end = at;
    char quote = 0;
    if (end > 0 && (raw[end - 1] == '\'' || raw[end - 1] == '"' || raw[end - 1] == '`')) {
      quote = raw[end - 1];
      --end;
    }
    std::size_t begin = end;
    while (begin > 0 && is_expr_char(raw[begin - 1]) && end - begin < 200) --begin;
    if (quote != 0 && !(begin > 0 && raw[begin - 1] == quote)) continue;
    while (begin < end && !(is_alpha(raw[begin]) || raw[begin] == '_')) ++begin;
    while (end > begin && (raw[end - 1] == '.' || raw[end - 1] == ',')) --end;
    if (begin >= end) continue;
    mentions.push_back({std::string(raw.substr(begin, end - begin)), line});
  }
  return mentions;
}

}  // namespace

std::string_view to_string(Verdict verdict) {
  switch (verdict) {
    case Verdict::Yes: return "YES";
    case Verdict::No: return "NO";
    case Verdict::Indeterminate: return "INDETERMINATE";
  }
  return "?";
}

std::optional<Verdict> parse_verdict_name(std::string_view text) {
  if (text == "YES") return Verdict::Yes;
  if (text == "NO") return Verdict::No;
  if (text == "INDETERMINATE") return Verdict::Indeterminate;
  return std::nullopt;
}

VerdictExtraction extract_verdict(std::string_view text) {
  VerdictExtraction out;
  const Normalized norm = normalize(text);

  if (const auto lead = leading_token(norm.text)) {
    out.verdict = lead->first;
    out.span = norm.span(lead->second.first, lead->second.second);
    return out;
  }

  const std::size_t sentence_end = first_sentence_end(norm.text);
  const CueCount first = count_cues(std::string_view(norm.text).substr(0, sentence_end), 0);
  if ((first.affirmative > 0) != (first.negative > 0)) {
    const bool yes = first.affirmative > 0;
    const auto where = yes ? *first.first_affirmative : *first.first_negative;
    out.verdict = yes ? Verdict::Yes : Verdict::No;
    out.span = norm.span(where.first, where.second);
    return out;
  }
  if (first.affirmative > 0 && first.negative > 0) {
    out.diagnostics.push_back("first sentence carries both affirmative and negative cues");
  }

  if (const auto field = data_race_field(norm.text, out.diagnostics)) {
    out.verdict = field->first;
    out.span = norm.span(field->second.first, field->second.second);
    return out;
  }

  const CueCount whole = count_cues(norm.text, 0);
  if (whole.affirmative != whole.negative) {
    const bool yes = whole.affirmative > whole.negative;
    const auto where = yes ? *whole.first_affirmative : *whole.first_negative;
    out.verdict = yes ? Verdict::Yes : Verdict::No;
    out.span = norm.span(where.first, where.second);
    out.diagnostics.push_back("verdict from whole-text cue count (" +
                              std::to_string(whole.affirmative) + " affirmative, " +
                              std::to_string(whole.negative) + " negative)");
    return out;
  }
  out.verdict = Verdict::Indeterminate;
  if (whole.affirmative == 0) {
    out.diagnostics.push_back("no yes/no verdict cue found");
  } else {
    out.diagnostics.push_back("conflicting verdict cues (" + std::to_string(whole.affirmative) +
                              " affirmative, " + std::to_string(whole.negative) + " negative)");
  }
  return out;
}

std::string relax_json(std::string_view fragment) {
  std::string converted;
  converted.reserve(fragment.size());
  char quote = 0;
  for (std::size_t i = 0; i < fragment.size(); ++i) {
    const char c = fragment[i];
    if (quote == '"') {
      converted.push_back(c);
      if (c == '\\' && i + 1 < fragment.size()) {
        converted.push_back(fragment[++i]);
      } else if (c == '"') {
        quote = 0;
      }
      continue;
    }
    if (quote == '\'') {
      if (c == '\\' && i + 1 < fragment.size()) {
        const char next = fragment[++i];
        if (next == '\'') {
          converted.push_back('\'');
        } else {
          converted.push_back('\\');
          converted.push_back(next);
        }
      } else if (c == '\'') {
        converted.push_back('"');
        quote = 0;
      } else if (c == '"') {
        converted += "\\\"";
      } else {
        converted.push_back(c);
      }
      continue;
    }
    if (c == '"' || c == '\'') {
      quote = c;
      converted.push_back('"');
      continue;
    }
    converted.push_back(c);
  }

  std::string out;
  out.reserve(converted.size());
  bool in_string = false;
  for (std::size_t i = 0; i < converted.size(); ++i) {
    const char c = converted[i];
    if (in_string) {
      out.push_back(c);
      if (c == '\\' && i + 1 < converted.size()) {
        out.push_back(converted[++i]);
      } else if (c == '"') {
        in_string = false;
      }
      continue;
    }
    if (c == '"') in_string = true;
    if (c == ',') {
      std::size_t j = i + 1;
      while (j < converted.size() && is_space(converted[j])) ++j;
      if (j < converted.size() && (converted[j] == '}' || converted[j] == ']')) continue;
    }
    out.push_back(c);
  }
  return out;
}

PairExtraction extract_pairs(std::string_view text) {
  PairExtraction out;
  bool saw_json = false;
  try {
    std::size_t pos = 0;
    while (pos < text.size()) {
      const std::size_t open = text.find_first_of("{[", pos);
      if (open == std::string_view::npos) break;
      const auto end = balanced_end(text, open);
      if (!end) {
        pos = open + 1;
        continue;
      }
      const std::string_view fragment = text.substr(open, *end - open);
      bool relaxed = false;
      const auto doc = parse_fragment(fragment, relaxed);
      if (!doc) {
        if (text[open] == '{') out.diagnostics.push_back("malformed JSON fragment: " + excerpt(fragment));
        pos = open + 1;
        continue;
      }
      if (doc->is_object() || (doc->is_array() && !doc->empty() &&
                               std::any_of(doc->begin(), doc->end(), [](const json& v) {
                                 return v.is_object() || v.is_array();
                               }))) {
        saw_json = true;
        if (relaxed) out.diagnostics.push_back("JSON accepted after lenient repair: " + excerpt(fragment));
        walk(*doc, 0, out);
        pos = *end;
      } else {
        pos = open + 1;
      }
    }

    if (out.pairs.empty()) {
      const auto mentions = prose_mentions(text);
      for (std::size_t k = 0; k + 1 < mentions.size(); k += 2) {
        ParsedPair pair;
        pair.names = {mentions[k].expr, mentions[k + 1].expr};
        pair.lines = std::array<int, 2>{mentions[k].line, mentions[k + 1].line};
        out.pairs.push_back(std::move(pair));
      }
      if (!out.pairs.empty()) {
        out.diagnostics.push_back("pairs recovered from prose mentions (" +
                                  std::to_string(mentions.size()) + " mention(s))");
      }
      if (mentions.size() % 2 == 1) {
        out.diagnostics.push_back("unpaired prose mention: " + mentions.back().expr);
      }
    }
  } catch (const std::exception& e) {
    out.diagnostics.push_back(std::string("pair extraction aborted: ") + e.what());
  }
  if (out.pairs.empty()) {
    out.diagnostics.push_back(saw_json ? "JSON found but it holds no variable pairs"
                                       : "no variable pairs found");
  }
  return out;
}

ParsedVerdict parse_response(std::string_view text) {
  ParsedVerdict parsed;
  VerdictExtraction verdict = extract_verdict(text);
  PairExtraction pairs = extract_pairs(text);
  parsed.verdict = verdict.verdict;
  parsed.source_span = verdict.span;
  parsed.diagnostics = std::move(verdict.diagnostics);
  parsed.pairs = std::move(pairs.pairs);
  if (!parsed.pairs.empty()) {
    parsed.diagnostics.insert(parsed.diagnostics.end(), pairs.diagnostics.begin(),
                              pairs.diagnostics.end());
  }
  if (parsed.verdict == Verdict::No && !parsed.pairs.empty()) {
    parsed.diagnostics.push_back("variable pairs reported alongside a NO verdict");
  }
  return parsed;
}

}  // namespace drbml
