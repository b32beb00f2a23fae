// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The drbml Authors

#pragma once

#include <array>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "drbml/corpus.hpp"

namespace drbml {

enum class Verdict { Yes, No, Indeterminate };

std::string_view to_string(Verdict verdict);
std::optional<Verdict> parse_verdict_name(std::string_view text);

/// Byte range [begin, end) in the original response text.
struct TextSpan {
  std::size_t begin = 0;
  std::size_t end = 0;
  bool operator==(const TextSpan&) const = default;
};

/// A pair as reported by a model: names always, the rest when given.
struct ParsedPair {
  std::array<std::string, 2> names;
  std::optional<std::array<int, 2>> lines;
  std::optional<std::array<int, 2>> cols;
  std::optional<std::array<AccessOp, 2>> operations;

  bool operator==(const ParsedPair&) const = default;
};

struct VerdictExtraction {
  Verdict verdict = Verdict::Indeterminate;
  std::optional<TextSpan> span;
  std::vector<std::string> diagnostics;
};

struct PairExtraction {
  std::vector<ParsedPair> pairs;
  std::vector<std::string> diagnostics;
};

struct ParsedVerdict {
  Verdict verdict = Verdict::Indeterminate;
  std::vector<ParsedPair> pairs;
  std::vector<std::string> diagnostics;
  std::optional<TextSpan> source_span;

  bool operator==(const ParsedVerdict&) const = default;
};

/// Layered yes/no extraction: leading token, then first sentence, then the
/// `"data_race"` field of any embedded JSON, then whole-text cue counting.
/// The first layer that decides wins. Never throws.
VerdictExtraction extract_verdict(std::string_view text);

/// Finds JSON objects or arrays in the text (fenced or bare) in either the
/// name/line/col/operation_types or the variable_names/variable_locations/
/// operation_types schema. Falls back to `<expr> at line <n>` prose
/// mentions. Never throws.
PairExtraction extract_pairs(std::string_view text);

/// Both extractions; pairs in a NO answer are kept and flagged.
ParsedVerdict parse_response(std::string_view text);

/// Lenient pre-pass: single-quoted strings become double-quoted and
/// trailing commas before `}` / `]` are dropped. Nothing else is repaired.
std::string relax_json(std::string_view fragment);

}  // namespace drbml
