// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The drbml Authors

#include "drbml/corpus.hpp"
#include "drbml/error.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <fstream>
#include <regex>
#include <sstream>

#include <json.hpp>

namespace drbml {

namespace {

std::string lower(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return out;
}

std::string_view trim(std::string_view s) {
  const auto not_space = [](char c) { return std::isspace(static_cast<unsigned char>(c)) == 0; };
  while (!s.empty() && !not_space(s.front())) s.remove_prefix(1);
  while (!s.empty() && !not_space(s.back())) s.remove_suffix(1);
  return s;
}

std::optional<int> parse_positive(std::string_view s) {
  s = trim(s);
  int value = 0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), value);
  if (ec != std::errc() || ptr != s.data() + s.size() || value <= 0) return std::nullopt;
  return value;
}

// `<expr>@<line>:<col>:<op>`
struct AnnotatedAccess {
  std::string expr;
  int line;
  int col;
  AccessOp op;
};

AnnotatedAccess parse_access(std::string_view side, std::string_view whole_line) {
  side = trim(side);
  while (!side.empty() && (side.back() == '.' || side.back() == ',' || side.back() == ';')) {
    side.remove_suffix(1);
    side = trim(side);
  }
  const std::string text(whole_line);
  const std::size_t at = side.rfind('@');
  if (at == std::string_view::npos) throw MalformedAnnotation(text, "missing '@'");
  const std::string_view expr = trim(side.substr(0, at));
  if (expr.empty()) throw MalformedAnnotation(text, "empty expression");
  const std::string_view location = side.substr(at + 1);
  const std::size_t c1 = location.find(':');
  const std::size_t c2 = c1 == std::string_view::npos ? c1 : location.find(':', c1 + 1);
  if (c2 == std::string_view::npos) throw MalformedAnnotation(text, "expected line:col:op");
  const auto line = parse_positive(location.substr(0, c1));
  const auto col = parse_positive(location.substr(c1 + 1, c2 - c1 - 1));
  if (!line || !col) throw MalformedAnnotation(text, "line and column must be positive integers");
  const std::string_view op_text = trim(location.substr(c2 + 1));
  if (op_text.size() != 1) throw MalformedAnnotation(text, "operation must be R or W");
  const auto op = parse_access_op(op_text);
  if (!op) throw MalformedAnnotation(text, "operation must be R or W");
  return {std::string(expr), *line, *col, *op};
}

}  // namespace

char to_char(AccessOp op) { return op == AccessOp::Write ? 'W' : 'R'; }

std::optional<AccessOp> parse_access_op(std::string_view text) {
  const std::string t = lower(trim(text));
  if (t == "w" || t == "write") return AccessOp::Write;
  if (t == "r" || t == "read") return AccessOp::Read;
  return std::nullopt;
}

std::string to_string(const Diagnostic& d) {
  return std::string(d.severity == Diagnostic::Severity::Error ? "error" : "warning") + " [" +
         d.code + "] " + d.message;
}

Microbenchmark Microbenchmark::from_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot read source file " + path.string());
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return {path, buffer.str(), path.filename().string()};
}

FilenameInfo parse_filename(std::string_view filename) {
  const std::string base = std::filesystem::path(std::string(filename)).filename().string();
  static const std::regex pattern(R"(^DRB(\d+)-(.+)-([A-Za-z]+)\.(c|cpp)$)");
  std::smatch match;
  if (base.empty() || !std::regex_match(base, match, pattern)) {
    throw MalformedFilename(std::string(filename));
  }
  const std::string suffix = lower(match[3].str());
  if (suffix != "yes" && suffix != "no") throw MalformedFilename(std::string(filename));
  FilenameInfo info;
  info.index = std::stoi(match[1].str());
  info.mnemonic = match[2].str();
  info.race_flag = suffix == "yes" ? 1 : 0;
  return info;
}

std::vector<VarPair> parse_race_annotation(std::string_view comment_text) {
  static constexpr std::string_view kMarker = "data race pair";
  std::vector<VarPair> pairs;
  std::size_t start = 0;
  while (start <= comment_text.size()) {
    std::size_t end = comment_text.find('\n', start);
    if (end == std::string_view::npos) end = comment_text.size();
    const std::string_view line = comment_text.substr(start, end - start);
    start = end + 1;

    const std::string lowered = lower(line);
    const std::size_t marker = lowered.find(kMarker);
    if (marker == std::string::npos) continue;
    const std::size_t colon = lowered.find(':', marker + kMarker.size());
    if (colon == std::string::npos) throw MalformedAnnotation(std::string(trim(line)), "missing ':'");
    const std::string_view body = line.substr(colon + 1);
    const std::string body_lower = lower(body);

    std::size_t sep = body_lower.find(" vs.");
    std::size_t sep_len = 4;
    if (sep == std::string::npos) {
      sep = body_lower.find(" vs ");
      sep_len = 4;
    }
    if (sep == std::string::npos) throw MalformedAnnotation(std::string(trim(line)), "missing 'vs.'");

    const AnnotatedAccess lhs = parse_access(body.substr(0, sep), trim(line));
    const AnnotatedAccess rhs = parse_access(body.substr(sep + sep_len), trim(line));
    VarPair pair;
    pair.names = {lhs.expr, rhs.expr};
    pair.lines = {lhs.line, rhs.line};
    pair.cols = {lhs.col, rhs.col};
    pair.operations = {lhs.op, rhs.op};
    pairs.push_back(std::move(pair));
  }
  return pairs;
}

std::size_t utf8_length(std::string_view text) {
  std::size_t count = 0;
  for (unsigned char c : text) {
    if ((c & 0xC0U) != 0x80U) ++count;
  }
  return count;
}

LabelMetadata load_label_metadata(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot read label metadata " + path.string());
  LabelMetadata labels;
  try {
    const nlohmann::json doc = nlohmann::json::parse(in);
    for (const auto& [key, value] : doc.items()) labels[key] = value.get<std::string>();
  } catch (const nlohmann::json::exception& e) {
    throw DataError("invalid label metadata " + path.string() + ": " + e.what());
  }
  return labels;
}

BuiltEntry build_entry(const Microbenchmark& bench, int id, const LabelMetadata* labels) {
  const FilenameInfo info = parse_filename(bench.filename);
  StripResult stripped = strip_comments(bench.raw_source);
  std::vector<VarPair> pairs = parse_race_annotation(stripped.comments);

  BuiltEntry built;
  DrbMlEntry& entry = built.entry;
  entry.id = id;
  entry.name = bench.filename;
  entry.drb_code = bench.raw_source;
  entry.trimmed_code = std::move(stripped.trimmed_code);
  entry.code_len = utf8_length(entry.trimmed_code);
  entry.data_race = info.race_flag;

  if (labels != nullptr) {
    if (const auto it = labels->find(bench.filename); it != labels->end()) {
      entry.data_race_label = it->second;
    }
  }
  if (entry.data_race_label.empty()) entry.data_race_label = info.race_flag == 1 ? "Y?" : "N?";

  if (info.race_flag == 0) {
    if (!pairs.empty()) {
      built.diagnostics.push_back({Diagnostic::Severity::Warning, "pairs-on-race-free",
                                   bench.filename + ": " + std::to_string(pairs.size()) +
                                       " race annotation(s) ignored on a race-free benchmark"});
    }
    pairs.clear();
  }
  for (VarPair& pair : pairs) {
    const auto first = stripped.line_map.lookup(pair.lines[0]);
    const auto second = stripped.line_map.lookup(pair.lines[1]);
    if (first && second) pair.trimmed_lines = std::array<int, 2>{*first, *second};
  }
  entry.var_pairs = std::move(pairs);

  for (Diagnostic& d : validate_entry(entry)) built.diagnostics.push_back(std::move(d));
  return built;
}

std::vector<Diagnostic> validate_entry(const DrbMlEntry& entry) {
  using Severity = Diagnostic::Severity;
  std::vector<Diagnostic> out;
  const std::string who = entry.name.empty() ? "entry " + std::to_string(entry.id) : entry.name;
  const auto add = [&](Severity s, std::string code, std::string message) {
    out.push_back({s, std::move(code), who + ": " + std::move(message)});
  };

  if (entry.id < 1) add(Severity::Error, "bad-id", "ID must be a positive integer");
  if (entry.data_race != 0 && entry.data_race != 1) {
    add(Severity::Error, "bad-race-flag", "data_race must be 0 or 1");
  }
  if (entry.code_len != utf8_length(entry.trimmed_code)) {
    add(Severity::Error, "code-len-mismatch",
        "code_len " + std::to_string(entry.code_len) + " != trimmed length " +
            std::to_string(utf8_length(entry.trimmed_code)));
  }
  if (entry.data_race == 0 && !entry.var_pairs.empty()) {
    add(Severity::Error, "pairs-on-race-free", "var_pairs must be empty when data_race is 0");
  }
  if (entry.data_race == 1 && entry.var_pairs.empty()) {
    add(Severity::Warning, "race-without-pairs", "race-yes benchmark has no var_pairs annotation");
  }
  try {
    const StripResult restripped = strip_comments(entry.trimmed_code);
    if (restripped.trimmed_code != entry.trimmed_code) {
      add(Severity::Error, "residual-comment", "trimmed_code still contains comments");
    }
  } catch (const UnterminatedComment&) {
    add(Severity::Error, "residual-comment", "trimmed_code contains an unterminated comment");
  }

  std::size_t raw_lines = 0;
  if (!entry.drb_code.empty()) {
    raw_lines = static_cast<std::size_t>(std::count(entry.drb_code.begin(), entry.drb_code.end(), '\n'));
    if (entry.drb_code.back() != '\n') ++raw_lines;
  }
  std::size_t trimmed_lines = 0;
  if (!entry.trimmed_code.empty()) {
    trimmed_lines = static_cast<std::size_t>(
        std::count(entry.trimmed_code.begin(), entry.trimmed_code.end(), '\n'));
    if (entry.trimmed_code.back() != '\n') ++trimmed_lines;
  }

  for (std::size_t i = 0; i < entry.var_pairs.size(); ++i) {
    const VarPair& pair = entry.var_pairs[i];
    const std::string tag = "pair " + std::to_string(i);
    for (int side = 0; side < 2; ++side) {
      if (pair.names[side].empty()) add(Severity::Error, "empty-name", tag + " has an empty name");
      if (pair.lines[side] < 1 || pair.cols[side] < 1) {
        add(Severity::Error, "bad-location", tag + " has a non-positive line or column");
      }
      if (raw_lines > 0 && static_cast<std::size_t>(pair.lines[side]) > raw_lines) {
        add(Severity::Warning, "line-out-of-range",
            tag + " line " + std::to_string(pair.lines[side]) + " exceeds the source line count");
      }
      if (pair.trimmed_lines &&
          static_cast<std::size_t>((*pair.trimmed_lines)[side]) > trimmed_lines) {
        add(Severity::Warning, "line-out-of-range", tag + " trimmed line exceeds trimmed line count");
      }
    }
    if (pair.operations[0] != AccessOp::Write && pair.operations[1] != AccessOp::Write) {
      add(Severity::Warning, "no-write", tag + " has no write access");
    }
    if (!pair.trimmed_lines && entry.data_race == 1) {
      add(Severity::Warning, "unmapped-line", tag + " annotation lines do not map into trimmed code");
    }
  }
  return out;
}

std::vector<std::filesystem::path> list_sources(const std::filesystem::path& directory) {
  if (!std::filesystem::is_directory(directory)) {
    throw DataError("not a directory: " + directory.string());
  }
  std::vector<std::filesystem::path> files;
  for (const auto& item : std::filesystem::directory_iterator(directory)) {
    if (!item.is_regular_file()) continue;
    const std::string ext = item.path().extension().string();
    if (ext == ".c" || ext == ".cpp") files.push_back(item.path());
  }
  std::sort(files.begin(), files.end());
  return files;
}

std::size_t heuristic_token_estimate(std::string_view text) {
  return (utf8_length(text) + 3) / 4;
}

std::vector<DrbMlEntry> filter_by_token_budget(std::span<const DrbMlEntry> entries, long budget,
                                               const TokenEstimator& estimator) {
  if (budget <= 0) throw UsageError("token budget must be positive");
  std::vector<DrbMlEntry> kept;
  for (const DrbMlEntry& entry : entries) {
    if (estimator(entry.trimmed_code) < static_cast<std::size_t>(budget)) kept.push_back(entry);
  }
  return kept;
}

}  // namespace drbml
