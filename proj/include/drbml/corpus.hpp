// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The drbml Authors

#pragma once

#include <array>
#include <cstddef>
#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace drbml {

enum class AccessOp { Read, Write };

/// Upper-case single-letter form ("R" / "W").
char to_char(AccessOp op);
/// Accepts R/W/r/w and read/write in any case.
std::optional<AccessOp> parse_access_op(std::string_view text);

/// One annotated pair of conflicting accesses. Element 1 depends on element 0.
struct VarPair {
  std::array<std::string, 2> names;
  std::array<int, 2> lines{};
  std::array<int, 2> cols{};
  std::array<AccessOp, 2> operations{AccessOp::Read, AccessOp::Read};
  /// The annotation lines remapped into trimmed-code numbering, when the
  /// line map covers both of them.
  std::optional<std::array<int, 2>> trimmed_lines;

  bool operator==(const VarPair&) const = default;
};

struct DrbMlEntry {
  int id = 0;
  std::string name;
  std::string drb_code;
  std::string trimmed_code;
  std::size_t code_len = 0;
  int data_race = 0;
  std::string data_race_label;
  std::vector<VarPair> var_pairs;

  bool operator==(const DrbMlEntry&) const = default;
};

struct Diagnostic {
  enum class Severity { Warning, Error };

  Severity severity = Severity::Warning;
  std::string code;  // short machine-readable tag, e.g. "race-without-pairs"
  std::string message;

  bool operator==(const Diagnostic&) const = default;
};

std::string to_string(const Diagnostic& diagnostic);

struct Microbenchmark {
  std::filesystem::path path;
  std::string raw_source;
  std::string filename;

  static Microbenchmark from_file(const std::filesystem::path& path);
};

struct FilenameInfo {
  int index = 0;
  std::string mnemonic;
  int race_flag = 0;

  bool operator==(const FilenameInfo&) const = default;
};

/// Parses `DRB<index>-<mnemonic>-<yes|no>.c` / `.cpp`.
/// Throws MalformedFilename.
FilenameInfo parse_filename(std::string_view filename);

/// Maps original source lines onto trimmed-code lines.
class LineMap {
public:
  LineMap() = default;
  /// `targets[i]` is the trimmed line of original line i+1, or 0 when removed.
  explicit LineMap(std::vector<int> targets);

  std::optional<int> lookup(int original_line) const;
  std::size_t original_line_count() const { return targets_.size(); }
  std::size_t trimmed_line_count() const { return trimmed_count_; }
  /// Survivor lines as (original, trimmed), ascending.
  std::vector<std::pair<int, int>> entries() const;

  bool operator==(const LineMap&) const = default;

private:
  std::vector<int> targets_;
  std::size_t trimmed_count_ = 0;
};

struct StripResult {
  std::string trimmed_code;
  LineMap line_map;
  /// Text of every removed comment, one comment per line group, in file order.
  std::string comments;
};

/// Removes `//` and `/* */` comments outside string and character literals.
/// Lines left empty by the removal are deleted; all others are renumbered
/// contiguously. Throws UnterminatedComment.
StripResult strip_comments(std::string_view raw_source);

/// Parses every `Data race pair:` line of the given comment text.
/// Throws MalformedAnnotation.
std::vector<VarPair> parse_race_annotation(std::string_view comment_text);

struct BuiltEntry {
  DrbMlEntry entry;
  std::vector<Diagnostic> diagnostics;
};

/// Sidecar label metadata: filename -> data_race_label.
using LabelMetadata = std::map<std::string, std::string>;

LabelMetadata load_label_metadata(const std::filesystem::path& path);

BuiltEntry build_entry(const Microbenchmark& bench, int id,
                       const LabelMetadata* labels = nullptr);

std::vector<Diagnostic> validate_entry(const DrbMlEntry& entry);

struct SourceError {
  std::string filename;
  std::string message;
};

struct DatasetBuild {
  std::vector<DrbMlEntry> entries;  // ascending id
  std::vector<Diagnostic> diagnostics;
  std::vector<SourceError> errors;
};

/// Builds every benchmark, in parallel. IDs follow (DRB index, filename)
/// order starting at 1; malformed filenames are reported as errors and get
/// no ID.
DatasetBuild build_dataset(std::span<const Microbenchmark> benches,
                           const LabelMetadata* labels = nullptr);

/// Sequential reference for build_dataset.
DatasetBuild build_dataset_serial(std::span<const Microbenchmark> benches,
                                  const LabelMetadata* labels = nullptr);

/// Number of Unicode code points in a UTF-8 string.
std::size_t utf8_length(std::string_view text);

// Dataset files

std::string dataset_filename(int id);
void write_dataset(std::span<const DrbMlEntry> entries, const std::filesystem::path& directory);
std::vector<DrbMlEntry> load_dataset(const std::filesystem::path& directory);

/// Lists `.c` / `.cpp` files of a directory in name order.
std::vector<std::filesystem::path> list_sources(const std::filesystem::path& directory);

// Token budget

using TokenEstimator = std::function<std::size_t(std::string_view)>;

/// ceil(code points / 4).
std::size_t heuristic_token_estimate(std::string_view text);

/// Keeps entries whose estimated trimmed-code token count is strictly below
/// `budget`. Throws UsageError when budget <= 0.
std::vector<DrbMlEntry> filter_by_token_budget(std::span<const DrbMlEntry> entries,
                                               long budget,
                                               const TokenEstimator& estimator = heuristic_token_estimate);

}  // namespace drbml
