// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The drbml Authors

#pragma once

#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "drbml/eval.hpp"
#include "drbml/llm.hpp"
#include "drbml/prompts.hpp"
#include "drbml/response_parser.hpp"

namespace drbml {

struct EntryRecord {
  int entry_id = 0;
  std::string request_digest;
  std::string response_text;
  std::vector<std::string> chain_texts;
  bool cache_hit = false;
  std::optional<std::string> error;
  ParsedVerdict parsed;
  Cell cell = Cell::Excluded;
};

struct RunRecord {
  std::string run_id;
  std::string created_at;  // ISO-8601 UTC
  std::string model_alias;
  std::string model_name;
  Strategy strategy = Strategy::BP1;
  ScoreTask task = ScoreTask::Detect;
  IndeterminatePolicy indeterminate = IndeterminatePolicy::AsNo;
  /// Model and run settings; never holds credentials.
  nlohmann::json config = nlohmann::json::object();
  std::vector<EntryRecord> entries;
  ConfusionCounts counts;
  MetricsReport metrics;
};

/// Parses every stored response and scores it against `truth`. Entries
/// whose request failed count as INDETERMINATE.
void score_run(RunRecord& record, std::span<const DrbMlEntry> truth, const ScoringOptions& options);

/// Builds a record from a finished batch and scores it.
RunRecord make_run_record(std::span<const BatchRecord> batch, std::string model_alias,
                          const ModelConfig& config, Strategy strategy,
                          std::span<const DrbMlEntry> truth, const ScoringOptions& options,
                          nlohmann::json extra_config = nlohmann::json::object());

std::vector<ScoredResult> scored_results(const RunRecord& record);

/// `<UTC timestamp>-<8 hex digits of the run's own digest>`, suffixed when
/// the directory already exists.
std::string allocate_run_id(const std::filesystem::path& store_dir, const RunRecord& record);

/// Writes `<store>/<run_id>/{config.json, responses.jsonl, scores.json}`.
/// Assigns run_id and created_at when empty. Runs are append-only: an
/// existing run directory raises DataError.
std::string save_run(RunRecord& record, const std::filesystem::path& store_dir);
RunRecord load_run(const std::string& run_id, const std::filesystem::path& store_dir);

nlohmann::json to_json(const ParsedVerdict& parsed);
ParsedVerdict parsed_verdict_from_json(const nlohmann::json& obj);
nlohmann::json to_json(const ConfusionCounts& counts);
nlohmann::json to_json(const MetricsReport& metrics);
nlohmann::json to_json(const FoldPlan& plan);
nlohmann::json to_json(const CrossValAggregate& aggregate);

enum class TableFormat { Markdown, Csv };

std::optional<TableFormat> parse_table_format(std::string_view text);

struct TableRow {
  std::string model;
  std::string prompt;  // "N/A" for tools without prompts
  MetricsReport metrics;
};

TableRow table_row(const RunRecord& record);

/// Rows grouped by model in first-appearance order. Markdown prints metrics
/// to three decimals and bolds the best value per column; CSV keeps six
/// significant digits.
std::string render_table(std::span<const TableRow> rows, TableFormat format);
std::string render_table(std::span<const RunRecord> records, TableFormat format);

struct CrossValRow {
  std::string model;
  CrossValAggregate aggregate;
};

std::string render_crossval_table(std::span<const CrossValRow> rows,
                                  TableFormat format = TableFormat::Markdown);

/// %.6g, or empty for an undefined value.
std::string format_csv_number(const std::optional<double>& value);

}  // namespace drbml
