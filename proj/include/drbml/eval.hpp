// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The drbml Authors

#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "drbml/corpus.hpp"
#include "drbml/response_parser.hpp"

namespace drbml {

struct ConfusionCounts {
  long tp = 0;
  long fp = 0;
  long tn = 0;
  long fn = 0;
  /// Entries left out under IndeterminatePolicy::Exclude; not part of total().
  long excluded = 0;

  long total() const { return tp + fp + tn + fn; }
  ConfusionCounts& operator+=(const ConfusionCounts& other);
  bool operator==(const ConfusionCounts&) const = default;
};

enum class IndeterminatePolicy { AsNo, AsYes, AsWrong, Exclude };

std::string_view to_string(IndeterminatePolicy policy);
std::optional<IndeterminatePolicy> parse_indeterminate_policy(std::string_view text);

enum class Cell { TP, FP, TN, FN, Excluded };

std::string_view to_string(Cell cell);

struct ScoredResult {
  int entry_id = 0;
  ParsedVerdict parsed;
};

/// The verdict an INDETERMINATE answer counts as, or nullopt when excluded.
std::optional<Verdict> resolve_verdict(Verdict verdict, int truth_flag, IndeterminatePolicy policy);

Cell classify_detection(Verdict verdict, int truth_flag, IndeterminatePolicy policy);

/// Throws DataError for a result whose entry id has no ground truth.
ConfusionCounts score_detection(std::span<const ScoredResult> results,
                                std::span<const DrbMlEntry> truth,
                                IndeterminatePolicy policy = IndeterminatePolicy::AsNo);

/// Sequential reference for score_detection.
ConfusionCounts score_detection_serial(std::span<const ScoredResult> results,
                                       std::span<const DrbMlEntry> truth,
                                       IndeterminatePolicy policy = IndeterminatePolicy::AsNo);

enum class NameNormalization { Exact, WhitespaceInsensitive };
enum class LineBasis { Trimmed, Original };

struct MatchPolicy {
  NameNormalization name_normalization = NameNormalization::WhitespaceInsensitive;
  bool require_lines = true;
  int line_tolerance = 0;  // consulted only when require_lines
  bool require_operations = true;
  bool require_cols = false;
  bool order_insensitive = true;
  /// Which gold line numbers predicted lines are compared against. Trimmed
  /// falls back to the annotation lines when a pair has no remapped lines.
  LineBasis line_basis = LineBasis::Trimmed;
};

/// True iff some predicted pair matches some gold pair.
bool match_pairs(std::span<const ParsedPair> predicted, std::span<const VarPair> gold,
                 const MatchPolicy& policy = {});

/// Race-yes truth: TP iff the verdict is YES and the pairs match, else FN.
/// Race-no truth: FP iff the verdict is YES, else TN.
Cell classify_identification(const ParsedVerdict& parsed, const DrbMlEntry& truth,
                             const MatchPolicy& policy, IndeterminatePolicy indeterminate);

ConfusionCounts score_variable_identification(std::span<const ScoredResult> results,
                                              std::span<const DrbMlEntry> truth,
                                              const MatchPolicy& policy = {},
                                              IndeterminatePolicy indeterminate = IndeterminatePolicy::AsNo);

ConfusionCounts score_variable_identification_serial(
    std::span<const ScoredResult> results, std::span<const DrbMlEntry> truth,
    const MatchPolicy& policy = {}, IndeterminatePolicy indeterminate = IndeterminatePolicy::AsNo);

enum class ZeroDivisionPolicy { Undefined, Zero };

struct MetricsReport {
  std::optional<double> recall;
  std::optional<double> precision;
  std::optional<double> f1;
  ConfusionCounts counts;
};

MetricsReport compute_metrics(const ConfusionCounts& counts,
                              ZeroDivisionPolicy zero_division = ZeroDivisionPolicy::Undefined);

/// Round half up to three decimals, as printed in result tables.
double round3(double value);
/// "0.889", or "-" for an undefined metric.
std::string format_metric(const std::optional<double>& value);

struct Fold {
  std::vector<int> entry_ids;
  int positives = 0;
  int negatives = 0;

  std::size_t size() const { return entry_ids.size(); }
  bool operator==(const Fold&) const = default;
};

struct FoldPlan {
  int k = 0;
  std::uint64_t seed = 0;
  std::vector<Fold> folds;

  bool operator==(const FoldPlan&) const = default;
};

/// Stratified split: each class is shuffled with a seeded generator and
/// dealt round-robin, negatives continuing where the positives stopped.
/// Throws UsageError when k < 2 or k exceeds the entry count.
FoldPlan make_folds(std::span<const DrbMlEntry> entries, int k, std::uint64_t seed);

/// Fisher-Yates driven by mt19937_64, identical on every platform.
void seeded_shuffle(std::vector<int>& values, std::uint64_t seed);

enum class SdForm { Population, Sample };

struct MetricStats {
  std::optional<double> avg;
  std::optional<double> sd;
  int used = 0;
  int excluded = 0;  // folds whose metric was undefined
};

struct CrossValAggregate {
  MetricStats recall;
  MetricStats precision;
  MetricStats f1;
};

CrossValAggregate aggregate(std::span<const MetricsReport> per_fold, SdForm form = SdForm::Population);

enum class ScoreTask { Detect, Identify };

std::string_view to_string(ScoreTask task);
std::optional<ScoreTask> parse_score_task(std::string_view text);

struct ScoringOptions {
  ScoreTask task = ScoreTask::Detect;
  MatchPolicy match;
  IndeterminatePolicy indeterminate = IndeterminatePolicy::AsNo;
  ZeroDivisionPolicy zero_division = ZeroDivisionPolicy::Undefined;
};

ConfusionCounts score(std::span<const ScoredResult> results, std::span<const DrbMlEntry> truth,
                      const ScoringOptions& options);

/// Scores each fold's share of the results.
std::vector<MetricsReport> score_folds(const FoldPlan& plan, std::span<const ScoredResult> results,
                                       std::span<const DrbMlEntry> truth,
                                       const ScoringOptions& options);

}  // namespace drbml
