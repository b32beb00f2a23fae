// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The drbml Authors

#include "drbml/eval.hpp"
#include "drbml/error.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <limits>
#include <random>
#include <unordered_set>

namespace drbml {

namespace {

std::string normalize_name(std::string_view name, NameNormalization mode) {
  if (mode == NameNormalization::Exact) return std::string(name);
  std::string out;
  out.reserve(name.size());
  for (char c : name) {
    if (c != ' ' && c != '\t' && c != '\n' && c != '\r') out.push_back(c);
  }
  return out;
}

bool side_matches(const ParsedPair& predicted, int p, const VarPair& gold, int g,
                  const MatchPolicy& policy) {
  if (normalize_name(predicted.names[p], policy.name_normalization) !=
      normalize_name(gold.names[g], policy.name_normalization)) {
    return false;
  }
  if (policy.require_lines) {
    if (!predicted.lines) return false;
    const auto& gold_lines = policy.line_basis == LineBasis::Trimmed && gold.trimmed_lines
                                 ? *gold.trimmed_lines
                                 : gold.lines;
    if (std::abs((*predicted.lines)[p] - gold_lines[g]) > policy.line_tolerance) return false;
  }
  if (policy.require_operations) {
    if (!predicted.operations || (*predicted.operations)[p] != gold.operations[g]) return false;
  }
  if (policy.require_cols) {
    if (!predicted.cols || (*predicted.cols)[p] != gold.cols[g]) return false;
  }
  return true;
}

bool pair_matches(const ParsedPair& predicted, const VarPair& gold, const MatchPolicy& policy) {
  if (side_matches(predicted, 0, gold, 0, policy) && side_matches(predicted, 1, gold, 1, policy)) {
    return true;
  }
  return policy.order_insensitive && side_matches(predicted, 0, gold, 1, policy) &&
         side_matches(predicted, 1, gold, 0, policy);
}

std::optional<double> ratio(long num, long den, ZeroDivisionPolicy policy) {
  if (den == 0) {
    if (policy == ZeroDivisionPolicy::Zero) return 0.0;
    return std::nullopt;
  }
  return static_cast<double>(num) / static_cast<double>(den);
}

MetricStats stats(const std::vector<std::optional<double>>& values, SdForm form) {
  MetricStats s;
  std::vector<double> defined;
  for (const auto& v : values) {
    if (v) {
      defined.push_back(*v);
    } else {
      ++s.excluded;
    }
  }
  s.used = static_cast<int>(defined.size());
  if (defined.empty()) return s;
  double sum = 0.0;
  for (double v : defined) sum += v;
  const double mean = sum / static_cast<double>(defined.size());
  s.avg = mean;
  const std::size_t denominator = form == SdForm::Population ? defined.size() : defined.size() - 1;
  if (denominator == 0) return s;
  double squares = 0.0;
  for (double v : defined) squares += (v - mean) * (v - mean);
  s.sd = std::sqrt(squares / static_cast<double>(denominator));
  return s;
}

}  // namespace

ConfusionCounts& ConfusionCounts::operator+=(const ConfusionCounts& other) {
  tp += other.tp;
  fp += other.fp;
  tn += other.tn;
  fn += other.fn;
  excluded += other.excluded;
  return *this;
}

std::string_view to_string(IndeterminatePolicy policy) {
  switch (policy) {
    case IndeterminatePolicy::AsNo: return "as_no";
    case IndeterminatePolicy::AsYes: return "as_yes";
    case IndeterminatePolicy::AsWrong: return "as_wrong";
    case IndeterminatePolicy::Exclude: return "exclude";
  }
  return "?";
}

std::optional<IndeterminatePolicy> parse_indeterminate_policy(std::string_view text) {
  std::string t(text);
  std::transform(t.begin(), t.end(), t.begin(), [](unsigned char c) {
    return c == '-' ? '_' : static_cast<char>(std::tolower(c));
  });
  if (t == "as_no") return IndeterminatePolicy::AsNo;
  if (t == "as_yes") return IndeterminatePolicy::AsYes;
  if (t == "as_wrong") return IndeterminatePolicy::AsWrong;
  if (t == "exclude") return IndeterminatePolicy::Exclude;
  return std::nullopt;
}

std::string_view to_string(Cell cell) {
  switch (cell) {
    case Cell::TP: return "TP";
    case Cell::FP: return "FP";
    case Cell::TN: return "TN";
    case Cell::FN: return "FN";
    case Cell::Excluded: return "EXCLUDED";
  }
  return "?";
}

std::optional<Verdict> resolve_verdict(Verdict verdict, int truth_flag, IndeterminatePolicy policy) {
  if (verdict != Verdict::Indeterminate) return verdict;
  switch (policy) {
    case IndeterminatePolicy::AsNo: return Verdict::No;
    case IndeterminatePolicy::AsYes: return Verdict::Yes;
    case IndeterminatePolicy::AsWrong: return truth_flag == 1 ? Verdict::No : Verdict::Yes;
    case IndeterminatePolicy::Exclude: return std::nullopt;
  }
  return std::nullopt;
}

Cell classify_detection(Verdict verdict, int truth_flag, IndeterminatePolicy policy) {
  const auto resolved = resolve_verdict(verdict, truth_flag, policy);
  if (!resolved) return Cell::Excluded;
  if (*resolved == Verdict::Yes) return truth_flag == 1 ? Cell::TP : Cell::FP;
  return truth_flag == 1 ? Cell::FN : Cell::TN;
}

bool match_pairs(std::span<const ParsedPair> predicted, std::span<const VarPair> gold,
                 const MatchPolicy& policy) {
  for (const ParsedPair& p : predicted) {
    for (const VarPair& g : gold) {
      if (pair_matches(p, g, policy)) return true;
    }
  }
  return false;
}

Cell classify_identification(const ParsedVerdict& parsed, const DrbMlEntry& truth,
                             const MatchPolicy& policy, IndeterminatePolicy indeterminate) {
  const auto resolved = resolve_verdict(parsed.verdict, truth.data_race, indeterminate);
  if (!resolved) return Cell::Excluded;
  if (truth.data_race == 1) {
    return *resolved == Verdict::Yes && match_pairs(parsed.pairs, truth.var_pairs, policy) ? Cell::TP
                                                                                         : Cell::FN;
  }
  return *resolved == Verdict::Yes ? Cell::FP : Cell::TN;
}

MetricsReport compute_metrics(const ConfusionCounts& counts, ZeroDivisionPolicy zero_division) {
  MetricsReport report;
  report.counts = counts;
  report.recall = ratio(counts.tp, counts.tp + counts.fn, zero_division);
  report.precision = ratio(counts.tp, counts.tp + counts.fp, zero_division);
  if (report.recall && report.precision) {
    const double sum = *report.recall + *report.precision;
    if (sum > 0.0) {
      report.f1 = 2.0 * *report.precision * *report.recall / sum;
    } else if (zero_division == ZeroDivisionPolicy::Zero) {
      report.f1 = 0.0;
    }
  } else if (zero_division == ZeroDivisionPolicy::Zero) {
    report.f1 = 0.0;
  }
  return report;
}

double round3(double value) {
  // The epsilon absorbs binary representation error at exact half-way points.
  return std::floor(value * 1000.0 + 0.5 + 1e-9) / 1000.0;
}

std::string format_metric(const std::optional<double>& value) {
  if (!value) return "-";
  char buffer[32];
  std::snprintf(buffer, sizeof buffer, "%.3f", round3(*value));
  return buffer;
}

void seeded_shuffle(std::vector<int>& values, std::uint64_t seed) {
  std::mt19937_64 engine(seed);
  for (std::size_t i = values.size(); i > 1; --i) {
    // Unbiased draw from [0, i) by rejection.
    const std::uint64_t bound = i;
    const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() -
                                std::numeric_limits<std::uint64_t>::max() % bound;
    std::uint64_t draw = engine();
    while (draw >= limit) draw = engine();
    std::swap(values[i - 1], values[static_cast<std::size_t>(draw % bound)]);
  }
}

FoldPlan make_folds(std::span<const DrbMlEntry> entries, int k, std::uint64_t seed) {
  if (k < 2) throw UsageError("k must be at least 2");
  if (static_cast<std::size_t>(k) > entries.size()) {
    throw UsageError("k = " + std::to_string(k) + " exceeds the " + std::to_string(entries.size()) +
                     " available entries");
  }
  std::vector<int> positives;
  std::vector<int> negatives;
  std::unordered_set<int> seen;
  for (const DrbMlEntry& e : entries) {
    if (!seen.insert(e.id).second) throw DataError("duplicate entry id " + std::to_string(e.id));
    (e.data_race == 1 ? positives : negatives).push_back(e.id);
  }
  std::sort(positives.begin(), positives.end());
  std::sort(negatives.begin(), negatives.end());
  // Distinct streams per class, both derived from the one seed.
  seeded_shuffle(positives, seed);
  seeded_shuffle(negatives, seed ^ 0x9E3779B97F4A7C15ULL);

  FoldPlan plan;
  plan.k = k;
  plan.seed = seed;
  plan.folds.resize(static_cast<std::size_t>(k));
  std::size_t next = 0;
  for (int id : positives) {
    Fold& fold = plan.folds[next];
    fold.entry_ids.push_back(id);
    ++fold.positives;
    next = (next + 1) % plan.folds.size();
  }
  for (int id : negatives) {
    Fold& fold = plan.folds[next];
    fold.entry_ids.push_back(id);
    ++fold.negatives;
    next = (next + 1) % plan.folds.size();
  }
  return plan;
}

CrossValAggregate aggregate(std::span<const MetricsReport> per_fold, SdForm form) {
  std::vector<std::optional<double>> r, p, f;
  for (const MetricsReport& m : per_fold) {
    r.push_back(m.recall);
    p.push_back(m.precision);
    f.push_back(m.f1);
  }
  return {stats(r, form), stats(p, form), stats(f, form)};
}

std::string_view to_string(ScoreTask task) {
  return task == ScoreTask::Detect ? "detect" : "identify";
}

std::optional<ScoreTask> parse_score_task(std::string_view text) {
  if (text == "detect") return ScoreTask::Detect;
  if (text == "identify") return ScoreTask::Identify;
  return std::nullopt;
}

ConfusionCounts score(std::span<const ScoredResult> results, std::span<const DrbMlEntry> truth,
                      const ScoringOptions& options) {
  if (options.task == ScoreTask::Detect) return score_detection(results, truth, options.indeterminate);
  return score_variable_identification(results, truth, options.match, options.indeterminate);
}

std::vector<MetricsReport> score_folds(const FoldPlan& plan, std::span<const ScoredResult> results,
                                       std::span<const DrbMlEntry> truth,
                                       const ScoringOptions& options) {
  std::vector<MetricsReport> reports;
  for (const Fold& fold : plan.folds) {
    const std::unordered_set<int> members(fold.entry_ids.begin(), fold.entry_ids.end());
    std::vector<ScoredResult> subset;
    for (const ScoredResult& r : results) {
      if (members.count(r.entry_id) != 0) subset.push_back(r);
    }
    reports.push_back(compute_metrics(score(subset, truth, options), options.zero_division));
  }
  return reports;
}

}  // namespace drbml
