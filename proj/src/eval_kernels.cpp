// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The drbml Authors

// Batch scoring. The OpenMP versions reduce per-entry cells into counts;
// the *_serial versions are the reference the tests compare against.

#include "drbml/eval.hpp"
#include "drbml/error.hpp"

#include <unordered_map>

namespace drbml {

namespace {

std::vector<const DrbMlEntry*> resolve_truth(std::span<const ScoredResult> results,
                                             std::span<const DrbMlEntry> truth) {
  std::unordered_map<int, const DrbMlEntry*> by_id;
  by_id.reserve(truth.size());
  for (const DrbMlEntry& e : truth) by_id.emplace(e.id, &e);
  std::vector<const DrbMlEntry*> resolved;
  resolved.reserve(results.size());
  for (const ScoredResult& r : results) {
    const auto it = by_id.find(r.entry_id);
    if (it == by_id.end()) {
      throw DataError("no ground truth for entry id " + std::to_string(r.entry_id));
    }
    resolved.push_back(it->second);
  }
  return resolved;
}

void tally(ConfusionCounts& counts, Cell cell) {
  switch (cell) {
    case Cell::TP: ++counts.tp; break;
    case Cell::FP: ++counts.fp; break;
    case Cell::TN: ++counts.tn; break;
    case Cell::FN: ++counts.fn; break;
    case Cell::Excluded: ++counts.excluded; break;
  }
}

template <typename Classify>
ConfusionCounts reduce_parallel(std::span<const ScoredResult> results,
                                const std::vector<const DrbMlEntry*>& truth, Classify classify) {
  long tp = 0, fp = 0, tn = 0, fn = 0, excluded = 0;
  const auto n = static_cast<std::ptrdiff_t>(results.size());
#pragma omp parallel for schedule(static) reduction(+ : tp, fp, tn, fn, excluded)
  for (std::ptrdiff_t i = 0; i < n; ++i) {
    const auto idx = static_cast<std::size_t>(i);
    switch (classify(results[idx], *truth[idx])) {
      case Cell::TP: ++tp; break;
      case Cell::FP: ++fp; break;
      case Cell::TN: ++tn; break;
      case Cell::FN: ++fn; break;
      case Cell::Excluded: ++excluded; break;
    }
  }
  return {tp, fp, tn, fn, excluded};
}

template <typename Classify>
ConfusionCounts reduce_serial(std::span<const ScoredResult> results,
                              const std::vector<const DrbMlEntry*>& truth, Classify classify) {
  ConfusionCounts counts;
  for (std::size_t i = 0; i < results.size(); ++i) tally(counts, classify(results[i], *truth[i]));
  return counts;
}

}  // namespace

ConfusionCounts score_detection(std::span<const ScoredResult> results,
                                std::span<const DrbMlEntry> truth, IndeterminatePolicy policy) {
  const auto resolved = resolve_truth(results, truth);
  return reduce_parallel(results, resolved, [policy](const ScoredResult& r, const DrbMlEntry& t) {
    return classify_detection(r.parsed.verdict, t.data_race, policy);
  });
}

ConfusionCounts score_detection_serial(std::span<const ScoredResult> results,
                                       std::span<const DrbMlEntry> truth,
                                       IndeterminatePolicy policy) {
  const auto resolved = resolve_truth(results, truth);
  return reduce_serial(results, resolved, [policy](const ScoredResult& r, const DrbMlEntry& t) {
    return classify_detection(r.parsed.verdict, t.data_race, policy);
  });
}

ConfusionCounts score_variable_identification(std::span<const ScoredResult> results,
                                              std::span<const DrbMlEntry> truth,
                                              const MatchPolicy& policy,
                                              IndeterminatePolicy indeterminate) {
  const auto resolved = resolve_truth(results, truth);
  return reduce_parallel(results, resolved, [&](const ScoredResult& r, const DrbMlEntry& t) {
    return classify_identification(r.parsed, t, policy, indeterminate);
  });
}

ConfusionCounts score_variable_identification_serial(std::span<const ScoredResult> results,
                                                     std::span<const DrbMlEntry> truth,
                                                     const MatchPolicy& policy,
                                                     IndeterminatePolicy indeterminate) {
  const auto resolved = resolve_truth(results, truth);
  return reduce_serial(results, resolved, [&](const ScoredResult& r, const DrbMlEntry& t) {
    return classify_identification(r.parsed, t, policy, indeterminate);
  });
}

}  // namespace drbml
