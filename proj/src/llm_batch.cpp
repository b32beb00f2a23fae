// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The drbml Authors

#include "drbml/llm.hpp"

#include <algorithm>

namespace drbml {

namespace {

BatchRecord run_one(const DrbMlEntry& entry, Strategy strategy, const ModelConfig& config,
                    Backend& backend, const RunOptions& options) {
  BatchRecord record;
  record.entry_id = entry.id;
  try {
    record.response = run_strategy(entry, strategy, config, backend, options);
  } catch (const Error& e) {
    record.error = e.what();
    record.error_category = e.category();
  } catch (const std::exception& e) {
    record.error = e.what();
    record.error_category = Error::Category::Backend;
  }
  return record;
}

void sort_by_id(std::vector<BatchRecord>& records) {
  std::stable_sort(records.begin(), records.end(),
                   [](const BatchRecord& a, const BatchRecord& b) { return a.entry_id < b.entry_id; });
}

}  // namespace

std::vector<BatchRecord> run_batch_serial(std::span<const DrbMlEntry> entries, Strategy strategy,
                                          const ModelConfig& config, Backend& backend,
                                          const RunOptions& options) {
  std::vector<BatchRecord> records;
  records.reserve(entries.size());
  for (const DrbMlEntry& entry : entries) {
    records.push_back(run_one(entry, strategy, config, backend, options));
  }
  sort_by_id(records);
  return records;
}

std::vector<BatchRecord> run_batch(std::span<const DrbMlEntry> entries, Strategy strategy,
                                   const ModelConfig& config, Backend& backend, int parallelism,
                                   const RunOptions& options) {
  if (parallelism < 1) throw UsageError("parallelism must be at least 1");
  const auto n = static_cast<std::ptrdiff_t>(entries.size());
  std::vector<BatchRecord> records(entries.size());
  // Each worker owns one request at a time, so the thread count bounds the
  // number of requests in flight.
#pragma omp parallel for num_threads(parallelism) schedule(dynamic, 1)
  for (std::ptrdiff_t i = 0; i < n; ++i) {
    records[static_cast<std::size_t>(i)] =
        run_one(entries[static_cast<std::size_t>(i)], strategy, config, backend, options);
  }
  sort_by_id(records);
  return records;
}

}  // namespace drbml
