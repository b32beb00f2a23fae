// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The drbml Authors

#include "drbml/corpus.hpp"
#include "drbml/error.hpp"

#include <algorithm>
#include <optional>

namespace drbml {

namespace {

struct Job {
  const Microbenchmark* bench;
  FilenameInfo info;
  int id;
};

struct Outcome {
  std::optional<BuiltEntry> built;
  std::optional<SourceError> error;
};

// Filename parsing and ID assignment are cheap and order-defining, so they
// stay sequential in both variants.
std::vector<Job> plan(std::span<const Microbenchmark> benches, std::vector<SourceError>& errors) {
  std::vector<Job> jobs;
  for (const Microbenchmark& bench : benches) {
    try {
      jobs.push_back({&bench, parse_filename(bench.filename), 0});
    } catch (const MalformedFilename& e) {
      errors.push_back({bench.filename, e.what()});
    }
  }
  std::sort(jobs.begin(), jobs.end(), [](const Job& a, const Job& b) {
    if (a.info.index != b.info.index) return a.info.index < b.info.index;
    return a.bench->filename < b.bench->filename;
  });
  for (std::size_t i = 0; i < jobs.size(); ++i) jobs[i].id = static_cast<int>(i) + 1;
  return jobs;
}

Outcome build_one(const Job& job, const LabelMetadata* labels) {
  Outcome out;
  try {
    out.built = build_entry(*job.bench, job.id, labels);
  } catch (const std::exception& e) {
    out.error = SourceError{job.bench->filename, e.what()};
  }
  return out;
}

DatasetBuild collect(std::vector<Outcome>& outcomes, std::vector<SourceError> errors) {
  DatasetBuild result;
  result.errors = std::move(errors);
  for (Outcome& o : outcomes) {
    if (o.built) {
      for (Diagnostic& d : o.built->diagnostics) {
        d.message = o.built->entry.name + ": " + d.message;
        result.diagnostics.push_back(std::move(d));
      }
      result.entries.push_back(std::move(o.built->entry));
    } else if (o.error) {
      result.errors.push_back(std::move(*o.error));
    }
  }
  return result;
}

}  // namespace

DatasetBuild build_dataset(std::span<const Microbenchmark> benches, const LabelMetadata* labels) {
  std::vector<SourceError> errors;
  const std::vector<Job> jobs = plan(benches, errors);
  std::vector<Outcome> outcomes(jobs.size());
  const auto n = static_cast<std::ptrdiff_t>(jobs.size());
#pragma omp parallel for schedule(dynamic, 4)
  for (std::ptrdiff_t i = 0; i < n; ++i) {
    outcomes[static_cast<std::size_t>(i)] = build_one(jobs[static_cast<std::size_t>(i)], labels);
  }
  return collect(outcomes, std::move(errors));
}

DatasetBuild build_dataset_serial(std::span<const Microbenchmark> benches,
                                  const LabelMetadata* labels) {
  std::vector<SourceError> errors;
  const std::vector<Job> jobs = plan(benches, errors);
  std::vector<Outcome> outcomes;
  outcomes.reserve(jobs.size());
  for (const Job& job : jobs) outcomes.push_back(build_one(job, labels));
  return collect(outcomes, std::move(errors));
}

}  // namespace drbml
