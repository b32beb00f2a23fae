// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The drbml Authors

#include <doctest.h>

#include <omp.h>

#include <random>

#include "drbml/corpus.hpp"
#include "drbml/eval.hpp"
#include "drbml/llm.hpp"
#include "support.hpp"

using namespace drbml;

namespace {

// A shuffled mix of racy, race-free, unannotated and misnamed sources.
std::vector<Microbenchmark> mixed_sources(int n, std::mt19937& rng) {
  std::vector<Microbenchmark> out;
  for (int i = 0; i < n; ++i) {
    Microbenchmark b;
    const int kind = static_cast<int>(rng() % 5);
    const std::string index = std::to_string(1000 + i).substr(1);
    switch (kind) {
      case 0:
        b.filename = "DRB" + index + "-copy-orig-yes.c";
        b.raw_source = "/* Data race pair: a[i+1]@6:10:R vs. a[i]@6:5:W */\nint a[9];\nvoid f(void) {\n"
                       "  int i;\n  for (i = 0; i < 8; i++)\n    a[i]=a[i+1]+1; // racy\n}\n";
        break;
      case 1:
        b.filename = "DRB" + index + "-private-orig-no.cpp";
        b.raw_source = "// clean\nint x;\n/* nothing\n   here */\nint main() { return x; }\n";
        break;
      case 2:
        b.filename = "DRB" + index + "-bare-orig-yes.c";
        b.raw_source = "int y; void g(void) { y++; }";
        break;
      case 3:
        b.filename = "DRB" + index + "-pairs-on-clean-orig-no.c";
        b.raw_source = "/*\n Data race pair: z@3:3:W vs. z@3:3:W\n*/\nint z;\n";
        break;
      default:
        b.filename = "not-a-drb-" + index + ".c";
        b.raw_source = "int q;\n";
        break;
    }
    out.push_back(std::move(b));
  }
  std::shuffle(out.begin(), out.end(), rng);
  return out;
}

bool same_errors(const std::vector<SourceError>& a, const std::vector<SourceError>& b) {
  if (a.size() != b.size()) return false;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (a[i].filename != b[i].filename || a[i].message != b[i].message) return false;
  }
  return true;
}

}  // namespace

TEST_CASE("build_dataset matches its serial reference") {
  std::mt19937 rng(31);
  for (int threads : {1, 2, 4}) {
    omp_set_num_threads(threads);
    for (int round = 0; round < 10; ++round) {
      const auto sources = mixed_sources(5 + static_cast<int>(rng() % 120), rng);
      const DatasetBuild serial = build_dataset_serial(sources);
      const DatasetBuild parallel = build_dataset(sources);
      CHECK(parallel.entries == serial.entries);
      CHECK(same_errors(parallel.errors, serial.errors));
      REQUIRE(parallel.diagnostics.size() == serial.diagnostics.size());
      for (std::size_t i = 0; i < serial.diagnostics.size(); ++i) {
        CHECK(to_string(parallel.diagnostics[i]) == to_string(serial.diagnostics[i]));
      }
      for (std::size_t i = 0; i < serial.entries.size(); ++i) CHECK(serial.entries[i].id == static_cast<int>(i) + 1);
    }
  }
}

TEST_CASE("scoring kernels match their serial references across thread counts") {
  std::mt19937 rng(41);
  const auto truth = drbml::testing::synthetic_corpus(150, 150);
  std::vector<ScoredResult> results;
  for (const auto& e : truth) {
    ScoredResult r;
    r.entry_id = e.id;
    r.parsed.verdict = static_cast<Verdict>(rng() % 3);
    if (!e.var_pairs.empty() && rng() % 2) {
      ParsedPair p;
      p.names = e.var_pairs[0].names;
      p.lines = e.var_pairs[0].trimmed_lines;
      p.operations = e.var_pairs[0].operations;
      r.parsed.pairs.push_back(p);
    }
    results.push_back(r);
  }
  const auto d = score_detection_serial(results, truth);
  const auto v = score_variable_identification_serial(results, truth);
  for (int threads : {1, 3, 8}) {
    omp_set_num_threads(threads);
    CHECK(score_detection(results, truth) == d);
    CHECK(score_variable_identification(results, truth) == v);
  }
}

TEST_CASE("run_batch matches its serial reference") {
  const auto entries = drbml::testing::synthetic_corpus(12, 9);
  MockBackend mock({}, drbml::testing::oracle_responder(entries, drbml::testing::OracleSchema::Advanced));
  ModelConfig model;
  model.model_name = "kernel-test";
  const auto serial = run_batch_serial(entries, Strategy::AP2, model, mock);
  for (int parallelism : {1, 2, 5}) {
    const auto parallel = run_batch(entries, Strategy::AP2, model, mock, parallelism);
    REQUIRE(parallel.size() == serial.size());
    for (std::size_t i = 0; i < serial.size(); ++i) {
      CHECK(parallel[i].entry_id == serial[i].entry_id);
      REQUIRE(parallel[i].ok());
      CHECK(parallel[i].response->text == serial[i].response->text);
      CHECK(parallel[i].response->chain_texts == serial[i].response->chain_texts);
      CHECK(parallel[i].response->request_digest == serial[i].response->request_digest);
    }
  }
}
