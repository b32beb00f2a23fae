// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The drbml Authors

// Times the OpenMP kernels against their serial references on a synthetic
// corpus. Usage: bench_kernels [entries] [repetitions]

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <random>
#include <string>
#include <vector>

#include <omp.h>

#include "drbml/corpus.hpp"
#include "drbml/eval.hpp"
#include "drbml/llm.hpp"

namespace {

using drbml::Microbenchmark;

Microbenchmark synthetic_bench(int index, bool race, std::mt19937& rng) {
  Microbenchmark b;
  b.filename = "DRB" + std::to_string(index) + "-synthetic" + std::to_string(index) + "-orig-" +
               (race ? "yes" : "no") + ".c";
  std::string src = "/*\n * Synthetic kernel.\n";
  if (race) src += " * Data race pair: a[i + 1]@13:12:R vs. a[i]@13:5:W\n";
  src += " */\n#include <stdio.h>\nint main(int argc, char* argv[])\n{\n  int i;\n  int len = 1000;\n"
         "  int a[1000];\n#pragma omp parallel for\n  for (i = 0; i < len - 1; i++)\n"
         "    a[i] = a[i + 1] + 1; // update\n";
  const int padding = static_cast<int>(rng() % 200);
  for (int k = 0; k < padding; ++k) {
    src += "  /* filler " + std::to_string(k) + " */ a[" + std::to_string(k % 1000) + "] += " +
           std::to_string(k) + "; // tail\n";
  }
  src += "  printf(\"a[500]=%d\\n\", a[500]);\n  return 0;\n}\n";
  b.raw_source = std::move(src);
  return b;
}

template <typename F>
double best_ms(int repetitions, F&& fn) {
  double best = 1e300;
  for (int r = 0; r < repetitions; ++r) {
    const auto start = std::chrono::steady_clock::now();
    fn();
    const std::chrono::duration<double, std::milli> took = std::chrono::steady_clock::now() - start;
    best = std::min(best, took.count());
  }
  return best;
}

void report(const char* name, double serial, double parallel) {
  std::printf("%-22s serial %9.3f ms   parallel %9.3f ms   speedup %5.2fx\n", name, serial, parallel,
              parallel > 0 ? serial / parallel : 0.0);
}

}  // namespace

int main(int argc, char** argv) {
  const int n = argc > 1 ? std::atoi(argv[1]) : 2000;
  const int repetitions = argc > 2 ? std::atoi(argv[2]) : 5;
  std::printf("entries=%d repetitions=%d threads=%d\n", n, repetitions, omp_get_max_threads());

  std::mt19937 rng(42);
  std::vector<Microbenchmark> benches;
  for (int i = 1; i <= n; ++i) benches.push_back(synthetic_bench(i, i % 2 == 0, rng));

  drbml::DatasetBuild serial_build;
  drbml::DatasetBuild parallel_build;
  const double build_serial = best_ms(repetitions, [&] { serial_build = drbml::build_dataset_serial(benches); });
  const double build_parallel = best_ms(repetitions, [&] { parallel_build = drbml::build_dataset(benches); });
  if (serial_build.entries != parallel_build.entries) {
    std::fprintf(stderr, "build_dataset disagrees with its serial reference\n");
    return 1;
  }
  report("build_dataset", build_serial, build_parallel);

  const auto& truth = serial_build.entries;
  std::vector<drbml::ScoredResult> results;
  for (const auto& e : truth) {
    drbml::ScoredResult r;
    r.entry_id = e.id;
    r.parsed.verdict = rng() % 3 == 0 ? drbml::Verdict::No : drbml::Verdict::Yes;
    if (!e.var_pairs.empty()) {
      drbml::ParsedPair p;
      p.names = e.var_pairs[0].names;
      p.lines = e.var_pairs[0].trimmed_lines.value_or(e.var_pairs[0].lines);
      p.operations = e.var_pairs[0].operations;
      r.parsed.pairs.push_back(p);
    }
    results.push_back(std::move(r));
  }

  drbml::ConfusionCounts a;
  drbml::ConfusionCounts b;
  const double detect_serial = best_ms(repetitions, [&] { a = drbml::score_detection_serial(results, truth); });
  const double detect_parallel = best_ms(repetitions, [&] { b = drbml::score_detection(results, truth); });
  if (!(a == b)) {
    std::fprintf(stderr, "score_detection disagrees with its serial reference\n");
    return 1;
  }
  report("score_detection", detect_serial, detect_parallel);

  const double ident_serial =
      best_ms(repetitions, [&] { a = drbml::score_variable_identification_serial(results, truth); });
  const double ident_parallel =
      best_ms(repetitions, [&] { b = drbml::score_variable_identification(results, truth); });
  if (!(a == b)) {
    std::fprintf(stderr, "score_variable_identification disagrees with its serial reference\n");
    return 1;
  }
  report("score_identification", ident_serial, ident_parallel);

  drbml::MockBackend mock({}, [](const drbml::ChatRequest&) { return std::optional<std::string>("no"); });
  drbml::ModelConfig model;
  model.model_name = "bench";
  const std::size_t dispatch_n = std::min<std::size_t>(truth.size(), 500);
  const std::span<const drbml::DrbMlEntry> subset(truth.data(), dispatch_n);
  const int threads = omp_get_max_threads();
  const double run_serial = best_ms(repetitions, [&] {
    (void)drbml::run_batch_serial(subset, drbml::Strategy::BP1, model, mock);
  });
  const double run_parallel = best_ms(repetitions, [&] {
    (void)drbml::run_batch(subset, drbml::Strategy::BP1, model, mock, threads);
  });
  report("run_batch (mock)", run_serial, run_parallel);
  return 0;
}
