// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The drbml Authors

#include "drbml/report.hpp"
#include "drbml/error.hpp"
#include "drbml/json_io.hpp"

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <ctime>
#include <map>
#include <sstream>

namespace drbml {

namespace {

using nlohmann::json;

// Responses are model output and may hold invalid UTF-8.
std::string dump(const json& j, int indent = -1) {
  return j.dump(indent, ' ', false, json::error_handler_t::replace);
}

json optional_number(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

std::optional<double> number_or_null(const json& v) {
  if (v.is_null()) return std::nullopt;
  return v.get<double>();
}

Cell parse_cell(const std::string& s) {
  if (s == "TP") return Cell::TP;
  if (s == "FP") return Cell::FP;
  if (s == "TN") return Cell::TN;
  if (s == "FN") return Cell::FN;
  if (s == "EXCLUDED") return Cell::Excluded;
  throw DataError("unknown score cell '" + s + "'");
}

std::string utc_timestamp() {
  const auto now = std::chrono::system_clock::now();
  const auto ms = std::chrono::duration_cast<std::chrono::milliseconds>(now.time_since_epoch()) % 1000;
  const std::time_t t = std::chrono::system_clock::to_time_t(now);
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buffer[64];
  std::snprintf(buffer, sizeof buffer, "%04d-%02d-%02dT%02d:%02d:%02d.%03dZ", tm.tm_year + 1900,
                tm.tm_mon + 1, tm.tm_mday, tm.tm_hour, tm.tm_min, tm.tm_sec,
                static_cast<int>(ms.count()));
  return buffer;
}

std::string compact_timestamp(const std::string& iso) {
  std::string out;
  bool fraction = false;
  for (char c : iso) {
    if (c == '.') fraction = true;
    if (c == 'Z') fraction = false;
    if (!fraction && c != '-' && c != ':') out.push_back(c);
  }
  return out;
}

std::string read_lines_file(const std::filesystem::path& path) { return read_text_file(path); }

}  // namespace

nlohmann::json to_json(const ParsedVerdict& parsed) {
  json pairs = json::array();
  for (const ParsedPair& p : parsed.pairs) {
    json item = {{"name", p.names}};
    if (p.lines) item["line"] = *p.lines;
    if (p.cols) item["col"] = *p.cols;
    if (p.operations) {
      item["operation"] = {std::string(1, to_char((*p.operations)[0])),
                           std::string(1, to_char((*p.operations)[1]))};
    }
    pairs.push_back(std::move(item));
  }
  json out = {{"verdict", std::string(to_string(parsed.verdict))},
              {"pairs", std::move(pairs)},
              {"diagnostics", parsed.diagnostics}};
  if (parsed.source_span) out["span"] = {parsed.source_span->begin, parsed.source_span->end};
  return out;
}

ParsedVerdict parsed_verdict_from_json(const nlohmann::json& obj) {
  ParsedVerdict parsed;
  const auto verdict = parse_verdict_name(obj.at("verdict").get<std::string>());
  if (!verdict) throw DataError("unknown verdict in run store");
  parsed.verdict = *verdict;
  for (const auto& item : obj.at("pairs")) {
    ParsedPair p;
    p.names = item.at("name").get<std::array<std::string, 2>>();
    if (item.contains("line")) p.lines = item["line"].get<std::array<int, 2>>();
    if (item.contains("col")) p.cols = item["col"].get<std::array<int, 2>>();
    if (item.contains("operation")) {
      const auto ops = item["operation"].get<std::array<std::string, 2>>();
      const auto a = parse_access_op(ops[0]);
      const auto b = parse_access_op(ops[1]);
      if (!a || !b) throw DataError("invalid operation in run store");
      p.operations = std::array<AccessOp, 2>{*a, *b};
    }
    parsed.pairs.push_back(std::move(p));
  }
  parsed.diagnostics = obj.at("diagnostics").get<std::vector<std::string>>();
  if (obj.contains("span")) {
    const auto span = obj["span"].get<std::array<std::size_t, 2>>();
    parsed.source_span = TextSpan{span[0], span[1]};
  }
  return parsed;
}

nlohmann::json to_json(const ConfusionCounts& c) {
  return {{"tp", c.tp}, {"fp", c.fp}, {"tn", c.tn}, {"fn", c.fn}, {"excluded", c.excluded}};
}

nlohmann::json to_json(const MetricsReport& m) {
  return {{"recall", optional_number(m.recall)},
          {"precision", optional_number(m.precision)},
          {"f1", optional_number(m.f1)},
          {"counts", to_json(m.counts)}};
}

nlohmann::json to_json(const FoldPlan& plan) {
  json folds = json::array();
  for (const Fold& f : plan.folds) {
    folds.push_back({{"entry_ids", f.entry_ids},
                     {"positives", f.positives},
                     {"negatives", f.negatives},
                     {"size", f.size()}});
  }
  return {{"k", plan.k}, {"seed", plan.seed}, {"folds", std::move(folds)}};
}

nlohmann::json to_json(const CrossValAggregate& a) {
  const auto stat = [](const MetricStats& s) {
    return json{{"avg", optional_number(s.avg)},
                {"sd", optional_number(s.sd)},
                {"used", s.used},
                {"excluded", s.excluded}};
  };
  return {{"recall", stat(a.recall)}, {"precision", stat(a.precision)}, {"f1", stat(a.f1)}};
}

void score_run(RunRecord& record, std::span<const DrbMlEntry> truth, const ScoringOptions& options) {
  std::map<int, const DrbMlEntry*> by_id;
  for (const DrbMlEntry& e : truth) by_id.emplace(e.id, &e);
  record.task = options.task;
  record.indeterminate = options.indeterminate;
  ConfusionCounts counts;
  for (EntryRecord& e : record.entries) {
    const auto it = by_id.find(e.entry_id);
    if (it == by_id.end()) throw DataError("no ground truth for entry id " + std::to_string(e.entry_id));
    if (e.error) {
      e.parsed = ParsedVerdict{};
      e.parsed.diagnostics.push_back("request failed: " + *e.error);
    } else {
      e.parsed = parse_response(e.response_text);
    }
    e.cell = options.task == ScoreTask::Detect
                 ? classify_detection(e.parsed.verdict, it->second->data_race, options.indeterminate)
                 : classify_identification(e.parsed, *it->second, options.match, options.indeterminate);
    switch (e.cell) {
      case Cell::TP: ++counts.tp; break;
      case Cell::FP: ++counts.fp; break;
      case Cell::TN: ++counts.tn; break;
      case Cell::FN: ++counts.fn; break;
      case Cell::Excluded: ++counts.excluded; break;
    }
  }
  record.counts = counts;
  record.metrics = compute_metrics(counts, options.zero_division);
}

RunRecord make_run_record(std::span<const BatchRecord> batch, std::string model_alias,
                          const ModelConfig& config, Strategy strategy,
                          std::span<const DrbMlEntry> truth, const ScoringOptions& options,
                          nlohmann::json extra_config) {
  RunRecord record;
  record.model_alias = std::move(model_alias);
  record.model_name = config.model_name;
  record.strategy = strategy;
  record.config = {{"model_name", config.model_name},
                   {"endpoint", config.endpoint},
                   {"temperature", config.temperature},
                   {"max_output_tokens", config.max_output_tokens},
                   {"max_retries", config.max_retries},
                   {"request_timeout_ms", config.request_timeout.count()},
                   {"api_key_env", config.api_key_env},
                   {"response_text_pointer", config.response_text_pointer}};
  for (const auto& [key, value] : extra_config.items()) record.config[key] = value;
  for (const BatchRecord& b : batch) {
    EntryRecord e;
    e.entry_id = b.entry_id;
    if (b.response) {
      e.request_digest = b.response->request_digest;
      e.response_text = b.response->text;
      e.chain_texts = b.response->chain_texts;
      e.cache_hit = b.response->cache_hit;
    } else {
      e.error = b.error;
    }
    record.entries.push_back(std::move(e));
  }
  score_run(record, truth, options);
  return record;
}

std::vector<ScoredResult> scored_results(const RunRecord& record) {
  std::vector<ScoredResult> out;
  out.reserve(record.entries.size());
  for (const EntryRecord& e : record.entries) out.push_back({e.entry_id, e.parsed});
  return out;
}

std::string allocate_run_id(const std::filesystem::path& store_dir, const RunRecord& record) {
  std::string seed = record.model_name + "|" + std::string(to_string(record.strategy));
  for (const EntryRecord& e : record.entries) seed += "|" + e.request_digest;
  const std::string base =
      compact_timestamp(record.created_at.empty() ? utc_timestamp() : record.created_at) + "-" +
      sha256_hex(seed).substr(0, 8);
  std::string id = base;
  for (int n = 2; std::filesystem::exists(store_dir / id); ++n) id = base + "-" + std::to_string(n);
  return id;
}

std::string save_run(RunRecord& record, const std::filesystem::path& store_dir) {
  if (record.created_at.empty()) record.created_at = utc_timestamp();
  if (record.run_id.empty()) record.run_id = allocate_run_id(store_dir, record);
  const auto dir = store_dir / record.run_id;
  std::filesystem::create_directories(store_dir);
  if (!std::filesystem::create_directory(dir)) {
    throw DataError("run " + record.run_id + " already exists in " + store_dir.string());
  }

  json config = {{"run_id", record.run_id},
                 {"created_at", record.created_at},
                 {"model_alias", record.model_alias},
                 {"model_name", record.model_name},
                 {"strategy", std::string(to_string(record.strategy))},
                 {"config", record.config}};
  write_text_file(dir / "config.json", dump(config, 2) + "\n");

  std::string responses;
  for (const EntryRecord& e : record.entries) {
    json line = {{"entry_id", e.entry_id},
                 {"request_digest", e.request_digest},
                 {"text", e.response_text},
                 {"chain_texts", e.chain_texts},
                 {"cache_hit", e.cache_hit},
                 {"error", e.error ? json(*e.error) : json(nullptr)}};
    responses += dump(line) + "\n";
  }
  write_text_file(dir / "responses.jsonl", responses);

  json per_entry = json::array();
  for (const EntryRecord& e : record.entries) {
    per_entry.push_back({{"entry_id", e.entry_id},
                         {"cell", std::string(to_string(e.cell))},
                         {"parsed", to_json(e.parsed)}});
  }
  json scores = {{"task", std::string(to_string(record.task))},
                 {"indeterminate_policy", std::string(to_string(record.indeterminate))},
                 {"counts", to_json(record.counts)},
                 {"metrics", to_json(record.metrics)},
                 {"entries", std::move(per_entry)}};
  write_text_file(dir / "scores.json", dump(scores, 2) + "\n");
  return record.run_id;
}

RunRecord load_run(const std::string& run_id, const std::filesystem::path& store_dir) {
  const auto dir = store_dir / run_id;
  if (!std::filesystem::is_directory(dir)) throw DataError("run not found: " + dir.string());
  RunRecord record;
  try {
    const json config = read_json_file(dir / "config.json");
    record.run_id = config.at("run_id").get<std::string>();
    record.created_at = config.at("created_at").get<std::string>();
    record.model_alias = config.at("model_alias").get<std::string>();
    record.model_name = config.at("model_name").get<std::string>();
    const auto strategy = parse_strategy(config.at("strategy").get<std::string>());
    if (!strategy) throw DataError("unknown strategy in " + dir.string());
    record.strategy = *strategy;
    record.config = config.at("config");

    std::istringstream lines(read_lines_file(dir / "responses.jsonl"));
    std::string line;
    while (std::getline(lines, line)) {
      if (line.empty()) continue;
      const json item = json::parse(line);
      EntryRecord e;
      e.entry_id = item.at("entry_id").get<int>();
      e.request_digest = item.at("request_digest").get<std::string>();
      e.response_text = item.at("text").get<std::string>();
      e.chain_texts = item.at("chain_texts").get<std::vector<std::string>>();
      e.cache_hit = item.at("cache_hit").get<bool>();
      if (!item.at("error").is_null()) e.error = item.at("error").get<std::string>();
      record.entries.push_back(std::move(e));
    }

    const json scores = read_json_file(dir / "scores.json");
    const auto task = parse_score_task(scores.at("task").get<std::string>());
    const auto policy = parse_indeterminate_policy(scores.at("indeterminate_policy").get<std::string>());
    if (!task || !policy) throw DataError("invalid scores.json in " + dir.string());
    record.task = *task;
    record.indeterminate = *policy;
    const json& counts = scores.at("counts");
    record.counts = {counts.at("tp").get<long>(), counts.at("fp").get<long>(),
                     counts.at("tn").get<long>(), counts.at("fn").get<long>(),
                     counts.at("excluded").get<long>()};
    const json& metrics = scores.at("metrics");
    record.metrics.counts = record.counts;
    record.metrics.recall = number_or_null(metrics.at("recall"));
    record.metrics.precision = number_or_null(metrics.at("precision"));
    record.metrics.f1 = number_or_null(metrics.at("f1"));
    const json& per_entry = scores.at("entries");
    if (per_entry.size() != record.entries.size()) {
      throw DataError("scores.json and responses.jsonl disagree in " + dir.string());
    }
    for (std::size_t i = 0; i < per_entry.size(); ++i) {
      record.entries[i].cell = parse_cell(per_entry[i].at("cell").get<std::string>());
      record.entries[i].parsed = parsed_verdict_from_json(per_entry[i].at("parsed"));
    }
  } catch (const json::exception& e) {
    throw DataError("corrupt run " + dir.string() + ": " + e.what());
  }
  return record;
}

std::optional<TableFormat> parse_table_format(std::string_view text) {
  if (text == "markdown" || text == "md") return TableFormat::Markdown;
  if (text == "csv") return TableFormat::Csv;
  return std::nullopt;
}

TableRow table_row(const RunRecord& record) {
  const std::string model = record.model_alias.empty() ? record.model_name : record.model_alias;
  return {model, std::string(to_string(record.strategy)), record.metrics};
}

std::string format_csv_number(const std::optional<double>& value) {
  if (!value) return "";
  char buffer[32];
  std::snprintf(buffer, sizeof buffer, "%.6g", *value);
  return buffer;
}

std::string render_table(std::span<const TableRow> rows, TableFormat format) {
  // Group rows by model, keeping first-appearance order.
  std::vector<std::string> models;
  for (const TableRow& r : rows) {
    if (std::find(models.begin(), models.end(), r.model) == models.end()) models.push_back(r.model);
  }
  std::vector<const TableRow*> ordered;
  for (const std::string& m : models) {
    for (const TableRow& r : rows) {
      if (r.model == m) ordered.push_back(&r);
    }
  }

  std::ostringstream out;
  if (format == TableFormat::Csv) {
    out << "model,prompt,tp,fp,tn,fn,recall,precision,f1\n";
    for (const TableRow* r : ordered) {
      const auto& c = r->metrics.counts;
      out << r->model << ',' << r->prompt << ',' << c.tp << ',' << c.fp << ',' << c.tn << ','
          << c.fn << ',' << format_csv_number(r->metrics.recall) << ','
          << format_csv_number(r->metrics.precision) << ',' << format_csv_number(r->metrics.f1)
          << '\n';
    }
    return out.str();
  }

  const auto best = [&](auto field) {
    std::optional<double> top;
    for (const TableRow* r : ordered) {
      const auto v = field(r->metrics);
      if (v && (!top || round3(*v) > *top)) top = round3(*v);
    }
    return top;
  };
  const auto best_r = best([](const MetricsReport& m) { return m.recall; });
  const auto best_p = best([](const MetricsReport& m) { return m.precision; });
  const auto best_f = best([](const MetricsReport& m) { return m.f1; });
  const bool emphasize = ordered.size() > 1;
  const auto cell = [&](const std::optional<double>& v, const std::optional<double>& top) {
    const std::string text = format_metric(v);
    if (emphasize && v && top && round3(*v) == *top) return "**" + text + "**";
    return text;
  };

  out << "| Model | Prompt | TP | FP | TN | FN | R | P | F1 |\n";
  out << "|---|---|---|---|---|---|---|---|---|\n";
  std::string previous_model;
  bool first = true;
  for (const TableRow* r : ordered) {
    const auto& c = r->metrics.counts;
    const std::string model = (first || r->model != previous_model) ? r->model : "";
    first = false;
    previous_model = r->model;
    out << "| " << model << " | " << r->prompt << " | " << c.tp << " | " << c.fp << " | " << c.tn
        << " | " << c.fn << " | " << cell(r->metrics.recall, best_r) << " | "
        << cell(r->metrics.precision, best_p) << " | " << cell(r->metrics.f1, best_f) << " |\n";
  }
  return out.str();
}

std::string render_table(std::span<const RunRecord> records, TableFormat format) {
  std::vector<TableRow> rows;
  rows.reserve(records.size());
  for (const RunRecord& r : records) rows.push_back(table_row(r));
  return render_table(std::span<const TableRow>(rows), format);
}

std::string render_crossval_table(std::span<const CrossValRow> rows, TableFormat format) {
  std::ostringstream out;
  if (format == TableFormat::Csv) {
    out << "model,avg_r,sd_r,avg_p,sd_p,avg_f1,sd_f1\n";
    for (const CrossValRow& r : rows) {
      const auto& a = r.aggregate;
      out << r.model << ',' << format_csv_number(a.recall.avg) << ','
          << format_csv_number(a.recall.sd) << ',' << format_csv_number(a.precision.avg) << ','
          << format_csv_number(a.precision.sd) << ',' << format_csv_number(a.f1.avg) << ','
          << format_csv_number(a.f1.sd) << '\n';
    }
    return out.str();
  }
  out << "| Model | AVG of R | SD of R | AVG of P | SD of P | AVG of F1 | SD of F1 |\n";
  out << "|---|---|---|---|---|---|---|\n";
  for (const CrossValRow& r : rows) {
    const auto& a = r.aggregate;
    out << "| " << r.model << " | " << format_metric(a.recall.avg) << " | "
        << format_metric(a.recall.sd) << " | " << format_metric(a.precision.avg) << " | "
        << format_metric(a.precision.sd) << " | " << format_metric(a.f1.avg) << " | "
        << format_metric(a.f1.sd) << " |\n";
  }
  return out.str();
}

}  // namespace drbml
