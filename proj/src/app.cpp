// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The drbml Authors

#include "drbml/app.hpp"

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <set>
#include <sstream>

#include <CLI11.hpp>
#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>
#include <json.hpp>

#include "drbml/corpus.hpp"
#include "drbml/error.hpp"
#include "drbml/eval.hpp"
#include "drbml/json_io.hpp"
#include "drbml/llm.hpp"
#include "drbml/prompts.hpp"
#include "drbml/report.hpp"
#include "drbml/response_parser.hpp"

namespace drbml {

namespace {

namespace fs = std::filesystem;
namespace pt = boost::property_tree;
using ojson = nlohmann::ordered_json;

constexpr long kDefaultTokenBudget = 4096;
constexpr int kDefaultParallelism = 4;
constexpr int kDefaultFolds = 5;
constexpr std::uint64_t kDefaultSeed = 7;

std::string dump(const ojson& j) {
  return j.dump(2, ' ', false, ojson::error_handler_t::replace);
}

bool parse_bool(const std::string& key, const std::string& value) {
  std::string v = value;
  std::transform(v.begin(), v.end(), v.begin(), [](unsigned char c) { return std::tolower(c); });
  if (v == "true" || v == "yes" || v == "1" || v == "on") return true;
  if (v == "false" || v == "no" || v == "0" || v == "off") return false;
  throw UsageError("config key " + key + " expects a boolean, got '" + value + "'");
}

/// INI file with `[section]` blocks. Model sections are `[model.<alias>]`.
class IniConfig {
public:
  IniConfig() = default;

  static IniConfig load(const fs::path& path) {
    if (!fs::exists(path)) throw UsageError("config file not found: " + path.string());
    IniConfig config;
    try {
      pt::read_ini(path.string(), config.tree_);
    } catch (const pt::ini_parser_error& e) {
      throw UsageError("cannot parse config " + path.string() + ": " + e.what());
    }
    for (const auto& [section, body] : config.tree_) {
      for (const auto& [key, value] : body) {
        if (key == "api_key" || key == "key" || key == "token" || key == "secret") {
          throw UsageError("config section [" + section + "] holds a credential under '" + key +
                           "'; name the environment variable in api_key_env instead");
        }
      }
    }
    return config;
  }

  std::optional<std::string> get(const std::string& section, const std::string& key) const {
    const auto child = tree_.get_child_optional(pt::ptree::path_type(section, '/'));
    if (!child) return std::nullopt;
    const auto value = child->get_optional<std::string>(pt::ptree::path_type(key, '/'));
    if (!value) return std::nullopt;
    return *value;
  }

  bool has_section(const std::string& section) const {
    return static_cast<bool>(tree_.get_child_optional(pt::ptree::path_type(section, '/')));
  }

private:
  pt::ptree tree_;
};

template <typename T>
T convert(const std::string& key, const std::string& text) {
  try {
    if constexpr (std::is_same_v<T, std::string>) {
      return text;
    } else if constexpr (std::is_same_v<T, bool>) {
      return parse_bool(key, text);
    } else if constexpr (std::is_same_v<T, double>) {
      std::size_t used = 0;
      const double v = std::stod(text, &used);
      if (used != text.size()) throw std::invalid_argument(text);
      return v;
    } else if constexpr (std::is_same_v<T, std::uint64_t>) {
      std::size_t used = 0;
      const auto v = std::stoull(text, &used);
      if (used != text.size()) throw std::invalid_argument(text);
      return static_cast<T>(v);
    } else {
      std::size_t used = 0;
      const long long v = std::stoll(text, &used);
      if (used != text.size()) throw std::invalid_argument(text);
      return static_cast<T>(v);
    }
  } catch (const std::logic_error&) {
    throw UsageError("config key " + key + " has an invalid value '" + text + "'");
  }
}

/// Flag value if given, else config value, else the fallback.
template <typename T>
T pick(const std::optional<T>& flag, const IniConfig& ini, const std::string& section,
       const std::string& key, T fallback) {
  if (flag) return *flag;
  if (const auto v = ini.get(section, key)) return convert<T>(section + "." + key, *v);
  return fallback;
}

template <typename T>
std::optional<T> pick_optional(const std::optional<T>& flag, const IniConfig& ini,
                               const std::string& section, const std::string& key) {
  if (flag) return flag;
  if (const auto v = ini.get(section, key)) return convert<T>(section + "." + key, *v);
  return std::nullopt;
}

fs::path require_path(const std::optional<std::string>& flag, const IniConfig& ini,
                      const std::string& key, const std::string& flag_name) {
  const auto value = pick_optional<std::string>(flag, ini, "paths", key);
  if (!value) throw UsageError("missing " + flag_name + " (or paths." + key + " in the config)");
  return *value;
}

void require_directory(const fs::path& path, const std::string& what) {
  if (!fs::is_directory(path)) throw UsageError(what + " directory not found: " + path.string());
}

void require_file(const fs::path& path, const std::string& what) {
  if (!fs::is_regular_file(path)) throw UsageError(what + " not found: " + path.string());
}

Strategy strategy_from(const std::string& text) {
  const auto s = parse_strategy(text);
  if (!s) throw UsageError("unknown strategy '" + text + "' (BP1, BP2, AP1, AP2, BASIC_FT, ADVANCED_FT)");
  return *s;
}

struct GlobalOptions {
  std::optional<std::string> config;
  bool json = false;
};

struct MatchFlags {
  std::optional<int> line_tolerance;
  std::optional<std::string> names;
  std::optional<std::string> line_basis;
  std::optional<bool> require_lines;
  std::optional<bool> require_operations;
  std::optional<bool> require_cols;
  std::optional<bool> order_insensitive;
};

struct ScoringFlags {
  std::optional<std::string> task;
  std::optional<std::string> indeterminate;
  MatchFlags match;
};

void add_scoring_flags(CLI::App* cmd, ScoringFlags& f) {
  cmd->add_option("--task", f.task, "detect or identify");
  cmd->add_option("--indeterminate", f.indeterminate, "as_no, as_yes, as_wrong or exclude");
  cmd->add_option("--line-tolerance", f.match.line_tolerance, "Allowed line difference for pair matching");
  cmd->add_option("--match-names", f.match.names, "exact or whitespace");
  cmd->add_option("--line-basis", f.match.line_basis, "trimmed or original gold lines");
  cmd->add_option("--require-lines", f.match.require_lines, "Pair matching compares lines");
  cmd->add_option("--require-operations", f.match.require_operations, "Pair matching compares R/W");
  cmd->add_option("--require-cols", f.match.require_cols, "Pair matching compares columns");
  cmd->add_option("--order-insensitive", f.match.order_insensitive, "Accept swapped pair sides");
}

ScoringOptions resolve_scoring(const ScoringFlags& f, const IniConfig& ini,
                               std::optional<ScoreTask> stored_task = std::nullopt) {
  ScoringOptions o;
  const auto task_text = pick_optional<std::string>(f.task, ini, "run", "task");
  if (task_text) {
    const auto task = parse_score_task(*task_text);
    if (!task) throw UsageError("unknown task '" + *task_text + "' (detect or identify)");
    o.task = *task;
  } else if (stored_task) {
    o.task = *stored_task;
  }
  const auto policy_text = pick<std::string>(f.indeterminate, ini, "run", "indeterminate", "as_no");
  const auto policy = parse_indeterminate_policy(policy_text);
  if (!policy) throw UsageError("unknown indeterminate policy '" + policy_text + "'");
  o.indeterminate = *policy;

  const MatchFlags& m = f.match;
  o.match.line_tolerance = pick<int>(m.line_tolerance, ini, "match", "line_tolerance", 0);
  if (o.match.line_tolerance < 0) throw UsageError("line tolerance must be non-negative");
  const auto names = pick<std::string>(m.names, ini, "match", "names", "whitespace");
  if (names == "exact") {
    o.match.name_normalization = NameNormalization::Exact;
  } else if (names == "whitespace") {
    o.match.name_normalization = NameNormalization::WhitespaceInsensitive;
  } else {
    throw UsageError("match names must be exact or whitespace");
  }
  const auto basis = pick<std::string>(m.line_basis, ini, "match", "line_basis", "trimmed");
  if (basis == "trimmed") {
    o.match.line_basis = LineBasis::Trimmed;
  } else if (basis == "original") {
    o.match.line_basis = LineBasis::Original;
  } else {
    throw UsageError("line basis must be trimmed or original");
  }
  o.match.require_lines = pick<bool>(m.require_lines, ini, "match", "require_lines", true);
  o.match.require_operations = pick<bool>(m.require_operations, ini, "match", "require_operations", true);
  o.match.require_cols = pick<bool>(m.require_cols, ini, "match", "require_cols", false);
  o.match.order_insensitive = pick<bool>(m.order_insensitive, ini, "match", "order_insensitive", true);
  return o;
}

struct ModelFlags {
  std::optional<std::string> model_name;
  std::optional<std::string> endpoint;
  std::optional<double> temperature;
  std::optional<int> max_tokens;
  std::optional<int> max_retries;
  std::optional<long> timeout_ms;
  std::optional<std::string> api_key_env;
};

ModelConfig resolve_model(const std::string& alias, const ModelFlags& f, const IniConfig& ini) {
  const std::string section = "model." + alias;
  ModelConfig c;
  c.model_name = pick<std::string>(f.model_name, ini, section, "model_name", alias);
  c.endpoint = pick<std::string>(f.endpoint, ini, section, "endpoint", "");
  c.temperature = pick<double>(f.temperature, ini, section, "temperature", c.temperature);
  c.max_output_tokens = pick<int>(f.max_tokens, ini, section, "max_output_tokens", c.max_output_tokens);
  c.max_retries = pick<int>(f.max_retries, ini, section, "max_retries", c.max_retries);
  c.request_timeout = std::chrono::milliseconds(
      pick<long>(f.timeout_ms, ini, section, "timeout_ms", static_cast<long>(c.request_timeout.count())));
  c.api_key_env = pick<std::string>(f.api_key_env, ini, section, "api_key_env", c.api_key_env);
  c.response_text_pointer =
      pick<std::string>(std::nullopt, ini, section, "response_pointer", c.response_text_pointer);
  c.retry_base_delay = std::chrono::milliseconds(pick<long>(
      std::nullopt, ini, section, "retry_base_delay_ms", static_cast<long>(c.retry_base_delay.count())));
  c.validate();
  return c;
}

std::vector<DrbMlEntry> load_checked_dataset(const fs::path& dir) {
  require_directory(dir, "dataset");
  auto entries = load_dataset(dir);
  if (entries.empty()) throw DataError("no DRB-ML entries in " + dir.string());
  return entries;
}

/// Keeps the entries listed in a filter manifest.
std::vector<DrbMlEntry> apply_manifest(std::vector<DrbMlEntry> entries, const fs::path& manifest) {
  require_file(manifest, "manifest");
  const nlohmann::json doc = read_json_file(manifest);
  std::set<int> kept;
  try {
    for (const auto& id : doc.at("kept")) kept.insert(id.get<int>());
  } catch (const nlohmann::json::exception& e) {
    throw DataError("invalid manifest " + manifest.string() + ": " + e.what());
  }
  std::vector<DrbMlEntry> out;
  for (DrbMlEntry& e : entries) {
    if (kept.count(e.id) != 0) out.push_back(std::move(e));
  }
  return out;
}

TemplateCatalog resolve_catalog(const std::optional<std::string>& dir, bool normalized) {
  const TemplateCatalog base = TemplateCatalog::builtin(normalized);
  if (!dir) return base;
  require_directory(*dir, "template");
  return TemplateCatalog::from_directory(*dir, base);
}

ojson counts_json(const ConfusionCounts& c) {
  return {{"tp", c.tp}, {"fp", c.fp}, {"tn", c.tn}, {"fn", c.fn}, {"excluded", c.excluded}};
}

ojson metric_json(const std::optional<double>& v) { return v ? ojson(*v) : ojson(nullptr); }

ojson metrics_json(const MetricsReport& m) {
  return {{"recall", metric_json(m.recall)},
          {"precision", metric_json(m.precision)},
          {"f1", metric_json(m.f1)},
          {"counts", counts_json(m.counts)}};
}

struct Context {
  GlobalOptions global;
  IniConfig ini;
  std::ostream& out;
  std::ostream& err;
  const CliEnvironment& env;
};

// build

struct BuildFlags {
  std::optional<std::string> src;
  std::optional<std::string> out;
  std::optional<std::string> labels;
};

int cmd_build(Context& ctx, const BuildFlags& f) {
  const fs::path src = require_path(f.src, ctx.ini, "src", "--src");
  const fs::path out = require_path(f.out, ctx.ini, "dataset", "--out");
  require_directory(src, "source");
  const auto labels_path = pick_optional<std::string>(f.labels, ctx.ini, "paths", "labels");
  LabelMetadata labels;
  if (labels_path) {
    require_file(*labels_path, "label metadata");
    labels = load_label_metadata(*labels_path);
  }

  std::vector<Microbenchmark> benches;
  for (const fs::path& p : list_sources(src)) benches.push_back(Microbenchmark::from_file(p));
  const DatasetBuild build = build_dataset(benches, labels_path ? &labels : nullptr);
  fs::create_directories(out);
  write_dataset(build.entries, out);

  long warnings = 0;
  long errors = 0;
  for (const Diagnostic& d : build.diagnostics) {
    (d.severity == Diagnostic::Severity::Error ? errors : warnings)++;
  }
  if (ctx.global.json) {
    ojson diags = ojson::array();
    for (const Diagnostic& d : build.diagnostics) {
      diags.push_back({{"severity", d.severity == Diagnostic::Severity::Error ? "error" : "warning"},
                       {"code", d.code},
                       {"message", d.message}});
    }
    ojson failed = ojson::array();
    for (const SourceError& e : build.errors) failed.push_back({{"file", e.filename}, {"message", e.message}});
    ctx.out << dump({{"entries", build.entries.size()},
                     {"out", out.string()},
                     {"warnings", warnings},
                     {"errors", errors},
                     {"failed_sources", failed},
                     {"diagnostics", diags}})
            << "\n";
  } else {
    ctx.out << "built " << build.entries.size() << " entries into " << out.string() << "\n";
    ctx.out << "diagnostics: " << warnings << " warning(s), " << errors << " error(s), "
            << build.errors.size() << " rejected source(s)\n";
    for (const Diagnostic& d : build.diagnostics) ctx.err << to_string(d) << "\n";
  }
  for (const SourceError& e : build.errors) ctx.err << "error: " << e.filename << ": " << e.message << "\n";
  return build.errors.empty() ? kExitOk : kExitData;
}

// filter

struct FilterFlags {
  std::optional<std::string> dataset;
  std::optional<long> budget;
  std::optional<std::string> out;
};

int cmd_filter(Context& ctx, const FilterFlags& f) {
  const auto entries = load_checked_dataset(require_path(f.dataset, ctx.ini, "dataset", "--dataset"));
  const long budget = pick<long>(f.budget, ctx.ini, "run", "token_budget", kDefaultTokenBudget);
  const auto kept = filter_by_token_budget(entries, budget);
  std::set<int> kept_ids;
  for (const DrbMlEntry& e : kept) kept_ids.insert(e.id);
  ojson dropped = ojson::array();
  for (const DrbMlEntry& e : entries) {
    if (kept_ids.count(e.id) == 0) {
      dropped.push_back({{"id", e.id}, {"tokens", heuristic_token_estimate(e.trimmed_code)}});
    }
  }
  const ojson manifest = {{"budget", budget},
                          {"estimator", "chars/4"},
                          {"total", entries.size()},
                          {"kept", std::vector<int>(kept_ids.begin(), kept_ids.end())},
                          {"dropped", dropped}};
  if (const auto out = pick_optional<std::string>(f.out, ctx.ini, "paths", "manifest")) {
    write_text_file(*out, dump(manifest) + "\n");
  }
  if (ctx.global.json) {
    ctx.out << dump(manifest) << "\n";
  } else {
    ctx.out << "kept " << kept.size() << " of " << entries.size() << " entries below " << budget
            << " tokens\n";
  }
  return kExitOk;
}

// render

struct RenderFlags {
  std::optional<std::string> dataset;
  std::optional<std::string> strategy;
  std::optional<std::string> out;
  std::optional<std::string> manifest;
  std::optional<std::string> templates;
  bool normalized = false;
};

int cmd_render(Context& ctx, const RenderFlags& f) {
  auto entries = load_checked_dataset(require_path(f.dataset, ctx.ini, "dataset", "--dataset"));
  if (const auto m = pick_optional<std::string>(f.manifest, ctx.ini, "paths", "manifest")) {
    entries = apply_manifest(std::move(entries), *m);
  }
  const Strategy strategy = strategy_from(pick<std::string>(f.strategy, ctx.ini, "run", "strategy", "BP1"));
  if (!f.out) throw UsageError("missing --out");
  const TemplateCatalog catalog =
      resolve_catalog(pick_optional<std::string>(f.templates, ctx.ini, "paths", "templates"),
                      f.normalized || pick<bool>(std::nullopt, ctx.ini, "run", "normalized_templates", false));

  std::size_t records = 0;
  if (is_fine_tuning(strategy)) {
    records = export_ft_dataset(entries, strategy, *f.out, catalog);
  } else {
    std::string text;
    for (const DrbMlEntry& e : entries) {
      for (const PromptInstance& p : render(strategy, e, catalog)) {
        ojson messages = ojson::array();
        for (const Message& m : p.messages) {
          messages.push_back({{"role", std::string(to_string(m.role))}, {"content", m.text}});
        }
        const ojson line = {{"entry_id", p.entry_id},
                            {"strategy", std::string(to_string(p.strategy))},
                            {"chain_position", p.chain_position ? ojson(*p.chain_position) : ojson(nullptr)},
                            {"messages", messages}};
        text += line.dump(-1, ' ', false, ojson::error_handler_t::replace) + "\n";
        ++records;
      }
    }
    write_text_file(*f.out, text);
  }
  if (ctx.global.json) {
    ctx.out << dump({{"records", records}, {"out", *f.out}, {"strategy", std::string(to_string(strategy))}})
            << "\n";
  } else {
    ctx.out << "wrote " << records << " " << to_string(strategy) << " record(s) to " << *f.out << "\n";
  }
  return kExitOk;
}

// run

struct RunFlags {
  std::optional<std::string> dataset;
  std::optional<std::string> strategy;
  std::optional<std::string> model;
  std::optional<std::string> backend;
  std::optional<std::string> mock_script;
  std::optional<std::string> cache;
  std::optional<std::string> runs;
  std::optional<std::string> manifest;
  std::optional<std::string> templates;
  std::optional<std::string> chain_mode;
  std::optional<int> parallelism;
  std::optional<long> budget;
  std::optional<long> max_requests;
  bool normalized = false;
  ModelFlags model_flags;
  ScoringFlags scoring;
};

int cmd_run(Context& ctx, const RunFlags& f) {
  const fs::path dataset_dir = require_path(f.dataset, ctx.ini, "dataset", "--dataset");
  auto entries = load_checked_dataset(dataset_dir);
  const auto manifest = pick_optional<std::string>(f.manifest, ctx.ini, "paths", "manifest");
  if (manifest) entries = apply_manifest(std::move(entries), *manifest);
  const auto budget = pick_optional<long>(f.budget, ctx.ini, "run", "token_budget");
  if (budget) entries = filter_by_token_budget(entries, *budget);

  const Strategy strategy = strategy_from(pick<std::string>(f.strategy, ctx.ini, "run", "strategy", "BP1"));
  const auto alias = pick_optional<std::string>(f.model, ctx.ini, "run", "model");
  if (!alias) throw UsageError("missing --model");
  const ModelConfig model = resolve_model(*alias, f.model_flags, ctx.ini);
  const std::string backend_name = pick<std::string>(f.backend, ctx.ini, "run", "backend", "http");
  const int parallelism = pick<int>(f.parallelism, ctx.ini, "run", "parallelism", kDefaultParallelism);
  if (parallelism < 1) throw UsageError("parallelism must be at least 1");
  const fs::path runs_dir = pick<std::string>(f.runs, ctx.ini, "paths", "runs", "runs");
  const auto cache_dir = pick_optional<std::string>(f.cache, ctx.ini, "paths", "cache");
  const std::string chain_text = pick<std::string>(f.chain_mode, ctx.ini, "run", "chain_mode", "chat");
  ChainMode chain_mode;
  if (chain_text == "chat") {
    chain_mode = ChainMode::Chat;
  } else if (chain_text == "interpolate") {
    chain_mode = ChainMode::Interpolate;
  } else {
    throw UsageError("chain mode must be chat or interpolate");
  }
  const ScoringOptions scoring = resolve_scoring(f.scoring, ctx.ini);
  const bool normalized = f.normalized || pick<bool>(std::nullopt, ctx.ini, "run", "normalized_templates", false);
  const TemplateCatalog catalog =
      resolve_catalog(pick_optional<std::string>(f.templates, ctx.ini, "paths", "templates"), normalized);

  std::optional<ResponseCache> cache;
  if (cache_dir) cache.emplace(*cache_dir);
  std::unique_ptr<Backend> backend;
  if (backend_name == "http") {
    if (model.endpoint.empty()) throw UsageError("model " + *alias + " has no endpoint configured");
    backend = std::make_unique<HttpChatBackend>(default_http_post, ctx.env.getenv);
  } else if (backend_name == "replay") {
    if (!cache_dir) throw UsageError("the replay backend needs --cache");
    require_directory(*cache_dir, "cache");
    backend = std::make_unique<ReplayBackend>(ResponseCache(*cache_dir));
  } else if (backend_name == "mock") {
    const auto script = pick_optional<std::string>(f.mock_script, ctx.ini, "paths", "mock_script");
    if (!script) throw UsageError("the mock backend needs --mock-script");
    require_file(*script, "mock script");
    backend = MockBackend::from_file(*script);
  } else {
    throw UsageError("unknown backend '" + backend_name + "' (http, replay or mock)");
  }

  std::optional<RequestBudget> request_budget;
  if (const auto limit = pick_optional<long>(f.max_requests, ctx.ini, "run", "max_requests")) {
    request_budget.emplace(*limit);
  }
  RunOptions options;
  options.catalog = &catalog;
  options.chain_mode = chain_mode;
  options.completion.cache = cache ? &*cache : nullptr;
  options.completion.budget = request_budget ? &*request_budget : nullptr;

  const auto batch = run_batch(entries, strategy, model, *backend, parallelism, options);
  const nlohmann::json extra = {{"backend", backend_name},
                                {"dataset", dataset_dir.string()},
                                {"chain_mode", chain_text},
                                {"normalized_templates", normalized},
                                {"entries", entries.size()}};
  RunRecord record = make_run_record(batch, *alias, model, strategy, entries, scoring, extra);
  const std::string run_id = save_run(record, runs_dir);

  std::optional<Error::Category> worst;
  long failed = 0;
  for (const BatchRecord& b : batch) {
    if (b.ok()) continue;
    ++failed;
    ctx.err << "error: entry " << b.entry_id << ": " << b.error << "\n";
    const auto cat = b.error_category.value_or(Error::Category::Backend);
    if (!worst || cat == Error::Category::Backend) worst = cat;
  }
  if (ctx.global.json) {
    ctx.out << dump({{"run_id", run_id},
                     {"run_dir", (runs_dir / run_id).string()},
                     {"entries", record.entries.size()},
                     {"failed", failed},
                     {"metrics", metrics_json(record.metrics)}})
            << "\n";
  } else {
    ctx.out << "run " << run_id << ": " << record.entries.size() << " entries, " << failed
            << " failed\n";
    const TableRow row = table_row(record);
    ctx.out << render_table(std::span<const TableRow>(&row, 1), TableFormat::Markdown);
  }
  if (!worst) return kExitOk;
  switch (*worst) {
    case Error::Category::Usage: return kExitUsage;
    case Error::Category::Data: return kExitData;
    case Error::Category::Backend: return kExitBackend;
  }
  return kExitBackend;
}

// score

struct ScoreFlags {
  std::string run_id;
  std::optional<std::string> runs;
  std::optional<std::string> dataset;
  std::optional<std::string> format;
  ScoringFlags scoring;
};

fs::path dataset_for_run(const std::optional<std::string>& flag, const IniConfig& ini,
                         const RunRecord& run) {
  if (const auto d = pick_optional<std::string>(flag, ini, "paths", "dataset")) return *d;
  if (run.config.contains("dataset")) return run.config["dataset"].get<std::string>();
  throw UsageError("missing --dataset");
}

TableFormat format_from(const std::optional<std::string>& flag, const IniConfig& ini) {
  const std::string text = pick<std::string>(flag, ini, "report", "format", "markdown");
  const auto format = parse_table_format(text);
  if (!format) throw UsageError("table format must be markdown or csv");
  return *format;
}

int cmd_score(Context& ctx, const ScoreFlags& f) {
  const fs::path runs_dir = pick<std::string>(f.runs, ctx.ini, "paths", "runs", "runs");
  RunRecord run = load_run(f.run_id, runs_dir);
  const auto truth = load_checked_dataset(dataset_for_run(f.dataset, ctx.ini, run));
  const ScoringOptions scoring = resolve_scoring(f.scoring, ctx.ini, run.task);
  score_run(run, truth, scoring);
  if (ctx.global.json) {
    ctx.out << dump({{"run_id", run.run_id},
                     {"model", table_row(run).model},
                     {"strategy", std::string(to_string(run.strategy))},
                     {"task", std::string(to_string(scoring.task))},
                     {"metrics", metrics_json(run.metrics)}})
            << "\n";
  } else {
    const TableRow row = table_row(run);
    ctx.out << render_table(std::span<const TableRow>(&row, 1), format_from(f.format, ctx.ini));
  }
  return kExitOk;
}

// crossval

struct CrossvalFlags {
  std::optional<std::string> dataset;
  std::optional<int> k;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> runs;
  std::optional<std::string> sd;
  std::optional<std::string> format;
  std::vector<std::string> run_ids;
  ScoringFlags scoring;
};

int cmd_crossval(Context& ctx, const CrossvalFlags& f) {
  const fs::path runs_dir = pick<std::string>(f.runs, ctx.ini, "paths", "runs", "runs");
  std::vector<RunRecord> runs;
  for (const std::string& id : f.run_ids) runs.push_back(load_run(id, runs_dir));
  fs::path dataset_dir;
  if (const auto d = pick_optional<std::string>(f.dataset, ctx.ini, "paths", "dataset")) {
    dataset_dir = *d;
  } else if (!runs.empty()) {
    dataset_dir = dataset_for_run(std::nullopt, ctx.ini, runs.front());
  } else {
    throw UsageError("missing --dataset");
  }
  auto entries = load_checked_dataset(dataset_dir);
  const int k = pick<int>(f.k, ctx.ini, "crossval", "k", kDefaultFolds);
  const auto seed = pick<std::uint64_t>(f.seed, ctx.ini, "crossval", "seed", kDefaultSeed);
  const std::string sd_text = pick<std::string>(f.sd, ctx.ini, "crossval", "sd", "population");
  SdForm sd_form;
  if (sd_text == "population") {
    sd_form = SdForm::Population;
  } else if (sd_text == "sample") {
    sd_form = SdForm::Sample;
  } else {
    throw UsageError("sd must be population or sample");
  }

  // Folds cover what the runs were scored on, when runs are given.
  if (!runs.empty()) {
    std::set<int> scored;
    for (const EntryRecord& e : runs.front().entries) scored.insert(e.entry_id);
    std::erase_if(entries, [&](const DrbMlEntry& e) { return scored.count(e.id) == 0; });
  }
  const FoldPlan plan = make_folds(entries, k, seed);

  std::vector<CrossValRow> rows;
  ojson run_json = ojson::array();
  for (RunRecord& run : runs) {
    const ScoringOptions scoring = resolve_scoring(f.scoring, ctx.ini, run.task);
    score_run(run, entries, scoring);
    const auto per_fold = score_folds(plan, scored_results(run), entries, scoring);
    const TableRow label = table_row(run);
    rows.push_back({label.model + " " + label.prompt, aggregate(per_fold, sd_form)});
    ojson folds = ojson::array();
    for (const MetricsReport& m : per_fold) folds.push_back(metrics_json(m));
    const auto stat = [](const MetricStats& s) {
      return ojson{{"avg", metric_json(s.avg)}, {"sd", metric_json(s.sd)}, {"used", s.used}};
    };
    const CrossValAggregate& a = rows.back().aggregate;
    run_json.push_back({{"run_id", run.run_id},
                        {"label", rows.back().model},
                        {"folds", folds},
                        {"recall", stat(a.recall)},
                        {"precision", stat(a.precision)},
                        {"f1", stat(a.f1)}});
  }

  if (ctx.global.json) {
    ojson folds = ojson::array();
    for (const Fold& fold : plan.folds) {
      folds.push_back({{"size", fold.size()},
                       {"positives", fold.positives},
                       {"negatives", fold.negatives},
                       {"entry_ids", fold.entry_ids}});
    }
    ctx.out << dump({{"k", plan.k}, {"seed", plan.seed}, {"folds", folds}, {"runs", run_json}}) << "\n";
    return kExitOk;
  }
  ctx.out << "fold plan: k=" << plan.k << " seed=" << plan.seed << " entries=" << entries.size() << "\n";
  for (std::size_t i = 0; i < plan.folds.size(); ++i) {
    const Fold& fold = plan.folds[i];
    ctx.out << "fold " << i + 1 << ": " << fold.size() << " entries (" << fold.positives
            << " race-yes, " << fold.negatives << " race-no)\n";
  }
  if (!rows.empty()) ctx.out << "\n" << render_crossval_table(rows, format_from(f.format, ctx.ini));
  return kExitOk;
}

int exit_code_for(Error::Category category) {
  switch (category) {
    case Error::Category::Usage: return kExitUsage;
    case Error::Category::Data: return kExitData;
    case Error::Category::Backend: return kExitBackend;
  }
  return kExitData;
}

std::optional<std::string> system_getenv(const std::string& name) {
  const char* value = std::getenv(name.c_str());
  if (value == nullptr) return std::nullopt;
  return std::string(value);
}

}  // namespace

int run_cli(const std::vector<std::string>& args, const CliEnvironment& env_in) {
  CliEnvironment env = env_in;
  if (!env.getenv) env.getenv = system_getenv;
  std::ostream& out = env.out != nullptr ? *env.out : std::cout;
  std::ostream& err = env.err != nullptr ? *env.err : std::cerr;

  CLI::App app{"Build, prompt and score DRB-ML data-race datasets", "drbml"};
  app.require_subcommand(1);
  app.fallthrough();
  GlobalOptions global;
  app.add_option("--config", global.config, "INI configuration file; flags override it");
  app.add_flag("--json", global.json, "Machine-readable output");

  BuildFlags build;
  auto* build_cmd = app.add_subcommand("build", "Build DRB-ML JSON files from microbenchmark sources");
  build_cmd->add_option("--src", build.src, "Directory of DRB*.c / .cpp sources");
  build_cmd->add_option("--out", build.out, "Output directory for DRB-ML-NNN.json");
  build_cmd->add_option("--labels", build.labels, "JSON object mapping filenames to labels");

  FilterFlags filter;
  auto* filter_cmd = app.add_subcommand("filter", "Write the token-budget subset manifest");
  filter_cmd->add_option("--dataset", filter.dataset, "DRB-ML directory");
  filter_cmd->add_option("--budget", filter.budget, "Keep entries with fewer estimated tokens");
  filter_cmd->add_option("--out", filter.out, "Manifest path");

  RenderFlags render_flags;
  auto* render_cmd = app.add_subcommand("render", "Dump rendered prompts or fine-tuning JSONL");
  render_cmd->add_option("--dataset", render_flags.dataset, "DRB-ML directory");
  render_cmd->add_option("--strategy", render_flags.strategy, "BP1, BP2, AP1, AP2, BASIC_FT, ADVANCED_FT");
  render_cmd->add_option("--out", render_flags.out, "Output JSONL path");
  render_cmd->add_option("--manifest", render_flags.manifest, "Restrict to a filter manifest");
  render_cmd->add_option("--templates", render_flags.templates, "Directory of <key>.txt template overrides");
  render_cmd->add_flag("--normalized", render_flags.normalized, "Use spelling-corrected templates");

  RunFlags run;
  auto* run_cmd = app.add_subcommand("run", "Query a model for every entry and save the run");
  run_cmd->add_option("--dataset", run.dataset, "DRB-ML directory");
  run_cmd->add_option("--strategy", run.strategy, "Prompt strategy");
  run_cmd->add_option("--model", run.model, "Model alias ([model.<alias>] in the config)");
  run_cmd->add_option("--backend", run.backend, "http, replay or mock");
  run_cmd->add_option("--mock-script", run.mock_script, "Mock backend script (JSON)");
  run_cmd->add_option("--cache", run.cache, "Response cache directory");
  run_cmd->add_option("--runs", run.runs, "Run store directory");
  run_cmd->add_option("--manifest", run.manifest, "Restrict to a filter manifest");
  run_cmd->add_option("--budget", run.budget, "Token budget applied before the run");
  run_cmd->add_option("--parallelism", run.parallelism, "Requests in flight");
  run_cmd->add_option("--max-requests", run.max_requests, "Hard cap on issued requests");
  run_cmd->add_option("--chain-mode", run.chain_mode, "AP2 follow-up: chat or interpolate");
  run_cmd->add_option("--templates", run.templates, "Directory of template overrides");
  run_cmd->add_flag("--normalized", run.normalized, "Use spelling-corrected templates");
  run_cmd->add_option("--model-name", run.model_flags.model_name, "Model identifier sent to the endpoint");
  run_cmd->add_option("--endpoint", run.model_flags.endpoint, "Chat-completions URL");
  run_cmd->add_option("--temperature", run.model_flags.temperature, "Sampling temperature");
  run_cmd->add_option("--max-tokens", run.model_flags.max_tokens, "Max output tokens");
  run_cmd->add_option("--max-retries", run.model_flags.max_retries, "Retries for transient failures");
  run_cmd->add_option("--timeout-ms", run.model_flags.timeout_ms, "Per-request timeout");
  run_cmd->add_option("--api-key-env", run.model_flags.api_key_env, "Environment variable holding the key");
  add_scoring_flags(run_cmd, run.scoring);

  ScoreFlags score_flags;
  auto* score_cmd = app.add_subcommand("score", "Re-parse and score a saved run");
  score_cmd->add_option("run_id", score_flags.run_id, "Run id")->required();
  score_cmd->add_option("--runs", score_flags.runs, "Run store directory");
  score_cmd->add_option("--dataset", score_flags.dataset, "Ground-truth DRB-ML directory");
  score_cmd->add_option("--format", score_flags.format, "markdown or csv");
  add_scoring_flags(score_cmd, score_flags.scoring);

  CrossvalFlags cv;
  auto* cv_cmd = app.add_subcommand("crossval", "Stratified fold plan and per-fold AVG/SD");
  cv_cmd->add_option("run_ids", cv.run_ids, "Saved runs to score per fold");
  cv_cmd->add_option("--dataset", cv.dataset, "DRB-ML directory");
  cv_cmd->add_option("-k,--k", cv.k, "Number of folds");
  cv_cmd->add_option("--seed", cv.seed, "Shuffle seed");
  cv_cmd->add_option("--runs", cv.runs, "Run store directory");
  cv_cmd->add_option("--sd", cv.sd, "population or sample");
  cv_cmd->add_option("--format", cv.format, "markdown or csv");
  add_scoring_flags(cv_cmd, cv.scoring);

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    Context ctx{global, {}, out, err, env};
    if (global.config) ctx.ini = IniConfig::load(*global.config);
    if (build_cmd->parsed()) return cmd_build(ctx, build);
    if (filter_cmd->parsed()) return cmd_filter(ctx, filter);
    if (render_cmd->parsed()) return cmd_render(ctx, render_flags);
    if (run_cmd->parsed()) return cmd_run(ctx, run);
    if (score_cmd->parsed()) return cmd_score(ctx, score_flags);
    if (cv_cmd->parsed()) return cmd_crossval(ctx, cv);
    return kExitUsage;
  } catch (const Error& e) {
    err << "drbml: error: " << e.what() << "\n";
    return exit_code_for(e.category());
  } catch (const fs::filesystem_error& e) {
    err << "drbml: error: " << e.what() << "\n";
    return kExitData;
  } catch (const nlohmann::json::exception& e) {
    err << "drbml: error: " << e.what() << "\n";
    return kExitData;
  } catch (const std::exception& e) {
    err << "drbml: error: " << e.what() << "\n";
    return kExitData;
  }
}

int run_cli(int argc, const char* const* argv) {
  std::vector<std::string> args;
  for (int i = 1; i < argc; ++i) args.emplace_back(argv[i]);
  return run_cli(args);
}

}  // namespace drbml
