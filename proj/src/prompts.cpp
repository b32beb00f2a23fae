// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The drbml Authors

#include "drbml/prompts.hpp"
#include "drbml/error.hpp"
#include "drbml/json_io.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>

namespace drbml {

namespace {

constexpr std::string_view kExpertIntro =
    "You are an expert in High-Performance Computing. Examine the code presented to you and "
    "ascertain if it contains any data races.\n";

constexpr std::string_view kConcise =
    "Begin with a concise response: either 'yes' for the presence of a data race or 'no' if "
    "absent.\n";

constexpr std::string_view kRaceDefinition =
    "a data race occurs when two or more threads access the same memory location "
    "simultaneously in a conflicting manner, without sufficient synchronization, with at least "
    "one of these accesses involving a write operation.";

std::string bp2_body(bool normalized) {
  std::string text;
  text += normalized ? "Detail" : "detail";
  text +=
      " each occurrence of a data race by specifying the variable pairs involved, using the JSON "
      "format outlined below:\n"
      "{\n"
      "\"name\": Names of each pair of variables involved in a data race.\n"
      "\"line\": line numbers of the paired variables within the code.\n";
  text += normalized ? "\"col\": column number of the paired variables within their line.\n"
                     : "\"col\": column number of the paird variables with in their line.\n";
  text +=
      "\"operation_types\": Corresponding operations, 'W' for write operation and 'R' for read "
      "operation.\n"
      "}\n";
  return text;
}

std::string upper_first(std::string_view s) {
  std::string out(s);
  if (!out.empty()) out[0] = static_cast<char>(std::toupper(static_cast<unsigned char>(out[0])));
  return out;
}

std::string lower(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return out;
}

std::string json_string(std::string_view s) { return nlohmann::json(std::string(s)).dump(-1, ' ', false, nlohmann::json::error_handler_t::replace); }

std::string advanced_ft_response(const DrbMlEntry& entry) {
  if (entry.data_race == 0) return "no";
  if (entry.var_pairs.empty()) return "\"yes\"";
  std::string out = "\"yes\",\n";
  for (std::size_t i = 0; i < entry.var_pairs.size(); ++i) {
    const VarPair& pair = entry.var_pairs[i];
    const auto lines = ft_lines(pair);
    const auto op = [](AccessOp o) { return o == AccessOp::Write ? "\"write\"" : "\"read\""; };
    if (i > 0) out += ",\n";
    out += "{\n";
    out += "    \"data_race\": 1,\n";
    out += "    \"variable_names\": [" + json_string(pair.names[0]) + ", " +
           json_string(pair.names[1]) + "],\n";
    out += "    \"variable_locations\": [" + std::to_string(lines[0]) + ", " +
           std::to_string(lines[1]) + "],\n";
    out += std::string("    \"operation_types\": [") + op(pair.operations[0]) + ", " +
           op(pair.operations[1]) + "]\n";
    out += "}";
  }
  return out;
}

}  // namespace

std::string_view to_string(Strategy strategy) {
  switch (strategy) {
    case Strategy::BP1: return "BP1";
    case Strategy::BP2: return "BP2";
    case Strategy::AP1: return "AP1";
    case Strategy::AP2: return "AP2";
    case Strategy::BasicFt: return "BASIC_FT";
    case Strategy::AdvancedFt: return "ADVANCED_FT";
  }
  return "?";
}

std::optional<Strategy> parse_strategy(std::string_view text) {
  std::string t = lower(text);
  std::replace(t.begin(), t.end(), '-', '_');
  if (t == "bp1") return Strategy::BP1;
  if (t == "bp2") return Strategy::BP2;
  if (t == "ap1") return Strategy::AP1;
  if (t == "ap2") return Strategy::AP2;
  if (t == "basic_ft") return Strategy::BasicFt;
  if (t == "advanced_ft") return Strategy::AdvancedFt;
  return std::nullopt;
}

bool is_fine_tuning(Strategy strategy) {
  return strategy == Strategy::BasicFt || strategy == Strategy::AdvancedFt;
}

std::string_view to_string(Role role) {
  switch (role) {
    case Role::System: return "system";
    case Role::User: return "user";
    case Role::Assistant: return "assistant";
  }
  return "?";
}

std::optional<Role> parse_role(std::string_view text) {
  if (text == "system") return Role::System;
  if (text == "user") return Role::User;
  if (text == "assistant") return Role::Assistant;
  return std::nullopt;
}

TemplateCatalog TemplateCatalog::builtin(bool normalized) {
  const std::string code = std::string(kCodeSlot) + "\n";
  TemplateCatalog catalog;
  catalog.set("bp1", std::string(kExpertIntro) + std::string(kConcise) + "\n" + code);
  catalog.set("bp2", std::string(kExpertIntro) + std::string(kConcise) + bp2_body(normalized) +
                         "\n" + code);
  catalog.set("ap1",
              "You are an expert in High-Performance Computing (HPC). Examine the provided code to "
              "identify any data races based on data dependence analysis.\n"
              "For clarity, " + std::string(kRaceDefinition) +
                  " It's crucial to analyze data dependence before determining potential data "
                  "races.\n" +
                  std::string(kConcise) + "\n" + code);
  catalog.set("ap2_chain1",
              "You are an expert in High-Performance Computing (HPC). Analyze data dependence in "
              "the given code.\n\n" + code);
  const std::string chain2 =
      upper_first(kRaceDefinition) +
      " Identify any data races based on the given data dependence information.\n" +
      std::string(kConcise);
  catalog.set("ap2_chain2", chain2);
  catalog.set("ap2_chain2_interpolated",
              "Data dependence information:\n" + std::string(kChainOutputSlot) + "\n\n" + chain2);
  catalog.set("basic_ft",
              std::string(kExpertIntro) +
                  "Begin with a concise response: either \"yes\" for the presence of a data race "
                  "or \"no\" if absent.\n\n" + code);
  catalog.set("advanced_ft",
              std::string(kExpertIntro) +
                  "Detail each occurrence of a data race by specifying the variable pairs involved "
                  "using the JSON format outlined below:\n"
                  "{\n"
                  "\"variable_names\": Names of each pair of variables involved in a data race.\n"
                  "\"variable_locations\": line numbers of the paired variables within the code.\n"
                  "\"operation_types\": Corresponding operations, either 'write' or 'read'.\n"
                  "}\n" + code);
  return catalog;
}

TemplateCatalog TemplateCatalog::from_directory(const std::filesystem::path& directory,
                                                const TemplateCatalog& base) {
  if (!std::filesystem::is_directory(directory)) {
    throw UsageError("template directory not found: " + directory.string());
  }
  TemplateCatalog catalog = base;
  for (const std::string& key : base.keys()) {
    const auto file = directory / (key + ".txt");
    if (std::filesystem::is_regular_file(file)) catalog.set(key, read_text_file(file));
  }
  return catalog;
}

const std::string& TemplateCatalog::get(std::string_view key) const {
  const auto it = templates_.find(key);
  if (it == templates_.end()) throw UsageError("unknown prompt template '" + std::string(key) + "'");
  return it->second;
}

void TemplateCatalog::set(std::string key, std::string text) {
  templates_[std::move(key)] = std::move(text);
}

std::vector<std::string> TemplateCatalog::keys() const {
  std::vector<std::string> out;
  for (const auto& [key, text] : templates_) out.push_back(key);
  return out;
}

std::string fill_code_slot(std::string_view templ, std::string_view code) {
  const std::size_t slot = templ.find(kCodeSlot);
  if (slot == std::string_view::npos ||
      templ.find(kCodeSlot, slot + kCodeSlot.size()) != std::string_view::npos) {
    throw UsageError("template must contain exactly one " + std::string(kCodeSlot) + " slot");
  }
  std::string out;
  out.reserve(templ.size() + code.size());
  out.append(templ.substr(0, slot));
  out.append(code);
  out.append(templ.substr(slot + kCodeSlot.size()));
  return out;
}

std::vector<PromptInstance> render(Strategy strategy, const DrbMlEntry& entry,
                                   const TemplateCatalog& catalog) {
  if (is_fine_tuning(strategy)) {
    throw UnsupportedStrategy(std::string(to_string(strategy)) +
                              " is a fine-tuning strategy; use make_ft_pairs");
  }
  if (entry.trimmed_code.empty()) {
    throw UsageError("entry " + std::to_string(entry.id) + " has no trimmed code to analyze");
  }
  const auto single = [&](std::string_view key) {
    PromptInstance p;
    p.strategy = strategy;
    p.entry_id = entry.id;
    p.messages.push_back({Role::User, fill_code_slot(catalog.get(key), entry.trimmed_code)});
    return std::vector<PromptInstance>{std::move(p)};
  };
  switch (strategy) {
    case Strategy::BP1: return single("bp1");
    case Strategy::BP2: return single("bp2");
    case Strategy::AP1: return single("ap1");
    case Strategy::AP2: {
      PromptInstance chain1;
      chain1.strategy = strategy;
      chain1.entry_id = entry.id;
      chain1.chain_position = 0;
      chain1.messages.push_back(
          {Role::User, fill_code_slot(catalog.get("ap2_chain1"), entry.trimmed_code)});
      PromptInstance chain2;
      chain2.strategy = strategy;
      chain2.entry_id = entry.id;
      chain2.chain_position = 1;
      chain2.messages.push_back({Role::User, catalog.get("ap2_chain2")});
      return {std::move(chain1), std::move(chain2)};
    }
    default: break;
  }
  throw UnsupportedStrategy(std::string(to_string(strategy)));
}

std::string render_chain2_interpolated(std::string_view chain1_output,
                                       const TemplateCatalog& catalog) {
  const std::string& templ = catalog.get("ap2_chain2_interpolated");
  const std::size_t slot = templ.find(kChainOutputSlot);
  if (slot == std::string::npos) {
    throw UsageError("ap2_chain2_interpolated template lacks " + std::string(kChainOutputSlot));
  }
  std::string out = templ.substr(0, slot);
  out.append(chain1_output);
  out.append(templ.substr(slot + kChainOutputSlot.size()));
  return out;
}

std::array<int, 2> ft_lines(const VarPair& pair) {
  return pair.trimmed_lines ? *pair.trimmed_lines : pair.lines;
}

FtPair make_ft_pairs(const DrbMlEntry& entry, Strategy kind, const TemplateCatalog& catalog) {
  if (!is_fine_tuning(kind)) {
    throw UnsupportedStrategy(std::string(to_string(kind)) + " is not a fine-tuning strategy");
  }
  if (entry.trimmed_code.empty()) {
    throw UsageError("entry " + std::to_string(entry.id) + " has no trimmed code");
  }
  FtPair pair;
  if (kind == Strategy::BasicFt) {
    pair.prompt = fill_code_slot(catalog.get("basic_ft"), entry.trimmed_code);
    pair.response = entry.data_race == 1 ? "yes" : "no";
  } else {
    pair.prompt = fill_code_slot(catalog.get("advanced_ft"), entry.trimmed_code);
    pair.response = advanced_ft_response(entry);
  }
  return pair;
}

std::size_t export_ft_dataset(std::span<const DrbMlEntry> entries, Strategy kind,
                              const std::filesystem::path& path, const TemplateCatalog& catalog) {
  std::string out;
  std::size_t count = 0;
  for (const DrbMlEntry& entry : entries) {
    const FtPair pair = make_ft_pairs(entry, kind, catalog);
    nlohmann::ordered_json line;
    line["prompt"] = pair.prompt;
    line["response"] = pair.response;
    out += line.dump(-1, ' ', false, nlohmann::ordered_json::error_handler_t::replace);
    out += '\n';
    ++count;
  }
  write_text_file(path, out);
  return count;
}

}  // namespace drbml
