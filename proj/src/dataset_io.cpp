// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The drbml Authors

#include "drbml/corpus.hpp"
#include "drbml/error.hpp"
#include "drbml/json_io.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <regex>

namespace drbml {

namespace {

template <typename T>
std::array<T, 2> pair_field(const nlohmann::json& obj, const char* key, const std::string& where) {
  if (!obj.contains(key) || !obj.at(key).is_array() || obj.at(key).size() != 2) {
    throw DataError(where + ": var_pairs." + key + " must be a 2-element array");
  }
  return {obj.at(key)[0].get<T>(), obj.at(key)[1].get<T>()};
}

VarPair pair_from_json(nlohmann::json obj, const std::string& where) {
  // Some records in the wild wrap each pair object in a JSON string.
  if (obj.is_string()) obj = nlohmann::json::parse(obj.get<std::string>());
  if (!obj.is_object()) throw DataError(where + ": var_pairs item must be an object");
  VarPair pair;
  pair.names = pair_field<std::string>(obj, "name", where);
  pair.lines = pair_field<int>(obj, "line", where);
  pair.cols = pair_field<int>(obj, "col", where);
  const auto ops = pair_field<std::string>(obj, "operation", where);
  for (int i = 0; i < 2; ++i) {
    const auto op = parse_access_op(ops[i]);
    if (!op) throw DataError(where + ": invalid operation '" + ops[i] + "'");
    pair.operations[i] = *op;
  }
  if (obj.contains("trimmed_line")) pair.trimmed_lines = pair_field<int>(obj, "trimmed_line", where);
  return pair;
}

}  // namespace

nlohmann::ordered_json to_json(const VarPair& pair) {
  nlohmann::ordered_json obj;
  obj["name"] = pair.names;
  obj["line"] = pair.lines;
  obj["col"] = pair.cols;
  obj["operation"] = {std::string(1, to_char(pair.operations[0])),
                      std::string(1, to_char(pair.operations[1]))};
  if (pair.trimmed_lines) obj["trimmed_line"] = *pair.trimmed_lines;
  return obj;
}

nlohmann::ordered_json to_json(const DrbMlEntry& entry) {
  nlohmann::ordered_json obj;
  obj["ID"] = entry.id;
  obj["name"] = entry.name;
  obj["DRB_code"] = entry.drb_code;
  obj["trimmed_code"] = entry.trimmed_code;
  obj["code_len"] = entry.code_len;
  obj["data_race"] = entry.data_race;
  obj["data_race_label"] = entry.data_race_label;
  obj["var_pairs"] = nlohmann::ordered_json::array();
  for (const VarPair& pair : entry.var_pairs) obj["var_pairs"].push_back(to_json(pair));
  return obj;
}

DrbMlEntry entry_from_json(const nlohmann::json& obj, const std::string& where) {
  try {
    DrbMlEntry entry;
    const auto& id = obj.at("ID");
    entry.id = id.is_string() ? std::stoi(id.get<std::string>()) : id.get<int>();
    entry.name = obj.at("name").get<std::string>();
    entry.drb_code = obj.at("DRB_code").get<std::string>();
    entry.trimmed_code = obj.at("trimmed_code").get<std::string>();
    entry.code_len = obj.at("code_len").get<std::size_t>();
    entry.data_race = obj.at("data_race").get<int>();
    entry.data_race_label = obj.at("data_race_label").get<std::string>();
    for (const auto& item : obj.at("var_pairs")) entry.var_pairs.push_back(pair_from_json(item, where));
    return entry;
  } catch (const nlohmann::json::exception& e) {
    throw DataError(where + ": " + e.what());
  } catch (const std::invalid_argument&) {
    throw DataError(where + ": ID is not an integer");
  }
}

std::string dataset_filename(int id) {
  char buffer[32];
  std::snprintf(buffer, sizeof buffer, "DRB-ML-%03d.json", id);
  return buffer;
}

void write_dataset(std::span<const DrbMlEntry> entries, const std::filesystem::path& directory) {
  std::filesystem::create_directories(directory);
  for (const DrbMlEntry& entry : entries) {
    write_text_file(directory / dataset_filename(entry.id), to_json(entry).dump(2, ' ', false, nlohmann::ordered_json::error_handler_t::replace) + "\n");
  }
}

std::vector<DrbMlEntry> load_dataset(const std::filesystem::path& directory) {
  if (!std::filesystem::is_directory(directory)) {
    throw DataError("dataset directory not found: " + directory.string());
  }
  static const std::regex pattern(R"(^DRB-ML-\d+\.json$)");
  std::vector<std::filesystem::path> files;
  for (const auto& item : std::filesystem::directory_iterator(directory)) {
    const std::string name = item.path().filename().string();
    if (item.is_regular_file() && std::regex_match(name, pattern)) files.push_back(item.path());
  }
  std::vector<DrbMlEntry> entries;
  entries.reserve(files.size());
  for (const auto& file : files) {
    entries.push_back(entry_from_json(read_json_file(file), file.string()));
  }
  std::sort(entries.begin(), entries.end(),
            [](const DrbMlEntry& a, const DrbMlEntry& b) { return a.id < b.id; });
  for (std::size_t i = 1; i < entries.size(); ++i) {
    if (entries[i].id == entries[i - 1].id) {
      throw DataError("duplicate ID " + std::to_string(entries[i].id) + " in " + directory.string());
    }
  }
  return entries;
}

}  // namespace drbml
