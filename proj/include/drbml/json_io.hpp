// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The drbml Authors

#pragma once

#include <filesystem>
#include <string>

#include <json.hpp>

#include "drbml/corpus.hpp"

namespace drbml {

nlohmann::ordered_json to_json(const VarPair& pair);
nlohmann::ordered_json to_json(const DrbMlEntry& entry);
DrbMlEntry entry_from_json(const nlohmann::json& obj, const std::string& where);

std::string read_text_file(const std::filesystem::path& path);
nlohmann::json read_json_file(const std::filesystem::path& path);

/// Writes through a sibling temporary file and renames it into place, so
/// concurrent readers never observe a partial file.
void write_text_file(const std::filesystem::path& path, const std::string& contents);

}  // namespace drbml
