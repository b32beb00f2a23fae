// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The drbml Authors

#pragma once

#include <filesystem>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "drbml/corpus.hpp"
#include "drbml/llm.hpp"

namespace drbml::testing {

std::filesystem::path data_path(const std::string& relative);
std::string slurp(const std::filesystem::path& path);

/// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
public:
  TempDir();
  ~TempDir();
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& child) const { return path_ / child; }

private:
  std::filesystem::path path_;
};

/// Entries 1..positives+negatives, race-yes first. Each race-yes entry has
/// one pair whose trimmed lines differ from its annotation lines.
std::vector<DrbMlEntry> synthetic_corpus(int positives, int negatives);

/// The entry whose trimmed code appears in the conversation, if any.
const DrbMlEntry* find_entry(const std::vector<DrbMlEntry>& entries, const Conversation& conversation);

enum class OracleSchema { Basic, Advanced, NamedFields };

/// Answers every request with the ground truth of the entry it mentions.
MockBackend::Responder oracle_responder(const std::vector<DrbMlEntry>& entries, OracleSchema schema);
/// Answers every request with the opposite verdict.
MockBackend::Responder complement_responder(const std::vector<DrbMlEntry>& entries);

/// True if a comment opener appears outside a string or char literal.
/// Written without sharing code with the stripper.
bool has_residual_comment(const std::string& s);

/// Random C-ish text built from fragments that stress the comment lexer.
std::string fuzz_source(std::mt19937& rng);

/// Valid UTF-8 of up to `max_code_points` random code points, surrogates excluded.
std::string random_utf8(std::mt19937& rng, std::size_t max_code_points);

/// Writes a mock script answering every request `strategy` issues for
/// `entries` under the default model config for `alias`.
void write_mock_script(const std::filesystem::path& path, const std::vector<DrbMlEntry>& entries,
                       Strategy strategy, const std::string& alias, const MockBackend::Responder& responder);

}  // namespace drbml::testing
