// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The drbml Authors

#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "drbml/corpus.hpp"

namespace drbml {

enum class Strategy { BP1, BP2, AP1, AP2, BasicFt, AdvancedFt };

std::string_view to_string(Strategy strategy);
/// Accepts the canonical names case-insensitively, with `-` or `_` in the FT names.
std::optional<Strategy> parse_strategy(std::string_view text);
bool is_fine_tuning(Strategy strategy);

enum class Role { System, User, Assistant };

std::string_view to_string(Role role);
std::optional<Role> parse_role(std::string_view text);

struct Message {
  Role role = Role::User;
  std::string text;

  bool operator==(const Message&) const = default;
};

struct PromptInstance {
  Strategy strategy = Strategy::BP1;
  int entry_id = 0;
  std::vector<Message> messages;
  std::optional<int> chain_position;

  bool operator==(const PromptInstance&) const = default;
};

struct FtPair {
  std::string prompt;
  std::string response;

  bool operator==(const FtPair&) const = default;
};

inline constexpr std::string_view kCodeSlot = "{Code_to_analyze}";
inline constexpr std::string_view kChainOutputSlot = "{Chain1_output}";

/// Named prompt templates. Keys: bp1, bp2, ap1, ap2_chain1, ap2_chain2,
/// ap2_chain2_interpolated, basic_ft, advanced_ft.
class TemplateCatalog {
public:
  /// The reference texts. `normalized` fixes their spelling slips.
  static TemplateCatalog builtin(bool normalized = false);
  /// Starts from `base` and replaces every key that has a `<key>.txt` file.
  static TemplateCatalog from_directory(const std::filesystem::path& directory,
                                        const TemplateCatalog& base = builtin());

  const std::string& get(std::string_view key) const;
  void set(std::string key, std::string text);
  std::vector<std::string> keys() const;

private:
  std::map<std::string, std::string, std::less<>> templates_;
};

/// Substitutes the single `{Code_to_analyze}` slot.
std::string fill_code_slot(std::string_view templ, std::string_view code);

/// Renders one of the four prompt strategies. AP2 yields two instances;
/// the second carries no code and expects Chain1's answer as context.
/// Throws UnsupportedStrategy for the fine-tuning strategies and UsageError
/// for an entry without code.
std::vector<PromptInstance> render(Strategy strategy, const DrbMlEntry& entry,
                                   const TemplateCatalog& catalog = TemplateCatalog::builtin());

/// Chain2 text for backends without conversational state.
std::string render_chain2_interpolated(std::string_view chain1_output,
                                       const TemplateCatalog& catalog = TemplateCatalog::builtin());

/// Lines used for the fine-tuning response: the remapped trimmed-code lines
/// when known, else the annotation lines.
std::array<int, 2> ft_lines(const VarPair& pair);

FtPair make_ft_pairs(const DrbMlEntry& entry, Strategy kind,
                     const TemplateCatalog& catalog = TemplateCatalog::builtin());

/// Writes one `{"prompt": ..., "response": ...}` object per line.
std::size_t export_ft_dataset(std::span<const DrbMlEntry> entries, Strategy kind,
                              const std::filesystem::path& path,
                              const TemplateCatalog& catalog = TemplateCatalog::builtin());

}  // namespace drbml
