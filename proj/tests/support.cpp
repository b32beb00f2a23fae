// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The drbml Authors

#include "support.hpp"

#include <atomic>
#include <fstream>
#include <random>
#include <sstream>
#include <stdexcept>

#include <unistd.h>

#include <json.hpp>

#include "drbml/prompts.hpp"

namespace drbml::testing {

std::filesystem::path data_path(const std::string& relative) {
  return std::filesystem::path(DRBML_TEST_DATA) / relative;
}

std::string slurp(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

TempDir::TempDir() {
  static std::atomic<int> counter{0};
  std::random_device rd;
  path_ = std::filesystem::temp_directory_path() /
          ("drbml-test-" + std::to_string(::getpid()) + "-" + std::to_string(counter++) + "-" +
           std::to_string(rd()));
  std::filesystem::create_directories(path_);
}

TempDir::~TempDir() {
  std::error_code ec;
  std::filesystem::remove_all(path_, ec);
}

std::vector<DrbMlEntry> synthetic_corpus(int positives, int negatives) {
  std::vector<DrbMlEntry> out;
  const int n = positives + negatives;
  for (int id = 1; id <= n; ++id) {
    const bool race = id <= positives;
    DrbMlEntry e;
    e.id = id;
    e.name = "DRB" + std::to_string(id) + "-synthetic" + std::to_string(id) + "-orig-" +
             (race ? "yes" : "no") + ".c";
    const std::string var = "v" + std::to_string(id);
    e.trimmed_code = "int " + var + "[64];\nvoid k" + std::to_string(id) +
                     "(void) {\n#pragma omp parallel for\n  for (int i = 0; i < 63; i++)\n    " + var +
                     (race ? "[i] = " + var + "[i+1] + 1;\n" : "[i] = i;\n") + "}\n";
    e.drb_code = "/* synthetic */\n" + e.trimmed_code;
    e.code_len = utf8_length(e.trimmed_code);
    e.data_race = race ? 1 : 0;
    e.data_race_label = race ? "Y?" : "N?";
    if (race) {
      VarPair p;
      p.names = {var + "[i+1]", var + "[i]"};
      p.lines = {6, 6};
      p.cols = {12, 5};
      p.operations = {AccessOp::Read, AccessOp::Write};
      p.trimmed_lines = std::array<int, 2>{5, 5};
      e.var_pairs.push_back(p);
    }
    out.push_back(std::move(e));
  }
  return out;
}

const DrbMlEntry* find_entry(const std::vector<DrbMlEntry>& entries, const Conversation& conversation) {
  for (const Message& m : conversation) {
    for (const DrbMlEntry& e : entries) {
      if (!e.trimmed_code.empty() && m.text.find(e.trimmed_code) != std::string::npos) return &e;
    }
  }
  return nullptr;
}

namespace {

std::string named_fields_answer(const DrbMlEntry& e) {
  if (e.data_race == 0) return "{\"data_race\": 0, \"pairs\": []}";
  std::string out = "Yes, there is a data race.\n```json\n[";
  for (std::size_t i = 0; i < e.var_pairs.size(); ++i) {
    const VarPair& p = e.var_pairs[i];
    const auto lines = ft_lines(p);
    if (i > 0) out += ", ";
    out += "{\"name\": [\"" + p.names[0] + "\", \"" + p.names[1] + "\"], \"line\": [" +
           std::to_string(lines[0]) + ", " + std::to_string(lines[1]) + "], \"col\": [" +
           std::to_string(p.cols[0]) + ", " + std::to_string(p.cols[1]) + "], \"operation_types\": [\"" +
           (p.operations[0] == AccessOp::Write ? "write" : "read") + "\", \"" +
           (p.operations[1] == AccessOp::Write ? "write" : "read") + "\"]}";
  }
  return out + "]\n```";
}

}  // namespace

MockBackend::Responder oracle_responder(const std::vector<DrbMlEntry>& entries, OracleSchema schema) {
  return [entries, schema](const ChatRequest& request) -> std::optional<std::string> {
    const DrbMlEntry* e = find_entry(entries, request.conversation);
    if (e == nullptr) return std::nullopt;
    switch (schema) {
      case OracleSchema::Basic: return std::string(e->data_race ? "yes" : "no");
      case OracleSchema::Advanced: return make_ft_pairs(*e, Strategy::AdvancedFt).response;
      case OracleSchema::NamedFields: return named_fields_answer(*e);
    }
    return std::nullopt;
  };
}

MockBackend::Responder complement_responder(const std::vector<DrbMlEntry>& entries) {
  return [entries](const ChatRequest& request) -> std::optional<std::string> {
    const DrbMlEntry* e = find_entry(entries, request.conversation);
    if (e == nullptr) return std::nullopt;
    return std::string(e->data_race ? "No." : "Yes.");
  };
}

bool has_residual_comment(const std::string& s) {
  char quote = 0;
  for (std::size_t i = 0; i < s.size(); ++i) {
    const char c = s[i];
    if (quote != 0) {
      if (c == '\\') {
        ++i;
      } else if (c == quote || c == '\n') {
        quote = 0;
      }
      continue;
    }
    if (c == '"' || c == '\'') {
      quote = c;
    } else if (c == '/' && i + 1 < s.size() && (s[i + 1] == '/' || s[i + 1] == '*')) {
      return true;
    }
  }
  return false;
}

std::string fuzz_source(std::mt19937& rng) {
  static const std::vector<std::string> fragments = {
      "int x = 1;", " ", "\n", "\n\n", "// line comment", "/* block */", "/* multi\nline\n*/",
      "\"str // not\"", "\"a /* b */ c\"", "'/'", "'\\''", "\"esc \\\" // q\"", "a/b", "x / *p",
      "#pragma omp parallel for", "for (i=0;i<n;i++)", "{", "}", "\t", "/**/", "/***/", "//\n",
      "a[i]=a[i+1];", "R\"(raw // text)\"", "u8\"utf\"", "ch = '\"';", "\"unterminated\n",
      "x /= 2;", "y = 3 */ 4;"};
  std::uniform_int_distribution<std::size_t> pick(0, fragments.size() - 1);
  std::uniform_int_distribution<int> count(0, 40);
  std::string out;
  const int n = count(rng);
  for (int i = 0; i < n; ++i) out += fragments[pick(rng)];
  return out;
}

std::string random_utf8(std::mt19937& rng, std::size_t max_code_points) {
  std::uniform_int_distribution<std::size_t> len(0, max_code_points);
  std::uniform_int_distribution<int> plane(0, 3);
  std::string out;
  const std::size_t n = len(rng);
  for (std::size_t i = 0; i < n; ++i) {
    char32_t cp = 0;
    switch (plane(rng)) {
      case 0: cp = static_cast<char32_t>(rng() % 0x80); break;
      case 1: cp = static_cast<char32_t>(0x80 + rng() % (0x800 - 0x80)); break;
      case 2:
        do {
          cp = static_cast<char32_t>(0x800 + rng() % (0x10000 - 0x800));
        } while (cp >= 0xD800 && cp <= 0xDFFF);
        break;
      default: cp = static_cast<char32_t>(0x10000 + rng() % (0x110000 - 0x10000)); break;
    }
    if (cp < 0x80) {
      out.push_back(static_cast<char>(cp));
    } else if (cp < 0x800) {
      out.push_back(static_cast<char>(0xC0 | (cp >> 6)));
      out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
    } else if (cp < 0x10000) {
      out.push_back(static_cast<char>(0xE0 | (cp >> 12)));
      out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
      out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
    } else {
      out.push_back(static_cast<char>(0xF0 | (cp >> 18)));
      out.push_back(static_cast<char>(0x80 | ((cp >> 12) & 0x3F)));
      out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
      out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
    }
  }
  return out;
}

void write_mock_script(const std::filesystem::path& path, const std::vector<DrbMlEntry>& entries,
                       Strategy strategy, const std::string& alias, const MockBackend::Responder& responder) {
  ModelConfig config;
  config.model_name = alias;
  const TemplateCatalog& catalog = TemplateCatalog::builtin();
  nlohmann::json responses = nlohmann::json::object();
  auto answer = [&](const Conversation& conversation) {
    const std::string digest = request_digest(conversation, config);
    const auto text = responder(ChatRequest{conversation, config, digest});
    if (!text) throw std::runtime_error("responder has no answer for " + digest);
    responses[digest] = *text;
    return *text;
  };
  for (const DrbMlEntry& e : entries) {
    const std::string first = answer(first_conversation(e, strategy, catalog));
    if (strategy == Strategy::AP2) answer(chain2_conversation(e, first, ChainMode::Chat, catalog));
  }
  std::ofstream out(path, std::ios::binary);
  out << nlohmann::json{{"responses", responses}}.dump(2) << "\n";
  if (!out) throw std::runtime_error("cannot write " + path.string());
}

}  // namespace drbml::testing
