// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The drbml Authors

#include <doctest.h>

#include <fstream>
#include <sstream>

#include <json.hpp>

#include "drbml/corpus.hpp"
#include "drbml/error.hpp"
#include "drbml/prompts.hpp"
#include "support.hpp"

using namespace drbml;
using drbml::testing::data_path;
using drbml::testing::slurp;
using drbml::testing::TempDir;

namespace {

constexpr std::string_view kSentinel = "\x01SENTINEL-CODE\x01";

DrbMlEntry sentinel_entry() {
  DrbMlEntry e;
  e.id = 1;
  e.name = "DRB001-antidep1-orig-yes.c";
  e.trimmed_code = std::string(kSentinel);
  e.code_len = utf8_length(e.trimmed_code);
  e.data_race = 1;
  return e;
}

// Puts the slot back where the code went.
std::string excise(std::string text) {
  const std::size_t at = text.find(kSentinel);
  REQUIRE(at != std::string::npos);
  text.replace(at, kSentinel.size(), kCodeSlot);
  return text;
}

std::string golden(const std::string& name) { return slurp(data_path("golden/" + name + ".txt")); }

DrbMlEntry drb001() {
  return build_entry(Microbenchmark::from_file(data_path("fixtures/drb/DRB001-antidep1-orig-yes.c")), 1).entry;
}

}  // namespace

TEST_CASE("rendered prompts match the golden files") {
  const DrbMlEntry e = sentinel_entry();
  for (const auto& [strategy, name] : std::vector<std::pair<Strategy, std::string>>{
           {Strategy::BP1, "bp1"}, {Strategy::BP2, "bp2"}, {Strategy::AP1, "ap1"}}) {
    CAPTURE(name);
    const auto instances = render(strategy, e);
    REQUIRE(instances.size() == 1);
    REQUIRE(instances[0].messages.size() == 1);
    CHECK(instances[0].messages[0].role == Role::User);
    CHECK(excise(instances[0].messages[0].text) == golden(name));
  }

  const auto ap2 = render(Strategy::AP2, e);
  REQUIRE(ap2.size() == 2);
  CHECK(ap2[0].chain_position == 0);
  CHECK(ap2[1].chain_position == 1);
  CHECK(excise(ap2[0].messages[0].text) == golden("ap2_chain1"));
  CHECK(ap2[1].messages[0].text == golden("ap2_chain2"));
  CHECK(ap2[1].messages[0].text.find(kSentinel) == std::string::npos);

  CHECK(excise(make_ft_pairs(e, Strategy::BasicFt).prompt) == golden("basic_ft"));
  CHECK(excise(make_ft_pairs(e, Strategy::AdvancedFt).prompt) == golden("advanced_ft"));
}

TEST_CASE("the code appears exactly once and verbatim") {
  const DrbMlEntry e = drb001();
  for (Strategy s : {Strategy::BP1, Strategy::BP2, Strategy::AP1, Strategy::AP2}) {
    const std::string text = render(s, e)[0].messages[0].text;
    const std::size_t at = text.find(e.trimmed_code);
    REQUIRE(at != std::string::npos);
    CHECK(text.find(e.trimmed_code, at + 1) == std::string::npos);
    CHECK(text.find(kCodeSlot) == std::string::npos);
  }
}

TEST_CASE("render rejects fine-tuning strategies and empty code") {
  const DrbMlEntry e = sentinel_entry();
  CHECK_THROWS_AS(render(Strategy::BasicFt, e), UnsupportedStrategy);
  CHECK_THROWS_AS(render(Strategy::AdvancedFt, e), UnsupportedStrategy);
  DrbMlEntry empty = e;
  empty.trimmed_code.clear();
  CHECK_THROWS_AS(render(Strategy::BP1, empty), UsageError);
  CHECK_THROWS_AS(make_ft_pairs(e, Strategy::BP1), UnsupportedStrategy);
}

TEST_CASE("fill_code_slot requires exactly one slot") {
  CHECK(fill_code_slot("a {Code_to_analyze} b", "X") == "a X b");
  CHECK_THROWS_AS(fill_code_slot("no slot", "X"), UsageError);
  CHECK_THROWS_AS(fill_code_slot("{Code_to_analyze}{Code_to_analyze}", "X"), UsageError);
}

TEST_CASE("strategy names") {
  for (Strategy s : {Strategy::BP1, Strategy::BP2, Strategy::AP1, Strategy::AP2, Strategy::BasicFt,
                     Strategy::AdvancedFt}) {
    CHECK(parse_strategy(to_string(s)) == s);
  }
  CHECK(parse_strategy("basic-ft") == Strategy::BasicFt);
  CHECK(parse_strategy("ap2") == Strategy::AP2);
  CHECK_FALSE(parse_strategy("BP3").has_value());
}

TEST_CASE("basic fine-tuning responses are yes or no") {
  DrbMlEntry e = drb001();
  CHECK(make_ft_pairs(e, Strategy::BasicFt).response == "yes");
  e.data_race = 0;
  e.var_pairs.clear();
  CHECK(make_ft_pairs(e, Strategy::BasicFt).response == "no");
}

TEST_CASE("advanced fine-tuning response for DRB001") {
  const DrbMlEntry e = drb001();
  const std::string expected =
      "\"yes\",\n"
      "{\n"
      "    \"data_race\": 1,\n"
      "    \"variable_names\": [\"a[i+1]\", \"a[i]\"],\n"
      "    \"variable_locations\": [14, 14],\n"
      "    \"operation_types\": [\"read\", \"write\"]\n"
      "}";
  CHECK(make_ft_pairs(e, Strategy::AdvancedFt).response == expected);

  DrbMlEntry no = e;
  no.data_race = 0;
  no.var_pairs.clear();
  CHECK(make_ft_pairs(no, Strategy::AdvancedFt).response == "no");

  DrbMlEntry unannotated = e;
  unannotated.var_pairs.clear();
  CHECK(make_ft_pairs(unannotated, Strategy::AdvancedFt).response == "\"yes\"");
}

TEST_CASE("advanced responses fall back to annotation lines") {
  DrbMlEntry e = drb001();
  e.var_pairs[0].trimmed_lines.reset();
  CHECK(make_ft_pairs(e, Strategy::AdvancedFt).response.find("[64, 64]") != std::string::npos);
}

TEST_CASE("export_ft_dataset writes one JSON object per line") {
  TempDir dir;
  const auto corpus = drbml::testing::synthetic_corpus(3, 2);
  const auto path = dir / "ft.jsonl";
  CHECK(export_ft_dataset(corpus, Strategy::AdvancedFt, path) == 5);
  std::istringstream lines(slurp(path));
  std::string line;
  std::size_t i = 0;
  while (std::getline(lines, line)) {
    const auto j = nlohmann::json::parse(line);
    REQUIRE(i < corpus.size());
    const FtPair expected = make_ft_pairs(corpus[i], Strategy::AdvancedFt);
    CHECK(j.at("prompt") == expected.prompt);
    CHECK(j.at("response") == expected.response);
    ++i;
  }
  CHECK(i == 5);
}

TEST_CASE("template catalog overrides and normalization") {
  TempDir dir;
  {
    std::ofstream out(dir / "bp1.txt");
    out << "Custom: {Code_to_analyze}";
  }
  const TemplateCatalog catalog = TemplateCatalog::from_directory(dir.path());
  CHECK(catalog.get("bp1") == "Custom: {Code_to_analyze}");
  CHECK(catalog.get("bp2") == TemplateCatalog::builtin().get("bp2"));

  const std::string fixed = TemplateCatalog::builtin(true).get("bp2");
  CHECK(fixed.find("paird") == std::string::npos);
  CHECK(fixed.find("with in") == std::string::npos);
  CHECK(fixed.find("Detail each") != std::string::npos);
  CHECK_THROWS_AS(catalog.get("nope"), UsageError);
}

TEST_CASE("interpolated chain2 carries the chain1 output") {
  const std::string text = render_chain2_interpolated("DEPENDENCE NOTES");
  CHECK(text.find("DEPENDENCE NOTES") != std::string::npos);
  CHECK(text.find(TemplateCatalog::builtin().get("ap2_chain2")) != std::string::npos);
}
