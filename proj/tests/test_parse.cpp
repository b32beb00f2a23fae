// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The drbml Authors

#include <doctest.h>

#include <random>

#include "drbml/prompts.hpp"
#include "drbml/response_parser.hpp"
#include "support.hpp"

using namespace drbml;

namespace {

const std::vector<std::string> kSamples = {
    "yes",
    "no",
    "Yes.",
    "NO",
    "Yes, the provided code exhibits data race issues.",
    "No, there is no data race in this code.",
    "There is a data race on the shared variable sum.",
    "The code does not contain any data race because each thread writes a private copy.",
    "Answer: yes\nThe loop carries an anti-dependence.",
    "Final answer - no",
    "It depends on scheduling.",
    "After careful analysis I found a data race.",
    "This program is free of data races.",
    "{\"data_race\": 1, \"variable_names\": [\"x\", \"x\"]}",
    "```json\n{\"data_race\": 0}\n```",
};

std::string random_bytes(std::mt19937& rng, std::size_t max_len) {
  std::uniform_int_distribution<std::size_t> len(0, max_len);
  std::uniform_int_distribution<int> byte(0, 255);
  std::string s(len(rng), '\0');
  for (char& c : s) c = static_cast<char>(byte(rng));
  return s;
}

// Random text biased toward the parser's syntax so deep paths get exercised.
std::string random_structured(std::mt19937& rng) {
  static const std::vector<std::string> pieces = {
      "{", "}", "[", "]", "\"", "'", ",", ":", "yes", "no", "data race", "\"name\"", "\"line\"",
      "\"variable_names\"", "\"variable_locations\"", "\"operation_types\"", "\"write\"", "\"read\"",
      "[1, 2]", "\"a[i]\"", " at line 7", "```json\n", "```", "\n", "**", "`", "\\", "1e999",
      "\xe2\x82\xac", "\xff", "null", "true", "\"data_race\": 1", "-", ".", " ",
  };
  std::uniform_int_distribution<std::size_t> pick(0, pieces.size() - 1);
  std::uniform_int_distribution<int> count(0, 60);
  std::string s;
  const int n = count(rng);
  for (int i = 0; i < n; ++i) s += pieces[pick(rng)];
  return s;
}

}  // namespace

TEST_CASE("verdict examples") {
  CHECK(extract_verdict("Yes, the provided code exhibits data race issues.").verdict == Verdict::Yes);
  CHECK(extract_verdict("no").verdict == Verdict::No);
  const VerdictExtraction unsure = extract_verdict("It depends on scheduling.");
  CHECK(unsure.verdict == Verdict::Indeterminate);
  CHECK_FALSE(unsure.diagnostics.empty());
}

TEST_CASE("verdict layers") {
  CHECK(extract_verdict("**Yes**, a race exists.").verdict == Verdict::Yes);
  CHECK(extract_verdict("Answer: no").verdict == Verdict::No);
  CHECK(extract_verdict("`no`").verdict == Verdict::No);
  CHECK(extract_verdict("There is a data race on x.").verdict == Verdict::Yes);
  CHECK(extract_verdict("The code does not contain a data race.").verdict == Verdict::No);
  CHECK(extract_verdict("No data race is present.").verdict == Verdict::No);
  CHECK(extract_verdict("{\"data_race\": 0}").verdict == Verdict::No);
  CHECK(extract_verdict("Result follows.\n{\"data_race\": true}").verdict == Verdict::Yes);
  CHECK(extract_verdict("").verdict == Verdict::Indeterminate);
  CHECK_FALSE(extract_verdict("").diagnostics.empty());
}

TEST_CASE("the leading token wins over later cues") {
  CHECK(extract_verdict("No. Although one might think there is a data race, there is not.").verdict ==
        Verdict::No);
  CHECK(extract_verdict("Yes. No synchronization protects the write.").verdict == Verdict::Yes);
}

TEST_CASE("verdict span points into the original text") {
  const std::string text = "**Yes**, there is a race.";
  const VerdictExtraction v = extract_verdict(text);
  REQUIRE(v.span.has_value());
  CHECK(text.substr(v.span->begin, v.span->end - v.span->begin) == "Yes");
}

TEST_CASE("markdown emphasis does not change the verdict") {
  for (const std::string& s : kSamples) {
    CAPTURE(s);
    const Verdict plain = extract_verdict(s).verdict;
    CHECK(extract_verdict("**" + s + "**").verdict == plain);
    CHECK(extract_verdict("*" + s + "*").verdict == plain);
    CHECK(extract_verdict("__" + s + "__").verdict == plain);
  }
}

TEST_CASE("advanced-FT shaped JSON") {
  const std::string text =
      "\"yes\",\n{\n    \"data_race\": 1,\n    \"variable_names\": [\"a[i]\", \"a[i+1]\"],\n"
      "    \"variable_locations\": [14, 14],\n    \"operation_types\": [\"write\", \"read\"]\n}";
  const PairExtraction p = extract_pairs(text);
  REQUIRE(p.pairs.size() == 1);
  CHECK(p.pairs[0].names == std::array<std::string, 2>{"a[i]", "a[i+1]"});
  CHECK(p.pairs[0].lines == std::array<int, 2>{14, 14});
  CHECK(p.pairs[0].operations == std::array<AccessOp, 2>{AccessOp::Write, AccessOp::Read});
  CHECK_FALSE(p.pairs[0].cols.has_value());
  CHECK(parse_response(text).verdict == Verdict::Yes);
}

TEST_CASE("BP2 shaped JSON") {
  const std::string text =
      "yes\n```json\n{\"name\": [\"a[i+1]\", \"a[i]\"], \"line\": [64, 64], \"col\": [10, 5], "
      "\"operation_types\": [\"R\", \"W\"]}\n```";
  const PairExtraction p = extract_pairs(text);
  REQUIRE(p.pairs.size() == 1);
  CHECK(p.pairs[0].cols == std::array<int, 2>{10, 5});
  CHECK(p.pairs[0].lines == std::array<int, 2>{64, 64});
  CHECK(p.pairs[0].operations == std::array<AccessOp, 2>{AccessOp::Read, AccessOp::Write});
}

TEST_CASE("both schemas normalize identically") {
  std::mt19937 rng(99);
  std::uniform_int_distribution<int> line(1, 500);
  const std::vector<std::string> names = {"a[i]", "a[i+1]", "x", "sum", "b[j][k]", "p->v", "y[i-1]"};
  std::uniform_int_distribution<std::size_t> name(0, names.size() - 1);
  std::uniform_int_distribution<int> op(0, 1);
  for (int round = 0; round < 200; ++round) {
    const std::string n0 = names[name(rng)], n1 = names[name(rng)];
    const int l0 = line(rng), l1 = line(rng);
    const bool w0 = op(rng) == 1, w1 = op(rng) == 1;
    const std::string advanced = "{\"data_race\": 1, \"variable_names\": [\"" + n0 + "\", \"" + n1 +
                                 "\"], \"variable_locations\": [" + std::to_string(l0) + ", " +
                                 std::to_string(l1) + "], \"operation_types\": [\"" +
                                 (w0 ? "write" : "read") + "\", \"" + (w1 ? "write" : "read") + "\"]}";
    const std::string bp2 = "{\"name\": [\"" + n0 + "\", \"" + n1 + "\"], \"line\": [" + std::to_string(l0) +
                            ", " + std::to_string(l1) + "], \"col\": [3, 4], \"operation_types\": [\"" +
                            (w0 ? "W" : "R") + "\", \"" + (w1 ? "W" : "R") + "\"]}";
    const auto a = extract_pairs(advanced);
    const auto b = extract_pairs(bp2);
    REQUIRE(a.pairs.size() == 1);
    REQUIRE(b.pairs.size() == 1);
    ParsedPair without_cols = b.pairs[0];
    CHECK(without_cols.cols == std::array<int, 2>{3, 4});
    without_cols.cols.reset();
    CHECK(a.pairs[0] == without_cols);
  }
}

TEST_CASE("several pairs in one array and lenient JSON") {
  const std::string text =
      "Yes.\n[{'name': ['x', 'x'], 'line': [3, 4], 'operation_types': ['write', 'write'],},\n"
      " {\"name\": [\"y[i]\", \"y[i+1]\"], \"line\": [5, 5], \"operation_types\": [\"w\", \"r\"]}]";
  const PairExtraction p = extract_pairs(text);
  REQUIRE(p.pairs.size() == 2);
  CHECK(p.pairs[0].names[0] == "x");
  CHECK(p.pairs[1].operations == std::array<AccessOp, 2>{AccessOp::Write, AccessOp::Read});
  CHECK(relax_json("{'a': [1, 2,],}") == "{\"a\": [1, 2]}");
}

TEST_CASE("flattened name lists are chunked into pairs") {
  const PairExtraction p =
      extract_pairs("{\"variable_names\": [\"a\", \"b\", \"c\", \"d\"], \"variable_locations\": [1, 2, 3, 4]}");
  REQUIRE(p.pairs.size() == 2);
  CHECK(p.pairs[1].names == std::array<std::string, 2>{"c", "d"});
  CHECK(p.pairs[1].lines == std::array<int, 2>{3, 4});
}

TEST_CASE("prose fallback") {
  const PairExtraction p = extract_pairs(
      "Yes, the provided code exhibits data race issues. The data race is caused by the variable "
      "'x' at line 9 and the variable 'x' at line 26. Both instances involve write operations.");
  REQUIRE(p.pairs.size() == 1);
  CHECK(p.pairs[0].names == std::array<std::string, 2>{"x", "x"});
  CHECK(p.pairs[0].lines == std::array<int, 2>{9, 26});
  CHECK_FALSE(p.diagnostics.empty());
}

TEST_CASE("no pairs yields a diagnostic") {
  const PairExtraction p = extract_pairs("No.");
  CHECK(p.pairs.empty());
  CHECK_FALSE(p.diagnostics.empty());
}

TEST_CASE("malformed fragments become diagnostics") {
  const PairExtraction p = extract_pairs("yes {\"name\": [\"a\" \"b\"]}");
  CHECK(p.pairs.empty());
  bool mentions = false;
  for (const auto& d : p.diagnostics) mentions |= d.find("\"name\"") != std::string::npos;
  CHECK(mentions);
}

TEST_CASE("pairs in a NO answer are kept and flagged") {
  const ParsedVerdict v =
      parse_response("No. {\"name\": [\"a\", \"a\"], \"line\": [1, 1], \"operation_types\": [\"W\", \"W\"]}");
  CHECK(v.verdict == Verdict::No);
  CHECK(v.pairs.size() == 1);
  CHECK_FALSE(v.diagnostics.empty());
}

TEST_CASE("indeterminate results always carry diagnostics") {
  std::mt19937 rng(5);
  for (int i = 0; i < 2000; ++i) {
    const std::string s = random_structured(rng);
    const ParsedVerdict v = parse_response(s);
    if (v.verdict == Verdict::Indeterminate) CHECK_FALSE(v.diagnostics.empty());
  }
}

TEST_CASE("parser totality over arbitrary input") {
  std::mt19937 rng(20261014);
  for (int i = 0; i < 3000; ++i) {
    const std::string s = i % 3 == 0   ? random_bytes(rng, 400)
                          : i % 3 == 1 ? drbml::testing::random_utf8(rng, 300)
                                       : random_structured(rng);
    CHECK_NOTHROW(extract_verdict(s));
    CHECK_NOTHROW(extract_pairs(s));
    CHECK_NOTHROW(parse_response(s));
  }
  // Deep nesting, long inputs and unbalanced groups.
  CHECK_NOTHROW(extract_pairs(std::string(5000, '[') + std::string(5000, ']')));
  CHECK_NOTHROW(extract_pairs(std::string(100000, '{')));
  CHECK_NOTHROW(extract_pairs("{\"name\": [\"a\", \"b\"], \"line\": [1e999, -5]}"));
  CHECK_NOTHROW(extract_verdict(std::string(200000, 'y')));
}

TEST_CASE("ground-truth responses parse back to the truth") {
  const auto corpus = drbml::testing::synthetic_corpus(5, 5);
  for (const DrbMlEntry& e : corpus) {
    const ParsedVerdict v = parse_response(make_ft_pairs(e, Strategy::AdvancedFt).response);
    CHECK(v.verdict == (e.data_race ? Verdict::Yes : Verdict::No));
    if (e.data_race) {
      REQUIRE(v.pairs.size() == 1);
      CHECK(v.pairs[0].names == e.var_pairs[0].names);
      CHECK(v.pairs[0].lines == ft_lines(e.var_pairs[0]));
    }
  }
}
