// Copyright 2026 The Slotweaver Authors
// SPDX-License-Identifier: Apache-2.0

// Hand-built malformed generations with the states a careful reader would
// extract from them.

#include <doctest.h>

#include <string>
#include <tuple>
#include <vector>

#include "slotweaver/seqio.hpp"
#include "support/figure.hpp"

using namespace slotweaver;

namespace {

struct Fixture {
  const char* name;
  std::string text;
  std::vector<std::tuple<std::string, std::string, std::string>> expected;
  std::size_t warnings;
  std::size_t discoveries;
};

const std::string H = "# Key Information Values\n";

std::vector<Fixture> fixtures() {
  return {
      {"preamble before header",
       "Sure, here are the values:\n" + H + "## Garden Layouts\n* style: desert\n",
       {{"Garden Layouts", "style", "desert"}}, 1, 0},
      {"bold header", "# **Key Information Values**\n## Garden Layouts\n* style: desert\n",
       {{"Garden Layouts", "style", "desert"}}, 1, 0},
      {"lowercase header", "# key information values\n## Garden Layouts\n* style: desert\n",
       {{"Garden Layouts", "style", "desert"}}, 1, 0},
      {"stray prose", H + "## Garden Layouts\n* style: desert\nthat is all\n",
       {{"Garden Layouts", "style", "desert"}}, 1, 0},
      {"bullet before any domain", H + "* style: desert\n## Garden Layouts\n* features: pond\n",
       {{"Garden Layouts", "features", "pond"}}, 1, 0},
      {"missing colon", H + "## Garden Layouts\n* style desert\n* features: pond\n",
       {{"Garden Layouts", "features", "pond"}}, 1, 0},
      {"empty value", H + "## Garden Layouts\n* style:\n* features: pond\n",
       {{"Garden Layouts", "features", "pond"}}, 1, 0},
      {"empty name", H + "## Garden Layouts\n* : desert\n* features: pond\n",
       {{"Garden Layouts", "features", "pond"}}, 1, 0},
      {"duplicate key, last wins",
       H + "## Garden Layouts\n* style: desert\n* Style: tropical\n",
       {{"Garden Layouts", "style", "tropical"}}, 1, 0},
      {"orphan description", H + "## Garden Layouts\n- a description\n* style: desert\n",
       {{"Garden Layouts", "style", "desert"}}, 1, 0},
      {"description on known slot",
       H + "## Garden Layouts\n* style: desert\n- the style\n",
       {{"Garden Layouts", "style", "desert"}}, 1, 0},
      {"empty description on discovery",
       H + "## Plant Selections\n* sunlight: full\n-\n",
       {{"Plant Selections", "sunlight", "full"}}, 1, 1},
      {"second top-level header stops parsing",
       H + "## Garden Layouts\n* style: desert\n# Dialogue\n## Garden Layouts\n* features: pond\n",
       {{"Garden Layouts", "style", "desert"}}, 1, 0},
      {"empty domain header", H + "##\n* style: desert\n## Garden Layouts\n* features: pond\n",
       {{"Garden Layouts", "features", "pond"}}, 2, 0},
      {"crlf line endings", "# Key Information Values\r\n## Garden Layouts\r\n* style: desert\r\n",
       {{"Garden Layouts", "style", "desert"}}, 0, 0},
      {"indented bullets", H + "  ## Garden Layouts\n    * style: desert  \n",
       {{"Garden Layouts", "style", "desert"}}, 0, 0},
      {"header only", H, {}, 0, 0},
      {"value with colons", H + "## Schedule\n* time: 10:30 am\n",
       {{"Schedule", "time", "10:30 am"}}, 0, 1},
      {"unknown domain is a discovery",
       H + "## Water Features\n* pump: solar\n- How the pump is powered\n",
       {{"Water Features", "pump", "solar"}}, 0, 1},
      {"echoed schema then values",
       fig::garden_schema_block() + "\n" + H + "## Garden Layouts\n* style: desert\n",
       {{"Garden Layouts", "style", "desert"}}, 1, 0},
  };
}

}  // namespace

TEST_CASE("twenty malformed generations") {
  const auto all = fixtures();
  REQUIRE(all.size() == 20);
  for (const Fixture& f : all) {
    CAPTURE(f.name);
    const ParsedPrediction p = parse_state_block(f.text, fig::garden_schema());
    DialogueState expected;
    for (const auto& [d, n, v] : f.expected) expected.set(canonical_slot_key(d, n), v);
    CHECK(p.state.size() == expected.size());
    for (const SlotValue& t : expected.triples()) {
      const std::string* got = p.state.value(t.key);
      REQUIRE_MESSAGE(got != nullptr, t.key.str());
      CHECK(*got == t.value);
    }
    CHECK(p.parse_warnings.size() == f.warnings);
    CHECK(p.discoveries.size() == f.discoveries);
  }
}
