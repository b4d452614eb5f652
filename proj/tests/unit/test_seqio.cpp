// Copyright 2026 The Slotweaver Authors
// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include <filesystem>
#include <random>

#include "oracle/oracle.hpp"
#include "slotweaver/error.hpp"
#include "slotweaver/seqio.hpp"
#include "support/figure.hpp"
#include "support/gen.hpp"

using namespace slotweaver;

namespace {

std::size_t count(const std::string& text, const std::string& needle) {
  std::size_t n = 0;
  for (std::size_t pos = text.find(needle); pos != std::string::npos;
       pos = text.find(needle, pos + 1)) {
    ++n;
  }
  return n;
}

Dialogue one_turn() {
  Dialogue d;
  d.id = "x";
  d.turns.push_back({Speaker::kUser, "hello", std::nullopt});
  return d;
}

ErrorCode code_of(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("no error thrown");
  return ErrorCode::kConfig;
}

}  // namespace

TEST_CASE("schema block renders the garden layout verbatim") {
  CHECK(render_schema_block(fig::garden_schema()) == fig::garden_schema_block());
}

TEST_CASE("empty schema, one turn") {
  const std::string text = render_prompt(SlotSchema{}, one_turn(), 0, StateMode::kState);
  CHECK(text ==
        "# Key Information Types\n"
        "\n"
        "# Dialogue\n"
        "User: hello\n"
        "\n"
        "Identify Key Information Values from the Dialogue\n");
  CHECK(count(text, "# Key Information Types") == 1);
  CHECK(count(text, "\n# Dialogue\n") == 1);
}

TEST_CASE("garden prompt layout") {
  const Dialogue d = fig::garden_dialogue();
  const std::string text = render_prompt(fig::garden_schema(), d, 6, StateMode::kState);
  CHECK(count(text, "\n## ") == 2);
  CHECK(count(text, "\n* ") == 5);
  CHECK(text.find("# Key Information Types") < text.find("# Dialogue"));
  CHECK(text.find("Gardener: I see, would it be possible") != std::string::npos);
  CHECK(text.ends_with("Identify Key Information Values from the Dialogue\n"));
  CHECK_THROWS_AS(render_prompt(fig::garden_schema(), d, 7, StateMode::kState),
                  std::out_of_range);
}

TEST_CASE("dialogue truncation keeps the current turn") {
  const Dialogue d = fig::garden_dialogue();
  RenderOptions opts;
  opts.context_char_budget = 60;
  const std::string block = render_dialogue_block(d, 6, opts);
  CHECK(block.find("I see, would it be possible") != std::string::npos);
  CHECK(block.find("I'm looking for") == std::string::npos);
  opts.context_char_budget = 0;
  CHECK(render_dialogue_block(d, 6, opts).find("I'm looking for") != std::string::npos);
}

TEST_CASE("garden values block parses to 6 triples and 1 discovery") {
  const ParsedPrediction p =
      parse_state_block(fig::garden_values_block(), fig::garden_schema());
  CHECK(p.state.size() == 6);
  REQUIRE(p.discoveries.size() == 1);
  CHECK(p.discoveries[0] == canonical_slot_key("plant selections", "sunlight"));
  CHECK(*p.state.description(p.discoveries[0]) == "the plant's sun requirements");
  CHECK(*p.state.value(canonical_slot_key("Plant Selections", "color")) == "Pink");
  CHECK(p.parse_warnings.empty());
}

TEST_CASE("empty text has no values header") {
  CHECK(code_of([] { parse_state_block("", SlotSchema{}); }) ==
        ErrorCode::kMissingValuesHeader);
  CHECK(code_of([] { parse_schema_block("## x\n* a: b\n"); }) ==
        ErrorCode::kMissingTypesHeader);
}

TEST_CASE("stray line between bullets costs one warning") {
  const std::string stray =
      "# Key Information Values\n\n## Garden Layouts\n* style: desert\n"
      "I think that's all.\n* features: fountain\n";
  const std::string clean =
      "# Key Information Values\n\n## Garden Layouts\n* style: desert\n"
      "* features: fountain\n";
  const auto a = parse_state_block(stray, fig::garden_schema());
  const auto b = parse_state_block(clean, fig::garden_schema());
  CHECK(a.state == b.state);
  CHECK(a.parse_warnings.size() == 1);
  CHECK(b.parse_warnings.empty());
}

TEST_CASE("schema block round-trip over random schemas") {
  std::mt19937_64 rng(21);
  for (int i = 0; i < 1000; ++i) {
    const SlotSchema s = gen::random_schema(rng);
    std::vector<ParseWarning> warnings;
    const SlotSchema back = parse_schema_block(render_schema_block(s), &warnings);
    CHECK(warnings.empty());
    REQUIRE(same_slots(back, s));
    // Order is by domain group on both sides.
    const std::string again = render_schema_block(back);
    CHECK(again == render_schema_block(s));
  }
}

TEST_CASE("state block round-trip over random states") {
  std::mt19937_64 rng(22);
  for (int i = 0; i < 1000; ++i) {
    const DialogueState st = gen::random_state(rng, 3, 8);
    const ParsedPrediction p = parse_state_block(render_state_block(st), SlotSchema{});
    CHECK(p.parse_warnings.empty());
    CHECK(p.state == st);
  }
}

TEST_CASE("the prompt schema block round-trips through the schema parser") {
  std::mt19937_64 rng(23);
  const Dialogue d = fig::garden_dialogue();
  for (int i = 0; i < 200; ++i) {
    const SlotSchema s = gen::random_schema(rng);
    const PromptSequence seq = build_prompt(s, d, 4, StateMode::kState);
    CHECK(same_slots(parse_schema_block(seq.text()), s));
  }
}

TEST_CASE("parser is total on random bytes") {
  std::mt19937_64 rng(24);
  const std::string seeds[] = {fig::garden_values_block(), "# Key Information Values\n",
                               "## a\n* b: c\n- d\n"};
  std::size_t headers = 0;
  for (int i = 0; i < 100000; ++i) {
    std::string text;
    if (i % 2 == 0) {
      const std::size_t n = rng() % 64;
      for (std::size_t k = 0; k < n; ++k) text.push_back(static_cast<char>(rng() & 0xff));
    } else {
      text = seeds[rng() % 3];
      const std::size_t edits = 1 + rng() % 6;
      for (std::size_t k = 0; k < edits && !text.empty(); ++k) {
        const std::size_t pos = rng() % text.size();
        switch (rng() % 3) {
          case 0: text[pos] = static_cast<char>(rng() & 0xff); break;
          case 1: text.erase(pos, 1); break;
          default: text.insert(pos, 1, "#*-:\n "[rng() % 6]);
        }
      }
    }
    try {
      const auto p = parse_state_block(text, fig::garden_schema());
      ++headers;
      for (const auto& key : p.discoveries) CHECK_FALSE(fig::garden_schema().contains(key));
    } catch (const Error& e) {
      REQUIRE(e.code() == ErrorCode::kMissingValuesHeader);
    }
  }
  CHECK(headers > 1000);
}

TEST_CASE("corpus load and save") {
  SUBCASE("minimal file") {
    const CorpusFile c = parse_corpus(R"({"format_version":1,"gold_schema":null,
      "dialogues":[{"id":"a","scenario_id":"s","turns":[
        {"speaker":"user","text":"hi","state":null},
        {"speaker":"agent","text":"hello","state":null}]}]})");
    CHECK(c.dialogues.size() == 1);
    CHECK(c.dialogues[0].turns.size() == 2);
    CHECK_FALSE(c.gold_schema.has_value());
  }
  SUBCASE("gold state outside the gold schema") {
    const auto fn = [] {
      parse_corpus(R"({"format_version":1,
        "gold_schema":{"domains":[{"name":"Hotel","slots":[{"name":"area","description":""}]}]},
        "dialogues":[{"id":"a","scenario_id":"s","turns":[
          {"speaker":"user","text":"hi","state":{"Hotel":{"price":"cheap"}}}]}]})");
    };
    CHECK(code_of(fn) == ErrorCode::kCorpusFormat);
  }
  SUBCASE("diagnostics name the field") {
    try {
      parse_corpus(R"({"format_version":1,"gold_schema":null,"dialogues":[
        {"id":"a","scenario_id":"s","turns":[{"speaker":"robot","text":"x","state":null}]}]})");
      FAIL("expected an error");
    } catch (const Error& e) {
      CHECK(std::string(e.what()).find("turns[0].speaker") != std::string::npos);
    }
  }
  SUBCASE("syntax errors report a line") {
    try {
      parse_corpus("{\n\"format_version\": 1,\n oops\n}");
      FAIL("expected an error");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::kCorpusFormat);
      CHECK(std::string(e.what()).find("line 3") != std::string::npos);
    }
  }
  SUBCASE("non-alternating speakers") {
    const auto fn = [] {
      parse_corpus(R"({"format_version":1,"gold_schema":null,"dialogues":[
        {"id":"a","scenario_id":"s","turns":[{"speaker":"agent","text":"x","state":null}]}]})");
    };
    CHECK(code_of(fn) == ErrorCode::kCorpusFormat);
  }
  SUBCASE("file round trip") {
    const auto dir = std::filesystem::temp_directory_path() / "sw_seqio_test";
    std::mt19937_64 rng(3);
    const CorpusFile c = gen::random_corpus(rng);
    save_corpus(c, dir / "c.json");
    CHECK(serialize_corpus(load_corpus(dir / "c.json")) == serialize_corpus(c));
    std::filesystem::remove_all(dir);
  }
}

TEST_CASE("corpus serialization round-trip over random corpora") {
  std::mt19937_64 rng(25);
  for (int i = 0; i < 1000; ++i) {
    const CorpusFile c = gen::random_corpus(rng);
    const std::string text = serialize_corpus(c);
    const CorpusFile back = parse_corpus(text);
    CHECK(serialize_corpus(back) == text);
    REQUIRE(back.dialogues.size() == c.dialogues.size());
    for (std::size_t d = 0; d < c.dialogues.size(); ++d) {
      REQUIRE(back.dialogues[d].turns.size() == c.dialogues[d].turns.size());
      for (std::size_t t = 0; t < c.dialogues[d].turns.size(); ++t) {
        const Turn& a = c.dialogues[d].turns[t];
        const Turn& b = back.dialogues[d].turns[t];
        CHECK(a.text == b.text);
        CHECK(a.speaker == b.speaker);
        CHECK(a.gold_state.has_value() == b.gold_state.has_value());
        if (a.gold_state && b.gold_state) CHECK(*a.gold_state == *b.gold_state);
      }
    }
    CHECK(c.gold_schema.has_value() == back.gold_schema.has_value());
    if (c.gold_schema) CHECK(same_slots(*c.gold_schema, *back.gold_schema));
  }
}

namespace {

CorpusFile labelled_corpus() {
  CorpusFile c;
  SlotSchema gold;
  const SlotKey area = canonical_slot_key("Hotel", "area");
  const SlotKey price = canonical_slot_key("Hotel", "price");
  gold.add(make_slot_def(area, "Where the hotel is"));
  gold.add(make_slot_def(price, "Price range"));
  c.gold_schema = gold;
  Dialogue d;
  d.id = "d1";
  d.scenario_id = "s";
  DialogueState s1, s2, s3;
  s1.set(area, "north");
  s2.set(area, "north");
  s3.set(area, "north");
  s3.set(price, "cheap");
  d.turns = {{Speaker::kUser, "north please", s1},
             {Speaker::kAgent, "ok", std::nullopt},
             {Speaker::kUser, "still north", s2},
             {Speaker::kAgent, "ok", std::nullopt},
             {Speaker::kUser, "cheap", s3}};
  c.dialogues.push_back(d);
  return c;
}

}  // namespace

TEST_CASE("training sequences per mode") {
  const CorpusFile c = labelled_corpus();
  CHECK(build_training_sequences(c, StateMode::kFinal).size() == 1);
  const auto state = build_training_sequences(c, StateMode::kState);
  CHECK(state.size() == 3);
  const auto update = build_training_sequences(c, StateMode::kUpdate);
  REQUIRE(update.size() == 3);
  CHECK(update[1].target == "# Key Information Values\n");
  // First mention of area is a discovery and carries its gold description.
  CHECK(update[0].target.find("- Where the hotel is") != std::string::npos);
  CHECK(state[1].target.find("- Where") == std::string::npos);
  // The prompt schema only lists slots introduced so far.
  CHECK(state[0].prompt.find("* area") == std::string::npos);
  CHECK(state[1].prompt.find("* area: Where the hotel is") != std::string::npos);
  CHECK(state[2].prompt.find("* price") == std::string::npos);

  CorpusFile unlabelled = c;
  unlabelled.gold_schema.reset();
  CHECK(code_of([&] { build_training_sequences(unlabelled, StateMode::kState); }) ==
        ErrorCode::kMissingGold);
}

TEST_CASE("pair counts match the counting oracle") {
  std::mt19937_64 rng(26);
  for (int i = 0; i < 300; ++i) {
    const CorpusFile c = gen::random_corpus(rng);
    std::vector<std::vector<oracle::TurnShape>> shape;
    bool any = false;
    for (const Dialogue& d : c.dialogues) {
      shape.emplace_back();
      for (const Turn& t : d.turns) {
        shape.back().push_back({t.speaker == Speaker::kUser, t.gold_state.has_value()});
        any = any || t.gold_state.has_value();
      }
    }
    for (StateMode mode : {StateMode::kState, StateMode::kUpdate, StateMode::kFinal}) {
      const std::size_t expected = oracle::count_pairs(shape, mode == StateMode::kFinal);
      if (!c.gold_schema || expected == 0 || !any) {
        CHECK_THROWS_AS(build_training_sequences(c, mode), Error);
      } else {
        CHECK(build_training_sequences(c, mode).size() == expected);
      }
    }
  }
}

TEST_CASE("update targets accumulate to state targets") {
  std::mt19937_64 rng(27);
  for (int i = 0; i < 300; ++i) {
    const CorpusFile c = gen::random_corpus(rng);
    if (!c.gold_schema) continue;
    for (const Dialogue& d : c.dialogues) {
      DialogueState acc;
      DialogueState prev;
      for (const Turn& t : d.turns) {
        if (!t.gold_state) continue;
        const DialogueState delta = state_delta(prev, *t.gold_state);
        const DialogueState parsed =
            parse_state_block(render_state_block(delta), *c.gold_schema).state;
        for (const SlotValue& v : parsed.triples()) acc.set(v.key, v.value);
        // Accumulated deltas cover the current state; removed keys linger.
        for (const SlotValue& v : t.gold_state->triples()) {
          REQUIRE(acc.value(v.key) != nullptr);
          CHECK(*acc.value(v.key) == v.value);
        }
        prev = *t.gold_state;
      }
    }
  }
}

TEST_CASE("custom prompt pack") {
  const PromptPack pack = PromptPack::from_json(
      Json{{"values_header", "# Values"}, {"bullet", "- "}, {"description_prefix", "> "}});
  DialogueState st;
  const SlotKey k = canonical_slot_key("D", "s");
  st.set(k, "v");
  st.set_description(k, "desc");
  const std::string text = render_state_block(st, pack);
  CHECK(text == "# Values\n\n## D\n- s: v\n> desc\n");
  CHECK(parse_state_block(text, SlotSchema{}, pack).state == st);
}

TEST_CASE("training pairs serialize as JSON lines") {
  const std::vector<TrainingPair> pairs = {{"a\nb", "c"}, {"d", "e"}};
  CHECK(training_pairs_to_jsonl(pairs) ==
        "{\"prompt\":\"a\\nb\",\"target\":\"c\"}\n{\"prompt\":\"d\",\"target\":\"e\"}\n");
}
