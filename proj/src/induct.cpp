// Copyright 2026 The Slotweaver Authors
// SPDX-License-Identifier: Apache-2.0

#include "slotweaver/induct.hpp"

#include <algorithm>
#include <numeric>
#include <stdexcept>

#include <spdlog/spdlog.h>

#include "slotweaver/error.hpp"
#include "slotweaver/rng.hpp"

namespace slotweaver {

std::pair<DialogueState, SlotSchema> induce_turn(
    InductionRun& run, const Dialogue& dialogue, std::size_t turn,
    TextGenerator& backend, const InductionSettings& settings) {
  if (turn >= dialogue.turns.size() ||
      dialogue.turns[turn].speaker != Speaker::kUser) {
    throw std::invalid_argument("turn " + std::to_string(turn) + " of " +
                                dialogue.id + " is not a user turn");
  }
  const bool final_mode = run.mode == StateMode::kFinal;
  if (final_mode && dialogue.last_user_turn() != turn) {
    throw std::invalid_argument("final mode predicts only the last user turn");
  }

  RenderOptions render;
  render.context_char_budget = settings.context_char_budget;
  render.pack = settings.pack;
  const std::size_t upto = final_mode ? dialogue.turns.size() - 1 : turn;

  GenerationRequest request;
  request.prompt = render_prompt(run.schema, dialogue, upto, run.mode, render);
  request.max_output = settings.max_output;
  request.temperature = settings.temperature;
  const std::string response = backend.generate(request);

  const Position at{run.stream_position.dialogue,
                    static_cast<std::int64_t>(turn)};
  run.stream_position = at;

  DialogueState state;
  try {
    ParsedPrediction parsed =
        parse_state_block(response, run.schema, render.tokens());
    run.parse_warnings += parsed.parse_warnings.size();
    state = std::move(parsed.state);
    if (run.dst_only) {
      for (const SlotKey& key : parsed.discoveries) {
        spdlog::debug("DST mode: dropping discovered slot {}", key.str());
        state.erase(key);
        ++run.dropped_discoveries;
      }
    }
  } catch (const Error& e) {
    if (e.code() != ErrorCode::kMissingValuesHeader) throw;
    ++run.parse_failures;
    spdlog::debug("{} turn {}: {}", dialogue.id, turn, e.what());
  }

  if (!run.dst_only) {
    run.schema = schema_update(run.schema, state, at);
    if (run.schema.size() > settings.hard_cap) {
      throw Error(ErrorCode::kSchemaOverflow,
                  "schema reached " + std::to_string(run.schema.size()) +
                      " slots (hard cap " + std::to_string(settings.hard_cap) +
                      ") at dialogue " + dialogue.id);
    }
  }
  if (run.refiner != nullptr && !run.dst_only) {
    run.refiner->observe(state, at.dialogue);
  }
  run.per_turn_states.push_back(
      {at, dialogue.id, dialogue.scenario_id, state});
  ++run.turns_processed;
  return {std::move(state), run.schema};
}

std::vector<std::size_t> stream_order(std::size_t count,
                                      std::optional<std::uint64_t> seed) {
  std::vector<std::size_t> order(count);
  std::iota(order.begin(), order.end(), std::size_t{0});
  if (seed) {
    Rng rng(*seed);
    shuffle_in_place(std::span<std::size_t>(order), rng);
  }
  return order;
}

namespace {

bool is_fatal(const Error& e) {
  return e.code() == ErrorCode::kAuth || e.code() == ErrorCode::kSchemaOverflow;
}

}  // namespace

InductionResult run_induction(const std::vector<const Dialogue*>& dialogues,
                              TextGenerator& backend,
                              const InductionOptions& options) {
  const InductionSettings& settings = options.settings;
  InductionRun run;
  run.schema = options.initial_schema.value_or(SlotSchema{});
  run.mode = settings.mode;
  run.refiner = options.refiner;
  run.dst_only = options.dst_only;
  if (run.refiner != nullptr) run.refiner->reset();

  InductionResult result;
  result.initial_version = run.schema.version();

  const auto order = stream_order(dialogues.size(), settings.shuffle_seed);
  for (std::size_t k = 0; k < order.size(); ++k) {
    const Dialogue& d = *dialogues[order[k]];
    run.stream_position = {static_cast<std::int64_t>(k), 0};

    std::vector<std::size_t> turns;
    if (settings.mode == StateMode::kFinal) {
      if (auto last = d.last_user_turn()) turns.push_back(*last);
    } else {
      for (std::size_t t = 0; t < d.turns.size(); ++t) {
        if (d.turns[t].speaker == Speaker::kUser) turns.push_back(t);
      }
    }
    for (std::size_t t : turns) {
      try {
        induce_turn(run, d, t, backend, settings);
      } catch (const Error& e) {
        if (is_fatal(e)) throw;
        run.errors.push_back(d.id + " turn " + std::to_string(t) + ": " +
                             e.what());
        run.per_turn_states.push_back(
            {{static_cast<std::int64_t>(k), static_cast<std::int64_t>(t)},
             d.id,
             d.scenario_id,
             {}});
        ++run.turns_processed;
      }
    }
    if (run.refiner != nullptr && !run.dst_only) {
      try {
        run.schema = run.refiner->at_dialogue_end(
            run.schema, static_cast<std::int64_t>(k), d);
      } catch (const Error& e) {
        if (is_fatal(e)) throw;
        run.errors.push_back(d.id + " refinement: " + e.what());
      }
    }
  }

  result.final_schema = std::move(run.schema);
  result.states = std::move(run.per_turn_states);
  result.parse_failures = run.parse_failures;
  result.parse_warnings = run.parse_warnings;
  result.dropped_discoveries = run.dropped_discoveries;
  result.turns_processed = run.turns_processed;
  result.errors = std::move(run.errors);
  return result;
}

namespace {

std::vector<const Dialogue*> pointers(const CorpusFile& corpus) {
  std::vector<const Dialogue*> out;
  out.reserve(corpus.dialogues.size());
  for (const Dialogue& d : corpus.dialogues) out.push_back(&d);
  return out;
}

}  // namespace

InductionResult run_induction(const CorpusFile& corpus, TextGenerator& backend,
                              const InductionOptions& options) {
  return run_induction(pointers(corpus), backend, options);
}

TwoPassResult run_two_pass(const std::vector<const Dialogue*>& dialogues,
                           TextGenerator& backend,
                           const InductionOptions& options) {
  TwoPassResult out;
  InductionOptions first = options;
  first.dst_only = false;
  out.pass1 = run_induction(dialogues, backend, first);
  out.final_schema = out.pass1.final_schema;

  InductionOptions second = options;
  second.dst_only = true;
  second.refiner = nullptr;
  second.initial_schema = out.final_schema;
  out.pass2 = run_induction(dialogues, backend, second);
  return out;
}

TwoPassResult run_two_pass(const CorpusFile& corpus, TextGenerator& backend,
                           const InductionOptions& options) {
  return run_two_pass(pointers(corpus), backend, options);
}

std::vector<std::pair<std::string, DialogueState>> accumulate_states(
    const std::vector<StateLogEntry>& log, StateMode mode) {
  std::vector<std::pair<std::string, DialogueState>> out;
  for (const StateLogEntry& e : log) {
    auto it = std::find_if(out.begin(), out.end(), [&](const auto& p) {
      return p.first == e.dialogue_id;
    });
    if (it == out.end()) {
      out.push_back({e.dialogue_id, {}});
      it = out.end() - 1;
    }
    if (mode == StateMode::kUpdate) {
      for (const SlotValue& t : e.state.triples()) it->second.set(t.key, t.value);
    } else {
      it->second = e.state;
    }
  }
  return out;
}

Json induction_result_to_json(const InductionResult& result) {
  Json states = Json::array();
  for (const StateLogEntry& e : result.states) {
    states.push_back(state_log_entry_to_json(e));
  }
  return Json{{"final_schema", schema_to_json(result.final_schema)},
              {"states", std::move(states)},
              {"parse_failures", result.parse_failures},
              {"parse_warnings", result.parse_warnings},
              {"dropped_discoveries", result.dropped_discoveries},
              {"turns_processed", result.turns_processed},
              {"errors", result.errors}};
}

}  // namespace slotweaver
