// Copyright 2026 The Slotweaver Authors
// SPDX-License-Identifier: Apache-2.0

// Streaming schema induction. Each user turn (or each dialogue in final
// mode) the current schema and dialogue context are rendered into a prompt,
// the backend predicts a values block, and the schema grows by the union
// with the predicted keys. Refiners run at dialogue boundaries.

#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "slotweaver/backend.hpp"
#include "slotweaver/core.hpp"
#include "slotweaver/refine.hpp"
#include "slotweaver/seqio.hpp"

namespace slotweaver {

struct InductionSettings {
  StateMode mode = StateMode::kState;
  std::size_t context_char_budget = 8000;
  /// The run aborts with Error(kSchemaOverflow) above this many slots.
  std::size_t hard_cap = 300;
  int max_output = 1024;
  double temperature = 0.0;
  /// Shuffle the dialogue stream with this seed; corpus order when unset.
  std::optional<std::uint64_t> shuffle_seed;
  const PromptPack* pack = nullptr;
};

struct InductionRun {
  SlotSchema schema;
  Position stream_position;
  std::vector<StateLogEntry> per_turn_states;
  StateMode mode = StateMode::kState;
  Refiner* refiner = nullptr;
  bool dst_only = false;

  // Counters surfaced in the run report.
  std::size_t parse_failures = 0;
  std::size_t parse_warnings = 0;
  std::size_t dropped_discoveries = 0;
  std::size_t turns_processed = 0;
  std::vector<std::string> errors;
};

/// Processes one user turn. Backend errors propagate; a response without a
/// values header is recorded as an empty state. In dst_only runs discovered
/// keys are dropped and the schema is never modified.
std::pair<DialogueState, SlotSchema> induce_turn(
    InductionRun& run, const Dialogue& dialogue, std::size_t turn,
    TextGenerator& backend, const InductionSettings& settings = {});

struct InductionResult {
  SlotSchema final_schema;
  std::vector<StateLogEntry> states;
  std::size_t parse_failures = 0;
  std::size_t parse_warnings = 0;
  std::size_t dropped_discoveries = 0;
  std::size_t turns_processed = 0;
  std::vector<std::string> errors;
  /// Versions of the schema observed before and after the run.
  std::uint64_t initial_version = 0;
};

struct InductionOptions {
  InductionSettings settings;
  Refiner* refiner = nullptr;
  bool dst_only = false;
  std::optional<SlotSchema> initial_schema;
};

/// Dialogue stream order used by run_induction: corpus order, or a seeded
/// Fisher-Yates shuffle of it.
std::vector<std::size_t> stream_order(std::size_t count,
                                      std::optional<std::uint64_t> seed);

/// Runs the stream. Per-turn errors are collected in the result; only
/// Error(kAuth) and Error(kSchemaOverflow) abort.
InductionResult run_induction(const std::vector<const Dialogue*>& dialogues,
                              TextGenerator& backend,
                              const InductionOptions& options);
InductionResult run_induction(const CorpusFile& corpus, TextGenerator& backend,
                              const InductionOptions& options);

struct TwoPassResult {
  SlotSchema final_schema;
  InductionResult pass1;
  InductionResult pass2;
};

/// Pass 1 induces the final schema; pass 2 re-tracks every state against it
/// with discoveries ignored. Both passes use the same stream order.
TwoPassResult run_two_pass(const std::vector<const Dialogue*>& dialogues,
                           TextGenerator& backend,
                           const InductionOptions& options);
TwoPassResult run_two_pass(const CorpusFile& corpus, TextGenerator& backend,
                           const InductionOptions& options);

/// Per dialogue id, the left fold of the logged states: update-mode
/// predictions are applied as deltas, state/final predictions replace.
std::vector<std::pair<std::string, DialogueState>> accumulate_states(
    const std::vector<StateLogEntry>& log, StateMode mode);

Json induction_result_to_json(const InductionResult& result);

}  // namespace slotweaver
