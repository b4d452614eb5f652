// Copyright 2026 The Slotweaver Authors
// SPDX-License-Identifier: Apache-2.0

// Token-sequence rendering and parsing, corpus files and training pairs.
//
// A prompt has three parts, rendered in this order:
//
//   # Key Information Types          <- schema block
//
//   ## Garden Layouts
//   * style: The preferred style of the garden layout.
//
//   # Dialogue                       <- dialogue block
//   Gardener: I'm looking for ...
//
//   Identify Key Information Values from the Dialogue
//
// and a prediction is a values block:
//
//   # Key Information Values
//
//   ## Plant Selections
//   * sunlight: Full Sun
//   - the plant's sun requirements   <- only on newly discovered slots

#pragma once

#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "slotweaver/core.hpp"

namespace slotweaver {

using Json = nlohmann::ordered_json;

/// Literal tokens of the sequence format. Defaults reproduce the format used
/// to train the induction models; a fine-tuned or prompted backend may use a
/// different pack.
struct PromptPack {
  std::string types_header = "# Key Information Types";
  std::string values_header = "# Key Information Values";
  std::string dialogue_header = "# Dialogue";
  std::string instruction = "Identify Key Information Values from the Dialogue";
  std::string revision_instruction = "Revise the Key Information Types";
  std::string domain_prefix = "## ";
  std::string bullet = "* ";
  std::string description_prefix = "- ";

  static const PromptPack& defaults();
  /// Overrides any subset of the fields above from a JSON object.
  static PromptPack from_json(const Json& j);
};

struct RenderOptions {
  /// Oldest turns are dropped once the dialogue block would exceed this many
  /// characters; the current turn is always kept. 0 disables truncation.
  std::size_t context_char_budget = 0;
  const PromptPack* pack = nullptr;

  const PromptPack& tokens() const {
    return pack ? *pack : PromptPack::defaults();
  }
};

struct PromptSequence {
  std::string schema_block;
  std::string dialogue_block;
  std::string instruction;
  StateMode mode = StateMode::kState;
  bool revision_mode = false;

  std::string text() const;
};

struct ParseWarning {
  std::size_t line = 0;  // 1-based line in the parsed text
  std::string message;
};

struct ParsedPrediction {
  DialogueState state;
  /// Keys absent from the known schema, in order of first appearance.
  std::vector<SlotKey> discoveries;
  std::vector<ParseWarning> parse_warnings;
  std::optional<SlotSchema> revised_schema;
};

std::string render_schema_block(const SlotSchema& schema,
                                const PromptPack& pack = PromptPack::defaults());
std::string render_dialogue_block(const Dialogue& dialogue,
                                  std::size_t upto_turn,
                                  const RenderOptions& opts = {});
std::string render_state_block(const DialogueState& state,
                               const PromptPack& pack = PromptPack::defaults());

/// upto_turn is the 0-based index of the last turn shown; throws
/// std::out_of_range when it is past the end of the dialogue.
PromptSequence build_prompt(const SlotSchema& schema, const Dialogue& dialogue,
                            std::size_t upto_turn, StateMode mode,
                            const RenderOptions& opts = {});
std::string render_prompt(const SlotSchema& schema, const Dialogue& dialogue,
                          std::size_t upto_turn, StateMode mode,
                          const RenderOptions& opts = {});

/// Schema block + optional dialogue context + revision instruction.
std::string render_revision_prompt(const SlotSchema& schema,
                                   const Dialogue* context,
                                   const RenderOptions& opts = {});

/// Parses a "# Key Information Types" block into a schema whose slots have
/// no discovery position. Throws Error(kMissingTypesHeader) when the header
/// is absent; every other deviation is reported through warnings.
SlotSchema parse_schema_block(std::string_view text,
                              std::vector<ParseWarning>* warnings = nullptr,
                              const PromptPack& pack = PromptPack::defaults());

/// Total over arbitrary text except for Error(kMissingValuesHeader).
ParsedPrediction parse_state_block(
    std::string_view text, const SlotSchema& known_schema,
    const PromptPack& pack = PromptPack::defaults());

// ---------------------------------------------------------------------------
// Corpus files

struct CorpusFile {
  int format_version = 1;
  std::optional<SlotSchema> gold_schema;
  std::vector<Dialogue> dialogues;
};

Json schema_to_json(const SlotSchema& schema);
/// `where` prefixes field diagnostics ("gold_schema").
SlotSchema schema_from_json(const Json& j, const std::string& where = "schema");
Json state_to_json(const DialogueState& state);
DialogueState state_from_json(const Json& j, const std::string& where = "state");

Json state_log_entry_to_json(const StateLogEntry& entry);
StateLogEntry state_log_entry_from_json(const Json& j,
                                        const std::string& where = "entry");

Json corpus_to_json(const CorpusFile& corpus);
CorpusFile corpus_from_json(const Json& j);
/// Canonical serialization: two-space indented JSON with a trailing newline.
std::string serialize_corpus(const CorpusFile& corpus);
CorpusFile parse_corpus(std::string_view text);

CorpusFile load_corpus(const std::filesystem::path& path);
void save_corpus(const CorpusFile& corpus, const std::filesystem::path& path);

std::string read_text_file(const std::filesystem::path& path);
void write_text_file(const std::filesystem::path& path, std::string_view text);

// ---------------------------------------------------------------------------
// Training pairs

struct TrainingPair {
  std::string prompt;
  std::string target;
};

/// Triples of `current` that are new or carry a different value than in
/// `previous`. Slots dropped from `current` are not represented.
DialogueState state_delta(const DialogueState& previous,
                          const DialogueState& current);

/// Throws Error(kMissingGold) when the corpus has no gold schema or no
/// annotated user turn.
std::vector<TrainingPair> build_training_sequences(
    const CorpusFile& corpus, StateMode mode, const RenderOptions& opts = {});

std::string training_pairs_to_jsonl(std::span<const TrainingPair> pairs);

}  // namespace slotweaver
