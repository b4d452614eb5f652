// Copyright 2026 The Slotweaver Authors
// SPDX-License-Identifier: Apache-2.0

// Task-oriented dialogue simulation in four stages: scenario generation,
// schema definition, task initialization and task simulation. Everything
// the backend returns is parsed from plain line-oriented text:
//
//   scenarios      numbered list, "<user> is getting help from <agent> in
//                  order to <task>, <task>, ..."
//   definitions    fenced block of "name: description" lines
//   records        one fenced block per item of "field = value" lines
//   end of task    leading yes/no

#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "slotweaver/backend.hpp"
#include "slotweaver/core.hpp"
#include "slotweaver/rng.hpp"
#include "slotweaver/seqio.hpp"

namespace slotweaver {

struct ScenarioSpec {
  std::string id;
  std::string user_role;
  std::string agent_role;
  std::vector<std::string> tasks;
  std::string description;
};

struct FieldDef {
  std::string name;
  std::string description;
};

struct TaskSchemas {
  std::string task;
  SlotSchema slot_schema;  // domain = task label
  std::vector<FieldDef> knowledge_schema;
};

/// Ordered (field, value) pairs.
using KnowledgeRecord = std::vector<std::pair<std::string, std::string>>;

struct TaskSetup {
  std::vector<KnowledgeRecord> knowledge;
  std::optional<KnowledgeRecord> ideal;
  DialogueState goal;
  std::vector<KnowledgeRecord> red_herrings;
  bool ideal_removed = false;
};

enum class Termination { kCompleted, kStalled, kTurnLimit };

std::string_view to_string(Termination termination);

struct SimTrace {
  Dialogue dialogue;
  /// Index of the agent turn that closed each finished task.
  std::vector<std::size_t> task_boundaries;
  Termination termination = Termination::kTurnLimit;
  std::vector<std::string> warnings;
};

// ---------------------------------------------------------------------------
// Prompt pack

/// Simulation prompt templates with {named} placeholders. Names: scenario,
/// slot_schema, knowledge_schema, knowledge_list, goal, red_herring,
/// user_turn, agent_turn, annotate, end_of_task.
class SimPromptPack {
 public:
  static const SimPromptPack& defaults();
  /// Defaults overridden by every "<name>.txt" present in dir.
  static SimPromptPack load_dir(const std::filesystem::path& dir);

  const std::string& get(const std::string& name) const;
  std::string render(const std::string& name,
                     const std::map<std::string, std::string>& values) const;

  static const std::vector<std::string>& names();

 private:
  std::map<std::string, std::string> templates_;
};

/// Replaces each {key} with its value; unknown placeholders stay verbatim.
std::string fill_template(std::string_view tmpl,
                          const std::map<std::string, std::string>& values);

struct SimSettings {
  std::size_t knowledge_size = 8;
  std::size_t red_herrings = 3;
  double p_clear = 0.3;
  double p_remove_ideal = 0.5;
  std::size_t max_turns = 40;
  double temperature = 0.7;
  int max_output = 768;
  const SimPromptPack* prompts = nullptr;

  const SimPromptPack& pack() const {
    return prompts ? *prompts : SimPromptPack::defaults();
  }
};

// ---------------------------------------------------------------------------
// Parsing helpers

/// Parses one templated scenario sentence (with or without list number).
std::optional<ScenarioSpec> parse_scenario_line(std::string_view line);

/// Contents of every ``` fenced block, in order.
std::vector<std::string> extract_fenced_blocks(std::string_view text);
std::vector<FieldDef> parse_field_definitions(std::string_view block);
KnowledgeRecord parse_record(std::string_view block);

std::string render_field_definitions(std::span<const FieldDef> fields);
std::string render_slot_definitions(const SlotSchema& schema);
std::string render_record(const KnowledgeRecord& record);
std::string render_records(std::span<const KnowledgeRecord> records);
/// Goal as "name = value" lines.
std::string render_goal(const DialogueState& goal);
/// Caseless leading yes; everything else is no.
bool parse_yes_no(std::string_view text);

// ---------------------------------------------------------------------------
// Pipeline stages

/// Throws Error(kScenarioGeneration) when no line parses. Duplicate
/// descriptions (caseless) are dropped; at most n specs are returned.
std::vector<ScenarioSpec> generate_scenarios(std::size_t n,
                                             TextGenerator& backend,
                                             const SimSettings& settings = {});
std::vector<ScenarioSpec> parse_scenario_list(
    std::string_view text, std::size_t n,
    std::vector<std::string>* warnings = nullptr);

/// Two prompts (slot schema, then knowledge schema), each retried once on
/// a parse failure; throws Error(kSchemaDefinition) after the retry.
TaskSchemas define_schemas(const ScenarioSpec& scenario,
                           const std::string& task, TextGenerator& backend,
                           const SimSettings& settings = {});

/// Throws Error(kTaskInit) when the knowledge list or the goal cannot be
/// parsed after one retry.
TaskSetup initialize_task(const ScenarioSpec& scenario,
                          const TaskSchemas& schemas, TextGenerator& backend,
                          Rng& rng, const SimSettings& settings = {});

/// Requires one schema and one setup per scenario task.
SimTrace simulate_dialogue(const ScenarioSpec& scenario,
                           std::span<const TaskSchemas> schemas,
                           std::span<const TaskSetup> setups,
                           TextGenerator& backend,
                           const SimSettings& settings = {});

struct SimReport {
  std::size_t dialogues_requested = 0;
  std::size_t produced = 0;
  std::size_t lost = 0;
  std::map<std::string, std::size_t> termination_histogram;
  std::vector<std::string> losses;
};

struct SimulatedCorpus {
  CorpusFile corpus;
  SimReport report;
};

/// Failed dialogues are dropped and counted; Error(kAuth) still propagates.
/// Each dialogue draws from its own rng stream split from `seed`.
SimulatedCorpus simulate_corpus(std::span<const ScenarioSpec> scenarios,
                                std::size_t dialogues_per_scenario,
                                TextGenerator& backend, std::uint64_t seed,
                                const SimSettings& settings = {});

Json sim_report_to_json(const SimReport& report);

}  // namespace slotweaver
