// Copyright 2026 The Slotweaver Authors
// SPDX-License-Identifier: Apache-2.0

#include "slotweaver/sim.hpp"

#include <algorithm>
#include <cctype>
#include <stdexcept>

#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include "slotweaver/error.hpp"

namespace slotweaver {

std::string_view to_string(Termination termination) {
  switch (termination) {
    case Termination::kCompleted: return "completed";
    case Termination::kStalled: return "stalled";
    case Termination::kTurnLimit: return "turn-limit";
  }
  return "turn-limit";
}

// ---------------------------------------------------------------------------
// Prompt pack

namespace {

const char* const kScenarioPrompt =
    R"(Write a numbered list of {n} diverse scenarios in which a person gets help from a service provider with two or three related tasks. Write each scenario as one sentence in exactly this form:
"<user> is getting help from <agent> in order to <task 1>, <task 2>, ..."
)";

const char* const kSlotSchemaPrompt =
    R"(Scenario: {scenario}
Task: {task}

Define the slot schema for this task: the kinds of preferences or requirements the {user_role} might bring to the {agent_role}. Write one field per line inside a fenced block, in the form
```
field_name: description of the field
```
)";

const char* const kKnowledgeSchemaPrompt =
    R"(Scenario: {scenario}
Task: {task}

The {user_role} can express these preferences:
{slot_schema}
Define the knowledge schema for this task: the fields describing the actual items the {agent_role} knows about. A preference such as "max price" should have a matching field such as "price". Write one field per line inside a fenced block, in the form
```
field_name: description of the field
```
)";

const char* const kKnowledgeListPrompt =
    R"(Scenario: {scenario}
Task: {task}

Item fields:
{knowledge_schema}
List {count} realistic items the {agent_role} could offer. Write each item as its own fenced block with one "field = value" line per field.
)";

const char* const kGoalPrompt =
    R"(Scenario: {scenario}
Task: {task}

Preference fields:
{slot_schema}
The ideal item for the {user_role} is:
{ideal}
Write the {user_role}'s preferences that this item satisfies as one fenced block with a "field = value" line per preference field.
)";

const char* const kRedHerringPrompt =
    R"(Scenario: {scenario}
Task: {task}

Item fields:
{knowledge_schema}
The {user_role} wants:
{goal}
List {count} items that look similar to what the {user_role} wants but differ in at least one important way. Write each item as its own fenced block with one "field = value" line per field.
)";

const char* const kUserTurnPrompt =
    R"(You are the {user_role}, talking to the {agent_role} in order to {task}.
Your preferences:
{goal}
Dialogue so far:
{dialogue}
Write the {user_role}'s next message. Keep it short and share at most one or two preferences at a time.
)";

const char* const kAgentTurnPrompt =
    R"(You are the {agent_role}, helping the {user_role} to {task}.
Items you know about:
{knowledge}
Dialogue so far:
{dialogue}
Write the {agent_role}'s next message. Keep it short.
)";

const char* const kAnnotatePrompt =
    R"(Task: {task}
Preference fields:
{slot_schema}
Dialogue:
{dialogue}
Record every preference the {user_role} has expressed so far. Write one fenced block with a "field = value" line per expressed preference and leave out fields without information.
)";

const char* const kEndOfTaskPrompt =
    R"(Task: {task}

Dialogue:
{dialogue}
Has the {user_role} finished this task with the {agent_role}? Answer yes or no.
)";

}  // namespace

const std::vector<std::string>& SimPromptPack::names() {
  static const std::vector<std::string> names = {
      "scenario", "slot_schema", "knowledge_schema", "knowledge_list",
      "goal",     "red_herring", "user_turn",        "agent_turn",
      "annotate", "end_of_task"};
  return names;
}

const SimPromptPack& SimPromptPack::defaults() {
  static const SimPromptPack pack = [] {
    SimPromptPack p;
    p.templates_ = {{"scenario", kScenarioPrompt},
                    {"slot_schema", kSlotSchemaPrompt},
                    {"knowledge_schema", kKnowledgeSchemaPrompt},
                    {"knowledge_list", kKnowledgeListPrompt},
                    {"goal", kGoalPrompt},
                    {"red_herring", kRedHerringPrompt},
                    {"user_turn", kUserTurnPrompt},
                    {"agent_turn", kAgentTurnPrompt},
                    {"annotate", kAnnotatePrompt},
                    {"end_of_task", kEndOfTaskPrompt}};
    return p;
  }();
  return pack;
}

SimPromptPack SimPromptPack::load_dir(const std::filesystem::path& dir) {
  SimPromptPack pack = defaults();
  for (const std::string& name : names()) {
    const auto path = dir / (name + ".txt");
    if (std::filesystem::exists(path)) {
      pack.templates_[name] = read_text_file(path);
    }
  }
  return pack;
}

const std::string& SimPromptPack::get(const std::string& name) const {
  auto it = templates_.find(name);
  if (it == templates_.end()) {
    throw std::out_of_range("no simulation prompt named " + name);
  }
  return it->second;
}

std::string SimPromptPack::render(
    const std::string& name,
    const std::map<std::string, std::string>& values) const {
  return fill_template(get(name), values);
}

std::string fill_template(std::string_view tmpl,
                          const std::map<std::string, std::string>& values) {
  std::string out;
  out.reserve(tmpl.size());
  std::size_t i = 0;
  while (i < tmpl.size()) {
    if (tmpl[i] == '{') {
      const std::size_t close = tmpl.find('}', i + 1);
      if (close != std::string_view::npos) {
        auto it = values.find(std::string(tmpl.substr(i + 1, close - i - 1)));
        if (it != values.end()) {
          out += it->second;
          i = close + 1;
          continue;
        }
      }
    }
    out.push_back(tmpl[i++]);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Parsing helpers

namespace {

std::vector<std::string_view> lines_of(std::string_view text) {
  std::vector<std::string_view> lines;
  std::size_t start = 0;
  while (start <= text.size()) {
    std::size_t end = text.find('\n', start);
    if (end == std::string_view::npos) end = text.size();
    lines.push_back(text.substr(start, end - start));
    if (end == text.size()) break;
    start = end + 1;
  }
  return lines;
}

std::size_t find_caseless(std::string_view haystack, std::string_view needle) {
  const std::string h = casefold(haystack);
  return h.find(casefold(needle));
}

std::string strip_wrapping(std::string text) {
  auto junk = [](char c) {
    return c == '"' || c == '*' || c == '\'' || c == '`';
  };
  while (!text.empty() && junk(text.front())) text.erase(text.begin());
  while (!text.empty() && (junk(text.back()) || text.back() == '.')) {
    text.pop_back();
  }
  return trim(text);
}

}  // namespace

std::optional<ScenarioSpec> parse_scenario_line(std::string_view line) {
  std::string text = trim(line);
  // Leading list number: "3." or "3)".
  std::size_t digits = 0;
  while (digits < text.size() &&
         std::isdigit(static_cast<unsigned char>(text[digits]))) {
    ++digits;
  }
  if (digits > 0 && digits < text.size() &&
      (text[digits] == '.' || text[digits] == ')')) {
    text = trim(std::string_view(text).substr(digits + 1));
  }
  text = strip_wrapping(text);

  constexpr std::string_view kHelp = " is getting help from ";
  constexpr std::string_view kOrder = " in order to ";
  const std::size_t help = find_caseless(text, kHelp);
  if (help == std::string::npos) return std::nullopt;
  const std::size_t order = find_caseless(text, kOrder);
  if (order == std::string::npos || order < help + kHelp.size()) {
    return std::nullopt;
  }
  ScenarioSpec spec;
  spec.user_role = strip_wrapping(text.substr(0, help));
  spec.agent_role = strip_wrapping(
      text.substr(help + kHelp.size(), order - help - kHelp.size()));
  const std::string task_text = text.substr(order + kOrder.size());
  std::size_t start = 0;
  while (start <= task_text.size()) {
    std::size_t comma = task_text.find(',', start);
    if (comma == std::string::npos) comma = task_text.size();
    std::string task = trim(std::string_view(task_text).substr(start, comma - start));
    if (casefold(task).starts_with("and ")) task = trim(task.substr(4));
    task = strip_wrapping(task);
    if (!task.empty()) spec.tasks.push_back(std::move(task));
    start = comma + 1;
  }
  if (spec.user_role.empty() || spec.agent_role.empty() || spec.tasks.empty()) {
    return std::nullopt;
  }
  spec.description = text;
  return spec;
}

std::vector<ScenarioSpec> parse_scenario_list(std::string_view text,
                                              std::size_t n,
                                              std::vector<std::string>* warnings) {
  std::vector<ScenarioSpec> specs;
  std::vector<std::string> seen;
  for (std::string_view raw : lines_of(text)) {
    const std::string line = trim(raw);
    if (line.empty()) continue;
    auto spec = parse_scenario_line(line);
    if (!spec) {
      if (warnings) warnings->push_back("skipped scenario line: " + line);
      continue;
    }
    const std::string folded = casefold(spec->description);
    if (std::find(seen.begin(), seen.end(), folded) != seen.end()) {
      if (warnings) warnings->push_back("duplicate scenario: " + line);
      continue;
    }
    seen.push_back(folded);
    spec->id = fmt::format("sc{:02d}", specs.size() + 1);
    specs.push_back(std::move(*spec));
    if (specs.size() == n) break;
  }
  return specs;
}

std::vector<std::string> extract_fenced_blocks(std::string_view text) {
  std::vector<std::string> blocks;
  std::optional<std::string> current;
  for (std::string_view raw : lines_of(text)) {
    const std::string line = trim(raw);
    if (line.starts_with("```")) {
      if (current) {
        blocks.push_back(std::move(*current));
        current.reset();
      } else {
        current.emplace();
      }
      continue;
    }
    if (current) {
      *current += std::string(raw);
      *current += "\n";
    }
  }
  return blocks;  // an unterminated block is discarded
}

std::vector<FieldDef> parse_field_definitions(std::string_view block) {
  std::vector<FieldDef> fields;
  for (std::string_view raw : lines_of(block)) {
    const std::string line = trim(raw);
    const std::size_t colon = line.find(':');
    if (colon == std::string::npos) continue;
    FieldDef f{trim(line.substr(0, colon)), single_line(line.substr(colon + 1))};
    if (canonicalize(f.name).empty() || f.description.empty()) continue;
    const bool duplicate =
        std::any_of(fields.begin(), fields.end(), [&](const FieldDef& g) {
          return canonicalize(g.name) == canonicalize(f.name);
        });
    if (!duplicate) fields.push_back(std::move(f));
  }
  return fields;
}

KnowledgeRecord parse_record(std::string_view block) {
  KnowledgeRecord record;
  for (std::string_view raw : lines_of(block)) {
    const std::string line = trim(raw);
    const std::size_t eq = line.find('=');
    if (eq == std::string::npos) continue;
    std::string field = trim(line.substr(0, eq));
    std::string value = strip_wrapping(trim(line.substr(eq + 1)));
    if (canonicalize(field).empty() || value.empty()) continue;
    record.emplace_back(std::move(field), std::move(value));
  }
  return record;
}

std::string render_field_definitions(std::span<const FieldDef> fields) {
  std::string out;
  for (const FieldDef& f : fields) out += f.name + ": " + f.description + "\n";
  return out;
}

std::string render_slot_definitions(const SlotSchema& schema) {
  std::string out;
  for (const SlotDef& def : schema.slots()) {
    out += def.key.name_label() + ": " + def.description + "\n";
  }
  return out;
}

std::string render_record(const KnowledgeRecord& record) {
  std::string out;
  for (const auto& [field, value] : record) out += field + " = " + value + "\n";
  return out;
}

std::string render_records(std::span<const KnowledgeRecord> records) {
  std::string out;
  for (std::size_t i = 0; i < records.size(); ++i) {
    if (i > 0) out += "\n";
    out += render_record(records[i]);
  }
  return out;
}

std::string render_goal(const DialogueState& goal) {
  std::string out;
  for (const SlotValue& t : goal.triples()) {
    out += t.key.name_label() + " = " + t.value + "\n";
  }
  return out;
}

bool parse_yes_no(std::string_view text) {
  std::string t = casefold(trim(text));
  while (!t.empty() && (t.front() == '*' || t.front() == '"' || t.front() == '\'')) {
    t.erase(t.begin());
  }
  if (!t.starts_with("yes")) return false;
  return t.size() == 3 || !std::isalpha(static_cast<unsigned char>(t[3]));
}

// ---------------------------------------------------------------------------
// Pipeline stages

namespace {

std::string ask(TextGenerator& backend, const std::string& prompt,
                const SimSettings& settings) {
  GenerationRequest request;
  request.prompt = prompt;
  request.temperature = settings.temperature;
  request.max_output = settings.max_output;
  return backend.generate(request);
}

std::map<std::string, std::string> scenario_values(const ScenarioSpec& s,
                                                   const std::string& task) {
  return {{"scenario", s.description},
          {"task", task},
          {"user_role", s.user_role},
          {"agent_role", s.agent_role}};
}

std::vector<FieldDef> ask_definitions(TextGenerator& backend,
                                      const std::string& prompt,
                                      const SimSettings& settings) {
  for (int attempt = 0; attempt < 2; ++attempt) {
    const auto blocks = extract_fenced_blocks(ask(backend, prompt, settings));
    if (!blocks.empty()) {
      auto fields = parse_field_definitions(blocks.front());
      if (!fields.empty()) return fields;
    }
  }
  return {};
}

std::vector<KnowledgeRecord> ask_records(TextGenerator& backend,
                                         const std::string& prompt,
                                         const SimSettings& settings) {
  for (int attempt = 0; attempt < 2; ++attempt) {
    std::vector<KnowledgeRecord> records;
    for (const std::string& block :
         extract_fenced_blocks(ask(backend, prompt, settings))) {
      KnowledgeRecord r = parse_record(block);
      if (!r.empty()) records.push_back(std::move(r));
    }
    if (!records.empty()) return records;
  }
  return {};
}

std::string render_dialogue_lines(const Dialogue& d) {
  std::string out;
  for (const Turn& t : d.turns) {
    out += d.label(t.speaker) + ": " + t.text + "\n";
  }
  return out.empty() ? std::string("(the dialogue has not started)\n") : out;
}

/// Single-line utterance without an echoed "Speaker:" prefix.
std::string clean_utterance(std::string_view raw, const std::string& label) {
  std::string text = single_line(raw);
  const std::string prefix = casefold(label) + ":";
  if (casefold(text).starts_with(prefix)) text = trim(text.substr(prefix.size()));
  return strip_wrapping(text) == "" ? std::string() : text;
}

}  // namespace

std::vector<ScenarioSpec> generate_scenarios(std::size_t n,
                                             TextGenerator& backend,
                                             const SimSettings& settings) {
  if (n == 0) throw std::invalid_argument("scenario count must be at least 1");
  const std::string prompt =
      settings.pack().render("scenario", {{"n", std::to_string(n)}});
  std::vector<std::string> warnings;
  auto specs = parse_scenario_list(ask(backend, prompt, settings), n, &warnings);
  for (const std::string& w : warnings) spdlog::warn("{}", w);
  if (specs.empty()) {
    throw Error(ErrorCode::kScenarioGeneration,
                "no scenario line matched the template");
  }
  return specs;
}

TaskSchemas define_schemas(const ScenarioSpec& scenario,
                           const std::string& task, TextGenerator& backend,
                           const SimSettings& settings) {
  if (std::find(scenario.tasks.begin(), scenario.tasks.end(), task) ==
      scenario.tasks.end()) {
    throw std::invalid_argument("task '" + task + "' is not in scenario " +
                                scenario.id);
  }
  const SimPromptPack& pack = settings.pack();
  auto values = scenario_values(scenario, task);

  const auto slots =
      ask_definitions(backend, pack.render("slot_schema", values), settings);
  if (slots.empty()) {
    throw Error(ErrorCode::kSchemaDefinition,
                "no slot definitions for task '" + task + "'");
  }
  TaskSchemas out;
  out.task = task;
  for (const FieldDef& f : slots) {
    out.slot_schema.add(
        make_slot_def(canonical_slot_key(task, f.name), f.description));
  }

  values["slot_schema"] = render_field_definitions(slots);
  out.knowledge_schema = ask_definitions(
      backend, pack.render("knowledge_schema", values), settings);
  if (out.knowledge_schema.empty()) {
    throw Error(ErrorCode::kSchemaDefinition,
                "no knowledge definitions for task '" + task + "'");
  }
  return out;
}

TaskSetup initialize_task(const ScenarioSpec& scenario,
                          const TaskSchemas& schemas, TextGenerator& backend,
                          Rng& rng, const SimSettings& settings) {
  const SimPromptPack& pack = settings.pack();
  auto values = scenario_values(scenario, schemas.task);
  values["slot_schema"] = render_slot_definitions(schemas.slot_schema);
  values["knowledge_schema"] = render_field_definitions(schemas.knowledge_schema);

  TaskSetup setup;
  values["count"] = std::to_string(settings.knowledge_size);
  setup.knowledge =
      ask_records(backend, pack.render("knowledge_list", values), settings);
  if (setup.knowledge.empty()) {
    throw Error(ErrorCode::kTaskInit,
                "no knowledge items for task '" + schemas.task + "'");
  }
  const std::size_t ideal_index = uniform_index(rng, setup.knowledge.size());
  setup.ideal = setup.knowledge[ideal_index];

  values["ideal"] = render_record(*setup.ideal);
  const auto goal_records =
      ask_records(backend, pack.render("goal", values), settings);
  if (goal_records.empty()) {
    throw Error(ErrorCode::kTaskInit,
                "no goal for task '" + schemas.task + "'");
  }
  for (const auto& [field, value] : goal_records.front()) {
    if (canonicalize(field).empty()) continue;
    const SlotKey key = canonical_slot_key(schemas.task, field);
    const SlotDef* def = schemas.slot_schema.find(key);
    if (def == nullptr) continue;  // goal keys stay inside the slot schema
    setup.goal.set(def->key, value);
  }
  std::vector<SlotKey> cleared;
  for (const SlotValue& t : setup.goal.triples()) {
    if (bernoulli(rng, settings.p_clear)) cleared.push_back(t.key);
  }
  for (const SlotKey& key : cleared) setup.goal.erase(key);

  if (settings.red_herrings > 0) {
    values["goal"] = render_goal(setup.goal);
    values["count"] = std::to_string(settings.red_herrings);
    setup.red_herrings =
        ask_records(backend, pack.render("red_herring", values), settings);
    if (setup.red_herrings.size() > settings.red_herrings) {
      setup.red_herrings.resize(settings.red_herrings);
    }
    setup.knowledge.insert(setup.knowledge.end(), setup.red_herrings.begin(),
                           setup.red_herrings.end());
  }

  if (bernoulli(rng, settings.p_remove_ideal)) {
    setup.knowledge.erase(setup.knowledge.begin() +
                          static_cast<std::ptrdiff_t>(ideal_index));
    setup.ideal_removed = true;
  }
  return setup;
}

SimTrace simulate_dialogue(const ScenarioSpec& scenario,
                           std::span<const TaskSchemas> schemas,
                           std::span<const TaskSetup> setups,
                           TextGenerator& backend,
                           const SimSettings& settings) {
  if (schemas.size() != scenario.tasks.size() ||
      setups.size() != scenario.tasks.size()) {
    throw std::invalid_argument("need one schema and one setup per task");
  }
  const SimPromptPack& pack = settings.pack();
  SimTrace trace;
  Dialogue& d = trace.dialogue;
  d.scenario_id = scenario.id;
  d.user_label = scenario.user_role;
  d.agent_label = scenario.agent_role;

  DialogueState carried;  // final states of finished tasks
  DialogueState active;
  std::size_t task = 0;
  while (true) {
    auto values = scenario_values(scenario, schemas[task].task);
    const TaskSetup& setup = setups[task];
    const std::string goal = render_goal(setup.goal);
    values["goal"] = goal.empty() ? std::string("(no particular preferences)\n")
                                  : goal;
    values["knowledge"] = render_records(setup.knowledge);
    values["slot_schema"] = render_slot_definitions(schemas[task].slot_schema);

    // User turn: conditioned on the dialogue and the goal only.
    values["dialogue"] = render_dialogue_lines(d);
    std::map<std::string, std::string> user_values = values;
    user_values.erase("knowledge");
    const std::string user_text = clean_utterance(
        ask(backend, pack.render("user_turn", user_values), settings),
        d.user_label);
    if (user_text.empty()) {
      trace.termination = Termination::kStalled;
      break;
    }
    d.turns.push_back({Speaker::kUser, user_text, std::nullopt});

    // State annotation against the active task's schema.
    values["dialogue"] = render_dialogue_lines(d);
    const std::string annotation =
        ask(backend, pack.render("annotate", values), settings);
    const auto blocks = extract_fenced_blocks(annotation);
    active = DialogueState{};
    if (blocks.empty()) {
      trace.warnings.push_back(fmt::format(
          "turn {}: annotation did not parse; empty state", d.turns.size() - 1));
    } else {
      for (const auto& [field, value] : parse_record(blocks.front())) {
        const SlotDef* def =
            canonicalize(field).empty()
                ? nullptr
                : schemas[task].slot_schema.find(
                      canonical_slot_key(schemas[task].task, field));
        if (def == nullptr) {
          trace.warnings.push_back(fmt::format(
              "turn {}: dropped annotation for unknown slot '{}'",
              d.turns.size() - 1, field));
          continue;
        }
        active.set(def->key, value);
      }
    }
    DialogueState gold = carried;
    for (const SlotValue& t : active.triples()) gold.set(t.key, t.value);
    d.turns.back().gold_state = std::move(gold);
    if (d.turns.size() >= settings.max_turns) {
      trace.termination = Termination::kTurnLimit;
      break;
    }

    // Agent turn: conditioned on the dialogue and the knowledge only.
    values["dialogue"] = render_dialogue_lines(d);
    std::map<std::string, std::string> agent_values = values;
    agent_values.erase("goal");
    const std::string agent_text = clean_utterance(
        ask(backend, pack.render("agent_turn", agent_values), settings),
        d.agent_label);
    if (agent_text.empty()) {
      trace.termination = Termination::kStalled;
      break;
    }
    d.turns.push_back({Speaker::kAgent, agent_text, std::nullopt});

    values["dialogue"] = render_dialogue_lines(d);
    const bool done =
        parse_yes_no(ask(backend, pack.render("end_of_task", values), settings));
    if (done) {
      trace.task_boundaries.push_back(d.turns.size() - 1);
      for (const SlotValue& t : active.triples()) carried.set(t.key, t.value);
      active = DialogueState{};
      if (++task == schemas.size()) {
        trace.termination = Termination::kCompleted;
        break;
      }
    }
    if (d.turns.size() >= settings.max_turns) {
      trace.termination = Termination::kTurnLimit;
      break;
    }
  }
  return trace;
}

SimulatedCorpus simulate_corpus(std::span<const ScenarioSpec> scenarios,
                                std::size_t dialogues_per_scenario,
                                TextGenerator& backend, std::uint64_t seed,
                                const SimSettings& settings) {
  SimulatedCorpus out;
  SlotSchema gold;
  SimReport& report = out.report;
  for (std::string_view name : {"completed", "stalled", "turn-limit"}) {
    report.termination_histogram[std::string(name)] = 0;
  }
  auto non_fatal = [](const Error& e) { return e.code() != ErrorCode::kAuth; };

  for (std::size_t s = 0; s < scenarios.size(); ++s) {
    const ScenarioSpec& scenario = scenarios[s];
    report.dialogues_requested += dialogues_per_scenario;
    std::vector<TaskSchemas> schemas;
    try {
      for (const std::string& task : scenario.tasks) {
        schemas.push_back(define_schemas(scenario, task, backend, settings));
      }
    } catch (const Error& e) {
      if (!non_fatal(e)) throw;
      report.lost += dialogues_per_scenario;
      report.losses.push_back(scenario.id + ": " + e.what());
      continue;
    }
    for (const TaskSchemas& ts : schemas) {
      for (const SlotDef& def : ts.slot_schema.slots()) gold.add(def);
    }

    for (std::size_t k = 0; k < dialogues_per_scenario; ++k) {
      Rng rng(derive_seed(seed, s, k));
      try {
        std::vector<TaskSetup> setups;
        for (const TaskSchemas& ts : schemas) {
          setups.push_back(initialize_task(scenario, ts, backend, rng, settings));
        }
        SimTrace trace =
            simulate_dialogue(scenario, schemas, setups, backend, settings);
        for (const std::string& w : trace.warnings) {
          spdlog::debug("{}-{}: {}", scenario.id, k, w);
        }
        trace.dialogue.id = fmt::format("{}-d{:02d}", scenario.id, k);
        ++report.termination_histogram[std::string(to_string(trace.termination))];
        out.corpus.dialogues.push_back(std::move(trace.dialogue));
        ++report.produced;
      } catch (const Error& e) {
        if (!non_fatal(e)) throw;
        ++report.lost;
        report.losses.push_back(fmt::format("{}-d{:02d}: {}", scenario.id, k,
                                            e.what()));
      }
    }
  }
  out.corpus.gold_schema = std::move(gold);
  return out;
}

Json sim_report_to_json(const SimReport& report) {
  Json histogram = Json::object();
  for (const auto& [name, count] : report.termination_histogram) {
    histogram[name] = count;
  }
  return Json{{"dialogues_requested", report.dialogues_requested},
              {"produced", report.produced},
              {"lost", report.lost},
              {"termination_histogram", std::move(histogram)},
              {"losses", report.losses}};
}

}  // namespace slotweaver
