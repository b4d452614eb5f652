// Copyright 2026 The Slotweaver Authors
// SPDX-License-Identifier: Apache-2.0

#include "slotweaver/seqio.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "slotweaver/error.hpp"

namespace slotweaver {

namespace {

std::vector<std::string_view> split_lines(std::string_view text) {
  std::vector<std::string_view> lines;
  std::size_t start = 0;
  while (start <= text.size()) {
    std::size_t end = text.find('\n', start);
    if (end == std::string_view::npos) end = text.size();
    std::string_view line = text.substr(start, end - start);
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    lines.push_back(line);
    if (end == text.size()) break;
    start = end + 1;
  }
  return lines;
}

std::size_t header_level(std::string_view line) {
  std::size_t n = 0;
  while (n < line.size() && line[n] == '#') ++n;
  return n;
}

/// Header text without the leading '#'s and any bold markup, caseless.
std::string header_title(std::string_view line) {
  std::string title = trim(line.substr(header_level(line)));
  std::erase(title, '*');
  return casefold(trim(title));
}

bool has_prefix(std::string_view text, std::string_view prefix) {
  return text.substr(0, prefix.size()) == prefix;
}

void warn(std::vector<ParseWarning>* out, std::size_t line, std::string msg) {
  if (out) out->push_back({line, std::move(msg)});
}

/// Index of the first line that is a level-1 header with the given title.
std::optional<std::size_t> find_header(
    const std::vector<std::string_view>& lines, std::string_view header) {
  const std::string wanted = header_title(header);
  for (std::size_t i = 0; i < lines.size(); ++i) {
    const std::string t = trim(lines[i]);
    if (header_level(t) == 1 && header_title(t) == wanted) return i;
  }
  return std::nullopt;
}

struct Bullet {
  std::string name;
  std::string body;
  bool has_colon = false;
};

Bullet split_bullet(std::string_view text) {
  Bullet b;
  const std::size_t colon = text.find(':');
  if (colon == std::string_view::npos) {
    b.name = trim(text);
    return b;
  }
  b.has_colon = true;
  b.name = trim(text.substr(0, colon));
  b.body = trim(text.substr(colon + 1));
  return b;
}

std::string bullet_marker(const PromptPack& pack) { return trim(pack.bullet); }
std::string description_marker(const PromptPack& pack) {
  return trim(pack.description_prefix);
}

}  // namespace

const PromptPack& PromptPack::defaults() {
  static const PromptPack pack;
  return pack;
}

PromptPack PromptPack::from_json(const Json& j) {
  PromptPack pack;
  auto take = [&](const char* field, std::string& dst) {
    if (j.contains(field)) dst = j.at(field).get<std::string>();
  };
  take("types_header", pack.types_header);
  take("values_header", pack.values_header);
  take("dialogue_header", pack.dialogue_header);
  take("instruction", pack.instruction);
  take("revision_instruction", pack.revision_instruction);
  take("domain_prefix", pack.domain_prefix);
  take("bullet", pack.bullet);
  take("description_prefix", pack.description_prefix);
  return pack;
}

// ---------------------------------------------------------------------------
// Rendering

std::string render_schema_block(const SlotSchema& schema,
                                const PromptPack& pack) {
  std::string out = pack.types_header + "\n";
  for (const auto& group : schema.by_domain()) {
    out += "\n" + pack.domain_prefix + group.label + "\n";
    for (const SlotDef* def : group.slots) {
      out += pack.bullet + def->key.name_label() + ":";
      if (!def->description.empty()) out += " " + def->description;
      out += "\n";
    }
  }
  return out;
}

std::string render_dialogue_block(const Dialogue& dialogue,
                                  std::size_t upto_turn,
                                  const RenderOptions& opts) {
  if (upto_turn >= dialogue.turns.size()) {
    throw std::out_of_range("turn " + std::to_string(upto_turn) +
                            " is past the end of dialogue " + dialogue.id);
  }
  std::vector<std::string> lines;
  std::size_t used = 0;
  for (std::size_t i = upto_turn + 1; i > 0; --i) {
    const Turn& turn = dialogue.turns[i - 1];
    std::string line = dialogue.label(turn.speaker) + ": " +
                       single_line(turn.text) + "\n";
    if (opts.context_char_budget > 0 && !lines.empty() &&
        used + line.size() > opts.context_char_budget) {
      break;
    }
    used += line.size();
    lines.push_back(std::move(line));
  }
  std::string out = opts.tokens().dialogue_header + "\n";
  for (auto it = lines.rbegin(); it != lines.rend(); ++it) out += *it;
  return out;
}

std::string render_state_block(const DialogueState& state,
                               const PromptPack& pack) {
  std::vector<std::pair<std::string, std::vector<const SlotValue*>>> groups;
  std::vector<std::string> domains;
  for (const SlotValue& t : state.triples()) {
    auto it = std::find(domains.begin(), domains.end(), t.key.domain());
    if (it == domains.end()) {
      domains.push_back(t.key.domain());
      groups.push_back({t.key.domain_label(), {}});
      groups.back().second.push_back(&t);
    } else {
      groups[static_cast<std::size_t>(it - domains.begin())].second.push_back(
          &t);
    }
  }
  std::string out = pack.values_header + "\n";
  for (const auto& [label, triples] : groups) {
    out += "\n" + pack.domain_prefix + label + "\n";
    for (const SlotValue* t : triples) {
      out += pack.bullet + t->key.name_label() + ": " + single_line(t->value) +
             "\n";
      if (const std::string* desc = state.description(t->key);
          desc != nullptr && !desc->empty()) {
        out += pack.description_prefix + *desc + "\n";
      }
    }
  }
  return out;
}

std::string PromptSequence::text() const {
  return schema_block + "\n" + dialogue_block + "\n" + instruction + "\n";
}

PromptSequence build_prompt(const SlotSchema& schema, const Dialogue& dialogue,
                            std::size_t upto_turn, StateMode mode,
                            const RenderOptions& opts) {
  const PromptPack& pack = opts.tokens();
  PromptSequence seq;
  seq.schema_block = render_schema_block(schema, pack);
  seq.dialogue_block = render_dialogue_block(dialogue, upto_turn, opts);
  seq.instruction = pack.instruction;
  seq.mode = mode;
  return seq;
}

std::string render_prompt(const SlotSchema& schema, const Dialogue& dialogue,
                          std::size_t upto_turn, StateMode mode,
                          const RenderOptions& opts) {
  return build_prompt(schema, dialogue, upto_turn, mode, opts).text();
}

std::string render_revision_prompt(const SlotSchema& schema,
                                   const Dialogue* context,
                                   const RenderOptions& opts) {
  const PromptPack& pack = opts.tokens();
  PromptSequence seq;
  seq.schema_block = render_schema_block(schema, pack);
  if (context != nullptr && !context->turns.empty()) {
    seq.dialogue_block =
        render_dialogue_block(*context, context->turns.size() - 1, opts);
  } else {
    seq.dialogue_block = pack.dialogue_header + "\n";
  }
  seq.instruction = pack.revision_instruction;
  seq.revision_mode = true;
  return seq.text();
}

// ---------------------------------------------------------------------------
// Parsing

SlotSchema parse_schema_block(std::string_view text,
                              std::vector<ParseWarning>* warnings,
                              const PromptPack& pack) {
  const auto lines = split_lines(text);
  const auto header = find_header(lines, pack.types_header);
  if (!header) {
    throw Error(ErrorCode::kMissingTypesHeader,
                "no '" + pack.types_header + "' header");
  }
  const std::string bullet = bullet_marker(pack);
  std::optional<std::string> domain;
  std::vector<SlotDef> defs;
  for (std::size_t i = *header + 1; i < lines.size(); ++i) {
    const std::size_t lineno = i + 1;
    const std::string t = trim(lines[i]);
    if (t.empty()) continue;
    const std::size_t level = header_level(t);
    if (level == 1) break;  // next section (dialogue block or instruction)
    if (level >= 2) {
      std::string label = trim(t.substr(level));
      if (canonicalize(label).empty()) {
        warn(warnings, lineno, "empty domain header");
        domain.reset();
      } else {
        domain = std::move(label);
      }
      continue;
    }
    if (!has_prefix(t, bullet)) {
      warn(warnings, lineno, "unrecognized line in schema block");
      continue;
    }
    if (!domain) {
      warn(warnings, lineno, "slot outside any domain section");
      continue;
    }
    Bullet b = split_bullet(std::string_view(t).substr(bullet.size()));
    if (!b.has_colon) warn(warnings, lineno, "slot without ':' separator");
    if (canonicalize(b.name).empty()) {
      warn(warnings, lineno, "empty slot name");
      continue;
    }
    SlotKey key = canonical_slot_key(*domain, b.name);
    auto dup = std::find_if(defs.begin(), defs.end(),
                            [&](const SlotDef& d) { return d.key == key; });
    if (dup != defs.end()) {
      warn(warnings, lineno, "duplicate slot " + key.str() + "; last wins");
      dup->description = single_line(b.body);
      continue;
    }
    defs.push_back(make_slot_def(std::move(key), b.body));
  }
  SlotSchema schema;
  for (SlotDef& def : defs) schema.add(std::move(def));
  return schema;
}

ParsedPrediction parse_state_block(std::string_view text,
                                   const SlotSchema& known_schema,
                                   const PromptPack& pack) {
  const auto lines = split_lines(text);
  const auto header = find_header(lines, pack.values_header);
  if (!header) {
    throw Error(ErrorCode::kMissingValuesHeader,
                "no '" + pack.values_header + "' header");
  }
  ParsedPrediction out;
  auto* warnings = &out.parse_warnings;
  for (std::size_t i = 0; i < *header; ++i) {
    if (!trim(lines[i]).empty()) {
      warn(warnings, i + 1, "text before the values header");
      break;
    }
  }
  if (trim(lines[*header]) != trim(pack.values_header)) {
    warn(warnings, *header + 1, "non-canonical values header");
  }

  const std::string bullet = bullet_marker(pack);
  const std::string dash = description_marker(pack);
  std::optional<std::string> domain;
  std::optional<SlotKey> last_bullet;

  for (std::size_t i = *header + 1; i < lines.size(); ++i) {
    const std::size_t lineno = i + 1;
    const std::string t = trim(lines[i]);
    std::optional<SlotKey> previous = std::move(last_bullet);
    last_bullet.reset();
    if (t.empty()) continue;

    const std::size_t level = header_level(t);
    if (level == 1) {
      warn(warnings, lineno, "second top-level header; rest ignored");
      break;
    }
    if (level >= 2) {
      std::string label = trim(t.substr(level));
      if (canonicalize(label).empty()) {
        warn(warnings, lineno, "empty domain header");
        domain.reset();
      } else {
        domain = std::move(label);
      }
      continue;
    }
    if (has_prefix(t, bullet)) {
      if (!domain) {
        warn(warnings, lineno, "value outside any domain section");
        continue;
      }
      Bullet b = split_bullet(std::string_view(t).substr(bullet.size()));
      if (!b.has_colon) {
        warn(warnings, lineno, "value line without ':' separator");
        continue;
      }
      if (canonicalize(b.name).empty()) {
        warn(warnings, lineno, "empty slot name");
        continue;
      }
      if (b.body.empty()) {
        warn(warnings, lineno, "empty value");
        continue;
      }
      SlotKey key = canonical_slot_key(*domain, b.name);
      if (out.state.contains(key)) {
        warn(warnings, lineno, "duplicate value for " + key.str() +
                                   "; last occurrence wins");
        out.state.erase(key);
      }
      out.state.set(key, std::move(b.body));
      if (!known_schema.contains(key) &&
          std::find(out.discoveries.begin(), out.discoveries.end(), key) ==
              out.discoveries.end()) {
        out.discoveries.push_back(key);
      }
      last_bullet = std::move(key);
      continue;
    }
    if (has_prefix(t, dash)) {
      std::string desc = trim(std::string_view(t).substr(dash.size()));
      if (!previous) {
        warn(warnings, lineno, "description not attached to a value line");
      } else if (known_schema.contains(*previous)) {
        warn(warnings, lineno,
             "description for existing slot " + previous->str() + " ignored");
      } else if (desc.empty()) {
        warn(warnings, lineno, "empty description");
      } else {
        out.state.set_description(*previous, std::move(desc));
      }
      continue;
    }
    warn(warnings, lineno, "unrecognized line in values block");
  }
  return out;
}

// ---------------------------------------------------------------------------
// JSON

namespace {

[[noreturn]] void format_error(const std::string& where,
                               const std::string& what) {
  throw Error(ErrorCode::kCorpusFormat, where + ": " + what);
}

const Json& field(const Json& obj, const char* name, const std::string& where) {
  if (!obj.is_object()) format_error(where, "expected an object");
  auto it = obj.find(name);
  if (it == obj.end()) format_error(where, std::string("missing field '") +
                                               name + "'");
  return *it;
}

std::string string_field(const Json& obj, const char* name,
                         const std::string& where) {
  const Json& v = field(obj, name, where);
  if (!v.is_string()) {
    format_error(where + "." + name, "expected a string");
  }
  return v.get<std::string>();
}

SlotKey checked_key(std::string_view domain, std::string_view name,
                    const std::string& where) {
  try {
    return canonical_slot_key(domain, name);
  } catch (const Error& e) {
    format_error(where, e.detail());
  }
}

}  // namespace

Json schema_to_json(const SlotSchema& schema) {
  Json domains = Json::array();
  for (const auto& group : schema.by_domain()) {
    Json slots = Json::array();
    for (const SlotDef* def : group.slots) {
      slots.push_back(
          {{"name", def->key.name_label()}, {"description", def->description}});
    }
    domains.push_back({{"name", group.label}, {"slots", std::move(slots)}});
  }
  return Json{{"domains", std::move(domains)}};
}

SlotSchema schema_from_json(const Json& j, const std::string& where) {
  const Json& domains = field(j, "domains", where);
  if (!domains.is_array()) format_error(where + ".domains", "expected an array");
  SlotSchema schema;
  for (std::size_t d = 0; d < domains.size(); ++d) {
    const std::string dwhere = where + ".domains[" + std::to_string(d) + "]";
    const std::string domain = string_field(domains[d], "name", dwhere);
    const Json& slots = field(domains[d], "slots", dwhere);
    if (!slots.is_array() || slots.empty()) {
      format_error(dwhere + ".slots", "expected a non-empty array");
    }
    for (std::size_t s = 0; s < slots.size(); ++s) {
      const std::string swhere = dwhere + ".slots[" + std::to_string(s) + "]";
      const std::string name = string_field(slots[s], "name", swhere);
      std::string description;
      if (slots[s].contains("description")) {
        description = string_field(slots[s], "description", swhere);
      }
      SlotKey key = checked_key(domain, name, swhere);
      if (!schema.add(make_slot_def(key, description))) {
        format_error(swhere, "duplicate slot " + key.str());
      }
    }
  }
  return schema;
}

Json state_to_json(const DialogueState& state) {
  Json out = Json::object();
  std::vector<std::string> order;
  for (const SlotValue& t : state.triples()) {
    // Group under the first label seen for the domain.
    std::string label = t.key.domain_label();
    for (const SlotValue& u : state.triples()) {
      if (u.key.domain() == t.key.domain()) {
        label = u.key.domain_label();
        break;
      }
    }
    out[label][t.key.name_label()] = t.value;
  }
  return out;
}

DialogueState state_from_json(const Json& j, const std::string& where) {
  if (!j.is_object()) format_error(where, "expected an object");
  DialogueState state;
  for (const auto& [domain, slots] : j.items()) {
    const std::string dwhere = where + "." + domain;
    if (!slots.is_object()) format_error(dwhere, "expected an object");
    for (const auto& [name, value] : slots.items()) {
      const std::string swhere = dwhere + "." + name;
      if (!value.is_string()) format_error(swhere, "expected a string value");
      SlotKey key = checked_key(domain, name, swhere);
      if (state.contains(key)) format_error(swhere, "duplicate slot");
      state.set(key, value.get<std::string>());
    }
  }
  return state;
}

Json state_log_entry_to_json(const StateLogEntry& entry) {
  return Json{{"dialogue_index", entry.position.dialogue},
              {"dialogue_id", entry.dialogue_id},
              {"scenario_id", entry.scenario_id},
              {"turn", entry.position.turn},
              {"state", state_to_json(entry.state)}};
}

StateLogEntry state_log_entry_from_json(const Json& j,
                                        const std::string& where) {
  StateLogEntry entry;
  const Json& index = field(j, "dialogue_index", where);
  const Json& turn = field(j, "turn", where);
  if (!index.is_number_integer() || !turn.is_number_integer()) {
    format_error(where, "dialogue_index and turn must be integers");
  }
  entry.position = {index.get<std::int64_t>(), turn.get<std::int64_t>()};
  entry.dialogue_id = string_field(j, "dialogue_id", where);
  entry.scenario_id = string_field(j, "scenario_id", where);
  entry.state = state_from_json(field(j, "state", where), where + ".state");
  return entry;
}

Json corpus_to_json(const CorpusFile& corpus) {
  Json dialogues = Json::array();
  for (const Dialogue& d : corpus.dialogues) {
    Json turns = Json::array();
    for (const Turn& t : d.turns) {
      turns.push_back({{"speaker", std::string(to_string(t.speaker))},
                       {"text", t.text},
                       {"state", t.gold_state ? state_to_json(*t.gold_state)
                                              : Json(nullptr)}});
    }
    dialogues.push_back(
        {{"id", d.id},
         {"scenario_id", d.scenario_id},
         {"speakers", {{"user", d.user_label}, {"agent", d.agent_label}}},
         {"turns", std::move(turns)}});
  }
  return Json{{"format_version", corpus.format_version},
              {"gold_schema", corpus.gold_schema
                                  ? schema_to_json(*corpus.gold_schema)
                                  : Json(nullptr)},
              {"dialogues", std::move(dialogues)}};
}

CorpusFile corpus_from_json(const Json& j) {
  CorpusFile corpus;
  const Json& version = field(j, "format_version", "$");
  if (!version.is_number_integer() || version.get<int>() != 1) {
    format_error("$.format_version", "unsupported format version");
  }
  corpus.format_version = 1;
  if (j.contains("gold_schema") && !j.at("gold_schema").is_null()) {
    corpus.gold_schema = schema_from_json(j.at("gold_schema"), "$.gold_schema");
  }
  const Json& dialogues = field(j, "dialogues", "$");
  if (!dialogues.is_array()) format_error("$.dialogues", "expected an array");
  for (std::size_t di = 0; di < dialogues.size(); ++di) {
    const std::string dwhere = "$.dialogues[" + std::to_string(di) + "]";
    const Json& dj = dialogues[di];
    Dialogue d;
    d.id = string_field(dj, "id", dwhere);
    d.scenario_id = string_field(dj, "scenario_id", dwhere);
    if (dj.contains("speakers")) {
      const Json& sp = dj.at("speakers");
      if (sp.contains("user")) d.user_label = string_field(sp, "user", dwhere);
      if (sp.contains("agent")) {
        d.agent_label = string_field(sp, "agent", dwhere);
      }
    }
    const Json& turns = field(dj, "turns", dwhere);
    if (!turns.is_array()) format_error(dwhere + ".turns", "expected an array");
    for (std::size_t ti = 0; ti < turns.size(); ++ti) {
      const std::string twhere = dwhere + ".turns[" + std::to_string(ti) + "]";
      Turn t;
      const std::string speaker = string_field(turns[ti], "speaker", twhere);
      if (speaker == "user") {
        t.speaker = Speaker::kUser;
      } else if (speaker == "agent") {
        t.speaker = Speaker::kAgent;
      } else {
        format_error(twhere + ".speaker", "expected \"user\" or \"agent\"");
      }
      const Speaker expected = ti % 2 == 0 ? Speaker::kUser : Speaker::kAgent;
      if (t.speaker != expected) {
        format_error(twhere + ".speaker",
                     "turns must alternate starting with the user");
      }
      t.text = string_field(turns[ti], "text", twhere);
      if (turns[ti].contains("state") && !turns[ti].at("state").is_null()) {
        if (t.speaker != Speaker::kUser) {
          format_error(twhere + ".state", "state labels belong on user turns");
        }
        t.gold_state = state_from_json(turns[ti].at("state"), twhere + ".state");
        if (corpus.gold_schema) {
          for (const SlotValue& sv : t.gold_state->triples()) {
            if (!corpus.gold_schema->contains(sv.key)) {
              format_error(twhere + ".state",
                           "slot " + sv.key.str() + " is not in gold_schema");
            }
          }
        }
      }
      d.turns.push_back(std::move(t));
    }
    corpus.dialogues.push_back(std::move(d));
  }
  return corpus;
}

std::string serialize_corpus(const CorpusFile& corpus) {
  return corpus_to_json(corpus).dump(2) + "\n";
}

CorpusFile parse_corpus(std::string_view text) {
  Json j;
  try {
    j = Json::parse(text);
  } catch (const Json::parse_error& e) {
    // Translate the byte offset into a line number.
    const std::size_t offset = std::min<std::size_t>(e.byte, text.size());
    const auto line = 1 + std::count(text.begin(),
                                     text.begin() + static_cast<long>(offset),
                                     '\n');
    throw Error(ErrorCode::kCorpusFormat,
                "line " + std::to_string(line) + ": " + e.what());
  }
  return corpus_from_json(j);
}

std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text_file(const std::filesystem::path& path, std::string_view text) {
  if (path.has_parent_path()) {
    std::filesystem::create_directories(path.parent_path());
  }
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << text;
}

CorpusFile load_corpus(const std::filesystem::path& path) {
  std::string text;
  try {
    text = read_text_file(path);
  } catch (const std::runtime_error& e) {
    throw Error(ErrorCode::kCorpusFormat, e.what());
  }
  try {
    return parse_corpus(text);
  } catch (const Error& e) {
    throw Error(ErrorCode::kCorpusFormat,
                path.string() + ": " + e.detail());
  }
}

void save_corpus(const CorpusFile& corpus, const std::filesystem::path& path) {
  write_text_file(path, serialize_corpus(corpus));
}

// ---------------------------------------------------------------------------
// Training pairs

DialogueState state_delta(const DialogueState& previous,
                          const DialogueState& current) {
  DialogueState delta;
  for (const SlotValue& t : current.triples()) {
    const std::string* before = previous.value(t.key);
    if (before == nullptr || *before != t.value) {
      delta.set(t.key, t.value);
      if (const std::string* desc = current.description(t.key)) {
        delta.set_description(t.key, *desc);
      }
    }
  }
  return delta;
}

namespace {

/// Attaches gold descriptions to the keys of `target` not yet introduced.
DialogueState with_discovery_descriptions(DialogueState target,
                                          const SlotSchema& introduced,
                                          const SlotSchema& gold) {
  for (const SlotValue& t : target.triples()) {
    if (introduced.contains(t.key)) continue;
    if (const SlotDef* def = gold.find(t.key); def && !def->description.empty()) {
      target.set_description(t.key, def->description);
    }
  }
  return target;
}

void introduce(SlotSchema& introduced, const DialogueState& state,
               const SlotSchema& gold) {
  for (const SlotValue& t : state.triples()) {
    if (introduced.contains(t.key)) continue;
    const SlotDef* def = gold.find(t.key);
    introduced.add(def ? *def : make_slot_def(t.key, ""));
  }
}

}  // namespace

std::vector<TrainingPair> build_training_sequences(
    const CorpusFile& corpus, StateMode mode, const RenderOptions& opts) {
  if (!corpus.gold_schema) {
    throw Error(ErrorCode::kMissingGold, "corpus has no gold schema");
  }
  const SlotSchema& gold = *corpus.gold_schema;
  const PromptPack& pack = opts.tokens();
  bool any_labels = false;
  SlotSchema introduced;
  std::vector<TrainingPair> pairs;

  for (const Dialogue& d : corpus.dialogues) {
    if (mode == StateMode::kFinal) {
      const auto last = d.last_user_turn();
      if (!last || !d.turns[*last].gold_state) continue;
      any_labels = true;
      const DialogueState& state = *d.turns[*last].gold_state;
      pairs.push_back(
          {render_prompt(introduced, d, d.turns.size() - 1, mode, opts),
           render_state_block(
               with_discovery_descriptions(state, introduced, gold), pack)});
      introduce(introduced, state, gold);
      continue;
    }
    DialogueState previous;
    for (std::size_t ti = 0; ti < d.turns.size(); ++ti) {
      const Turn& turn = d.turns[ti];
      if (turn.speaker != Speaker::kUser || !turn.gold_state) continue;
      any_labels = true;
      const DialogueState& state = *turn.gold_state;
      DialogueState target = mode == StateMode::kUpdate
                                 ? state_delta(previous, state)
                                 : state;
      pairs.push_back(
          {render_prompt(introduced, d, ti, mode, opts),
           render_state_block(
               with_discovery_descriptions(std::move(target), introduced,
                                           gold),
               pack)});
      introduce(introduced, state, gold);
      previous = state;
    }
  }
  if (!any_labels) {
    throw Error(ErrorCode::kMissingGold, "corpus has no annotated user turns");
  }
  return pairs;
}

std::string training_pairs_to_jsonl(std::span<const TrainingPair> pairs) {
  std::string out;
  for (const TrainingPair& p : pairs) {
    out += Json{{"prompt", p.prompt}, {"target", p.target}}.dump() + "\n";
  }
  return out;
}

}  // namespace slotweaver
