// Copyright 2026 The Slotweaver Authors
// SPDX-License-Identifier: Apache-2.0

#include "slotweaver/core.hpp"

#include <algorithm>
#include <map>

#include <spdlog/spdlog.h>

#include "slotweaver/error.hpp"

namespace slotweaver {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::kInvalidSlotName: return "InvalidSlotName";
    case ErrorCode::kMissingValuesHeader: return "MissingValuesHeader";
    case ErrorCode::kMissingTypesHeader: return "MissingTypesHeader";
    case ErrorCode::kCorpusFormat: return "CorpusFormatError";
    case ErrorCode::kMissingGold: return "MissingGoldError";
    case ErrorCode::kTransport: return "TransportError";
    case ErrorCode::kAuth: return "AuthError";
    case ErrorCode::kScriptExhausted: return "ScriptExhausted";
    case ErrorCode::kScriptMismatch: return "ScriptMismatch";
    case ErrorCode::kSchemaOverflow: return "SchemaOverflow";
    case ErrorCode::kScenarioGeneration: return "ScenarioGenerationError";
    case ErrorCode::kSchemaDefinition: return "SchemaDefinitionError";
    case ErrorCode::kTaskInit: return "TaskInitError";
    case ErrorCode::kEmptyPredictedSlot: return "EmptyPredictedSlot";
    case ErrorCode::kInvalidGold: return "InvalidGold";
    case ErrorCode::kUnknownScenario: return "UnknownScenario";
    case ErrorCode::kIncompleteMapping: return "IncompleteMapping";
    case ErrorCode::kConfig: return "ConfigError";
  }
  return "Error";
}

namespace {

bool is_space(char c) {
  return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\v' ||
         c == '\f';
}

}  // namespace

std::string trim(std::string_view text) {
  std::size_t begin = 0;
  std::size_t end = text.size();
  while (begin < end && is_space(text[begin])) ++begin;
  while (end > begin && is_space(text[end - 1])) --end;
  return std::string(text.substr(begin, end - begin));
}

std::string casefold(std::string_view text) {
  std::string out(text);
  for (char& c : out) {
    if (c >= 'A' && c <= 'Z') c = static_cast<char>(c - 'A' + 'a');
  }
  return out;
}

std::string single_line(std::string_view text) {
  // A line break and the blanks around it become one space.
  std::string out;
  out.reserve(text.size());
  for (std::size_t i = 0; i < text.size(); ++i) {
    if (text[i] != '\n' && text[i] != '\r') {
      out.push_back(text[i]);
      continue;
    }
    while (!out.empty() && (out.back() == ' ' || out.back() == '\t')) out.pop_back();
    while (i + 1 < text.size() && is_space(text[i + 1])) ++i;
    out.push_back(' ');
  }
  return trim(out);
}

std::string canonicalize(std::string_view text) {
  std::string out;
  out.reserve(text.size());
  bool pending_separator = false;
  for (char c : text) {
    if (is_space(c) || c == '_') {
      pending_separator = true;
      continue;
    }
    if (pending_separator && !out.empty()) out.push_back(' ');
    pending_separator = false;
    out.push_back(c >= 'A' && c <= 'Z' ? static_cast<char>(c - 'A' + 'a') : c);
  }
  return out;
}

SlotKey canonical_slot_key(std::string_view domain, std::string_view name) {
  SlotKey key;
  key.domain_ = canonicalize(domain);
  key.name_ = canonicalize(name);
  if (key.domain_.empty() || key.name_.empty()) {
    throw Error(ErrorCode::kInvalidSlotName,
                "empty slot domain or name: '" + std::string(domain) + "', '" +
                    std::string(name) + "'");
  }
  key.domain_label_ = single_line(domain);
  key.name_label_ = single_line(name);
  return key;
}

SlotDef make_slot_def(SlotKey key, std::string_view description,
                      std::optional<Position> discovered_at) {
  return SlotDef{std::move(key), single_line(description), discovered_at};
}

// ---------------------------------------------------------------------------

const SlotDef* SlotSchema::find(const SlotKey& key) const {
  auto it = index_.find(key);
  return it == index_.end() ? nullptr : &slots_[it->second];
}

std::vector<SlotSchema::DomainGroup> SlotSchema::by_domain() const {
  std::vector<DomainGroup> groups;
  std::unordered_map<std::string, std::size_t> where;
  for (const SlotDef& def : slots_) {
    auto [it, inserted] = where.try_emplace(def.key.domain(), groups.size());
    if (inserted) groups.push_back({def.key.domain_label(), {}});
    groups[it->second].slots.push_back(&def);
  }
  return groups;
}

bool SlotSchema::add(SlotDef def) {
  if (index_.contains(def.key)) return false;
  index_.emplace(def.key, slots_.size());
  slots_.push_back(std::move(def));
  ++version_;
  return true;
}

bool SlotSchema::remove(const SlotKey& key) {
  return remove_if([&](const SlotDef& def) { return def.key == key; }) > 0;
}

std::size_t SlotSchema::remove_if(
    const std::function<bool(const SlotDef&)>& pred) {
  const auto before = slots_.size();
  std::erase_if(slots_, pred);
  const auto removed = before - slots_.size();
  if (removed > 0) {
    reindex();
    ++version_;
  }
  return removed;
}

void SlotSchema::replace_all(std::vector<SlotDef> defs) {
  slots_.clear();
  index_.clear();
  for (SlotDef& def : defs) {
    if (index_.contains(def.key)) continue;
    index_.emplace(def.key, slots_.size());
    slots_.push_back(std::move(def));
  }
  ++version_;
}

void SlotSchema::reindex() {
  index_.clear();
  for (std::size_t i = 0; i < slots_.size(); ++i) {
    index_.emplace(slots_[i].key, i);
  }
}

bool same_slots(const SlotSchema& a, const SlotSchema& b) {
  if (a.size() != b.size()) return false;
  for (const SlotDef& def : a.slots()) {
    const SlotDef* other = b.find(def.key);
    if (other == nullptr || other->description != def.description) {
      return false;
    }
  }
  return true;
}

// ---------------------------------------------------------------------------

const std::string* DialogueState::value(const SlotKey& key) const {
  for (const SlotValue& t : triples_) {
    if (t.key == key) return &t.value;
  }
  return nullptr;
}

bool DialogueState::set(const SlotKey& key, std::string value) {
  for (SlotValue& t : triples_) {
    if (t.key == key) {
      t.value = std::move(value);
      return true;
    }
  }
  triples_.push_back({key, std::move(value)});
  return false;
}

bool DialogueState::erase(const SlotKey& key) {
  descriptions_.erase(key);
  return std::erase_if(triples_,
                       [&](const SlotValue& t) { return t.key == key; }) > 0;
}

const std::string* DialogueState::description(const SlotKey& key) const {
  auto it = descriptions_.find(key);
  return it == descriptions_.end() ? nullptr : &it->second;
}

void DialogueState::set_description(const SlotKey& key,
                                    std::string description) {
  if (!contains(key)) return;
  descriptions_.insert_or_assign(key, single_line(description));
}

bool operator==(const DialogueState& a, const DialogueState& b) {
  if (a.triples_.size() != b.triples_.size()) return false;
  for (const SlotValue& t : a.triples_) {
    const std::string* other = b.value(t.key);
    if (other == nullptr || *other != t.value) return false;
  }
  return a.descriptions_ == b.descriptions_;
}

// ---------------------------------------------------------------------------

std::string_view to_string(Speaker speaker) {
  return speaker == Speaker::kUser ? "user" : "agent";
}

std::optional<std::size_t> Dialogue::last_user_turn() const {
  for (std::size_t i = turns.size(); i > 0; --i) {
    if (turns[i - 1].speaker == Speaker::kUser) return i - 1;
  }
  return std::nullopt;
}

std::string_view to_string(StateMode mode) {
  switch (mode) {
    case StateMode::kUpdate: return "update";
    case StateMode::kState: return "state";
    case StateMode::kFinal: return "final";
  }
  return "state";
}

StateMode parse_state_mode(std::string_view text) {
  const std::string folded = casefold(trim(text));
  if (folded == "update") return StateMode::kUpdate;
  if (folded == "state") return StateMode::kState;
  if (folded == "final") return StateMode::kFinal;
  throw Error(ErrorCode::kConfig,
              "unknown state mode '" + std::string(text) + "'");
}

// ---------------------------------------------------------------------------

SlotSchema schema_update(const SlotSchema& prev, const DialogueState& state,
                         Position at) {
  std::vector<SlotDef> added;
  for (const SlotValue& t : state.triples()) {
    const std::string* desc = state.description(t.key);
    if (const SlotDef* existing = prev.find(t.key)) {
      if (desc != nullptr && !desc->empty() &&
          *desc != existing->description) {
        spdlog::debug("keeping original description for {} (got '{}')",
                      t.key.str(), *desc);
      }
      continue;
    }
    const bool duplicate = std::any_of(
        added.begin(), added.end(),
        [&](const SlotDef& def) { return def.key == t.key; });
    if (duplicate) continue;
    added.push_back(make_slot_def(t.key, desc ? *desc : std::string(), at));
  }
  if (added.empty()) return prev;
  std::vector<SlotDef> all = prev.slots();
  all.insert(all.end(), std::make_move_iterator(added.begin()),
             std::make_move_iterator(added.end()));
  SlotSchema next = prev;
  next.replace_all(std::move(all));
  return next;
}

}  // namespace slotweaver
