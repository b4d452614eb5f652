// Copyright 2026 The Slotweaver Authors
// SPDX-License-Identifier: Apache-2.0

// Domain types shared by every module: slot identity, schemas, dialogue
// states and dialogues, plus the schema-union update rule.

#pragma once

#include <compare>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

namespace slotweaver {

// ---------------------------------------------------------------------------
// Text helpers

std::string trim(std::string_view text);
/// ASCII lowercase; bytes >= 0x80 pass through untouched.
std::string casefold(std::string_view text);
/// Replaces every line break with a space and trims the result.
std::string single_line(std::string_view text);
/// Caseless form with whitespace and underscore runs folded to one space.
/// Returns an empty string when nothing but separators remain.
std::string canonicalize(std::string_view text);

// ---------------------------------------------------------------------------
// Slot identity

/// A (domain, slot) identity. Equality, ordering and hashing use only the
/// canonical fields; the labels keep the first surface form seen so prompts
/// can reproduce names like "maintenance_level" or "Garden Layouts".
class SlotKey {
 public:
  SlotKey() = default;

  const std::string& domain() const noexcept { return domain_; }
  const std::string& name() const noexcept { return name_; }
  const std::string& domain_label() const noexcept { return domain_label_; }
  const std::string& name_label() const noexcept { return name_label_; }

  /// "domain/name" in canonical form, for diagnostics and stable ordering.
  std::string str() const { return domain_ + "/" + name_; }

  friend bool operator==(const SlotKey& a, const SlotKey& b) noexcept {
    return a.domain_ == b.domain_ && a.name_ == b.name_;
  }
  friend std::strong_ordering operator<=>(const SlotKey& a,
                                          const SlotKey& b) noexcept {
    if (auto c = a.domain_ <=> b.domain_; c != 0) return c;
    return a.name_ <=> b.name_;
  }

 private:
  friend SlotKey canonical_slot_key(std::string_view, std::string_view);

  std::string domain_;
  std::string name_;
  std::string domain_label_;
  std::string name_label_;
};

/// Throws Error(kInvalidSlotName) when either part is empty after trimming.
SlotKey canonical_slot_key(std::string_view domain, std::string_view name);

struct SlotKeyHash {
  std::size_t operator()(const SlotKey& key) const noexcept {
    const std::size_t h = std::hash<std::string>{}(key.domain());
    return h ^ (std::hash<std::string>{}(key.name()) + 0x9e3779b97f4a7c15ULL +
                (h << 6) + (h >> 2));
  }
};

/// Stream position: dialogue index within the stream and turn index within
/// the dialogue.
struct Position {
  std::int64_t dialogue = 0;
  std::int64_t turn = 0;

  friend auto operator<=>(const Position&, const Position&) = default;
};

struct SlotDef {
  SlotKey key;
  std::string description;
  /// Empty for gold / pre-seeded slots.
  std::optional<Position> discovered_at;

  bool is_gold() const noexcept { return !discovered_at.has_value(); }
};

SlotDef make_slot_def(SlotKey key, std::string_view description,
                      std::optional<Position> discovered_at = std::nullopt);

// ---------------------------------------------------------------------------
// Schema

class SlotSchema {
 public:
  struct DomainGroup {
    std::string label;
    std::vector<const SlotDef*> slots;
  };

  const std::vector<SlotDef>& slots() const noexcept { return slots_; }
  std::size_t size() const noexcept { return slots_.size(); }
  bool empty() const noexcept { return slots_.empty(); }
  std::uint64_t version() const noexcept { return version_; }

  bool contains(const SlotKey& key) const { return index_.contains(key); }
  const SlotDef* find(const SlotKey& key) const;

  /// Slots grouped by domain, domains in first-appearance order and slots in
  /// insertion order within each domain.
  std::vector<DomainGroup> by_domain() const;

  // Each call below that changes the contents bumps version() exactly once.

  /// Returns false (and leaves the schema untouched) if the key exists.
  bool add(SlotDef def);
  bool remove(const SlotKey& key);
  std::size_t remove_if(const std::function<bool(const SlotDef&)>& pred);
  /// Replaces the whole slot list; duplicate keys keep the first occurrence.
  void replace_all(std::vector<SlotDef> defs);

 private:
  void reindex();

  std::vector<SlotDef> slots_;
  std::unordered_map<SlotKey, std::size_t, SlotKeyHash> index_;
  std::uint64_t version_ = 0;
};

/// Same key set with identical descriptions, ignoring order and version.
bool same_slots(const SlotSchema& a, const SlotSchema& b);

// ---------------------------------------------------------------------------
// Dialogue state

struct SlotValue {
  SlotKey key;
  std::string value;
};

class DialogueState {
 public:
  const std::vector<SlotValue>& triples() const noexcept { return triples_; }
  std::size_t size() const noexcept { return triples_.size(); }
  bool empty() const noexcept { return triples_.empty(); }

  const std::string* value(const SlotKey& key) const;
  bool contains(const SlotKey& key) const { return value(key) != nullptr; }

  /// Sets or overwrites the value for key. Returns true if a previous value
  /// was replaced.
  bool set(const SlotKey& key, std::string value);
  bool erase(const SlotKey& key);

  const std::unordered_map<SlotKey, std::string, SlotKeyHash>&
  new_slot_descriptions() const noexcept {
    return descriptions_;
  }
  const std::string* description(const SlotKey& key) const;
  /// Ignored unless key already holds a value.
  void set_description(const SlotKey& key, std::string description);

  /// Order-insensitive: same keys, values and descriptions.
  friend bool operator==(const DialogueState& a, const DialogueState& b);

 private:
  std::vector<SlotValue> triples_;
  std::unordered_map<SlotKey, std::string, SlotKeyHash> descriptions_;
};

// ---------------------------------------------------------------------------
// Dialogues

enum class Speaker { kUser, kAgent };

std::string_view to_string(Speaker speaker);

struct Turn {
  Speaker speaker = Speaker::kUser;
  std::string text;
  std::optional<DialogueState> gold_state;
};

struct Dialogue {
  std::string id;
  std::string scenario_id;
  std::vector<Turn> turns;
  /// Display names for the two roles in rendered prompts ("Gardener").
  std::string user_label = "User";
  std::string agent_label = "Agent";

  const std::string& label(Speaker speaker) const {
    return speaker == Speaker::kUser ? user_label : agent_label;
  }
  /// Index of the last user turn, or nullopt when there is none.
  std::optional<std::size_t> last_user_turn() const;
};

/// How dialogue states are represented in predictions and targets.
enum class StateMode { kUpdate, kState, kFinal };

std::string_view to_string(StateMode mode);
/// Accepts "update", "state", "final"; throws Error(kConfig) otherwise.
StateMode parse_state_mode(std::string_view text);

/// One predicted (or gold) state at a stream position.
struct StateLogEntry {
  /// position.dialogue is the stream index; position.turn the turn index.
  Position position;
  std::string dialogue_id;
  std::string scenario_id;
  DialogueState state;
};

// ---------------------------------------------------------------------------
// Update rule

/// prev plus one new SlotDef per state key absent from prev. Existing slots
/// are never modified; a conflicting description for an existing key is
/// logged and dropped.
SlotSchema schema_update(const SlotSchema& prev, const DialogueState& state,
                         Position at = {});

}  // namespace slotweaver
