// Copyright 2026 The Slotweaver Authors
// SPDX-License-Identifier: Apache-2.0

// Schema refinement: the sliding-window slot confidence filter, the FIFO
// and priority size-cap baselines, generative schema revision and the noise
// generator used to build revision training data.

#pragma once

#include <cstddef>
#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "slotweaver/backend.hpp"
#include "slotweaver/core.hpp"
#include "slotweaver/seqio.hpp"

namespace slotweaver {

/// Per-slot fill history, indexed by stream dialogue index.
struct SlotStats {
  struct Entry {
    std::vector<std::int64_t> fill_events;  // ascending, one per dialogue
    std::int64_t global_count = 0;
    std::int64_t last_filled = -1;
    std::int64_t discovered_at = -1;
  };

  std::unordered_map<SlotKey, Entry, SlotKeyHash> slots;

  const Entry* find(const SlotKey& key) const;
};

/// Adds one fill event at dialogue_index for every key of state, at most
/// one per (key, dialogue).
SlotStats record_state(SlotStats stats, const DialogueState& state,
                       std::int64_t dialogue_index);

struct FilterConfig {
  std::int64_t window_w = 10;
  std::int64_t threshold_tau = 1;
  std::size_t cap = 100;

  /// Throws Error(kConfig) unless all three are >= 1.
  void validate() const;
};

/// Removes every non-gold slot at least window_w dialogues old that has
/// fewer than threshold_tau fills in (current - w, current].
SlotSchema confidence_filter(const SlotSchema& schema, const SlotStats& stats,
                             const FilterConfig& cfg,
                             std::int64_t current_dialogue);

/// While the schema is larger than cap, evicts the least recently filled
/// slot (ties: older discovery, then key order).
SlotSchema fifo_filter(const SlotSchema& schema, const SlotStats& stats,
                       const FilterConfig& cfg);

/// Once the schema reaches cap, evicts the least frequently filled slots
/// down to cap - 1 (ties as in fifo_filter).
SlotSchema priority_filter(const SlotSchema& schema, const SlotStats& stats,
                           const FilterConfig& cfg);

// ---------------------------------------------------------------------------
// Revision

enum class NoiseVariant { kNoNoise, kAddNoisySubset, kMixSubsets };

std::string_view to_string(NoiseVariant variant);

struct NoiseStrategy {
  /// Drawn uniformly from the three variants when unset.
  std::optional<NoiseVariant> variant;
  std::uint64_t seed = 0;
};

struct RevisionExample {
  SlotSchema input;
  SlotSchema target;
  NoiseVariant variant = NoiseVariant::kNoNoise;
};

/// Requires a non-empty gold schema (throws std::invalid_argument).
RevisionExample make_revision_example(const SlotSchema& gold,
                                      const SlotSchema& noisy,
                                      const NoiseStrategy& strategy);

struct RevisionSettings {
  RenderOptions render;
  int max_output = 2048;
  double temperature = 0.0;
};

/// Asks the backend to rewrite the schema. Surviving slots keep their
/// discovery position; new or renamed ones get `at`. An unparseable
/// response leaves the schema unchanged.
SlotSchema revise_schema(const SlotSchema& schema, TextGenerator& backend,
                         Position at, const Dialogue* context = nullptr,
                         const RevisionSettings& settings = {});

/// Revision training pairs: one per annotated user turn of the gold corpus
/// with a matching (dialogue id, turn) entry in the noisy run's state log.
/// The noisy schema at that position is the running union of the noisy
/// states up to it.
std::vector<TrainingPair> build_revision_sequences(
    const CorpusFile& gold_corpus, std::span<const StateLogEntry> noisy_log,
    std::uint64_t seed, const RenderOptions& opts = {});

// ---------------------------------------------------------------------------
// Refiners as plugged into an induction run

class Refiner {
 public:
  virtual ~Refiner() = default;

  virtual std::string name() const = 0;
  virtual Json params() const = 0;
  /// Clears per-run state; called at the start of every induction run.
  virtual void reset() {}
  /// Called once per produced state.
  virtual void observe(const DialogueState& state,
                       std::int64_t dialogue_index) {
    (void)state;
    (void)dialogue_index;
  }
  /// Called after each dialogue; returns the refined schema.
  virtual SlotSchema at_dialogue_end(const SlotSchema& schema,
                                     std::int64_t dialogue_index,
                                     const Dialogue& dialogue) = 0;
};

/// Names: "slot-conf", "fifo", "priority", "revision". Revision needs a
/// backend. Returns nullptr for "none". Throws Error(kConfig) otherwise.
std::unique_ptr<Refiner> make_refiner(std::string_view name,
                                      const FilterConfig& cfg,
                                      TextGenerator* backend = nullptr,
                                      const RevisionSettings& revision = {});

}  // namespace slotweaver
