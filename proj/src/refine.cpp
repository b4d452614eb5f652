// Copyright 2026 The Slotweaver Authors
// SPDX-License-Identifier: Apache-2.0

#include "slotweaver/refine.hpp"

#include <algorithm>
#include <map>
#include <stdexcept>
#include <tuple>

#include <spdlog/spdlog.h>

#include "slotweaver/error.hpp"
#include "slotweaver/rng.hpp"

namespace slotweaver {

const SlotStats::Entry* SlotStats::find(const SlotKey& key) const {
  auto it = slots.find(key);
  return it == slots.end() ? nullptr : &it->second;
}

SlotStats record_state(SlotStats stats, const DialogueState& state,
                       std::int64_t dialogue_index) {
  for (const SlotValue& t : state.triples()) {
    auto [it, inserted] = stats.slots.try_emplace(t.key);
    SlotStats::Entry& e = it->second;
    if (inserted) e.discovered_at = dialogue_index;
    if (!e.fill_events.empty() && e.fill_events.back() >= dialogue_index) {
      continue;
    }
    e.fill_events.push_back(dialogue_index);
    e.global_count = static_cast<std::int64_t>(e.fill_events.size());
    e.last_filled = dialogue_index;
  }
  return stats;
}

void FilterConfig::validate() const {
  if (window_w < 1 || threshold_tau < 1 || cap < 1) {
    throw Error(ErrorCode::kConfig,
                "window, threshold and cap must all be at least 1");
  }
}

SlotSchema confidence_filter(const SlotSchema& schema, const SlotStats& stats,
                             const FilterConfig& cfg,
                             std::int64_t current_dialogue) {
  cfg.validate();
  const std::int64_t window_start = current_dialogue - cfg.window_w;
  SlotSchema out = schema;
  out.remove_if([&](const SlotDef& def) {
    if (def.is_gold()) return false;
    if (current_dialogue - def.discovered_at->dialogue < cfg.window_w) {
      return false;
    }
    std::int64_t fills = 0;
    if (const auto* e = stats.find(def.key)) {
      fills = std::count_if(e->fill_events.begin(), e->fill_events.end(),
                            [&](std::int64_t d) {
                              return d > window_start && d <= current_dialogue;
                            });
    }
    return fills < cfg.threshold_tau;
  });
  return out;
}

namespace {

// Gold slots sort before every discovered slot.
Position discovery_order(const SlotDef& def) {
  return def.discovered_at.value_or(Position{-1, -1});
}

std::int64_t last_filled(const SlotDef& def, const SlotStats& stats) {
  if (const auto* e = stats.find(def.key)) return e->last_filled;
  return def.is_gold() ? -1 : def.discovered_at->dialogue;
}

std::int64_t global_count(const SlotDef& def, const SlotStats& stats) {
  const auto* e = stats.find(def.key);
  return e ? e->global_count : 0;
}

/// Keeps `keep` slots, evicting in ascending order of `score`.
template <typename Score>
SlotSchema evict_to(const SlotSchema& schema, std::size_t keep, Score score) {
  if (schema.size() <= keep) return schema;
  std::vector<const SlotDef*> order;
  for (const SlotDef& def : schema.slots()) order.push_back(&def);
  std::sort(order.begin(), order.end(),
            [&](const SlotDef* a, const SlotDef* b) {
              return std::forward_as_tuple(score(*a), discovery_order(*a),
                                           a->key) <
                     std::forward_as_tuple(score(*b), discovery_order(*b),
                                           b->key);
            });
  std::vector<SlotKey> evicted;
  for (std::size_t i = 0; i < schema.size() - keep; ++i) {
    evicted.push_back(order[i]->key);
  }
  SlotSchema out = schema;
  out.remove_if([&](const SlotDef& def) {
    return std::find(evicted.begin(), evicted.end(), def.key) != evicted.end();
  });
  return out;
}

}  // namespace

SlotSchema fifo_filter(const SlotSchema& schema, const SlotStats& stats,
                       const FilterConfig& cfg) {
  cfg.validate();
  return evict_to(schema, cfg.cap, [&](const SlotDef& def) {
    return last_filled(def, stats);
  });
}

SlotSchema priority_filter(const SlotSchema& schema, const SlotStats& stats,
                           const FilterConfig& cfg) {
  cfg.validate();
  if (schema.size() < cfg.cap) return schema;
  return evict_to(schema, cfg.cap - 1, [&](const SlotDef& def) {
    return global_count(def, stats);
  });
}

// ---------------------------------------------------------------------------

std::string_view to_string(NoiseVariant variant) {
  switch (variant) {
    case NoiseVariant::kNoNoise: return "no_noise";
    case NoiseVariant::kAddNoisySubset: return "add_noisy_subset";
    case NoiseVariant::kMixSubsets: return "mix_subsets";
  }
  return "no_noise";
}

RevisionExample make_revision_example(const SlotSchema& gold,
                                      const SlotSchema& noisy,
                                      const NoiseStrategy& strategy) {
  if (gold.empty()) {
    throw std::invalid_argument("revision examples need a non-empty gold schema");
  }
  Rng rng(strategy.seed);
  const NoiseVariant variant =
      strategy.variant.value_or(static_cast<NoiseVariant>(uniform_index(rng, 3)));

  std::vector<SlotDef> input;
  auto add_unique = [&](const SlotDef& def) {
    const bool present = std::any_of(
        input.begin(), input.end(),
        [&](const SlotDef& other) { return other.key == def.key; });
    if (!present) input.push_back(def);
  };
  switch (variant) {
    case NoiseVariant::kNoNoise:
      for (const SlotDef& def : gold.slots()) add_unique(def);
      break;
    case NoiseVariant::kAddNoisySubset:
      for (const SlotDef& def : gold.slots()) add_unique(def);
      for (const SlotDef& def : noisy.slots()) {
        if (bernoulli(rng, 0.5)) add_unique(def);
      }
      break;
    case NoiseVariant::kMixSubsets:
      for (const SlotDef& def : gold.slots()) {
        if (bernoulli(rng, 0.5)) add_unique(def);
      }
      for (const SlotDef& def : noisy.slots()) {
        if (bernoulli(rng, 0.5)) add_unique(def);
      }
      break;
  }
  shuffle_in_place(std::span<SlotDef>(input), rng);

  RevisionExample ex;
  ex.input.replace_all(std::move(input));
  ex.target = gold;
  ex.variant = variant;
  return ex;
}

SlotSchema revise_schema(const SlotSchema& schema, TextGenerator& backend,
                         Position at, const Dialogue* context,
                         const RevisionSettings& settings) {
  GenerationRequest request;
  request.prompt = render_revision_prompt(schema, context, settings.render);
  request.max_output = settings.max_output;
  request.temperature = settings.temperature;
  const std::string response = backend.generate(request);

  SlotSchema parsed;
  try {
    parsed = parse_schema_block(response, nullptr, settings.render.tokens());
  } catch (const Error& e) {
    spdlog::warn("schema revision response ignored: {}", e.what());
    return schema;
  }
  if (same_slots(parsed, schema)) return schema;

  std::vector<SlotDef> revised;
  for (const SlotDef& def : parsed.slots()) {
    SlotDef next = def;
    const SlotDef* old = schema.find(def.key);
    next.discovered_at = old ? old->discovered_at : std::optional<Position>(at);
    revised.push_back(std::move(next));
  }
  SlotSchema out = schema;
  out.replace_all(std::move(revised));
  return out;
}

std::vector<TrainingPair> build_revision_sequences(
    const CorpusFile& gold_corpus, std::span<const StateLogEntry> noisy_log,
    std::uint64_t seed, const RenderOptions& opts) {
  if (!gold_corpus.gold_schema) {
    throw Error(ErrorCode::kMissingGold, "corpus has no gold schema");
  }
  const SlotSchema& gold = *gold_corpus.gold_schema;

  // Noisy schema snapshot after each logged position.
  std::map<std::pair<std::string, std::int64_t>, SlotSchema> noisy_at;
  SlotSchema running;
  for (const StateLogEntry& e : noisy_log) {
    running = schema_update(running, e.state, e.position);
    noisy_at.insert_or_assign({e.dialogue_id, e.position.turn}, running);
  }

  SlotSchema introduced;
  std::vector<TrainingPair> pairs;
  std::size_t missing = 0;
  for (const Dialogue& d : gold_corpus.dialogues) {
    for (std::size_t ti = 0; ti < d.turns.size(); ++ti) {
      const Turn& turn = d.turns[ti];
      if (turn.speaker != Speaker::kUser || !turn.gold_state) continue;
      for (const SlotValue& t : turn.gold_state->triples()) {
        if (introduced.contains(t.key)) continue;
        const SlotDef* def = gold.find(t.key);
        introduced.add(def ? *def : make_slot_def(t.key, ""));
      }
      auto it = noisy_at.find({d.id, static_cast<std::int64_t>(ti)});
      if (it == noisy_at.end()) {
        ++missing;
        continue;
      }
      if (introduced.empty()) continue;
      NoiseStrategy strategy;
      strategy.seed = derive_seed(seed, pairs.size());
      RevisionExample ex = make_revision_example(introduced, it->second,
                                                 strategy);
      Dialogue context = d;
      context.turns.resize(ti + 1);
      pairs.push_back({render_revision_prompt(ex.input, &context, opts),
                       render_schema_block(ex.target, opts.tokens())});
    }
  }
  if (missing > 0) {
    spdlog::warn("{} annotated turns had no noisy-log entry and were skipped",
                 missing);
  }
  return pairs;
}

// ---------------------------------------------------------------------------

namespace {

class StatsRefiner : public Refiner {
 public:
  explicit StatsRefiner(FilterConfig cfg) : cfg_(cfg) { cfg_.validate(); }
  void reset() override { stats_ = {}; }
  void observe(const DialogueState& state,
               std::int64_t dialogue_index) override {
    stats_ = record_state(std::move(stats_), state, dialogue_index);
  }

 protected:
  FilterConfig cfg_;
  SlotStats stats_;
};

class SlotConfidenceRefiner final : public StatsRefiner {
 public:
  using StatsRefiner::StatsRefiner;
  std::string name() const override { return "slot-conf"; }
  Json params() const override {
    return {{"window", cfg_.window_w}, {"tau", cfg_.threshold_tau}};
  }
  SlotSchema at_dialogue_end(const SlotSchema& schema, std::int64_t index,
                             const Dialogue&) override {
    return confidence_filter(schema, stats_, cfg_, index);
  }
};

class FifoRefiner final : public StatsRefiner {
 public:
  using StatsRefiner::StatsRefiner;
  std::string name() const override { return "fifo"; }
  Json params() const override { return {{"cap", cfg_.cap}}; }
  SlotSchema at_dialogue_end(const SlotSchema& schema, std::int64_t,
                             const Dialogue&) override {
    return fifo_filter(schema, stats_, cfg_);
  }
};

class PriorityRefiner final : public StatsRefiner {
 public:
  using StatsRefiner::StatsRefiner;
  std::string name() const override { return "priority"; }
  Json params() const override { return {{"cap", cfg_.cap}}; }
  SlotSchema at_dialogue_end(const SlotSchema& schema, std::int64_t,
                             const Dialogue&) override {
    return priority_filter(schema, stats_, cfg_);
  }
};

class RevisionRefiner final : public Refiner {
 public:
  RevisionRefiner(TextGenerator& backend, RevisionSettings settings)
      : backend_(backend), settings_(std::move(settings)) {}
  std::string name() const override { return "revision"; }
  Json params() const override {
    return {{"temperature", settings_.temperature},
            {"max_output", settings_.max_output}};
  }
  SlotSchema at_dialogue_end(const SlotSchema& schema, std::int64_t index,
                             const Dialogue& dialogue) override {
    const auto last = dialogue.last_user_turn();
    const Position at{index, last ? static_cast<std::int64_t>(*last) : 0};
    return revise_schema(schema, backend_, at, &dialogue, settings_);
  }

 private:
  TextGenerator& backend_;
  RevisionSettings settings_;
};

}  // namespace

std::unique_ptr<Refiner> make_refiner(std::string_view name,
                                      const FilterConfig& cfg,
                                      TextGenerator* backend,
                                      const RevisionSettings& revision) {
  const std::string folded = casefold(trim(name));
  if (folded.empty() || folded == "none") return nullptr;
  if (folded == "slot-conf") return std::make_unique<SlotConfidenceRefiner>(cfg);
  if (folded == "fifo") return std::make_unique<FifoRefiner>(cfg);
  if (folded == "priority") return std::make_unique<PriorityRefiner>(cfg);
  if (folded == "revision") {
    if (backend == nullptr) {
      throw Error(ErrorCode::kConfig, "the revision refiner needs a backend");
    }
    return std::make_unique<RevisionRefiner>(*backend, revision);
  }
  throw Error(ErrorCode::kConfig, "unknown refiner '" + std::string(name) + "'");
}

}  // namespace slotweaver
