// Copyright 2026 The Slotweaver Authors
// SPDX-License-Identifier: Apache-2.0

// Slot matching and the adjusted slot/value precision-recall metrics.
//
// Each slot is a set of (context, value) fills, context being (dialogue id,
// turn). A predicted slot p maps to the gold slot g maximizing S(p, g);
// with the exact matcher S(p, g) = |p ∩ g| / |p| and p stays unmatched when
// the best score is below 0.5. Slot precision divides the number of
// distinct mapped gold slots by |P|, so redundant predictions cost
// precision.

#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "slotweaver/core.hpp"
#include "slotweaver/seqio.hpp"

namespace slotweaver {

struct Fill {
  std::string dialogue_id;
  std::int64_t turn = 0;
  std::string value;  // verbatim
};

/// How fills are intersected.
enum class ContextPolicy {
  /// Same (dialogue id, turn) and caseless-equal value.
  kAligned,
  /// Caseless-equal value anywhere; contexts are ignored.
  kValueBag,
};

class ValuedSlot {
 public:
  ValuedSlot() = default;
  explicit ValuedSlot(SlotKey key) : key_(std::move(key)) {}

  const SlotKey& key() const noexcept { return key_; }
  const std::vector<Fill>& fills() const noexcept { return fills_; }
  std::size_t size() const noexcept { return fills_.size(); }
  bool empty() const noexcept { return fills_.empty(); }

  /// Duplicates (same context, caseless-equal value) collapse; returns
  /// whether the fill was new.
  bool add(Fill fill);

 private:
  SlotKey key_;
  std::vector<Fill> fills_;
};

/// |p ∩ g|, counted over the fills of p.
std::size_t overlap(const ValuedSlot& p, const ValuedSlot& g,
                    ContextPolicy policy = ContextPolicy::kAligned);

/// |p ∩ g| / |p|. Throws Error(kEmptyPredictedSlot) when p has no fills.
double similarity_exact(const ValuedSlot& p, const ValuedSlot& g,
                        ContextPolicy policy = ContextPolicy::kAligned);

using SimilarityFn = std::function<double(const ValuedSlot&, const ValuedSlot&)>;

struct MappingPair {
  SlotKey predicted;
  SlotKey gold;
  double similarity = 0.0;
  std::size_t overlap = 0;         // |p ∩ g|
  std::size_t predicted_size = 0;  // |p|
  std::size_t gold_size = 0;       // |g|
};

struct SlotMapping {
  std::vector<MappingPair> pairs;  // in the order of P
  std::vector<SlotKey> unmatched_predicted;
  double similarity_threshold = 0.5;

  /// Mapped gold key for a predicted key; nullopt when unmatched or unknown.
  std::optional<SlotKey> gold_for(const SlotKey& predicted) const;
  bool covers(const SlotKey& predicted) const;
};

constexpr double kMatchThreshold = 0.5;

/// Maps every predicted slot to its best gold slot; similarity >= threshold
/// matches. Ties prefer the larger overlap, then the smaller gold key.
/// Predicted slots without fills stay unmatched. Throws Error(kInvalidGold)
/// on duplicate gold keys.
SlotMapping match_slots(std::span<const ValuedSlot> predicted,
                        std::span<const ValuedSlot> gold,
                        double threshold = kMatchThreshold,
                        const SimilarityFn& similarity = {},
                        ContextPolicy policy = ContextPolicy::kAligned);

struct Prf {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  bool degenerate = false;
};

double f1_score(double precision, double recall);

/// Throws Error(kInvalidGold) when gold_count is 0. |P| = 0 yields zeros
/// with the degenerate flag set.
Prf slot_prf(const SlotMapping& mapping, std::size_t predicted_count,
             std::size_t gold_count);
Prf slot_prf(const SlotMapping& mapping, std::span<const ValuedSlot> predicted,
             std::span<const ValuedSlot> gold);

/// Sums over matched pairs only; an empty mapping yields zeros with the
/// degenerate flag set.
Prf value_prf(const SlotMapping& mapping);

/// Groups the fills of a state log by slot. Every slot of `schema` gets an
/// entry (possibly without fills); logged keys outside the schema are
/// ignored. In final mode only the last entry per dialogue contributes.
std::vector<ValuedSlot> collect_valued_slots(
    std::span<const StateLogEntry> log, const SlotSchema& schema,
    StateMode mode);

/// Gold states of a corpus laid out like an induction state log for the
/// given mode (per annotated user turn, per-turn deltas, or last user turn).
std::vector<StateLogEntry> gold_state_log(const CorpusFile& corpus,
                                          StateMode mode);

// ---------------------------------------------------------------------------
// Reports

struct MetricValues {
  Prf slot;
  Prf value;
};

struct MetricReport {
  double slot_p = 0, slot_r = 0, slot_f1 = 0;
  double value_p = 0, value_r = 0, value_f1 = 0;
  std::map<std::string, MetricValues> per_scenario;
  bool replicate_mean = false;
  std::size_t replicates = 1;
};

/// Predicted schema and state log for one scenario. The scenario id "*"
/// evaluates against the whole gold corpus.
struct ScenarioPrediction {
  std::string scenario_id;
  SlotSchema schema;
  std::vector<StateLogEntry> states;
};

struct EvaluationOptions {
  StateMode mode = StateMode::kState;
  double threshold = kMatchThreshold;
  ContextPolicy policy = ContextPolicy::kAligned;
};

/// Scenario results for one scenario, kept for mapping agreement checks.
struct ScenarioEvaluation {
  std::string scenario_id;
  SlotMapping mapping;
  MetricValues metrics;
};

/// Macro-averages the six metrics over gold scenarios. Gold scenarios
/// without a prediction score zero. Throws Error(kUnknownScenario) for a
/// predicted scenario absent from gold.
MetricReport evaluate_run(std::span<const ScenarioPrediction> predictions,
                          const CorpusFile& gold,
                          const EvaluationOptions& options = {},
                          std::vector<ScenarioEvaluation>* details = nullptr);

/// Element-wise mean, per scenario as well.
MetricReport mean_reports(std::span<const MetricReport> reports);

Json metric_report_to_json(const MetricReport& report);
MetricReport metric_report_from_json(const Json& j);
std::string render_metric_table(const MetricReport& report);

// ---------------------------------------------------------------------------
// Human mapping validation

struct HumanDecision {
  std::optional<std::string> scenario_id;
  SlotKey predicted;
  std::optional<SlotKey> gold;
};

struct HumanMapping {
  std::vector<HumanDecision> decisions;

  /// Decision for a predicted key, preferring a scenario-specific entry.
  const HumanDecision* find(const std::string& scenario_id,
                            const SlotKey& predicted) const;
};

HumanMapping load_human_mapping(const std::filesystem::path& path);
HumanMapping human_mapping_from_json(const Json& j);

struct Agreement {
  double fraction = 1.0;
  std::size_t agreed = 0;
  std::size_t total = 0;
  bool degenerate = false;
};

/// Fraction of predicted keys whose automatic decision equals the human
/// one. Throws Error(kIncompleteMapping) when the human file lacks a key.
Agreement mapping_agreement(const SlotMapping& automatic,
                            const HumanMapping& human,
                            const std::string& scenario_id = "*");
Agreement mapping_agreement(std::span<const ScenarioEvaluation> automatic,
                            const HumanMapping& human);

}  // namespace slotweaver
