// Copyright 2026 The Slotweaver Authors
// SPDX-License-Identifier: Apache-2.0

#include "slotweaver/evalx.hpp"

#include <algorithm>
#include <set>
#include <unordered_map>
#include <unordered_set>

#include <fmt/format.h>

#include "slotweaver/error.hpp"

namespace slotweaver {

namespace {

std::string context_value_key(const Fill& f) {
  return f.dialogue_id + '\x1f' + std::to_string(f.turn) + '\x1f' +
         casefold(f.value);
}

}  // namespace

bool ValuedSlot::add(Fill fill) {
  const std::string k = context_value_key(fill);
  for (const Fill& f : fills_) {
    if (context_value_key(f) == k) return false;
  }
  fills_.push_back(std::move(fill));
  return true;
}

std::size_t overlap(const ValuedSlot& p, const ValuedSlot& g,
                    ContextPolicy policy) {
  std::unordered_set<std::string> reference;
  for (const Fill& f : g.fills()) {
    reference.insert(policy == ContextPolicy::kAligned ? context_value_key(f)
                                                       : casefold(f.value));
  }
  std::size_t n = 0;
  for (const Fill& f : p.fills()) {
    const std::string k = policy == ContextPolicy::kAligned
                              ? context_value_key(f)
                              : casefold(f.value);
    if (reference.contains(k)) ++n;
  }
  return n;
}

double similarity_exact(const ValuedSlot& p, const ValuedSlot& g,
                        ContextPolicy policy) {
  if (p.empty()) {
    throw Error(ErrorCode::kEmptyPredictedSlot,
                "predicted slot " + p.key().str() + " has no fills");
  }
  return static_cast<double>(overlap(p, g, policy)) /
         static_cast<double>(p.size());
}

std::optional<SlotKey> SlotMapping::gold_for(const SlotKey& predicted) const {
  for (const MappingPair& pair : pairs) {
    if (pair.predicted == predicted) return pair.gold;
  }
  return std::nullopt;
}

bool SlotMapping::covers(const SlotKey& predicted) const {
  if (gold_for(predicted)) return true;
  return std::find(unmatched_predicted.begin(), unmatched_predicted.end(),
                   predicted) != unmatched_predicted.end();
}

SlotMapping match_slots(std::span<const ValuedSlot> predicted,
                        std::span<const ValuedSlot> gold, double threshold,
                        const SimilarityFn& similarity, ContextPolicy policy) {
  {
    std::set<SlotKey> seen;
    for (const ValuedSlot& g : gold) {
      if (!seen.insert(g.key()).second) {
        throw Error(ErrorCode::kInvalidGold,
                    "duplicate gold slot " + g.key().str());
      }
    }
  }
  SlotMapping mapping;
  mapping.similarity_threshold = threshold;
  for (const ValuedSlot& p : predicted) {
    if (p.empty() || gold.empty()) {
      mapping.unmatched_predicted.push_back(p.key());
      continue;
    }
    const ValuedSlot* best = nullptr;
    double best_sim = 0.0;
    std::size_t best_overlap = 0;
    for (const ValuedSlot& g : gold) {
      const double sim =
          similarity ? similarity(p, g) : similarity_exact(p, g, policy);
      const std::size_t ov = overlap(p, g, policy);
      const bool better =
          best == nullptr || sim > best_sim ||
          (sim == best_sim &&
           (ov > best_overlap || (ov == best_overlap && g.key() < best->key())));
      if (better) {
        best = &g;
        best_sim = sim;
        best_overlap = ov;
      }
    }
    if (best_sim >= threshold) {
      mapping.pairs.push_back({p.key(), best->key(), best_sim, best_overlap,
                               p.size(), best->size()});
    } else {
      mapping.unmatched_predicted.push_back(p.key());
    }
  }
  return mapping;
}

double f1_score(double precision, double recall) {
  const double sum = precision + recall;
  return sum == 0.0 ? 0.0 : 2.0 * precision * recall / sum;
}

Prf slot_prf(const SlotMapping& mapping, std::size_t predicted_count,
             std::size_t gold_count) {
  if (gold_count == 0) {
    throw Error(ErrorCode::kInvalidGold, "gold slot set is empty");
  }
  std::set<SlotKey> mapped_gold;
  for (const MappingPair& pair : mapping.pairs) mapped_gold.insert(pair.gold);
  Prf out;
  const auto hits = static_cast<double>(mapped_gold.size());
  if (predicted_count == 0) {
    out.degenerate = true;
  } else {
    out.precision = hits / static_cast<double>(predicted_count);
  }
  out.recall = hits / static_cast<double>(gold_count);
  out.f1 = f1_score(out.precision, out.recall);
  return out;
}

Prf slot_prf(const SlotMapping& mapping, std::span<const ValuedSlot> predicted,
             std::span<const ValuedSlot> gold) {
  return slot_prf(mapping, predicted.size(), gold.size());
}

Prf value_prf(const SlotMapping& mapping) {
  Prf out;
  if (mapping.pairs.empty()) {
    out.degenerate = true;
    return out;
  }
  std::size_t hits = 0, predicted = 0, gold = 0;
  for (const MappingPair& pair : mapping.pairs) {
    hits += pair.overlap;
    predicted += pair.predicted_size;
    gold += pair.gold_size;
  }
  if (predicted > 0) {
    out.precision = static_cast<double>(hits) / static_cast<double>(predicted);
  }
  if (gold > 0) {
    out.recall = static_cast<double>(hits) / static_cast<double>(gold);
  }
  out.f1 = f1_score(out.precision, out.recall);
  return out;
}

std::vector<ValuedSlot> collect_valued_slots(
    std::span<const StateLogEntry> log, const SlotSchema& schema,
    StateMode mode) {
  std::vector<ValuedSlot> slots;
  std::unordered_map<SlotKey, std::size_t, SlotKeyHash> where;
  for (const SlotDef& def : schema.slots()) {
    where.emplace(def.key, slots.size());
    slots.emplace_back(def.key);
  }
  std::unordered_map<std::string, std::size_t> last_entry;
  if (mode == StateMode::kFinal) {
    for (std::size_t i = 0; i < log.size(); ++i) {
      last_entry[log[i].dialogue_id] = i;
    }
  }
  for (std::size_t i = 0; i < log.size(); ++i) {
    const StateLogEntry& e = log[i];
    if (mode == StateMode::kFinal && last_entry[e.dialogue_id] != i) continue;
    for (const SlotValue& t : e.state.triples()) {
      auto it = where.find(t.key);
      if (it == where.end()) continue;
      slots[it->second].add({e.dialogue_id, e.position.turn, t.value});
    }
  }
  return slots;
}

std::vector<StateLogEntry> gold_state_log(const CorpusFile& corpus,
                                          StateMode mode) {
  std::vector<StateLogEntry> log;
  for (std::size_t k = 0; k < corpus.dialogues.size(); ++k) {
    const Dialogue& d = corpus.dialogues[k];
    auto entry = [&](std::size_t turn, DialogueState state) {
      return StateLogEntry{
          {static_cast<std::int64_t>(k), static_cast<std::int64_t>(turn)},
          d.id,
          d.scenario_id,
          std::move(state)};
    };
    if (mode == StateMode::kFinal) {
      const auto last = d.last_user_turn();
      if (last && d.turns[*last].gold_state) {
        log.push_back(entry(*last, *d.turns[*last].gold_state));
      }
      continue;
    }
    DialogueState previous;
    for (std::size_t t = 0; t < d.turns.size(); ++t) {
      const Turn& turn = d.turns[t];
      if (turn.speaker != Speaker::kUser || !turn.gold_state) continue;
      log.push_back(entry(t, mode == StateMode::kUpdate
                                 ? state_delta(previous, *turn.gold_state)
                                 : *turn.gold_state));
      previous = *turn.gold_state;
    }
  }
  return log;
}

// ---------------------------------------------------------------------------

namespace {

MetricValues evaluate_scenario(const ScenarioPrediction* prediction,
                               const CorpusFile& gold_subset,
                               const EvaluationOptions& options,
                               SlotMapping* mapping_out) {
  const auto gold_log = gold_state_log(gold_subset, options.mode);
  std::vector<ValuedSlot> gold =
      collect_valued_slots(gold_log, *gold_subset.gold_schema, options.mode);
  std::erase_if(gold, [](const ValuedSlot& g) { return g.empty(); });
  if (gold.empty()) {
    throw Error(ErrorCode::kInvalidGold, "no gold slot is ever filled");
  }
  MetricValues out;
  if (prediction == nullptr) {
    out.slot.degenerate = out.value.degenerate = true;
    return out;
  }
  const auto predicted =
      collect_valued_slots(prediction->states, prediction->schema, options.mode);
  SlotMapping mapping =
      match_slots(predicted, gold, options.threshold, {}, options.policy);
  out.slot = slot_prf(mapping, predicted, gold);
  out.value = value_prf(mapping);
  if (mapping_out) *mapping_out = std::move(mapping);
  return out;
}

void set_top_level(MetricReport& report, double sp, double sr, double sf,
                   double vp, double vr, double vf) {
  report.slot_p = sp;
  report.slot_r = sr;
  report.slot_f1 = sf;
  report.value_p = vp;
  report.value_r = vr;
  report.value_f1 = vf;
}

}  // namespace

MetricReport evaluate_run(std::span<const ScenarioPrediction> predictions,
                          const CorpusFile& gold,
                          const EvaluationOptions& options,
                          std::vector<ScenarioEvaluation>* details) {
  if (!gold.gold_schema) {
    throw Error(ErrorCode::kMissingGold, "gold corpus has no gold schema");
  }
  std::vector<std::string> scenarios;
  for (const Dialogue& d : gold.dialogues) {
    if (std::find(scenarios.begin(), scenarios.end(), d.scenario_id) ==
        scenarios.end()) {
      scenarios.push_back(d.scenario_id);
    }
  }
  std::map<std::string, const ScenarioPrediction*> by_id;
  for (const ScenarioPrediction& p : predictions) {
    if (p.scenario_id != "*" &&
        std::find(scenarios.begin(), scenarios.end(), p.scenario_id) ==
            scenarios.end()) {
      throw Error(ErrorCode::kUnknownScenario,
                  "scenario '" + p.scenario_id + "' is not in the gold corpus");
    }
    by_id[p.scenario_id] = &p;
  }
  const bool pooled = by_id.contains("*");
  if (pooled) scenarios = {"*"};

  MetricReport report;
  double sums[6] = {0, 0, 0, 0, 0, 0};
  for (const std::string& sid : scenarios) {
    CorpusFile subset;
    subset.gold_schema = gold.gold_schema;
    for (const Dialogue& d : gold.dialogues) {
      if (pooled || d.scenario_id == sid) subset.dialogues.push_back(d);
    }
    auto it = by_id.find(sid);
    SlotMapping mapping;
    const MetricValues values = evaluate_scenario(
        it == by_id.end() ? nullptr : it->second, subset, options, &mapping);
    report.per_scenario[sid] = values;
    if (details) details->push_back({sid, std::move(mapping), values});
    sums[0] += values.slot.precision;
    sums[1] += values.slot.recall;
    sums[2] += values.slot.f1;
    sums[3] += values.value.precision;
    sums[4] += values.value.recall;
    sums[5] += values.value.f1;
  }
  const double n = scenarios.empty() ? 1.0 : static_cast<double>(scenarios.size());
  set_top_level(report, sums[0] / n, sums[1] / n, sums[2] / n, sums[3] / n,
                sums[4] / n, sums[5] / n);
  return report;
}

MetricReport mean_reports(std::span<const MetricReport> reports) {
  MetricReport out;
  if (reports.empty()) return out;
  const double n = static_cast<double>(reports.size());
  double sums[6] = {0, 0, 0, 0, 0, 0};
  std::map<std::string, std::pair<MetricValues, std::size_t>> scenario_sums;
  for (const MetricReport& r : reports) {
    sums[0] += r.slot_p;
    sums[1] += r.slot_r;
    sums[2] += r.slot_f1;
    sums[3] += r.value_p;
    sums[4] += r.value_r;
    sums[5] += r.value_f1;
    for (const auto& [sid, v] : r.per_scenario) {
      auto& [acc, count] = scenario_sums[sid];
      acc.slot.precision += v.slot.precision;
      acc.slot.recall += v.slot.recall;
      acc.slot.f1 += v.slot.f1;
      acc.value.precision += v.value.precision;
      acc.value.recall += v.value.recall;
      acc.value.f1 += v.value.f1;
      ++count;
    }
  }
  set_top_level(out, sums[0] / n, sums[1] / n, sums[2] / n, sums[3] / n,
                sums[4] / n, sums[5] / n);
  for (auto& [sid, entry] : scenario_sums) {
    auto& [acc, count] = entry;
    const double c = static_cast<double>(count);
    MetricValues v;
    v.slot = {acc.slot.precision / c, acc.slot.recall / c, acc.slot.f1 / c,
              false};
    v.value = {acc.value.precision / c, acc.value.recall / c,
               acc.value.f1 / c, false};
    out.per_scenario[sid] = v;
  }
  out.replicate_mean = true;
  out.replicates = reports.size();
  return out;
}

namespace {

Json values_json(double sp, double sr, double sf, double vp, double vr,
                 double vf) {
  return Json{{"slot_p", sp},  {"slot_r", sr},  {"slot_f1", sf},
              {"value_p", vp}, {"value_r", vr}, {"value_f1", vf}};
}

}  // namespace

Json metric_report_to_json(const MetricReport& report) {
  Json j = values_json(report.slot_p, report.slot_r, report.slot_f1,
                       report.value_p, report.value_r, report.value_f1);
  Json per = Json::object();
  for (const auto& [sid, v] : report.per_scenario) {
    per[sid] = values_json(v.slot.precision, v.slot.recall, v.slot.f1,
                           v.value.precision, v.value.recall, v.value.f1);
  }
  j["per_scenario"] = std::move(per);
  j["replicate_mean"] = report.replicate_mean;
  j["replicates"] = report.replicates;
  return j;
}

MetricReport metric_report_from_json(const Json& j) {
  MetricReport r;
  try {
    r.slot_p = j.at("slot_p").get<double>();
    r.slot_r = j.at("slot_r").get<double>();
    r.slot_f1 = j.at("slot_f1").get<double>();
    r.value_p = j.at("value_p").get<double>();
    r.value_r = j.at("value_r").get<double>();
    r.value_f1 = j.at("value_f1").get<double>();
    for (const auto& [sid, v] : j.at("per_scenario").items()) {
      MetricValues mv;
      mv.slot = {v.at("slot_p").get<double>(), v.at("slot_r").get<double>(),
                 v.at("slot_f1").get<double>(), false};
      mv.value = {v.at("value_p").get<double>(), v.at("value_r").get<double>(),
                  v.at("value_f1").get<double>(), false};
      r.per_scenario[sid] = mv;
    }
    r.replicate_mean = j.value("replicate_mean", false);
    r.replicates = j.value("replicates", std::size_t{1});
  } catch (const Json::exception& e) {
    throw Error(ErrorCode::kConfig, std::string("bad metric report: ") + e.what());
  }
  return r;
}

std::string render_metric_table(const MetricReport& report) {
  std::size_t width = 8;
  for (const auto& [sid, v] : report.per_scenario) {
    width = std::max(width, sid.size());
  }
  std::string out = fmt::format("{:<{}}  {:>7} {:>7} {:>7}  {:>7} {:>7} {:>7}\n",
                                "scenario", width, "slot_p", "slot_r",
                                "slot_f1", "value_p", "value_r", "value_f1");
  auto row = [&](const std::string& name, double sp, double sr, double sf,
                 double vp, double vr, double vf) {
    out += fmt::format(
        "{:<{}}  {:>7.4f} {:>7.4f} {:>7.4f}  {:>7.4f} {:>7.4f} {:>7.4f}\n",
        name, width, sp, sr, sf, vp, vr, vf);
  };
  for (const auto& [sid, v] : report.per_scenario) {
    row(sid, v.slot.precision, v.slot.recall, v.slot.f1, v.value.precision,
        v.value.recall, v.value.f1);
  }
  row(report.replicate_mean
          ? fmt::format("mean ({} replicates)", report.replicates)
          : std::string("mean"),
      report.slot_p, report.slot_r, report.slot_f1, report.value_p,
      report.value_r, report.value_f1);
  return out;
}

// ---------------------------------------------------------------------------

const HumanDecision* HumanMapping::find(const std::string& scenario_id,
                                        const SlotKey& predicted) const {
  const HumanDecision* fallback = nullptr;
  for (const HumanDecision& d : decisions) {
    if (d.predicted != predicted) continue;
    if (d.scenario_id && *d.scenario_id == scenario_id) return &d;
    if (!d.scenario_id && fallback == nullptr) fallback = &d;
  }
  return fallback;
}

HumanMapping human_mapping_from_json(const Json& j) {
  HumanMapping mapping;
  try {
    for (const Json& d : j.at("decisions")) {
      HumanDecision decision;
      const Json& p = d.at("predicted");
      decision.predicted = canonical_slot_key(p.at("domain").get<std::string>(),
                                              p.at("name").get<std::string>());
      if (d.contains("gold") && !d.at("gold").is_null()) {
        const Json& g = d.at("gold");
        decision.gold = canonical_slot_key(g.at("domain").get<std::string>(),
                                           g.at("name").get<std::string>());
      }
      if (d.contains("scenario_id") && !d.at("scenario_id").is_null()) {
        decision.scenario_id = d.at("scenario_id").get<std::string>();
      }
      mapping.decisions.push_back(std::move(decision));
    }
  } catch (const Json::exception& e) {
    throw Error(ErrorCode::kConfig, std::string("bad human mapping: ") + e.what());
  }
  return mapping;
}

HumanMapping load_human_mapping(const std::filesystem::path& path) {
  std::string text;
  try {
    text = read_text_file(path);
    return human_mapping_from_json(Json::parse(text));
  } catch (const Json::exception& e) {
    throw Error(ErrorCode::kConfig, path.string() + ": " + e.what());
  } catch (const std::runtime_error& e) {
    if (dynamic_cast<const Error*>(&e)) throw;
    throw Error(ErrorCode::kConfig, e.what());
  }
}

namespace {

void tally(const SlotMapping& automatic, const HumanMapping& human,
           const std::string& scenario_id, Agreement& out) {
  std::vector<SlotKey> keys;
  for (const MappingPair& p : automatic.pairs) keys.push_back(p.predicted);
  keys.insert(keys.end(), automatic.unmatched_predicted.begin(),
              automatic.unmatched_predicted.end());
  for (const SlotKey& key : keys) {
    const HumanDecision* decision = human.find(scenario_id, key);
    if (decision == nullptr) {
      throw Error(ErrorCode::kIncompleteMapping,
                  "human mapping has no decision for " + key.str());
    }
    ++out.total;
    if (automatic.gold_for(key) == decision->gold) ++out.agreed;
  }
}

Agreement finish(Agreement a) {
  if (a.total == 0) {
    a.fraction = 1.0;
    a.degenerate = true;
  } else {
    a.fraction = static_cast<double>(a.agreed) / static_cast<double>(a.total);
  }
  return a;
}

}  // namespace

Agreement mapping_agreement(const SlotMapping& automatic,
                            const HumanMapping& human,
                            const std::string& scenario_id) {
  Agreement a;
  tally(automatic, human, scenario_id, a);
  return finish(a);
}

Agreement mapping_agreement(std::span<const ScenarioEvaluation> automatic,
                            const HumanMapping& human) {
  Agreement a;
  for (const ScenarioEvaluation& e : automatic) {
    tally(e.mapping, human, e.scenario_id, a);
  }
  return finish(a);
}

}  // namespace slotweaver
