// Copyright 2026 The Slotweaver Authors
// SPDX-License-Identifier: Apache-2.0

#include "slotweaver/cli.hpp"

#include <filesystem>
#include <iostream>
#include <memory>
#include <optional>
#include <sstream>

#include <CLI11.hpp>
#include <fmt/format.h>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include "slotweaver/config.hpp"
#include "slotweaver/error.hpp"
#include "slotweaver/evalx.hpp"
#include "slotweaver/induct.hpp"
#include "slotweaver/refine.hpp"
#include "slotweaver/seqio.hpp"
#include "slotweaver/sim.hpp"

namespace slotweaver {

namespace fs = std::filesystem;

namespace {

struct CommonFlags {
  std::string config;
  std::optional<std::uint64_t> seed;
  bool verbose = false;
};

RunConfig load_config(const CommonFlags& flags) {
  std::optional<fs::path> path;
  if (!flags.config.empty()) path = flags.config;
  RunConfig config = load_run_config(path);
  if (flags.seed) config.seed = *flags.seed;
  return config;
}

std::string dump(const Json& j) { return j.dump(2) + "\n"; }

std::string states_to_jsonl(std::span<const StateLogEntry> log) {
  std::string out;
  for (const StateLogEntry& e : log) out += state_log_entry_to_json(e).dump() + "\n";
  return out;
}

std::vector<StateLogEntry> load_state_log(const fs::path& path) {
  std::vector<StateLogEntry> log;
  std::istringstream in(read_text_file(path));
  std::string line;
  std::size_t n = 0;
  while (std::getline(in, line)) {
    ++n;
    if (trim(line).empty()) continue;
    try {
      log.push_back(state_log_entry_from_json(
          Json::parse(line), fmt::format("{}:{}", path.string(), n)));
    } catch (const Json::exception& e) {
      throw Error(ErrorCode::kCorpusFormat,
                  fmt::format("{}:{}: {}", path.string(), n, e.what()));
    }
  }
  return log;
}

// ---------------------------------------------------------------------------
// simulate

struct SimulateFlags {
  std::string out;
  std::optional<std::int64_t> scenarios;
  std::optional<std::int64_t> dialogues;
};

int cmd_simulate(const CommonFlags& common, const SimulateFlags& flags,
                 std::ostream& out) {
  RunConfig config = load_config(common);
  if (flags.scenarios) config.simulation.scenarios = *flags.scenarios;
  if (flags.dialogues) config.simulation.dialogues_per_scenario = *flags.dialogues;
  if (config.simulation.scenarios < 1 || config.simulation.dialogues_per_scenario < 0) {
    throw Error(ErrorCode::kConfig, "scenario and dialogue counts must be positive");
  }
  SimSettings settings = config.sim_settings();
  std::optional<SimPromptPack> pack;
  if (!config.simulation.prompts_dir.empty()) {
    pack = SimPromptPack::load_dir(config.simulation.prompts_dir);
    settings.prompts = &*pack;
  }
  BackendHandle backend = make_backend(config);

  const auto scenarios = generate_scenarios(
      static_cast<std::size_t>(config.simulation.scenarios), backend.get(), settings);
  SimulatedCorpus sim = simulate_corpus(
      scenarios, static_cast<std::size_t>(config.simulation.dialogues_per_scenario),
      backend.get(), config.seed, settings);

  const fs::path dir = flags.out;
  save_corpus(sim.corpus, dir / "corpus.json");
  Json scenario_json = Json::array();
  for (const ScenarioSpec& s : scenarios) {
    scenario_json.push_back({{"id", s.id},
                             {"user_role", s.user_role},
                             {"agent_role", s.agent_role},
                             {"tasks", s.tasks},
                             {"description", s.description}});
  }
  Json report = sim_report_to_json(sim.report);
  report["seed"] = config.seed;
  report["scenarios"] = std::move(scenario_json);
  write_text_file(dir / "sim_report.json", dump(report));

  const SimReport& r = sim.report;
  const double loss =
      r.dialogues_requested == 0
          ? 0.0
          : static_cast<double>(r.lost) / static_cast<double>(r.dialogues_requested);
  out << fmt::format("simulated {} of {} dialogues ({} lost) -> {}\n", r.produced,
                     r.dialogues_requested, r.lost, (dir / "corpus.json").string());
  if (r.dialogues_requested > 0 && loss >= config.simulation.max_loss_fraction) {
    spdlog::error("loss fraction {:.3f} reached the limit {:.3f}", loss,
                  config.simulation.max_loss_fraction);
    return 1;
  }
  return 0;
}

// ---------------------------------------------------------------------------
// make-train-data

struct TrainFlags {
  std::string corpus;
  std::string out;
  std::string mode = "state";
  bool revision = false;
  std::string noisy_log;
  std::int64_t context_budget = 0;
};

int cmd_make_train_data(const CommonFlags& common, const TrainFlags& flags,
                        std::ostream& out) {
  RunConfig config = load_config(common);
  const CorpusFile corpus = load_corpus(flags.corpus);
  RenderOptions render;
  render.context_char_budget = static_cast<std::size_t>(flags.context_budget);
  std::optional<PromptPack> pack;
  if (!config.prompt_pack.empty()) {
    pack = PromptPack::from_json(Json::parse(read_text_file(config.prompt_pack)));
    render.pack = &*pack;
  }

  std::vector<TrainingPair> pairs;
  if (flags.revision) {
    if (flags.noisy_log.empty()) {
      throw Error(ErrorCode::kConfig, "--revision needs --noisy-log");
    }
    const auto log = load_state_log(flags.noisy_log);
    pairs = build_revision_sequences(corpus, log, config.seed, render);
  } else {
    pairs = build_training_sequences(corpus, parse_state_mode(flags.mode), render);
  }
  const std::string jsonl = training_pairs_to_jsonl(pairs);
  if (flags.out.empty() || flags.out == "-") {
    out << jsonl;
  } else {
    write_text_file(flags.out, jsonl);
    spdlog::info("wrote {} training pairs to {}", pairs.size(), flags.out);
  }
  return 0;
}

// ---------------------------------------------------------------------------
// induce

struct InduceFlags {
  std::string corpus;
  std::string out;
  bool two_pass = false;
  bool pooled = false;
  std::optional<std::int64_t> replicates;
  std::optional<std::string> refiner;
  std::optional<std::int64_t> window;
  std::optional<std::int64_t> tau;
  std::optional<std::int64_t> cap;
  std::optional<std::string> mode;
  std::optional<std::uint64_t> shuffle_seed;
};

struct ScenarioGroup {
  std::string id;
  std::vector<const Dialogue*> dialogues;
};

std::vector<ScenarioGroup> group_by_scenario(const CorpusFile& corpus, bool pooled) {
  std::vector<ScenarioGroup> groups;
  for (const Dialogue& d : corpus.dialogues) {
    const std::string id = pooled ? std::string("*") : d.scenario_id;
    auto it = std::find_if(groups.begin(), groups.end(),
                           [&](const ScenarioGroup& g) { return g.id == id; });
    if (it == groups.end()) {
      groups.push_back({id, {}});
      it = groups.end() - 1;
    }
    it->dialogues.push_back(&d);
  }
  return groups;
}

struct RunArtifacts {
  Json report;
  Json schemas;
  std::string states;
};

RunArtifacts induce_once(const RunConfig& config, const CorpusFile& corpus,
                         std::optional<std::uint64_t> shuffle_seed,
                         TextGenerator& backend, const PromptPack* pack,
                         bool pooled) {
  InductionSettings settings = config.induction_settings();
  settings.shuffle_seed = shuffle_seed;
  settings.pack = pack;
  const FilterConfig filter = config.filter();
  RevisionSettings revision;
  revision.render.context_char_budget = settings.context_char_budget;
  revision.render.pack = pack;
  std::unique_ptr<Refiner> refiner =
      make_refiner(config.induction.refiner, filter, &backend, revision);

  RunArtifacts art;
  Json runs = Json::array();
  Json schemas = Json::array();
  std::size_t parse_failures = 0;
  std::size_t turns = 0;
  std::vector<StateLogEntry> all_states;

  for (const ScenarioGroup& group : group_by_scenario(corpus, pooled)) {
    InductionOptions options;
    options.settings = settings;
    options.refiner = refiner.get();
    Json run;
    SlotSchema final_schema;
    std::vector<StateLogEntry> states;
    if (config.induction.two_pass) {
      TwoPassResult two = run_two_pass(group.dialogues, backend, options);
      final_schema = two.final_schema;
      states = two.pass2.states;
      run = induction_result_to_json(two.pass2);
      run["pass1"] = {{"parse_failures", two.pass1.parse_failures},
                      {"turns_processed", two.pass1.turns_processed},
                      {"errors", two.pass1.errors}};
      run["pass2_schema_version"] = {
          {"initial", two.pass2.initial_version},
          {"final", two.pass2.final_schema.version()}};
      parse_failures += two.pass1.parse_failures + two.pass2.parse_failures;
      turns += two.pass1.turns_processed + two.pass2.turns_processed;
    } else {
      InductionResult result = run_induction(group.dialogues, backend, options);
      final_schema = result.final_schema;
      states = result.states;
      run = induction_result_to_json(result);
      parse_failures += result.parse_failures;
      turns += result.turns_processed;
    }
    Json entry{{"scenario_id", group.id}};
    entry.update(run);
    runs.push_back(std::move(entry));
    schemas.push_back({{"scenario_id", group.id}, {"schema", schema_to_json(final_schema)}});
    all_states.insert(all_states.end(), states.begin(), states.end());
  }

  Json refiner_json = refiner ? Json{{"name", refiner->name()}, {"params", refiner->params()}}
                              : Json{{"name", "none"}, {"params", Json::object()}};
  art.report = Json{{"seed", config.seed},
                    {"shuffle_seed", shuffle_seed ? Json(*shuffle_seed) : Json(nullptr)},
                    {"mode", config.induction.mode},
                    {"two_pass", config.induction.two_pass},
                    {"refiner", std::move(refiner_json)},
                    {"parse_failures", parse_failures},
                    {"turns_processed", turns},
                    {"runs", std::move(runs)}};
  art.schemas = Json{{"scenarios", std::move(schemas)}};
  art.states = states_to_jsonl(all_states);
  return art;
}

void write_artifacts(const fs::path& dir, const RunArtifacts& art) {
  write_text_file(dir / "schema.json", dump(art.schemas));
  write_text_file(dir / "states.jsonl", art.states);
  write_text_file(dir / "report.json", dump(art.report));
}

int cmd_induce(const CommonFlags& common, const InduceFlags& flags, std::ostream& out) {
  RunConfig config = load_config(common);
  if (flags.two_pass) config.induction.two_pass = true;
  if (flags.pooled) config.induction.per_scenario = false;
  if (flags.replicates) config.induction.replicates = *flags.replicates;
  if (flags.refiner) config.induction.refiner = *flags.refiner;
  if (flags.window) config.induction.window = *flags.window;
  if (flags.tau) config.induction.tau = *flags.tau;
  if (flags.cap) config.induction.cap = *flags.cap;
  if (flags.mode) config.induction.mode = *flags.mode;
  if (config.induction.replicates < 1) {
    throw Error(ErrorCode::kConfig, "--replicates must be >= 1");
  }
  (void)config.filter();  // validate before touching the backend
  (void)config.induction_settings();

  std::optional<PromptPack> pack;
  if (!config.prompt_pack.empty()) {
    pack = PromptPack::from_json(Json::parse(read_text_file(config.prompt_pack)));
  }
  const CorpusFile corpus = load_corpus(flags.corpus);
  BackendHandle backend = make_backend(config);
  const fs::path dir = flags.out;
  const bool pooled = !config.induction.per_scenario;

  if (config.induction.replicates == 1) {
    RunArtifacts art = induce_once(config, corpus, flags.shuffle_seed, backend.get(),
                                   pack ? &*pack : nullptr, pooled);
    write_artifacts(dir, art);
    out << fmt::format("induced {} scenario schema(s) -> {}\n",
                       art.schemas["scenarios"].size(), dir.string());
    return 0;
  }

  Json index{{"replicates", config.induction.replicates}, {"runs", Json::array()}};
  for (std::int64_t i = 0; i < config.induction.replicates; ++i) {
    RunConfig rep = config;
    rep.seed = config.seed + static_cast<std::uint64_t>(i);
    const std::string name = fmt::format("rep-{}", i);
    RunArtifacts art = induce_once(rep, corpus, rep.seed, backend.get(),
                                   pack ? &*pack : nullptr, pooled);
    write_artifacts(dir / name, art);
    index["runs"].push_back({{"dir", name}, {"seed", rep.seed}});
  }
  write_text_file(dir / "index.json", dump(index));
  out << fmt::format("induced {} replicates -> {}\n", config.induction.replicates,
                     dir.string());
  return 0;
}

// ---------------------------------------------------------------------------
// evaluate / report

struct EvaluateFlags {
  std::string predictions;
  std::string gold;
  std::string out;
  std::optional<std::string> mode;
  std::string human_mapping;
  bool value_bag = false;
};

std::vector<ScenarioPrediction> load_predictions(const fs::path& dir) {
  const Json schemas = Json::parse(read_text_file(dir / "schema.json"));
  const auto states = load_state_log(dir / "states.jsonl");
  std::vector<ScenarioPrediction> preds;
  try {
    for (const Json& s : schemas.at("scenarios")) {
      ScenarioPrediction p;
      p.scenario_id = s.at("scenario_id").get<std::string>();
      p.schema = schema_from_json(s.at("schema"));
      for (const StateLogEntry& e : states) {
        if (p.scenario_id == "*" || e.scenario_id == p.scenario_id) p.states.push_back(e);
      }
      preds.push_back(std::move(p));
    }
  } catch (const Json::exception& e) {
    throw Error(ErrorCode::kCorpusFormat,
                (dir / "schema.json").string() + ": " + e.what());
  }
  return preds;
}

std::string mode_of(const fs::path& dir, const std::optional<std::string>& flag) {
  if (flag) return *flag;
  const fs::path report = dir / "report.json";
  if (fs::exists(report)) {
    const Json j = Json::parse(read_text_file(report));
    if (j.contains("mode") && j["mode"].is_string()) return j["mode"].get<std::string>();
  }
  return "state";
}

int cmd_evaluate(const CommonFlags&, const EvaluateFlags& flags, std::ostream& out) {
  const CorpusFile gold = load_corpus(flags.gold);
  const fs::path root = flags.predictions;
  std::vector<fs::path> dirs;
  if (fs::exists(root / "index.json")) {
    const Json index = Json::parse(read_text_file(root / "index.json"));
    for (const Json& r : index.at("runs")) dirs.push_back(root / r.at("dir").get<std::string>());
  } else {
    dirs.push_back(root);
  }
  std::optional<HumanMapping> human;
  if (!flags.human_mapping.empty()) human = load_human_mapping(flags.human_mapping);

  std::vector<MetricReport> reports;
  std::vector<Agreement> agreements;
  for (const fs::path& dir : dirs) {
    EvaluationOptions options;
    options.mode = parse_state_mode(mode_of(dir, flags.mode));
    if (flags.value_bag) options.policy = ContextPolicy::kValueBag;
    std::vector<ScenarioEvaluation> details;
    reports.push_back(evaluate_run(load_predictions(dir), gold, options, &details));
    if (human) agreements.push_back(mapping_agreement(details, *human));
  }
  const MetricReport report =
      reports.size() == 1 ? reports.front() : mean_reports(reports);
  Json j = metric_report_to_json(report);
  if (human) {
    Json a = Json::array();
    for (const Agreement& g : agreements) {
      a.push_back({{"fraction", g.fraction}, {"agreed", g.agreed}, {"total", g.total}});
    }
    j["mapping_agreement"] = std::move(a);
  }
  if (!flags.out.empty()) write_text_file(flags.out, dump(j));
  out << render_metric_table(report);
  for (const Agreement& g : agreements) {
    out << fmt::format("mapping agreement: {:.4f} ({}/{})\n", g.fraction, g.agreed,
                       g.total);
  }
  return 0;
}

int cmd_report(const std::vector<std::string>& files, const std::string& out_path,
               std::ostream& out) {
  if (files.empty()) throw Error(ErrorCode::kConfig, "report needs at least one file");
  std::vector<MetricReport> reports;
  for (const std::string& f : files) {
    reports.push_back(metric_report_from_json(Json::parse(read_text_file(f))));
  }
  const MetricReport report =
      reports.size() == 1 ? reports.front() : mean_reports(reports);
  if (!out_path.empty()) write_text_file(out_path, dump(metric_report_to_json(report)));
  out << render_metric_table(report);
  return 0;
}

int exit_code_for(ErrorCode code) {
  return (code == ErrorCode::kConfig || code == ErrorCode::kAuth) ? 2 : 1;
}

void configure_logging(bool verbose) {
  static std::shared_ptr<spdlog::logger> logger = [] {
    auto l = spdlog::stderr_color_mt("slotweaver");
    spdlog::set_default_logger(l);
    return l;
  }();
  logger->set_level(verbose ? spdlog::level::debug : spdlog::level::warn);
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out,
            std::ostream& err) {
  CLI::App app{"Slot schema induction, dialogue simulation and evaluation"};
  app.require_subcommand(1);
  CommonFlags common;
  auto add_common = [&](CLI::App* sub) {
    sub->add_option("-c,--config", common.config, "JSON config file");
    sub->add_option("--seed", common.seed, "Run seed");
    sub->add_flag("-v,--verbose", common.verbose, "Debug logging");
  };

  SimulateFlags sim;
  auto* simulate = app.add_subcommand("simulate", "Simulate an annotated corpus");
  add_common(simulate);
  simulate->add_option("-o,--out", sim.out, "Output directory")->required();
  simulate->add_option("--scenarios", sim.scenarios, "Number of scenarios");
  simulate->add_option("--dialogues", sim.dialogues, "Dialogues per scenario");

  TrainFlags train;
  auto* train_cmd = app.add_subcommand("make-train-data", "Emit training pairs");
  add_common(train_cmd);
  train_cmd->add_option("--corpus", train.corpus, "Gold corpus")->required();
  train_cmd->add_option("-o,--out", train.out, "Output JSONL (default stdout)");
  train_cmd->add_option("--mode", train.mode, "update | state | final");
  train_cmd->add_flag("--revision", train.revision, "Schema revision pairs");
  train_cmd->add_option("--noisy-log", train.noisy_log, "Noisy state log (JSONL)");
  train_cmd->add_option("--context-budget", train.context_budget,
                        "Dialogue context characters (0 = unlimited)");

  InduceFlags ind;
  auto* induce = app.add_subcommand("induce", "Induce slot schemas from a corpus");
  add_common(induce);
  induce->add_option("--corpus", ind.corpus, "Input corpus")->required();
  induce->add_option("-o,--out", ind.out, "Output directory")->required();
  induce->add_flag("--two-pass", ind.two_pass, "Re-track states with the frozen schema");
  induce->add_flag("--pooled", ind.pooled, "One run over all scenarios");
  induce->add_option("--replicates", ind.replicates, "Shuffled replicate runs");
  induce->add_option("--refiner", ind.refiner, "none | slot-conf | fifo | priority | revision");
  induce->add_option("--window", ind.window, "Slot confidence window w (dialogues)");
  induce->add_option("--tau", ind.tau, "Slot confidence threshold tau (updates)");
  induce->add_option("--cap", ind.cap, "FIFO / priority schema cap");
  induce->add_option("--mode", ind.mode, "update | state | final");
  induce->add_option("--shuffle-seed", ind.shuffle_seed, "Shuffle the dialogue stream");

  EvaluateFlags ev;
  auto* evaluate = app.add_subcommand("evaluate", "Score predictions against gold");
  add_common(evaluate);
  evaluate->add_option("--predictions", ev.predictions, "Induce output directory")
      ->required();
  evaluate->add_option("--gold", ev.gold, "Gold corpus")->required();
  evaluate->add_option("-o,--out", ev.out, "Metric report JSON");
  evaluate->add_option("--mode", ev.mode, "State mode (default: from report.json)");
  evaluate->add_option("--human-mapping", ev.human_mapping, "Human mapping JSON");
  evaluate->add_flag("--value-bag", ev.value_bag, "Ignore fill contexts");

  std::vector<std::string> report_files;
  std::string report_out;
  auto* report = app.add_subcommand("report", "Render (and average) metric reports");
  add_common(report);
  report->add_option("files", report_files, "Metric report JSON files")->required();
  report->add_option("-o,--out", report_out, "Write the (mean) report JSON");

  std::vector<std::string> argv_storage;
  argv_storage.reserve(args.size() + 1);
  argv_storage.push_back("slotweaver");
  argv_storage.insert(argv_storage.end(), args.begin(), args.end());
  std::vector<char*> argv;
  for (std::string& a : argv_storage) argv.push_back(a.data());

  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return 0;
  } catch (const CLI::ParseError& e) {
    err << e.what() << "\n";
    return 2;
  }
  configure_logging(common.verbose);

  try {
    if (simulate->parsed()) return cmd_simulate(common, sim, out);
    if (train_cmd->parsed()) return cmd_make_train_data(common, train, out);
    if (induce->parsed()) return cmd_induce(common, ind, out);
    if (evaluate->parsed()) return cmd_evaluate(common, ev, out);
    if (report->parsed()) return cmd_report(report_files, report_out, out);
  } catch (const Error& e) {
    err << e.what() << "\n";
    return exit_code_for(e.code());
  } catch (const Json::exception& e) {
    err << "invalid JSON: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  }
  return 2;
}

int run_cli(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return run_cli(args, std::cout, std::cerr);
}

}  // namespace slotweaver
