// Copyright 2026 The Slotweaver Authors
// SPDX-License-Identifier: Apache-2.0

// Run configuration: one JSON file, then SLOTWEAVER_<SECTION>_<KEY>
// environment overrides, then command-line flags (applied by the caller).

#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <memory>
#include <optional>
#include <string>

#include "slotweaver/backend.hpp"
#include "slotweaver/induct.hpp"
#include "slotweaver/refine.hpp"
#include "slotweaver/seqio.hpp"
#include "slotweaver/sim.hpp"

namespace slotweaver {

struct BackendSection {
  std::string kind = "scripted";  // scripted | http
  std::string endpoint;
  std::string model;
  std::string api_key;  // empty: SLOTWEAVER_API_KEY
  double requests_per_minute = 0.0;
  double temperature = 0.0;
  int max_retries = 3;
  int backoff_ms = 500;
  int timeout_s = 120;
  std::string script;
  std::string script_mode = "keyed";
  std::string audit_log;
};

struct InductionSection {
  std::string mode = "state";
  std::string refiner = "none";
  std::int64_t window = 10;
  std::int64_t tau = 1;
  std::int64_t cap = 100;
  std::int64_t context_budget = 8000;
  std::int64_t hard_cap = 300;
  int max_output = 1024;
  bool two_pass = false;
  bool per_scenario = true;
  std::int64_t replicates = 1;
};

struct SimulationSection {
  std::int64_t scenarios = 2;
  std::int64_t dialogues_per_scenario = 2;
  std::int64_t knowledge_size = 8;
  std::int64_t red_herrings = 3;
  double p_clear = 0.3;
  double p_remove_ideal = 0.5;
  std::int64_t max_turns = 40;
  double temperature = 0.7;
  int max_output = 768;
  double max_loss_fraction = 0.5;
  std::string prompts_dir;
};

struct RunConfig {
  BackendSection backend;
  InductionSection induction;
  SimulationSection simulation;
  std::uint64_t seed = 0;
  std::string prompt_pack;  // optional seqio prompt pack JSON

  FilterConfig filter() const;
  InductionSettings induction_settings() const;
  SimSettings sim_settings() const;
};

using EnvLookup = std::function<std::optional<std::string>(const std::string&)>;

/// The process environment.
std::optional<std::string> process_env(const std::string& name);

Json run_config_to_json(const RunConfig& config);
/// Unknown sections or keys and ill-typed values throw Error(kConfig).
RunConfig run_config_from_json(const Json& j);
/// Defaults, overlaid by the file (if any), overlaid by the environment.
RunConfig load_run_config(const std::optional<std::filesystem::path>& path,
                          const EnvLookup& env = process_env);

/// Owns a configured backend, optionally wrapped in an audit log.
class BackendHandle {
 public:
  TextGenerator& get();

  std::unique_ptr<TextGenerator> inner;
  std::unique_ptr<AuditLog> audit;
  std::unique_ptr<AuditedBackend> audited;
};

/// Throws Error(kAuth) for an http backend without a credential and
/// Error(kConfig) for an unknown kind or a scripted backend without script.
BackendHandle make_backend(const RunConfig& config,
                           const EnvLookup& env = process_env);

}  // namespace slotweaver
