// Copyright 2026 The Slotweaver Authors
// SPDX-License-Identifier: Apache-2.0

#include "slotweaver/config.hpp"

#include <algorithm>
#include <cctype>
#include <cstdlib>

#include "slotweaver/error.hpp"

namespace slotweaver {

FilterConfig RunConfig::filter() const {
  FilterConfig f;
  f.window_w = induction.window;
  f.threshold_tau = induction.tau;
  if (induction.cap < 1) throw Error(ErrorCode::kConfig, "induction.cap must be >= 1");
  f.cap = static_cast<std::size_t>(induction.cap);
  f.validate();
  return f;
}

InductionSettings RunConfig::induction_settings() const {
  if (induction.context_budget < 0 || induction.hard_cap < 1) {
    throw Error(ErrorCode::kConfig,
                "induction.context_budget must be >= 0 and hard_cap >= 1");
  }
  InductionSettings s;
  s.mode = parse_state_mode(induction.mode);
  s.context_char_budget = static_cast<std::size_t>(induction.context_budget);
  s.hard_cap = static_cast<std::size_t>(induction.hard_cap);
  s.max_output = induction.max_output;
  s.temperature = backend.temperature;
  return s;
}

SimSettings RunConfig::sim_settings() const {
  const SimulationSection& sim = simulation;
  if (sim.knowledge_size < 1 || sim.red_herrings < 0 || sim.max_turns < 2 ||
      sim.p_clear < 0 || sim.p_clear > 1 || sim.p_remove_ideal < 0 ||
      sim.p_remove_ideal > 1) {
    throw Error(ErrorCode::kConfig, "simulation settings out of range");
  }
  SimSettings s;
  s.knowledge_size = static_cast<std::size_t>(sim.knowledge_size);
  s.red_herrings = static_cast<std::size_t>(sim.red_herrings);
  s.p_clear = sim.p_clear;
  s.p_remove_ideal = sim.p_remove_ideal;
  s.max_turns = static_cast<std::size_t>(sim.max_turns);
  s.temperature = sim.temperature;
  s.max_output = sim.max_output;
  return s;
}

std::optional<std::string> process_env(const std::string& name) {
  if (const char* v = std::getenv(name.c_str())) return std::string(v);
  return std::nullopt;
}

Json run_config_to_json(const RunConfig& c) {
  const BackendSection& b = c.backend;
  const InductionSection& i = c.induction;
  const SimulationSection& s = c.simulation;
  return Json{
      {"backend",
       {{"kind", b.kind},
        {"endpoint", b.endpoint},
        {"model", b.model},
        {"api_key", b.api_key},
        {"requests_per_minute", b.requests_per_minute},
        {"temperature", b.temperature},
        {"max_retries", b.max_retries},
        {"backoff_ms", b.backoff_ms},
        {"timeout_s", b.timeout_s},
        {"script", b.script},
        {"script_mode", b.script_mode},
        {"audit_log", b.audit_log}}},
      {"induction",
       {{"mode", i.mode},
        {"refiner", i.refiner},
        {"window", i.window},
        {"tau", i.tau},
        {"cap", i.cap},
        {"context_budget", i.context_budget},
        {"hard_cap", i.hard_cap},
        {"max_output", i.max_output},
        {"two_pass", i.two_pass},
        {"per_scenario", i.per_scenario},
        {"replicates", i.replicates}}},
      {"simulation",
       {{"scenarios", s.scenarios},
        {"dialogues_per_scenario", s.dialogues_per_scenario},
        {"knowledge_size", s.knowledge_size},
        {"red_herrings", s.red_herrings},
        {"p_clear", s.p_clear},
        {"p_remove_ideal", s.p_remove_ideal},
        {"max_turns", s.max_turns},
        {"temperature", s.temperature},
        {"max_output", s.max_output},
        {"max_loss_fraction", s.max_loss_fraction},
        {"prompts_dir", s.prompts_dir}}},
      {"seed", c.seed},
      {"prompt_pack", c.prompt_pack}};
}

namespace {

bool compatible(const Json& def, const Json& v) {
  if (def.is_string()) return v.is_string();
  if (def.is_boolean()) return v.is_boolean();
  if (def.is_number_float()) return v.is_number();
  if (def.is_number_unsigned()) return v.is_number_unsigned() ||
                                       (v.is_number_integer() && v.get<std::int64_t>() >= 0);
  if (def.is_number_integer()) return v.is_number_integer();
  return false;
}

/// Copies `over` into `base`, rejecting keys and types unknown to `base`.
void overlay(Json& base, const Json& over, const std::string& where) {
  if (!over.is_object()) {
    throw Error(ErrorCode::kConfig, where + " must be an object");
  }
  for (auto it = over.begin(); it != over.end(); ++it) {
    const std::string path = where + "." + it.key();
    if (!base.contains(it.key())) {
      throw Error(ErrorCode::kConfig, "unknown config key " + path);
    }
    Json& slot = base[it.key()];
    if (slot.is_object()) {
      overlay(slot, it.value(), path);
    } else if (!compatible(slot, it.value())) {
      throw Error(ErrorCode::kConfig, "wrong type for config key " + path);
    } else if (slot.is_number_float()) {
      slot = it.value().get<double>();
    } else {
      slot = it.value();
    }
  }
}

std::string env_name(const std::string& section, const std::string& key) {
  std::string name = "SLOTWEAVER_";
  if (!section.empty()) name += section + "_";
  name += key;
  std::transform(name.begin(), name.end(), name.begin(),
                 [](unsigned char c) { return std::toupper(c); });
  return name;
}

Json parse_env_value(const Json& def, const std::string& text,
                     const std::string& name) {
  try {
    if (def.is_string()) return text;
    if (def.is_boolean()) {
      const std::string t = casefold(trim(text));
      if (t == "1" || t == "true" || t == "yes") return true;
      if (t == "0" || t == "false" || t == "no") return false;
      throw std::invalid_argument("not a boolean");
    }
    std::size_t used = 0;
    Json out;
    if (def.is_number_float()) {
      out = std::stod(text, &used);
    } else if (def.is_number_unsigned()) {
      if (trim(text).starts_with("-")) throw std::invalid_argument("negative");
      out = static_cast<std::uint64_t>(std::stoull(text, &used));
    } else {
      out = static_cast<std::int64_t>(std::stoll(text, &used));
    }
    if (trim(std::string_view(text).substr(used)).size() > 0) {
      throw std::invalid_argument("trailing characters");
    }
    return out;
  } catch (const std::exception&) {
    throw Error(ErrorCode::kConfig, "cannot parse environment variable " + name +
                                        "='" + text + "'");
  }
}

void apply_env(Json& j, const EnvLookup& env) {
  for (auto it = j.begin(); it != j.end(); ++it) {
    if (it.value().is_object()) {
      for (auto kv = it.value().begin(); kv != it.value().end(); ++kv) {
        const std::string name = env_name(it.key(), kv.key());
        if (auto v = env(name)) kv.value() = parse_env_value(kv.value(), *v, name);
      }
    } else {
      const std::string name = env_name("", it.key());
      if (auto v = env(name)) it.value() = parse_env_value(it.value(), *v, name);
    }
  }
}

}  // namespace

RunConfig run_config_from_json(const Json& j) {
  Json merged = run_config_to_json(RunConfig{});
  overlay(merged, j, "$");
  RunConfig c;
  try {
    const Json& b = merged["backend"];
    c.backend.kind = b["kind"].get<std::string>();
    c.backend.endpoint = b["endpoint"].get<std::string>();
    c.backend.model = b["model"].get<std::string>();
    c.backend.api_key = b["api_key"].get<std::string>();
    c.backend.requests_per_minute = b["requests_per_minute"].get<double>();
    c.backend.temperature = b["temperature"].get<double>();
    c.backend.max_retries = b["max_retries"].get<int>();
    c.backend.backoff_ms = b["backoff_ms"].get<int>();
    c.backend.timeout_s = b["timeout_s"].get<int>();
    c.backend.script = b["script"].get<std::string>();
    c.backend.script_mode = b["script_mode"].get<std::string>();
    c.backend.audit_log = b["audit_log"].get<std::string>();

    const Json& i = merged["induction"];
    c.induction.mode = i["mode"].get<std::string>();
    c.induction.refiner = i["refiner"].get<std::string>();
    c.induction.window = i["window"].get<std::int64_t>();
    c.induction.tau = i["tau"].get<std::int64_t>();
    c.induction.cap = i["cap"].get<std::int64_t>();
    c.induction.context_budget = i["context_budget"].get<std::int64_t>();
    c.induction.hard_cap = i["hard_cap"].get<std::int64_t>();
    c.induction.max_output = i["max_output"].get<int>();
    c.induction.two_pass = i["two_pass"].get<bool>();
    c.induction.per_scenario = i["per_scenario"].get<bool>();
    c.induction.replicates = i["replicates"].get<std::int64_t>();

    const Json& s = merged["simulation"];
    c.simulation.scenarios = s["scenarios"].get<std::int64_t>();
    c.simulation.dialogues_per_scenario =
        s["dialogues_per_scenario"].get<std::int64_t>();
    c.simulation.knowledge_size = s["knowledge_size"].get<std::int64_t>();
    c.simulation.red_herrings = s["red_herrings"].get<std::int64_t>();
    c.simulation.p_clear = s["p_clear"].get<double>();
    c.simulation.p_remove_ideal = s["p_remove_ideal"].get<double>();
    c.simulation.max_turns = s["max_turns"].get<std::int64_t>();
    c.simulation.temperature = s["temperature"].get<double>();
    c.simulation.max_output = s["max_output"].get<int>();
    c.simulation.max_loss_fraction = s["max_loss_fraction"].get<double>();
    c.simulation.prompts_dir = s["prompts_dir"].get<std::string>();

    c.seed = merged["seed"].get<std::uint64_t>();
    c.prompt_pack = merged["prompt_pack"].get<std::string>();
  } catch (const Json::exception& e) {
    throw Error(ErrorCode::kConfig, std::string("bad config value: ") + e.what());
  }
  return c;
}

RunConfig load_run_config(const std::optional<std::filesystem::path>& path,
                          const EnvLookup& env) {
  Json merged = run_config_to_json(RunConfig{});
  if (path) {
    Json file;
    try {
      file = Json::parse(read_text_file(*path));
    } catch (const Json::exception& e) {
      throw Error(ErrorCode::kConfig,
                  path->string() + ": not valid JSON: " + e.what());
    } catch (const std::exception& e) {
      throw Error(ErrorCode::kConfig, e.what());
    }
    overlay(merged, file, "$");
  }
  apply_env(merged, env);
  return run_config_from_json(merged);
}

TextGenerator& BackendHandle::get() {
  if (audited) return *audited;
  if (!inner) throw Error(ErrorCode::kConfig, "no backend configured");
  return *inner;
}

BackendHandle make_backend(const RunConfig& config, const EnvLookup& env) {
  const BackendSection& b = config.backend;
  BackendHandle handle;
  if (b.kind == "scripted") {
    if (b.script.empty()) {
      throw Error(ErrorCode::kConfig, "scripted backend needs backend.script");
    }
    const ScriptMode mode = parse_script_mode(b.script_mode);
    handle.inner = std::make_unique<ScriptedBackend>(
        ScriptedBackend::parse_script(read_text_file(b.script)), mode);
  } else if (b.kind == "http") {
    HttpBackendConfig http;
    http.endpoint = b.endpoint;
    http.model = b.model;
    http.api_key = b.api_key;
    if (http.api_key.empty()) {
      http.api_key = env("SLOTWEAVER_API_KEY").value_or("");
    }
    if (http.api_key.empty()) {
      throw Error(ErrorCode::kAuth,
                  "no credential: set backend.api_key or SLOTWEAVER_API_KEY");
    }
    http.max_retries = b.max_retries;
    http.backoff = std::chrono::milliseconds(b.backoff_ms);
    http.requests_per_minute = b.requests_per_minute;
    http.timeout = std::chrono::seconds(b.timeout_s);
    handle.inner = std::make_unique<HttpChatBackend>(std::move(http));
  } else {
    throw Error(ErrorCode::kConfig, "unknown backend kind '" + b.kind + "'");
  }
  if (!b.audit_log.empty()) {
    handle.audit = std::make_unique<AuditLog>(b.audit_log);
    handle.audited = std::make_unique<AuditedBackend>(*handle.inner, *handle.audit);
  }
  return handle;
}

}  // namespace slotweaver
