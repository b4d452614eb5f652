// Copyright 2026 The Slotweaver Authors
// SPDX-License-Identifier: Apache-2.0

#include "slotweaver/backend.hpp"

#include <algorithm>
#include <cstdlib>
#include <fstream>
#include <stdexcept>
#include <thread>

#include <httplib.h>
#include <spdlog/spdlog.h>

#include "slotweaver/core.hpp"
#include "slotweaver/error.hpp"
#include "slotweaver/seqio.hpp"

namespace slotweaver {

void GenerationRequest::validate() const {
  if (max_output <= 0) {
    throw std::invalid_argument("max_output must be positive");
  }
  if (temperature < 0.0) {
    throw std::invalid_argument("temperature must be non-negative");
  }
}

// ---------------------------------------------------------------------------

ScriptEntry ScriptEntry::any(std::string response) {
  ScriptEntry e;
  e.response = std::move(response);
  return e;
}

ScriptEntry ScriptEntry::on_substring(std::string needle,
                                      std::string response) {
  ScriptEntry e;
  e.match = Match::kSubstring;
  e.substring = std::move(needle);
  e.response = std::move(response);
  return e;
}

ScriptEntry ScriptEntry::on_index(std::size_t index, std::string response) {
  ScriptEntry e;
  e.match = Match::kIndex;
  e.index = index;
  e.response = std::move(response);
  return e;
}

bool ScriptEntry::matches(std::string_view prompt,
                          std::size_t call_index) const {
  switch (match) {
    case Match::kAny: return true;
    case Match::kSubstring:
      return prompt.find(substring) != std::string_view::npos;
    case Match::kIndex: return index == call_index;
  }
  return false;
}

ScriptMode parse_script_mode(std::string_view text) {
  const std::string folded = casefold(trim(text));
  if (folded == "strict-order" || folded == "strict") {
    return ScriptMode::kStrictOrder;
  }
  if (folded == "keyed") return ScriptMode::kKeyed;
  throw Error(ErrorCode::kConfig,
              "unknown script mode '" + std::string(text) + "'");
}

ScriptedBackend::ScriptedBackend(std::vector<ScriptEntry> script,
                                 ScriptMode mode)
    : script_(std::move(script)), mode_(mode) {}

std::vector<ScriptEntry> ScriptedBackend::parse_script(std::string_view jsonl) {
  std::vector<ScriptEntry> entries;
  std::size_t lineno = 0;
  std::size_t start = 0;
  while (start < jsonl.size()) {
    std::size_t end = jsonl.find('\n', start);
    if (end == std::string_view::npos) end = jsonl.size();
    const std::string line = trim(jsonl.substr(start, end - start));
    start = end + 1;
    ++lineno;
    if (line.empty()) continue;
    const std::string where = "script line " + std::to_string(lineno);
    try {
      const auto j = nlohmann::json::parse(line);
      ScriptEntry e;
      e.response = j.at("response").get<std::string>();
      if (j.contains("match") && !j.at("match").is_null()) {
        const auto& m = j.at("match");
        if (m.contains("substring")) {
          e.match = ScriptEntry::Match::kSubstring;
          e.substring = m.at("substring").get<std::string>();
        } else if (m.contains("index")) {
          e.match = ScriptEntry::Match::kIndex;
          e.index = m.at("index").get<std::size_t>();
        } else {
          throw Error(ErrorCode::kConfig, where + ": unknown matcher");
        }
      }
      entries.push_back(std::move(e));
    } catch (const nlohmann::json::exception& e) {
      throw Error(ErrorCode::kConfig, where + ": " + e.what());
    }
  }
  return entries;
}

ScriptedBackend ScriptedBackend::from_file(const std::filesystem::path& path,
                                           ScriptMode mode) {
  std::string text;
  try {
    text = read_text_file(path);
  } catch (const std::runtime_error& e) {
    throw Error(ErrorCode::kConfig, e.what());
  }
  return ScriptedBackend(parse_script(text), mode);
}

std::string ScriptedBackend::generate(const GenerationRequest& request) {
  request.validate();
  std::lock_guard lock(mu_);
  const std::size_t call = calls_++;
  if (mode_ == ScriptMode::kStrictOrder) {
    if (call >= script_.size()) {
      throw Error(ErrorCode::kScriptExhausted,
                  "request " + std::to_string(call) + " but script has " +
                      std::to_string(script_.size()) + " responses");
    }
    const ScriptEntry& entry = script_[call];
    if (!entry.matches(request.prompt, call)) {
      throw Error(ErrorCode::kScriptMismatch,
                  "request " + std::to_string(call) +
                      " does not satisfy the scripted matcher");
    }
    return entry.response;
  }
  for (const ScriptEntry& entry : script_) {
    if (entry.matches(request.prompt, call)) return entry.response;
  }
  throw Error(ErrorCode::kScriptMismatch,
              "no scripted matcher fired for request " + std::to_string(call));
}

std::size_t ScriptedBackend::calls() const {
  std::lock_guard lock(mu_);
  return calls_;
}

// ---------------------------------------------------------------------------

AuditLog::AuditLog(std::filesystem::path path) : path_(std::move(path)) {
  if (path_->has_parent_path()) {
    std::filesystem::create_directories(path_->parent_path());
  }
  std::ofstream truncate(*path_, std::ios::trunc);
}

void AuditLog::record(std::string_view prompt, std::string_view response) {
  std::lock_guard lock(mu_);
  records_.push_back({std::string(prompt), std::string(response)});
  if (path_) {
    std::ofstream out(*path_, std::ios::app);
    out << nlohmann::json{{"prompt", prompt}, {"response", response}}.dump()
        << "\n";
  }
}

std::vector<AuditRecord> AuditLog::records() const {
  std::lock_guard lock(mu_);
  return records_;
}

std::string AuditedBackend::generate(const GenerationRequest& request) {
  std::string response = inner_.generate(request);
  log_.record(request.prompt, response);
  return response;
}

// ---------------------------------------------------------------------------

TokenBucket::TokenBucket(double requests_per_minute, double burst)
    : rate_per_second_(requests_per_minute / 60.0),
      capacity_(std::max(1.0, burst)),
      tokens_(capacity_),
      last_(Clock::now()) {}

void TokenBucket::refill(Clock::time_point now) {
  if (now <= last_) return;
  const double elapsed = std::chrono::duration<double>(now - last_).count();
  tokens_ = std::min(capacity_, tokens_ + elapsed * rate_per_second_);
  last_ = now;
}

bool TokenBucket::try_acquire(Clock::time_point now) {
  std::lock_guard lock(mu_);
  if (rate_per_second_ <= 0.0) return true;
  refill(now);
  if (tokens_ >= 1.0) {
    tokens_ -= 1.0;
    return true;
  }
  return false;
}

void TokenBucket::acquire() {
  while (!try_acquire(Clock::now())) {
    std::chrono::duration<double> wait;
    {
      std::lock_guard lock(mu_);
      wait = std::chrono::duration<double>((1.0 - tokens_) / rate_per_second_);
    }
    std::this_thread::sleep_for(wait);
  }
}

// ---------------------------------------------------------------------------

std::optional<std::string> resolve_api_key(
    const std::optional<std::string>& configured) {
  if (configured && !configured->empty()) return configured;
  if (const char* env = std::getenv("SLOTWEAVER_API_KEY"); env && *env) {
    return std::string(env);
  }
  return std::nullopt;
}

nlohmann::json build_chat_request(const HttpBackendConfig& config,
                                  const GenerationRequest& request) {
  nlohmann::json body{
      {"model", config.model},
      {"messages", {{{"role", "user"}, {"content", request.prompt}}}},
      {"temperature", request.temperature},
      {"max_tokens", request.max_output}};
  if (!request.stop_markers.empty()) body["stop"] = request.stop_markers;
  return body;
}

std::string parse_chat_response(std::string_view body) {
  try {
    const auto j = nlohmann::json::parse(body);
    return j.at("choices").at(0).at("message").at("content").get<std::string>();
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kTransport,
                std::string("malformed chat completion response: ") + e.what());
  }
}

namespace {

/// Splits "scheme://host[:port][/prefix]" into origin and path prefix.
std::pair<std::string, std::string> split_endpoint(const std::string& url) {
  const std::size_t scheme = url.find("://");
  const std::size_t host_start = scheme == std::string::npos ? 0 : scheme + 3;
  const std::size_t slash = url.find('/', host_start);
  std::string origin = slash == std::string::npos ? url : url.substr(0, slash);
  std::string prefix = slash == std::string::npos ? "" : url.substr(slash);
  while (!prefix.empty() && prefix.back() == '/') prefix.pop_back();
  return {origin, prefix};
}

}  // namespace

HttpChatBackend::HttpChatBackend(HttpBackendConfig config)
    : config_(std::move(config)), bucket_(config_.requests_per_minute) {
  if (config_.api_key.empty()) {
    throw Error(ErrorCode::kAuth,
                "no credential configured; set SLOTWEAVER_API_KEY or "
                "backend.api_key");
  }
  if (config_.endpoint.empty()) {
    throw Error(ErrorCode::kConfig, "backend.endpoint is empty");
  }
  std::tie(origin_, path_) = split_endpoint(config_.endpoint);
  path_ += "/v1/chat/completions";
}

std::string HttpChatBackend::generate(const GenerationRequest& request) {
  request.validate();
  const std::string body = build_chat_request(config_, request).dump();
  const httplib::Headers headers{
      {"Authorization", "Bearer " + config_.api_key}};

  std::string last_error;
  auto delay = config_.backoff;
  for (int attempt = 0; attempt <= config_.max_retries; ++attempt) {
    if (attempt > 0) {
      spdlog::warn("retrying generation request ({}/{}) after: {}", attempt,
                   config_.max_retries, last_error);
      std::this_thread::sleep_for(delay);
      delay *= 2;
    }
    bucket_.acquire();
    // One client per request keeps concurrent generate() calls independent.
    httplib::Client client(origin_);
    const auto timeout = static_cast<time_t>(config_.timeout.count());
    client.set_connection_timeout(timeout, 0);
    client.set_read_timeout(timeout, 0);
    client.set_write_timeout(timeout, 0);
    auto res = client.Post(path_, headers, body, "application/json");
    if (!res) {
      last_error = "transport: " + httplib::to_string(res.error());
      continue;
    }
    if (res->status == 401 || res->status == 403) {
      throw Error(ErrorCode::kAuth,
                  "endpoint rejected credential (HTTP " +
                      std::to_string(res->status) + ")");
    }
    if (res->status == 429 || res->status >= 500) {
      last_error = "HTTP " + std::to_string(res->status);
      continue;
    }
    if (res->status < 200 || res->status >= 300) {
      throw Error(ErrorCode::kTransport,
                  "HTTP " + std::to_string(res->status) + ": " + res->body);
    }
    return parse_chat_response(res->body);
  }
  throw Error(ErrorCode::kTransport,
              "giving up after " + std::to_string(config_.max_retries + 1) +
                  " attempts: " + last_error);
}

}  // namespace slotweaver
