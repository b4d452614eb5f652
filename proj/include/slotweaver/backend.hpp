// Copyright 2026 The Slotweaver Authors
// SPDX-License-Identifier: Apache-2.0

// Text-generation backends. Everything upstream (induction, refinement,
// simulation) talks to a TextGenerator and never to a concrete backend.

#pragma once

#include <chrono>
#include <cstddef>
#include <filesystem>
#include <functional>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

namespace slotweaver {

struct GenerationRequest {
  std::string prompt;
  int max_output = 1024;
  double temperature = 0.0;
  std::vector<std::string> stop_markers;

  /// Throws std::invalid_argument for max_output <= 0 or temperature < 0.
  void validate() const;
};

class TextGenerator {
 public:
  virtual ~TextGenerator() = default;
  virtual std::string generate(const GenerationRequest& request) = 0;
};

/// Adapts a callable; handy for tests and for composing backends.
class FunctionBackend final : public TextGenerator {
 public:
  using Fn = std::function<std::string(const GenerationRequest&)>;
  explicit FunctionBackend(Fn fn) : fn_(std::move(fn)) {}
  std::string generate(const GenerationRequest& request) override {
    request.validate();
    return fn_(request);
  }

 private:
  Fn fn_;
};

// ---------------------------------------------------------------------------
// Scripted backend

struct ScriptEntry {
  enum class Match { kAny, kSubstring, kIndex };

  Match match = Match::kAny;
  std::string substring;
  std::size_t index = 0;
  std::string response;

  static ScriptEntry any(std::string response);
  static ScriptEntry on_substring(std::string needle, std::string response);
  static ScriptEntry on_index(std::size_t index, std::string response);

  bool matches(std::string_view prompt, std::size_t call_index) const;
};

enum class ScriptMode {
  /// Entries are consumed in order; an entry with a matcher must match.
  kStrictOrder,
  /// The first entry whose matcher fires answers; entries are reusable.
  kKeyed,
};

ScriptMode parse_script_mode(std::string_view text);

class ScriptedBackend final : public TextGenerator {
 public:
  ScriptedBackend(std::vector<ScriptEntry> script, ScriptMode mode);

  /// JSON lines of {"match": {"substring": s} | {"index": n}, "response": r};
  /// "match" may be omitted to match anything.
  static std::vector<ScriptEntry> parse_script(std::string_view jsonl);
  static ScriptedBackend from_file(const std::filesystem::path& path,
                                   ScriptMode mode);

  std::string generate(const GenerationRequest& request) override;

  std::size_t calls() const;

 private:
  std::vector<ScriptEntry> script_;
  ScriptMode mode_;
  mutable std::mutex mu_;
  std::size_t calls_ = 0;
};

// ---------------------------------------------------------------------------
// Audit log

struct AuditRecord {
  std::string prompt;
  std::string response;
};

/// Thread-safe request/response recorder. With a path, every record is also
/// appended to that file as a JSON line.
class AuditLog {
 public:
  AuditLog() = default;
  explicit AuditLog(std::filesystem::path path);

  void record(std::string_view prompt, std::string_view response);
  std::vector<AuditRecord> records() const;

 private:
  mutable std::mutex mu_;
  std::vector<AuditRecord> records_;
  std::optional<std::filesystem::path> path_;
};

class AuditedBackend final : public TextGenerator {
 public:
  AuditedBackend(TextGenerator& inner, AuditLog& log)
      : inner_(inner), log_(log) {}
  std::string generate(const GenerationRequest& request) override;

 private:
  TextGenerator& inner_;
  AuditLog& log_;
};

// ---------------------------------------------------------------------------
// Live HTTP backend

/// Token bucket sized to one minute of requests; a non-positive rate
/// disables limiting.
class TokenBucket {
 public:
  using Clock = std::chrono::steady_clock;

  explicit TokenBucket(double requests_per_minute, double burst = 1.0);

  bool try_acquire(Clock::time_point now);
  /// Blocks until a token is available.
  void acquire();

 private:
  void refill(Clock::time_point now);

  double rate_per_second_;
  double capacity_;
  double tokens_;
  Clock::time_point last_;
  std::mutex mu_;
};

struct HttpBackendConfig {
  /// Scheme, host, optional port and optional path prefix, e.g.
  /// "https://api.openai.com" or "http://127.0.0.1:8080/proxy".
  std::string endpoint;
  std::string model;
  std::string api_key;
  int max_retries = 3;
  std::chrono::milliseconds backoff{500};
  double requests_per_minute = 0.0;
  std::chrono::seconds timeout{120};
};

/// Credential lookup order: explicit value, then SLOTWEAVER_API_KEY.
std::optional<std::string> resolve_api_key(
    const std::optional<std::string>& configured);

nlohmann::json build_chat_request(const HttpBackendConfig& config,
                                  const GenerationRequest& request);
/// Extracts choices[0].message.content; throws Error(kTransport) otherwise.
std::string parse_chat_response(std::string_view body);

/// POSTs to <endpoint>/v1/chat/completions. Connection failures, 429 and
/// 5xx responses are retried with exponential backoff; 401/403 raise
/// Error(kAuth) immediately.
class HttpChatBackend final : public TextGenerator {
 public:
  /// Throws Error(kAuth) when config.api_key is empty.
  explicit HttpChatBackend(HttpBackendConfig config);

  std::string generate(const GenerationRequest& request) override;

 private:
  HttpBackendConfig config_;
  std::string origin_;
  std::string path_;
  TokenBucket bucket_;
};

}  // namespace slotweaver
