// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The drbml Authors

#pragma once

#include <atomic>
#include <chrono>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "drbml/corpus.hpp"
#include "drbml/error.hpp"
#include "drbml/prompts.hpp"

namespace drbml {

using Conversation = std::vector<Message>;

struct ModelConfig {
  std::string model_name;
  std::string endpoint;
  double temperature = 0.0;
  int max_output_tokens = 1024;
  std::chrono::milliseconds request_timeout{60000};
  int max_retries = 3;
  /// Name of the environment variable holding the API key; never the key itself.
  std::string api_key_env = "OPENAI_API_KEY";
  /// JSON pointer to the generated text in the endpoint's reply.
  std::string response_text_pointer = "/choices/0/message/content";
  std::chrono::milliseconds retry_base_delay{500};

  /// Throws UsageError on temperature < 0, max_retries outside [0, 10],
  /// or max_output_tokens < 1.
  void validate() const;
};

inline constexpr int kMaxRetriesLimit = 10;

/// The request identity: model, decoding parameters and the full message
/// sequence. Serialized with sorted keys so field order never matters.
nlohmann::json canonical_request(const Conversation& conversation, const ModelConfig& config);
/// Hex SHA-256 of the compact canonical request.
std::string request_digest(const Conversation& conversation, const ModelConfig& config);
std::string sha256_hex(std::string_view data);

struct ChatRequest {
  const Conversation& conversation;
  const ModelConfig& config;
  std::string digest;
};

struct BackendReply {
  std::string text;
  bool cache_hit = false;
};

/// Raised by backends for failures worth retrying (timeouts, 429, 5xx).
class TransientBackendError : public BackendError {
public:
  explicit TransientBackendError(const std::string& what) : BackendError(what) {}
};

/// Implementations must be safe to call from several threads at once.
class Backend {
public:
  virtual ~Backend() = default;
  virtual std::string name() const = 0;
  virtual BackendReply complete(const ChatRequest& request) = 0;
};

/// Content-addressed response store: `<dir>/<digest>.json`.
class ResponseCache {
public:
  explicit ResponseCache(std::filesystem::path directory);

  std::optional<std::string> get(const std::string& digest) const;
  void put(const std::string& digest, const nlohmann::json& request, const std::string& text) const;
  std::filesystem::path path_for(const std::string& digest) const;
  const std::filesystem::path& directory() const { return directory_; }

private:
  std::filesystem::path directory_;
};

/// Answers from a fixed script keyed by request digest, falling back to an
/// optional responder function. Unscripted requests raise BackendError.
class MockBackend : public Backend {
public:
  using Responder = std::function<std::optional<std::string>(const ChatRequest&)>;

  MockBackend() = default;
  explicit MockBackend(std::map<std::string, std::string> script, Responder responder = {});

  void script(std::string digest, std::string text);
  void set_default(std::string text) { default_ = std::move(text); }
  /// Script file: `{"responses": {digest: text}, "default": text?}`.
  static std::unique_ptr<MockBackend> from_file(const std::filesystem::path& path);

  std::string name() const override { return "mock"; }
  BackendReply complete(const ChatRequest& request) override;
  long calls() const { return calls_.load(); }

private:
  std::map<std::string, std::string> script_;
  Responder responder_;
  std::optional<std::string> default_;
  std::atomic<long> calls_{0};
};

/// Serves only what is already in the cache; a miss raises CacheMiss.
class ReplayBackend : public Backend {
public:
  explicit ReplayBackend(ResponseCache cache) : cache_(std::move(cache)) {}
  std::string name() const override { return "replay"; }
  BackendReply complete(const ChatRequest& request) override;

private:
  ResponseCache cache_;
};

struct HttpResult {
  int status = 0;  // 0 when the connection itself failed
  std::string body;
  std::string error;
};

using HttpHeaders = std::vector<std::pair<std::string, std::string>>;
using HttpPost = std::function<HttpResult(const std::string& url, const std::string& body,
                                          const HttpHeaders& headers,
                                          std::chrono::milliseconds timeout)>;

HttpResult default_http_post(const std::string& url, const std::string& body,
                             const HttpHeaders& headers, std::chrono::milliseconds timeout);

/// OpenAI-shaped chat-completions client.
class HttpChatBackend : public Backend {
public:
  using EnvLookup = std::function<std::optional<std::string>(const std::string&)>;

  explicit HttpChatBackend(HttpPost post = default_http_post, EnvLookup env = {});

  std::string name() const override { return "http"; }
  BackendReply complete(const ChatRequest& request) override;

  static nlohmann::json request_body(const ChatRequest& request);

private:
  HttpPost post_;
  EnvLookup env_;
};

class RequestBudget {
public:
  explicit RequestBudget(long limit) : limit_(limit) {}
  /// Throws BudgetExceeded once `limit` requests have been issued.
  void acquire();
  long used() const { return used_.load(); }

private:
  long limit_;
  std::atomic<long> used_{0};
};

struct CompletionOptions {
  ResponseCache* cache = nullptr;
  RequestBudget* budget = nullptr;
  std::function<void(std::chrono::milliseconds)> sleep;  // defaults to this_thread::sleep_for
};

struct Completion {
  std::string text;
  std::string digest;
  bool cache_hit = false;
  int attempts = 0;
  std::chrono::milliseconds latency{0};
};

/// One chat completion with cache lookup, bounded exponential-backoff
/// retries and cache write-back.
Completion complete(const Conversation& conversation, const ModelConfig& config, Backend& backend,
                    const CompletionOptions& options = {});

enum class ChainMode { Chat, Interpolate };

struct RunOptions {
  const TemplateCatalog* catalog = nullptr;  // builtin when null
  ChainMode chain_mode = ChainMode::Chat;
  CompletionOptions completion;
};

struct RawResponse {
  int entry_id = 0;
  Strategy strategy = Strategy::BP1;
  std::string model_name;
  std::string text;
  std::vector<std::string> chain_texts;
  std::chrono::milliseconds latency{0};
  bool cache_hit = false;
  std::string request_digest;
};

/// The conversations a strategy issues for an entry. AP2 in chat mode
/// returns only the Chain1 conversation; use `chain2_conversation` for the
/// follow-up.
Conversation first_conversation(const DrbMlEntry& entry, Strategy strategy,
                                const TemplateCatalog& catalog);
Conversation chain2_conversation(const DrbMlEntry& entry, const std::string& chain1_output,
                                 ChainMode mode, const TemplateCatalog& catalog);

RawResponse run_strategy(const DrbMlEntry& entry, Strategy strategy, const ModelConfig& config,
                         Backend& backend, const RunOptions& options = {});

struct BatchRecord {
  int entry_id = 0;
  std::optional<RawResponse> response;
  std::string error;
  std::optional<Error::Category> error_category;

  bool ok() const { return response.has_value(); }
};

/// Dispatches one `run_strategy` per entry with at most `parallelism`
/// requests in flight. Results are ordered by entry id; failures are
/// recorded per entry.
std::vector<BatchRecord> run_batch(std::span<const DrbMlEntry> entries, Strategy strategy,
                                   const ModelConfig& config, Backend& backend, int parallelism,
                                   const RunOptions& options = {});

/// Sequential reference for run_batch.
std::vector<BatchRecord> run_batch_serial(std::span<const DrbMlEntry> entries, Strategy strategy,
                                          const ModelConfig& config, Backend& backend,
                                          const RunOptions& options = {});

}  // namespace drbml
