// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The drbml Authors

#include "drbml/llm.hpp"
#include "drbml/json_io.hpp"

#include <algorithm>
#include <cstdlib>
#include <thread>

#include <openssl/evp.h>

namespace drbml {

void ModelConfig::validate() const {
  if (model_name.empty()) throw UsageError("model_name must be set");
  if (!(temperature >= 0.0)) throw UsageError("temperature must be non-negative");
  if (max_output_tokens < 1) throw UsageError("max_output_tokens must be positive");
  if (max_retries < 0 || max_retries > kMaxRetriesLimit) {
    throw UsageError("max_retries must be within [0, " + std::to_string(kMaxRetriesLimit) + "]");
  }
  if (request_timeout.count() <= 0) throw UsageError("request_timeout must be positive");
}

nlohmann::json canonical_request(const Conversation& conversation, const ModelConfig& config) {
  nlohmann::json messages = nlohmann::json::array();
  for (const Message& m : conversation) {
    messages.push_back({{"role", std::string(to_string(m.role))}, {"content", m.text}});
  }
  return {{"model", config.model_name},
          {"temperature", config.temperature},
          {"max_tokens", config.max_output_tokens},
          {"messages", std::move(messages)}};
}

std::string sha256_hex(std::string_view data) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int length = 0;
  if (EVP_Digest(data.data(), data.size(), digest, &length, EVP_sha256(), nullptr) != 1) {
    throw std::runtime_error("SHA-256 computation failed");
  }
  static constexpr char kHex[] = "0123456789abcdef";
  std::string out;
  out.reserve(length * 2);
  for (unsigned int i = 0; i < length; ++i) {
    out.push_back(kHex[digest[i] >> 4]);
    out.push_back(kHex[digest[i] & 0x0F]);
  }
  return out;
}

std::string request_digest(const Conversation& conversation, const ModelConfig& config) {
  return sha256_hex(canonical_request(conversation, config).dump(-1, ' ', false, nlohmann::json::error_handler_t::replace));
}

// ResponseCache

ResponseCache::ResponseCache(std::filesystem::path directory) : directory_(std::move(directory)) {}

std::filesystem::path ResponseCache::path_for(const std::string& digest) const {
  return directory_ / (digest + ".json");
}

std::optional<std::string> ResponseCache::get(const std::string& digest) const {
  const auto path = path_for(digest);
  if (!std::filesystem::is_regular_file(path)) return std::nullopt;
  const nlohmann::json doc = read_json_file(path);
  if (!doc.contains("response") || !doc["response"].contains("text")) {
    throw DataError("cache file without response text: " + path.string());
  }
  return doc["response"]["text"].get<std::string>();
}

void ResponseCache::put(const std::string& digest, const nlohmann::json& request,
                        const std::string& text) const {
  const nlohmann::json doc = {
      {"digest", digest}, {"request", request}, {"response", {{"text", text}}}};
  write_text_file(path_for(digest), doc.dump(2, ' ', false, nlohmann::json::error_handler_t::replace) + "\n");
}

// MockBackend

MockBackend::MockBackend(std::map<std::string, std::string> script, Responder responder)
    : script_(std::move(script)), responder_(std::move(responder)) {}

void MockBackend::script(std::string digest, std::string text) {
  script_[std::move(digest)] = std::move(text);
}

std::unique_ptr<MockBackend> MockBackend::from_file(const std::filesystem::path& path) {
  const nlohmann::json doc = read_json_file(path);
  auto mock = std::make_unique<MockBackend>();
  try {
    if (doc.contains("responses")) {
      for (const auto& [digest, text] : doc.at("responses").items()) {
        mock->script(digest, text.get<std::string>());
      }
    }
    if (doc.contains("default")) mock->default_ = doc.at("default").get<std::string>();
  } catch (const nlohmann::json::exception& e) {
    throw DataError("invalid mock script " + path.string() + ": " + e.what());
  }
  return mock;
}

BackendReply MockBackend::complete(const ChatRequest& request) {
  ++calls_;
  if (const auto it = script_.find(request.digest); it != script_.end()) return {it->second, false};
  if (responder_) {
    if (auto text = responder_(request)) return {std::move(*text), false};
  }
  if (default_) return {*default_, false};
  throw BackendError("mock backend has no scripted response for digest " + request.digest);
}

// ReplayBackend

BackendReply ReplayBackend::complete(const ChatRequest& request) {
  auto text = cache_.get(request.digest);
  if (!text) throw CacheMiss(request.digest);
  return {std::move(*text), true};
}

// HttpChatBackend

HttpChatBackend::HttpChatBackend(HttpPost post, EnvLookup env)
    : post_(std::move(post)), env_(std::move(env)) {
  if (!env_) {
    env_ = [](const std::string& name) -> std::optional<std::string> {
      const char* value = std::getenv(name.c_str());
      if (value == nullptr || *value == '\0') return std::nullopt;
      return std::string(value);
    };
  }
}

nlohmann::json HttpChatBackend::request_body(const ChatRequest& request) {
  return canonical_request(request.conversation, request.config);
}

BackendReply HttpChatBackend::complete(const ChatRequest& request) {
  const ModelConfig& config = request.config;
  if (config.endpoint.empty()) throw UsageError("HTTP backend requires an endpoint");
  HttpHeaders headers{{"Content-Type", "application/json"}};
  if (!config.api_key_env.empty()) {
    const auto key = env_(config.api_key_env);
    if (!key) throw AuthError("environment variable " + config.api_key_env + " is not set");
    headers.emplace_back("Authorization", "Bearer " + *key);
  }
  const HttpResult result =
      post_(config.endpoint, request_body(request).dump(-1, ' ', false, nlohmann::json::error_handler_t::replace), headers, config.request_timeout);
  if (result.status == 0) {
    throw TransientBackendError("transport failure: " +
                                (result.error.empty() ? std::string("no response") : result.error));
  }
  if (result.status == 401 || result.status == 403) {
    throw AuthError("endpoint rejected credentials (HTTP " + std::to_string(result.status) + ")");
  }
  if (result.status == 408 || result.status == 429 || result.status >= 500) {
    throw TransientBackendError("HTTP " + std::to_string(result.status));
  }
  if (result.status < 200 || result.status >= 300) {
    throw BackendError("HTTP " + std::to_string(result.status) + ": " + result.body.substr(0, 200));
  }
  try {
    const nlohmann::json doc = nlohmann::json::parse(result.body);
    const auto& text = doc.at(nlohmann::json::json_pointer(config.response_text_pointer));
    return {text.get<std::string>(), false};
  } catch (const nlohmann::json::exception& e) {
    throw BackendError(std::string("unexpected reply shape: ") + e.what());
  }
}

// RequestBudget

void RequestBudget::acquire() {
  if (used_.fetch_add(1) >= limit_) {
    --used_;
    throw BudgetExceeded(limit_);
  }
}

// complete

Completion complete(const Conversation& conversation, const ModelConfig& config, Backend& backend,
                    const CompletionOptions& options) {
  if (conversation.empty()) throw UsageError("cannot complete an empty conversation");
  config.validate();

  const auto started = std::chrono::steady_clock::now();
  const auto elapsed = [&] {
    return std::chrono::duration_cast<std::chrono::milliseconds>(std::chrono::steady_clock::now() -
                                                                 started);
  };

  const nlohmann::json canonical = canonical_request(conversation, config);
  Completion out;
  out.digest = sha256_hex(canonical.dump(-1, ' ', false, nlohmann::json::error_handler_t::replace));

  if (options.cache != nullptr) {
    if (auto cached = options.cache->get(out.digest)) {
      out.text = std::move(*cached);
      out.cache_hit = true;
      out.latency = elapsed();
      return out;
    }
  }

  const ChatRequest request{conversation, config, out.digest};
  std::function<void(std::chrono::milliseconds)> sleep = options.sleep;
  if (!sleep) sleep = [](std::chrono::milliseconds d) { std::this_thread::sleep_for(d); };
  std::string last_error;
  for (int attempt = 1; attempt <= config.max_retries + 1; ++attempt) {
    if (options.budget != nullptr) options.budget->acquire();
    out.attempts = attempt;
    try {
      BackendReply reply = backend.complete(request);
      out.text = std::move(reply.text);
      out.cache_hit = reply.cache_hit;
      if (options.cache != nullptr && !reply.cache_hit) {
        options.cache->put(out.digest, canonical, out.text);
      }
      out.latency = elapsed();
      return out;
    } catch (const TransientBackendError& e) {
      last_error = e.what();
      if (attempt <= config.max_retries) {
        const auto factor = 1LL << std::min(attempt - 1, 16);
        sleep(std::min<std::chrono::milliseconds>(config.retry_base_delay * factor,
                                                  std::chrono::milliseconds(30000)));
      }
    }
  }
  throw TransportError("request failed after " + std::to_string(out.attempts) +
                           " attempt(s): " + last_error,
                       out.attempts);
}

// Strategies

Conversation first_conversation(const DrbMlEntry& entry, Strategy strategy,
                                const TemplateCatalog& catalog) {
  if (is_fine_tuning(strategy)) {
    return {{Role::User, make_ft_pairs(entry, strategy, catalog).prompt}};
  }
  return render(strategy, entry, catalog).front().messages;
}

Conversation chain2_conversation(const DrbMlEntry& entry, const std::string& chain1_output,
                                 ChainMode mode, const TemplateCatalog& catalog) {
  const auto instances = render(Strategy::AP2, entry, catalog);
  if (mode == ChainMode::Interpolate) {
    return {{Role::User, render_chain2_interpolated(chain1_output, catalog)}};
  }
  Conversation conversation = instances[0].messages;
  conversation.push_back({Role::Assistant, chain1_output});
  for (const Message& m : instances[1].messages) conversation.push_back(m);
  return conversation;
}

RawResponse run_strategy(const DrbMlEntry& entry, Strategy strategy, const ModelConfig& config,
                         Backend& backend, const RunOptions& options) {
  static const TemplateCatalog kBuiltin = TemplateCatalog::builtin();
  const TemplateCatalog& catalog = options.catalog != nullptr ? *options.catalog : kBuiltin;

  RawResponse response;
  response.entry_id = entry.id;
  response.strategy = strategy;
  response.model_name = config.model_name;

  const Completion first =
      complete(first_conversation(entry, strategy, catalog), config, backend, options.completion);
  if (strategy != Strategy::AP2) {
    response.text = first.text;
    response.latency = first.latency;
    response.cache_hit = first.cache_hit;
    response.request_digest = first.digest;
    return response;
  }
  const Completion second = complete(chain2_conversation(entry, first.text, options.chain_mode, catalog),
                                     config, backend, options.completion);
  response.chain_texts = {first.text, second.text};
  response.text = second.text;
  response.latency = first.latency + second.latency;
  response.cache_hit = first.cache_hit && second.cache_hit;
  response.request_digest = second.digest;
  return response;
}

}  // namespace drbml
