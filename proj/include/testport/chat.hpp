#pragma once

#include <chrono>
#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "testport/errors.hpp"
#include "testport/simulator.hpp"

namespace testport {

struct ChatRequest {
    /// Prompt kind and step travel with the request so scripted clients can
    /// key on them; live clients ignore both.
    std::string kind;
    std::size_t step = 0;
    std::string system;
    std::string user;
    std::optional<std::vector<std::uint8_t>> image;  ///< PNG
    double temperature = 0.0;
};

struct ChatReply {
    std::string text;
    std::uint64_t input_tokens = 0;
    std::uint64_t output_tokens = 0;
};

/// One physical call to a model. Failed attempts are recorded too, with zero
/// tokens and `error` set.
struct ChatExchangeRecord {
    std::string kind;
    std::size_t step = 0;
    std::uint64_t input_tokens = 0;
    std::uint64_t output_tokens = 0;
    double latency_ms = 0.0;
    std::string raw_response;
    std::string error;
};

json to_json(const ChatExchangeRecord& record);

class ChatClient {
public:
    virtual ~ChatClient() = default;
    /// Throws TransportError (network) or ProviderError (HTTP status).
    virtual ChatReply complete(const ChatRequest& request) = 0;
};

struct RetryPolicy {
    int max_attempts = 3;
    std::chrono::milliseconds backoff{500};  ///< doubled after each failure
};

bool is_retryable(const ProviderError& error);

/// Sends `request`, retrying transport errors and retryable provider
/// statuses (429, 5xx). Appends one record per attempt to `records`.
std::string chat(ChatClient& client, const ChatRequest& request, const RetryPolicy& retry,
                 std::vector<ChatExchangeRecord>& records);

struct HttpChatConfig {
    /// Full chat-completions URL, e.g. "https://api.openai.com/v1/chat/completions".
    std::string endpoint;
    std::string model;
    std::string api_key;
    std::chrono::milliseconds connect_timeout{10000};
    std::chrono::milliseconds read_timeout{120000};
};

/// OpenAI-compatible chat-completions client.
class HttpChatClient final : public ChatClient {
public:
    explicit HttpChatClient(HttpChatConfig config);
    ChatReply complete(const ChatRequest& request) override;

    /// Request body sent for `request`; exposed for tests.
    json request_body(const ChatRequest& request) const;

private:
    HttpChatConfig config_;
};

/// Deterministic client over a rules file. Token counts are estimated as
/// ceil(characters / 4).
class ScriptedChatClient final : public ChatClient {
public:
    explicit ScriptedChatClient(sim::ScriptedLLM llm) : llm_(std::move(llm)) {}
    ChatReply complete(const ChatRequest& request) override;

private:
    sim::ScriptedLLM llm_;
};

std::uint64_t estimate_tokens(std::size_t characters);

}  // namespace testport
