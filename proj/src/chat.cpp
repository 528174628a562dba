#include "testport/chat.hpp"

#include <thread>

#include <httplib.h>

#include "internal/base64.hpp"

namespace testport {
namespace {

struct SplitUrl {
    std::string origin;
    std::string path;
};

SplitUrl split_endpoint(const std::string& url) {
    auto scheme = url.find("://");
    if (scheme == std::string::npos) throw ConfigError("chat endpoint needs a scheme: " + url);
    auto slash = url.find('/', scheme + 3);
    if (slash == std::string::npos) return {url, "/"};
    return {url.substr(0, slash), url.substr(slash)};
}

}  // namespace

json to_json(const ChatExchangeRecord& r) {
    json out = {{"kind", r.kind},
                {"step", r.step},
                {"input_tokens", r.input_tokens},
                {"output_tokens", r.output_tokens},
                {"latency_ms", r.latency_ms},
                {"raw_response", r.raw_response}};
    if (!r.error.empty()) out["error"] = r.error;
    return out;
}

bool is_retryable(const ProviderError& error) { return error.status() == 429 || error.status() >= 500; }

std::string chat(ChatClient& client, const ChatRequest& request, const RetryPolicy& retry,
                 std::vector<ChatExchangeRecord>& records) {
    const int attempts = std::max(1, retry.max_attempts);
    auto backoff = retry.backoff;
    for (int attempt = 1;; ++attempt) {
        ChatExchangeRecord record;
        record.kind = request.kind;
        record.step = request.step;
        const auto started = std::chrono::steady_clock::now();
        auto elapsed = [&] {
            return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - started).count();
        };
        try {
            ChatReply reply = client.complete(request);
            record.latency_ms = elapsed();
            record.input_tokens = reply.input_tokens;
            record.output_tokens = reply.output_tokens;
            record.raw_response = reply.text;
            records.push_back(std::move(record));
            return reply.text;
        } catch (const TransportError& e) {
            record.latency_ms = elapsed();
            record.error = e.what();
            records.push_back(std::move(record));
            if (attempt >= attempts) throw;
        } catch (const ProviderError& e) {
            record.latency_ms = elapsed();
            record.error = e.what();
            records.push_back(std::move(record));
            if (attempt >= attempts || !is_retryable(e)) throw;
        }
        if (backoff.count() > 0) std::this_thread::sleep_for(backoff);
        backoff *= 2;
    }
}

HttpChatClient::HttpChatClient(HttpChatConfig config) : config_(std::move(config)) {
    if (config_.endpoint.empty()) throw ConfigError("chat endpoint is empty");
    if (config_.model.empty()) throw ConfigError("chat model is empty");
}

json HttpChatClient::request_body(const ChatRequest& request) const {
    json user_content;
    if (request.image && !request.image->empty()) {
        user_content = json::array(
            {{{"type", "text"}, {"text", request.user}},
             {{"type", "image_url"},
              {"image_url", {{"url", "data:image/png;base64," + detail::base64_encode(*request.image)}}}}});
    } else {
        user_content = request.user;
    }
    return {{"model", config_.model},
            {"temperature", request.temperature},
            {"messages", json::array({{{"role", "system"}, {"content", request.system}},
                                      {{"role", "user"}, {"content", user_content}}})}};
}

ChatReply HttpChatClient::complete(const ChatRequest& request) {
    const auto url = split_endpoint(config_.endpoint);
    httplib::Client client(url.origin);
    using namespace std::chrono;
    client.set_connection_timeout(duration_cast<seconds>(config_.connect_timeout).count(), 0);
    client.set_read_timeout(duration_cast<seconds>(config_.read_timeout).count(), 0);
    httplib::Headers headers;
    if (!config_.api_key.empty()) headers.emplace("Authorization", "Bearer " + config_.api_key);

    auto res = client.Post(url.path, headers, request_body(request).dump(), "application/json");
    if (!res) throw TransportError("chat endpoint " + config_.endpoint + ": " + httplib::to_string(res.error()));
    if (res->status != 200) throw ProviderError(res->status, res->body);

    json doc;
    try {
        doc = json::parse(res->body);
    } catch (const json::parse_error&) {
        throw ProviderError(res->status, "response is not JSON: " + res->body);
    }
    ChatReply reply;
    try {
        const json& message = doc.at("choices").at(0).at("message");
        if (message.contains("content") && message["content"].is_string()) reply.text = message["content"];
        const json usage = doc.value("usage", json::object());
        reply.input_tokens = usage.value("prompt_tokens", std::uint64_t{0});
        reply.output_tokens = usage.value("completion_tokens", std::uint64_t{0});
    } catch (const json::exception& e) {
        throw ProviderError(res->status, std::string("unexpected response shape: ") + e.what());
    }
    return reply;
}

std::uint64_t estimate_tokens(std::size_t characters) { return (characters + 3) / 4; }

ChatReply ScriptedChatClient::complete(const ChatRequest& request) {
    const std::string prompt = request.system + "\n" + request.user;
    ChatReply reply;
    reply.text = llm_.respond(request.kind, request.step, prompt);
    reply.input_tokens = estimate_tokens(prompt.size());
    reply.output_tokens = estimate_tokens(reply.text.size());
    return reply;
}

}  // namespace testport
