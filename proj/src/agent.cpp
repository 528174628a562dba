#include "testport/agent.hpp"

#include <algorithm>
#include <cctype>
#include <future>

#include "testport/majority.hpp"

namespace testport {
namespace {

std::string lower(std::string s) {
    std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return s;
}

std::string widget_key(const std::string& key) {
    std::string k = lower(key);
    std::replace(k.begin(), k.end(), '_', '-');
    if (k == "id" || k == "resourceid") return std::string(attr::resource_id);
    if (k == "contentdesc" || k == "content-description" || k == "accessibility-id") return std::string(attr::content_desc);
    if (k == "classname" || k == "class-name") return std::string(attr::klass);
    return k;
}

bool all_blank(const std::string& s) {
    return std::all_of(s.begin(), s.end(), [](unsigned char c) { return std::isspace(c); });
}

}  // namespace

json normalize_event_document(const json& doc) {
    if (!doc.is_object()) return doc;
    json out = json::object();
    json widget = json::object();

    auto put_widget = [&](const std::string& key, const json& value) {
        std::string text = value.is_string() ? value.get<std::string>() : value.dump();
        if (text.empty() || value.is_null()) return;
        widget[widget_key(key)] = std::move(text);
    };

    for (const auto& [key, value] : doc.items()) {
        const std::string k = lower(key);
        if (k == "action") {
            out["action"] = value.is_string() ? json::array({value}) : value;
        } else if (k == "event_type" || k == "event-type" || k == "type") {
            out["event_type"] = value.is_string() ? json(lower(value.get<std::string>())) : value;
        } else if (k == "widget") {
            if (value.is_object()) {
                for (const auto& [wk, wv] : value.items()) put_widget(wk, wv);
            } else {
                out["widget"] = value;
            }
        } else if (is_recognized_widget_key(widget_key(key)) && value.is_string()) {
            put_widget(key, value);
        }
    }
    if (!widget.empty() && !out.contains("widget")) out["widget"] = widget;
    if (out.contains("action") && out["action"].is_array() && !out["action"].empty() && out["action"][0].is_string())
        out["action"][0] = lower(out["action"][0].get<std::string>());
    return out;
}

LlmAgent::LlmAgent(std::shared_ptr<ChatClient> client, PromptLibrary prompts, AgentConfig config)
    : client_(std::move(client)), prompts_(std::move(prompts)), config_(config) {
    if (!client_) throw ConfigError("agent needs a chat client");
    set_votes(config_.n_votes, config_.m_threshold);
}

void LlmAgent::set_votes(std::size_t n, std::size_t m) {
    if (n < 1 || m < 1 || m > n) throw ConfigError("vote settings need 1 <= m_threshold <= n_votes");
    config_.n_votes = n;
    config_.m_threshold = m;
}

std::string LlmAgent::single_call(PromptKind kind, const BuiltPrompt& prompt, std::size_t step) {
    ChatRequest request{std::string(to_string(kind)), step, prompt.system, prompt.user, prompt.image,
                        config_.temperature};
    return chat(*client_, request, config_.retry, exchanges_);
}

AbstractSourceTest LlmAgent::abstract_test(const TestScript& augmented) {
    PromptContext ctx;
    ctx.augmented_steps = augmented;
    const auto prompt = build_prompt(prompts_, PromptKind::abstraction, ctx, config_.layout_budget);
    const std::string summary = single_call(PromptKind::abstraction, prompt, 0);
    if (all_blank(summary)) throw EmptyAbstraction("abstraction prompt returned an empty reply");

    AbstractSourceTest out;
    out.summary = summary;
    out.source_package = augmented.app_package;
    out.source_event_count = augmented.events.size();
    out.source_oracle_count = count_oracles(augmented);
    return out;
}

std::string LlmAgent::analyze_screen(const AppState& state, std::size_t step) {
    PromptContext ctx;
    ctx.current_layout = state.layout;
    if (!state.screenshot.empty()) ctx.screenshot = state.screenshot;
    const auto prompt = build_prompt(prompts_, PromptKind::screen_analysis, ctx, config_.layout_budget);
    return single_call(PromptKind::screen_analysis, prompt, step);
}

GenerationResult LlmAgent::try_generate_event(PromptKind kind, const PromptContext& ctx, std::size_t step) {
    GenerationResult result;
    result.prompt = build_prompt(prompts_, kind, ctx, config_.layout_budget);
    const ChatRequest request{std::string(to_string(kind)), step, result.prompt.system, result.prompt.user,
                              std::nullopt, config_.temperature};

    const std::size_t n = config_.n_votes;
    std::vector<std::vector<ChatExchangeRecord>> vote_records(n);
    result.responses.resize(n);
    if (config_.parallel_votes && n > 1) {
        std::vector<std::future<std::string>> futures;
        for (std::size_t i = 0; i < n; ++i) {
            futures.push_back(std::async(std::launch::async, [&, i] {
                return chat(*client_, request, config_.retry, vote_records[i]);
            }));
        }
        std::exception_ptr failure;
        for (std::size_t i = 0; i < n; ++i) {
            try {
                result.responses[i] = futures[i].get();
            } catch (...) {
                if (!failure) failure = std::current_exception();
            }
        }
        for (auto& records : vote_records) exchanges_.insert(exchanges_.end(), records.begin(), records.end());
        if (failure) std::rethrow_exception(failure);
    } else {
        for (std::size_t i = 0; i < n; ++i) {
            try {
                result.responses[i] = chat(*client_, request, config_.retry, vote_records[i]);
            } catch (...) {
                exchanges_.insert(exchanges_.end(), vote_records[i].begin(), vote_records[i].end());
                throw;
            }
            exchanges_.insert(exchanges_.end(), vote_records[i].begin(), vote_records[i].end());
        }
    }
    for (auto& records : vote_records) result.exchanges.insert(result.exchanges.end(), records.begin(), records.end());

    std::vector<json> docs;
    for (const auto& response : result.responses) {
        try {
            docs.push_back(normalize_event_document(extract_event_json(response)));
        } catch (const NoJsonFound&) {
        }
    }
    if (docs.empty()) {
        result.error_kind = "NoJsonFound";
        result.error = "no JSON object in any of " + std::to_string(n) + " responses";
        return result;
    }
    try {
        if (docs.size() < config_.m_threshold) throw EmptyMerge("fewer parseable responses than the threshold");
        result.merged = majority_merge(docs, config_.m_threshold);
    } catch (const EmptyMerge& e) {
        result.error_kind = "EmptyMerge";
        result.error = e.what();
        return result;
    }
    try {
        result.event = event_from_json(result.merged);
    } catch (const SchemaViolation& e) {
        result.error_kind = "SchemaViolation";
        result.error = e.what();
    }
    return result;
}

Event LlmAgent::generate_event(PromptKind kind, const PromptContext& ctx, std::size_t step) {
    auto result = try_generate_event(kind, ctx, step);
    if (result.event) return *result.event;
    if (result.error_kind == "NoJsonFound") throw NoJsonFound(result.error);
    if (result.error_kind == "EmptyMerge") throw EmptyMerge(result.error);
    // Re-run validation to surface the structured error.
    return event_from_json(result.merged);
}

}  // namespace testport
