#pragma once

#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "testport/chat.hpp"
#include "testport/device.hpp"
#include "testport/prompt.hpp"

namespace testport {

struct AgentConfig {
    std::size_t n_votes = 3;
    std::size_t m_threshold = 2;
    double temperature = 0.0;
    std::size_t layout_budget = kDefaultLayoutBudget;
    RetryPolicy retry;
    /// Issue the n votes concurrently.
    bool parallel_votes = true;
};

/// Everything one event-generation round produced, including failures.
struct GenerationResult {
    BuiltPrompt prompt;
    std::vector<std::string> responses;
    std::vector<ChatExchangeRecord> exchanges;
    json merged;  ///< null when merging failed
    std::optional<Event> event;
    /// Empty on success; otherwise "NoJsonFound", "EmptyMerge" or "SchemaViolation".
    std::string error_kind;
    std::string error;
};

/// Canonicalizes the loose shapes models produce before voting: `action`
/// given as a bare string, upper-case `event_type`, underscore spellings of
/// widget keys, selector keys placed at the top level, and non-string widget
/// values. Unknown top-level keys are dropped. Missing fields are left
/// missing so validation still rejects them.
json normalize_event_document(const json& doc);

class LlmAgent {
public:
    LlmAgent(std::shared_ptr<ChatClient> client, PromptLibrary prompts, AgentConfig config = {});

    /// Single-shot summary; counts come from the script itself.
    /// Throws EmptyAbstraction on a blank reply.
    AbstractSourceTest abstract_test(const TestScript& augmented);

    /// Single-shot screen description with the screenshot attached.
    /// Throws MissingSlot("screenshot") when the state has none.
    std::string analyze_screen(const AppState& state, std::size_t step);

    /// n votes, majority merge with threshold m, then validation.
    GenerationResult try_generate_event(PromptKind kind, const PromptContext& ctx, std::size_t step);
    /// Throwing form of try_generate_event.
    Event generate_event(PromptKind kind, const PromptContext& ctx, std::size_t step);

    const AgentConfig& config() const { return config_; }
    /// Throws ConfigError unless 1 <= m <= n.
    void set_votes(std::size_t n, std::size_t m);
    const PromptLibrary& prompts() const { return prompts_; }

    /// Every physical call so far, in issue order (votes in vote order).
    const std::vector<ChatExchangeRecord>& exchanges() const { return exchanges_; }

private:
    std::string single_call(PromptKind kind, const BuiltPrompt& prompt, std::size_t step);

    std::shared_ptr<ChatClient> client_;
    PromptLibrary prompts_;
    AgentConfig config_;
    std::vector<ChatExchangeRecord> exchanges_;
};

}  // namespace testport
