#pragma once

#include <filesystem>
#include <memory>
#include <optional>
#include <string>

#include "testport/agent.hpp"
#include "testport/evaluator.hpp"
#include "testport/explorer.hpp"

namespace testport {

struct BackendConfig {
    enum class Kind { simulator, webdriver };
    Kind kind = Kind::simulator;
    std::filesystem::path model;  ///< simulator app model
    std::string url;              ///< webdriver server
    std::string app;              ///< package or apk path; defaults to the model's package
    json capabilities = json::object();
    std::chrono::milliseconds connect_timeout{5000};
    std::chrono::milliseconds read_timeout{60000};
};

/// "http://..." or "https://..." selects a webdriver server, anything else is
/// a simulator model path.
BackendConfig backend_from_spec(const std::string& spec);

struct LlmConfig {
    enum class Client { scripted, live };
    Client client = Client::scripted;
    std::filesystem::path rules;
    std::string endpoint = "https://api.openai.com/v1/chat/completions";
    std::string model = "gpt-4o";
    std::string api_key_env = "OPENAI_API_KEY";
    RetryPolicy retry;
    bool parallel_votes = true;
};

struct RunConfig {
    std::optional<BackendConfig> source;
    std::optional<BackendConfig> target;
    LlmConfig llm;
    MigrationConfig migration;
    WidgetAllowlist allowlist = WidgetAllowlist::defaults();
    std::chrono::milliseconds poll_interval{500};
    std::size_t layout_budget = kDefaultLayoutBudget;
    std::filesystem::path prompt_dir = PromptLibrary::default_dir();
    PriceTable prices;
    MatchPolicy policy = MatchPolicy::locator;
    std::filesystem::path output_dir = "runs";

    /// Throws ConfigError naming the first missing file or bad setting.
    void validate() const;
};

/// Replaces `${NAME}` with the environment value (empty when unset).
std::string interpolate_env(std::string_view text);

/// TOML text; relative paths resolve against `base_dir`. Throws ConfigError.
RunConfig parse_run_config(std::string_view text, const std::filesystem::path& base_dir);
RunConfig load_run_config(const std::filesystem::path& path);

/// Opens a session over the configured backend. Simulator sessions run on
/// virtual time.
std::unique_ptr<DeviceSession> open_device(const BackendConfig& backend, const RunConfig& config);
/// App reference passed to launch().
std::string app_ref(const BackendConfig& backend);

/// Throws ConfigError when a live client's key variable is unset.
std::shared_ptr<ChatClient> make_chat_client(const LlmConfig& llm);
std::unique_ptr<LlmAgent> make_agent(const RunConfig& config);

}  // namespace testport
