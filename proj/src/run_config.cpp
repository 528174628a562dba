#include "testport/run_config.hpp"

#include <cstdlib>
#include <fstream>
#include <sstream>

#include <toml.hpp>

#include "testport/errors.hpp"
#include "testport/simulator.hpp"
#include "testport/webdriver.hpp"

namespace testport {
namespace {

namespace fs = std::filesystem;

std::string read_text(const fs::path& path, const char* what) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError(std::string("cannot read ") + what + " " + path.string());
    std::ostringstream os;
    os << in.rdbuf();
    return os.str();
}

fs::path resolve(const fs::path& base, const std::string& value) {
    fs::path p = interpolate_env(value);
    return p.is_relative() && !base.empty() ? base / p : p;
}

template <class T>
std::optional<T> get(const toml::table& t, std::string_view key) {
    if (auto v = t[key].value<T>()) return v;
    return std::nullopt;
}

std::optional<std::string> get_string(const toml::table& t, std::string_view key) {
    if (auto v = t[key].value<std::string>()) return interpolate_env(*v);
    return std::nullopt;
}

json toml_to_json(const toml::node& node) {
    if (auto t = node.as_table()) {
        json out = json::object();
        for (const auto& [k, v] : *t) out[std::string(k.str())] = toml_to_json(v);
        return out;
    }
    if (auto a = node.as_array()) {
        json out = json::array();
        for (const auto& v : *a) out.push_back(toml_to_json(v));
        return out;
    }
    if (auto v = node.value<std::string>()) return interpolate_env(*v);
    if (auto v = node.as_boolean()) return v->get();
    if (auto v = node.as_integer()) return v->get();
    if (auto v = node.value<double>()) return *v;
    return nullptr;
}

BackendConfig parse_backend(const toml::table& t, const fs::path& base) {
    BackendConfig b;
    const std::string kind = get_string(t, "backend").value_or("simulator");
    if (kind == "simulator") {
        b.kind = BackendConfig::Kind::simulator;
    } else if (kind == "webdriver") {
        b.kind = BackendConfig::Kind::webdriver;
    } else {
        throw ConfigError("unknown backend '" + kind + "' (expected simulator or webdriver)");
    }
    if (auto v = get_string(t, "model")) b.model = resolve(base, *v);
    if (auto v = get_string(t, "url")) b.url = *v;
    if (auto v = get_string(t, "app")) b.app = *v;
    if (auto v = get<std::int64_t>(t, "connect_timeout_ms")) b.connect_timeout = std::chrono::milliseconds(*v);
    if (auto v = get<std::int64_t>(t, "read_timeout_ms")) b.read_timeout = std::chrono::milliseconds(*v);
    if (auto caps = t["capabilities"].as_table()) b.capabilities = toml_to_json(*caps);
    return b;
}

std::size_t positive(const toml::table& t, std::string_view key, std::size_t fallback) {
    auto v = get<std::int64_t>(t, key);
    if (!v) return fallback;
    if (*v < 1) throw ConfigError(std::string(key) + " must be at least 1");
    return static_cast<std::size_t>(*v);
}

}  // namespace

BackendConfig backend_from_spec(const std::string& spec) {
    BackendConfig b;
    if (spec.starts_with("http://") || spec.starts_with("https://")) {
        b.kind = BackendConfig::Kind::webdriver;
        b.url = spec;
    } else {
        b.kind = BackendConfig::Kind::simulator;
        b.model = spec;
    }
    return b;
}

std::string interpolate_env(std::string_view text) {
    std::string out;
    std::size_t pos = 0;
    while (pos < text.size()) {
        auto open = text.find("${", pos);
        if (open == std::string_view::npos) break;
        auto close = text.find('}', open + 2);
        if (close == std::string_view::npos) break;
        out.append(text.substr(pos, open - pos));
        const std::string name(text.substr(open + 2, close - open - 2));
        if (const char* v = std::getenv(name.c_str())) out += v;
        pos = close + 1;
    }
    out.append(text.substr(pos));
    return out;
}

void RunConfig::validate() const {
    migration.validate();
    for (const auto* b : {&source, &target}) {
        if (!*b) continue;
        const auto& backend = **b;
        if (backend.kind == BackendConfig::Kind::simulator) {
            if (backend.model.empty()) throw ConfigError("simulator backend needs a model path");
            if (!fs::exists(backend.model)) throw ConfigError("app model not found: " + backend.model.string());
        } else if (backend.url.empty()) {
            throw ConfigError("webdriver backend needs a url");
        }
    }
    if (llm.client == LlmConfig::Client::scripted && !llm.rules.empty() && !fs::exists(llm.rules))
        throw ConfigError("llm rules file not found: " + llm.rules.string());
    if (!fs::is_directory(prompt_dir)) throw ConfigError("prompt directory not found: " + prompt_dir.string());
    if (prices.input_per_million < 0 || prices.output_per_million < 0) throw ConfigError("prices must be non-negative");
}

RunConfig parse_run_config(std::string_view text, const fs::path& base) {
    toml::table root;
    try {
        root = toml::parse(text);
    } catch (const toml::parse_error& e) {
        std::ostringstream os;
        os << "config is not valid TOML: " << e.description() << " (line " << e.source().begin.line << ")";
        throw ConfigError(os.str());
    }

    RunConfig c;
    if (auto t = root["source"].as_table()) c.source = parse_backend(*t, base);
    if (auto t = root["target"].as_table()) c.target = parse_backend(*t, base);

    if (auto t = root["llm"].as_table()) {
        const std::string client = get_string(*t, "client").value_or("scripted");
        if (client == "scripted") c.llm.client = LlmConfig::Client::scripted;
        else if (client == "live") c.llm.client = LlmConfig::Client::live;
        else throw ConfigError("unknown llm client '" + client + "' (expected scripted or live)");
        if (auto v = get_string(*t, "rules")) c.llm.rules = resolve(base, *v);
        if (auto v = get_string(*t, "endpoint")) c.llm.endpoint = *v;
        if (auto v = get_string(*t, "model")) c.llm.model = *v;
        if (auto v = get_string(*t, "api_key_env")) c.llm.api_key_env = *v;
        c.llm.retry.max_attempts = static_cast<int>(positive(*t, "max_attempts", 3));
        if (auto v = get<std::int64_t>(*t, "backoff_ms")) c.llm.retry.backoff = std::chrono::milliseconds(*v);
        if (auto v = get<bool>(*t, "parallel_votes")) c.llm.parallel_votes = *v;
    }

    if (auto t = root["migration"].as_table()) {
        c.migration.n_votes = positive(*t, "n_votes", c.migration.n_votes);
        c.migration.m_threshold = positive(*t, "m_threshold", c.migration.m_threshold);
        c.migration.max_wrong_tries_per_step = positive(*t, "max_wrong_tries", c.migration.max_wrong_tries_per_step);
        c.migration.budget_multiplier = positive(*t, "budget_multiplier", c.migration.budget_multiplier);
        if (auto v = get<std::int64_t>(*t, "max_iterations")) c.migration.max_iterations = static_cast<std::size_t>(*v);
    }

    if (auto t = root["device"].as_table()) {
        if (auto v = get<std::int64_t>(*t, "poll_interval_ms")) c.poll_interval = std::chrono::milliseconds(*v);
        if (auto v = get<std::int64_t>(*t, "layout_budget")) c.layout_budget = static_cast<std::size_t>(*v);
        if (auto a = (*t)["allowlist"].as_array()) {
            c.allowlist.classes.clear();
            for (const auto& v : *a)
                if (auto s = v.value<std::string>()) c.allowlist.classes.push_back(*s);
        }
    }

    if (auto t = root["prompts"].as_table())
        if (auto v = get_string(*t, "dir")) c.prompt_dir = resolve(base, *v);

    if (auto t = root["pricing"].as_table()) {
        if (auto v = get<double>(*t, "input_per_million")) c.prices.input_per_million = *v;
        if (auto v = get<double>(*t, "output_per_million")) c.prices.output_per_million = *v;
    }

    if (auto t = root["eval"].as_table()) {
        if (auto v = get_string(*t, "policy")) {
            auto p = parse_match_policy(*v);
            if (!p) throw ConfigError("unknown match policy '" + *v + "'");
            c.policy = *p;
        }
    }

    if (auto t = root["output"].as_table())
        if (auto v = get_string(*t, "dir")) c.output_dir = resolve(base, *v);

    return c;
}

RunConfig load_run_config(const fs::path& path) {
    return parse_run_config(read_text(path, "config"), path.parent_path());
}

std::unique_ptr<DeviceSession> open_device(const BackendConfig& backend, const RunConfig& config) {
    DeviceOptions options{config.allowlist, config.poll_interval};
    if (backend.kind == BackendConfig::Kind::simulator) {
        auto model = sim::load_app_model(read_text(backend.model, "app model"));
        return std::make_unique<DeviceSession>(std::make_unique<sim::SimulatedBackend>(std::move(model)), options,
                                               std::make_shared<ManualClock>());
    }
    WebDriverConfig wd;
    wd.base_url = backend.url;
    wd.connect_timeout = backend.connect_timeout;
    wd.read_timeout = backend.read_timeout;
    wd.capabilities = backend.capabilities;
    return std::make_unique<DeviceSession>(std::make_unique<WebDriverBackend>(wd), options);
}

std::string app_ref(const BackendConfig& backend) {
    if (!backend.app.empty() || backend.kind != BackendConfig::Kind::simulator) return backend.app;
    return sim::load_app_model(read_text(backend.model, "app model")).package;
}

std::shared_ptr<ChatClient> make_chat_client(const LlmConfig& llm) {
    if (llm.client == LlmConfig::Client::scripted) {
        if (llm.rules.empty()) throw ConfigError("scripted llm needs a rules file");
        return std::make_shared<ScriptedChatClient>(sim::load_scripted_llm(read_text(llm.rules, "llm rules")));
    }
    const char* key = std::getenv(llm.api_key_env.c_str());
    if (!key || !*key) throw ConfigError("environment variable " + llm.api_key_env + " is not set");
    return std::make_shared<HttpChatClient>(HttpChatConfig{llm.endpoint, llm.model, key});
}

std::unique_ptr<LlmAgent> make_agent(const RunConfig& config) {
    AgentConfig ac;
    ac.n_votes = config.migration.n_votes;
    ac.m_threshold = config.migration.m_threshold;
    ac.layout_budget = config.layout_budget;
    ac.retry = config.llm.retry;
    ac.parallel_votes = config.llm.parallel_votes;
    return std::make_unique<LlmAgent>(make_chat_client(config.llm), PromptLibrary::load(config.prompt_dir), ac);
}

}  // namespace testport
