#include "fixtures.hpp"

#include <chrono>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include "testport/chat.hpp"
#include "testport/errors.hpp"

namespace testport::testkit {

fs::path fixture_root() { return TESTPORT_FIXTURE_DIR; }
fs::path prompt_dir() { return PromptLibrary::default_dir(); }

std::string read_file(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot read " + path.string());
    std::ostringstream os;
    os << in.rdbuf();
    return os.str();
}

const std::vector<std::string>& fixture_names() {
    static const std::vector<std::string> names = {"browser_url", "todo_add", "todo_add_remove", "shop_register",
                                                   "mail_search"};
    return names;
}

Fixture load_fixture(const std::string& name) {
    Fixture f;
    f.name = name;
    f.dir = fixture_root() / name;
    f.source_app = sim::load_app_model(read_file(f.dir / "source_app.json"));
    f.target_app = sim::load_app_model(read_file(f.dir / "target_app.json"));
    f.source_test = parse_test_file(read_file(f.dir / "source_test.json"));
    f.expected_target = parse_test_file(read_file(f.dir / "expected_target.json"));
    f.ground_truth = parse_test_file(read_file(f.dir / "ground_truth.json"));
    f.category = read_file(f.dir / "category");
    while (!f.category.empty() && f.category.back() == '\n') f.category.pop_back();
    return f;
}

std::unique_ptr<DeviceSession> sim_session(const sim::AppModel& model, DeviceOptions options) {
    auto s = std::make_unique<DeviceSession>(std::make_unique<sim::SimulatedBackend>(model), options,
                                             std::make_shared<ManualClock>());
    s->start(model.package);
    return s;
}

std::unique_ptr<LlmAgent> scripted_agent(sim::ScriptedLLM llm, AgentConfig config) {
    config.retry.backoff = std::chrono::milliseconds(0);
    return std::make_unique<LlmAgent>(std::make_shared<ScriptedChatClient>(std::move(llm)),
                                      PromptLibrary::load(prompt_dir()), config);
}

std::unique_ptr<LlmAgent> scripted_agent(const fs::path& rules_file, AgentConfig config) {
    return scripted_agent(sim::load_scripted_llm(read_file(rules_file)), config);
}

FixtureRun migrate_fixture(const Fixture& f, const std::string& rules_file, MigrationConfig config) {
    auto source = sim_session(f.source_app);
    auto target = sim_session(f.target_app);
    auto agent = scripted_agent(f.dir / rules_file);
    const auto t0 = std::chrono::steady_clock::now();
    FixtureRun run;
    run.result = run_migration(f.source_test, *source, *target, *agent, config,
                               {f.source_app.package, f.target_app.package});
    run.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return run;
}

json toggle_app_json(const std::string& package) {
    auto screen = [](const char* label) {
        return json::array({
            {{"class", "android.widget.TextView"}, {"resource-id", "label"}, {"text", label}},
            {{"class", "android.widget.Button"}, {"resource-id", "toggle"}, {"text", "Toggle"}, {"clickable", "true"}},
        });
    };
    json doc = {
        {"package", package},
        {"initial_screen", "a"},
        {"screens", {{"a", screen("A")}, {"b", screen("B")}}},
        {"transitions",
         {{{"screen", "a"}, {"widget", {{"resource-id", "toggle"}}}, {"action", "click"}, {"effect", {{"type", "goto"}, {"screen", "b"}}}},
          {{"screen", "b"}, {"widget", {{"resource-id", "toggle"}}}, {"action", "click"}, {"effect", {{"type", "goto"}, {"screen", "a"}}}}}},
    };
    return doc;
}

sim::AppModel toggle_app(const std::string& package) { return sim::load_app_model(toggle_app_json(package).dump()); }

TestScript toggle_source(std::size_t size) {
    TestScript t;
    t.app_package = "com.example.toggle.source";
    Event click{{ActionName::click, {}}, EventType::gui, {}};
    click.widget.attributes["resource-id"] = "toggle";
    for (std::size_t i = 0; i + 1 < size; ++i) t.events.push_back(click);
    t.events.push_back(Event{{ActionName::wait_until_element_presence, {std::int64_t{10}, std::string("id"), std::string("toggle")}},
                             EventType::oracle, {}});
    return t;
}

json toggle_forever_llm_json() {
    return {{"rules",
             {{{"kind", "abstraction"}, {"response", "The test flips the toggle and checks it is shown."}},
              {{"kind", "screen_analysis"}, {"response", "A label and a Toggle button."}}}},
            {"default_response", R"({"event_type": "gui", "action": ["click"], "widget": {"resource-id": "toggle"}})"}};
}

sim::ScriptedLLM toggle_forever_llm() { return sim::load_scripted_llm(toggle_forever_llm_json().dump()); }

TempDir::TempDir() {
    std::string tmpl = (fs::temp_directory_path() / "testport-XXXXXX").string();
    if (!mkdtemp(tmpl.data())) throw std::runtime_error("mkdtemp failed");
    path_ = tmpl;
}

TempDir::~TempDir() {
    std::error_code ec;
    fs::remove_all(path_, ec);
}

}  // namespace testport::testkit
