#pragma once

#include <filesystem>
#include <memory>
#include <string>
#include <vector>

#include "testport/agent.hpp"
#include "testport/device.hpp"
#include "testport/explorer.hpp"
#include "testport/simulator.hpp"

namespace testport::testkit {

namespace fs = std::filesystem;

fs::path fixture_root();
fs::path prompt_dir();
std::string read_file(const fs::path& path);

/// The five bundled app pairs.
const std::vector<std::string>& fixture_names();

struct Fixture {
    std::string name;
    fs::path dir;
    sim::AppModel source_app;
    sim::AppModel target_app;
    TestScript source_test;
    TestScript expected_target;
    TestScript ground_truth;
    std::string category;
};

Fixture load_fixture(const std::string& name);

/// Started session over a simulator with virtual time.
std::unique_ptr<DeviceSession> sim_session(const sim::AppModel& model, DeviceOptions options = {});

std::unique_ptr<LlmAgent> scripted_agent(const fs::path& rules_file, AgentConfig config = {});
std::unique_ptr<LlmAgent> scripted_agent(sim::ScriptedLLM llm, AgentConfig config = {});

struct FixtureRun {
    MigrationResult result;
    double seconds = 0.0;
};

FixtureRun migrate_fixture(const Fixture& f, const std::string& rules_file = "llm_rules.json",
                           MigrationConfig config = {});

/// Two-screen app whose `toggle` button flips between screens "a" and "b".
sim::AppModel toggle_app(const std::string& package);
json toggle_app_json(const std::string& package);
/// `size` events on the toggle app: size-1 clicks then one presence oracle.
TestScript toggle_source(std::size_t size);
/// Model that answers every event prompt with a click on `toggle`.
sim::ScriptedLLM toggle_forever_llm();
/// Same rules in the on-disk rules-file format.
json toggle_forever_llm_json();

/// Mkdtemp directory removed on destruction.
class TempDir {
public:
    TempDir();
    ~TempDir();
    const fs::path& path() const { return path_; }

private:
    fs::path path_;
};

}  // namespace testport::testkit
