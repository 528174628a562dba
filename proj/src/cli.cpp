#include "testport/cli.hpp"

#include <chrono>
#include <ctime>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>

#include <spawn.h>
#include <sys/wait.h>

#include <CLI11.hpp>

#include "testport/augmentor.hpp"
#include "testport/errors.hpp"
#include "testport/run_config.hpp"

extern char** environ;

namespace testport::cli {
namespace {

namespace fs = std::filesystem;

struct Options {
    std::string config;
    std::vector<std::string> tests;
    std::string source_backend;
    std::string target_backend;
    std::string llm;
    std::optional<std::size_t> n_votes;
    std::optional<std::size_t> m_threshold;
    std::optional<std::size_t> max_tries;
    std::optional<std::size_t> budget_multiplier;
    std::string policy;
    std::string out;
    std::string ground_truth;
    std::string transcript;
    std::string category;
    std::string success;
    std::size_t jobs = 1;
    std::vector<std::string> reports;
};

/// Usage problem detected after parsing; maps to kUsageError.
struct UsageError : Error {
    using Error::Error;
};

std::string read_file(const fs::path& path, const std::string& what) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw UsageError(what + " not found: " + path.string());
    std::ostringstream os;
    os << in.rdbuf();
    return os.str();
}

void write_file(const fs::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot write " + path.string());
    out << text;
}

TestScript read_test(const fs::path& path) { return parse_test_file(read_file(path, "test file")); }

RunConfig build_config(const Options& o) {
    RunConfig c;
    if (!o.config.empty()) {
        if (!fs::exists(o.config)) throw UsageError("config file not found: " + o.config);
        c = load_run_config(o.config);
    }
    auto override_backend = [](std::optional<BackendConfig>& slot, const std::string& spec) {
        if (spec.empty()) return;
        BackendConfig b = backend_from_spec(spec);
        if (slot) {
            b.app = slot->app;
            b.capabilities = slot->capabilities;
        }
        slot = b;
    };
    override_backend(c.source, o.source_backend);
    override_backend(c.target, o.target_backend);
    if (!o.llm.empty()) {
        if (o.llm == "live") {
            c.llm.client = LlmConfig::Client::live;
        } else {
            c.llm.client = LlmConfig::Client::scripted;
            c.llm.rules = o.llm;
        }
    }
    if (o.n_votes) c.migration.n_votes = *o.n_votes;
    if (o.m_threshold) c.migration.m_threshold = *o.m_threshold;
    if (o.max_tries) c.migration.max_wrong_tries_per_step = *o.max_tries;
    if (o.budget_multiplier) c.migration.budget_multiplier = *o.budget_multiplier;
    if (!o.policy.empty()) {
        auto p = parse_match_policy(o.policy);
        if (!p) throw UsageError("unknown policy '" + o.policy + "' (strict, locator, action_only)");
        c.policy = *p;
    }
    if (!o.out.empty()) c.output_dir = o.out;
    c.validate();
    return c;
}

fs::path make_run_dir(const fs::path& root, const std::string& command) {
    const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    localtime_r(&now, &tm);
    std::ostringstream stamp;
    stamp << std::put_time(&tm, "%Y%m%d-%H%M%S") << "-" << command;
    fs::create_directories(root);
    fs::path dir = root / stamp.str();
    for (int i = 2; !fs::create_directory(dir); ++i) dir = root / (stamp.str() + "-" + std::to_string(i));
    return dir;
}

const BackendConfig& require(const std::optional<BackendConfig>& b, const char* which) {
    if (!b) throw UsageError(std::string("no ") + which + " backend configured (use --" + which + "-backend)");
    return *b;
}

std::optional<bool> parse_success(const std::string& s) {
    if (s.empty()) return std::nullopt;
    if (s == "true" || s == "yes" || s == "1") return true;
    if (s == "false" || s == "no" || s == "0") return false;
    throw UsageError("--success expects true or false");
}

// ---------------------------------------------------------------------------

int cmd_augment(const Options& o, std::ostream& out) {
    const RunConfig config = build_config(o);
    if (o.tests.size() != 1) throw UsageError("augment takes exactly one --test");
    const fs::path test_path = o.tests.front();
    const TestScript source = read_test(test_path);
    const auto& backend = require(config.source, "source");

    auto device = open_device(backend, config);
    device->start(app_ref(backend), true);
    const TestScript augmented = augment(source, *device);

    const fs::path dir = make_run_dir(config.output_dir, "augment");
    const fs::path file = dir / (test_path.stem().string() + ".augmented.json");
    write_file(file, serialize_test_file(augmented));
    out << file.string() << "\n";
    return kSuccess;
}

int cmd_abstract(const Options& o, std::ostream& out) {
    const RunConfig config = build_config(o);
    if (o.tests.size() != 1) throw UsageError("abstract takes exactly one --test");
    const TestScript script = read_test(o.tests.front());
    auto agent = make_agent(config);
    const auto abstract = agent->abstract_test(script);

    const fs::path dir = make_run_dir(config.output_dir, "abstract");
    const json doc = {{"summary", abstract.summary},
                      {"source_package", abstract.source_package},
                      {"source_event_count", abstract.source_event_count},
                      {"source_oracle_count", abstract.source_oracle_count}};
    write_file(dir / "abstract.json", doc.dump(2) + "\n");
    out << abstract.summary << "\n" << (dir / "abstract.json").string() << "\n";
    return kSuccess;
}

int migrate_one(const RunConfig& config, const Options& o, const fs::path& test_path, std::ostream& out) {
    const TestScript source = read_test(test_path);
    auto agent = make_agent(config);
    const auto& source_backend = require(config.source, "source");
    const auto& target_backend = require(config.target, "target");
    const AppRefs apps{app_ref(source_backend), app_ref(target_backend)};
    auto source_device = open_device(source_backend, config);
    auto target_device = open_device(target_backend, config);

    const fs::path dir = make_run_dir(config.output_dir, "migrate");
    std::ofstream transcript(dir / "transcript.jsonl", std::ios::binary);
    auto sink = [&](const json& line) { transcript << line.dump() << "\n" << std::flush; };

    const MigrationResult result = run_migration(source, *source_device, *target_device, *agent, config.migration, apps, sink);
    write_file(dir / "augmented.json", serialize_test_file(result.augmented_source));
    write_file(dir / "target.json", serialize_test_file(result.target_test));

    TransferReport report;
    report.name = test_path.stem().string();
    report.category = o.category;
    report.input_tokens = result.totals.input_tokens;
    report.output_tokens = result.totals.output_tokens;
    report.cost_usd = cost(result.exchanges, config.prices);
    report.transfer_seconds = result.totals.wall_seconds;
    report.success = parse_success(o.success);
    if (!o.ground_truth.empty()) {
        const TestScript truth = read_test(o.ground_truth);
        const auto metrics = evaluate_transfer(result.target_test, truth, config.policy);
        report.gui = metrics.gui;
        report.oracle = metrics.oracle;
        report.reduction = metrics.reduction;
    }
    json doc = to_json(report);
    if (o.ground_truth.empty()) {
        doc["gui"] = nullptr;
        doc["oracle"] = nullptr;
    }
    doc["status"] = to_string(result.status);
    doc["abort_reason"] = result.abort_reason.empty() ? json(nullptr) : json(result.abort_reason);
    doc["policy"] = to_string(config.policy);
    write_file(dir / "report.json", doc.dump(2) + "\n");

    out << to_string(result.status);
    if (!result.abort_reason.empty()) out << " (" << result.abort_reason << ")";
    out << ": " << result.target_test.events.size() << " events, " << result.totals.llm_calls << " llm calls\n";
    out << dir.string() << "\n";

    switch (result.status) {
        case MigrationStatus::Complete: return kSuccess;
        case MigrationStatus::BudgetExhausted: return kBudgetExhausted;
        case MigrationStatus::Aborted: return kAborted;
    }
    return kAborted;
}

/// Re-invokes the binary once per test, at most `jobs` at a time.
int run_workers(const std::vector<std::string>& base_args, const std::vector<std::string>& tests, std::size_t jobs,
                const std::string& self_exe, std::ostream& out) {
    int worst = kSuccess;
    std::map<pid_t, std::string> running;
    auto reap = [&] {
        int status = 0;
        const pid_t pid = waitpid(-1, &status, 0);
        if (pid <= 0) return;
        const int code = WIFEXITED(status) ? WEXITSTATUS(status) : kAborted;
        out << running[pid] << ": exit " << code << "\n";
        worst = std::max(worst, code);
        running.erase(pid);
    };
    for (const auto& test : tests) {
        while (running.size() >= jobs) reap();
        std::vector<std::string> args = base_args;
        args.push_back("--test");
        args.push_back(test);
        std::vector<char*> argv;
        for (auto& a : args) argv.push_back(a.data());
        argv.push_back(nullptr);
        pid_t pid = 0;
        if (posix_spawn(&pid, self_exe.c_str(), nullptr, nullptr, argv.data(), environ) != 0)
            throw Error("cannot spawn worker " + self_exe);
        running[pid] = test;
    }
    while (!running.empty()) reap();
    return worst;
}

int cmd_migrate(const Options& o, const std::vector<std::string>& raw_args, const std::string& self_exe,
                std::ostream& out) {
    const RunConfig config = build_config(o);
    if (o.tests.empty()) throw UsageError("migrate needs --test");
    // Fail on the key before any device work.
    make_chat_client(config.llm);

    if (o.tests.size() > 1 && o.jobs > 1) {
        std::vector<std::string> base;
        for (std::size_t i = 0; i < raw_args.size(); ++i) {
            const auto& a = raw_args[i];
            if (a == "--test" || a == "--jobs") {
                ++i;
                continue;
            }
            if (a.starts_with("--test=") || a.starts_with("--jobs=")) continue;
            base.push_back(a);
        }
        return run_workers(base, o.tests, o.jobs, self_exe, out);
    }
    int worst = kSuccess;
    for (const auto& test : o.tests) worst = std::max(worst, migrate_one(config, o, test, out));
    return worst;
}

int cmd_run(const Options& o, std::ostream& out, std::ostream& err) {
    const RunConfig config = build_config(o);
    if (o.tests.size() != 1) throw UsageError("run takes exactly one --test");
    const TestScript script = read_test(o.tests.front());
    const auto& backend = require(config.target, "target");
    auto device = open_device(backend, config);
    device->start(app_ref(backend), true);
    for (std::size_t i = 0; i < script.events.size(); ++i) {
        const auto outcome = device->execute_event(script.events[i]);
        out << "step " << (i + 1) << ": " << to_string(script.events[i].action.name) << " -> "
            << to_string(outcome.kind) << "\n";
        if (!outcome.ok()) {
            err << "step " << (i + 1) << " failed: " << outcome.message << "\n";
            return kEvaluationError;
        }
    }
    return kSuccess;
}

struct TranscriptTotals {
    std::uint64_t input_tokens = 0;
    std::uint64_t output_tokens = 0;
    double seconds = 0.0;
};

TranscriptTotals read_transcript(const fs::path& path) {
    std::istringstream lines(read_file(path, "transcript"));
    TranscriptTotals t;
    std::string line;
    while (std::getline(lines, line)) {
        if (line.empty()) continue;
        const json doc = json::parse(line);
        if (doc.value("type", std::string()) == "result") {
            t.seconds = doc.value("wall_ms", 0.0) / 1000.0;
            continue;
        }
        for (const auto& r : doc.value("exchanges", json::array())) {
            t.input_tokens += r.value("input_tokens", std::uint64_t{0});
            t.output_tokens += r.value("output_tokens", std::uint64_t{0});
        }
    }
    return t;
}

int cmd_eval(const Options& o, std::ostream& out) {
    const RunConfig config = build_config(o);
    if (o.tests.size() != 1) throw UsageError("eval takes exactly one --test (the transferred test)");
    if (o.ground_truth.empty()) throw UsageError("eval needs --ground-truth");
    const TestScript transferred = read_test(o.tests.front());
    const TestScript truth = read_test(o.ground_truth);

    TransferReport report = evaluate_transfer(transferred, truth, config.policy);
    report.name = fs::path(o.tests.front()).stem().string();
    report.category = o.category;
    report.success = parse_success(o.success);
    if (!o.transcript.empty()) {
        const auto totals = read_transcript(o.transcript);
        report.input_tokens = totals.input_tokens;
        report.output_tokens = totals.output_tokens;
        report.transfer_seconds = totals.seconds;
        report.cost_usd = cost(totals.input_tokens, totals.output_tokens, config.prices);
    }
    json doc = to_json(report);
    doc["policy"] = to_string(config.policy);

    const fs::path dir = make_run_dir(config.output_dir, "eval");
    write_file(dir / "report.json", doc.dump(2) + "\n");
    const std::vector<TransferReport> one{report};
    const std::string table = render_table(one);
    write_file(dir / "table.txt", table);
    out << table << (dir / "report.json").string() << "\n";
    return kSuccess;
}

int cmd_report(const Options& o, std::ostream& out) {
    const RunConfig config = build_config(o);
    if (o.reports.empty()) throw UsageError("report needs one or more report.json files");
    std::vector<TransferReport> reports;
    for (const auto& path : o.reports) {
        json doc;
        try {
            doc = json::parse(read_file(path, "report"));
        } catch (const json::parse_error& e) {
            throw MalformedDocument(path + ": " + e.what());
        }
        auto r = report_from_json(doc);
        if (!o.category.empty()) r.category = o.category;
        reports.push_back(std::move(r));
    }
    const std::string table = render_table(reports);
    const fs::path dir = make_run_dir(config.output_dir, "report");
    write_file(dir / "table.txt", table);
    write_file(dir / "summary.json", to_json(aggregate(reports)).dump(2) + "\n");
    out << table << dir.string() << "\n";
    return kSuccess;
}

}  // namespace

int main(int argc, const char* const* argv, std::ostream& out, std::ostream& err, const std::string& self_exe) {
    CLI::App app{"Migrates UI tests between Android apps with an LLM-guided explorer", "testport"};
    app.require_subcommand(1);
    Options o;

    auto common = [&](CLI::App* cmd) {
        cmd->add_option("--config", o.config, "TOML run configuration");
        cmd->add_option("--out", o.out, "Output root; each run gets a timestamped subdirectory");
    };
    auto tests = [&](CLI::App* cmd) { cmd->add_option("--test", o.tests, "Test file (event-model JSON)"); };
    auto devices = [&](CLI::App* cmd) {
        cmd->add_option("--source-backend", o.source_backend, "Simulator model path or WebDriver URL");
        cmd->add_option("--target-backend", o.target_backend, "Simulator model path or WebDriver URL");
    };
    auto llm = [&](CLI::App* cmd) {
        cmd->add_option("--llm", o.llm, "Scripted rules file, or 'live'");
        cmd->add_option("--n-votes", o.n_votes, "Responses per event query");
        cmd->add_option("--m-threshold", o.m_threshold, "Votes a key needs to survive the merge");
    };
    auto eval_opts = [&](CLI::App* cmd) {
        cmd->add_option("--policy", o.policy, "Event match policy: strict, locator, action_only");
        cmd->add_option("--category", o.category, "Category label for the report");
        cmd->add_option("--success", o.success, "Manual success annotation (true/false)");
    };

    auto* augment_cmd = app.add_subcommand("augment", "Harvest widget attributes by running a test on the source app");
    common(augment_cmd);
    tests(augment_cmd);
    devices(augment_cmd);

    auto* abstract_cmd = app.add_subcommand("abstract", "Summarize a test with the abstraction prompt");
    common(abstract_cmd);
    tests(abstract_cmd);
    llm(abstract_cmd);

    auto* migrate_cmd = app.add_subcommand("migrate", "Migrate a source test to the target app");
    common(migrate_cmd);
    tests(migrate_cmd);
    devices(migrate_cmd);
    llm(migrate_cmd);
    eval_opts(migrate_cmd);
    migrate_cmd->add_option("--max-tries", o.max_tries, "Wrong tries per step before backtracking");
    migrate_cmd->add_option("--budget-multiplier", o.budget_multiplier, "Event budget as a multiple of the source length");
    migrate_cmd->add_option("--ground-truth", o.ground_truth, "Ground-truth target test for metrics");
    migrate_cmd->add_option("--jobs", o.jobs, "Parallel worker processes for several --test files")
        ->check(CLI::PositiveNumber);

    auto* run_cmd = app.add_subcommand("run", "Replay a test on the target app");
    common(run_cmd);
    tests(run_cmd);
    devices(run_cmd);

    auto* eval_cmd = app.add_subcommand("eval", "Score a transferred test against ground truth");
    common(eval_cmd);
    tests(eval_cmd);
    eval_opts(eval_cmd);
    eval_cmd->add_option("--ground-truth", o.ground_truth, "Ground-truth target test")->required();
    eval_cmd->add_option("--transcript", o.transcript, "Migration transcript for token and time totals");

    auto* report_cmd = app.add_subcommand("report", "Aggregate report.json files into a table");
    common(report_cmd);
    report_cmd->add_option("--category", o.category, "Override the category of every report");
    report_cmd->add_option("reports", o.reports, "report.json files")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? kSuccess : kUsageError;
    }

    std::vector<std::string> raw_args(argv, argv + argc);
    try {
        if (app.got_subcommand(augment_cmd)) return cmd_augment(o, out);
        if (app.got_subcommand(abstract_cmd)) return cmd_abstract(o, out);
        if (app.got_subcommand(migrate_cmd)) return cmd_migrate(o, raw_args, self_exe, out);
        if (app.got_subcommand(run_cmd)) return cmd_run(o, out, err);
        if (app.got_subcommand(eval_cmd)) return cmd_eval(o, out);
        if (app.got_subcommand(report_cmd)) return cmd_report(o, out);
    } catch (const UsageError& e) {
        err << "error: " << e.what() << "\n";
        return kUsageError;
    } catch (const ConfigError& e) {
        err << "config error: " << e.what() << "\n";
        return kUsageError;
    } catch (const MalformedDocument& e) {
        err << "error: " << e.what() << "\n";
        return kUsageError;
    } catch (const SchemaViolation& e) {
        err << "error: " << e.what() << "\n";
        return kUsageError;
    } catch (const InvalidSourceTest& e) {
        err << "error: " << e.what() << "\n";
        return kUsageError;
    } catch (const AugmentationFailed& e) {
        err << "error: " << e.what() << "\n";
        return kAborted;
    } catch (const EmptyGroundTruth& e) {
        err << "error: " << e.what() << "\n";
        return kEvaluationError;
    } catch (const Error& e) {
        err << "error: " << e.what() << "\n";
        return app.got_subcommand(eval_cmd) || app.got_subcommand(report_cmd) ? kEvaluationError : kAborted;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return kAborted;
    }
    return kUsageError;
}

}  // namespace testport::cli
