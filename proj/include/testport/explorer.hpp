#pragma once

#include <functional>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "testport/agent.hpp"
#include "testport/device.hpp"

namespace testport {

struct MigrationConfig {
    std::size_t n_votes = 3;
    std::size_t m_threshold = 2;
    std::size_t max_wrong_tries_per_step = 3;
    std::size_t budget_multiplier = 3;
    /// Hard stop on loop iterations; 0 derives a bound from the budget.
    std::size_t max_iterations = 0;

    /// Throws ConfigError.
    void validate() const;
    std::size_t iteration_limit(std::size_t source_event_count) const;
};

enum class Scenario { S1_Progress, S2_DriverException, S3_OracleFailed, S4_NoChange };

std::string_view to_string(Scenario s);

/// `post` is only consulted for executed events.
Scenario classify_outcome(const ExecutionOutcome& outcome, const Event& event, const AppState& pre,
                          const std::optional<AppState>& post);

inline constexpr std::string_view kNoChangeMessage = "event executed but produced no UI change";

struct PerformedEvent {
    Event event;
    std::string post_hash;
};

struct PendingRepair {
    Event event;
    std::string message;
};

struct MigrationSession {
    std::vector<PerformedEvent> performed;
    std::map<std::size_t, std::set<std::string>> dead_ends;
    std::size_t wrong_tries_at_step = 0;
    std::size_t oracles_transferred = 0;
    std::optional<PendingRepair> pending_repair;
    std::string initial_hash;

    /// 1-based index of the event being searched for.
    std::size_t step() const { return performed.size() + 1; }
    bool is_dead_end(std::size_t step, const Event& event) const;
    std::vector<Event> events() const;
    /// Hash the device should show once `performed` has been replayed.
    const std::string& expected_hash() const;
    void push(Event event, std::string post_hash);
    Event pop();
};

enum class EndCheck { Continue, Complete, BudgetExhausted };

/// Complete is checked first.
EndCheck check_end(const MigrationSession& session, const AbstractSourceTest& source, const MigrationConfig& config);

struct FailureReport {
    std::size_t dead_end_step = 0;
    std::string dead_end_signature;
    std::optional<Event> backtracked;  ///< popped performed event, if the threshold tripped
    std::size_t backtracked_step = 0;
    bool stuck = false;                ///< threshold tripped with nothing to pop
    bool replayed = false;
    std::size_t replayed_events = 0;
    std::string expected_hash;
    std::string actual_hash;
};

json to_json(const FailureReport& report);

/// Registers a wrong try for `failed` at the current step and restores the
/// device. When the try counter reaches the threshold, the last performed
/// event is popped and marked dead at its own step before replaying.
/// `executed` says whether the event reached the device (replay is skipped
/// otherwise unless a backtrack happened). Throws ReplayDiverged.
FailureReport handle_failure(MigrationSession& session, const std::optional<Event>& failed, const std::string& message,
                             bool executed, DeviceSession& target, const MigrationConfig& config);

enum class MigrationStatus { Complete, BudgetExhausted, Aborted };

std::string_view to_string(MigrationStatus s);

struct MigrationTotals {
    std::uint64_t input_tokens = 0;
    std::uint64_t output_tokens = 0;
    std::size_t llm_calls = 0;
    double wall_seconds = 0.0;
};

struct MigrationResult {
    MigrationStatus status = MigrationStatus::Aborted;
    std::string abort_reason;
    TestScript target_test;
    TestScript augmented_source;
    AbstractSourceTest abstract_test;
    std::vector<json> transcript;
    std::vector<ChatExchangeRecord> exchanges;
    MigrationTotals totals;
    std::map<std::size_t, std::set<std::string>> dead_ends;
};

struct AppRefs {
    std::string source;
    std::string target;
};

using TranscriptSink = std::function<void(const json&)>;

/// Augments on `source_device`, abstracts, then explores `target_device`
/// until every source oracle has a counterpart or the budget runs out.
/// Throws InvalidSourceTest for sources without oracles; backend and LLM
/// failures during exploration end in Aborted with the reason.
MigrationResult run_migration(const TestScript& source, DeviceSession& source_device, DeviceSession& target_device,
                              LlmAgent& agent, const MigrationConfig& config, const AppRefs& apps,
                              const TranscriptSink& sink = {});

}  // namespace testport
