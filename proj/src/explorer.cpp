#include "testport/explorer.hpp"

#include <chrono>

#include "testport/augmentor.hpp"
#include "testport/errors.hpp"

namespace testport {
namespace {

json exchanges_json(std::span<const ChatExchangeRecord> records) {
    json out = json::array();
    for (const auto& r : records) out.push_back(to_json(r));
    return out;
}

double ms_since(std::chrono::steady_clock::time_point start) {
    return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
}

}  // namespace

void MigrationConfig::validate() const {
    if (n_votes < 1) throw ConfigError("n_votes must be at least 1");
    if (m_threshold < 1 || m_threshold > n_votes) throw ConfigError("m_threshold must be in [1, n_votes]");
    if (max_wrong_tries_per_step < 1) throw ConfigError("max_wrong_tries_per_step must be at least 1");
    if (budget_multiplier < 1) throw ConfigError("budget_multiplier must be at least 1");
}

std::size_t MigrationConfig::iteration_limit(std::size_t source_event_count) const {
    if (max_iterations > 0) return max_iterations;
    return std::max<std::size_t>(100, 10 * budget_multiplier * source_event_count * max_wrong_tries_per_step);
}

std::string_view to_string(Scenario s) {
    switch (s) {
        case Scenario::S1_Progress: return "S1_Progress";
        case Scenario::S2_DriverException: return "S2_DriverException";
        case Scenario::S3_OracleFailed: return "S3_OracleFailed";
        case Scenario::S4_NoChange: return "S4_NoChange";
    }
    return "?";
}

std::string_view to_string(MigrationStatus s) {
    switch (s) {
        case MigrationStatus::Complete: return "Complete";
        case MigrationStatus::BudgetExhausted: return "BudgetExhausted";
        case MigrationStatus::Aborted: return "Aborted";
    }
    return "?";
}

Scenario classify_outcome(const ExecutionOutcome& outcome, const Event& event, const AppState& pre,
                          const std::optional<AppState>& post) {
    switch (outcome.kind) {
        case ExecutionOutcome::Kind::driver_error: return Scenario::S2_DriverException;
        case ExecutionOutcome::Kind::oracle_failed: return Scenario::S3_OracleFailed;
        case ExecutionOutcome::Kind::executed: break;
    }
    if (event.is_oracle()) return Scenario::S1_Progress;
    if (post && state_equals(pre, *post)) return Scenario::S4_NoChange;
    return Scenario::S1_Progress;
}

bool MigrationSession::is_dead_end(std::size_t step, const Event& event) const {
    auto it = dead_ends.find(step);
    return it != dead_ends.end() && it->second.contains(event_signature(event));
}

std::vector<Event> MigrationSession::events() const {
    std::vector<Event> out;
    out.reserve(performed.size());
    for (const auto& p : performed) out.push_back(p.event);
    return out;
}

const std::string& MigrationSession::expected_hash() const {
    return performed.empty() ? initial_hash : performed.back().post_hash;
}

void MigrationSession::push(Event event, std::string post_hash) {
    if (event.is_oracle()) ++oracles_transferred;
    performed.push_back({std::move(event), std::move(post_hash)});
}

Event MigrationSession::pop() {
    Event out = std::move(performed.back().event);
    performed.pop_back();
    if (out.is_oracle()) --oracles_transferred;
    return out;
}

EndCheck check_end(const MigrationSession& session, const AbstractSourceTest& source, const MigrationConfig& config) {
    if (session.oracles_transferred == source.source_oracle_count) return EndCheck::Complete;
    if (session.performed.size() >= config.budget_multiplier * source.source_event_count) return EndCheck::BudgetExhausted;
    return EndCheck::Continue;
}

json to_json(const FailureReport& r) {
    json out = {{"dead_end", nullptr}, {"backtrack", nullptr}, {"replay", nullptr}, {"stuck", r.stuck}};
    if (!r.dead_end_signature.empty()) out["dead_end"] = {{"step", r.dead_end_step}, {"signature", r.dead_end_signature}};
    if (r.backtracked) out["backtrack"] = {{"step", r.backtracked_step}, {"event", event_to_json(*r.backtracked)}};
    if (r.replayed)
        out["replay"] = {{"events", r.replayed_events},
                         {"expected_hash", r.expected_hash},
                         {"actual_hash", r.actual_hash},
                         {"restored", r.expected_hash == r.actual_hash}};
    return out;
}

FailureReport handle_failure(MigrationSession& session, const std::optional<Event>& failed, const std::string& message,
                             bool executed, DeviceSession& target, const MigrationConfig& config) {
    FailureReport report;
    const std::size_t step = session.step();
    if (failed) {
        report.dead_end_step = step;
        report.dead_end_signature = event_signature(*failed);
        session.dead_ends[step].insert(report.dead_end_signature);
        session.pending_repair = PendingRepair{*failed, message};
    }
    ++session.wrong_tries_at_step;

    bool replay = executed;
    if (session.wrong_tries_at_step >= config.max_wrong_tries_per_step) {
        if (session.performed.empty()) {
            report.stuck = true;
            return report;
        }
        report.backtracked_step = session.performed.size();
        report.backtracked = session.pop();
        session.dead_ends[report.backtracked_step].insert(event_signature(*report.backtracked));
        session.wrong_tries_at_step = 0;
        session.pending_repair = PendingRepair{
            *report.backtracked, "backtracked: no working event was found for the step after this one within " +
                                     std::to_string(config.max_wrong_tries_per_step) + " attempts"};
        replay = true;
    }

    if (replay) {
        const auto events = session.events();
        target.reset_and_replay(events);
        report.replayed = true;
        report.replayed_events = events.size();
        report.expected_hash = session.expected_hash();
        report.actual_hash = layout_hash(target.capture_state().layout);
    }
    return report;
}

MigrationResult run_migration(const TestScript& source, DeviceSession& source_device, DeviceSession& target_device,
                              LlmAgent& agent, const MigrationConfig& config, const AppRefs& apps,
                              const TranscriptSink& sink) {
    config.validate();
    if (count_oracles(source) == 0) throw InvalidSourceTest("source test has no oracle events");
    agent.set_votes(config.n_votes, config.m_threshold);

    const auto started = std::chrono::steady_clock::now();
    const std::size_t first_exchange = agent.exchanges().size();
    MigrationResult result;
    MigrationSession session;
    result.target_test.app_package = apps.target;

    auto emit = [&](json entry) {
        if (sink) sink(entry);
        result.transcript.push_back(std::move(entry));
    };
    auto finish = [&](MigrationStatus status, std::string reason) {
        result.status = status;
        result.abort_reason = std::move(reason);
        result.target_test.events = session.events();
        result.dead_ends = session.dead_ends;
        result.exchanges.assign(agent.exchanges().begin() + static_cast<std::ptrdiff_t>(first_exchange),
                                agent.exchanges().end());
        for (const auto& r : result.exchanges) {
            result.totals.input_tokens += r.input_tokens;
            result.totals.output_tokens += r.output_tokens;
        }
        result.totals.llm_calls = result.exchanges.size();
        result.totals.wall_seconds = ms_since(started) / 1000.0;
        json line = {{"type", "result"},
                     {"status", to_string(status)},
                     {"performed", result.target_test.events.size()},
                     {"oracles_transferred", session.oracles_transferred},
                     {"input_tokens", result.totals.input_tokens},
                     {"output_tokens", result.totals.output_tokens},
                     {"llm_calls", result.totals.llm_calls},
                     {"wall_ms", ms_since(started)}};
        if (!result.abort_reason.empty()) line["reason"] = result.abort_reason;
        emit(std::move(line));
        return result;
    };

    // Augmentation and abstraction.
    try {
        source_device.start(apps.source, true);
        result.augmented_source = augment(source, source_device);
    } catch (const Error& e) {
        emit({{"type", "augmentation"}, {"error", e.what()}});
        return finish(MigrationStatus::Aborted, std::string("augmentation-failed: ") + e.what());
    }
    emit({{"type", "augmentation"}, {"events", events_to_json(result.augmented_source.events)}});

    try {
        const auto before = agent.exchanges().size();
        result.abstract_test = agent.abstract_test(result.augmented_source);
        emit({{"type", "abstraction"},
              {"summary", result.abstract_test.summary},
              {"source_event_count", result.abstract_test.source_event_count},
              {"source_oracle_count", result.abstract_test.source_oracle_count},
              {"exchanges", exchanges_json(std::span(agent.exchanges()).subspan(before))}});
    } catch (const Error& e) {
        return finish(MigrationStatus::Aborted, std::string("llm-failure: ") + e.what());
    }

    try {
        target_device.start(apps.target, true);
    } catch (const Error& e) {
        return finish(MigrationStatus::Aborted, std::string("backend-failure: ") + e.what());
    }

    const std::size_t limit = config.iteration_limit(result.abstract_test.source_event_count);
    for (std::size_t iteration = 1;; ++iteration) {
        switch (check_end(session, result.abstract_test, config)) {
            case EndCheck::Complete: return finish(MigrationStatus::Complete, "");
            case EndCheck::BudgetExhausted: return finish(MigrationStatus::BudgetExhausted, "");
            case EndCheck::Continue: break;
        }
        if (iteration > limit) return finish(MigrationStatus::Aborted, "iteration-limit");

        const auto iteration_start = std::chrono::steady_clock::now();
        const auto before = agent.exchanges().size();
        const std::size_t step = session.step();
        json entry = {{"type", "iteration"}, {"iteration", iteration}, {"step", step}};
        std::string abort;

        try {
            const AppState pre = target_device.capture_state();
            const std::string pre_hash = layout_hash(pre.layout);
            if (session.initial_hash.empty() && session.performed.empty()) session.initial_hash = pre_hash;
            entry["pre_hash"] = pre_hash;

            PromptContext ctx;
            ctx.abstract_test = result.abstract_test;
            ctx.current_layout = pre.layout;
            ctx.analysis_report = agent.analyze_screen(pre, step);
            ctx.performed_events = session.events();
            PromptKind kind = session.performed.empty() ? PromptKind::initial_event : PromptKind::next_event;
            if (session.pending_repair) {
                kind = PromptKind::repair_event;
                ctx.last_wrong_event = session.pending_repair->event;
                ctx.last_exception = session.pending_repair->message;
            }
            entry["prompt_kind"] = to_string(kind);
            entry["analysis_report"] = ctx.analysis_report;

            auto gen = agent.try_generate_event(kind, ctx, step);
            entry["prompt"] = {{"system", gen.prompt.system}, {"user", gen.prompt.user}};
            entry["merged"] = gen.merged;

            std::optional<FailureReport> failure;
            if (!gen.event) {
                entry["scenario"] = "InvalidResponse";
                entry["event"] = nullptr;
                entry["outcome"] = {{"kind", gen.error_kind}, {"message", gen.error}};
                failure = handle_failure(session, std::nullopt, gen.error, false, target_device, config);
            } else if (session.is_dead_end(step, *gen.event)) {
                entry["scenario"] = "DeadEndRejected";
                entry["event"] = event_to_json(*gen.event);
                entry["outcome"] = nullptr;
                failure = handle_failure(session, gen.event, "event already failed at this step", false,
                                         target_device, config);
            } else {
                const Event& event = *gen.event;
                entry["event"] = event_to_json(event);
                const auto outcome = target_device.execute_event(event);
                std::optional<AppState> post;
                if (outcome.ok()) post = target_device.capture_state();
                const Scenario scenario = classify_outcome(outcome, event, pre, post);
                entry["scenario"] = to_string(scenario);
                entry["outcome"] = {{"kind", to_string(outcome.kind)}, {"message", outcome.message}};
                if (post) entry["post_hash"] = layout_hash(post->layout);

                if (scenario == Scenario::S1_Progress) {
                    session.push(event, layout_hash(post->layout));
                    session.wrong_tries_at_step = 0;
                    session.pending_repair.reset();
                } else {
                    const std::string message =
                        scenario == Scenario::S4_NoChange ? std::string(kNoChangeMessage) : outcome.message;
                    failure = handle_failure(session, event, message, true, target_device, config);
                }
            }
            if (failure) {
                json f = to_json(*failure);
                for (auto& [k, v] : f.items()) entry[k] = v;
                if (failure->stuck) abort = "stuck-at-initial-screen";
            } else {
                entry["dead_end"] = nullptr;
                entry["backtrack"] = nullptr;
                entry["replay"] = nullptr;
            }
        } catch (const ReplayDiverged& e) {
            entry["error"] = e.what();
            abort = "replay-divergence";
        } catch (const TransportError& e) {
            entry["error"] = e.what();
            abort = std::string("llm-failure: ") + e.what();
        } catch (const ProviderError& e) {
            entry["error"] = e.what();
            abort = std::string("llm-failure: ") + e.what();
        } catch (const Error& e) {
            entry["error"] = e.what();
            abort = std::string("backend-failure: ") + e.what();
        }

        entry["wrong_tries"] = session.wrong_tries_at_step;
        entry["performed"] = session.performed.size();
        const auto records = std::span(agent.exchanges()).subspan(before);
        std::uint64_t in = 0, out = 0;
        for (const auto& r : records) {
            in += r.input_tokens;
            out += r.output_tokens;
        }
        entry["exchanges"] = exchanges_json(records);
        entry["input_tokens"] = in;
        entry["output_tokens"] = out;
        entry["wall_ms"] = ms_since(iteration_start);
        emit(std::move(entry));
        if (!abort.empty()) return finish(MigrationStatus::Aborted, abort);
    }
}

}  // namespace testport
