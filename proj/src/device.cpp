#include "testport/device.hpp"

#include <algorithm>
#include <thread>

#include "testport/errors.hpp"

namespace testport {

void SystemClock::sleep_for(Milliseconds duration) { std::this_thread::sleep_for(duration); }

bool state_equals(const AppState& a, const AppState& b) {
    if (a.layout == b.layout) return true;
    return canonical_layout(a.layout) == canonical_layout(b.layout);
}

std::string_view to_string(ExecutionOutcome::Kind kind) {
    switch (kind) {
        case ExecutionOutcome::Kind::executed: return "Executed";
        case ExecutionOutcome::Kind::driver_error: return "DriverError";
        case ExecutionOutcome::Kind::oracle_failed: return "OracleFailed";
    }
    return "?";
}

DeviceSession::DeviceSession(std::unique_ptr<DeviceBackend> backend, DeviceOptions options, std::shared_ptr<Clock> clock)
    : backend_(std::move(backend)), options_(std::move(options)), clock_(std::move(clock)) {}

DeviceSession::~DeviceSession() {
    if (backend_ && live_) {
        try {
            backend_->shutdown();
        } catch (...) {
        }
    }
}

DeviceSession::DeviceSession(DeviceSession&&) noexcept = default;
DeviceSession& DeviceSession::operator=(DeviceSession&&) noexcept = default;

void DeviceSession::start(const std::string& app_ref, bool fresh_install) {
    backend_->launch(app_ref, fresh_install);
    app_ref_ = app_ref;
    sequence_ = 0;
    live_ = true;
}

void DeviceSession::require_live() const {
    if (!live_) throw StaleSession("device session has not been started");
}

AppState DeviceSession::capture_state() {
    require_live();
    AppState state;
    state.layout = process_layout(backend_->page_source(), options_.allowlist);
    state.screenshot = backend_->screenshot();
    state.capture_sequence = ++sequence_;
    return state;
}

std::string DeviceSession::raw_layout() {
    require_live();
    return backend_->page_source();
}

ExecutionOutcome DeviceSession::poll_oracle(const Event& event) {
    const auto timeout = std::chrono::seconds(event.action.timeout_seconds());
    const auto start = clock_->now();
    while (true) {
        ++sequence_;
        if (oracle_holds(backend_->page_source(), event.action)) return ExecutionOutcome::executed();
        const auto elapsed = clock_->now() - start;
        if (elapsed >= timeout) {
            return ExecutionOutcome::oracle_failed("TimeoutException: condition " + std::string(to_string(event.action.name)) +
                                                   " on " + describe(oracle_selector(event.action)) + " not met after " +
                                                   std::to_string(event.action.timeout_seconds()) + " seconds");
        }
        const auto remaining = std::chrono::duration_cast<Milliseconds>(timeout - elapsed);
        clock_->sleep_for(std::max(Milliseconds{1}, std::min(options_.poll_interval, remaining)));
    }
}

ExecutionOutcome DeviceSession::execute_event(const Event& event) {
    require_live();
    if (event.is_oracle()) return poll_oracle(event);
    try {
        backend_->perform(event);
    } catch (const DriverException& e) {
        return ExecutionOutcome::driver_error(e.what());
    }
    return ExecutionOutcome::executed();
}

ExecutionOutcome DeviceSession::reset_and_replay(std::span<const Event> events) {
    require_live();
    backend_->launch(app_ref_, true);
    for (std::size_t i = 0; i < events.size(); ++i) {
        const Event& e = events[i];
        if (e.is_oracle()) {
            ++sequence_;
            if (!oracle_holds(backend_->page_source(), e.action)) throw ReplayDiverged(i + 1, "oracle no longer holds");
            continue;
        }
        try {
            backend_->perform(e);
        } catch (const DriverException& ex) {
            throw ReplayDiverged(i + 1, ex.what());
        }
    }
    return ExecutionOutcome::executed();
}

}  // namespace testport
