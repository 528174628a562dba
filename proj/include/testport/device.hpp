#pragma once

#include <chrono>
#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "testport/event.hpp"
#include "testport/layout.hpp"

namespace testport {

using Milliseconds = std::chrono::milliseconds;

/// Time source used for oracle polling. Injected so simulated runs can skip
/// real waiting.
class Clock {
public:
    using time_point = std::chrono::steady_clock::time_point;
    virtual ~Clock() = default;
    virtual time_point now() = 0;
    virtual void sleep_for(Milliseconds duration) = 0;
};

class SystemClock final : public Clock {
public:
    time_point now() override { return std::chrono::steady_clock::now(); }
    void sleep_for(Milliseconds duration) override;
};

/// Virtual time: sleeping advances the clock instantly.
class ManualClock final : public Clock {
public:
    time_point now() override { return now_; }
    void sleep_for(Milliseconds duration) override { now_ += duration; }
    void advance(Milliseconds duration) { now_ += duration; }

private:
    time_point now_{};
};

struct AppState {
    std::string layout;                  ///< processed hierarchy
    std::vector<std::uint8_t> screenshot;  ///< PNG bytes
    std::uint64_t capture_sequence = 0;
};

/// Layout-only comparison; screenshots are ignored.
bool state_equals(const AppState& a, const AppState& b);

struct ExecutionOutcome {
    enum class Kind { executed, driver_error, oracle_failed };

    Kind kind = Kind::executed;
    std::string message;

    static ExecutionOutcome executed() { return {}; }
    static ExecutionOutcome driver_error(std::string m) { return {Kind::driver_error, std::move(m)}; }
    static ExecutionOutcome oracle_failed(std::string m) { return {Kind::oracle_failed, std::move(m)}; }

    bool ok() const { return kind == Kind::executed; }
    friend bool operator==(const ExecutionOutcome&, const ExecutionOutcome&) = default;
};

std::string_view to_string(ExecutionOutcome::Kind kind);

/// Device primitives a backend must provide. Layout processing, oracle
/// polling and replay are layered on top by DeviceSession, identically for
/// every backend.
class DeviceBackend {
public:
    virtual ~DeviceBackend() = default;

    /// Brings the app to its initial screen. Throws BackendUnreachable or InstallFailed.
    virtual void launch(const std::string& app_ref, bool fresh_install) = 0;
    /// Raw UI hierarchy. Throws BackendUnreachable.
    virtual std::string page_source() = 0;
    virtual std::vector<std::uint8_t> screenshot() = 0;
    /// Executes a gui or system event. Throws DriverException with the
    /// backend's own message on failure.
    virtual void perform(const Event& event) = 0;
    virtual void shutdown() {}
};

struct DeviceOptions {
    WidgetAllowlist allowlist = WidgetAllowlist::defaults();
    Milliseconds poll_interval{500};
};

/// Single-owner session over one backend. Not thread-safe; distinct sessions
/// are independent.
class DeviceSession {
public:
    DeviceSession(std::unique_ptr<DeviceBackend> backend, DeviceOptions options = {},
                  std::shared_ptr<Clock> clock = std::make_shared<SystemClock>());
    ~DeviceSession();

    DeviceSession(const DeviceSession&) = delete;
    DeviceSession& operator=(const DeviceSession&) = delete;
    DeviceSession(DeviceSession&&) noexcept;
    DeviceSession& operator=(DeviceSession&&) noexcept;

    void start(const std::string& app_ref, bool fresh_install = true);
    bool live() const { return live_; }

    /// Throws StaleSession before start().
    AppState capture_state();
    /// Unprocessed hierarchy, for attribute harvesting. Does not count as a capture.
    std::string raw_layout();

    /// Oracle events poll until the predicate holds or the timeout elapses.
    ExecutionOutcome execute_event(const Event& event);

    /// Restarts fresh and re-executes `events`, evaluating oracles once.
    /// Throws ReplayDiverged with the 1-based index of the first failing event.
    ExecutionOutcome reset_and_replay(std::span<const Event> events);

    const DeviceOptions& options() const { return options_; }
    std::uint64_t capture_sequence() const { return sequence_; }
    Clock& clock() { return *clock_; }

private:
    void require_live() const;
    ExecutionOutcome poll_oracle(const Event& event);

    std::unique_ptr<DeviceBackend> backend_;
    DeviceOptions options_;
    std::shared_ptr<Clock> clock_;
    std::string app_ref_;
    std::uint64_t sequence_ = 0;
    bool live_ = false;
};

}  // namespace testport
