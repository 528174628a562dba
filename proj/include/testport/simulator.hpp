#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "testport/device.hpp"
#include "testport/event.hpp"

namespace testport::sim {

struct WidgetDef {
    /// Layout attributes (class, resource-id, text, clickable, ...), all strings.
    std::map<std::string, std::string, std::less<>> attributes;

    const std::string& klass() const;
    bool editable() const;
};

struct Effect {
    enum class Kind { go_to, set_text, toast, no_op };

    Kind kind = Kind::no_op;
    std::string screen;                 ///< go_to
    WidgetDescriptor target;            ///< set_text
    std::optional<std::string> value;   ///< set_text; defaults to the typed text
    std::string text;                   ///< toast
    int duration = 1;                   ///< toast lifetime, in captures
};

struct Transition {
    std::string screen;
    WidgetDescriptor widget;                ///< empty for screen-level actions (key_back, swipes)
    std::optional<std::size_t> widget_index;  ///< resolved at load time
    ActionName action = ActionName::click;
    std::vector<Effect> effects;
};

/// Declarative stand-in for an app under test.
struct AppModel {
    std::string package = "com.example.app";
    std::string initial_screen;
    std::map<std::string, std::vector<WidgetDef>, std::less<>> screens;
    std::vector<Transition> transitions;
    /// Events without a transition raise DriverError instead of doing nothing.
    bool strict = false;

    const std::vector<WidgetDef>& widgets(std::string_view screen) const;
    const Transition* find_transition(std::string_view screen, std::optional<std::size_t> widget, ActionName action) const;
};

/// Throws MalformedDocument, SchemaViolation or DanglingReference.
AppModel load_app_model(std::string_view text);

struct ActiveToast {
    std::string text;
    int remaining = 0;

    friend bool operator==(const ActiveToast&, const ActiveToast&) = default;
};

/// Mutable runtime state of one simulated app.
struct SimulatorState {
    std::string screen;
    std::map<std::pair<std::string, std::size_t>, std::string> text_overrides;
    std::vector<ActiveToast> toasts;
    std::vector<std::string> history;

    friend bool operator==(const SimulatorState&, const SimulatorState&) = default;
};

SimulatorState initial_state(const AppModel& model);

/// Raw Appium-style hierarchy of the current screen, widgets in declaration
/// order followed by any live toasts. Throws UnknownScreen.
std::string render_layout(const AppModel& model, const SimulatorState& state);

struct StepResult {
    ExecutionOutcome outcome;
    SimulatorState state;
};

/// Pure transition function. Oracle events are evaluated once against the
/// rendered layout.
StepResult simulate_event(const AppModel& model, SimulatorState state, const Event& event);

/// PNG with the screen id drawn at a fixed position.
std::vector<std::uint8_t> render_screenshot(std::string_view screen_id);

/// DeviceBackend over an AppModel. Each page_source() call counts as one
/// capture for toast expiry.
class SimulatedBackend final : public DeviceBackend {
public:
    explicit SimulatedBackend(AppModel model);

    void launch(const std::string& app_ref, bool fresh_install) override;
    std::string page_source() override;
    std::vector<std::uint8_t> screenshot() override;
    void perform(const Event& event) override;

    const SimulatorState& state() const { return state_; }
    const AppModel& model() const { return model_; }

private:
    AppModel model_;
    SimulatorState state_;
};

// ---------------------------------------------------------------------------
// Scripted LLM
// ---------------------------------------------------------------------------

struct ScriptRule {
    std::optional<std::string> kind;
    std::optional<std::size_t> step;
    std::optional<std::string> contains;
    std::string response;
};

/// Deterministic canned responder: first matching rule wins.
struct ScriptedLLM {
    std::vector<ScriptRule> rules;
    std::string default_response;

    std::string respond(std::string_view kind, std::size_t step, std::string_view prompt) const;
};

/// Rules file: {"rules": [{"kind", "step", "contains", "response"}], "default_response": ...}.
/// `response` may be a string or any JSON value (serialized compactly).
ScriptedLLM load_scripted_llm(std::string_view text);

}  // namespace testport::sim
