#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include <json.hpp>

namespace testport {

using json = nlohmann::json;

enum class ActionName {
    click,
    long_click,
    send_keys,
    swipe_right,
    swipe_left,
    scroll,
    key_back,
    wait_until_element_presence,
    wait_until_element_invisible,
};

std::string_view to_string(ActionName name);
std::optional<ActionName> parse_action_name(std::string_view text);
bool is_oracle_action(ActionName name);

enum class EventType { gui, oracle, system };

std::string_view to_string(EventType type);
std::optional<EventType> parse_event_type(std::string_view text);

/// Scalar argument of an action: integers (timeouts) or strings (payloads,
/// selector types and values).
using ActionArg = std::variant<std::int64_t, std::string>;

/// Selector type used inside oracle actions.
enum class OracleSelector { xpath, content_desc, id, text };

std::string_view to_string(OracleSelector selector);
std::optional<OracleSelector> parse_oracle_selector(std::string_view text);

inline constexpr std::int64_t kDefaultOracleTimeoutSeconds = 10;

struct ActionSpec {
    ActionName name = ActionName::click;
    std::vector<ActionArg> args;

    /// Text argument of a send_keys action.
    const std::string& text() const;
    /// Oracle accessors; valid only for wait_until_* actions.
    std::int64_t timeout_seconds() const;
    OracleSelector selector_type() const;
    const std::string& selector_value() const;

    friend bool operator==(const ActionSpec&, const ActionSpec&) = default;
};

/// Attribute keys a widget locator may carry. Unrecognized keys are kept verbatim.
namespace attr {
inline constexpr std::string_view resource_id = "resource-id";
inline constexpr std::string_view content_desc = "content-desc";
inline constexpr std::string_view text = "text";
inline constexpr std::string_view klass = "class";
inline constexpr std::string_view hint = "hint";
inline constexpr std::string_view naf = "naf";
inline constexpr std::string_view xpath = "xpath";
inline constexpr std::string_view bounds = "bounds";
}  // namespace attr

inline constexpr std::string_view kRecognizedWidgetKeys[] = {
    attr::resource_id, attr::content_desc, attr::text, attr::klass,
    attr::hint,        attr::naf,          attr::xpath, attr::bounds,
};

bool is_recognized_widget_key(std::string_view key);

struct WidgetDescriptor {
    std::map<std::string, std::string, std::less<>> attributes;

    bool empty() const { return attributes.empty(); }
    const std::string* find(std::string_view key) const;

    friend bool operator==(const WidgetDescriptor&, const WidgetDescriptor&) = default;
};

struct Event {
    ActionSpec action;
    EventType event_type = EventType::gui;
    WidgetDescriptor widget;

    bool is_oracle() const { return event_type == EventType::oracle; }

    friend bool operator==(const Event&, const Event&) = default;
};

struct TestScript {
    std::string app_package;
    std::vector<Event> events;

    friend bool operator==(const TestScript&, const TestScript&) = default;
};

struct AbstractSourceTest {
    std::string summary;
    std::string source_package;
    std::size_t source_oracle_count = 0;
    std::size_t source_event_count = 0;
};

// ---------------------------------------------------------------------------
// JSON mapping
// ---------------------------------------------------------------------------

/// Validates one event object. `index` is only used in error messages.
/// Throws SchemaViolation.
Event event_from_json(const json& doc, std::size_t index = SIZE_MAX);
json event_to_json(const Event& event);

/// Accepts either a bare JSON array of events or an object of the form
/// {"app_package": "...", "events": [...]}.
/// Throws MalformedDocument when the text is not JSON, SchemaViolation otherwise.
TestScript parse_test_file(std::string_view text);

/// Bare array when the script has no package, wrapped object otherwise.
std::string serialize_test_file(const TestScript& script);

json events_to_json(const std::vector<Event>& events);

/// Canonical form used for dead-end bookkeeping and strict matching.
std::string event_signature(const Event& event);

std::size_t count_oracles(const TestScript& script);
std::size_t count_oracles(const std::vector<Event>& events);

}  // namespace testport
