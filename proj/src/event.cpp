#include "testport/event.hpp"

#include <algorithm>
#include <array>
#include <cmath>

#include "testport/errors.hpp"

namespace testport {
namespace {

constexpr std::array<std::pair<ActionName, std::string_view>, 9> kActionNames{{
    {ActionName::click, "click"},
    {ActionName::long_click, "long_click"},
    {ActionName::send_keys, "send_keys"},
    {ActionName::swipe_right, "swipe_right"},
    {ActionName::swipe_left, "swipe_left"},
    {ActionName::scroll, "scroll"},
    {ActionName::key_back, "key_back"},
    {ActionName::wait_until_element_presence, "wait_until_element_presence"},
    {ActionName::wait_until_element_invisible, "wait_until_element_invisible"},
}};

constexpr std::array<std::pair<OracleSelector, std::string_view>, 4> kSelectorNames{{
    {OracleSelector::xpath, "xpath"},
    {OracleSelector::content_desc, "content-desc"},
    {OracleSelector::id, "id"},
    {OracleSelector::text, "text"},
}};

constexpr std::size_t kNoIndex = SIZE_MAX;

[[noreturn]] void violation(std::size_t index, std::string field, const std::string& detail) {
    throw SchemaViolation(index == kNoIndex ? SchemaViolation::npos : index, std::move(field), detail);
}

ActionArg arg_from_json(const json& value, std::size_t index, std::size_t position) {
    const std::string field = "action[" + std::to_string(position) + "]";
    if (value.is_string()) return value.get<std::string>();
    if (value.is_number_integer()) return value.get<std::int64_t>();
    if (value.is_number_float()) {
        double d = value.get<double>();
        if (std::isfinite(d) && std::floor(d) == d) return static_cast<std::int64_t>(d);
        violation(index, field, "non-integral numeric argument");
    }
    violation(index, field, "arguments must be strings or integers");
}

// Brings wait_until_* actions to the canonical [name, timeout, selector_type, selector_value].
void normalize_oracle_args(ActionSpec& spec, std::size_t index) {
    auto& args = spec.args;
    if (args.size() == 2) args.insert(args.begin(), ActionArg{kDefaultOracleTimeoutSeconds});
    if (args.size() != 3) violation(index, "action", "oracle actions take [name, timeout, selector_type, selector_value]");

    if (auto* s = std::get_if<std::string>(&args[0])) {
        const bool digits = !s->empty() && std::all_of(s->begin(), s->end(), [](char c) { return c >= '0' && c <= '9'; });
        if (!digits) violation(index, "action[1]", "timeout must be a positive integer");
        args[0] = static_cast<std::int64_t>(std::stoll(*s));
    }
    if (std::get<std::int64_t>(args[0]) <= 0) violation(index, "action[1]", "timeout must be a positive integer");

    auto* type = std::get_if<std::string>(&args[1]);
    if (!type) violation(index, "action[2]", "selector type must be a string");
    if (*type == "resource-id") *type = "id";
    if (!parse_oracle_selector(*type)) violation(index, "action[2]", "unsupported selector type '" + *type + "'");

    auto* value = std::get_if<std::string>(&args[2]);
    if (!value || value->empty()) violation(index, "action[3]", "selector value must be a non-empty string");
}

}  // namespace

std::string_view to_string(ActionName name) {
    for (auto [n, s] : kActionNames)
        if (n == name) return s;
    return "?";
}

std::optional<ActionName> parse_action_name(std::string_view text) {
    for (auto [n, s] : kActionNames)
        if (s == text) return n;
    return std::nullopt;
}

bool is_oracle_action(ActionName name) {
    return name == ActionName::wait_until_element_presence || name == ActionName::wait_until_element_invisible;
}

std::string_view to_string(EventType type) {
    switch (type) {
        case EventType::gui: return "gui";
        case EventType::oracle: return "oracle";
        case EventType::system: return "system";
    }
    return "?";
}

std::optional<EventType> parse_event_type(std::string_view text) {
    if (text == "gui") return EventType::gui;
    if (text == "oracle") return EventType::oracle;
    if (text == "system") return EventType::system;
    return std::nullopt;
}

std::string_view to_string(OracleSelector selector) {
    for (auto [s, n] : kSelectorNames)
        if (s == selector) return n;
    return "?";
}

std::optional<OracleSelector> parse_oracle_selector(std::string_view text) {
    for (auto [s, n] : kSelectorNames)
        if (n == text) return s;
    return std::nullopt;
}

const std::string& ActionSpec::text() const { return std::get<std::string>(args.at(0)); }
std::int64_t ActionSpec::timeout_seconds() const { return std::get<std::int64_t>(args.at(0)); }
OracleSelector ActionSpec::selector_type() const { return *parse_oracle_selector(std::get<std::string>(args.at(1))); }
const std::string& ActionSpec::selector_value() const { return std::get<std::string>(args.at(2)); }

bool is_recognized_widget_key(std::string_view key) {
    return std::find(std::begin(kRecognizedWidgetKeys), std::end(kRecognizedWidgetKeys), key) !=
           std::end(kRecognizedWidgetKeys);
}

const std::string* WidgetDescriptor::find(std::string_view key) const {
    auto it = attributes.find(key);
    return it == attributes.end() ? nullptr : &it->second;
}

Event event_from_json(const json& doc, std::size_t index) {
    if (!doc.is_object()) violation(index, "", "event must be a JSON object");
    for (const auto& [key, _] : doc.items()) {
        if (key != "action" && key != "event_type" && key != "widget") violation(index, key, "unknown field");
    }

    Event event;

    auto action_it = doc.find("action");
    if (action_it == doc.end()) violation(index, "action", "missing");
    const json& action = *action_it;
    if (!action.is_array() || action.empty()) violation(index, "action", "must be a non-empty array");
    if (!action[0].is_string()) violation(index, "action[0]", "action name must be a string");
    const auto name_text = action[0].get<std::string>();
    auto name = parse_action_name(name_text);
    if (!name) violation(index, "action[0]", "unknown action '" + name_text + "'");
    event.action.name = *name;
    for (std::size_t i = 1; i < action.size(); ++i) event.action.args.push_back(arg_from_json(action[i], index, i));

    auto type_it = doc.find("event_type");
    if (type_it == doc.end()) violation(index, "event_type", "missing");
    if (!type_it->is_string()) violation(index, "event_type", "must be a string");
    auto type = parse_event_type(type_it->get<std::string>());
    if (!type) violation(index, "event_type", "must be one of gui, oracle, system");
    event.event_type = *type;

    if (auto widget_it = doc.find("widget"); widget_it != doc.end()) {
        if (!widget_it->is_object()) violation(index, "widget", "must be an object");
        for (const auto& [key, value] : widget_it->items()) {
            if (!value.is_string()) violation(index, "widget." + key, "attribute values must be strings");
            auto text = value.get<std::string>();
            if (text.empty()) violation(index, "widget." + key, "attribute values must be non-empty");
            event.widget.attributes.emplace(key, std::move(text));
        }
    }

    const bool oracle_action = is_oracle_action(event.action.name);
    if (event.event_type == EventType::oracle && !oracle_action)
        violation(index, "action[0]", "oracle events must use a wait_until_* action");
    if (event.event_type != EventType::oracle && oracle_action)
        violation(index, "event_type", "wait_until_* actions must be oracle events");
    if (event.event_type == EventType::system && event.action.name != ActionName::key_back)
        violation(index, "action[0]", "system events support key_back only");

    if (oracle_action) normalize_oracle_args(event.action, index);
    if (event.action.name == ActionName::send_keys) {
        if (event.action.args.size() != 1 || !std::holds_alternative<std::string>(event.action.args[0]))
            violation(index, "action", "send_keys takes exactly one text argument");
    }
    return event;
}

json event_to_json(const Event& event) {
    json action = json::array();
    action.push_back(std::string(to_string(event.action.name)));
    for (const auto& arg : event.action.args) std::visit([&](const auto& v) { action.push_back(v); }, arg);

    json widget = json::object();
    for (const auto& [k, v] : event.widget.attributes) widget[k] = v;

    return json{{"action", std::move(action)}, {"event_type", std::string(to_string(event.event_type))}, {"widget", std::move(widget)}};
}

json events_to_json(const std::vector<Event>& events) {
    json out = json::array();
    for (const auto& e : events) out.push_back(event_to_json(e));
    return out;
}

TestScript parse_test_file(std::string_view text) {
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::parse_error& e) {
        throw MalformedDocument(std::string("test file is not valid JSON: ") + e.what());
    }

    TestScript script;
    const json* events = &doc;
    if (doc.is_object()) {
        auto pkg = doc.find("app_package");
        if (pkg != doc.end()) {
            if (!pkg->is_string()) violation(kNoIndex, "app_package", "must be a string");
            script.app_package = pkg->get<std::string>();
        }
        auto it = doc.find("events");
        if (it == doc.end()) violation(kNoIndex, "events", "missing");
        events = &*it;
    }
    if (!events->is_array()) violation(kNoIndex, "", "test file must be an array of events");
    if (events->empty()) violation(kNoIndex, "", "test file contains no events");

    script.events.reserve(events->size());
    for (std::size_t i = 0; i < events->size(); ++i) script.events.push_back(event_from_json((*events)[i], i));
    return script;
}

std::string serialize_test_file(const TestScript& script) {
    json events = events_to_json(script.events);
    if (script.app_package.empty()) return events.dump(2) + "\n";
    json doc = json::object();
    doc["app_package"] = script.app_package;
    doc["events"] = std::move(events);
    return doc.dump(2) + "\n";
}

std::string event_signature(const Event& event) {
    // nlohmann::json objects are key-sorted, so the dump is canonical.
    return event_to_json(event).dump();
}

std::size_t count_oracles(const std::vector<Event>& events) {
    return static_cast<std::size_t>(std::count_if(events.begin(), events.end(), [](const Event& e) { return e.is_oracle(); }));
}

std::size_t count_oracles(const TestScript& script) { return count_oracles(script.events); }

}  // namespace testport
