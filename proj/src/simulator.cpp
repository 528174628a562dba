#include "testport/simulator.hpp"

#include <algorithm>
#include <set>
#include <tuple>

#include "testport/errors.hpp"
#include "testport/xml.hpp"

namespace testport::sim {
namespace {

constexpr std::size_t kNoIndex = SIZE_MAX;

std::string attribute_text(const json& value, const std::string& where) {
    if (value.is_string()) return value.get<std::string>();
    if (value.is_boolean()) return value.get<bool>() ? "true" : "false";
    if (value.is_number_integer()) return std::to_string(value.get<std::int64_t>());
    throw SchemaViolation(SchemaViolation::npos, where, "attribute values must be strings, booleans or integers");
}

WidgetDescriptor selector_from_json(const json& doc, const std::string& where) {
    if (!doc.is_object()) throw SchemaViolation(SchemaViolation::npos, where, "selector must be an object");
    WidgetDescriptor w;
    for (const auto& [k, v] : doc.items()) w.attributes.emplace(k, attribute_text(v, where + "." + k));
    return w;
}

std::vector<LayoutElement> screen_elements(const AppModel& model, const SimulatorState& state) {
    return flatten_layout(render_layout(model, state));
}

// Rendered positions: 0 is the root frame, widgets follow in declaration order.
std::optional<std::size_t> widget_index_of(const AppModel& model, std::string_view screen, std::size_t position) {
    const auto count = model.widgets(screen).size();
    if (position >= 1 && position <= count) return position - 1;
    return std::nullopt;
}

std::optional<std::size_t> resolve_widget(const AppModel& model, const std::string& screen, const WidgetDescriptor& w) {
    SimulatorState probe;
    probe.screen = screen;
    auto match = locate_widget(screen_elements(model, probe), w);
    return widget_index_of(model, screen, match.element.position);
}

Effect effect_from_json(const json& doc, const std::string& where) {
    if (!doc.is_object() || !doc.contains("type") || !doc["type"].is_string())
        throw SchemaViolation(SchemaViolation::npos, where, "effect needs a string 'type'");
    const auto type = doc["type"].get<std::string>();
    Effect e;
    if (type == "goto") {
        e.kind = Effect::Kind::go_to;
        if (!doc.contains("screen") || !doc["screen"].is_string())
            throw SchemaViolation(SchemaViolation::npos, where + ".screen", "goto needs a target screen");
        e.screen = doc["screen"].get<std::string>();
    } else if (type == "set_text") {
        e.kind = Effect::Kind::set_text;
        if (!doc.contains("widget")) throw SchemaViolation(SchemaViolation::npos, where + ".widget", "set_text needs a widget");
        e.target = selector_from_json(doc["widget"], where + ".widget");
        if (doc.contains("value")) e.value = attribute_text(doc["value"], where + ".value");
    } else if (type == "toast") {
        e.kind = Effect::Kind::toast;
        if (!doc.contains("text") || !doc["text"].is_string())
            throw SchemaViolation(SchemaViolation::npos, where + ".text", "toast needs text");
        e.text = doc["text"].get<std::string>();
        e.duration = doc.value("duration", 1);
        if (e.duration < 1) throw SchemaViolation(SchemaViolation::npos, where + ".duration", "must be >= 1");
    } else if (type == "no_op") {
        e.kind = Effect::Kind::no_op;
    } else {
        throw SchemaViolation(SchemaViolation::npos, where + ".type", "unknown effect '" + type + "'");
    }
    return e;
}

std::string typed_text(const Event& event) {
    if (event.action.name == ActionName::send_keys) return event.action.text();
    return {};
}

void apply_effects(const AppModel& model, SimulatorState& state, const std::vector<Effect>& effects, const Event& event) {
    for (const auto& e : effects) {
        switch (e.kind) {
            case Effect::Kind::go_to:
                if (e.screen != state.screen) {
                    state.history.push_back(state.screen);
                    state.screen = e.screen;
                }
                break;
            case Effect::Kind::set_text: {
                auto idx = resolve_widget(model, state.screen, e.target);
                if (idx) state.text_overrides[{state.screen, *idx}] = e.value.value_or(typed_text(event));
                break;
            }
            case Effect::Kind::toast:
                state.toasts.push_back({e.text, e.duration});
                break;
            case Effect::Kind::no_op:
                break;
        }
    }
}

}  // namespace

const std::string& WidgetDef::klass() const {
    static const std::string kView = "android.view.View";
    auto it = attributes.find(attr::klass);
    return it == attributes.end() ? kView : it->second;
}

bool WidgetDef::editable() const {
    const auto& k = klass();
    return k.ends_with("EditText") || k.ends_with("AutoCompleteTextView");
}

const std::vector<WidgetDef>& AppModel::widgets(std::string_view screen) const {
    auto it = screens.find(screen);
    if (it == screens.end()) throw UnknownScreen(std::string(screen));
    return it->second;
}

const Transition* AppModel::find_transition(std::string_view screen, std::optional<std::size_t> widget, ActionName action) const {
    for (const auto& t : transitions) {
        if (t.screen == screen && t.widget_index == widget && t.action == action) return &t;
    }
    return nullptr;
}

AppModel load_app_model(std::string_view text) {
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::parse_error& e) {
        throw MalformedDocument(std::string("app model is not valid JSON: ") + e.what());
    }
    if (!doc.is_object()) throw SchemaViolation(SchemaViolation::npos, "", "app model must be an object");

    AppModel model;
    if (doc.contains("package")) model.package = doc["package"].get<std::string>();
    model.strict = doc.value("strict", false);

    if (!doc.contains("initial_screen") || !doc["initial_screen"].is_string())
        throw SchemaViolation(SchemaViolation::npos, "initial_screen", "missing");
    model.initial_screen = doc["initial_screen"].get<std::string>();

    if (!doc.contains("screens") || !doc["screens"].is_object())
        throw SchemaViolation(SchemaViolation::npos, "screens", "must be an object of screen-id to widget list");
    for (const auto& [id, widgets] : doc["screens"].items()) {
        if (!widgets.is_array()) throw SchemaViolation(SchemaViolation::npos, "screens." + id, "must be an array");
        auto& list = model.screens[id];
        for (std::size_t i = 0; i < widgets.size(); ++i) {
            const auto where = "screens." + id + "[" + std::to_string(i) + "]";
            if (!widgets[i].is_object()) throw SchemaViolation(i, where, "widget must be an object");
            WidgetDef w;
            for (const auto& [k, v] : widgets[i].items()) w.attributes.emplace(k, attribute_text(v, where + "." + k));
            list.push_back(std::move(w));
        }
    }
    if (!model.screens.contains(model.initial_screen)) throw DanglingReference(model.initial_screen);

    const json transitions = doc.value("transitions", json::array());
    if (!transitions.is_array()) throw SchemaViolation(SchemaViolation::npos, "transitions", "must be an array");
    std::set<std::tuple<std::string, std::size_t, ActionName>> seen;
    for (std::size_t i = 0; i < transitions.size(); ++i) {
        const json& t = transitions[i];
        const auto where = "transitions[" + std::to_string(i) + "]";
        if (!t.is_object()) throw SchemaViolation(i, where, "transition must be an object");
        Transition tr;
        if (!t.contains("screen") || !t["screen"].is_string()) throw SchemaViolation(i, where + ".screen", "missing");
        tr.screen = t["screen"].get<std::string>();
        if (!model.screens.contains(tr.screen)) throw DanglingReference(tr.screen);

        tr.widget = selector_from_json(t.value("widget", json::object()), where + ".widget");
        if (!tr.widget.empty()) {
            try {
                tr.widget_index = resolve_widget(model, tr.screen, tr.widget);
            } catch (const NotFound&) {
                auto sel = choose_selector(tr.widget);
                throw DanglingReference(tr.screen + ":" + (sel ? describe(*sel) : std::string("<no selector>")));
            }
        }

        const auto action_name = t.value("action", std::string("click"));
        auto action = parse_action_name(action_name);
        if (!action || is_oracle_action(*action)) throw SchemaViolation(i, where + ".action", "unsupported action '" + action_name + "'");
        tr.action = *action;

        if (t.contains("effect")) {
            const json& effect = t["effect"];
            if (effect.is_array()) {
                for (std::size_t k = 0; k < effect.size(); ++k)
                    tr.effects.push_back(effect_from_json(effect[k], where + ".effect[" + std::to_string(k) + "]"));
            } else {
                tr.effects.push_back(effect_from_json(effect, where + ".effect"));
            }
        }

        // Effects see the screen reached by the preceding goto.
        std::string current = tr.screen;
        for (const auto& e : tr.effects) {
            if (e.kind == Effect::Kind::go_to) {
                if (!model.screens.contains(e.screen)) throw DanglingReference(e.screen);
                current = e.screen;
            } else if (e.kind == Effect::Kind::set_text) {
                try {
                    resolve_widget(model, current, e.target);
                } catch (const NotFound&) {
                    auto sel = choose_selector(e.target);
                    throw DanglingReference(current + ":" + (sel ? describe(*sel) : std::string("<no selector>")));
                }
            }
        }

        auto key = std::make_tuple(tr.screen, tr.widget_index.value_or(kNoIndex), tr.action);
        if (!seen.insert(key).second) throw SchemaViolation(i, where, "duplicate transition for the same screen, widget and action");
        model.transitions.push_back(std::move(tr));
    }
    return model;
}

SimulatorState initial_state(const AppModel& model) {
    SimulatorState s;
    s.screen = model.initial_screen;
    return s;
}

std::string render_layout(const AppModel& model, const SimulatorState& state) {
    const auto& widgets = model.widgets(state.screen);

    xml::Element root;
    root.tag = "hierarchy";
    root.attributes = {{"rotation", "0"}};

    xml::Element frame;
    frame.tag = "android.widget.FrameLayout";
    frame.attributes = {{"index", "0"},
                        {"class", "android.widget.FrameLayout"},
                        {"package", model.package},
                        {"bounds", "[0,0][1080,1920]"}};

    for (std::size_t i = 0; i < widgets.size(); ++i) {
        const auto& w = widgets[i];
        xml::Element node;
        node.tag = w.klass();
        node.attributes.emplace_back("index", std::to_string(i));
        node.attributes.emplace_back("class", w.klass());
        node.attributes.emplace_back("package", model.package);
        auto override_it = state.text_overrides.find({state.screen, i});
        bool wrote_text = false;
        for (const auto& [k, v] : w.attributes) {
            if (k == attr::klass) continue;
            if (k == attr::text && override_it != state.text_overrides.end()) {
                node.attributes.emplace_back(k, override_it->second);
                wrote_text = true;
                continue;
            }
            node.attributes.emplace_back(k, v);
        }
        if (!wrote_text && override_it != state.text_overrides.end())
            node.attributes.emplace_back(std::string(attr::text), override_it->second);
        if (!w.attributes.contains(attr::bounds)) {
            const auto top = 100 + 120 * i;
            node.attributes.emplace_back(std::string(attr::bounds),
                                         "[0," + std::to_string(top) + "][1080," + std::to_string(top + 100) + "]");
        }
        frame.children.push_back(std::move(node));
    }
    root.children.push_back(std::move(frame));

    for (const auto& t : state.toasts) {
        if (t.remaining <= 0) continue;
        xml::Element toast;
        toast.tag = "android.widget.Toast";
        toast.attributes = {{"class", "android.widget.Toast"}, {"package", "com.android.settings"}, {"text", t.text}};
        root.children.push_back(std::move(toast));
    }
    return xml::write(root);
}

StepResult simulate_event(const AppModel& model, SimulatorState state, const Event& event) {
    const auto elements = screen_elements(model, state);

    if (event.is_oracle()) {
        if (oracle_holds(elements, event.action)) return {ExecutionOutcome::executed(), std::move(state)};
        return {ExecutionOutcome::oracle_failed("oracle condition not met: " + describe(oracle_selector(event.action))),
                std::move(state)};
    }

    std::optional<std::size_t> widget;
    const WidgetDef* def = nullptr;
    if (!event.widget.empty()) {
        ElementMatch match;
        try {
            match = locate_widget(elements, event.widget);
        } catch (const NotFound&) {
            auto sel = choose_selector(event.widget);
            return {ExecutionOutcome::driver_error(
                        "no such element: An element could not be located on the page using the given search parameters (" +
                        (sel ? describe(*sel) : std::string("no selector")) + ")"),
                    std::move(state)};
        }
        widget = widget_index_of(model, state.screen, match.element.position);
        if (widget) def = &model.widgets(state.screen)[*widget];
    }

    if (const auto* t = model.find_transition(state.screen, widget, event.action.name)) {
        apply_effects(model, state, t->effects, event);
        return {ExecutionOutcome::executed(), std::move(state)};
    }

    if (event.action.name == ActionName::send_keys) {
        if (!def || !def->editable()) {
            return {ExecutionOutcome::driver_error("invalid element state: Cannot set the element to '" + event.action.text() +
                                                   "'. Did you interact with the correct element?"),
                    std::move(state)};
        }
        state.text_overrides[{state.screen, *widget}] = event.action.text();
        return {ExecutionOutcome::executed(), std::move(state)};
    }
    if (event.action.name == ActionName::key_back && !state.history.empty()) {
        state.screen = state.history.back();
        state.history.pop_back();
        return {ExecutionOutcome::executed(), std::move(state)};
    }
    if (model.strict) {
        return {ExecutionOutcome::driver_error("unsupported interaction: " + std::string(to_string(event.action.name)) +
                                               " has no effect on screen " + state.screen),
                std::move(state)};
    }
    return {ExecutionOutcome::executed(), std::move(state)};
}

SimulatedBackend::SimulatedBackend(AppModel model) : model_(std::move(model)), state_(initial_state(model_)) {}

void SimulatedBackend::launch(const std::string& app_ref, bool fresh_install) {
    if (!app_ref.empty() && app_ref != model_.package)
        throw InstallFailed("simulator hosts " + model_.package + ", not " + app_ref);
    if (fresh_install) {
        state_ = initial_state(model_);
        return;
    }
    state_.screen = model_.initial_screen;
    state_.history.clear();
    state_.toasts.clear();
}

std::string SimulatedBackend::page_source() {
    auto xml = render_layout(model_, state_);
    for (auto& t : state_.toasts) --t.remaining;
    std::erase_if(state_.toasts, [](const ActiveToast& t) { return t.remaining <= 0; });
    return xml;
}

std::vector<std::uint8_t> SimulatedBackend::screenshot() { return render_screenshot(state_.screen); }

void SimulatedBackend::perform(const Event& event) {
    auto result = simulate_event(model_, state_, event);
    if (result.outcome.kind == ExecutionOutcome::Kind::driver_error) throw DriverException(result.outcome.message);
    state_ = std::move(result.state);
}

std::string ScriptedLLM::respond(std::string_view kind, std::size_t step, std::string_view prompt) const {
    for (const auto& r : rules) {
        if (r.kind && *r.kind != kind) continue;
        if (r.step && *r.step != step) continue;
        if (r.contains && prompt.find(*r.contains) == std::string_view::npos) continue;
        return r.response;
    }
    return default_response;
}

ScriptedLLM load_scripted_llm(std::string_view text) {
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::parse_error& e) {
        throw MalformedDocument(std::string("rules file is not valid JSON: ") + e.what());
    }
    if (!doc.is_object()) throw SchemaViolation(SchemaViolation::npos, "", "rules file must be an object");
    auto as_text = [](const json& v) { return v.is_string() ? v.get<std::string>() : v.dump(); };

    ScriptedLLM out;
    if (doc.contains("default_response")) out.default_response = as_text(doc["default_response"]);
    const json rules = doc.value("rules", json::array());
    for (std::size_t i = 0; i < rules.size(); ++i) {
        const json& r = rules[i];
        if (!r.is_object() || !r.contains("response")) throw SchemaViolation(i, "rules", "each rule needs a response");
        ScriptRule rule;
        if (r.contains("kind")) rule.kind = r["kind"].get<std::string>();
        if (r.contains("step")) rule.step = r["step"].get<std::size_t>();
        if (r.contains("contains")) rule.contains = r["contains"].get<std::string>();
        rule.response = as_text(r["response"]);
        out.rules.push_back(std::move(rule));
    }
    return out;
}

}  // namespace testport::sim
