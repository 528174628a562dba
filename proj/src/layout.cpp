#include "testport/layout.hpp"

#include <algorithm>
#include <cstdint>
#include <cstdio>
#include <unordered_map>

#include "testport/errors.hpp"
#include "testport/xml.hpp"

namespace testport {
namespace {

bool class_matches(std::string_view actual, std::string_view wanted) {
    if (actual == wanted) return true;
    if (wanted.find('.') != std::string_view::npos) return false;
    return actual.size() > wanted.size() && actual.ends_with(wanted) && actual[actual.size() - wanted.size() - 1] == '.';
}

std::string element_class(const xml::Element& e) {
    if (const auto* c = e.attribute(attr::klass)) return *c;
    return e.tag;
}

// Walks the tree, handing every element (except a class-less root) to `visit`
// together with its absolute xpath.
template <typename Visit>
void walk(const xml::Element& e, const std::string& path, bool is_root, Visit&& visit) {
    if (!(is_root && e.attribute(attr::klass) == nullptr)) visit(e, path);

    std::unordered_map<std::string, std::size_t> totals;
    for (const auto& c : e.children) ++totals[element_class(c)];
    std::unordered_map<std::string, std::size_t> seen;
    for (const auto& c : e.children) {
        const auto name = element_class(c);
        std::string step = path + "/" + name;
        const auto ordinal = ++seen[name];
        if (totals[name] > 1) step += "[" + std::to_string(ordinal) + "]";
        walk(c, step, false, visit);
    }
}

std::string root_path(const xml::Element& root) { return "/" + element_class(root); }

struct XpathPredicate {
    std::string tag;  // "*" matches any class
    std::vector<std::pair<std::string, std::string>> conditions;
};

// Parses the common `//tag[@a='x' and @b="y"]` form. Anything else is treated
// as a literal absolute path.
std::optional<XpathPredicate> parse_xpath_predicate(std::string_view xp) {
    if (!xp.starts_with("//")) return std::nullopt;
    xp.remove_prefix(2);
    XpathPredicate out;
    auto bracket = xp.find('[');
    out.tag = std::string(xp.substr(0, bracket));
    if (out.tag.empty() || out.tag.find('/') != std::string::npos) return std::nullopt;
    if (bracket == std::string_view::npos) return out;
    std::string_view rest = xp.substr(bracket);
    while (!rest.empty()) {
        if (rest.front() != '[') return std::nullopt;
        rest.remove_prefix(1);
        while (true) {
            while (!rest.empty() && rest.front() == ' ') rest.remove_prefix(1);
            if (rest.empty() || rest.front() != '@') return std::nullopt;
            rest.remove_prefix(1);
            auto eq = rest.find('=');
            if (eq == std::string_view::npos) return std::nullopt;
            std::string name(rest.substr(0, eq));
            while (!name.empty() && name.back() == ' ') name.pop_back();
            rest.remove_prefix(eq + 1);
            while (!rest.empty() && rest.front() == ' ') rest.remove_prefix(1);
            if (rest.empty() || (rest.front() != '\'' && rest.front() != '"')) return std::nullopt;
            char quote = rest.front();
            rest.remove_prefix(1);
            auto close = rest.find(quote);
            if (close == std::string_view::npos) return std::nullopt;
            out.conditions.emplace_back(std::move(name), std::string(rest.substr(0, close)));
            rest.remove_prefix(close + 1);
            while (!rest.empty() && rest.front() == ' ') rest.remove_prefix(1);
            if (rest.starts_with("and ")) {
                rest.remove_prefix(4);
                continue;
            }
            if (rest.empty() || rest.front() != ']') return std::nullopt;
            rest.remove_prefix(1);
            break;
        }
    }
    return out;
}

bool resource_id_matches(std::string_view actual, std::string_view wanted) {
    if (actual == wanted) return true;
    // "btn_register" matches "com.example:id/btn_register".
    return actual.size() > wanted.size() + 4 && actual.ends_with(wanted) &&
           actual.substr(actual.size() - wanted.size() - 4, 4) == ":id/";
}

}  // namespace

WidgetAllowlist WidgetAllowlist::defaults() {
    return WidgetAllowlist{{
        "android.widget.Button",
        "android.widget.ImageButton",
        "android.widget.EditText",
        "android.widget.TextView",
        "android.widget.CheckBox",
        "android.widget.RadioButton",
        "android.widget.Switch",
        "android.widget.ToggleButton",
        "android.widget.Spinner",
        "android.widget.SeekBar",
        "android.widget.ImageView",
        "android.widget.AutoCompleteTextView",
        "android.widget.CheckedTextView",
        "android.widget.SearchView",
        "android.webkit.WebView",
    }};
}

bool WidgetAllowlist::allows(std::string_view klass) const {
    return std::any_of(classes.begin(), classes.end(), [&](const std::string& c) { return class_matches(klass, c); });
}

std::string process_layout(std::string_view raw, const WidgetAllowlist& allow) {
    const xml::Element root = xml::parse(raw);
    xml::Element out;
    out.tag = "hierarchy";

    walk(root, root_path(root), true, [&](const xml::Element& e, const std::string& path) {
        const auto klass = element_class(e);
        if (!allow.allows(klass)) return;
        xml::Element node;
        node.tag = "node";
        node.attributes.emplace_back(std::string(attr::klass), klass);
        for (auto key : kRecognizedWidgetKeys) {
            if (key == attr::klass) continue;
            if (key == attr::xpath) {
                const auto* existing = e.attribute(attr::xpath);
                node.attributes.emplace_back(std::string(attr::xpath), existing ? *existing : path);
                continue;
            }
            if (const auto* v = e.attribute(key); v && !v->empty()) node.attributes.emplace_back(std::string(key), *v);
        }
        for (auto flag : kRetainedFlags) {
            if (const auto* v = e.attribute(flag); v && !v->empty()) node.attributes.emplace_back(std::string(flag), *v);
        }
        out.children.push_back(std::move(node));
    });
    return xml::write(out);
}

const std::string* LayoutElement::find(std::string_view key) const {
    auto it = attributes.find(key);
    return it == attributes.end() ? nullptr : &it->second;
}

std::vector<LayoutElement> flatten_layout(std::string_view layout) {
    const xml::Element root = xml::parse(layout);
    std::vector<LayoutElement> out;
    walk(root, root_path(root), true, [&](const xml::Element& e, const std::string& path) {
        LayoutElement le;
        le.position = out.size();
        le.klass = element_class(e);
        for (const auto& [k, v] : e.attributes) le.attributes.emplace(k, v);
        le.attributes[std::string(attr::klass)] = le.klass;
        le.attributes.try_emplace(std::string(attr::xpath), path);
        out.push_back(std::move(le));
    });
    return out;
}

std::optional<Selector> choose_selector(const WidgetDescriptor& widget) {
    for (auto key : kSelectorPriority) {
        if (const auto* v = widget.find(key)) return Selector{std::string(key), *v};
    }
    return std::nullopt;
}

Selector oracle_selector(const ActionSpec& oracle) {
    switch (oracle.selector_type()) {
        case OracleSelector::id: return {std::string(attr::resource_id), oracle.selector_value()};
        case OracleSelector::content_desc: return {std::string(attr::content_desc), oracle.selector_value()};
        case OracleSelector::text: return {std::string(attr::text), oracle.selector_value()};
        case OracleSelector::xpath: return {std::string(attr::xpath), oracle.selector_value()};
    }
    return {};
}

bool selector_matches(const LayoutElement& element, const Selector& selector) {
    if (selector.key == attr::klass) return class_matches(element.klass, selector.value);
    if (selector.key == attr::resource_id) {
        const auto* v = element.find(attr::resource_id);
        return v && resource_id_matches(*v, selector.value);
    }
    if (selector.key == attr::xpath) {
        const auto* v = element.find(attr::xpath);
        if (v && *v == selector.value) return true;
        auto pred = parse_xpath_predicate(selector.value);
        if (!pred) return false;
        if (pred->tag != "*" && !class_matches(element.klass, pred->tag)) return false;
        return std::all_of(pred->conditions.begin(), pred->conditions.end(), [&](const auto& cond) {
            const auto* actual = element.find(cond.first);
            if (!actual) return false;
            if (cond.first == attr::resource_id) return resource_id_matches(*actual, cond.second);
            return *actual == cond.second;
        });
    }
    const auto* v = element.find(selector.key);
    return v && *v == selector.value;
}

std::vector<std::size_t> find_matches(const std::vector<LayoutElement>& elements, const Selector& selector) {
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < elements.size(); ++i)
        if (selector_matches(elements[i], selector)) out.push_back(i);
    return out;
}

ElementMatch locate_widget(const std::vector<LayoutElement>& elements, const WidgetDescriptor& widget) {
    auto selector = choose_selector(widget);
    if (!selector) throw NotFound("no such element: widget carries no selector");
    auto hits = find_matches(elements, *selector);
    if (hits.empty()) throw NotFound("no such element: nothing matches " + describe(*selector));
    return ElementMatch{elements[hits.front()], *selector, hits.size() > 1};
}

ElementMatch locate_widget(std::string_view layout, const WidgetDescriptor& widget) {
    return locate_widget(flatten_layout(layout), widget);
}

bool oracle_holds(const std::vector<LayoutElement>& elements, const ActionSpec& oracle) {
    const bool present = !find_matches(elements, oracle_selector(oracle)).empty();
    return oracle.name == ActionName::wait_until_element_presence ? present : !present;
}

bool oracle_holds(std::string_view layout, const ActionSpec& oracle) { return oracle_holds(flatten_layout(layout), oracle); }

std::string canonical_layout(std::string_view layout) { return xml::canonicalize(layout); }

std::string layout_hash(std::string_view layout) {
    const auto canon = canonical_layout(layout);
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : canon) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

std::string describe(const Selector& selector) { return selector.key + "=" + selector.value; }

}  // namespace testport
