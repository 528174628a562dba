#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "testport/event.hpp"

namespace testport {

/// Widget classes kept by layout processing.
struct WidgetAllowlist {
    std::vector<std::string> classes;

    /// The 15 common interactive Android widget classes.
    static WidgetAllowlist defaults();

    /// Entries without a package prefix also match fully qualified class names
    /// ("Button" allows "android.widget.Button").
    bool allows(std::string_view klass) const;
};

/// Interaction flags retained next to the recognized widget keys.
inline constexpr std::string_view kRetainedFlags[] = {"clickable", "long-clickable", "scrollable", "enabled"};

/// Keeps only allowlisted elements, flattened under a <hierarchy> root in
/// document order. Each kept element is emitted as <node .../> with the
/// recognized widget keys plus the interaction flags; an `xpath` attribute is
/// computed from the raw tree when the element does not already carry one.
/// Throws MalformedXml.
std::string process_layout(std::string_view raw, const WidgetAllowlist& allow);

/// Every widget element of a layout (raw or processed), in document order.
struct LayoutElement {
    std::size_t position = 0;
    std::string klass;
    std::map<std::string, std::string, std::less<>> attributes;

    const std::string* find(std::string_view key) const;
};

std::vector<LayoutElement> flatten_layout(std::string_view layout);

struct Selector {
    std::string key;
    std::string value;

    friend bool operator==(const Selector&, const Selector&) = default;
};

/// Execution priority: resource-id > content-desc > text > xpath > class.
inline constexpr std::string_view kSelectorPriority[] = {
    attr::resource_id, attr::content_desc, attr::text, attr::xpath, attr::klass,
};

/// Highest-priority selector present in the descriptor; a pure function of
/// which keys are present.
std::optional<Selector> choose_selector(const WidgetDescriptor& widget);

/// Selector equivalent of an oracle action's (selector_type, selector_value).
Selector oracle_selector(const ActionSpec& oracle);

bool selector_matches(const LayoutElement& element, const Selector& selector);
std::vector<std::size_t> find_matches(const std::vector<LayoutElement>& elements, const Selector& selector);

struct ElementMatch {
    LayoutElement element;
    Selector selector;
    /// More than one element matched; the first in document order was chosen.
    bool multiple_matches = false;
};

/// Throws NotFound when the chosen selector matches nothing (or the widget
/// carries no selector at all).
ElementMatch locate_widget(std::string_view layout, const WidgetDescriptor& widget);
ElementMatch locate_widget(const std::vector<LayoutElement>& elements, const WidgetDescriptor& widget);

/// Evaluates a wait_until_* predicate once against a layout.
bool oracle_holds(std::string_view layout, const ActionSpec& oracle);
bool oracle_holds(const std::vector<LayoutElement>& elements, const ActionSpec& oracle);

std::string canonical_layout(std::string_view layout);

/// Stable 64-bit FNV-1a of the canonical layout, as 16 hex digits.
std::string layout_hash(std::string_view layout);

std::string describe(const Selector& selector);

}  // namespace testport
