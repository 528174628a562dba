#include "testport/augmentor.hpp"

#include "testport/errors.hpp"

namespace testport {

WidgetDescriptor enrich_widget(const WidgetDescriptor& widget, const LayoutElement& live) {
    WidgetDescriptor out = widget;
    auto harvest = [&](std::string_view key, const std::string& value) {
        if (value.empty()) return;
        auto it = out.attributes.find(key);
        if (it == out.attributes.end()) {
            out.attributes.emplace(std::string(key), value);
        } else if (it->second != value) {
            out.attributes.emplace(std::string(kOriginalPrefix) + std::string(key), it->second);
            it->second = value;
        }
    };
    for (auto key : kRecognizedWidgetKeys) {
        if (key == attr::klass && !live.klass.empty()) {
            harvest(key, live.klass);
            continue;
        }
        if (const std::string* v = live.find(key)) harvest(key, *v);
    }
    return out;
}

TestScript augment(const TestScript& source, DeviceSession& session) {
    TestScript out;
    out.app_package = source.app_package;
    out.events.reserve(source.events.size());
    for (std::size_t i = 0; i < source.events.size(); ++i) {
        const std::size_t step = i + 1;
        Event event = source.events[i];
        try {
            if (!event.widget.empty() && !event.is_oracle()) {
                const auto match = locate_widget(session.raw_layout(), event.widget);
                event.widget = enrich_widget(event.widget, match.element);
            }
            const auto outcome = session.execute_event(source.events[i]);
            if (!outcome.ok()) throw AugmentationFailed(step, outcome.message);
        } catch (const AugmentationFailed&) {
            throw;
        } catch (const Error& e) {
            throw AugmentationFailed(step, e.what());
        }
        out.events.push_back(std::move(event));
    }
    return out;
}

}  // namespace testport
