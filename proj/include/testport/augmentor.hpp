#pragma once

#include "testport/device.hpp"

namespace testport {

/// Prefix under which a locator value is kept when the live element disagrees.
inline constexpr std::string_view kOriginalPrefix = "original-";

/// Adds the live attributes of the located element to `widget`. Live values
/// win on conflict; the original value moves to `original-<key>`.
WidgetDescriptor enrich_widget(const WidgetDescriptor& widget, const LayoutElement& live);

/// Runs `source` on a started session, harvesting each widget's attributes
/// from the raw layout before executing the event.
/// Throws AugmentationFailed with the 1-based step.
TestScript augment(const TestScript& source, DeviceSession& session);

}  // namespace testport
