#pragma once

#include <span>
#include <string_view>

#include "testport/event.hpp"

namespace testport {

/// First balanced top-level JSON object in `response` that parses. Prose and
/// code fences around it are ignored. Throws NoJsonFound.
json extract_event_json(std::string_view response);

/// Keeps every top-level key present in at least `m` documents. Each kept key
/// takes its most frequent value (compared by compact serialization with
/// sorted keys); ties go to the value seen in the earliest document.
/// Throws EmptyMerge when no key qualifies, std::invalid_argument when the
/// preconditions (1 <= m <= n) fail.
json majority_merge(std::span<const json> documents, std::size_t m);

}  // namespace testport
