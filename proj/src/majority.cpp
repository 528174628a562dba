#include "testport/majority.hpp"

#include <map>
#include <tuple>
#include <stdexcept>

#include "testport/errors.hpp"

namespace testport {
namespace {

/// Index one past the brace closing the object opened at `open`, or npos.
std::size_t balanced_end(std::string_view text, std::size_t open) {
    int depth = 0;
    bool in_string = false;
    for (std::size_t i = open; i < text.size(); ++i) {
        const char c = text[i];
        if (in_string) {
            if (c == '\\') ++i;
            else if (c == '"') in_string = false;
            continue;
        }
        if (c == '"') in_string = true;
        else if (c == '{') ++depth;
        else if (c == '}' && --depth == 0) return i + 1;
    }
    return std::string_view::npos;
}

}  // namespace

json extract_event_json(std::string_view response) {
    std::size_t pos = 0;
    while ((pos = response.find('{', pos)) != std::string_view::npos) {
        const auto end = balanced_end(response, pos);
        if (end != std::string_view::npos) {
            try {
                json doc = json::parse(response.substr(pos, end - pos));
                if (doc.is_object()) return doc;
            } catch (const json::parse_error&) {
            }
        }
        ++pos;
    }
    throw NoJsonFound("no JSON object in response");
}

json majority_merge(std::span<const json> documents, std::size_t m) {
    if (documents.empty()) throw std::invalid_argument("majority_merge needs at least one document");
    if (m < 1 || m > documents.size()) throw std::invalid_argument("majority_merge threshold out of range");

    struct Tally {
        std::size_t documents = 0;
        // canonical value -> (count, first document index, value)
        std::map<std::string, std::tuple<std::size_t, std::size_t, const json*>> values;
    };
    std::map<std::string, Tally> tallies;
    for (std::size_t i = 0; i < documents.size(); ++i) {
        if (!documents[i].is_object()) continue;
        for (const auto& [key, value] : documents[i].items()) {
            auto& t = tallies[key];
            ++t.documents;
            auto [it, inserted] = t.values.try_emplace(value.dump(), 0, i, &value);
            ++std::get<0>(it->second);
        }
    }

    json merged = json::object();
    for (const auto& [key, t] : tallies) {
        if (t.documents < m) continue;
        const json* best = nullptr;
        std::size_t best_count = 0, best_index = 0;
        for (const auto& [canonical, entry] : t.values) {
            const auto [count, first, value] = entry;
            if (!best || count > best_count || (count == best_count && first < best_index)) {
                best = value;
                best_count = count;
                best_index = first;
            }
        }
        merged[key] = *best;
    }
    if (merged.empty()) throw EmptyMerge("no key reached the vote threshold");
    return merged;
}

}  // namespace testport
