#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "testport/event.hpp"

namespace testport {

enum class PromptKind { abstraction, screen_analysis, initial_event, next_event, repair_event };

std::string_view to_string(PromptKind kind);
std::optional<PromptKind> parse_prompt_kind(std::string_view text);

/// Slots each kind needs bound before instantiation.
std::set<std::string> required_slots(PromptKind kind);

/// Replaces `{{name}}` placeholders in one pass (substituted text is not
/// rescanned). Throws MissingSlot for the first unbound placeholder.
std::string fill_slots(std::string_view text, const std::map<std::string, std::string>& values);

struct PromptTemplate {
    PromptKind kind = PromptKind::abstraction;
    std::string system_text;
    std::string user_text;

    std::set<std::string> slots() const;
};

/// Templates loaded from `<dir>/<kind>.system.txt` and `<dir>/<kind>.user.txt`.
/// `{{> name}}` pulls in `<dir>/partials/<name>.txt` at load time.
class PromptLibrary {
public:
    /// Throws ConfigError when a file is missing.
    static PromptLibrary load(const std::filesystem::path& dir);
    /// Directory shipped with the sources.
    static std::filesystem::path default_dir();

    const PromptTemplate& get(PromptKind kind) const;
    void set(PromptTemplate t);

private:
    std::map<PromptKind, PromptTemplate> templates_;
};

struct PromptContext {
    std::optional<AbstractSourceTest> abstract_test;
    std::string current_layout;
    std::optional<std::vector<std::uint8_t>> screenshot;
    std::string analysis_report;
    std::vector<Event> performed_events;
    std::optional<Event> last_wrong_event;
    std::optional<std::string> last_exception;
    std::optional<TestScript> augmented_steps;
};

struct BuiltPrompt {
    std::string system;
    std::string user;
    std::optional<std::vector<std::uint8_t>> image;
};

inline constexpr std::size_t kDefaultLayoutBudget = 60'000;

/// Drops trailing elements until the layout fits `budget` characters, then
/// appends a marker comment naming how many were omitted.
std::string truncate_layout(std::string_view layout, std::size_t budget);

/// Throws MissingSlot when the context lacks something the kind requires.
BuiltPrompt build_prompt(const PromptLibrary& library, PromptKind kind, const PromptContext& ctx,
                         std::size_t layout_budget = kDefaultLayoutBudget);

}  // namespace testport
