#include "testport/prompt.hpp"

#include <fstream>
#include <sstream>

#include "testport/errors.hpp"

#ifndef TESTPORT_PROMPT_DIR
#define TESTPORT_PROMPT_DIR "prompts"
#endif

namespace testport {
namespace {

constexpr std::pair<PromptKind, std::string_view> kKinds[] = {
    {PromptKind::abstraction, "abstraction"},
    {PromptKind::screen_analysis, "screen_analysis"},
    {PromptKind::initial_event, "initial_event"},
    {PromptKind::next_event, "next_event"},
    {PromptKind::repair_event, "repair_event"},
};

std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("cannot read prompt template " + path.string());
    std::ostringstream os;
    os << in.rdbuf();
    return os.str();
}

std::string trim_trailing_newlines(std::string s) {
    while (!s.empty() && (s.back() == '\n' || s.back() == '\r')) s.pop_back();
    return s;
}

std::string expand_partials(const std::string& text, const std::filesystem::path& dir) {
    std::string out;
    std::size_t pos = 0;
    while (true) {
        auto open = text.find("{{>", pos);
        if (open == std::string::npos) break;
        auto close = text.find("}}", open);
        if (close == std::string::npos) break;
        std::string name = text.substr(open + 3, close - open - 3);
        name.erase(0, name.find_first_not_of(' '));
        name.erase(name.find_last_not_of(' ') + 1);
        out.append(text, pos, open - pos);
        out += trim_trailing_newlines(read_file(dir / "partials" / (name + ".txt")));
        pos = close + 2;
    }
    out.append(text, pos);
    return out;
}

}  // namespace

std::string_view to_string(PromptKind kind) {
    for (auto [k, s] : kKinds)
        if (k == kind) return s;
    return "?";
}

std::optional<PromptKind> parse_prompt_kind(std::string_view text) {
    for (auto [k, s] : kKinds)
        if (s == text) return k;
    return std::nullopt;
}

std::set<std::string> required_slots(PromptKind kind) {
    switch (kind) {
        case PromptKind::abstraction: return {"augmented_steps"};
        case PromptKind::screen_analysis: return {"current_layout", "screenshot"};
        case PromptKind::initial_event: return {"source_package", "abstract_test", "current_layout", "analysis_report"};
        case PromptKind::next_event:
            return {"source_package", "abstract_test", "current_layout", "analysis_report", "performed_events"};
        case PromptKind::repair_event:
            return {"source_package", "abstract_test",    "current_layout", "analysis_report",
                    "performed_events", "last_wrong_event", "last_exception"};
    }
    return {};
}

std::string fill_slots(std::string_view text, const std::map<std::string, std::string>& values) {
    std::string out;
    out.reserve(text.size());
    std::size_t pos = 0;
    while (pos < text.size()) {
        auto open = text.find("{{", pos);
        if (open == std::string_view::npos) break;
        auto close = text.find("}}", open + 2);
        if (close == std::string_view::npos) break;
        const std::string name(text.substr(open + 2, close - open - 2));
        out.append(text.substr(pos, open - pos));
        auto it = values.find(name);
        if (it == values.end()) throw MissingSlot(name);
        out += it->second;
        pos = close + 2;
    }
    out.append(text.substr(pos));
    return out;
}

std::set<std::string> PromptTemplate::slots() const {
    std::set<std::string> out;
    for (const std::string* text : {&system_text, &user_text}) {
        std::size_t pos = 0;
        while (true) {
            auto open = text->find("{{", pos);
            if (open == std::string::npos) break;
            auto close = text->find("}}", open + 2);
            if (close == std::string::npos) break;
            out.insert(text->substr(open + 2, close - open - 2));
            pos = close + 2;
        }
    }
    return out;
}

PromptLibrary PromptLibrary::load(const std::filesystem::path& dir) {
    PromptLibrary lib;
    for (auto [kind, name] : kKinds) {
        PromptTemplate t;
        t.kind = kind;
        t.system_text = trim_trailing_newlines(expand_partials(read_file(dir / (std::string(name) + ".system.txt")), dir));
        t.user_text = trim_trailing_newlines(expand_partials(read_file(dir / (std::string(name) + ".user.txt")), dir));
        lib.set(std::move(t));
    }
    return lib;
}

std::filesystem::path PromptLibrary::default_dir() { return TESTPORT_PROMPT_DIR; }

const PromptTemplate& PromptLibrary::get(PromptKind kind) const {
    auto it = templates_.find(kind);
    if (it == templates_.end()) throw ConfigError("no prompt template for " + std::string(to_string(kind)));
    return it->second;
}

void PromptLibrary::set(PromptTemplate t) { templates_[t.kind] = std::move(t); }

std::string truncate_layout(std::string_view layout, std::size_t budget) {
    if (layout.size() <= budget) return std::string(layout);

    // Processed layouts put one element per line between the root's open and close tags.
    std::vector<std::string_view> lines;
    std::size_t pos = 0;
    while (pos < layout.size()) {
        auto nl = layout.find('\n', pos);
        if (nl == std::string_view::npos) nl = layout.size();
        lines.push_back(layout.substr(pos, nl - pos));
        pos = nl + 1;
    }
    if (lines.size() < 3) return std::string(layout.substr(0, budget));

    const std::string_view open = lines.front();
    const std::string_view close = lines.back();
    std::vector<std::string_view> body(lines.begin() + 1, lines.end() - 1);

    auto render = [&](std::size_t keep) {
        std::string out(open);
        out += '\n';
        for (std::size_t i = 0; i < keep; ++i) {
            out += body[i];
            out += '\n';
        }
        out += "  <!-- truncated: " + std::to_string(body.size() - keep) + " elements omitted -->\n";
        out += close;
        out += '\n';
        return out;
    };

    std::size_t keep = body.size();
    while (keep > 0) {
        --keep;
        auto candidate = render(keep);
        if (candidate.size() <= budget) return candidate;
    }
    return render(0);
}

BuiltPrompt build_prompt(const PromptLibrary& library, PromptKind kind, const PromptContext& ctx, std::size_t layout_budget) {
    std::map<std::string, std::string> values;
    if (ctx.abstract_test) {
        if (!ctx.abstract_test->summary.empty()) values["abstract_test"] = ctx.abstract_test->summary;
        if (!ctx.abstract_test->source_package.empty()) values["source_package"] = ctx.abstract_test->source_package;
    }
    if (!ctx.current_layout.empty()) values["current_layout"] = truncate_layout(ctx.current_layout, layout_budget);
    if (!ctx.analysis_report.empty()) values["analysis_report"] = ctx.analysis_report;
    values["performed_events"] = events_to_json(ctx.performed_events).dump(2);
    if (ctx.last_wrong_event) values["last_wrong_event"] = event_to_json(*ctx.last_wrong_event).dump();
    if (ctx.last_exception) values["last_exception"] = *ctx.last_exception;
    if (ctx.augmented_steps) values["augmented_steps"] = events_to_json(ctx.augmented_steps->events).dump(2);

    for (const auto& slot : required_slots(kind)) {
        if (slot == "screenshot") {
            if (!ctx.screenshot || ctx.screenshot->empty()) throw MissingSlot("screenshot");
            continue;
        }
        if (slot == "source_package" && !values.contains(slot)) {
            // A source test without a package still has a meaningful prompt.
            if (ctx.abstract_test) {
                values[slot] = "(unknown)";
                continue;
            }
        }
        if (!values.contains(slot)) throw MissingSlot(slot);
    }

    const auto& t = library.get(kind);
    BuiltPrompt out;
    out.system = fill_slots(t.system_text, values);
    out.user = fill_slots(t.user_text, values);
    if (kind == PromptKind::screen_analysis) out.image = ctx.screenshot;
    return out;
}

}  // namespace testport
