#include "testport/evaluator.hpp"

#include <cmath>
#include <iomanip>
#include <map>
#include <sstream>

#include "testport/errors.hpp"
#include "testport/levenshtein.hpp"

namespace testport {
namespace {

constexpr std::string_view kLocatorKeys[] = {attr::resource_id, attr::content_desc, attr::text, attr::xpath};

Ratio ratio_or_one(std::size_t num, std::size_t den) {
    if (den == 0) return Ratio(1);
    return Ratio(static_cast<std::int64_t>(num), static_cast<std::int64_t>(den));
}

json ratio_json(const Ratio& r) { return {{"num", r.numerator()}, {"den", r.denominator()}, {"value", to_double(r)}}; }

Ratio ratio_from_json(const json& j) {
    return Ratio(j.at("num").get<std::int64_t>(), j.at("den").get<std::int64_t>());
}

json counts_json(const ClassCounts& c) {
    return {{"tp", c.tp},
            {"fp", c.fp},
            {"fn", c.fn},
            {"precision", to_double(c.precision())},
            {"recall", to_double(c.recall())}};
}

ClassCounts counts_from_json(const json& j) {
    return {j.value("tp", std::size_t{0}), j.value("fp", std::size_t{0}), j.value("fn", std::size_t{0})};
}

}  // namespace

double to_double(const Ratio& r) { return boost::rational_cast<double>(r); }

std::string_view to_string(MatchPolicy p) {
    switch (p) {
        case MatchPolicy::strict: return "strict";
        case MatchPolicy::locator: return "locator";
        case MatchPolicy::action_only: return "action_only";
    }
    return "?";
}

std::optional<MatchPolicy> parse_match_policy(std::string_view text) {
    if (text == "strict") return MatchPolicy::strict;
    if (text == "locator") return MatchPolicy::locator;
    if (text == "action_only" || text == "action-only") return MatchPolicy::action_only;
    return std::nullopt;
}

bool events_match(const Event& t, const Event& g, MatchPolicy policy) {
    switch (policy) {
        case MatchPolicy::strict: return event_signature(t) == event_signature(g);
        case MatchPolicy::action_only: return t.action.name == g.action.name;
        case MatchPolicy::locator: break;
    }
    if (t.action.name != g.action.name) return false;
    if (is_oracle_action(t.action.name)) {
        try {
            if (t.action.selector_type() != g.action.selector_type()) return false;
            if (t.action.selector_value() != g.action.selector_value()) return false;
        } catch (const std::exception&) {
            return t.action.args == g.action.args;
        }
        return true;
    }
    if (t.widget == g.widget) return true;
    for (auto key : kLocatorKeys) {
        const std::string* a = t.widget.find(key);
        const std::string* b = g.widget.find(key);
        if (a && b && *a == *b) return true;
    }
    return false;
}

EventClass event_class(const Event& e) { return e.is_oracle() ? EventClass::oracle : EventClass::gui; }

Ratio ClassCounts::precision() const { return ratio_or_one(tp, tp + fp); }
Ratio ClassCounts::recall() const { return ratio_or_one(tp, tp + fn); }

ClassCounts& ClassCounts::operator+=(const ClassCounts& o) {
    tp += o.tp;
    fp += o.fp;
    fn += o.fn;
    return *this;
}

Classification classify_events(const TestScript& transferred, const TestScript& truth, MatchPolicy policy) {
    Classification out;
    std::vector<bool> used(truth.events.size(), false);
    auto counts = [&](const Event& e) -> ClassCounts& {
        return event_class(e) == EventClass::oracle ? out.oracle : out.gui;
    };
    for (const auto& t : transferred.events) {
        bool matched = false;
        for (std::size_t j = 0; j < truth.events.size(); ++j) {
            if (used[j] || event_class(truth.events[j]) != event_class(t)) continue;
            if (events_match(t, truth.events[j], policy)) {
                used[j] = true;
                matched = true;
                break;
            }
        }
        if (matched) ++counts(t).tp;
        else ++counts(t).fp;
    }
    for (std::size_t j = 0; j < truth.events.size(); ++j)
        if (!used[j]) ++counts(truth.events[j]).fn;
    return out;
}

std::size_t levenshtein(std::span<const Event> a, std::span<const Event> b, MatchPolicy policy) {
    return levenshtein_distance(a, b, [policy](const Event& x, const Event& y) { return events_match(x, y, policy); });
}

Ratio reduction(const TestScript& transferred, const TestScript& truth, MatchPolicy policy) {
    if (truth.events.empty()) throw EmptyGroundTruth();
    const auto d = static_cast<std::int64_t>(levenshtein(transferred.events, truth.events, policy));
    const auto n = static_cast<std::int64_t>(truth.events.size());
    return Ratio(n - d, n);
}

TransferReport evaluate_transfer(const TestScript& transferred, const TestScript& truth, MatchPolicy policy) {
    TransferReport r;
    const auto c = classify_events(transferred, truth, policy);
    r.gui = c.gui;
    r.oracle = c.oracle;
    r.reduction = reduction(transferred, truth, policy);
    return r;
}

json to_json(const TransferReport& r) {
    json out = {{"name", r.name},
                {"category", r.category},
                {"gui", counts_json(r.gui)},
                {"oracle", counts_json(r.oracle)},
                {"reduction", r.reduction ? ratio_json(*r.reduction) : json(nullptr)},
                {"success", r.success ? json(*r.success) : json(nullptr)},
                {"input_tokens", r.input_tokens},
                {"output_tokens", r.output_tokens},
                {"cost_usd", r.cost_usd},
                {"transfer_seconds", r.transfer_seconds}};
    return out;
}

TransferReport report_from_json(const json& doc) {
    TransferReport r;
    r.name = doc.value("name", std::string());
    r.category = doc.value("category", std::string());
    if (doc.contains("gui") && doc["gui"].is_object()) r.gui = counts_from_json(doc["gui"]);
    if (doc.contains("oracle") && doc["oracle"].is_object()) r.oracle = counts_from_json(doc["oracle"]);
    if (doc.contains("reduction") && doc["reduction"].is_object()) r.reduction = ratio_from_json(doc["reduction"]);
    if (doc.contains("success") && doc["success"].is_boolean()) r.success = doc["success"].get<bool>();
    r.input_tokens = doc.value("input_tokens", std::uint64_t{0});
    r.output_tokens = doc.value("output_tokens", std::uint64_t{0});
    r.cost_usd = doc.value("cost_usd", 0.0);
    r.transfer_seconds = doc.value("transfer_seconds", 0.0);
    return r;
}

AggregateSummary aggregate(std::span<const TransferReport> reports) {
    AggregateSummary s;
    s.transfers = reports.size();
    Ratio reduction_sum(0);
    std::size_t reductions = 0, successes = 0;
    double seconds = 0.0;
    for (const auto& r : reports) {
        s.gui += r.gui;
        s.oracle += r.oracle;
        if (r.reduction) {
            reduction_sum += *r.reduction;
            ++reductions;
        }
        if (r.success) {
            ++s.annotated;
            if (*r.success) ++successes;
        }
        s.input_tokens += r.input_tokens;
        s.output_tokens += r.output_tokens;
        s.cost_usd += r.cost_usd;
        seconds += r.transfer_seconds;
    }
    if (reductions > 0) s.mean_reduction = reduction_sum / static_cast<std::int64_t>(reductions);
    if (s.annotated > 0)
        s.success_rate = Ratio(static_cast<std::int64_t>(successes), static_cast<std::int64_t>(s.annotated));
    if (!reports.empty()) s.mean_transfer_seconds = seconds / static_cast<double>(reports.size());
    return s;
}

json to_json(const AggregateSummary& s) {
    return {{"transfers", s.transfers},
            {"gui", counts_json(s.gui)},
            {"oracle", counts_json(s.oracle)},
            {"mean_reduction", s.mean_reduction ? ratio_json(*s.mean_reduction) : json(nullptr)},
            {"annotated", s.annotated},
            {"success_rate", s.success_rate ? ratio_json(*s.success_rate) : json(nullptr)},
            {"input_tokens", s.input_tokens},
            {"output_tokens", s.output_tokens},
            {"cost_usd", s.cost_usd},
            {"mean_transfer_seconds", s.mean_transfer_seconds}};
}

double cost(std::uint64_t input_tokens, std::uint64_t output_tokens, const PriceTable& prices) {
    return static_cast<double>(input_tokens) * prices.input_per_million / 1e6 +
           static_cast<double>(output_tokens) * prices.output_per_million / 1e6;
}

double cost(std::span<const ChatExchangeRecord> records, const PriceTable& prices) {
    std::uint64_t in = 0, out = 0;
    for (const auto& r : records) {
        in += r.input_tokens;
        out += r.output_tokens;
    }
    return cost(in, out, prices);
}

std::string render_table(std::span<const TransferReport> reports) {
    std::map<std::string, std::vector<TransferReport>> by_category;
    for (const auto& r : reports) by_category[r.category.empty() ? "(none)" : r.category].push_back(r);

    std::ostringstream os;
    auto pct = [](const std::optional<Ratio>& r) -> std::string {
        if (!r) return "-";
        std::ostringstream s;
        s << std::fixed << std::setprecision(1) << 100.0 * to_double(*r) << "%";
        return s.str();
    };
    auto row = [&](const std::string& label, const AggregateSummary& s) {
        os << std::left << std::setw(18) << label << std::right << std::setw(4) << s.transfers << std::setw(10)
           << pct(s.gui.precision()) << std::setw(10) << pct(s.gui.recall()) << std::setw(10)
           << pct(s.oracle.precision()) << std::setw(10) << pct(s.oracle.recall()) << std::setw(11)
           << pct(s.mean_reduction) << std::setw(10) << pct(s.success_rate) << "\n";
    };
    os << std::left << std::setw(18) << "Category" << std::right << std::setw(4) << "N" << std::setw(10) << "GUI P"
       << std::setw(10) << "GUI R" << std::setw(10) << "Orc P" << std::setw(10) << "Orc R" << std::setw(11)
       << "Reduction" << std::setw(10) << "Success" << "\n";
    os << std::string(83, '-') << "\n";
    for (const auto& [category, list] : by_category) row(category, aggregate(list));
    os << std::string(83, '-') << "\n";
    row("All", aggregate(reports));
    return os.str();
}

}  // namespace testport
