#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <boost/rational.hpp>

#include "testport/chat.hpp"
#include "testport/event.hpp"

namespace testport {

using Ratio = boost::rational<std::int64_t>;

double to_double(const Ratio& r);

enum class MatchPolicy { strict, locator, action_only };

std::string_view to_string(MatchPolicy p);
std::optional<MatchPolicy> parse_match_policy(std::string_view text);

/// strict: identical signatures. locator: same action, and either identical
/// widgets or one shared selector key (resource-id, content-desc, text,
/// xpath) with equal values; oracle selector arguments must agree.
/// action_only: same action name.
bool events_match(const Event& transferred, const Event& truth, MatchPolicy policy);

/// System events count as gui.
enum class EventClass { gui, oracle };
EventClass event_class(const Event& e);

struct ClassCounts {
    std::size_t tp = 0;
    std::size_t fp = 0;
    std::size_t fn = 0;

    /// 0/0 is 1.
    Ratio precision() const;
    Ratio recall() const;

    ClassCounts& operator+=(const ClassCounts& o);
    friend bool operator==(const ClassCounts&, const ClassCounts&) = default;
};

struct Classification {
    ClassCounts gui;
    ClassCounts oracle;
};

/// Greedy one-to-one matching: each transferred event, in order, takes the
/// earliest unmatched ground-truth event of its class that matches.
Classification classify_events(const TestScript& transferred, const TestScript& truth, MatchPolicy policy);

std::size_t levenshtein(std::span<const Event> a, std::span<const Event> b, MatchPolicy policy);

/// (|truth| - distance) / |truth|. Throws EmptyGroundTruth.
Ratio reduction(const TestScript& transferred, const TestScript& truth, MatchPolicy policy);

struct TransferReport {
    std::string name;
    std::string category;
    ClassCounts gui;
    ClassCounts oracle;
    std::optional<Ratio> reduction;
    std::optional<bool> success;  ///< human-annotated
    std::uint64_t input_tokens = 0;
    std::uint64_t output_tokens = 0;
    double cost_usd = 0.0;
    double transfer_seconds = 0.0;
};

TransferReport evaluate_transfer(const TestScript& transferred, const TestScript& truth, MatchPolicy policy);

json to_json(const TransferReport& report);
/// Reads what to_json writes; metric fields may be null.
TransferReport report_from_json(const json& doc);

struct AggregateSummary {
    std::size_t transfers = 0;
    ClassCounts gui;     ///< pooled
    ClassCounts oracle;  ///< pooled
    std::optional<Ratio> mean_reduction;
    std::size_t annotated = 0;
    std::optional<Ratio> success_rate;
    std::uint64_t input_tokens = 0;
    std::uint64_t output_tokens = 0;
    double cost_usd = 0.0;
    double mean_transfer_seconds = 0.0;
};

/// Pools TP/FP/FN across reports; reduction and success are per-transfer
/// averages (success over annotated reports only).
AggregateSummary aggregate(std::span<const TransferReport> reports);

json to_json(const AggregateSummary& summary);

struct PriceTable {
    double input_per_million = 5.0;
    double output_per_million = 15.0;
};

double cost(std::uint64_t input_tokens, std::uint64_t output_tokens, const PriceTable& prices);
double cost(std::span<const ChatExchangeRecord> records, const PriceTable& prices);

/// Plain-text table with one row per category plus an overall row.
std::string render_table(std::span<const TransferReport> reports);

}  // namespace testport
