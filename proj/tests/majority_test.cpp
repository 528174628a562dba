#include <random>

#include <gtest/gtest.h>

#include "testport/errors.hpp"
#include "testport/majority.hpp"

using namespace testport;

namespace {

// Per-key behaviour of one key across three documents: for each document,
// -1 when the key is absent, otherwise an index into kValues.
using KeyPattern = std::array<int, 3>;

const json kValues[] = {json("click"), json(json::array({"send_keys", "x"})), json({{"resource-id", "a"}})};

std::vector<KeyPattern> all_patterns() {
    std::vector<KeyPattern> out;
    for (int a = -1; a < 3; ++a)
        for (int b = -1; b < 3; ++b)
            for (int c = -1; c < 3; ++c) out.push_back({a, b, c});
    return out;
}

// Reference rule: present in >= m documents; most frequent value; ties to the
// value whose first occurrence is earliest.
std::optional<json> expected_value(const KeyPattern& p, int m) {
    int present = 0;
    std::array<int, 3> count{};
    std::array<int, 3> first{99, 99, 99};
    for (int d = 0; d < 3; ++d) {
        if (p[d] < 0) continue;
        ++present;
        ++count[p[d]];
        first[p[d]] = std::min(first[p[d]], d);
    }
    if (present < m) return std::nullopt;
    int best = -1;
    for (int v = 0; v < 3; ++v) {
        if (count[v] == 0) continue;
        if (best < 0 || count[v] > count[best] || (count[v] == count[best] && first[v] < first[best])) best = v;
    }
    return kValues[best];
}

}  // namespace

TEST(MajorityMerge, ExhaustiveTwoKeyPatternsForThreeVotesThresholdTwo) {
    const auto patterns = all_patterns();
    ASSERT_EQ(patterns.size(), 64u);
    std::size_t empty_merges = 0, ties = 0;
    for (const auto& pa : patterns) {
        for (const auto& pb : patterns) {
            std::vector<json> docs(3, json::object());
            for (int d = 0; d < 3; ++d) {
                if (pa[d] >= 0) docs[d]["action"] = kValues[pa[d]];
                if (pb[d] >= 0) docs[d]["widget"] = kValues[pb[d]];
            }
            json want = json::object();
            if (auto v = expected_value(pa, 2)) want["action"] = *v;
            if (auto v = expected_value(pb, 2)) want["widget"] = *v;
            if (want.empty()) {
                ++empty_merges;
                EXPECT_THROW(majority_merge(docs, 2), EmptyMerge);
                continue;
            }
            const bool tie = pa[0] >= 0 && pa[1] >= 0 && pa[2] < 0 && pa[0] != pa[1];
            ties += tie;
            ASSERT_EQ(majority_merge(docs, 2), want) << json(docs).dump();
        }
    }
    // Keys present in fewer than two docs: 1 + 3*3 = 10 patterns per key.
    EXPECT_EQ(empty_merges, 100u);
    EXPECT_GT(ties, 0u);
}

TEST(MajorityMerge, SingleKeyAllThresholds) {
    for (int m = 1; m <= 3; ++m) {
        for (const auto& p : all_patterns()) {
            std::vector<json> docs(3, json::object());
            for (int d = 0; d < 3; ++d)
                if (p[d] >= 0) docs[d]["k"] = kValues[p[d]];
            auto v = expected_value(p, m);
            if (!v) {
                EXPECT_THROW(majority_merge(docs, m), EmptyMerge);
            } else {
                EXPECT_EQ(majority_merge(docs, m), (json{{"k", *v}}));
            }
        }
    }
}

TEST(MajorityMerge, WorkedExample) {
    std::vector<json> docs = {{{"a", 1}, {"b", 2}}, {{"a", 1}, {"b", 3}}, {{"a", 1}, {"c", 4}}};
    EXPECT_EQ(majority_merge(docs, 2), (json{{"a", 1}, {"b", 2}}));
}

TEST(MajorityMerge, ObjectValuesCompareStructurally) {
    std::vector<json> docs = {json::parse(R"({"w": {"x": 1, "y": 2}})"), json::parse(R"({"w": {"y": 2, "x": 1}})"),
                              json::parse(R"({"w": {"x": 9}})")};
    EXPECT_EQ(majority_merge(docs, 2), json::parse(R"({"w": {"x": 1, "y": 2}})"));
}

TEST(MajorityMerge, Preconditions) {
    std::vector<json> docs = {json{{"a", 1}}};
    EXPECT_THROW(majority_merge(docs, 0), std::invalid_argument);
    EXPECT_THROW(majority_merge(docs, 2), std::invalid_argument);
    EXPECT_THROW(majority_merge(std::vector<json>{}, 1), std::invalid_argument);
}

namespace {

json random_value(std::mt19937& rng, int depth) {
    std::uniform_int_distribution<int> kind(0, depth > 1 ? 3 : 5);
    switch (kind(rng)) {
        case 0: return std::uniform_int_distribution<int>(-50, 50)(rng);
        case 1: return "s" + std::to_string(rng() % 100);
        case 2: return rng() % 2 == 0;
        case 3: return nullptr;
        case 4: {
            json a = json::array();
            for (int i = rng() % 4; i > 0; --i) a.push_back(random_value(rng, depth + 1));
            return a;
        }
        default: {
            json o = json::object();
            for (int i = rng() % 4; i > 0; --i) o["k" + std::to_string(rng() % 10)] = random_value(rng, depth + 1);
            return o;
        }
    }
}

}  // namespace

TEST(MajorityMerge, UnanimousVotesAreIdentity) {
    std::mt19937 rng(7);
    for (int i = 0; i < 1000; ++i) {
        json doc = json::object();
        for (int k = 1 + rng() % 6; k > 0; --k) doc["key" + std::to_string(rng() % 12)] = random_value(rng, 0);
        const std::size_t n = 1 + rng() % 5;
        const std::size_t m = 1 + rng() % n;
        std::vector<json> docs(n, doc);
        ASSERT_EQ(majority_merge(docs, m), doc) << doc.dump();
    }
}

TEST(ExtractJson, FindsTheFirstObjectThatParses) {
    EXPECT_EQ(extract_event_json("```json\n{\"a\": 1}\n```"), (json{{"a", 1}}));
    EXPECT_EQ(extract_event_json("Sure! Here you go: {\"t\": \"brace } in string\"} done"),
              (json{{"t", "brace } in string"}}));
    EXPECT_EQ(extract_event_json("use {curly} then {\"b\": [1, {\"c\": 2}]}"), json::parse(R"({"b": [1, {"c": 2}]})"));
    EXPECT_THROW(extract_event_json("no json here"), NoJsonFound);
    EXPECT_THROW(extract_event_json("[1, 2]"), NoJsonFound);
    EXPECT_THROW(extract_event_json("{\"unterminated\": 1"), NoJsonFound);
}
