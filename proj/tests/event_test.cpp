#include <random>

#include <gtest/gtest.h>

#include "testport/errors.hpp"
#include "testport/event.hpp"
#include "generators.hpp"

using namespace testport;


TEST(EventRoundTrip, ThousandRandomScriptsSurviveSerialization) {
    std::mt19937 rng(20240917);
    for (int i = 0; i < 1000; ++i) {
        const TestScript s = testkit::random_script(rng, i);
        const std::string text = serialize_test_file(s);
        const TestScript back = parse_test_file(text);
        ASSERT_EQ(back, s) << text;
        ASSERT_EQ(serialize_test_file(back), text);
    }
}

TEST(EventJson, ParsesTheThreeEventKinds) {
    const auto s = parse_test_file(R"([
        {"action": ["send_keys", "sample@gmail.com"], "event_type": "gui", "widget": {"resource-id": "email"}},
        {"action": ["key_back"], "event_type": "system"},
        {"action": ["wait_until_element_presence", 10, "text", "Welcome"], "event_type": "oracle"}
    ])");
    ASSERT_EQ(s.events.size(), 3u);
    EXPECT_EQ(s.events[0].action.text(), "sample@gmail.com");
    EXPECT_EQ(*s.events[0].widget.find("resource-id"), "email");
    EXPECT_EQ(s.events[1].event_type, EventType::system);
    EXPECT_TRUE(s.events[2].is_oracle());
    EXPECT_EQ(s.events[2].action.timeout_seconds(), 10);
    EXPECT_EQ(s.events[2].action.selector_type(), OracleSelector::text);
    EXPECT_EQ(s.events[2].action.selector_value(), "Welcome");
    EXPECT_EQ(count_oracles(s), 1u);
}

TEST(EventJson, OracleWithoutTimeoutGetsTheDefault) {
    auto e = event_from_json(json::parse(R"({"action": ["wait_until_element_invisible", "id", "spinner"], "event_type": "oracle"})"));
    EXPECT_EQ(e.action.timeout_seconds(), kDefaultOracleTimeoutSeconds);
    EXPECT_EQ(e.action.selector_type(), OracleSelector::id);
}

TEST(EventJson, ResourceIdSelectorTypeIsSpelledId) {
    auto e = event_from_json(json::parse(R"({"action": ["wait_until_element_presence", 5, "resource-id", "x"], "event_type": "oracle"})"));
    EXPECT_EQ(e.action.selector_type(), OracleSelector::id);
}

TEST(EventJson, WrappedFormKeepsPackage) {
    auto s = parse_test_file(R"({"app_package": "com.a", "events": [{"action": ["key_back"], "event_type": "system"}]})");
    EXPECT_EQ(s.app_package, "com.a");
    EXPECT_NE(serialize_test_file(s).find("\"app_package\""), std::string::npos);
}

TEST(EventJson, SignatureIsOrderIndependent) {
    auto a = event_from_json(json::parse(R"({"widget": {"text": "A", "resource-id": "b"}, "event_type": "gui", "action": ["click"]})"));
    auto b = event_from_json(json::parse(R"({"action": ["click"], "event_type": "gui", "widget": {"resource-id": "b", "text": "A"}})"));
    EXPECT_EQ(event_signature(a), event_signature(b));
}

struct BadEvent {
    const char* doc;
    const char* field;
};

class EventSchema : public ::testing::TestWithParam<BadEvent> {};

TEST_P(EventSchema, RejectsWithFieldAndIndex) {
    const std::string text = std::string("[{\"action\": [\"click\"], \"event_type\": \"gui\", \"widget\": {\"text\": \"ok\"}}, ") +
                             GetParam().doc + "]";
    try {
        parse_test_file(text);
        FAIL() << "accepted " << GetParam().doc;
    } catch (const SchemaViolation& e) {
        EXPECT_EQ(e.index(), 1u);
        EXPECT_EQ(e.field(), GetParam().field) << e.what();
    }
}

INSTANTIATE_TEST_SUITE_P(
    Cases, EventSchema,
    ::testing::Values(BadEvent{R"({"event_type": "gui"})", "action"},
                      BadEvent{R"({"action": [], "event_type": "gui"})", "action"},
                      BadEvent{R"({"action": ["tap"], "event_type": "gui"})", "action[0]"},
                      BadEvent{R"({"action": ["click"]})", "event_type"},
                      BadEvent{R"({"action": ["click"], "event_type": "ui"})", "event_type"},
                      BadEvent{R"({"action": ["click"], "event_type": "oracle"})", "action[0]"},
                      BadEvent{R"({"action": ["wait_until_element_presence", 1, "text", "x"], "event_type": "gui"})", "event_type"},
                      BadEvent{R"({"action": ["click"], "event_type": "system"})", "action[0]"},
                      BadEvent{R"({"action": ["send_keys"], "event_type": "gui"})", "action"},
                      BadEvent{R"({"action": ["send_keys", 3], "event_type": "gui"})", "action"},
                      BadEvent{R"({"action": ["wait_until_element_presence", 0, "text", "x"], "event_type": "oracle"})", "action[1]"},
                      BadEvent{R"({"action": ["wait_until_element_presence", 5, "css", "x"], "event_type": "oracle"})", "action[2]"},
                      BadEvent{R"({"action": ["wait_until_element_presence", 5, "text", ""], "event_type": "oracle"})", "action[3]"},
                      BadEvent{R"({"action": ["click"], "event_type": "gui", "widget": {"text": 4}})", "widget.text"},
                      BadEvent{R"({"action": ["click"], "event_type": "gui", "widget": {"text": ""}})", "widget.text"},
                      BadEvent{R"({"action": ["click"], "event_type": "gui", "extra": 1})", "extra"}));

TEST(EventJson, NotJsonIsMalformed) {
    EXPECT_THROW(parse_test_file("[{"), MalformedDocument);
    EXPECT_THROW(parse_test_file("[]"), SchemaViolation);
    EXPECT_THROW(parse_test_file("{\"events\": 3}"), SchemaViolation);
}
