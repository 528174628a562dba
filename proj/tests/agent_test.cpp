#include <deque>
#include <mutex>

#include <gtest/gtest.h>

#include "fixtures.hpp"
#include "testport/agent.hpp"
#include "testport/errors.hpp"

using namespace testport;

namespace {

// Hands out queued replies in call order and remembers every request.
class QueueClient final : public ChatClient {
public:
    explicit QueueClient(std::vector<std::string> replies) : replies_(replies.begin(), replies.end()) {}

    ChatReply complete(const ChatRequest& r) override {
        std::lock_guard lock(mu_);
        requests.push_back(r);
        if (replies_.empty()) return {"", 1, 1};
        auto text = replies_.front();
        replies_.pop_front();
        return {text, 100, 10};
    }

    std::vector<ChatRequest> requests;

private:
    std::mutex mu_;
    std::deque<std::string> replies_;
};

PromptContext event_context() {
    PromptContext c;
    c.abstract_test = AbstractSourceTest{"Adds a task.", "com.src", 1, 3};
    c.current_layout = "<hierarchy>\n  <node class=\"android.widget.Button\" resource-id=\"fab_add\"/>\n</hierarchy>\n";
    c.analysis_report = "A floating add button.";
    return c;
}

LlmAgent agent_with(std::shared_ptr<QueueClient> client, std::size_t n = 3, std::size_t m = 2) {
    AgentConfig config;
    config.n_votes = n;
    config.m_threshold = m;
    config.parallel_votes = false;
    return LlmAgent(client, PromptLibrary::load(testkit::prompt_dir()), config);
}

const char* kClick = R"({"event_type": "gui", "action": ["click"], "widget": {"resource-id": "fab_add"}})";

}  // namespace

TEST(Normalize, CanonicalizesLooseModelOutput) {
    auto doc = normalize_event_document(json::parse(
        R"({"Event_Type": "GUI", "action": "CLICK", "resource_id": "fab_add", "Content_Desc": "Add", "reason": "because"})"));
    EXPECT_EQ(doc, json::parse(R"({"event_type": "gui", "action": ["click"],
                                   "widget": {"resource-id": "fab_add", "content-desc": "Add"}})"));

    doc = normalize_event_document(json::parse(R"({"type": "gui", "action": ["click"], "widget": {"id": "x", "index": 3, "text": ""}})"));
    EXPECT_EQ(doc["widget"], json::parse(R"({"resource-id": "x", "index": "3"})"));

    doc = normalize_event_document(json::parse(R"({"action": ["send_keys", "Hi"]})"));
    EXPECT_FALSE(doc.contains("event_type"));
    EXPECT_THROW(event_from_json(doc), SchemaViolation);
}

TEST(Agent, UnanimousVotesYieldTheEvent) {
    auto client = std::make_shared<QueueClient>(std::vector<std::string>(3, kClick));
    auto agent = agent_with(client);
    auto r = agent.try_generate_event(PromptKind::initial_event, event_context(), 1);
    ASSERT_TRUE(r.event) << r.error;
    EXPECT_EQ(*r.event->widget.find("resource-id"), "fab_add");
    EXPECT_EQ(r.responses.size(), 3u);
    EXPECT_EQ(r.exchanges.size(), 3u);
    EXPECT_EQ(agent.exchanges().size(), 3u);
    ASSERT_EQ(client->requests.size(), 3u);
    for (const auto& req : client->requests) {
        EXPECT_EQ(req.kind, "initial_event");
        EXPECT_EQ(req.step, 1u);
        EXPECT_EQ(req.user, r.prompt.user);
        EXPECT_EQ(req.temperature, 0.0);
    }
}

TEST(Agent, MajorityOutvotesOneStrayResponse) {
    auto client = std::make_shared<QueueClient>(std::vector<std::string>{
        R"({"event_type": "gui", "action": ["click"], "widget": {"resource-id": "other"}})",
        std::string("I would click it: ") + kClick, std::string("```json\n") + kClick + "\n```"});
    auto agent = agent_with(client);
    auto r = agent.try_generate_event(PromptKind::next_event, [] {
        auto c = event_context();
        c.performed_events = {};
        return c;
    }(), 2);
    ASSERT_TRUE(r.event);
    EXPECT_EQ(*r.event->widget.find("resource-id"), "fab_add");
}

TEST(Agent, CaseDifferencesVoteTogether) {
    auto client = std::make_shared<QueueClient>(std::vector<std::string>{
        R"({"event_type": "GUI", "action": ["Click"], "widget": {"resource-id": "fab_add"}})",
        R"({"event_type": "gui", "action": "click", "resource-id": "fab_add"})",
        R"({"event_type": "oracle", "action": ["wait_until_element_presence", 10, "text", "x"]})"});
    auto agent = agent_with(client);
    auto r = agent.try_generate_event(PromptKind::initial_event, event_context(), 1);
    ASSERT_TRUE(r.event) << r.error;
    EXPECT_EQ(event_signature(*r.event), event_signature(event_from_json(json::parse(kClick))));
}

TEST(Agent, FailureKindsAreReported) {
    {
        auto agent = agent_with(std::make_shared<QueueClient>(std::vector<std::string>{"no", "json", "here"}));
        auto r = agent.try_generate_event(PromptKind::initial_event, event_context(), 1);
        EXPECT_EQ(r.error_kind, "NoJsonFound");
        EXPECT_FALSE(r.event);
        EXPECT_THROW(agent_with(std::make_shared<QueueClient>(std::vector<std::string>{"a", "b", "c"}))
                         .generate_event(PromptKind::initial_event, event_context(), 1),
                     NoJsonFound);
    }
    {
        auto agent = agent_with(std::make_shared<QueueClient>(std::vector<std::string>{kClick, "nothing", "useful"}));
        auto r = agent.try_generate_event(PromptKind::initial_event, event_context(), 1);
        EXPECT_EQ(r.error_kind, "EmptyMerge");
    }
    {
        auto agent = agent_with(std::make_shared<QueueClient>(std::vector<std::string>{
            R"({"a": 1})", R"({"b": 2})", R"({"c": 3})"}));
        EXPECT_EQ(agent.try_generate_event(PromptKind::initial_event, event_context(), 1).error_kind, "EmptyMerge");
    }
    {
        auto agent = agent_with(std::make_shared<QueueClient>(std::vector<std::string>(3, R"({"action": ["click"]})")));
        auto r = agent.try_generate_event(PromptKind::initial_event, event_context(), 1);
        EXPECT_EQ(r.error_kind, "SchemaViolation");
        EXPECT_EQ(r.merged, json::parse(R"({"action": ["click"]})"));
    }
}

TEST(Agent, ParallelVotesRecordEveryCall) {
    auto client = std::make_shared<QueueClient>(std::vector<std::string>(5, kClick));
    AgentConfig config;
    config.n_votes = 5;
    config.m_threshold = 3;
    LlmAgent agent(client, PromptLibrary::load(testkit::prompt_dir()), config);
    auto r = agent.try_generate_event(PromptKind::initial_event, event_context(), 1);
    ASSERT_TRUE(r.event);
    EXPECT_EQ(agent.exchanges().size(), 5u);
    EXPECT_EQ(client->requests.size(), 5u);
}

TEST(Agent, AbstractionCountsComeFromTheScript) {
    auto client = std::make_shared<QueueClient>(std::vector<std::string>{"It adds a task and checks it."});
    auto agent = agent_with(client);
    TestScript s = parse_test_file(R"({"app_package": "com.src", "events": [
        {"action": ["click"], "event_type": "gui", "widget": {"resource-id": "add"}},
        {"action": ["wait_until_element_presence", 10, "text", "A"], "event_type": "oracle"},
        {"action": ["wait_until_element_invisible", 10, "text", "B"], "event_type": "oracle"}]})");
    auto a = agent.abstract_test(s);
    EXPECT_EQ(a.summary, "It adds a task and checks it.");
    EXPECT_EQ(a.source_package, "com.src");
    EXPECT_EQ(a.source_event_count, 3u);
    EXPECT_EQ(a.source_oracle_count, 2u);
    ASSERT_EQ(client->requests.size(), 1u);
    EXPECT_EQ(client->requests[0].kind, "abstraction");
    EXPECT_NE(client->requests[0].user.find("wait_until_element_invisible"), std::string::npos);

    auto blank = agent_with(std::make_shared<QueueClient>(std::vector<std::string>{"  \n"}));
    EXPECT_THROW(blank.abstract_test(s), EmptyAbstraction);
}

TEST(Agent, ScreenAnalysisSendsTheScreenshot) {
    auto client = std::make_shared<QueueClient>(std::vector<std::string>{"Report"});
    auto agent = agent_with(client);
    AppState state{"<hierarchy/>", {1, 2, 3}, 1};
    EXPECT_EQ(agent.analyze_screen(state, 4), "Report");
    ASSERT_TRUE(client->requests[0].image);
    EXPECT_EQ(*client->requests[0].image, (std::vector<std::uint8_t>{1, 2, 3}));
    EXPECT_EQ(client->requests[0].step, 4u);
    state.screenshot.clear();
    EXPECT_THROW(agent.analyze_screen(state, 4), MissingSlot);
}

TEST(Agent, VoteSettingsAreValidated) {
    auto agent = agent_with(std::make_shared<QueueClient>(std::vector<std::string>{}));
    EXPECT_THROW(agent.set_votes(3, 4), ConfigError);
    EXPECT_THROW(agent.set_votes(0, 0), ConfigError);
    agent.set_votes(1, 1);
    EXPECT_EQ(agent.config().n_votes, 1u);
}
