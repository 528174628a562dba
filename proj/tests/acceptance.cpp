// Runs every acceptance criterion and prints one line per criterion.
//   acceptance             all offline criteria, live smoke reported as SKIP
//   acceptance --live-only live smoke only; exit 77 when not configured

#include <algorithm>
#include <chrono>
#include <cstdlib>
#include <functional>
#include <iostream>
#include <random>
#include <sstream>
#include <string>

#include "fake_webdriver.hpp"
#include "fixtures.hpp"
#include "generators.hpp"
#include "testport/errors.hpp"
#include "testport/evaluator.hpp"
#include "testport/levenshtein.hpp"
#include "testport/majority.hpp"
#include "testport/webdriver.hpp"

using namespace testport;
using namespace std::chrono_literals;

namespace {

constexpr int kSkip = 77;

// Thrown by checks; the message becomes the FAIL detail.
struct CheckFailed {
    std::string what;
};

void require(bool ok, const std::string& what) {
    if (!ok) throw CheckFailed{what};
}

template <class A, class B>
void require_eq(const A& a, const B& b, const std::string& what) {
    if (!(a == b)) {
        std::ostringstream os;
        os << what << ": got " << a << ", want " << b;
        throw CheckFailed{os.str()};
    }
}


std::vector<json> iterations(const MigrationResult& r) {
    std::vector<json> out;
    for (const auto& line : r.transcript)
        if (line["type"] == "iteration") out.push_back(line);
    return out;
}

// ---------------------------------------------------------------------------

std::string fixture_migrations() {
    std::ostringstream summary;
    for (const auto& name : testkit::fixture_names()) {
        const auto f = testkit::load_fixture(name);
        const auto run = testkit::migrate_fixture(f);
        require(run.result.status == MigrationStatus::Complete,
                name + ": " + std::string(to_string(run.result.status)) + " " + run.result.abort_reason);
        require(run.result.target_test == f.expected_target, name + ": target differs from the expected test");
        require(run.seconds < 10.0, name + ": took " + std::to_string(run.seconds) + " s");
        summary << name << " " << std::fixed;
        summary.precision(2);
        summary << run.seconds << "s ";
    }
    return summary.str();
}

std::string scenario_battery() {
    const auto f = testkit::load_fixture("todo_add");
    const json failures = json::parse(testkit::read_file(f.dir / "scenario_failures.json"));
    const auto r = testkit::migrate_fixture(f, "scenario_rules.json").result;
    require(r.status == MigrationStatus::Complete, "status " + std::string(to_string(r.status)) + " " + r.abort_reason);
    require(r.target_test == f.expected_target, "target differs from the expected test");

    const auto its = iterations(r);
    std::vector<std::string> shape;
    for (const auto& it : its) shape.push_back(it["prompt_kind"].get<std::string>() + "/" + it["scenario"].get<std::string>());
    const std::vector<std::string> want = {"initial_event/S4_NoChange", "repair_event/S1_Progress",
                                           "next_event/S2_DriverException", "repair_event/S1_Progress",
                                           "next_event/S1_Progress",      "next_event/S3_OracleFailed",
                                           "repair_event/S1_Progress"};
    require(shape == want, "iteration structure differs");

    for (const auto& [label, info] : failures.items()) {
        std::size_t seen = 0;
        for (std::size_t i = 0; i < its.size(); ++i) {
            const auto& it = its[i];
            if (it["scenario"] != label) continue;
            ++seen;
            const Event failed = event_from_json(info["event"]);
            require(event_from_json(it["event"]) == failed, label + ": wrong failed event");
            require(it["dead_end"]["step"] == info["step"] && it["dead_end"]["signature"] == event_signature(failed),
                    label + ": dead end not registered");
            require(r.dead_ends.count(info["step"]) && r.dead_ends.at(info["step"]).count(event_signature(failed)),
                    label + ": dead end missing from result");
            require(it["replay"].is_object() && it["replay"]["restored"] == true &&
                        it["replay"]["actual_hash"] == it["pre_hash"],
                    label + ": replay did not restore the pre-failure hash");
            const std::string exception = label == "S4_NoChange" ? std::string(kNoChangeMessage)
                                                                 : it["outcome"]["message"].get<std::string>();
            require(i + 1 < its.size() && its[i + 1]["prompt_kind"] == "repair_event", label + ": no repair prompt");
            const std::string user = its[i + 1]["prompt"]["user"];
            require(user.find(event_to_json(failed).dump()) != std::string::npos, label + ": repair lacks the event");
            require(user.find("This event is not correct because of this exception:\n" + exception) != std::string::npos,
                    label + ": repair lacks the exception text");
        }
        require_eq(seen, std::size_t{1}, label + " occurrences");
    }
    return "S2, S3, S4 once each; " + std::to_string(its.size()) + " iterations";
}

std::string budget_termination() {
    for (std::size_t size = 1; size <= 10; ++size) {
        auto src = testkit::sim_session(testkit::toggle_app("com.example.toggle.source"));
        auto tgt = testkit::sim_session(testkit::toggle_app("com.example.toggle.target"));
        auto agent = testkit::scripted_agent(testkit::toggle_forever_llm());
        const auto r = run_migration(testkit::toggle_source(size), *src, *tgt, *agent, {},
                                     {"com.example.toggle.source", "com.example.toggle.target"});
        require(r.status == MigrationStatus::BudgetExhausted, "size " + std::to_string(size) + ": " +
                                                                  std::string(to_string(r.status)) + " " + r.abort_reason);
        require(r.target_test.events.size() <= 3 * size, "size " + std::to_string(size) + ": over budget");
    }
    return "sizes 1-10 stop at 3x";
}

std::string majority_voting() {
    const json values[] = {json("click"), json(json::array({"send_keys", "x"})), json({{"resource-id", "a"}})};
    // Independent rule per key: present in >= 2 of 3 docs, most frequent
    // value, ties to the earliest first occurrence.
    auto expected = [&](const std::array<int, 3>& p) -> std::optional<json> {
        int present = 0;
        std::array<int, 3> count{}, first{9, 9, 9};
        for (int d = 0; d < 3; ++d) {
            if (p[d] < 0) continue;
            ++present;
            ++count[p[d]];
            first[p[d]] = std::min(first[p[d]], d);
        }
        if (present < 2) return std::nullopt;
        int best = -1;
        for (int v = 0; v < 3; ++v)
            if (count[v] && (best < 0 || count[v] > count[best] || (count[v] == count[best] && first[v] < first[best])))
                best = v;
        return values[best];
    };
    std::vector<std::array<int, 3>> patterns;
    for (int a = -1; a < 3; ++a)
        for (int b = -1; b < 3; ++b)
            for (int c = -1; c < 3; ++c) patterns.push_back({a, b, c});

    std::size_t empty = 0, cases = 0;
    for (const auto& pa : patterns) {
        for (const auto& pb : patterns) {
            std::vector<json> docs(3, json::object());
            for (int d = 0; d < 3; ++d) {
                if (pa[d] >= 0) docs[d]["action"] = values[pa[d]];
                if (pb[d] >= 0) docs[d]["widget"] = values[pb[d]];
            }
            json want = json::object();
            if (auto v = expected(pa)) want["action"] = *v;
            if (auto v = expected(pb)) want["widget"] = *v;
            ++cases;
            if (want.empty()) {
                ++empty;
                bool threw = false;
                try {
                    majority_merge(docs, 2);
                } catch (const EmptyMerge&) {
                    threw = true;
                }
                require(threw, "expected EmptyMerge for " + json(docs).dump());
                continue;
            }
            require(majority_merge(docs, 2) == want, "merge differs for " + json(docs).dump());
        }
    }
    require_eq(empty, std::size_t{100}, "EmptyMerge patterns");

    std::mt19937 rng(7);
    for (int i = 0; i < 1000; ++i) {
        json doc = json::object();
        for (int k = 1 + static_cast<int>(rng() % 6); k > 0; --k)
            doc["key" + std::to_string(rng() % 12)] = testkit::random_text(rng);
        const std::size_t n = 1 + rng() % 5;
        const std::size_t m = 1 + rng() % n;
        std::vector<json> docs(n, doc);
        require(majority_merge(docs, m) == doc, "unanimous merge changed " + doc.dump());
    }
    return std::to_string(cases) + " patterns, 1000 unanimous merges";
}

struct SuffixDistance {
    const std::string& a;
    const std::string& b;
    int memo[7][7];

    int operator()(std::size_t i, std::size_t j) {
        if (i == a.size()) return static_cast<int>(b.size() - j);
        if (j == b.size()) return static_cast<int>(a.size() - i);
        int& m = memo[i][j];
        if (m >= 0) return m;
        if (a[i] == b[j]) return m = (*this)(i + 1, j + 1);
        return m = 1 + std::min({(*this)(i + 1, j), (*this)(i, j + 1), (*this)(i + 1, j + 1)});
    }
};

Event click(const std::string& id) {
    Event e;
    e.widget.attributes["resource-id"] = id;
    return e;
}

Event presence(const std::string& text) {
    return Event{{ActionName::wait_until_element_presence, {std::int64_t{10}, std::string("text"), text}},
                 EventType::oracle, {}};
}

std::string levenshtein_oracle() {
    std::vector<std::string> words{""}, frontier{""};
    for (int len = 1; len <= 6; ++len) {
        std::vector<std::string> next;
        for (const auto& w : frontier)
            for (char c : std::string("abcd")) next.push_back(w + c);
        words.insert(words.end(), next.begin(), next.end());
        frontier = std::move(next);
    }
    std::size_t pairs = 0;
    for (const auto& a : words) {
        for (const auto& b : words) {
            SuffixDistance d{a, b, {}};
            for (auto& row : d.memo) std::fill(std::begin(row), std::end(row), -1);
            if (levenshtein_distance(a, b) != static_cast<std::size_t>(d(0, 0)))
                throw CheckFailed{"distance differs for " + a + " / " + b};
            ++pairs;
        }
    }

    // Events are the alphabet symbols for the reduction check.
    const Event symbols[] = {click("a"), click("b"), click("c"), presence("d")};
    std::mt19937 rng(5);
    for (int i = 0; i < 2000; ++i) {
        const auto& a = words[rng() % words.size()];
        const auto& b = words[1 + rng() % (words.size() - 1)];
        TestScript ta, tb;
        for (char c : a) ta.events.push_back(symbols[c - 'a']);
        for (char c : b) tb.events.push_back(symbols[c - 'a']);
        SuffixDistance d{a, b, {}};
        for (auto& row : d.memo) std::fill(std::begin(row), std::end(row), -1);
        const auto n = static_cast<std::int64_t>(b.size());
        require_eq(reduction(ta, tb, MatchPolicy::strict), Ratio(n - d(0, 0), n), "reduction " + a + " vs " + b);
    }

    TestScript truth, transferred;
    truth.events = {click("a"), click("b"), presence("Done")};
    transferred.events = {click("a"), presence("Done")};
    const Ratio worked = reduction(transferred, truth, MatchPolicy::strict);
    require_eq(worked, Ratio(2, 3), "worked reduction");
    require(std::abs(to_double(worked) - 0.667) < 0.0005, "worked reduction rounds to 0.667");
    return std::to_string(pairs) + " pairs; worked case 2/3";
}

std::string metric_arithmetic() {
    TestScript truth, transferred;
    truth.events = {click("e1"), click("e2"), click("e4")};
    transferred.events = {click("e1"), click("e2"), click("e3")};
    const auto c = classify_events(transferred, truth, MatchPolicy::strict);
    require(c.gui == ClassCounts{2, 1, 1}, "substitution counts");
    require_eq(c.gui.precision(), Ratio(2, 3), "precision");
    require_eq(c.gui.recall(), Ratio(2, 3), "recall");
    require_eq(c.oracle.precision(), Ratio(1), "oracle 0/0 precision");
    require_eq(c.oracle.recall(), Ratio(1), "oracle 0/0 recall");

    TransferReport a, b;
    a.gui = {9, 1, 0};
    b.gui = {1, 1, 0};
    const std::vector<TransferReport> pair = {a, b};
    require_eq(aggregate(pair).gui.precision(), Ratio(10, 12), "pooled precision");

    // Registration: target keeps a welcome oracle the ground truth omits.
    const auto f = testkit::load_fixture("shop_register");
    const auto r = evaluate_transfer(f.expected_target, f.ground_truth, MatchPolicy::locator);
    const auto oracles = static_cast<std::int64_t>(count_oracles(f.expected_target));
    const auto n = static_cast<std::int64_t>(f.ground_truth.events.size());
    require_eq(r.oracle.precision(), Ratio(oracles - 1, oracles), "registration oracle precision");
    require_eq(r.oracle.recall(), Ratio(1), "registration oracle recall");
    require_eq(r.gui.precision(), Ratio(1), "registration gui precision");
    require_eq(*r.reduction, Ratio(n - 1, n), "registration reduction");

    std::vector<TransferReport> all;
    for (const auto& name : testkit::fixture_names()) {
        const auto fx = testkit::load_fixture(name);
        all.push_back(evaluate_transfer(fx.expected_target, fx.ground_truth, MatchPolicy::locator));
    }
    const auto pooled = aggregate(all);
    require_eq(pooled.oracle.fp, std::size_t{1}, "pooled oracle false positives");
    require_eq(pooled.gui.precision(), Ratio(1), "pooled gui precision");
    std::ostringstream os;
    os << "pooled oracle precision " << pooled.oracle.precision();
    return os.str();
}

std::string cost_accounting() {
    const PriceTable prices{5.0, 15.0};
    const double c = cost(118600, 5180, prices);
    const double closed = 118600.0 * 5.0 / 1e6 + 5180.0 * 15.0 / 1e6;
    require(c == closed, "not equal to the closed-form sum");
    require(std::abs(c - 0.6707) < 1e-12, "not 0.6707");
    require(std::abs(c - 0.70) / 0.70 <= 0.10, "more than 10% from 0.70");
    std::ostringstream os;
    os.precision(4);
    os << std::fixed << "$" << c;
    return os.str();
}

std::string round_trip_and_filter() {
    std::mt19937 rng(20240917);
    for (int i = 0; i < 1000; ++i) {
        const TestScript s = testkit::random_script(rng, i);
        const std::string text = serialize_test_file(s);
        require(parse_test_file(text) == s, "round trip changed script " + std::to_string(i));
    }
    const auto allow = WidgetAllowlist::defaults();
    for (unsigned seed = 1; seed <= 100; ++seed) {
        const auto raw = testkit::random_layout(seed);
        const std::string problem = testkit::layout_mismatch(raw, process_layout(raw.xml, allow), allow);
        require(problem.empty(), "layout seed " + std::to_string(seed) + ": " + problem);
    }
    return "1000 scripts, 100 layouts";
}

const char* kContractModel = R"({
  "package": "com.example.contract", "initial_screen": "home",
  "screens": {
    "home": [
      {"class": "android.widget.TextView", "resource-id": "greeting", "text": "Hello"},
      {"class": "android.widget.Button", "resource-id": "ping", "text": "Ping"},
      {"class": "android.widget.Button", "resource-id": "next", "text": "Next"}],
    "form": [{"class": "android.widget.EditText", "resource-id": "name", "hint": "Name"}]
  },
  "transitions": [
    {"screen": "home", "widget": {"resource-id": "next"}, "effect": {"type": "goto", "screen": "form"}},
    {"screen": "home", "widget": {"resource-id": "ping"}, "effect": {"type": "toast", "text": "Pong", "duration": 4}}]
})";

void contract(DeviceSession& s, ManualClock& clock, std::chrono::milliseconds poll) {
    bool stale = false;
    try {
        s.capture_state();
    } catch (const StaleSession&) {
        stale = true;
    }
    require(stale && !s.live(), "capture before start must be stale");
    s.start("com.example.contract");
    require(s.live(), "not live after start");

    const auto a = s.capture_state(), b = s.capture_state();
    require(a.layout == b.layout && a.screenshot == b.screenshot, "captures differ");
    require(a.capture_sequence < b.capture_sequence, "capture sequence not increasing");

    for (std::int64_t timeout : {1, 3, 10}) {
        const auto t0 = clock.now();
        const auto out = s.execute_event(Event{
            {ActionName::wait_until_element_presence, {timeout, std::string("text"), std::string("Never")}},
            EventType::oracle, {}});
        const auto waited = clock.now() - t0;
        require(out.kind == ExecutionOutcome::Kind::oracle_failed, "failing oracle did not fail");
        require(waited >= std::chrono::seconds(timeout) - poll && waited <= std::chrono::seconds(timeout) + poll,
                "timeout " + std::to_string(timeout) + " s outside one poll");
    }
    require(s.execute_event(click("ping")).ok(), "click failed");
    const auto t0 = clock.now();
    const auto gone = s.execute_event(Event{
        {ActionName::wait_until_element_invisible, {std::int64_t{10}, std::string("text"), std::string("Pong")}},
        EventType::oracle, {}});
    const auto waited = clock.now() - t0;
    require(gone.ok(), "toast never disappeared");
    require(waited >= 4 * poll - poll && waited <= 4 * poll + poll, "toast seen outside one poll");

    const std::vector<Event> path = {click("next")};
    require(s.execute_event(path[0]).ok(), "navigation failed");
    const auto recorded = layout_hash(s.capture_state().layout);
    s.reset_and_replay({});
    require(layout_hash(s.capture_state().layout) == layout_hash(a.layout), "reset did not return home");
    require(s.reset_and_replay(path).ok(), "replay failed");
    require(layout_hash(s.capture_state().layout) == recorded, "replay did not restore the hash");
}

std::string contract_conformance() {
    constexpr auto poll = 500ms;
    const auto model = sim::load_app_model(kContractModel);
    {
        auto clock = std::make_shared<ManualClock>();
        DeviceSession s(std::make_unique<sim::SimulatedBackend>(model), {WidgetAllowlist::defaults(), poll}, clock);
        contract(s, *clock, poll);
    }
    {
        testkit::FakeWebDriverServer server(model);
        auto clock = std::make_shared<ManualClock>();
        WebDriverConfig config;
        config.base_url = server.url();
        DeviceSession s(std::make_unique<WebDriverBackend>(config), {WidgetAllowlist::defaults(), poll}, clock);
        contract(s, *clock, poll);
    }
    return "simulator and webdriver backends";
}

// Configured through TESTPORT_LIVE_SMOKE=1 plus OPENAI_API_KEY; endpoint and
// model default to the OpenAI values and may be overridden with
// TESTPORT_LIVE_ENDPOINT / TESTPORT_LIVE_MODEL.
std::optional<HttpChatConfig> live_config() {
    const char* enabled = std::getenv("TESTPORT_LIVE_SMOKE");
    const char* key = std::getenv("OPENAI_API_KEY");
    if (!enabled || std::string(enabled) != "1" || !key || !*key) return std::nullopt;
    HttpChatConfig c{"https://api.openai.com/v1/chat/completions", "gpt-4o", key};
    if (const char* e = std::getenv("TESTPORT_LIVE_ENDPOINT")) c.endpoint = e;
    if (const char* m = std::getenv("TESTPORT_LIVE_MODEL")) c.model = m;
    return c;
}

std::string live_smoke(const HttpChatConfig& config) {
    const auto f = testkit::load_fixture("shop_register");
    auto src = testkit::sim_session(f.source_app);
    auto tgt = testkit::sim_session(f.target_app);
    LlmAgent agent(std::make_shared<HttpChatClient>(config), PromptLibrary::load(testkit::prompt_dir()));
    const auto r = run_migration(f.source_test, *src, *tgt, agent, {}, {f.source_app.package, f.target_app.package});
    require(r.status == MigrationStatus::Complete,
            std::string(to_string(r.status)) + (r.abort_reason.empty() ? "" : " " + r.abort_reason));
    return std::to_string(r.target_test.events.size()) + " events, " + std::to_string(r.totals.llm_calls) + " calls";
}

bool report(const std::string& name, const std::function<std::string()>& check) {
    std::string detail;
    bool ok = false;
    const auto t0 = std::chrono::steady_clock::now();
    try {
        detail = check();
        ok = true;
    } catch (const CheckFailed& e) {
        detail = e.what;
    } catch (const std::exception& e) {
        detail = std::string("exception: ") + e.what();
    }
    const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    std::cout << (ok ? "[PASS] " : "[FAIL] ") << name << " (" << detail << "; " << std::fixed;
    std::cout.precision(2);
    std::cout << seconds << " s)" << std::endl;
    return ok;
}

}  // namespace

int main(int argc, char** argv) {
    const bool live_only = argc > 1 && std::string(argv[1]) == "--live-only";
    const auto live = live_config();

    if (live_only) {
        if (!live) {
            std::cout << "[SKIP] live smoke test (set TESTPORT_LIVE_SMOKE=1 and OPENAI_API_KEY)" << std::endl;
            return kSkip;
        }
        return report("live smoke test", [&] { return live_smoke(*live); }) ? 0 : 1;
    }

    const std::vector<std::pair<std::string, std::function<std::string()>>> criteria = {
        {"end-to-end fixture migrations", fixture_migrations},
        {"scenario battery", scenario_battery},
        {"budget termination", budget_termination},
        {"majority voting", majority_voting},
        {"levenshtein/reduction oracle equivalence", levenshtein_oracle},
        {"metric arithmetic", metric_arithmetic},
        {"cost accounting", cost_accounting},
        {"round-trip and filter properties", round_trip_and_filter},
        {"contract conformance", contract_conformance},
    };
    std::size_t failed = 0;
    for (const auto& [name, check] : criteria) failed += report(name, check) ? 0 : 1;
    if (live) failed += report("live smoke test", [&] { return live_smoke(*live); }) ? 0 : 1;
    else std::cout << "[SKIP] live smoke test (set TESTPORT_LIVE_SMOKE=1 and OPENAI_API_KEY)" << std::endl;

    std::cout << (criteria.size() - failed) << "/" << criteria.size() << " offline criteria passed" << std::endl;
    return failed == 0 ? 0 : 1;
}
