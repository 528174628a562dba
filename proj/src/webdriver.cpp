#include "testport/webdriver.hpp"

#include <httplib.h>

#include "internal/base64.hpp"
#include "testport/errors.hpp"

namespace testport {
namespace {

struct WebDriverFailure {
    std::string error;
    std::string message;
};

struct ParsedUrl {
    std::string origin;
    std::string prefix;
};

ParsedUrl split_url(const std::string& url) {
    auto scheme = url.find("://");
    if (scheme == std::string::npos) throw ConfigError("webdriver url needs a scheme: " + url);
    auto slash = url.find('/', scheme + 3);
    if (slash == std::string::npos) return {url, ""};
    std::string prefix = url.substr(slash);
    while (!prefix.empty() && prefix.back() == '/') prefix.pop_back();
    return {url.substr(0, slash), prefix};
}

std::string xpath_literal(const std::string& value) {
    if (value.find('"') == std::string::npos) return "\"" + value + "\"";
    if (value.find('\'') == std::string::npos) return "'" + value + "'";
    // Both quote kinds present: concat('a"b', "'", ...).
    std::string out = "concat(";
    std::size_t start = 0;
    while (true) {
        auto q = value.find('\'', start);
        out += "'" + value.substr(start, q - start) + "'";
        if (q == std::string::npos) break;
        out += ", \"'\", ";
        start = q + 1;
    }
    return out + ")";
}

}  // namespace

struct WebDriverBackend::Http {
    explicit Http(const WebDriverConfig& config) : url(split_url(config.base_url)), client(url.origin) {
        using namespace std::chrono;
        client.set_connection_timeout(duration_cast<seconds>(config.connect_timeout).count(),
                                      duration_cast<microseconds>(config.connect_timeout % seconds(1)).count());
        client.set_read_timeout(duration_cast<seconds>(config.read_timeout).count(),
                                duration_cast<microseconds>(config.read_timeout % seconds(1)).count());
        client.set_write_timeout(duration_cast<seconds>(config.read_timeout).count(), 0);
    }

    ParsedUrl url;
    httplib::Client client;
};

std::pair<std::string, std::string> webdriver_locator(const Selector& selector) {
    if (selector.key == attr::resource_id) return {"id", selector.value};
    if (selector.key == attr::content_desc) return {"accessibility id", selector.value};
    if (selector.key == attr::text) return {"xpath", "//*[@text=" + xpath_literal(selector.value) + "]"};
    if (selector.key == attr::xpath) return {"xpath", selector.value};
    return {"class name", selector.value};
}

WebDriverBackend::WebDriverBackend(WebDriverConfig config)
    : config_(std::move(config)), http_(std::make_unique<Http>(config_)) {}

WebDriverBackend::~WebDriverBackend() {
    try {
        shutdown();
    } catch (...) {
    }
}

json WebDriverBackend::call(const std::string& method, const std::string& path, const json& body) {
    const std::string target = http_->url.prefix + path;
    httplib::Result res;
    if (method == "GET") {
        res = http_->client.Get(target);
    } else if (method == "DELETE") {
        res = http_->client.Delete(target);
    } else {
        res = http_->client.Post(target, body.dump(), "application/json");
    }
    if (!res) {
        throw BackendUnreachable("webdriver endpoint " + config_.base_url + " unreachable: " + httplib::to_string(res.error()));
    }

    json doc;
    try {
        doc = json::parse(res->body);
    } catch (const json::parse_error&) {
        if (res->status >= 400) throw WebDriverFailure{"unknown error", "HTTP " + std::to_string(res->status) + ": " + res->body};
        throw BackendUnreachable("webdriver endpoint returned non-JSON body for " + target);
    }
    if (res->status >= 400) {
        const json value = doc.value("value", json::object());
        throw WebDriverFailure{value.value("error", std::string("unknown error")), value.value("message", res->body)};
    }
    return doc.value("value", json());
}

void WebDriverBackend::launch(const std::string& app_ref, bool fresh_install) {
    if (!session_id_.empty()) {
        try {
            call("DELETE", "/session/" + session_id_);
        } catch (const WebDriverFailure&) {
        }
        session_id_.clear();
    }

    json always = config_.capabilities.is_object() ? config_.capabilities : json::object();
    if (!app_ref.empty()) {
        const bool looks_like_package = app_ref.find('/') == std::string::npos && !app_ref.ends_with(".apk");
        always[looks_like_package ? "appium:appPackage" : "appium:app"] = app_ref;
    }
    always["appium:fullReset"] = fresh_install;
    always["appium:noReset"] = !fresh_install;
    const json body = {{"capabilities", {{"alwaysMatch", always}, {"firstMatch", json::array({json::object()})}}}};

    try {
        const json value = call("POST", "/session", body);
        session_id_ = value.value("sessionId", std::string());
    } catch (const WebDriverFailure& f) {
        throw InstallFailed("session creation failed: " + f.error + ": " + f.message);
    }
    if (session_id_.empty()) throw InstallFailed("session creation returned no sessionId");
}

std::string WebDriverBackend::page_source() {
    if (session_id_.empty()) throw StaleSession("no webdriver session");
    try {
        return call("GET", "/session/" + session_id_ + "/source").get<std::string>();
    } catch (const WebDriverFailure& f) {
        throw StaleSession(f.error + ": " + f.message);
    }
}

std::vector<std::uint8_t> WebDriverBackend::screenshot() {
    if (session_id_.empty()) throw StaleSession("no webdriver session");
    try {
        return detail::base64_decode(call("GET", "/session/" + session_id_ + "/screenshot").get<std::string>());
    } catch (const WebDriverFailure& f) {
        throw StaleSession(f.error + ": " + f.message);
    }
}

std::string WebDriverBackend::find_element(const WidgetDescriptor& widget) {
    auto selector = choose_selector(widget);
    if (!selector) throw WebDriverFailure{"invalid argument", "widget carries no selector"};
    auto [using_, value] = webdriver_locator(*selector);
    json found;
    try {
        found = call("POST", "/session/" + session_id_ + "/element", {{"using", using_}, {"value", value}});
    } catch (WebDriverFailure& f) {
        f.message += " (" + describe(*selector) + ")";
        throw;
    }
    if (found.contains(kElementKey)) return found[kElementKey].get<std::string>();
    if (found.contains("ELEMENT")) return found["ELEMENT"].get<std::string>();
    throw WebDriverFailure{"no such element", "element reference missing for " + describe(*selector)};
}

json WebDriverBackend::element_rect(const std::string& element) {
    return call("GET", "/session/" + session_id_ + "/element/" + element + "/rect");
}

void WebDriverBackend::pointer_gesture(int x0, int y0, int x1, int y1, int hold_ms) {
    json steps = json::array();
    steps.push_back({{"type", "pointerMove"}, {"duration", 0}, {"x", x0}, {"y", y0}});
    steps.push_back({{"type", "pointerDown"}, {"button", 0}});
    if (hold_ms > 0) steps.push_back({{"type", "pause"}, {"duration", hold_ms}});
    if (x1 != x0 || y1 != y0) steps.push_back({{"type", "pointerMove"}, {"duration", 300}, {"x", x1}, {"y", y1}});
    steps.push_back({{"type", "pointerUp"}, {"button", 0}});
    const json body = {{"actions",
                        json::array({{{"type", "pointer"},
                                      {"id", "finger1"},
                                      {"parameters", {{"pointerType", "touch"}}},
                                      {"actions", steps}}})}};
    call("POST", "/session/" + session_id_ + "/actions", body);
}

void WebDriverBackend::perform(const Event& event) {
    if (session_id_.empty()) throw StaleSession("no webdriver session");
    const std::string base = "/session/" + session_id_;
    try {
        if (event.action.name == ActionName::key_back) {
            call("POST", base + "/back");
            return;
        }

        json rect;
        std::string element;
        if (!event.widget.empty()) {
            element = find_element(event.widget);
            rect = element_rect(element);
        } else {
            rect = call("GET", base + "/window/rect");
            rect["x"] = rect.value("x", 0);
            rect["y"] = rect.value("y", 0);
        }
        const int x = rect.value("x", 0), y = rect.value("y", 0);
        const int w = rect.value("width", 0), h = rect.value("height", 0);
        const int cx = x + w / 2, cy = y + h / 2;

        switch (event.action.name) {
            case ActionName::click:
                if (element.empty()) throw WebDriverFailure{"invalid argument", "click needs a widget"};
                call("POST", base + "/element/" + element + "/click");
                break;
            case ActionName::send_keys:
                if (element.empty()) throw WebDriverFailure{"invalid argument", "send_keys needs a widget"};
                call("POST", base + "/element/" + element + "/value", {{"text", event.action.text()}});
                break;
            case ActionName::long_click:
                pointer_gesture(cx, cy, cx, cy, 1000);
                break;
            case ActionName::swipe_right:
                pointer_gesture(x + w / 10, cy, x + w * 9 / 10, cy, 0);
                break;
            case ActionName::swipe_left:
                pointer_gesture(x + w * 9 / 10, cy, x + w / 10, cy, 0);
                break;
            case ActionName::scroll:
                pointer_gesture(cx, y + h * 4 / 5, cx, y + h / 5, 0);
                break;
            default:
                throw WebDriverFailure{"invalid argument", "unsupported action " + std::string(to_string(event.action.name))};
        }
    } catch (const WebDriverFailure& f) {
        throw DriverException(f.error + ": " + f.message);
    }
}

void WebDriverBackend::shutdown() {
    if (session_id_.empty()) return;
    const auto id = std::move(session_id_);
    session_id_.clear();
    try {
        call("DELETE", "/session/" + id);
    } catch (const WebDriverFailure&) {
    } catch (const BackendUnreachable&) {
    }
}

}  // namespace testport
