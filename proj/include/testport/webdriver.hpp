#pragma once

#include <memory>
#include <string>

#include "testport/device.hpp"

namespace testport {

struct WebDriverConfig {
    /// Server root, e.g. "http://127.0.0.1:4723" or "http://host:4444/wd/hub".
    std::string base_url = "http://127.0.0.1:4723";
    Milliseconds connect_timeout{5000};
    Milliseconds read_timeout{60000};
    /// Extra capabilities merged into alwaysMatch (platformName, automationName, ...).
    json capabilities = json::object();
};

/// W3C WebDriver element reference key.
inline constexpr const char* kElementKey = "element-6066-11e4-a52f-4ba9ef3c8a4a";

/// WebDriver strategy and value used to find a widget for a selector.
std::pair<std::string, std::string> webdriver_locator(const Selector& selector);

/// Device backend speaking the W3C WebDriver wire protocol (Appium dialect for
/// capabilities). A fresh launch deletes the current session and creates a
/// new one with a full reset.
class WebDriverBackend final : public DeviceBackend {
public:
    explicit WebDriverBackend(WebDriverConfig config);
    ~WebDriverBackend() override;

    void launch(const std::string& app_ref, bool fresh_install) override;
    std::string page_source() override;
    std::vector<std::uint8_t> screenshot() override;
    void perform(const Event& event) override;
    void shutdown() override;

    const std::string& session_id() const { return session_id_; }

private:
    struct Http;

    json call(const std::string& method, const std::string& path, const json& body = json::object());
    std::string find_element(const WidgetDescriptor& widget);
    json element_rect(const std::string& element);
    void pointer_gesture(int x0, int y0, int x1, int y1, int hold_ms);

    WebDriverConfig config_;
    std::unique_ptr<Http> http_;
    std::string session_id_;
};

}  // namespace testport
