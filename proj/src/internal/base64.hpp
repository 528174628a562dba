#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <boost/beast/core/detail/base64.hpp>

namespace testport::detail {

inline std::string base64_encode(std::span<const std::uint8_t> bytes) {
    namespace b64 = boost::beast::detail::base64;
    std::string out(b64::encoded_size(bytes.size()), '\0');
    out.resize(b64::encode(out.data(), bytes.data(), bytes.size()));
    return out;
}

inline std::vector<std::uint8_t> base64_decode(std::string_view text) {
    namespace b64 = boost::beast::detail::base64;
    std::string compact;
    compact.reserve(text.size());
    for (char c : text)
        if (c != '\n' && c != '\r') compact += c;
    std::vector<std::uint8_t> out(b64::decoded_size(compact.size()));
    out.resize(b64::decode(out.data(), compact.data(), compact.size()).first);
    return out;
}

}  // namespace testport::detail
