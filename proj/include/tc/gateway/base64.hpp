#pragma once

#include <optional>
#include <string>
#include <string_view>

namespace tc::gateway {

/// RFC 4648 standard alphabet with padding.
std::string base64_encode(std::string_view bytes);

/// Strict decode; nullopt on any non-canonical input.
std::optional<std::string> base64_decode(std::string_view text);

}  // namespace tc::gateway
