#pragma once

#include <optional>
#include <string>
#include <string_view>

namespace tc::net {

struct Url {
    std::string scheme;
    std::string host;
    int port = 0;
    std::string path;  // always starts with '/'

    /// "scheme://host:port", the form httplib::Client expects.
    std::string origin() const;
};

std::optional<Url> parse_url(std::string_view text);

struct HostPort {
    std::string host;
    int port = 0;
};

std::optional<HostPort> parse_host_port(std::string_view text);

/// Appends `suffix` to `base`, collapsing a doubled '/'.
std::string join_path(std::string_view base, std::string_view suffix);

}  // namespace tc::net
