#include "tc/net/url.hpp"

#include <charconv>

namespace tc::net {

std::string Url::origin() const {
    return scheme + "://" + host + ":" + std::to_string(port);
}

namespace {

std::optional<int> parse_port(std::string_view s) {
    int port = 0;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), port);
    if (ec != std::errc() || ptr != s.data() + s.size() || port < 0 || port > 65535) return std::nullopt;
    return port;
}

}  // namespace

std::optional<HostPort> parse_host_port(std::string_view text) {
    auto colon = text.rfind(':');
    if (colon == std::string_view::npos || colon == 0) return std::nullopt;
    auto port = parse_port(text.substr(colon + 1));
    if (!port) return std::nullopt;
    return HostPort{std::string(text.substr(0, colon)), *port};
}

std::optional<Url> parse_url(std::string_view text) {
    auto sep = text.find("://");
    if (sep == std::string_view::npos || sep == 0) return std::nullopt;
    Url url;
    url.scheme = std::string(text.substr(0, sep));
    if (url.scheme != "http") return std::nullopt;
    auto rest = text.substr(sep + 3);
    auto slash = rest.find('/');
    auto authority = rest.substr(0, slash);
    url.path = slash == std::string_view::npos ? "/" : std::string(rest.substr(slash));
    if (authority.empty()) return std::nullopt;
    auto colon = authority.rfind(':');
    if (colon == std::string_view::npos) {
        url.host = std::string(authority);
        url.port = 80;
    } else {
        auto port = parse_port(authority.substr(colon + 1));
        if (!port || colon == 0) return std::nullopt;
        url.host = std::string(authority.substr(0, colon));
        url.port = *port;
    }
    return url;
}

std::string join_path(std::string_view base, std::string_view suffix) {
    std::string out(base);
    if (!out.empty() && out.back() == '/' && !suffix.empty() && suffix.front() == '/') out.pop_back();
    if ((out.empty() || out.back() != '/') && (suffix.empty() || suffix.front() != '/')) out += '/';
    out += suffix;
    return out;
}

}  // namespace tc::net
