#include "tc/registry/types.hpp"

#include <cctype>
#include <cmath>

#include "tc/error.hpp"
#include "tc/names.hpp"

namespace tc::registry {

double distance(const Location& a, const Location& b) noexcept {
    return std::hypot(a.x - b.x, a.y - b.y);
}

std::string_view to_string(AccessKind kind) {
    switch (kind) {
        case AccessKind::Rest: return "rest";
        case AccessKind::Soap: return "soap";
        case AccessKind::Native: return "native";
    }
    return "?";
}

std::optional<AccessKind> parse_access_kind(std::string_view s) {
    if (s == "rest") return AccessKind::Rest;
    if (s == "soap") return AccessKind::Soap;
    if (s == "native") return AccessKind::Native;
    return std::nullopt;
}

AccessSpec AccessSpec::rest(std::string endpoint) {
    AccessSpec a;
    a.kind = AccessKind::Rest;
    a.endpoint = std::move(endpoint);
    return a;
}

AccessSpec AccessSpec::soap(std::string endpoint) {
    AccessSpec a;
    a.kind = AccessKind::Soap;
    a.endpoint = std::move(endpoint);
    return a;
}

AccessSpec AccessSpec::native(std::string gateway_id, std::string driver, std::string native_address) {
    AccessSpec a;
    a.kind = AccessKind::Native;
    a.gateway_id = std::move(gateway_id);
    a.driver = std::move(driver);
    a.native_address = std::move(native_address);
    return a;
}

bool is_absolute_url(std::string_view s) noexcept {
    auto sep = s.find("://");
    if (sep == std::string_view::npos || sep == 0) return false;
    auto scheme = s.substr(0, sep);
    if (!std::isalpha(static_cast<unsigned char>(scheme.front()))) return false;
    for (char c : scheme) {
        if (!std::isalnum(static_cast<unsigned char>(c)) && c != '+' && c != '-' && c != '.') return false;
    }
    auto rest = s.substr(sep + 3);
    auto host = rest.substr(0, rest.find('/'));
    if (host.empty()) return false;
    for (char c : s) {
        if (std::isspace(static_cast<unsigned char>(c))) return false;
    }
    return true;
}

namespace {

[[noreturn]] void invalid(std::string path, std::string message) {
    throw Error(ErrorCode::InvalidDescriptor, std::move(path), std::move(message));
}

bool is_host_port(std::string_view s) {
    auto colon = s.rfind(':');
    if (colon == std::string_view::npos || colon == 0 || colon + 1 == s.size()) return false;
    for (char c : s.substr(colon + 1)) {
        if (c < '0' || c > '9') return false;
    }
    return true;
}

void validate_access(const AccessSpec& a) {
    const bool direct = a.kind == AccessKind::Rest || a.kind == AccessKind::Soap;
    if (direct) {
        if (!a.endpoint) invalid("access.endpoint", "required for kind " + std::string(to_string(a.kind)));
        if (!is_absolute_url(*a.endpoint)) invalid("access.endpoint", "must be an absolute URL");
        if (a.gateway_id) invalid("access.gateway_id", "not allowed for kind " + std::string(to_string(a.kind)));
        if (a.driver) invalid("access.driver", "not allowed for kind " + std::string(to_string(a.kind)));
        if (a.native_address)
            invalid("access.native_address", "not allowed for kind " + std::string(to_string(a.kind)));
        return;
    }
    if (!a.gateway_id || a.gateway_id->empty()) invalid("access.gateway_id", "required for kind native");
    if (!a.driver || a.driver->empty()) invalid("access.driver", "required for kind native");
    if (!a.native_address) invalid("access.native_address", "required for kind native");
    if (!is_host_port(*a.native_address)) invalid("access.native_address", "must be host:port");
    if (a.endpoint) invalid("access.endpoint", "not allowed for kind native");
}

}  // namespace

void validate(const DeviceDescriptor& d) {
    if (d.id.empty()) invalid("id", "must be non-empty");
    if (d.capabilities.empty()) invalid("capabilities", "must be non-empty");
    for (const auto& cap : d.capabilities) {
        if (!is_capability_name(cap)) invalid("capabilities", "malformed capability name '" + cap + "'");
    }
    if (d.location.zone.empty()) invalid("location.zone", "must be non-empty");
    if (!std::isfinite(d.location.x)) invalid("location.x", "must be finite");
    if (!std::isfinite(d.location.y)) invalid("location.y", "must be finite");
    validate_access(d.access);
}

}  // namespace tc::registry
