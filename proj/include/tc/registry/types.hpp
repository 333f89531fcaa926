#pragma once

#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "tc/clock.hpp"

namespace tc::registry {

struct Location {
    std::string zone;
    double x = 0.0;  // meters east
    double y = 0.0;  // meters north

    bool operator==(const Location&) const = default;
};

double distance(const Location& a, const Location& b) noexcept;

enum class AccessKind { Rest, Soap, Native };

std::string_view to_string(AccessKind kind);
std::optional<AccessKind> parse_access_kind(std::string_view s);

/// How a device is reached. Which optional fields are present depends on
/// `kind`: rest/soap carry `endpoint`, native carries the gateway triple.
struct AccessSpec {
    AccessKind kind = AccessKind::Rest;
    std::optional<std::string> endpoint;
    std::optional<std::string> gateway_id;
    std::optional<std::string> driver;
    std::optional<std::string> native_address;

    static AccessSpec rest(std::string endpoint);
    static AccessSpec soap(std::string endpoint);
    static AccessSpec native(std::string gateway_id, std::string driver, std::string native_address);

    bool operator==(const AccessSpec&) const = default;
};

struct DeviceDescriptor {
    std::string id;
    std::set<std::string> capabilities;
    Location location;
    AccessSpec access;
    Timestamp last_heartbeat = 0;
    std::map<std::string, std::string> extra;

    bool operator==(const DeviceDescriptor&) const = default;
};

/// Point-in-time copy of the registry, devices sorted ascending by id.
struct RegistrySnapshot {
    Timestamp taken_at = 0;
    std::vector<DeviceDescriptor> devices;
};

bool is_absolute_url(std::string_view s) noexcept;

/// Throws Error(InvalidDescriptor, <field path>) on the first violated rule.
void validate(const DeviceDescriptor& d);

}  // namespace tc::registry
