#include "tc/registry/json.hpp"

#include "tc/error.hpp"

namespace tc::registry {

using nlohmann::json;

json to_json(const Location& l) {
    return json{{"zone", l.zone}, {"x", l.x}, {"y", l.y}};
}

json to_json(const AccessSpec& a) {
    json j{{"kind", std::string(to_string(a.kind))}};
    if (a.endpoint) j["endpoint"] = *a.endpoint;
    if (a.gateway_id) j["gateway_id"] = *a.gateway_id;
    if (a.driver) j["driver"] = *a.driver;
    if (a.native_address) j["native_address"] = *a.native_address;
    return j;
}

json to_json(const DeviceDescriptor& d) {
    json extra = json::object();
    for (const auto& [k, v] : d.extra) extra[k] = v;
    return json{{"id", d.id},
                {"capabilities", json(std::vector<std::string>(d.capabilities.begin(), d.capabilities.end()))},
                {"location", to_json(d.location)},
                {"access", to_json(d.access)},
                {"last_heartbeat", d.last_heartbeat},
                {"extra", extra}};
}

namespace {

[[noreturn]] void bad(const std::string& path, const std::string& what) {
    throw Error(ErrorCode::InvalidDescriptor, path, what);
}

const json& member(const json& j, const char* key, const std::string& path) {
    auto it = j.find(key);
    if (it == j.end()) bad(path + key, "missing");
    return *it;
}

std::string string_member(const json& j, const char* key, const std::string& path) {
    const auto& v = member(j, key, path);
    if (!v.is_string()) bad(path + key, "must be a string");
    return v.get<std::string>();
}

double number_member(const json& j, const char* key, const std::string& path) {
    const auto& v = member(j, key, path);
    if (!v.is_number()) bad(path + key, "must be a number");
    return v.get<double>();
}

std::optional<std::string> optional_string(const json& j, const char* key, const std::string& path) {
    auto it = j.find(key);
    if (it == j.end() || it->is_null()) return std::nullopt;
    if (!it->is_string()) bad(path + key, "must be a string");
    return it->get<std::string>();
}

}  // namespace

Location location_from_json(const json& j) {
    if (!j.is_object()) bad("location", "must be an object");
    return Location{string_member(j, "zone", "location."), number_member(j, "x", "location."),
                    number_member(j, "y", "location.")};
}

AccessSpec access_from_json(const json& j) {
    if (!j.is_object()) bad("access", "must be an object");
    auto kind_text = string_member(j, "kind", "access.");
    auto kind = parse_access_kind(kind_text);
    if (!kind) bad("access.kind", "unknown kind '" + kind_text + "'");
    AccessSpec a;
    a.kind = *kind;
    a.endpoint = optional_string(j, "endpoint", "access.");
    a.gateway_id = optional_string(j, "gateway_id", "access.");
    a.driver = optional_string(j, "driver", "access.");
    a.native_address = optional_string(j, "native_address", "access.");
    return a;
}

DeviceDescriptor descriptor_from_json(const json& j) {
    if (!j.is_object()) bad("", "descriptor must be an object");
    DeviceDescriptor d;
    d.id = string_member(j, "id", "");
    const auto& caps = member(j, "capabilities", "");
    if (!caps.is_array()) bad("capabilities", "must be an array");
    for (const auto& c : caps) {
        if (!c.is_string()) bad("capabilities", "entries must be strings");
        d.capabilities.insert(c.get<std::string>());
    }
    d.location = location_from_json(member(j, "location", ""));
    d.access = access_from_json(member(j, "access", ""));
    if (auto it = j.find("last_heartbeat"); it != j.end() && !it->is_null()) {
        if (!it->is_number_integer()) bad("last_heartbeat", "must be an integer");
        d.last_heartbeat = it->get<Timestamp>();
    }
    if (auto it = j.find("extra"); it != j.end() && !it->is_null()) {
        if (!it->is_object()) bad("extra", "must be an object");
        for (const auto& [k, v] : it->items()) {
            if (!v.is_string()) bad("extra." + k, "must be a string");
            d.extra[k] = v.get<std::string>();
        }
    }
    return d;
}

}  // namespace tc::registry
