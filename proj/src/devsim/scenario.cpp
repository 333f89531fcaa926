#include "tc/devsim/scenario.hpp"

#include <algorithm>
#include <fstream>
#include <set>

#include "tc/error.hpp"
#include "tc/net/url.hpp"
#include "tc/registry/json.hpp"

namespace tc::devsim {

using json = nlohmann::json;

std::string_view to_string(DeviceKind k) {
    switch (k) {
        case DeviceKind::Display: return "display";
        case DeviceKind::Speaker: return "speaker";
        case DeviceKind::Camera: return "camera";
        case DeviceKind::Echo: return "echo";
    }
    return "?";
}

std::string_view to_string(Protocol p) {
    switch (p) {
        case Protocol::Rest: return "rest";
        case Protocol::Soap: return "soap";
        case Protocol::Native: return "native";
    }
    return "?";
}

std::string_view to_string(Behavior b) {
    switch (b) {
        case Behavior::Normal: return "normal";
        case Behavior::Dead: return "dead";
        case Behavior::Busy: return "busy";
    }
    return "?";
}

std::string_view to_string(Heading h) {
    switch (h) {
        case Heading::North: return "north";
        case Heading::South: return "south";
        case Heading::East: return "east";
        case Heading::West: return "west";
    }
    return "?";
}

std::optional<Heading> parse_heading(std::string_view s) {
    for (auto h : {Heading::North, Heading::South, Heading::East, Heading::West}) {
        if (to_string(h) == s) return h;
    }
    return std::nullopt;
}

std::string capability_of(DeviceKind k) {
    switch (k) {
        case DeviceKind::Display: return "visual.display";
        case DeviceKind::Speaker: return "audio.speaker";
        case DeviceKind::Camera: return "vision.camera";
        case DeviceKind::Echo: return "debug.echo";
    }
    return {};
}

namespace {

[[noreturn]] void bad(const std::string& path, const std::string& message) {
    throw Error(ErrorCode::InvalidScenario, path, message);
}

template <typename Enum, std::size_t N>
Enum enum_field(const json& j, const std::string& key, const std::string& path, const Enum (&values)[N], Enum fallback) {
    if (!j.contains(key)) return fallback;
    if (j[key].is_string()) {
        for (auto v : values) {
            if (to_string(v) == j[key].get<std::string>()) return v;
        }
    }
    bad(path + "." + key, "unknown value");
}

std::string string_field(const json& j, const std::string& key, const std::string& path, std::string fallback) {
    if (!j.contains(key)) return fallback;
    if (!j[key].is_string()) bad(path + "." + key, "expected a string");
    return j[key].get<std::string>();
}

std::int64_t positive_ms(const json& j, const std::string& key, const std::string& path, std::int64_t fallback) {
    if (!j.contains(key)) return fallback;
    if (!j[key].is_number_integer() || j[key].get<std::int64_t>() <= 0) bad(path.empty() ? key : path + "." + key, "expected a positive integer");
    return j[key].get<std::int64_t>();
}

void check_listen(const std::string& listen, const std::string& path) {
    if (!net::parse_host_port(listen)) bad(path, "expected host:port");
}

registry::Location location_field(const json& j, const std::string& path) {
    try {
        return registry::location_from_json(j);
    } catch (const Error& e) {
        bad(path + "." + e.detail(), e.what());
    }
}

}  // namespace

ScenarioSpec scenario_from_json(const json& j) {
    if (!j.is_object()) bad("", "expected an object");
    ScenarioSpec spec;

    if (j.contains("gateways")) {
        if (!j["gateways"].is_array()) bad("gateways", "expected an array");
        for (std::size_t i = 0; i < j["gateways"].size(); ++i) {
            const auto& g = j["gateways"][i];
            auto path = "gateways[" + std::to_string(i) + "]";
            if (!g.is_object()) bad(path, "expected an object");
            GatewaySpec gs{string_field(g, "id", path, ""), string_field(g, "listen", path, "127.0.0.1:0")};
            if (gs.id.empty()) bad(path + ".id", "required");
            check_listen(gs.listen, path + ".listen");
            spec.gateways.push_back(std::move(gs));
        }
    }

    if (!j.contains("devices") || !j["devices"].is_array()) bad("devices", "expected an array");
    std::set<std::string> ids;
    for (std::size_t i = 0; i < j["devices"].size(); ++i) {
        const auto& d = j["devices"][i];
        auto path = "devices[" + std::to_string(i) + "]";
        if (!d.is_object()) bad(path, "expected an object");
        SimDeviceSpec ds;
        ds.id = string_field(d, "id", path, "");
        if (ds.id.empty()) bad(path + ".id", "required");
        if (!ids.insert(ds.id).second) bad(path + ".id", "duplicate device id");
        static constexpr DeviceKind kinds[] = {DeviceKind::Display, DeviceKind::Speaker, DeviceKind::Camera,
                                               DeviceKind::Echo};
        static constexpr Protocol protocols[] = {Protocol::Rest, Protocol::Soap, Protocol::Native};
        static constexpr Behavior behaviors[] = {Behavior::Normal, Behavior::Dead, Behavior::Busy};
        if (!d.contains("kind")) bad(path + ".kind", "required");
        ds.kind = enum_field(d, "kind", path, kinds, DeviceKind::Echo);
        ds.protocol = enum_field(d, "protocol", path, protocols, Protocol::Rest);
        ds.behavior = enum_field(d, "behavior", path, behaviors, Behavior::Normal);
        if (!d.contains("location")) bad(path + ".location", "required");
        ds.location = location_field(d["location"], path + ".location");
        ds.listen = string_field(d, "listen", path, "127.0.0.1:0");
        check_listen(ds.listen, path + ".listen");
        ds.gateway_id = string_field(d, "gateway", path, "gw-1");
        if (ds.protocol == Protocol::Native &&
            std::none_of(spec.gateways.begin(), spec.gateways.end(), [&](auto& g) { return g.id == ds.gateway_id; }))
            bad(path + ".gateway", "no such gateway in the scenario");
        spec.devices.push_back(std::move(ds));
    }

    if (j.contains("tables")) {
        try {
            spec.tables = runtime::tables_from_json(j["tables"]);
        } catch (const Error& e) {
            bad(e.detail(), e.what());
        }
    }

    if (j.contains("group")) {
        const auto& g = j["group"];
        if (!g.is_object()) bad("group", "expected an object");
        if (g.contains("position")) {
            const auto& p = g["position"];
            if (!p.is_object() || !p.value("x", json()).is_number() || !p.value("y", json()).is_number())
                bad("group.position", "expected {x, y}");
            spec.group.x = p["x"].get<double>();
            spec.group.y = p["y"].get<double>();
        }
        if (g.contains("heading")) {
            auto h = g["heading"].is_string() ? parse_heading(g["heading"].get<std::string>()) : std::nullopt;
            if (!h) bad("group.heading", "expected north|south|east|west");
            spec.group.heading = *h;
        }
        spec.group.tick_ms = positive_ms(g, "tick_ms", "group", 500);
    }

    if (j.contains("script")) {
        if (!j["script"].is_array()) bad("script", "expected an array");
        for (std::size_t i = 0; i < j["script"].size(); ++i) {
            const auto& a = j["script"][i];
            auto path = "script[" + std::to_string(i) + "]";
            if (!a.is_object()) bad(path, "expected an object");
            ScriptAction act;
            if (!a.contains("at_ms") || !a["at_ms"].is_number_integer() || a["at_ms"].get<std::int64_t>() < 0)
                bad(path + ".at_ms", "expected a non-negative integer");
            act.at_ms = a["at_ms"];
            auto action = string_field(a, "action", path, "");
            if (action == "steer") {
                act.kind = ScriptAction::Kind::Steer;
                auto h = parse_heading(string_field(a, "heading", path, ""));
                if (!h) bad(path + ".heading", "expected north|south|east|west");
                act.heading = *h;
            } else if (action == "request") {
                act.kind = ScriptAction::Kind::Request;
                act.logic = string_field(a, "logic", path, "");
                if (act.logic.empty()) bad(path + ".logic", "required");
                if (a.contains("params")) {
                    if (!a["params"].is_object()) bad(path + ".params", "expected an object");
                    act.params = a["params"];
                }
                if (a.contains("user")) act.user = location_field(a["user"], path + ".user");
            } else {
                bad(path + ".action", "expected steer or request");
            }
            spec.script.push_back(std::move(act));
        }
        std::stable_sort(spec.script.begin(), spec.script.end(),
                         [](const ScriptAction& a, const ScriptAction& b) { return a.at_ms < b.at_ms; });
    }

    if (j.contains("run_ms")) {
        if (!j["run_ms"].is_number_integer() || j["run_ms"].get<std::int64_t>() < 0) bad("run_ms", "expected a non-negative integer");
        spec.run_ms = j["run_ms"];
    }
    if (j.contains("sensing_radius_m")) {
        if (!j["sensing_radius_m"].is_number() || j["sensing_radius_m"].get<double>() < 0)
            bad("sensing_radius_m", "expected a non-negative number");
        spec.sensing_radius_m = j["sensing_radius_m"];
    }
    spec.heartbeat_ms = positive_ms(j, "heartbeat_ms", "", 10'000);
    spec.controller_listen = string_field(j, "controller", "", "127.0.0.1:0");
    check_listen(spec.controller_listen, "controller");
    return spec;
}

ScenarioSpec load_scenario(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorCode::InvalidScenario, path, "cannot open scenario file");
    auto j = json::parse(in, nullptr, false);
    if (j.is_discarded()) throw Error(ErrorCode::InvalidScenario, path, "not valid JSON");
    return scenario_from_json(j);
}

}  // namespace tc::devsim
