#pragma once

#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "tc/clock.hpp"
#include "tc/registry/types.hpp"
#include "tc/runtime/value.hpp"

namespace tc::devsim {

enum class DeviceKind { Display, Speaker, Camera, Echo };
enum class Protocol { Rest, Soap, Native };
enum class Behavior { Normal, Dead, Busy };
enum class Heading { North, South, East, West };

std::string_view to_string(DeviceKind k);
std::string_view to_string(Protocol p);
std::string_view to_string(Behavior b);
std::string_view to_string(Heading h);
std::optional<Heading> parse_heading(std::string_view s);

/// Capability a simulated device of this kind advertises.
std::string capability_of(DeviceKind k);

struct SimDeviceSpec {
    std::string id;
    DeviceKind kind = DeviceKind::Echo;
    Protocol protocol = Protocol::Rest;
    registry::Location location;
    Behavior behavior = Behavior::Normal;
    std::string listen = "127.0.0.1:0";
    std::string gateway_id = "gw-1";  // native devices only
};

struct GatewaySpec {
    std::string id;
    std::string listen = "127.0.0.1:0";
};

struct GroupState {
    double x = 0.0;
    double y = 0.0;
    Heading heading = Heading::East;
    DurationMs tick_ms = 500;
};

struct ScriptAction {
    enum class Kind { Request, Steer };
    DurationMs at_ms = 0;
    Kind kind = Kind::Steer;
    Heading heading = Heading::East;  // steer
    std::string logic;                // request
    nlohmann::json params = nlohmann::json::object();
    registry::Location user;
};

struct ScenarioSpec {
    std::vector<SimDeviceSpec> devices;
    std::vector<GatewaySpec> gateways;
    runtime::Tables tables;
    GroupState group;
    std::vector<ScriptAction> script;  // sorted by at_ms, stable
    DurationMs run_ms = 0;             // script length; 0 means last action + 2 ticks
    double sensing_radius_m = 100.0;
    DurationMs heartbeat_ms = 10'000;
    std::string controller_listen = "127.0.0.1:0";
};

/// Throws Error(InvalidScenario, field path).
ScenarioSpec scenario_from_json(const nlohmann::json& j);
ScenarioSpec load_scenario(const std::string& path);

}  // namespace tc::devsim
