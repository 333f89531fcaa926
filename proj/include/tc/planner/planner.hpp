#pragma once

#include <map>
#include <set>
#include <string>
#include <variant>

#include "tc/dsl/ast.hpp"
#include "tc/registry/types.hpp"

namespace tc::planner {

struct PlanContext {
    registry::Location user_location;
    Timestamp now = 0;
    DurationMs ttl_ms = 30'000;
    std::set<std::string> excluded;  // never selected
};

struct DirectRest {
    std::string endpoint;
    bool operator==(const DirectRest&) const = default;
};

struct DirectSoap {
    std::string endpoint;
    bool operator==(const DirectSoap&) const = default;
};

struct ViaGateway {
    std::string gateway_id;
    std::string driver;
    std::string native_address;
    bool operator==(const ViaGateway&) const = default;
};

using DispatchRoute = std::variant<DirectRest, DirectSoap, ViaGateway>;

/// "direct-rest" | "direct-soap" | "via-gateway"
std::string_view route_name(const DispatchRoute& route);

struct Binding {
    std::string device_id;
    DispatchRoute route;
    double score = 0.0;
    bool operator==(const Binding&) const = default;
};

struct BindingPlan {
    std::string logic_name;
    std::map<std::string, Binding> bindings;  // role -> binding
    Timestamp planned_at = 0;
    bool operator==(const BindingPlan&) const = default;
};

/// REST and SOAP devices are called directly; everything else goes through
/// its gateway.
DispatchRoute route_for(const registry::AccessSpec& access);

/// Proximity score, 1 / (1 + distance in meters).
double proximity_score(double distance_m) noexcept;

bool is_eligible(const dsl::RoleSpec& role, const registry::DeviceDescriptor& device, const PlanContext& ctx);

/// Binds every role to its highest-scoring eligible device (ties go to the
/// smaller id). Throws Error(RoleUnsatisfied, role) if any role has no
/// candidate; roles are checked in declaration order.
BindingPlan plan_bindings(const dsl::CoordinationLogic& logic, const registry::RegistrySnapshot& snapshot,
                          const PlanContext& ctx);

/// Re-plans with `failed` excluded. Roles whose prior device is still
/// eligible keep it. If `failed` served no role, `prior` is returned as is.
BindingPlan replan(const dsl::CoordinationLogic& logic, const registry::RegistrySnapshot& snapshot,
                   const PlanContext& ctx, const std::string& failed, const BindingPlan& prior);

}  // namespace tc::planner
