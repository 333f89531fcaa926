#include "tc/planner/planner.hpp"

#include "tc/error.hpp"

namespace tc::planner {

using registry::AccessKind;
using registry::DeviceDescriptor;

std::string_view route_name(const DispatchRoute& route) {
    struct Namer {
        std::string_view operator()(const DirectRest&) const { return "direct-rest"; }
        std::string_view operator()(const DirectSoap&) const { return "direct-soap"; }
        std::string_view operator()(const ViaGateway&) const { return "via-gateway"; }
    };
    return std::visit(Namer{}, route);
}

DispatchRoute route_for(const registry::AccessSpec& access) {
    switch (access.kind) {
        case AccessKind::Rest: return DirectRest{access.endpoint.value_or("")};
        case AccessKind::Soap: return DirectSoap{access.endpoint.value_or("")};
        case AccessKind::Native: break;
    }
    return ViaGateway{access.gateway_id.value_or(""), access.driver.value_or(""),
                      access.native_address.value_or("")};
}

double proximity_score(double distance_m) noexcept {
    return 1.0 / (1.0 + distance_m);
}

bool is_eligible(const dsl::RoleSpec& role, const DeviceDescriptor& device, const PlanContext& ctx) {
    if (ctx.excluded.contains(device.id)) return false;
    if (!device.capabilities.contains(role.capability)) return false;
    if (ctx.now - device.last_heartbeat > ctx.ttl_ms) return false;
    for (const auto& c : role.constraints) {
        if (const auto* near = std::get_if<dsl::NearUser>(&c)) {
            if (near->radius_m && registry::distance(ctx.user_location, device.location) > *near->radius_m)
                return false;
        } else if (device.location.zone != std::get<dsl::InZone>(c).zone) {
            return false;
        }
    }
    return true;
}

namespace {

const DeviceDescriptor* find_device(const registry::RegistrySnapshot& snap, const std::string& id) {
    for (const auto& d : snap.devices) {
        if (d.id == id) return &d;
    }
    return nullptr;
}

Binding bind(const DeviceDescriptor& d, const PlanContext& ctx) {
    return Binding{d.id, route_for(d.access), proximity_score(registry::distance(ctx.user_location, d.location))};
}

Binding select(const dsl::RoleSpec& role, const registry::RegistrySnapshot& snapshot, const PlanContext& ctx) {
    const DeviceDescriptor* best = nullptr;
    double best_score = 0.0;
    for (const auto& d : snapshot.devices) {
        if (!is_eligible(role, d, ctx)) continue;
        double s = proximity_score(registry::distance(ctx.user_location, d.location));
        if (!best || s > best_score || (s == best_score && d.id < best->id)) {
            best = &d;
            best_score = s;
        }
    }
    if (!best) throw Error(ErrorCode::RoleUnsatisfied, role.name, "no eligible device");
    return bind(*best, ctx);
}

}  // namespace

BindingPlan plan_bindings(const dsl::CoordinationLogic& logic, const registry::RegistrySnapshot& snapshot,
                          const PlanContext& ctx) {
    BindingPlan plan;
    plan.logic_name = logic.name;
    plan.planned_at = ctx.now;
    for (const auto& role : logic.roles) plan.bindings.emplace(role.name, select(role, snapshot, ctx));
    return plan;
}

BindingPlan replan(const dsl::CoordinationLogic& logic, const registry::RegistrySnapshot& snapshot,
                   const PlanContext& ctx, const std::string& failed, const BindingPlan& prior) {
    bool participated = false;
    for (const auto& [_, b] : prior.bindings) participated |= b.device_id == failed;
    if (!participated) return prior;

    PlanContext next = ctx;
    next.excluded.insert(failed);

    BindingPlan plan;
    plan.logic_name = logic.name;
    plan.planned_at = next.now;
    for (const auto& role : logic.roles) {
        if (auto it = prior.bindings.find(role.name); it != prior.bindings.end()) {
            const auto* d = find_device(snapshot, it->second.device_id);
            if (d && is_eligible(role, *d, next)) {
                plan.bindings.emplace(role.name, bind(*d, next));
                continue;
            }
        }
        plan.bindings.emplace(role.name, select(role, snapshot, next));
    }
    return plan;
}

}  // namespace tc::planner
