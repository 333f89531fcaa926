#pragma once

#include <map>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "tc/clock.hpp"
#include "tc/outcome.hpp"
#include "tc/planner/planner.hpp"
#include "tc/runtime/value.hpp"

namespace tc::runtime {

struct AbstractInstruction {
    std::string session_id;
    std::string correlation_id;
    std::string role;
    std::string verb;
    std::vector<Value> args;
    Timestamp issued_at = 0;
};

struct DispatchResult {
    std::string correlation_id;
    Outcome outcome;
    int attempts = 0;
    planner::DispatchRoute route_used;
};

struct DispatchOptions {
    int timeout_ms = 2000;
    int max_attempts = 2;
};

class Dispatcher {
public:
    virtual ~Dispatcher() = default;

    /// Delivers `instr` to `device_id` over `route`. Never throws for
    /// device or network trouble; that is reported in the outcome.
    virtual DispatchResult dispatch(const AbstractInstruction& instr, const std::string& device_id,
                                    const planner::DispatchRoute& route, const DispatchOptions& options) = 0;
};

/// gateway id -> base URL
class GatewayDirectory {
public:
    GatewayDirectory() = default;
    explicit GatewayDirectory(std::map<std::string, std::string> urls) : urls_(std::move(urls)) {}

    void set(const std::string& gateway_id, std::string base_url);
    std::optional<std::string> find(const std::string& gateway_id) const;

private:
    mutable std::mutex mutex_;
    std::map<std::string, std::string> urls_;
};

/// Speaks the direct REST and SOAP wire formats and the gateway /dispatch
/// envelope over HTTP.
class HttpDispatcher final : public Dispatcher {
public:
    explicit HttpDispatcher(const GatewayDirectory& gateways) : gateways_(gateways) {}

    DispatchResult dispatch(const AbstractInstruction& instr, const std::string& device_id,
                            const planner::DispatchRoute& route, const DispatchOptions& options) override;

    /// One attempt, no retry.
    Outcome attempt(const AbstractInstruction& instr, const std::string& device_id,
                    const planner::DispatchRoute& route, int timeout_ms);

private:
    const GatewayDirectory& gateways_;
};

}  // namespace tc::runtime
