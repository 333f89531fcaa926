#pragma once

#include <atomic>
#include <memory>
#include <string>

#include "tc/clock.hpp"
#include "tc/facade/config.hpp"
#include "tc/registry/registry.hpp"
#include "tc/runtime/dispatcher.hpp"
#include "tc/runtime/engine.hpp"

namespace tc::net {
class HttpService;
}

namespace tc::facade {

/// The coordination server: registry, logic store, planner and runtime
/// behind one HTTP API.
class Server {
public:
    /// Loads tables, the persisted registry and preloaded logics. Throws
    /// Error(ConfigInvalid, field).
    explicit Server(Config config, const Clock& clock = default_clock());
    ~Server();

    Server(const Server&) = delete;
    Server& operator=(const Server&) = delete;

    /// Throws Error(BindFailed).
    void start();
    /// Stops accepting, lets in-flight requests finish, then stops sessions.
    void stop();

    int port() const;
    std::string base_url() const;

    registry::Registry& registry() { return registry_; }
    runtime::Engine& engine() { return *engine_; }
    runtime::GatewayDirectory& gateways() { return gateways_; }
    const Config& config() const { return config_; }

    static const Clock& default_clock();

private:
    void routes();

    Config config_;
    const Clock& clock_;
    registry::Registry registry_;
    runtime::GatewayDirectory gateways_;
    runtime::HttpDispatcher dispatcher_;
    std::unique_ptr<runtime::Engine> engine_;
    std::unique_ptr<net::HttpService> http_;
    std::atomic<bool> stopping_{false};
};

}  // namespace tc::facade
