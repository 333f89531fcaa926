#pragma once

#include <atomic>
#include <condition_variable>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include <json.hpp>

#include "tc/clock.hpp"
#include "tc/devsim/scenario.hpp"

namespace tc::gateway {
class Gateway;
}
namespace tc::net {
class HttpService;
}

namespace tc::devsim {

/// One request or native line received by a simulated device or gateway.
struct CaptureEntry {
    Timestamp at = 0;
    std::string target;   // device or gateway id
    std::string channel;  // "http" | "line"
    std::string method;   // http only
    std::string path;     // http only
    std::string body;     // request body, or the raw line including "\n"
    std::string correlation;
};

nlohmann::json to_json(const CaptureEntry& e);

struct EmittedEvent {
    std::string device_id;
    std::string direction;
    bool delivered = false;  // reached the server or a gateway connection
};

struct WorldOptions {
    std::string server_url;  // coordination server; empty disables registration and events
    bool heartbeat = true;
};

struct ScriptResult {
    DurationMs at_ms = 0;
    std::string action;  // "request" | "steer"
    int status = 0;      // HTTP status for requests, 0 on transport failure
    std::string session_id;
};

class SimDevice;

/// A running simulated device network plus the tourist group model.
class World {
public:
    World(ScenarioSpec spec, WorldOptions options);
    ~World();

    World(const World&) = delete;
    World& operator=(const World&) = delete;

    /// Starts gateways and devices, then self-registers every device.
    /// Throws Error(PortInUse) or Error(RegistrationFailed).
    void spawn();

    /// Advances the group one meter and lets cameras in range report.
    std::vector<EmittedEvent> tick();

    void steer(Heading h);
    /// Throws Error(InvalidHeading).
    void steer(std::string_view heading);

    GroupState group() const;

    /// Events written as EVT lines so far; each should eventually show up
    /// in some gateway's relay counters.
    std::size_t line_events_emitted() const { return line_events_.load(); }

    std::vector<CaptureEntry> capture() const;
    void clear_capture();

    std::optional<nlohmann::json> device_state(const std::string& id) const;

    /// gateway id -> base URL, valid after spawn.
    std::map<std::string, std::string> gateway_urls() const;
    gateway::Gateway* gateway(const std::string& id);

    /// Serves /sim/* on the scenario's controller address.
    void start_controller();
    int controller_port() const;

    /// Ticks every tick_ms on a background thread.
    void start_ticker();
    void stop_ticker();

    /// Plays the script on a fixed tick grid: at each grid time, actions
    /// due by then run first, then the tick. `realtime` paces the grid
    /// against the wall clock.
    std::vector<ScriptResult> run_script(bool realtime);

    void shutdown();

    const ScenarioSpec& spec() const { return spec_; }

private:
    void record(CaptureEntry entry);
    bool post_event(const std::string& device_id, const std::string& direction);
    void heartbeat_loop();

    ScenarioSpec spec_;
    WorldOptions options_;
    SystemClock clock_;

    mutable std::mutex group_mutex_;
    GroupState group_;

    std::atomic<std::size_t> line_events_{0};

    mutable std::mutex capture_mutex_;
    std::vector<CaptureEntry> capture_;

    std::map<std::string, std::unique_ptr<gateway::Gateway>> gateways_;
    std::vector<std::unique_ptr<SimDevice>> devices_;
    std::unique_ptr<net::HttpService> controller_;

    std::mutex loop_mutex_;
    std::condition_variable loop_cv_;
    bool stopping_ = false;
    bool ticker_stop_ = false;
    std::thread ticker_;
    std::thread heartbeat_;
};

}  // namespace tc::devsim
