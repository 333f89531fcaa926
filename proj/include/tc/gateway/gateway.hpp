#pragma once

#include <atomic>
#include <condition_variable>
#include <deque>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <set>
#include <string>
#include <thread>

#include <json.hpp>

#include "tc/gateway/lineproto.hpp"
#include "tc/net/socket.hpp"
#include "tc/outcome.hpp"

namespace httplib {
class Server;
}

namespace tc::gateway {

struct GatewayConfig {
    std::string gateway_id = "gw-1";
    std::string listen = "127.0.0.1:0";
    std::string server_events_url;  // e.g. http://127.0.0.1:8080/events; empty disables relay
    std::set<std::string> drivers{std::string(kLineProtoDriver)};
    int device_timeout_ms = 1500;
};

/// Parses the gateway config file schema. Throws Error(ConfigInvalid, field).
GatewayConfig config_from_json(const nlohmann::json& j);

/// POSTs relayed device events to the coordination server. Delivery is
/// at-least-once with a single retry; events that fail twice are dropped and
/// counted.
class EventRelay {
public:
    explicit EventRelay(std::string events_url);
    ~EventRelay();

    EventRelay(const EventRelay&) = delete;
    EventRelay& operator=(const EventRelay&) = delete;

    void enqueue(const std::string& device_id, const NativeEvent& evt);

    /// Blocks until the queue is drained (tests).
    void flush();

    std::size_t delivered() const { return delivered_; }
    std::size_t dropped() const { return dropped_; }

    static std::string event_body(const std::string& device_id, const NativeEvent& evt);

private:
    void run();
    bool post_once(const std::string& body);

    std::string url_;
    std::mutex mutex_;
    std::condition_variable cv_;
    std::deque<std::string> queue_;
    bool busy_ = false;
    bool stopping_ = false;
    std::atomic<std::size_t> delivered_{0};
    std::atomic<std::size_t> dropped_{0};
    std::thread worker_;
};

/// One TCP connection to a native device. Commands are serialized; a reader
/// thread routes replies to the waiting command and events to the relay.
class NativeLink {
public:
    using EventSink = std::function<void(const std::string& device_id, const NativeEvent&)>;

    NativeLink(std::string device_id, const std::string& native_address, int timeout_ms, EventSink sink);
    ~NativeLink();

    NativeLink(const NativeLink&) = delete;
    NativeLink& operator=(const NativeLink&) = delete;

    /// Sends one encoded command and waits for OK/ERR.
    Outcome send(const std::string& line);

    bool alive() const { return alive_; }
    void set_device_id(std::string id);

private:
    void read_loop();

    std::string device_id_;
    int timeout_ms_;
    EventSink sink_;
    net::Socket socket_;
    std::atomic<bool> alive_{true};

    std::mutex command_mutex_;  // one outstanding command
    std::mutex reply_mutex_;
    std::condition_variable reply_cv_;
    std::optional<NativeMessage> reply_;
    bool awaiting_ = false;
    std::thread reader_;
};

struct GatewayStats {
    std::size_t dispatches = 0;
    std::size_t relayed = 0;
    std::size_t relay_dropped = 0;
};

class Gateway {
public:
    explicit Gateway(GatewayConfig config);
    ~Gateway();

    Gateway(const Gateway&) = delete;
    Gateway& operator=(const Gateway&) = delete;

    /// Binds and serves in a background thread. Throws Error(BindFailed).
    void start();
    void stop();

    int port() const { return port_; }
    std::string base_url() const;
    const GatewayConfig& config() const { return config_; }

    /// Translates and delivers one envelope. Throws Error(UnknownDriver) or
    /// Error(EncodingError); device-leg failures come back in the Outcome.
    Outcome handle_dispatch(const DispatchEnvelope& env);

    /// Called for every HTTP request the gateway receives (traffic capture).
    using RequestObserver = std::function<void(const std::string& method, const std::string& path,
                                               const std::string& body)>;
    void set_request_observer(RequestObserver observer);

    GatewayStats stats() const;
    void flush_relay();

private:
    std::shared_ptr<NativeLink> link_for(const DispatchEnvelope& env);

    GatewayConfig config_;
    std::unique_ptr<EventRelay> relay_;
    std::unique_ptr<httplib::Server> server_;
    std::thread server_thread_;
    int port_ = 0;

    std::mutex links_mutex_;
    std::map<std::string, std::shared_ptr<NativeLink>> links_;  // by native_address

    std::mutex observer_mutex_;
    RequestObserver observer_;
    std::atomic<std::size_t> dispatches_{0};
};

/// JSON <-> envelope on the /dispatch wire.
nlohmann::json envelope_to_json(const DispatchEnvelope& env);
DispatchEnvelope envelope_from_json(const nlohmann::json& j);  // throws std::invalid_argument

nlohmann::json result_json(const std::string& correlation, const Outcome& outcome);

}  // namespace tc::gateway
