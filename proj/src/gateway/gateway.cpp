#include "tc/gateway/gateway.hpp"

#include <httplib.h>

#include <iostream>

#include "tc/error.hpp"
#include "tc/net/http_service.hpp"
#include "tc/net/url.hpp"

namespace tc::gateway {

using nlohmann::json;

GatewayConfig config_from_json(const json& j) {
    auto bad = [](const char* field, const char* why) { throw Error(ErrorCode::ConfigInvalid, field, why); };
    if (!j.is_object()) bad("", "config must be an object");
    GatewayConfig c;
    if (j.contains("gateway_id")) {
        if (!j["gateway_id"].is_string() || j["gateway_id"].get<std::string>().empty()) bad("gateway_id", "non-empty string");
        c.gateway_id = j["gateway_id"];
    }
    if (j.contains("listen")) {
        if (!j["listen"].is_string() || !net::parse_host_port(j["listen"].get<std::string>())) bad("listen", "host:port");
        c.listen = j["listen"];
    }
    if (j.contains("server_events_url")) {
        if (!j["server_events_url"].is_string() || !net::parse_url(j["server_events_url"].get<std::string>()))
            bad("server_events_url", "http URL");
        c.server_events_url = j["server_events_url"];
    }
    if (j.contains("drivers")) {
        if (!j["drivers"].is_array()) bad("drivers", "array of driver names");
        c.drivers.clear();
        for (const auto& d : j["drivers"]) {
            if (!d.is_string() || d.get<std::string>() != kLineProtoDriver) bad("drivers", "unsupported driver");
            c.drivers.insert(d.get<std::string>());
        }
    }
    if (j.contains("device_timeout_ms")) {
        if (!j["device_timeout_ms"].is_number_integer() || j["device_timeout_ms"].get<int>() <= 0)
            bad("device_timeout_ms", "positive integer");
        c.device_timeout_ms = j["device_timeout_ms"];
    }
    return c;
}

// ---------------------------------------------------------------- relay

EventRelay::EventRelay(std::string events_url) : url_(std::move(events_url)) {
    worker_ = std::thread([this] { run(); });
}

EventRelay::~EventRelay() {
    {
        std::lock_guard lock(mutex_);
        stopping_ = true;
    }
    cv_.notify_all();
    worker_.join();
}

std::string EventRelay::event_body(const std::string& device_id, const NativeEvent& evt) {
    nlohmann::ordered_json payload = nlohmann::ordered_json::object();
    for (const auto& [k, v] : evt.payload) payload[k] = v;
    nlohmann::ordered_json body;
    body["device_id"] = device_id;
    body["event_type"] = evt.event_type;
    body["payload"] = std::move(payload);
    return body.dump();
}

void EventRelay::enqueue(const std::string& device_id, const NativeEvent& evt) {
    {
        std::lock_guard lock(mutex_);
        queue_.push_back(event_body(device_id, evt));
    }
    cv_.notify_all();
}

void EventRelay::flush() {
    std::unique_lock lock(mutex_);
    cv_.wait(lock, [this] { return queue_.empty() && !busy_; });
}

bool EventRelay::post_once(const std::string& body) {
    auto url = net::parse_url(url_);
    if (!url) return false;
    httplib::Client client(url->origin());
    client.set_connection_timeout(1, 0);
    client.set_read_timeout(2, 0);
    auto res = client.Post(url->path, body, "application/json");
    return res && res->status >= 200 && res->status < 300;
}

void EventRelay::run() {
    std::unique_lock lock(mutex_);
    while (true) {
        cv_.wait(lock, [this] { return stopping_ || !queue_.empty(); });
        if (queue_.empty() && stopping_) return;
        auto body = std::move(queue_.front());
        queue_.pop_front();
        busy_ = true;
        lock.unlock();

        bool ok = !url_.empty() && (post_once(body) || post_once(body));
        if (ok) {
            ++delivered_;
        } else {
            ++dropped_;
            std::cerr << "[gateway] warning: dropped event after retry: " << body << "\n";
        }

        lock.lock();
        busy_ = false;
        cv_.notify_all();
    }
}

// ---------------------------------------------------------------- native link

NativeLink::NativeLink(std::string device_id, const std::string& native_address, int timeout_ms, EventSink sink)
    : device_id_(std::move(device_id)), timeout_ms_(timeout_ms), sink_(std::move(sink)) {
    auto hp = net::parse_host_port(native_address);
    if (!hp) throw net::NetError("bad native address " + native_address);
    socket_ = net::connect_tcp(hp->host, hp->port, std::chrono::milliseconds(timeout_ms));
    reader_ = std::thread([this] { read_loop(); });
}

NativeLink::~NativeLink() {
    alive_ = false;
    socket_.shutdown();
    reader_.join();
}

void NativeLink::set_device_id(std::string id) {
    std::lock_guard lock(reply_mutex_);
    device_id_ = std::move(id);
}

void NativeLink::read_loop() {
    net::LineReader reader(socket_);
    std::string line;
    while (alive_) {
        if (reader.read_line(line) != net::LineReader::Status::Line) break;
        NativeMessage msg;
        try {
            msg = decode_native(line);
        } catch (const Error& e) {
            std::cerr << "[gateway] ignoring line from device: " << e.what() << "\n";
            continue;
        }
        if (auto* evt = std::get_if<NativeEvent>(&msg)) {
            std::string id;
            {
                std::lock_guard lock(reply_mutex_);
                id = device_id_;
            }
            if (sink_) sink_(id, *evt);
            continue;
        }
        std::lock_guard lock(reply_mutex_);
        if (awaiting_) {
            reply_ = std::move(msg);
            reply_cv_.notify_all();
        }
    }
    alive_ = false;
    std::lock_guard lock(reply_mutex_);
    reply_cv_.notify_all();
}

Outcome NativeLink::send(const std::string& line) {
    std::lock_guard command(command_mutex_);
    if (!alive_) return Outcome::transport_error("connection closed");
    {
        std::lock_guard lock(reply_mutex_);
        reply_.reset();
        awaiting_ = true;
    }
    try {
        net::write_all(socket_, line);
    } catch (const net::NetError& e) {
        alive_ = false;
        return Outcome::transport_error(e.what());
    }

    std::unique_lock lock(reply_mutex_);
    bool got = reply_cv_.wait_for(lock, std::chrono::milliseconds(timeout_ms_),
                                  [this] { return reply_.has_value() || !alive_; });
    awaiting_ = false;
    if (!reply_) {
        // A late reply would desynchronize the stream; drop the connection.
        alive_ = false;
        socket_.shutdown();
        return got ? Outcome::transport_error("connection closed by device")
                   : Outcome::timeout("no reply within " + std::to_string(timeout_ms_) + " ms");
    }
    if (auto* err = std::get_if<NativeDeviceError>(&*reply_)) return Outcome::device_error(err->code, err->message);
    return Outcome::ok();
}

// ---------------------------------------------------------------- gateway

json envelope_to_json(const DispatchEnvelope& env) {
    json args = json::object();
    for (const auto& [k, v] : env.args) args[k] = v;
    return json{{"device_id", env.device_id},     {"driver", env.driver},
                {"native_address", env.native_address}, {"verb", env.verb},
                {"args", args},                  {"correlation", env.correlation_id},
                {"session", env.session_id}};
}

DispatchEnvelope envelope_from_json(const json& j) {
    auto str = [&](const char* key) {
        if (!j.contains(key) || !j[key].is_string()) throw std::invalid_argument(std::string("missing string '") + key + "'");
        return j[key].get<std::string>();
    };
    if (!j.is_object()) throw std::invalid_argument("envelope must be an object");
    DispatchEnvelope env;
    env.device_id = str("device_id");
    env.driver = str("driver");
    env.native_address = str("native_address");
    env.verb = str("verb");
    env.correlation_id = str("correlation");
    env.session_id = str("session");
    if (!j.contains("args") || !j["args"].is_object()) throw std::invalid_argument("missing object 'args'");
    for (const auto& [k, v] : j["args"].items()) {
        if (!v.is_string()) throw std::invalid_argument("arg '" + k + "' must be a string");
        env.args[k] = v.get<std::string>();
    }
    return env;
}

json result_json(const std::string& correlation, const Outcome& outcome) {
    json j{{"correlation", correlation}, {"outcome", std::string(to_string(outcome.kind))}};
    j["code"] = outcome.kind == OutcomeKind::DeviceError ? json(outcome.code) : json(nullptr);
    j["message"] = outcome.kind == OutcomeKind::Ok ? json(nullptr) : json(outcome.message);
    return j;
}

Gateway::Gateway(GatewayConfig config) : config_(std::move(config)) {
    relay_ = std::make_unique<EventRelay>(config_.server_events_url);
}

Gateway::~Gateway() {
    stop();
}

std::string Gateway::base_url() const {
    auto hp = net::parse_host_port(config_.listen);
    std::string host = hp && hp->host != "0.0.0.0" ? hp->host : "127.0.0.1";
    return "http://" + host + ":" + std::to_string(port_);
}

void Gateway::set_request_observer(RequestObserver observer) {
    std::lock_guard lock(observer_mutex_);
    observer_ = std::move(observer);
}

GatewayStats Gateway::stats() const {
    return {dispatches_.load(), relay_->delivered(), relay_->dropped()};
}

void Gateway::flush_relay() {
    relay_->flush();
}

std::shared_ptr<NativeLink> Gateway::link_for(const DispatchEnvelope& env) {
    {
        std::lock_guard lock(links_mutex_);
        auto it = links_.find(env.native_address);
        if (it != links_.end() && it->second->alive()) {
            it->second->set_device_id(env.device_id);
            return it->second;
        }
    }
    // Connect outside the lock so a slow device cannot stall the others.
    auto sink = [relay = relay_.get()](const std::string& device_id, const NativeEvent& evt) {
        relay->enqueue(device_id, evt);
    };
    auto link = std::make_shared<NativeLink>(env.device_id, env.native_address, config_.device_timeout_ms, sink);
    std::lock_guard lock(links_mutex_);
    auto& slot = links_[env.native_address];
    if (slot && slot->alive()) return slot;
    slot = link;
    return link;
}

Outcome Gateway::handle_dispatch(const DispatchEnvelope& env) {
    if (!config_.drivers.contains(env.driver)) throw Error(ErrorCode::UnknownDriver, env.driver);
    ++dispatches_;
    auto line = encode_native(env);
    std::shared_ptr<NativeLink> link;
    try {
        link = link_for(env);
    } catch (const net::NetError& e) {
        std::string what = e.what();
        if (what.find("timed out") != std::string::npos) return Outcome::timeout(what);
        return Outcome::transport_error(what);
    }
    return link->send(line);
}

void Gateway::start() {
    auto hp = net::parse_host_port(config_.listen);
    if (!hp) throw Error(ErrorCode::BindFailed, config_.listen, "listen must be host:port");
    server_ = std::make_unique<httplib::Server>();
    server_->set_socket_options(net::exclusive_socket_options);

    // Observed inside the handlers: the pre-routing hook runs before the
    // body has been read.
    auto observe = [this](const httplib::Request& req) {
        std::lock_guard lock(observer_mutex_);
        if (observer_) observer_(req.method, req.path, req.body);
    };
    server_->Get("/healthz", [observe](const httplib::Request& req, httplib::Response& res) {
        observe(req);
        res.set_content(R"({"status":"ok"})", "application/json");
    });
    server_->Post("/dispatch", [this, observe](const httplib::Request& req, httplib::Response& res) {
        observe(req);
        auto error = [&](const char* code, const std::string& message) {
            res.status = 400;
            res.set_content(json{{"error", {{"code", code}, {"message", message}}}}.dump(), "application/json");
        };
        DispatchEnvelope env;
        try {
            env = envelope_from_json(json::parse(req.body));
        } catch (const std::exception& e) {
            return error("BAD_REQUEST", e.what());
        }
        try {
            auto outcome = handle_dispatch(env);
            res.set_content(result_json(env.correlation_id, outcome).dump(), "application/json");
        } catch (const Error& e) {
            error(std::string(to_string(e.code())).c_str(), e.what());
        }
    });

    auto unknown = [observe](const httplib::Request& req, httplib::Response& res) {
        observe(req);
        res.status = 404;
    };
    server_->Get(".*", unknown);
    server_->Post(".*", unknown);

    if (hp->port == 0) {
        port_ = server_->bind_to_any_port(hp->host);
    } else {
        port_ = server_->bind_to_port(hp->host, hp->port) ? hp->port : -1;
    }
    if (port_ <= 0) throw Error(ErrorCode::BindFailed, config_.listen);
    server_thread_ = std::thread([this] { server_->listen_after_bind(); });
    server_->wait_until_ready();
}

void Gateway::stop() {
    if (server_) {
        server_->stop();
        if (server_thread_.joinable()) server_thread_.join();
        server_.reset();
    }
    std::lock_guard lock(links_mutex_);
    links_.clear();
}

}  // namespace tc::gateway
