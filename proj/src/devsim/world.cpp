#include "tc/devsim/world.hpp"

#include <httplib.h>

#include <cmath>
#include <set>

#include "tc/error.hpp"
#include "tc/gateway/gateway.hpp"
#include "tc/gateway/lineproto.hpp"
#include "tc/net/http_service.hpp"
#include "tc/net/socket.hpp"
#include "tc/net/url.hpp"
#include "tc/registry/json.hpp"
#include "tc/runtime/wire.hpp"

namespace tc::devsim {

using json = nlohmann::json;
using namespace std::chrono_literals;

json to_json(const CaptureEntry& e) {
    json j{{"at", e.at}, {"target", e.target}, {"channel", e.channel}};
    if (e.channel == "http") {
        j["method"] = e.method;
        j["path"] = e.path;
    }
    j["body"] = e.body;
    j["correlation"] = e.correlation.empty() ? json() : json(e.correlation);
    return j;
}

namespace {

std::string correlation_of(const std::string& body) {
    auto j = json::parse(body, nullptr, false);
    if (!j.is_discarded() && j.is_object() && j.contains("correlation") && j["correlation"].is_string())
        return j["correlation"];
    if (auto soap = runtime::parse_soap_request(body)) return soap->correlation;
    return {};
}

struct DeviceReply {
    bool ok = true;
    std::string code;
    std::string message;
};

struct HttpResult {
    int status = 0;
    std::string body;
};

std::optional<HttpResult> post_json(const std::string& base_url, const std::string& path, const std::string& body) {
    auto url = net::parse_url(base_url);
    if (!url) return std::nullopt;
    httplib::Client client(url->origin());
    client.set_connection_timeout(2s);
    client.set_read_timeout(5s);
    auto res = client.Post(net::join_path(url->path, path), body, "application/json");
    if (!res) return std::nullopt;
    return HttpResult{res->status, res->body};
}

}  // namespace

/// Behaviour shared by every protocol front end.
class SimDevice {
public:
    using Recorder = std::function<void(CaptureEntry)>;

    SimDevice(SimDeviceSpec spec, Recorder recorder) : spec_(std::move(spec)), recorder_(std::move(recorder)) {}
    virtual ~SimDevice() = default;

    const SimDeviceSpec& spec() const { return spec_; }
    virtual void start() = 0;
    virtual void stop() = 0;
    virtual std::string address() const = 0;
    virtual registry::AccessSpec access() const = 0;
    /// Native cameras write EVT lines on their gateway connection.
    virtual bool emit_line(const std::string&) { return false; }

    DeviceReply handle(const std::string& verb, const std::map<std::string, std::string>& args) {
        std::lock_guard lock(mutex_);
        ++commands_;
        if (spec_.behavior == Behavior::Busy) return {false, "BUSY", "device busy"};
        auto arg = [&](const char* name) -> std::optional<std::string> {
            auto it = args.find(name);
            if (it == args.end()) return std::nullopt;
            return it->second;
        };
        if (verb == "ping") return {};
        switch (spec_.kind) {
            case DeviceKind::Display:
                if (verb == "show") {
                    auto text = arg("text");
                    if (!text) return {false, "BAD_ARGS", "show needs text"};
                    text_ = *text;
                    return {};
                }
                if (verb == "clear") {
                    text_.reset();
                    return {};
                }
                break;
            case DeviceKind::Speaker:
                if (verb == "announce") {
                    auto text = arg("text");
                    if (!text) return {false, "BAD_ARGS", "announce needs text"};
                    announcements_.push_back(*text);
                    return {};
                }
                break;
            case DeviceKind::Camera:
                if (verb == "monitor") {
                    monitoring_ = arg("target").value_or("");
                    return {};
                }
                break;
            case DeviceKind::Echo:
                last_verb_ = verb;
                last_args_ = args;
                return {};
        }
        return {false, "UNSUPPORTED_VERB", verb};
    }

    json state() const {
        std::lock_guard lock(mutex_);
        json j{{"id", spec_.id},
               {"kind", to_string(spec_.kind)},
               {"protocol", to_string(spec_.protocol)},
               {"behavior", to_string(spec_.behavior)},
               {"address", address()},
               {"commands", commands_}};
        switch (spec_.kind) {
            case DeviceKind::Display: j["text"] = text_ ? json(*text_) : json(); break;
            case DeviceKind::Speaker: j["announcements"] = announcements_; break;
            case DeviceKind::Camera: j["monitoring"] = monitoring_ ? json(*monitoring_) : json(); break;
            case DeviceKind::Echo:
                j["last_verb"] = last_verb_;
                j["last_args"] = last_args_;
                break;
        }
        return j;
    }

protected:
    SimDeviceSpec spec_;
    Recorder recorder_;

private:
    mutable std::mutex mutex_;
    std::size_t commands_ = 0;
    std::optional<std::string> text_;
    std::vector<std::string> announcements_;
    std::optional<std::string> monitoring_;
    std::string last_verb_;
    std::map<std::string, std::string> last_args_;
};

namespace {

net::HostPort listen_of(const SimDeviceSpec& spec) { return *net::parse_host_port(spec.listen); }

/// Registered but never listening.
class DeadDevice final : public SimDevice {
public:
    using SimDevice::SimDevice;

    void start() override {
        auto hp = listen_of(spec_);
        host_ = hp.host;
        port_ = hp.port != 0 ? hp.port : net::pick_free_port();
    }
    void stop() override {}
    std::string address() const override { return host_ + ":" + std::to_string(port_); }
    registry::AccessSpec access() const override {
        switch (spec_.protocol) {
            case Protocol::Rest: return registry::AccessSpec::rest("http://" + address());
            case Protocol::Soap: return registry::AccessSpec::soap("http://" + address() + "/soap");
            case Protocol::Native: break;
        }
        return registry::AccessSpec::native(spec_.gateway_id, std::string(gateway::kLineProtoDriver), address());
    }

private:
    std::string host_;
    int port_ = 0;
};

/// REST (`POST /actions/{verb}`) or SOAP (`POST /soap`) front end.
class HttpDevice final : public SimDevice {
public:
    HttpDevice(SimDeviceSpec spec, Recorder recorder, std::function<Timestamp()> now)
        : SimDevice(std::move(spec), std::move(recorder)), now_(std::move(now)) {}

    void start() override {
        auto& srv = service_.server();
        srv.Post(R"(/actions/([a-z][a-z0-9_]*))", [this](const httplib::Request& req, httplib::Response& res) {
            observe(req);
            if (spec_.protocol != Protocol::Rest) {
                res.status = 404;
                return;
            }
            auto parsed = runtime::parse_rest_request(req.body);
            if (!parsed) {
                res.status = 400;
                res.set_content(runtime::rest_error_reply("BAD_REQUEST", "malformed body"), "application/json");
                return;
            }
            std::map<std::string, std::string> args;
            for (const auto& [k, v] : parsed->args) args[k] = runtime::canonical(v);
            auto reply = handle(req.matches[1], args);
            res.set_content(reply.ok ? std::string(runtime::kRestOkReply) : runtime::rest_error_reply(reply.code, reply.message),
                            "application/json");
        });
        srv.Post("/soap", [this](const httplib::Request& req, httplib::Response& res) {
            observe(req);
            if (spec_.protocol != Protocol::Soap) {
                res.status = 404;
                return;
            }
            auto parsed = runtime::parse_soap_request(req.body);
            if (!parsed) {
                res.status = 400;
                res.set_content(runtime::soap_fault_reply("BAD_REQUEST", "malformed envelope"), "text/xml");
                return;
            }
            std::map<std::string, std::string> args(parsed->args.begin(), parsed->args.end());
            auto reply = handle(parsed->verb, args);
            res.set_content(reply.ok ? std::string(runtime::kSoapOkReply) : runtime::soap_fault_reply(reply.code, reply.message),
                            "text/xml");
        });
        auto unknown = [this](const httplib::Request& req, httplib::Response& res) {
            observe(req);
            res.status = 404;
        };
        srv.Get(".*", unknown);
        srv.Post(".*", unknown);
        auto hp = listen_of(spec_);
        host_ = hp.host;
        if (!service_.start(hp.host, hp.port)) throw Error(ErrorCode::PortInUse, spec_.listen, "cannot bind " + spec_.id);
    }
    void stop() override { service_.stop(); }
    std::string address() const override { return host_ + ":" + std::to_string(service_.port()); }
    registry::AccessSpec access() const override {
        if (spec_.protocol == Protocol::Soap) return registry::AccessSpec::soap("http://" + address() + "/soap");
        return registry::AccessSpec::rest("http://" + address());
    }

private:
    void observe(const httplib::Request& req) {
        recorder_({now_(), spec_.id, "http", req.method, req.path, req.body, correlation_of(req.body)});
    }

    std::function<Timestamp()> now_;
    net::HttpService service_;
    std::string host_;
};

/// Line-protocol front end; each gateway connection gets its own reader.
class NativeDevice final : public SimDevice {
public:
    NativeDevice(SimDeviceSpec spec, Recorder recorder, std::function<Timestamp()> now)
        : SimDevice(std::move(spec), std::move(recorder)), now_(std::move(now)) {}
    ~NativeDevice() override { stop(); }

    void start() override {
        auto hp = listen_of(spec_);
        host_ = hp.host;
        try {
            listener_.emplace(hp.host, hp.port);
        } catch (const net::NetError& e) {
            throw Error(ErrorCode::PortInUse, spec_.listen, e.what());
        }
        acceptor_ = std::thread([this] { accept_loop(); });
    }

    void stop() override {
        if (!acceptor_.joinable()) return;
        stop_ = true;
        listener_->shutdown();
        acceptor_.join();
        {
            std::lock_guard lock(conns_mutex_);
            for (auto& c : conns_) c->socket.shutdown();
        }
        for (auto& t : readers_) t.join();
        readers_.clear();
    }

    std::string address() const override { return host_ + ":" + std::to_string(listener_ ? listener_->port() : 0); }
    registry::AccessSpec access() const override {
        return registry::AccessSpec::native(spec_.gateway_id, std::string(gateway::kLineProtoDriver), address());
    }

    bool emit_line(const std::string& line) override {
        std::lock_guard lock(conns_mutex_);
        bool sent = false;
        for (auto& c : conns_) {
            if (!c->open) continue;
            std::lock_guard write(c->write_mutex);
            try {
                net::write_all(c->socket, line);
                sent = true;
            } catch (const net::NetError&) {
                c->open = false;
            }
        }
        return sent;
    }

private:
    struct Conn {
        net::Socket socket;
        std::mutex write_mutex;
        std::atomic<bool> open{true};
    };

    void accept_loop() {
        while (!stop_) {
            auto s = listener_->accept(100ms);
            if (!s.valid()) continue;
            auto conn = std::make_shared<Conn>();
            conn->socket = std::move(s);
            std::lock_guard lock(conns_mutex_);
            conns_.push_back(conn);
            readers_.emplace_back([this, conn] { read_loop(conn); });
        }
    }

    void read_loop(std::shared_ptr<Conn> conn) {
        net::LineReader reader(conn->socket);
        std::string line;
        while (!stop_) {
            line.clear();
            auto status = reader.read_line(line, 200ms);
            if (status == net::LineReader::Status::Closed) break;
            if (status == net::LineReader::Status::Timeout) continue;
            recorder_({now_(), spec_.id, "line", "", "", line + "\n", ""});
            std::string out;
            try {
                auto cmd = gateway::decode_command(line);
                auto reply = handle(cmd.verb, cmd.args);
                out = reply.ok ? "OK\n" : "ERR " + reply.code + (reply.message.empty() ? "" : " " + reply.message) + "\n";
            } catch (const Error& e) {
                out = "ERR BAD_COMMAND malformed line\n";
            }
            std::lock_guard write(conn->write_mutex);
            try {
                net::write_all(conn->socket, out);
            } catch (const net::NetError&) {
                break;
            }
        }
        conn->open = false;
    }

    std::function<Timestamp()> now_;
    std::string host_;
    std::optional<net::TcpListener> listener_;
    std::atomic<bool> stop_{false};
    std::thread acceptor_;
    std::mutex conns_mutex_;
    std::vector<std::shared_ptr<Conn>> conns_;
    std::vector<std::thread> readers_;
};

}  // namespace

World::World(ScenarioSpec spec, WorldOptions options)
    : spec_(std::move(spec)), options_(std::move(options)), group_(spec_.group) {}

World::~World() { shutdown(); }

void World::record(CaptureEntry entry) {
    std::lock_guard lock(capture_mutex_);
    capture_.push_back(std::move(entry));
}

void World::spawn() {
    // Explicit ports must be distinct; ephemeral ones cannot collide.
    std::set<std::string> taken;
    auto claim = [&](const std::string& listen) {
        auto hp = *net::parse_host_port(listen);
        if (hp.port == 0) return;
        if (!taken.insert(std::to_string(hp.port)).second)
            throw Error(ErrorCode::PortInUse, listen, "listen port used twice in the scenario");
    };
    for (const auto& g : spec_.gateways) claim(g.listen);
    for (const auto& d : spec_.devices) claim(d.listen);

    auto now = [this] { return clock_.now(); };
    for (const auto& g : spec_.gateways) {
        gateway::GatewayConfig cfg;
        cfg.gateway_id = g.id;
        cfg.listen = g.listen;
        if (!options_.server_url.empty()) cfg.server_events_url = net::join_path(options_.server_url, "/events");
        auto gw = std::make_unique<gateway::Gateway>(cfg);
        gw->set_request_observer([this, id = g.id, now](const std::string& method, const std::string& path,
                                                       const std::string& body) {
            record({now(), id, "http", method, path, body, correlation_of(body)});
        });
        try {
            gw->start();
        } catch (const Error& e) {
            throw Error(ErrorCode::PortInUse, g.listen, e.what());
        }
        gateways_[g.id] = std::move(gw);
    }

    auto recorder = [this](CaptureEntry e) { record(std::move(e)); };
    for (const auto& d : spec_.devices) {
        std::unique_ptr<SimDevice> dev;
        if (d.behavior == Behavior::Dead) {
            dev = std::make_unique<DeadDevice>(d, recorder);
        } else if (d.protocol == Protocol::Native) {
            dev = std::make_unique<NativeDevice>(d, recorder, now);
        } else {
            dev = std::make_unique<HttpDevice>(d, recorder, now);
        }
        dev->start();
        devices_.push_back(std::move(dev));
    }

    if (options_.server_url.empty()) return;
    for (const auto& dev : devices_) {
        registry::DeviceDescriptor desc;
        desc.id = dev->spec().id;
        desc.capabilities = {capability_of(dev->spec().kind)};
        desc.location = dev->spec().location;
        desc.access = dev->access();
        auto res = post_json(options_.server_url, "/devices", registry::to_json(desc).dump());
        if (!res || res->status / 100 != 2)
            throw Error(ErrorCode::RegistrationFailed, desc.id,
                        res ? "server replied " + std::to_string(res->status) : "server unreachable");
    }
    if (options_.heartbeat) heartbeat_ = std::thread([this] { heartbeat_loop(); });
}

void World::heartbeat_loop() {
    std::unique_lock lock(loop_mutex_);
    while (!loop_cv_.wait_for(lock, std::chrono::milliseconds(spec_.heartbeat_ms), [&] { return stopping_; })) {
        lock.unlock();
        for (const auto& dev : devices_) post_json(options_.server_url, "/devices/" + dev->spec().id + "/heartbeat", "{}");
        lock.lock();
    }
}

bool World::post_event(const std::string& device_id, const std::string& direction) {
    if (options_.server_url.empty()) return false;
    json body{{"device_id", device_id}, {"event_type", "movement"}, {"payload", {{"direction", direction}}}};
    auto res = post_json(options_.server_url, "/events", body.dump());
    return res && res->status / 100 == 2;
}

std::vector<EmittedEvent> World::tick() {
    GroupState g;
    {
        std::lock_guard lock(group_mutex_);
        switch (group_.heading) {
            case Heading::North: group_.y += 1; break;
            case Heading::South: group_.y -= 1; break;
            case Heading::East: group_.x += 1; break;
            case Heading::West: group_.x -= 1; break;
        }
        g = group_;
    }
    std::string direction(to_string(g.heading));
    std::vector<EmittedEvent> out;
    for (const auto& dev : devices_) {
        const auto& s = dev->spec();
        if (s.kind != DeviceKind::Camera || s.behavior == Behavior::Dead) continue;
        if (std::hypot(s.location.x - g.x, s.location.y - g.y) > spec_.sensing_radius_m) continue;
        bool delivered = false;
        if (s.protocol == Protocol::Native) {
            delivered = dev->emit_line(gateway::encode_event({"movement", {{"direction", direction}}}));
            if (delivered) ++line_events_;
        } else {
            delivered = post_event(s.id, direction);
        }
        out.push_back({s.id, direction, delivered});
    }
    return out;
}

void World::steer(Heading h) {
    std::lock_guard lock(group_mutex_);
    group_.heading = h;
}

void World::steer(std::string_view heading) {
    auto h = parse_heading(heading);
    if (!h) throw Error(ErrorCode::InvalidHeading, std::string(heading), "expected north|south|east|west");
    steer(*h);
}

GroupState World::group() const {
    std::lock_guard lock(group_mutex_);
    return group_;
}

std::vector<CaptureEntry> World::capture() const {
    std::lock_guard lock(capture_mutex_);
    return capture_;
}

void World::clear_capture() {
    std::lock_guard lock(capture_mutex_);
    capture_.clear();
}

std::optional<json> World::device_state(const std::string& id) const {
    for (const auto& dev : devices_) {
        if (dev->spec().id == id) return dev->state();
    }
    return std::nullopt;
}

std::map<std::string, std::string> World::gateway_urls() const {
    std::map<std::string, std::string> out;
    for (const auto& [id, gw] : gateways_) out[id] = gw->base_url();
    return out;
}

gateway::Gateway* World::gateway(const std::string& id) {
    auto it = gateways_.find(id);
    return it == gateways_.end() ? nullptr : it->second.get();
}

void World::start_controller() {
    controller_ = std::make_unique<net::HttpService>();
    auto& srv = controller_->server();
    srv.set_default_headers({{"Access-Control-Allow-Origin", "*"}});
    srv.Options(R"(/sim/.*)", [](const httplib::Request&, httplib::Response& res) {
        res.set_header("Access-Control-Allow-Methods", "GET, POST, OPTIONS");
        res.set_header("Access-Control-Allow-Headers", "Content-Type");
        res.status = 204;
    });
    auto error = [](httplib::Response& res, int status, std::string_view code, const std::string& message) {
        res.status = status;
        res.set_content(json{{"error", {{"code", code}, {"message", message}}}}.dump(), "application/json");
    };
    srv.Post("/sim/steer", [this, error](const httplib::Request& req, httplib::Response& res) {
        auto j = json::parse(req.body, nullptr, false);
        std::string heading = !j.is_discarded() && j.is_object() && j.contains("heading") && j["heading"].is_string()
                                  ? j["heading"].get<std::string>()
                                  : "";
        try {
            steer(heading);
        } catch (const Error& e) {
            return error(res, 400, to_string(e.code()), e.what());
        }
        res.set_content(json{{"heading", heading}}.dump(), "application/json");
    });
    srv.Post("/sim/tick", [this](const httplib::Request&, httplib::Response& res) {
        json events = json::array();
        for (const auto& e : tick()) events.push_back({{"device_id", e.device_id}, {"direction", e.direction}, {"delivered", e.delivered}});
        res.set_content(json{{"events", events}}.dump(), "application/json");
    });
    srv.Get("/sim/group", [this](const httplib::Request&, httplib::Response& res) {
        auto g = group();
        res.set_content(json{{"x", g.x}, {"y", g.y}, {"heading", to_string(g.heading)}, {"tick_ms", g.tick_ms}}.dump(),
                        "application/json");
    });
    srv.Get("/sim/capture", [this](const httplib::Request&, httplib::Response& res) {
        json entries = json::array();
        for (const auto& e : capture()) entries.push_back(to_json(e));
        res.set_content(json{{"entries", entries}}.dump(), "application/json");
    });
    srv.Get("/sim/devices", [this](const httplib::Request&, httplib::Response& res) {
        json all = json::array();
        for (const auto& dev : devices_) all.push_back(dev->state());
        res.set_content(all.dump(), "application/json");
    });
    srv.Get(R"(/sim/devices/([^/]+)/state)", [this, error](const httplib::Request& req, httplib::Response& res) {
        auto st = device_state(req.matches[1]);
        if (!st) return error(res, 404, "UNKNOWN_DEVICE", req.matches[1]);
        res.set_content(st->dump(), "application/json");
    });
    auto hp = *net::parse_host_port(spec_.controller_listen);
    if (!controller_->start(hp.host, hp.port)) throw Error(ErrorCode::PortInUse, spec_.controller_listen, "controller");
}

int World::controller_port() const { return controller_ ? controller_->port() : 0; }

void World::start_ticker() {
    if (ticker_.joinable()) return;
    {
        std::lock_guard lock(loop_mutex_);
        ticker_stop_ = false;
    }
    ticker_ = std::thread([this] {
        std::unique_lock lock(loop_mutex_);
        auto next = std::chrono::steady_clock::now();
        while (true) {
            next += std::chrono::milliseconds(group().tick_ms);
            if (loop_cv_.wait_until(lock, next, [&] { return stopping_ || ticker_stop_; })) break;
            lock.unlock();
            tick();
            lock.lock();
        }
    });
}

void World::stop_ticker() {
    {
        std::lock_guard lock(loop_mutex_);
        ticker_stop_ = true;
    }
    loop_cv_.notify_all();
    if (ticker_.joinable()) ticker_.join();
}

std::vector<ScriptResult> World::run_script(bool realtime) {
    std::vector<ScriptResult> results;
    auto tick_ms = group().tick_ms;
    DurationMs end = spec_.run_ms;
    if (end == 0 && !spec_.script.empty()) end = spec_.script.back().at_ms + 2 * tick_ms;
    auto start = std::chrono::steady_clock::now();
    std::size_t next = 0;
    for (DurationMs t = 0; t <= end; t += tick_ms) {
        if (realtime) std::this_thread::sleep_until(start + std::chrono::milliseconds(t));
        for (; next < spec_.script.size() && spec_.script[next].at_ms <= t; ++next) {
            const auto& act = spec_.script[next];
            if (act.kind == ScriptAction::Kind::Steer) {
                steer(act.heading);
                results.push_back({t, "steer", 0, ""});
                continue;
            }
            json body{{"logic", act.logic},
                      {"params", act.params},
                      {"user", {{"zone", act.user.zone}, {"x", act.user.x}, {"y", act.user.y}}}};
            ScriptResult r{t, "request", 0, ""};
            if (auto res = post_json(options_.server_url, "/sessions", body.dump())) {
                r.status = res->status;
                auto j = json::parse(res->body, nullptr, false);
                if (!j.is_discarded() && j.is_object() && j.contains("session_id") && j["session_id"].is_string())
                    r.session_id = j["session_id"];
            }
            results.push_back(std::move(r));
        }
        if (t > 0) tick();
    }
    return results;
}

void World::shutdown() {
    stop_ticker();
    {
        std::lock_guard lock(loop_mutex_);
        stopping_ = true;
    }
    loop_cv_.notify_all();
    if (heartbeat_.joinable()) heartbeat_.join();
    if (controller_) controller_->stop();
    for (auto& dev : devices_) dev->stop();
    for (auto& [_, gw] : gateways_) gw->stop();
}

}  // namespace tc::devsim
