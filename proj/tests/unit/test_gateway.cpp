#include <doctest.h>

#include <httplib.h>

#include <atomic>
#include <fstream>
#include <random>
#include <thread>

#include "tc/error.hpp"
#include "tc/gateway/base64.hpp"
#include "tc/gateway/gateway.hpp"
#include "tc/gateway/lineproto.hpp"

using namespace tc;
using namespace tc::gateway;
using namespace std::chrono_literals;

namespace {

nlohmann::json golden() {
    std::ifstream in(std::string(TC_FIXTURES_DIR) + "/golden/lineproto_vectors.json");
    return nlohmann::json::parse(in);
}

DispatchEnvelope envelope(std::string verb, std::map<std::string, std::string> args, std::string address = "127.0.0.1:1") {
    return DispatchEnvelope{"spk-native-1", "lineproto", std::move(address), std::move(verb), std::move(args), "c-1", "s-1"};
}

ErrorCode code_of(auto&& fn) {
    try {
        fn();
    } catch (const Error& e) {
        return e.code();
    }
    FAIL("expected tc::Error");
    return ErrorCode::IoError;
}

/// Minimal native device: answers each CMD line with a scripted reply.
class FakeNativeDevice {
public:
    using Responder = std::function<std::optional<std::string>(const std::string& line)>;

    explicit FakeNativeDevice(Responder responder) : listener_("127.0.0.1", 0), responder_(std::move(responder)) {
        thread_ = std::thread([this] { run(); });
    }
    ~FakeNativeDevice() {
        stop_ = true;
        listener_.shutdown();
        {
            std::lock_guard lock(mutex_);
            if (client_) client_->shutdown();
        }
        thread_.join();
    }

    std::string address() const { return "127.0.0.1:" + std::to_string(listener_.port()); }

    std::vector<std::string> lines() {
        std::lock_guard lock(mutex_);
        return lines_;
    }

    void push(const std::string& line) {
        std::lock_guard lock(mutex_);
        if (client_) net::write_all(*client_, line);
    }

    bool connected() {
        std::lock_guard lock(mutex_);
        return client_ != nullptr;
    }

private:
    void run() {
        while (!stop_) {
            auto s = listener_.accept(50ms);
            if (!s.valid()) continue;
            auto shared = std::make_shared<net::Socket>(std::move(s));
            {
                std::lock_guard lock(mutex_);
                client_ = shared;
            }
            net::LineReader reader(*shared);
            std::string line;
            while (!stop_ && reader.read_line(line, 50ms) != net::LineReader::Status::Closed) {
                if (line.empty()) continue;
                std::optional<std::string> reply;
                {
                    std::lock_guard lock(mutex_);
                    lines_.push_back(line + "\n");
                }
                reply = responder_(line);
                if (reply) {
                    std::lock_guard lock(mutex_);
                    net::write_all(*shared, *reply);
                }
                line.clear();
            }
            std::lock_guard lock(mutex_);
            client_.reset();
        }
    }

    net::TcpListener listener_;
    Responder responder_;
    std::atomic<bool> stop_{false};
    std::mutex mutex_;
    std::shared_ptr<net::Socket> client_;
    std::vector<std::string> lines_;
    std::thread thread_;
};

/// Stand-in for the coordination server's POST /events.
class FakeFacade {
public:
    FakeFacade() {
        server_.Post("/events", [this](const httplib::Request& req, httplib::Response& res) {
            std::lock_guard lock(mutex_);
            if (fail_next_ > 0) {
                --fail_next_;
                res.status = 503;
                return;
            }
            bodies_.push_back(req.body);
            res.status = 202;
        });
        port_ = server_.bind_to_any_port("127.0.0.1");
        thread_ = std::thread([this] { server_.listen_after_bind(); });
        server_.wait_until_ready();
    }
    ~FakeFacade() {
        server_.stop();
        thread_.join();
    }
    std::string url() const { return "http://127.0.0.1:" + std::to_string(port_) + "/events"; }
    void fail_next(int n) {
        std::lock_guard lock(mutex_);
        fail_next_ = n;
    }
    std::vector<std::string> bodies() {
        std::lock_guard lock(mutex_);
        return bodies_;
    }

private:
    httplib::Server server_;
    int port_ = 0;
    std::thread thread_;
    std::mutex mutex_;
    int fail_next_ = 0;
    std::vector<std::string> bodies_;
};

bool eventually(auto&& pred, std::chrono::milliseconds limit = 3000ms) {
    auto deadline = std::chrono::steady_clock::now() + limit;
    while (std::chrono::steady_clock::now() < deadline) {
        if (pred()) return true;
        std::this_thread::sleep_for(10ms);
    }
    return pred();
}

}  // namespace

TEST_CASE("base64 matches the standard alphabet with padding") {
    CHECK(base64_encode("Go left") == "R28gbGVmdA==");
    CHECK(base64_encode("") == "");
    CHECK(base64_decode("bm9ydGg=") == std::optional<std::string>("north"));
    CHECK_FALSE(base64_decode("bm9ydGg"));   // missing padding
    CHECK_FALSE(base64_decode("bm9y dGg=")); // space
    CHECK_FALSE(base64_decode("QR=="));      // non-canonical trailing bits
    CHECK_FALSE(base64_decode("bm9-dGg="));  // url alphabet
}

TEST_CASE("encode_native reproduces the golden vectors byte for byte") {
    for (const auto& v : golden()["commands"]) {
        std::map<std::string, std::string> args;
        for (const auto& [k, val] : v["args"].items()) args[k] = val.get<std::string>();
        CHECK(encode_native(envelope(v["verb"], args)) == v["line"].get<std::string>());
    }
}

TEST_CASE("encode_native rejects non-identifier verbs and keys") {
    CHECK(code_of([] { encode_native(envelope("Show", {})); }) == ErrorCode::EncodingError);
    CHECK(code_of([] { encode_native(envelope("show", {{"bad key", "x"}})); }) == ErrorCode::EncodingError);
}

TEST_CASE("decode_native recognizes OK, ERR and EVT lines") {
    CHECK(std::holds_alternative<NativeOk>(decode_native("OK\n")));
    CHECK(std::get<NativeDeviceError>(decode_native("ERR BUSY device busy\n")) ==
          NativeDeviceError{"BUSY", "device busy"});
    CHECK(std::get<NativeDeviceError>(decode_native("ERR JAMMED")) == NativeDeviceError{"JAMMED", ""});
    for (const auto& v : golden()["events"]) {
        std::map<std::string, std::string> payload;
        for (const auto& [k, val] : v["payload"].items()) payload[k] = val.get<std::string>();
        CHECK(std::get<NativeEvent>(decode_native(v["line"].get<std::string>())) == NativeEvent{v["event_type"], payload});
    }
}

TEST_CASE("decode_native rejects malformed lines") {
    for (std::string bad : {"WAT\n", "", "ERR\n", "EVT\n", "EVT movement direction\n", "EVT movement direction=???\n",
                            "OK extra\n", "EVT Movement x=QQ==\n", "EVT m a=QQ== a=QQ==\n", "CMD show\n"}) {
        CAPTURE(bad);
        CHECK(code_of([&] { decode_native(bad); }) == ErrorCode::MalformedLine);
    }
}

TEST_CASE("event lines round-trip for random identifiers and payloads") {
    std::mt19937 rng(2024);
    auto ident = [&] {
        std::string s(1, static_cast<char>('a' + rng() % 26));
        const std::string body = "abcdefghijklmnopqrstuvwxyz0123456789_";
        for (unsigned i = 0, n = rng() % 8; i < n; ++i) s += body[rng() % body.size()];
        return s;
    };
    for (int i = 0; i < 1000; ++i) {
        NativeEvent evt{ident(), {}};
        for (unsigned k = 0, n = rng() % 5; k < n; ++k) {
            std::string value;
            for (unsigned b = 0, len = rng() % 24; b < len; ++b) value += static_cast<char>(rng() % 256);
            evt.payload[ident()] = value;
        }
        CHECK(std::get<NativeEvent>(decode_native(encode_event(evt))) == evt);
    }
}

TEST_CASE("decode_command is the device-side inverse of encode_native") {
    auto env = envelope("announce", {{"text", "Go left"}, {"lang", "en"}});
    auto cmd = decode_command(encode_native(env));
    CHECK(cmd.verb == "announce");
    CHECK(cmd.args == env.args);
}

TEST_CASE("handle_dispatch sends the encoded line and maps replies") {
    FakeNativeDevice device([](const std::string& line) -> std::optional<std::string> {
        if (line.find("busy") != std::string::npos) return "ERR BUSY device busy\n";
        return "OK\n";
    });
    Gateway gw(GatewayConfig{});
    auto ok = gw.handle_dispatch(envelope("announce", {{"text", "Go left"}}, device.address()));
    CHECK(ok == Outcome::ok());
    REQUIRE(device.lines().size() == 1);
    CHECK(device.lines()[0] == "CMD announce text=R28gbGVmdA==\n");

    auto busy = gw.handle_dispatch(envelope("busy", {}, device.address()));
    CHECK(busy == Outcome::device_error("BUSY", "device busy"));
    CHECK(device.lines().size() == 2);  // connection reused
}

TEST_CASE("handle_dispatch reports unknown drivers, timeouts and refused connections") {
    Gateway gw(GatewayConfig{});
    auto env = envelope("show", {});
    env.driver = "unknown";
    CHECK(code_of([&] { gw.handle_dispatch(env); }) == ErrorCode::UnknownDriver);

    auto refused = gw.handle_dispatch(envelope("show", {}, "127.0.0.1:" + std::to_string(net::pick_free_port())));
    CHECK(refused.kind == OutcomeKind::TransportError);

    GatewayConfig fast;
    fast.device_timeout_ms = 200;
    Gateway quick(fast);
    FakeNativeDevice silent([](const std::string&) { return std::nullopt; });
    auto t0 = std::chrono::steady_clock::now();
    auto timed_out = quick.handle_dispatch(envelope("show", {}, silent.address()));
    CHECK(timed_out.kind == OutcomeKind::Timeout);
    CHECK(std::chrono::steady_clock::now() - t0 < 1500ms);
}

TEST_CASE("a wedged device does not hold up other devices") {
    FakeNativeDevice wedged([](const std::string&) { return std::nullopt; });
    FakeNativeDevice healthy([](const std::string&) { return std::string("OK\n"); });
    GatewayConfig cfg;
    cfg.device_timeout_ms = 1500;
    Gateway gw(cfg);

    std::thread stuck([&] { gw.handle_dispatch(envelope("show", {{"text", "x"}}, wedged.address())); });
    std::this_thread::sleep_for(100ms);
    std::vector<std::thread> others;
    std::atomic<int> ok{0};
    auto t0 = std::chrono::steady_clock::now();
    for (int i = 0; i < 4; ++i) {
        others.emplace_back([&] {
            if (gw.handle_dispatch(envelope("show", {{"text", "y"}}, healthy.address())) == Outcome::ok()) ++ok;
        });
    }
    for (auto& t : others) t.join();
    auto elapsed = std::chrono::steady_clock::now() - t0;
    stuck.join();
    CHECK(ok == 4);
    CHECK(elapsed < 1000ms);
}

TEST_CASE("HTTP /dispatch and /healthz") {
    FakeNativeDevice device([](const std::string&) { return std::string("OK\n"); });
    Gateway gw(GatewayConfig{});
    std::vector<std::string> seen;
    std::mutex m;
    gw.set_request_observer([&](const std::string& method, const std::string& path, const std::string&) {
        std::lock_guard lock(m);
        seen.push_back(method + " " + path);
    });
    gw.start();
    httplib::Client client(gw.base_url());

    auto health = client.Get("/healthz");
    REQUIRE(health);
    CHECK(health->status == 200);

    auto env = envelope("show", {{"text", "A"}}, device.address());
    auto res = client.Post("/dispatch", envelope_to_json(env).dump(), "application/json");
    REQUIRE(res);
    CHECK(res->status == 200);
    auto body = nlohmann::json::parse(res->body);
    CHECK(body["correlation"] == "c-1");
    CHECK(body["outcome"] == "ok");

    env.driver = "unknown";
    res = client.Post("/dispatch", envelope_to_json(env).dump(), "application/json");
    REQUIRE(res);
    CHECK(res->status == 400);
    CHECK(nlohmann::json::parse(res->body)["error"]["code"] == "UNKNOWN_DRIVER");

    res = client.Post("/dispatch", "{not json", "application/json");
    REQUIRE(res);
    CHECK(res->status == 400);

    auto dead = envelope("show", {}, "127.0.0.1:" + std::to_string(net::pick_free_port()));
    res = client.Post("/dispatch", envelope_to_json(dead).dump(), "application/json");
    REQUIRE(res);
    CHECK(res->status == 200);
    CHECK(nlohmann::json::parse(res->body)["outcome"] == "transport_error");

    std::lock_guard lock(m);
    CHECK(seen.size() == 5);
    CHECK(seen[1] == "POST /dispatch");
    gw.stop();
}

TEST_CASE("events from native devices are relayed upstream") {
    FakeFacade facade;
    FakeNativeDevice camera([](const std::string&) { return std::string("OK\n"); });
    GatewayConfig cfg;
    cfg.server_events_url = facade.url();
    Gateway gw(cfg);
    auto env = envelope("monitor", {{"target", "g"}}, camera.address());
    env.device_id = "cam-native-1";
    REQUIRE(gw.handle_dispatch(env) == Outcome::ok());

    camera.push("EVT movement direction=bm9ydGg=\n");
    REQUIRE(eventually([&] { return facade.bodies().size() == 1; }));
    CHECK(facade.bodies()[0] == R"({"device_id":"cam-native-1","event_type":"movement","payload":{"direction":"north"}})");

    facade.fail_next(1);
    camera.push("EVT movement direction=ZWFzdA==\n");
    REQUIRE(eventually([&] { return facade.bodies().size() == 2; }));
    gw.flush_relay();
    CHECK(gw.stats().relayed == 2);
    CHECK(gw.stats().relay_dropped == 0);

    facade.fail_next(2);
    camera.push("EVT movement direction=ZWFzdA==\n");
    REQUIRE(eventually([&] { return gw.stats().relay_dropped == 1; }));
    CHECK(facade.bodies().size() == 2);
}

TEST_CASE("gateway config schema") {
    auto cfg = config_from_json(nlohmann::json::parse(
        R"({"gateway_id":"gw-1","listen":"127.0.0.1:7100","server_events_url":"http://127.0.0.1:8080/events","drivers":["lineproto"]})"));
    CHECK(cfg.gateway_id == "gw-1");
    CHECK(cfg.listen == "127.0.0.1:7100");
    CHECK(cfg.drivers.contains("lineproto"));
    CHECK(code_of([] { config_from_json(nlohmann::json::parse(R"({"drivers":["zigbee"]})")); }) ==
          ErrorCode::ConfigInvalid);
    CHECK(code_of([] { config_from_json(nlohmann::json::parse(R"({"listen":"nowhere"})")); }) ==
          ErrorCode::ConfigInvalid);
}
