#include <doctest.h>

#include <atomic>
#include <filesystem>
#include <fstream>
#include <unistd.h>
#include <random>
#include <thread>

#include "tc/error.hpp"
#include "tc/registry/json.hpp"
#include "tc/registry/registry.hpp"

using namespace tc;
using namespace tc::registry;

namespace {

DeviceDescriptor rest_device(std::string id, std::string cap, std::string zone = "hall", double x = 0, double y = 0) {
    DeviceDescriptor d;
    d.id = std::move(id);
    d.capabilities = {std::move(cap)};
    d.location = {std::move(zone), x, y};
    d.access = AccessSpec::rest("http://127.0.0.1:9000/" + d.id);
    return d;
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

std::string detail_of(auto&& fn) {
    try {
        fn();
    } catch (const Error& e) {
        return e.detail();
    }
    FAIL("expected tc::Error");
    return {};
}

struct TempDir {
    std::filesystem::path path;
    TempDir() {
        path = std::filesystem::temp_directory_path() /
               ("tc-registry-" + std::to_string(std::random_device{}()) + "-" + std::to_string(::getpid()));
        std::filesystem::create_directories(path);
    }
    ~TempDir() { std::filesystem::remove_all(path); }
};

}  // namespace

TEST_CASE("register echoes the id of a well-formed descriptor") {
    ManualClock clock(1000);
    Registry reg(clock);
    CHECK(reg.register_device(rest_device("disp-1", "visual.display")) == "disp-1");
    CHECK(reg.find("disp-1")->last_heartbeat == 1000);
}

TEST_CASE("descriptor validation names the first violated field") {
    ManualClock clock;
    Registry reg(clock);

    auto native = rest_device("n", "audio.speaker");
    native.access = AccessSpec::native("gw-1", "lineproto", "127.0.0.1:7001");
    native.access.gateway_id.reset();
    CHECK(detail_of([&] { reg.register_device(native); }) == "access.gateway_id");
    CHECK(code_of([&] { reg.register_device(native); }) == ErrorCode::InvalidDescriptor);

    auto no_caps = rest_device("c", "visual.display");
    no_caps.capabilities.clear();
    CHECK(detail_of([&] { reg.register_device(no_caps); }) == "capabilities");

    auto bad_cap = rest_device("c", "Visual.Display");
    CHECK(detail_of([&] { reg.register_device(bad_cap); }) == "capabilities");

    auto trailing_dot = rest_device("c", "visual.");
    CHECK(detail_of([&] { reg.register_device(trailing_dot); }) == "capabilities");

    auto relative = rest_device("c", "visual.display");
    relative.access.endpoint = "/devices/c";
    CHECK(detail_of([&] { reg.register_device(relative); }) == "access.endpoint");

    auto extra_field = rest_device("c", "visual.display");
    extra_field.access.driver = "lineproto";
    CHECK(detail_of([&] { reg.register_device(extra_field); }) == "access.driver");

    auto no_zone = rest_device("c", "visual.display", "");
    CHECK(detail_of([&] { reg.register_device(no_zone); }) == "location.zone");

    auto inf = rest_device("c", "visual.display");
    inf.location.x = std::numeric_limits<double>::infinity();
    CHECK(detail_of([&] { reg.register_device(inf); }) == "location.x");

    auto bad_addr = rest_device("c", "audio.speaker");
    bad_addr.access = AccessSpec::native("gw-1", "lineproto", "nohostport");
    CHECK(detail_of([&] { reg.register_device(bad_addr); }) == "access.native_address");

    CHECK(reg.size() == 0);
}

TEST_CASE("re-registration replaces the record and refreshes the heartbeat") {
    ManualClock clock(10);
    Registry reg(clock);
    reg.register_device(rest_device("disp-1", "visual.display", "north"));
    clock.set(50);
    reg.register_device(rest_device("disp-1", "visual.display", "south"));
    auto found = reg.query("visual.display", 50, kDefaultTtlMs);
    REQUIRE(found.size() == 1);
    CHECK(found[0].location.zone == "south");
    CHECK(found[0].last_heartbeat == 50);
}

TEST_CASE("upsert is idempotent") {
    ManualClock clock(7);
    Registry once(clock), twice(clock);
    auto d = rest_device("a", "visual.display");
    once.register_device(d);
    twice.register_device(d);
    twice.register_device(d);
    CHECK(once.snapshot(7).devices == twice.snapshot(7).devices);
}

TEST_CASE("heartbeat updates, rejects unknown ids and stale timestamps") {
    ManualClock clock(100);
    Registry reg(clock);
    reg.register_device(rest_device("disp-1", "visual.display"));

    reg.heartbeat("disp-1", 200);
    CHECK(reg.snapshot(200).devices.at(0).last_heartbeat == 200);

    CHECK(code_of([&] { reg.heartbeat("ghost", 200); }) == ErrorCode::UnknownDevice);
    CHECK(code_of([&] { reg.heartbeat("disp-1", 150); }) == ErrorCode::StaleTimestamp);
    CHECK(reg.find("disp-1")->last_heartbeat == 200);
}

TEST_CASE("query over the three-device fixture") {
    ManualClock clock(0);
    Registry reg(clock);
    reg.register_device(rest_device("disp-1", "visual.display"));
    reg.register_device(rest_device("disp-2", "visual.display"));
    reg.register_device(rest_device("spk-1", "audio.speaker"));
    reg.heartbeat("disp-1", 40'000);
    reg.heartbeat("spk-1", 40'000);
    // disp-2 still carries t=0: age 40 000 > ttl 30 000.

    auto hits = reg.query("visual.display", 40'000, kDefaultTtlMs);
    REQUIRE(hits.size() == 1);
    CHECK(hits[0].id == "disp-1");
}

TEST_CASE("query ttl boundary is inclusive") {
    ManualClock clock(0);
    Registry reg(clock);
    reg.register_device(rest_device("d", "visual.display"));
    CHECK(reg.query("visual.display", 1000, 1000).size() == 1);
    CHECK(reg.query("visual.display", 1001, 1000).empty());
}

TEST_CASE("query on an empty registry and on an ill-formed capability") {
    ManualClock clock;
    Registry reg(clock);
    CHECK(reg.query("visual.display", 0, kDefaultTtlMs).empty());
    reg.register_device(rest_device("d", "visual.display"));
    CHECK(reg.query("visual", 0, kDefaultTtlMs).empty());  // no hierarchy
    CHECK(reg.query("Visual..display", 0, kDefaultTtlMs).empty());
}

TEST_CASE("query matches a brute-force filter on random registries") {
    const std::vector<std::string> caps{"visual.display", "audio.speaker", "vision.camera", "debug.echo"};
    const std::vector<std::string> zones{"north", "south", "east"};
    for (unsigned seed = 0; seed < 20; ++seed) {
        std::mt19937 rng(seed);
        ManualClock clock(0);
        Registry reg(clock);
        std::vector<DeviceDescriptor> truth;
        const int n = std::uniform_int_distribution<int>(0, 500)(rng);
        for (int i = 0; i < n; ++i) {
            auto d = rest_device("dev-" + std::to_string(i), caps[rng() % caps.size()], zones[rng() % zones.size()]);
            if (rng() % 3 == 0) d.capabilities.insert(caps[rng() % caps.size()]);
            reg.register_device(d);
            Timestamp hb = std::uniform_int_distribution<Timestamp>(0, 60'000)(rng);
            reg.heartbeat(d.id, hb);
            d.last_heartbeat = hb;
            truth.push_back(d);
        }
        for (int q = 0; q < 20; ++q) {
            const auto& cap = caps[rng() % caps.size()];
            Timestamp now = std::uniform_int_distribution<Timestamp>(60'000, 90'000)(rng);
            DurationMs ttl = std::uniform_int_distribution<DurationMs>(0, 60'000)(rng);
            std::optional<std::string> zone;
            if (rng() % 2) zone = zones[rng() % zones.size()];

            std::vector<std::string> expected;
            for (const auto& d : truth) {
                bool has = false;
                for (const auto& c : d.capabilities) has = has || c == cap;
                if (has && now - d.last_heartbeat <= ttl && (!zone || d.location.zone == *zone))
                    expected.push_back(d.id);
            }
            std::sort(expected.begin(), expected.end());

            std::vector<std::string> got;
            for (const auto& d : reg.query(cap, now, ttl, zone)) got.push_back(d.id);
            CHECK(got == expected);
        }
    }
}

TEST_CASE("persist then load round-trips the device set") {
    TempDir dir;
    ManualClock clock(123);
    Registry reg(clock);
    for (int i = 0; i < 5; ++i) {
        auto d = rest_device("d" + std::to_string(i), "visual.display", "z", 1.25 * i, -0.1 * i);
        d.extra = {{"vendor", "acme"}, {"note", "µ \"quoted\""}};
        if (i == 3) d.access = AccessSpec::native("gw-1", "lineproto", "127.0.0.1:7003");
        if (i == 4) d.access = AccessSpec::soap("http://127.0.0.1:9100/soap");
        reg.register_device(d);
    }
    const auto file = dir.path / "devices.json";
    reg.persist_to(file);

    Registry other(clock);
    other.load_from(file);
    CHECK(other.snapshot(0).devices == reg.snapshot(0).devices);
    CHECK(other.snapshot(0).devices.size() == 5);
}

TEST_CASE("persistence file is sorted by id and uses the documented keys") {
    TempDir dir;
    ManualClock clock(5);
    const auto file = dir.path / "store.json";
    Registry reg(clock, file);
    reg.register_device(rest_device("zeta", "visual.display"));
    reg.register_device(rest_device("alpha", "audio.speaker"));

    std::ifstream in(file);
    auto doc = nlohmann::json::parse(in);
    REQUIRE(doc["devices"].size() == 2);
    CHECK(doc["devices"][0]["id"] == "alpha");
    CHECK(doc["devices"][1]["id"] == "zeta");
    CHECK(doc["devices"][0]["last_heartbeat"] == 5);
    CHECK(doc["devices"][0]["location"]["zone"] == "hall");
    CHECK(doc["devices"][0]["access"]["kind"] == "rest");

    Registry restarted(clock);
    restarted.load_from(file);
    CHECK(restarted.size() == 2);
}

TEST_CASE("load from a missing path is an IO error") {
    ManualClock clock;
    Registry reg(clock);
    CHECK(code_of([&] { reg.load_from("/nonexistent/tc/devices.json"); }) == ErrorCode::IoError);
}

TEST_CASE("load rejects malformed documents") {
    TempDir dir;
    ManualClock clock;
    Registry reg(clock);
    auto file = dir.path / "bad.json";
    std::ofstream(file) << "{\"devices\": [ {\"id\": 3} ]}";
    CHECK(code_of([&] { reg.load_from(file); }) == ErrorCode::IoError);
    std::ofstream(file) << "not json";
    CHECK(code_of([&] { reg.load_from(file); }) == ErrorCode::IoError);
}

TEST_CASE("remove deletes a record") {
    ManualClock clock;
    Registry reg(clock);
    reg.register_device(rest_device("a", "visual.display"));
    CHECK(reg.remove("a"));
    CHECK_FALSE(reg.remove("a"));
    CHECK(reg.size() == 0);
}

TEST_CASE("snapshots taken during concurrent writes are never torn") {
    ManualClock clock(0);
    Registry reg(clock);
    std::atomic<bool> stop{false};

    // Each writer keeps zone, extra["zone"] and x in lockstep; a torn record
    // would break the correspondence.
    auto writer = [&](int w) {
        for (int i = 0; i < 400; ++i) {
            auto zone = "z" + std::to_string(i);
            auto d = rest_device("dev-" + std::to_string(w % 3), "visual.display", zone, i, -i);
            d.extra["zone"] = zone;
            reg.register_device(d);
            clock.advance(1);
        }
    };
    std::atomic<int> checked{0};
    std::atomic<int> bad{0};
    std::thread reader([&] {
        while (!stop) {
            auto snap = reg.snapshot(clock.now());
            for (std::size_t i = 0; i < snap.devices.size(); ++i) {
                const auto& d = snap.devices[i];
                if (i && !(snap.devices[i - 1].id < d.id)) ++bad;
                try {
                    validate(d);
                } catch (const Error&) {
                    ++bad;
                }
                if (d.extra.at("zone") != d.location.zone) ++bad;
                if ("z" + std::to_string(static_cast<int>(d.location.x)) != d.location.zone) ++bad;
                if (d.location.y != -d.location.x) ++bad;
            }
            ++checked;
        }
    });
    std::vector<std::thread> writers;
    for (int w = 0; w < 6; ++w) writers.emplace_back(writer, w);
    for (auto& t : writers) t.join();
    stop = true;
    reader.join();
    CHECK(bad == 0);
    CHECK(checked > 0);
    CHECK(reg.size() == 3);
}

TEST_CASE("descriptor JSON decoding reports field paths") {
    auto j = to_json(rest_device("a", "visual.display"));
    j["location"]["x"] = "east";
    CHECK(detail_of([&] { descriptor_from_json(j); }) == "location.x");
    j = to_json(rest_device("a", "visual.display"));
    j["access"]["kind"] = "ble";
    CHECK(detail_of([&] { descriptor_from_json(j); }) == "access.kind");
}
