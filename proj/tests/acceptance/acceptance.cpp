// Acceptance suite: one PASS/FAIL line per criterion, non-zero exit if any
// criterion fails. Runs headless; the scenario scripts stand in for a user.

#include <atomic>
#include <chrono>
#include <filesystem>
#include <functional>
#include <iostream>
#include <random>
#include <sstream>
#include <thread>

#include "../support/planner_oracle.hpp"
#include "../support/stack.hpp"
#include "tc/dsl/parser.hpp"
#include "tc/dsl/printer.hpp"
#include "tc/gateway/lineproto.hpp"

using namespace tc;
using namespace tc::testing;
using namespace std::chrono_literals;
using json = nlohmann::json;
using ordered_json = nlohmann::ordered_json;
using steady = std::chrono::steady_clock;

namespace {

/// Collects failed expectations for one criterion.
class Checks {
public:
    bool expect(bool ok, const std::string& what) {
        if (!ok) failures_.push_back(what);
        return ok;
    }
    template <class A, class B>
    bool equal(const A& got, const B& want, const std::string& what) {
        if (got == want) return true;
        std::ostringstream os;
        os << what << ": got " << show(got) << ", want " << show(want);
        failures_.push_back(os.str());
        return false;
    }
    const std::vector<std::string>& failures() const { return failures_; }

private:
    template <class T>
    static std::string show(const T& v) {
        if constexpr (requires(std::ostream& os) { os << v; }) {
            std::ostringstream os;
            os << v;
            return os.str();
        } else {
            return json(v).dump();
        }
    }
    std::vector<std::string> failures_;
};

long long ms_since(steady::time_point t) {
    return std::chrono::duration_cast<std::chrono::milliseconds>(steady::now() - t).count();
}

std::vector<std::string> kinds(const ordered_json& log) {
    std::vector<std::string> out;
    for (const auto& e : log) out.push_back(e["kind"]);
    return out;
}

std::size_t count_capture(const std::vector<devsim::CaptureEntry>& cap, const std::function<bool(const devsim::CaptureEntry&)>& pred) {
    return static_cast<std::size_t>(std::count_if(cap.begin(), cap.end(), pred));
}

std::string read_file(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

// ---------------------------------------------------------------------------

void end_to_end(Checks& c) {
    const auto run_start = steady::now();
    const std::string route = "Platform 4 EAST";
    const std::string alert = "Wrong way! Turn back toward Platform 4 EAST";
    {
        Stack stack("station_nav.scenario.json");
        std::vector<devsim::ScriptResult> results;
        std::thread script([&] { results = stack.world->run_script(true); });

        json before_steer;              // speaker announcements while still heading east
        ordered_json subs_before_steer;
        std::optional<steady::time_point> steered;
        std::optional<long long> alert_ms;
        double ticks_to_alert = -1;
        auto deadline = steady::now() + 5s;
        while (steady::now() < deadline && !alert_ms) {
            auto g = stack.world->group();
            auto spk = stack.world->device_state("spk-native-1");
            if (g.heading == devsim::Heading::East) {
                if (spk) before_steer = spk->at("announcements");
                if (auto view = stack.engine().describe("s-1")) subs_before_steer = view->at("subscriptions");
            } else if (!steered) {
                steered = steady::now();
            }
            if (steered && spk) {
                const auto& ann = spk->at("announcements");
                if (std::find(ann.begin(), ann.end(), json(alert)) != ann.end()) {
                    alert_ms = ms_since(*steered);
                    ticks_to_alert = g.y;  // y only grows while heading north, one meter per tick
                }
            }
            std::this_thread::sleep_for(2ms);
        }
        script.join();

        c.equal(results.size(), std::size_t{2}, "script actions executed");
        if (!results.empty()) {
            c.equal(results[0].status, 201, "session request status");
            c.equal(results[0].session_id, std::string("s-1"), "session id");
        }
        c.equal(stack.world->device_state("disp-1")->at("text"), json(route), "display text");
        c.equal(before_steer, json::array({route}), "speaker announcements before the wrong turn");
        c.equal(subs_before_steer,
                ordered_json::array({{{"event_type", "movement"}, {"device_id", "cam-1"}, {"role", "cam"}}}),
                "camera subscription");
        c.equal(stack.world->device_state("cam-1")->at("monitoring"), json("tourist_group"), "camera monitoring");
        if (c.expect(steered.has_value(), "steer(north) observed") &&
            c.expect(alert_ms.has_value(), "alert announcement reached the bound speaker")) {
            c.expect(*alert_ms <= 1500, "alert latency " + std::to_string(*alert_ms) + " ms exceeds 1500 ms");
            c.expect(ticks_to_alert >= 1 && ticks_to_alert <= 2,
                     "alert after " + std::to_string(ticks_to_alert) + " ticks, want 1..2");
        }
        auto view = stack.engine().describe("s-1");
        if (c.expect(view.has_value(), "session visible")) {
            c.equal(view->at("plan")["disp"]["device_id"], ordered_json("disp-1"), "display binding");
            c.equal(view->at("plan")["spk"]["device_id"], ordered_json("spk-native-1"), "speaker binding");
            c.equal(view->at("plan")["cam"]["device_id"], ordered_json("cam-1"), "camera binding");
        }
    }
    auto total = ms_since(run_start);
    c.expect(total < 10'000, "run took " + std::to_string(total) + " ms");
}

void hybrid_routing(Checks& c) {
    Stack stack("scenarios/hybrid.scenario.json");
    auto results = stack.world->run_script(false);
    if (!c.equal(results.size(), std::size_t{1}, "script actions") || !c.equal(results[0].status, 201, "request status"))
        return;
    auto sid = results[0].session_id;
    stack.settle(sid);
    auto view = *stack.engine().describe(sid);
    const auto& plan = view["plan"];
    c.equal(plan["main"]["device_id"], ordered_json("disp-rest"), "main binding");
    c.equal(plan["main"]["route"], ordered_json("direct-rest"), "main route");
    c.equal(plan["side"]["device_id"], ordered_json("disp-soap"), "side binding");
    c.equal(plan["side"]["route"], ordered_json("direct-soap"), "side route");
    c.equal(plan["horn"]["device_id"], ordered_json("spk-native-1"), "horn binding");
    c.equal(plan["horn"]["route"], ordered_json("via-gateway"), "horn route");

    auto cap = stack.world->capture();
    auto at = [&](const std::string& target, const std::string& channel) {
        return count_capture(cap, [&](auto& e) { return e.target == target && e.channel == channel; });
    };
    c.equal(count_capture(cap, [](auto& e) {
                return e.target == "disp-rest" && e.method == "POST" && e.path == "/actions/show";
            }),
            std::size_t{1}, "REST show at disp-rest");
    c.equal(count_capture(cap, [](auto& e) { return e.target == "disp-soap" && e.method == "POST" && e.path == "/soap"; }),
            std::size_t{1}, "SOAP call at disp-soap");
    c.equal(count_capture(cap, [](auto& e) { return e.target == "gw-1" && e.path == "/dispatch"; }), std::size_t{1},
            "/dispatch at gw-1");
    c.equal(count_capture(cap, [](auto& e) { return e.target == "spk-native-1" && e.body.rfind("CMD announce ", 0) == 0; }),
            std::size_t{1}, "CMD line at spk-native-1");
    c.equal(at("disp-rest", "line") + at("disp-soap", "line") + at("gw-1", "line") + at("spk-native-1", "http"),
            std::size_t{0}, "cross-route traffic");
    c.equal(count_capture(cap, [](auto& e) { return e.target == "disp-rest"; }), std::size_t{1}, "all traffic at disp-rest");
    c.equal(count_capture(cap, [](auto& e) { return e.target == "disp-soap"; }), std::size_t{1}, "all traffic at disp-soap");
    c.equal(count_capture(cap, [](auto& e) { return e.target == "gw-1"; }), std::size_t{1}, "all traffic at gw-1");
    c.equal(cap.size(), std::size_t{4}, "total captured requests");

    std::string gw_corr, spk_corr;
    for (const auto& e : cap) {
        if (e.target == "gw-1") gw_corr = e.correlation;
        if (e.target == "spk-native-1") spk_corr = e.correlation;
    }
    c.equal(gw_corr, sid + "-3", "gateway leg carries the announce correlation");
    c.equal(stack.world->device_state("disp-rest")->at("text"), json("Platform 4 EAST"), "rest display text");
    c.equal(stack.world->device_state("disp-soap")->at("text"), json("Platform 4 EAST"), "soap display text");
    c.equal(stack.world->device_state("spk-native-1")->at("announcements"), json::array({"Platform 4 EAST"}),
            "native speaker announcements");
}

std::string abstract_sequence(const std::string& scenario, Checks& c, std::size_t& alerts) {
    Stack stack(scenario);
    auto results = stack.world->run_script(false);
    if (!c.equal(results.empty() ? 0 : results[0].status, 201, scenario + " request status")) return {};
    auto sid = results[0].session_id;
    stack.settle(sid);
    ordered_json seq = ordered_json::array();
    alerts = 0;
    auto view = *stack.engine().describe(sid);
    for (const auto& e : view["log"]) {
        if (e["kind"] == "instruction") seq.push_back({e["role"], e["verb"], e["args"]});
        if (e["kind"] == "dispatch_result")
            c.equal(e["outcome"], ordered_json("ok"), scenario + " outcome of " + e["correlation"].get<std::string>());
        if (e["kind"] == "instruction" && e["args"][0].get<std::string>().rfind("Wrong way!", 0) == 0) ++alerts;
    }
    return seq.dump();
}

void device_independence(Checks& c) {
    std::size_t alerts_rest = 0, alerts_native = 0;
    auto rest = abstract_sequence("scenarios/inventory_rest.scenario.json", c, alerts_rest);
    auto native = abstract_sequence("scenarios/inventory_native.scenario.json", c, alerts_native);
    c.equal(native, rest, "(role, verb, args) sequence");
    // Ticks at 1000 and 1500 see the group heading north; the rest head east.
    c.equal(alerts_rest, std::size_t{2}, "alerts in the all-rest inventory");
    c.equal(alerts_native, std::size_t{2}, "alerts in the all-native inventory");
}

void planner_oracle(Checks& c) {
    int agree = 0;
    for (unsigned seed = 0; seed < 100; ++seed) {
        auto pc = random_plan_case(seed);
        bool ok = false;
        try {
            auto plan = planner::plan_bindings(pc.logic, pc.snapshot, pc.context);
            std::map<std::string, std::string> got;
            for (const auto& [role, b] : plan.bindings) got[role] = b.device_id;
            ok = pc.expected && got == *pc.expected;
        } catch (const Error& e) {
            ok = !pc.expected && e.code() == ErrorCode::RoleUnsatisfied;
        }
        if (ok) ++agree;
        else c.expect(false, "seed " + std::to_string(seed) + " disagrees with the brute-force scorer");
    }
    c.equal(agree, 100, "cases agreeing");
}

void dsl_round_trip_and_fuzz(Checks& c) {
    int corpus = 0;
    for (const auto& entry : std::filesystem::directory_iterator(fixture_path("logic"))) {
        if (entry.path().extension() != ".tcl") continue;
        ++corpus;
        auto name = entry.path().filename().string();
        try {
            auto ast = dsl::parse(read_file(entry.path()));
            auto text = dsl::pretty_print(ast);
            c.expect(dsl::parse(text) == ast, name + ": parse(print(ast)) != ast");
            c.expect(dsl::pretty_print(dsl::parse(text)) == text, name + ": printing is not stable");
        } catch (const std::exception& e) {
            c.expect(false, name + ": " + e.what());
        }
    }
    c.expect(corpus >= 5, "corpus has " + std::to_string(corpus) + " files");

    std::mt19937 rng(20240611);
    const std::string tokens[] = {"service", "role", "requires", "capability", "near", "user", "in", "zone", "on",
                                  "request", "when", "{", "}", "(", ")", "\"", "->", ".", ",", "==", "!=", "#", "\n"};
    long long worst_us = 0;
    int parsed = 0, rejected = 0;
    for (int i = 0; i < 10'000; ++i) {
        std::string input;
        int n = static_cast<int>(rng() % 400);
        for (int k = 0; k < n; ++k) {
            if (rng() % 2) {
                input += static_cast<char>(rng() % 256);
            } else {
                input += tokens[rng() % std::size(tokens)];
                input += ' ';
            }
        }
        auto t0 = steady::now();
        try {
            dsl::parse(input);
            ++parsed;
        } catch (const dsl::ParseError& e) {
            ++rejected;
            if (e.line() < 1 || e.column() < 1) c.expect(false, "input " + std::to_string(i) + ": bad error position");
        } catch (const std::exception& e) {
            c.expect(false, "input " + std::to_string(i) + ": unexpected exception " + e.what());
        }
        worst_us = std::max<long long>(
            worst_us, std::chrono::duration_cast<std::chrono::microseconds>(steady::now() - t0).count());
    }
    c.equal(parsed + rejected, 10'000, "inputs handled");
    c.expect(worst_us <= 1'000'000, "slowest input took " + std::to_string(worst_us) + " us");
}

void codec_vectors(Checks& c) {
    auto golden = json::parse(read_fixture("golden/lineproto_vectors.json"));
    bool has_go_left = false;
    for (const auto& v : golden["commands"]) {
        std::map<std::string, std::string> args;
        for (const auto& [k, val] : v["args"].items()) args[k] = val.get<std::string>();
        gateway::DispatchEnvelope env{"spk-native-1", "lineproto", "127.0.0.1:1", v["verb"], args, "c-1", "s-1"};
        auto line = gateway::encode_native(env);
        c.equal(json(line).dump(), json(v["line"]).dump(), "encode_native(" + v["verb"].get<std::string>() + ")");
        has_go_left = has_go_left || line == "CMD announce text=R28gbGVmdA==\n";
    }
    c.expect(has_go_left, "vector set includes the announce \"Go left\" line");
    for (const auto& v : golden["events"]) {
        std::map<std::string, std::string> payload;
        for (const auto& [k, val] : v["payload"].items()) payload[k] = val.get<std::string>();
        gateway::NativeEvent want{v["event_type"], payload};
        auto got = gateway::decode_native(v["line"].get<std::string>());
        c.expect(std::holds_alternative<gateway::NativeEvent>(got) && std::get<gateway::NativeEvent>(got) == want,
                 "decode " + json(v["line"]).dump());
        c.equal(json(gateway::encode_event(want)).dump(), json(v["line"]).dump(), "encode_event");
    }

    std::mt19937 rng(4242);
    auto ident = [&] {
        std::string s(1, static_cast<char>('a' + rng() % 26));
        const std::string body = "abcdefghijklmnopqrstuvwxyz0123456789_";
        for (unsigned i = 0, n = rng() % 10; i < n; ++i) s += body[rng() % body.size()];
        return s;
    };
    int round_trips = 0;
    for (int i = 0; i < 1000; ++i) {
        gateway::NativeEvent evt{ident(), {}};
        for (unsigned k = 0, n = rng() % 6; k < n; ++k) {
            std::string value;
            for (unsigned b = 0, len = rng() % 32; b < len; ++b) value += static_cast<char>(rng() % 256);
            evt.payload[ident()] = value;
        }
        try {
            auto back = gateway::decode_native(gateway::encode_event(evt));
            if (std::holds_alternative<gateway::NativeEvent>(back) && std::get<gateway::NativeEvent>(back) == evt)
                ++round_trips;
        } catch (const Error&) {
        }
    }
    c.equal(round_trips, 1000, "event round trips");
}

void failover(Checks& c) {
    {
        Stack stack("scenarios/dead_speaker.scenario.json");
        auto results = stack.world->run_script(false);
        if (c.equal(results.empty() ? 0 : results[0].status, 201, "dead_speaker request status")) {
            auto sid = results[0].session_id;
            stack.settle(sid);
            auto view = *stack.engine().describe(sid);
            auto log = normalized_log(view["log"]);
            const std::vector<std::string> want{"instruction", "dispatch_result", "instruction", "dispatch_result",
                                                "rebind",      "instruction",     "dispatch_result", "instruction",
                                                "dispatch_result"};
            // The script's two ticks follow the request; the group still heads
            // east, so they may only add event entries.
            auto got = kinds(log);
            std::vector<std::string> head(got.begin(), got.begin() + std::min(got.size(), want.size()));
            for (std::size_t i = want.size(); i < got.size(); ++i) {
                c.equal(got[i], std::string("event"), "dead_speaker log entry " + std::to_string(i));
                c.equal(log[i]["payload"]["direction"], ordered_json("east"), "camera report " + std::to_string(i));
            }
            c.expect(got.size() <= want.size() + 2, "more than two camera reports");
            if (c.equal(json(head).dump(), json(want).dump(), "dead_speaker failover log kinds")) {
                c.equal(log[2]["verb"], ordered_json("announce"), "first announce");
                c.equal(log[3]["outcome"], ordered_json("transport_error"), "dead speaker outcome");
                c.equal(log[3]["device_id"], ordered_json("spk-1"), "dead speaker id");
                c.equal(log[3]["attempts"], ordered_json(2), "attempts against the dead speaker");
                c.equal(log[4].dump(),
                        ordered_json{{"seq", 4}, {"kind", "rebind"}, {"role", "spk"}, {"from", "spk-1"}, {"to", "spk-2"},
                                     {"route", "direct-rest"}}
                            .dump(),
                        "rebind entry");
                c.equal(log[5]["args"], log[2]["args"], "re-dispatched args");
                c.expect(log[5]["correlation"] != log[2]["correlation"], "re-dispatch has a fresh correlation");
                c.equal(log[6]["outcome"], ordered_json("ok"), "re-dispatch outcome");
                c.equal(log[6]["device_id"], ordered_json("spk-2"), "re-dispatch target");
                c.equal(log[6]["attempts"], ordered_json(1), "re-dispatch attempts");
            }
            std::size_t announces = 0;
            for (const auto& e : log) announces += e["kind"] == "instruction" && e["verb"] == "announce";
            c.equal(announces, std::size_t{2}, "announce instructions (original plus one re-dispatch)");
            auto cap = stack.world->capture();
            c.equal(count_capture(cap, [](auto& e) { return e.target == "spk-2"; }), std::size_t{1},
                    "requests at spk-2");
            c.equal(count_capture(cap, [](auto& e) { return e.target == "spk-1"; }), std::size_t{0}, "requests at spk-1");
            c.equal(view["plan"]["spk"]["device_id"], ordered_json("spk-2"), "speaker binding after failover");
            c.equal(view["state"], ordered_json("running"), "session state after failover");
        }
    }
    {
        Stack stack("scenarios/sole_speaker_dead.scenario.json");
        auto results = stack.world->run_script(false);
        if (c.expect(!results.empty() && !results[0].session_id.empty(), "sole_speaker_dead session id")) {
            auto sid = results[0].session_id;
            stack.settle(sid);
            auto view = *stack.engine().describe(sid);
            auto log = normalized_log(view["log"]);
            const std::vector<std::string> want{"instruction", "dispatch_result", "instruction", "dispatch_result",
                                                "state_change"};
            if (c.equal(json(kinds(log)).dump(), json(want).dump(), "sole_speaker_dead log kinds")) {
                c.equal(log[3]["outcome"], ordered_json("transport_error"), "dead speaker outcome");
                c.equal(log[4].dump(),
                        ordered_json{{"seq", 4}, {"kind", "state_change"}, {"state", "failed"},
                                     {"reason", "ROLE_UNSATISFIED(spk)"}}
                            .dump(),
                        "terminal entry");
            }
            c.equal(view["state"], ordered_json("failed"), "session state");
            c.equal(view["reason"], ordered_json("ROLE_UNSATISFIED(spk)"), "session reason");
            c.equal(count_capture(stack.world->capture(), [](auto& e) { return e.target == "cam-1"; }), std::size_t{0},
                    "camera never instructed");
        }
    }
}

}  // namespace

int main() {
    const std::vector<std::pair<std::string, std::function<void(Checks&)>>> criteria{
        {"end-to-end station navigation", end_to_end},
        {"hybrid routing conformance", hybrid_routing},
        {"device independence", device_independence},
        {"planner oracle equivalence", planner_oracle},
        {"dsl round-trip and fuzz", dsl_round_trip_and_fuzz},
        {"gateway codec golden vectors", codec_vectors},
        {"failover", failover},
    };
    int failed = 0;
    for (const auto& [name, run] : criteria) {
        Checks c;
        auto t0 = steady::now();
        try {
            run(c);
        } catch (const std::exception& e) {
            c.expect(false, std::string("exception: ") + e.what());
        }
        bool ok = c.failures().empty();
        failed += !ok;
        std::cout << (ok ? "PASS" : "FAIL") << "  " << name << "  (" << ms_since(t0) << " ms)\n";
        for (const auto& f : c.failures()) std::cout << "      " << f << "\n";
        std::cout << std::flush;
    }
    return failed == 0 ? 0 : 1;
}
