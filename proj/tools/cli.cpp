#include "cli.hpp"

#include <CLI11.hpp>
#include <httplib.h>

#include <csignal>
#include <fstream>
#include <sstream>

#include "tc/devsim/world.hpp"
#include "tc/dsl/parser.hpp"
#include "tc/dsl/validator.hpp"
#include "tc/dsl/vocabulary.hpp"
#include "tc/error.hpp"
#include "tc/facade/server.hpp"
#include "tc/gateway/gateway.hpp"
#include "tc/net/url.hpp"

namespace tc::cli {

using json = nlohmann::json;
using namespace std::chrono_literals;

namespace {

std::optional<std::string> read_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) return std::nullopt;
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

/// Blocks until SIGINT/SIGTERM. The signals are masked for the whole
/// process first so no worker thread swallows them.
void block_signals() {
    sigset_t set;
    sigemptyset(&set);
    sigaddset(&set, SIGINT);
    sigaddset(&set, SIGTERM);
    pthread_sigmask(SIG_BLOCK, &set, nullptr);
}

void wait_for_signal() {
    sigset_t set;
    sigemptyset(&set);
    sigaddset(&set, SIGINT);
    sigaddset(&set, SIGTERM);
    int sig = 0;
    sigwait(&set, &sig);
}

struct Client {
    net::Url url;
    httplib::Client http;

    explicit Client(const net::Url& u) : url(u), http(u.origin()) {
        http.set_connection_timeout(3s);
        http.set_read_timeout(30s);
    }
    std::string path(const std::string& p) const { return net::join_path(url.path, p); }
};

std::optional<net::Url> server_url(const std::string& text, std::ostream& err) {
    auto url = net::parse_url(text);
    if (!url) err << "error: --server must be an http URL, got '" << text << "'\n";
    return url;
}

int transport_failure(const httplib::Result& r, const std::string& server, std::ostream& err) {
    err << "error: cannot reach " << server << ": " << httplib::to_string(r.error()) << "\n";
    return kExitTransport;
}

void print_error_body(const std::string& body, int status, std::ostream& err) {
    auto j = json::parse(body, nullptr, false);
    if (!j.is_discarded() && j.contains("error")) {
        err << "error: " << status << " " << j["error"].value("code", "") << ": " << j["error"].value("message", "")
            << "\n";
        if (j.contains("findings"))
            for (const auto& f : j["findings"])
                err << "  " << f["line"] << ":" << f["column"] << ": " << f["severity"].get<std::string>() << ": "
                    << f["message"].get<std::string>() << "\n";
    } else {
        err << "error: server replied " << status << "\n";
    }
}

int cmd_validate(const std::vector<std::string>& files, std::ostream& out, std::ostream& err) {
    bool failed = false;
    for (const auto& file : files) {
        auto src = read_file(file);
        if (!src) {
            err << file << ": cannot read file\n";
            failed = true;
            continue;
        }
        try {
            auto logic = dsl::parse(*src);
            auto report = dsl::validate(logic, dsl::default_vocabulary(), dsl::default_table_functions());
            for (const auto& f : report.findings) {
                out << file << ":" << f.pos.line << ":" << f.pos.column << ": " << dsl::to_string(f.severity) << ": "
                    << f.message << " [" << f.path << "]\n";
            }
            if (!report.ok()) failed = true;
            out << file << ": " << report.error_count() << " error(s), " << report.warning_count() << " warning(s)\n";
        } catch (const dsl::ParseError& e) {
            out << file << ":" << e.line() << ":" << e.column() << ": error: " << e.message() << "\n";
            failed = true;
        }
    }
    return failed ? kExitFailed : kExitOk;
}

int cmd_register(const std::string& server, const std::string& file, std::ostream& out, std::ostream& err) {
    auto url = server_url(server, err);
    if (!url) return kExitUsage;
    auto text = read_file(file);
    if (!text) {
        err << "error: cannot read " << file << "\n";
        return kExitFailed;
    }
    auto doc = json::parse(*text, nullptr, false);
    if (doc.is_discarded()) {
        err << "error: " << file << " is not valid JSON\n";
        return kExitFailed;
    }
    json list = doc.is_array() ? doc : doc.contains("devices") ? doc["devices"] : json::array({doc});
    Client c(*url);
    int rc = kExitOk;
    for (const auto& d : list) {
        auto r = c.http.Post(c.path("/devices"), d.dump(), "application/json");
        if (!r) return transport_failure(r, server, err);
        if (r->status / 100 != 2) {
            print_error_body(r->body, r->status, err);
            rc = kExitFailed;
            continue;
        }
        out << "registered " << json::parse(r->body)["device_id"].get<std::string>() << "\n";
    }
    return rc;
}

int cmd_upload(const std::string& server, const std::string& file, const std::string& name, std::ostream& out,
               std::ostream& err) {
    auto url = server_url(server, err);
    if (!url) return kExitUsage;
    auto text = read_file(file);
    if (!text) {
        err << "error: cannot read " << file << "\n";
        return kExitFailed;
    }
    Client c(*url);
    auto path = c.path("/logics") + (name.empty() ? "" : "?name=" + httplib::detail::encode_query_param(name));
    auto r = c.http.Post(path, *text, "text/plain");
    if (!r) return transport_failure(r, server, err);
    if (r->status != 201) {
        print_error_body(r->body, r->status, err);
        return kExitFailed;
    }
    out << "stored " << json::parse(r->body)["name"].get<std::string>() << "\n";
    return kExitOk;
}

int cmd_request(const std::string& server, const std::string& logic, const std::vector<std::string>& params,
                const std::string& zone, double x, double y, std::ostream& out, std::ostream& err) {
    auto url = server_url(server, err);
    if (!url) return kExitUsage;
    json p = json::object();
    for (const auto& kv : params) {
        auto eq = kv.find('=');
        if (eq == std::string::npos || eq == 0) {
            err << "error: --param expects key=value, got '" << kv << "'\n";
            return kExitUsage;
        }
        p[kv.substr(0, eq)] = kv.substr(eq + 1);
    }
    json body{{"logic", logic}, {"params", p}, {"user", {{"zone", zone}, {"x", x}, {"y", y}}}};
    Client c(*url);
    auto r = c.http.Post(c.path("/sessions"), body.dump(), "application/json");
    if (!r) return transport_failure(r, server, err);
    if (r->status != 201) {
        print_error_body(r->body, r->status, err);
        auto j = json::parse(r->body, nullptr, false);
        if (!j.is_discarded() && j.contains("session_id")) err << "session " << j["session_id"].get<std::string>() << "\n";
        return kExitFailed;
    }
    out << json::parse(r->body)["session_id"].get<std::string>() << "\n";
    return kExitOk;
}

int cmd_logs(const std::string& server, const std::string& session, bool follow, std::ostream& out,
             std::ostream& err) {
    auto url = server_url(server, err);
    if (!url) return kExitUsage;
    Client c(*url);
    if (!follow) {
        auto r = c.http.Get(c.path("/sessions/" + session));
        if (!r) return transport_failure(r, server, err);
        if (r->status != 200) {
            print_error_body(r->body, r->status, err);
            return kExitFailed;
        }
        auto view = nlohmann::ordered_json::parse(r->body);
        out << "# " << view["session_id"].get<std::string>() << " " << view["logic"].get<std::string>() << " "
            << view["state"].get<std::string>() << "\n";
        for (const auto& e : view["log"]) out << e.dump() << "\n";
        return kExitOk;
    }
    c.http.set_read_timeout(24h);
    std::string buffer;
    int status = 0;
    auto r = c.http.Get(
        c.path("/sessions/" + session + "/stream"),
        [&](const httplib::Response& res) {
            status = res.status;
            return true;
        },
        [&](const char* data, std::size_t n) {
            buffer.append(data, n);
            std::size_t end;
            while ((end = buffer.find("\n\n")) != std::string::npos) {
                auto frame = buffer.substr(0, end);
                buffer.erase(0, end + 2);
                if (frame.rfind("data: ", 0) == 0) out << frame.substr(6) << "\n" << std::flush;
            }
            return true;
        });
    if (!r) return transport_failure(r, server, err);
    if (status != 200) {
        print_error_body(r->body, status, err);
        return kExitFailed;
    }
    return kExitOk;
}

int cmd_server(const std::string& config_path, std::ostream& out, std::ostream& err) {
    try {
        block_signals();
        facade::Server server(facade::load_config(config_path));
        server.start();
        out << "tc server listening on " << server.base_url() << "\n" << std::flush;
        wait_for_signal();
        out << "shutting down\n";
        server.stop();
        return kExitOk;
    } catch (const Error& e) {
        err << "error: " << e.what() << "\n";
        return kExitFailed;
    }
}

int cmd_gateway(const std::string& config_path, std::ostream& out, std::ostream& err) {
    try {
        auto text = read_file(config_path);
        if (!text) throw Error(ErrorCode::ConfigInvalid, config_path, "cannot read config file");
        auto j = json::parse(*text, nullptr, false);
        if (j.is_discarded()) throw Error(ErrorCode::ConfigInvalid, config_path, "not valid JSON");
        block_signals();
        gateway::Gateway gw(gateway::config_from_json(j));
        gw.start();
        out << "gateway " << gw.config().gateway_id << " listening on " << gw.base_url() << "\n" << std::flush;
        wait_for_signal();
        gw.stop();
        return kExitOk;
    } catch (const Error& e) {
        err << "error: " << e.what() << "\n";
        return kExitFailed;
    }
}

int cmd_sim(const std::string& scenario, const std::string& server, bool script, bool no_ticker, std::ostream& out,
            std::ostream& err) {
    try {
        block_signals();
        devsim::World world(devsim::load_scenario(scenario), {server, true});
        world.spawn();
        world.start_controller();
        out << "sim controller on http://127.0.0.1:" << world.controller_port() << "\n";
        for (const auto& [id, url] : world.gateway_urls()) out << "gateway " << id << " " << url << "\n";
        for (const auto& d : world.spec().devices) {
            auto st = world.device_state(d.id);
            out << "device " << d.id << " " << (*st)["protocol"].get<std::string>() << " "
                << (*st)["address"].get<std::string>() << "\n";
        }
        out << std::flush;
        if (script) {
            for (const auto& r : world.run_script(true)) {
                out << "t=" << r.at_ms << "ms " << r.action;
                if (r.action == "request") out << " -> " << r.status << " " << r.session_id;
                out << "\n" << std::flush;
            }
        }
        if (!no_ticker) world.start_ticker();
        wait_for_signal();
        world.shutdown();
        return kExitOk;
    } catch (const Error& e) {
        err << "error: " << e.what() << "\n";
        return kExitFailed;
    }
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    CLI::App app{"Tacit coordination server, gateway, device simulator and client"};
    app.require_subcommand(1);

    std::string config, scenario, server, logic, session, file, name, zone;
    std::vector<std::string> files, params;
    double x = 0, y = 0;
    bool follow = false, script = false, no_ticker = false;

    auto* server_cmd = app.add_subcommand("server", "Run the coordination server");
    server_cmd->add_option("--config", config, "Server config JSON")->required();

    auto* gateway_cmd = app.add_subcommand("gateway", "Run a protocol gateway");
    gateway_cmd->add_option("--config", config, "Gateway config JSON")->required();

    auto* sim_cmd = app.add_subcommand("sim", "Run a simulated device world");
    sim_cmd->add_option("--scenario", scenario, "Scenario JSON")->required();
    sim_cmd->add_option("--server", server, "Coordination server URL")->default_val("http://127.0.0.1:8080");
    sim_cmd->add_flag("--script", script, "Play the scenario script before free-running");
    sim_cmd->add_flag("--no-ticker", no_ticker, "Only tick on POST /sim/tick");

    auto* validate_cmd = app.add_subcommand("validate", "Parse and validate coordination logic files");
    validate_cmd->add_option("files", files, "Logic files")->required();

    auto* register_cmd = app.add_subcommand("register", "Register device descriptors");
    register_cmd->add_option("--server", server, "Server URL")->required();
    register_cmd->add_option("file", file, "Descriptor JSON (object, array or {\"devices\":[...]})")->required();

    auto* upload_cmd = app.add_subcommand("upload", "Store a coordination logic on the server");
    upload_cmd->add_option("--server", server, "Server URL")->required();
    upload_cmd->add_option("--name", name, "Store under this name (default: service name)");
    upload_cmd->add_option("file", file, "Logic file")->required();

    auto* request_cmd = app.add_subcommand("request", "Start a session");
    request_cmd->add_option("--server", server, "Server URL")->required();
    request_cmd->add_option("--logic", logic, "Logic name")->required();
    request_cmd->add_option("--param", params, "Request parameter key=value (repeatable)");
    request_cmd->add_option("--user-zone", zone, "User zone")->required();
    request_cmd->add_option("--user-x", x, "User x in meters")->required();
    request_cmd->add_option("--user-y", y, "User y in meters")->required();

    auto* logs_cmd = app.add_subcommand("logs", "Print a session log");
    logs_cmd->add_option("--server", server, "Server URL")->required();
    logs_cmd->add_option("session", session, "Session id")->required();
    logs_cmd->add_flag("--follow", follow, "Stream entries until the session ends");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return kExitOk;
    } catch (const CLI::CallForAllHelp&) {
        out << app.help("", CLI::AppFormatMode::All);
        return kExitOk;
    } catch (const CLI::ParseError& e) {
        err << "error: " << e.what() << "\n" << "run 'tc --help' for usage\n";
        return kExitUsage;
    }

    if (*server_cmd) return cmd_server(config, out, err);
    if (*gateway_cmd) return cmd_gateway(config, out, err);
    if (*sim_cmd) return cmd_sim(scenario, server, script, no_ticker, out, err);
    if (*validate_cmd) return cmd_validate(files, out, err);
    if (*register_cmd) return cmd_register(server, file, out, err);
    if (*upload_cmd) return cmd_upload(server, file, name, out, err);
    if (*request_cmd) return cmd_request(server, logic, params, zone, x, y, out, err);
    if (*logs_cmd) return cmd_logs(server, session, follow, out, err);
    return kExitUsage;
}

}  // namespace tc::cli
