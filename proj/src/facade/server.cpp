#include "tc/facade/server.hpp"

#include <fstream>
#include <sstream>

#include "tc/dsl/parser.hpp"
#include "tc/net/http_service.hpp"
#include "tc/net/url.hpp"
#include "tc/registry/json.hpp"

namespace tc::facade {

using json = nlohmann::json;
using namespace std::chrono_literals;

namespace {

std::string read_text(const std::filesystem::path& path, const std::string& field) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorCode::ConfigInvalid, field, "cannot read " + path.string());
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

runtime::Tables load_tables(const Config& c) {
    if (!c.tables_path) return {};
    auto j = json::parse(read_text(*c.tables_path, "tables_path"), nullptr, false);
    if (j.is_discarded()) throw Error(ErrorCode::ConfigInvalid, "tables_path", "not valid JSON");
    try {
        return runtime::tables_from_json(j);
    } catch (const Error& e) {
        throw Error(ErrorCode::ConfigInvalid, "tables_path", e.what());
    }
}

int status_for(ErrorCode code) {
    switch (code) {
        case ErrorCode::UnknownDevice:
        case ErrorCode::UnknownLogic: return 404;
        case ErrorCode::StaleTimestamp: return 409;
        case ErrorCode::PlanFailed: return 422;
        default: return 400;
    }
}

void send_error(httplib::Response& res, int status, std::string_view code, const std::string& message,
                const std::string& detail = {}) {
    res.status = status;
    json err{{"code", code}, {"message", message}};
    if (!detail.empty()) err["detail"] = detail;
    res.set_content(json{{"error", err}}.dump(), "application/json");
}

void send_error(httplib::Response& res, const Error& e) {
    send_error(res, status_for(e.code()), to_string(e.code()), e.what(), e.detail());
}

void send_json(httplib::Response& res, int status, const std::string& body) {
    res.status = status;
    res.set_content(body, "application/json");
}

json findings_json(const dsl::ValidationReport& report) {
    json out = json::array();
    for (const auto& f : report.findings) {
        out.push_back({{"severity", dsl::to_string(f.severity)},
                       {"line", f.pos.line},
                       {"column", f.pos.column},
                       {"path", f.path},
                       {"message", f.message}});
    }
    return out;
}

}  // namespace

const Clock& Server::default_clock() {
    static SystemClock clock;
    return clock;
}

Server::Server(Config config, const Clock& clock)
    : config_(std::move(config)),
      clock_(clock),
      registry_(clock_, config_.registry_path),
      gateways_(config_.gateways),
      dispatcher_(gateways_) {
    if (config_.registry_path && std::filesystem::exists(*config_.registry_path)) {
        try {
            registry_.load_from(*config_.registry_path);
        } catch (const Error& e) {
            throw Error(ErrorCode::ConfigInvalid, "registry_path", e.what());
        }
    }
    runtime::EngineConfig ec;
    ec.dispatch = {config_.dispatch_timeout_ms, config_.max_attempts};
    ec.ttl_ms = config_.ttl_ms;
    ec.idle_timeout_ms = config_.session_idle_timeout_ms;
    ec.vocabulary = config_.vocabulary;
    engine_ = std::make_unique<runtime::Engine>(registry_, dispatcher_, clock_, ec, load_tables(config_));
    for (std::size_t i = 0; i < config_.logics.size(); ++i) {
        auto field = "logics[" + std::to_string(i) + "]";
        try {
            auto report = engine_->put_logic("", read_text(config_.logics[i], field));
            if (!report.ok()) throw Error(ErrorCode::ConfigInvalid, field, report.findings.front().message);
        } catch (const dsl::ParseError& e) {
            throw Error(ErrorCode::ConfigInvalid, field, e.what());
        }
    }
}

Server::~Server() { stop(); }

int Server::port() const { return http_ ? http_->port() : 0; }

std::string Server::base_url() const {
    auto hp = net::parse_host_port(config_.listen);
    return "http://" + hp->host + ":" + std::to_string(port());
}

void Server::start() {
    auto hp = net::parse_host_port(config_.listen);
    if (!hp) throw Error(ErrorCode::BindFailed, config_.listen, "listen must be host:port");
    http_ = std::make_unique<net::HttpService>();
    routes();
    if (!http_->start(hp->host, hp->port)) {
        http_.reset();
        throw Error(ErrorCode::BindFailed, config_.listen, "cannot bind");
    }
}

void Server::stop() {
    stopping_ = true;
    if (http_) http_->stop();
    if (engine_) engine_->shutdown();
}

void Server::routes() {
    auto& srv = http_->server();
    srv.set_default_headers({{"Access-Control-Allow-Origin", "*"}});
    srv.Options(".*", [](const httplib::Request&, httplib::Response& res) {
        res.set_header("Access-Control-Allow-Methods", "GET, POST, DELETE, OPTIONS");
        res.set_header("Access-Control-Allow-Headers", "Content-Type");
        res.status = 204;
    });
    if (config_.console_dir && std::filesystem::is_directory(*config_.console_dir))
        srv.set_mount_point("/console", config_.console_dir->string());

    srv.Get("/healthz", [](const httplib::Request&, httplib::Response& res) {
        send_json(res, 200, R"({"status":"ok"})");
    });
    srv.Get("/stats", [this](const httplib::Request&, httplib::Response& res) {
        send_json(res, 200, json{{"devices", registry_.size()}, {"dropped_events", engine_->dropped_events()}}.dump());
    });

    srv.Post("/devices", [this](const httplib::Request& req, httplib::Response& res) {
        auto j = json::parse(req.body, nullptr, false);
        if (j.is_discarded()) return send_error(res, 400, "INVALID_DESCRIPTOR", "body is not JSON");
        try {
            auto id = registry_.register_device(registry::descriptor_from_json(j));
            send_json(res, 200, json{{"device_id", id}}.dump());
        } catch (const Error& e) {
            send_error(res, e);
        }
    });
    srv.Delete(R"(/devices/([^/]+))", [this](const httplib::Request& req, httplib::Response& res) {
        if (!registry_.remove(req.matches[1])) return send_error(res, 404, "UNKNOWN_DEVICE", "no such device", req.matches[1]);
        res.status = 204;
    });
    srv.Post(R"(/devices/([^/]+)/heartbeat)", [this](const httplib::Request& req, httplib::Response& res) {
        Timestamp at = clock_.now();
        auto j = json::parse(req.body.empty() ? "{}" : req.body, nullptr, false);
        if (j.is_discarded() || !j.is_object()) return send_error(res, 400, "BAD_REQUEST", "body must be a JSON object");
        if (j.contains("at")) {
            if (!j["at"].is_number_integer()) return send_error(res, 400, "BAD_REQUEST", "'at' must be an integer");
            at = j["at"];
        }
        try {
            registry_.heartbeat(req.matches[1], at);
            res.status = 204;
        } catch (const Error& e) {
            send_error(res, e);
        }
    });
    srv.Get("/devices", [this](const httplib::Request& req, httplib::Response& res) {
        std::optional<std::string> zone;
        if (req.has_param("zone") && !req.get_param_value("zone").empty()) zone = req.get_param_value("zone");
        std::vector<registry::DeviceDescriptor> found;
        auto now = clock_.now();
        if (req.has_param("capability")) {
            found = registry_.query(req.get_param_value("capability"), now, config_.ttl_ms, zone);
        } else {
            for (auto& d : registry_.snapshot(now).devices) {
                if (!zone || d.location.zone == *zone) found.push_back(std::move(d));
            }
        }
        json out = json::array();
        for (const auto& d : found) out.push_back(registry::to_json(d));
        send_json(res, 200, out.dump());
    });

    srv.Post("/logics", [this](const httplib::Request& req, httplib::Response& res) {
        std::string name = req.has_param("name") ? req.get_param_value("name") : "";
        try {
            auto report = engine_->put_logic(name, req.body);
            if (!report.ok()) {
                res.status = 400;
                res.set_content(json{{"error", {{"code", "INVALID_LOGIC"}, {"message", "validation failed"}}},
                                     {"findings", findings_json(report)}}
                                    .dump(),
                                "application/json");
                return;
            }
            if (name.empty()) name = dsl::parse(req.body).name;
            send_json(res, 201, json{{"name", name}, {"findings", findings_json(report)}}.dump());
        } catch (const dsl::ParseError& e) {
            send_error(res, 400, "INVALID_LOGIC", e.what());
        }
    });
    srv.Get(R"(/logics/([^/]+))", [this](const httplib::Request& req, httplib::Response& res) {
        auto src = engine_->logic_source(req.matches[1]);
        if (!src) return send_error(res, 404, "UNKNOWN_LOGIC", "no such logic", req.matches[1]);
        res.set_content(*src, "text/plain; charset=utf-8");
    });

    srv.Post("/sessions", [this](const httplib::Request& req, httplib::Response& res) {
        auto j = json::parse(req.body, nullptr, false);
        if (j.is_discarded() || !j.is_object() || !j.contains("logic") || !j["logic"].is_string())
            return send_error(res, 400, "BAD_REQUEST", "expected {\"logic\":...,\"params\":{...},\"user\":{...}}");
        runtime::Bindings params;
        if (j.contains("params")) {
            if (!j["params"].is_object()) return send_error(res, 400, "BAD_REQUEST", "params must be an object");
            for (const auto& [k, v] : j["params"].items()) {
                auto value = runtime::value_from_json(v);
                if (!value) return send_error(res, 400, "BAD_REQUEST", "params values must be strings or numbers", k);
                params[k] = *value;
            }
        }
        registry::Location user;
        if (j.contains("user")) {
            try {
                user = registry::location_from_json(j["user"]);
            } catch (const Error& e) {
                return send_error(res, 400, "BAD_REQUEST", e.what(), "user." + e.detail());
            }
        }
        try {
            auto sid = engine_->start_session(j["logic"], std::move(params), std::move(user));
            send_json(res, 201, json{{"session_id", sid}}.dump());
        } catch (const runtime::PlanFailed& e) {
            res.status = 422;
            res.set_content(json{{"error", {{"code", "PLAN_FAILED"}, {"message", e.what()}, {"detail", e.detail()}}},
                                 {"session_id", e.session_id()}}
                                .dump(),
                            "application/json");
        } catch (const Error& e) {
            send_error(res, e);
        }
    });
    srv.Get(R"(/sessions/([^/]+))", [this](const httplib::Request& req, httplib::Response& res) {
        auto view = engine_->describe(req.matches[1]);
        if (!view) return send_error(res, 404, "UNKNOWN_SESSION", "no such session", req.matches[1]);
        send_json(res, 200, view->dump());
    });
    srv.Get(R"(/sessions/([^/]+)/stream)", [this](const httplib::Request& req, httplib::Response& res) {
        std::string sid = req.matches[1];
        if (!engine_->state(sid)) return send_error(res, 404, "UNKNOWN_SESSION", "no such session", sid);
        auto cursor = std::make_shared<std::size_t>(0);
        if (req.has_param("from")) {
            try {
                *cursor = std::stoul(req.get_param_value("from"));
            } catch (const std::exception&) {
                return send_error(res, 400, "BAD_REQUEST", "from must be a number");
            }
        }
        res.set_header("Cache-Control", "no-cache");
        res.set_chunked_content_provider("text/event-stream", [this, sid, cursor](std::size_t, httplib::DataSink& sink) {
            auto page = engine_->read_log(sid, *cursor, 250ms);
            if (!page || stopping_) {
                sink.done();
                return true;
            }
            for (const auto& entry : page->entries) {
                auto frame = "data: " + entry.dump() + "\n\n";
                if (!sink.write(frame.data(), frame.size())) return false;
                ++*cursor;
            }
            if (page->terminal && page->entries.empty()) sink.done();
            return true;
        });
    });

    srv.Post("/events", [this](const httplib::Request& req, httplib::Response& res) {
        auto j = json::parse(req.body, nullptr, false);
        if (j.is_discarded() || !j.is_object() || !j.contains("device_id") || !j["device_id"].is_string() ||
            !j.contains("event_type") || !j["event_type"].is_string())
            return send_error(res, 400, "BAD_REQUEST", "expected {\"device_id\",\"event_type\",\"payload\"}");
        std::map<std::string, std::string> payload;
        if (j.contains("payload")) {
            if (!j["payload"].is_object()) return send_error(res, 400, "BAD_REQUEST", "payload must be an object");
            for (const auto& [k, v] : j["payload"].items()) {
                if (!v.is_string()) return send_error(res, 400, "BAD_REQUEST", "payload values must be strings", k);
                payload[k] = v.get<std::string>();
            }
        }
        try {
            auto reached = engine_->ingest_event(j["device_id"], j["event_type"], payload);
            send_json(res, 202, json{{"delivered", reached}}.dump());
        } catch (const Error& e) {
            send_error(res, e);
        }
    });
}

}  // namespace tc::facade
