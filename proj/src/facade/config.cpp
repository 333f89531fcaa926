#include "tc/facade/config.hpp"

#include <fstream>

#include "tc/error.hpp"
#include "tc/names.hpp"
#include "tc/net/url.hpp"

namespace tc::facade {

using json = nlohmann::json;

namespace {

[[noreturn]] void bad(const std::string& field, const std::string& message) {
    throw Error(ErrorCode::ConfigInvalid, field, message);
}

std::filesystem::path resolve(const std::filesystem::path& base, const std::string& p) {
    std::filesystem::path path(p);
    return path.is_relative() && !base.empty() ? base / path : path;
}

std::int64_t positive(const json& j, const char* key, std::int64_t fallback) {
    if (!j.contains(key)) return fallback;
    if (!j[key].is_number_integer() || j[key].get<std::int64_t>() <= 0) bad(key, "expected a positive integer");
    return j[key].get<std::int64_t>();
}

std::string text(const json& j, const char* key) {
    if (!j[key].is_string()) bad(key, "expected a string");
    return j[key].get<std::string>();
}

}  // namespace

Config config_from_json(const json& j, const std::filesystem::path& base_dir) {
    if (!j.is_object()) bad("", "expected an object");
    Config c;
    if (j.contains("listen")) {
        c.listen = text(j, "listen");
        if (!net::parse_host_port(c.listen)) bad("listen", "expected host:port");
    }
    if (j.contains("registry_path")) c.registry_path = resolve(base_dir, text(j, "registry_path"));
    c.ttl_ms = positive(j, "ttl_ms", c.ttl_ms);
    c.dispatch_timeout_ms = static_cast<int>(positive(j, "dispatch_timeout_ms", c.dispatch_timeout_ms));
    c.max_attempts = static_cast<int>(positive(j, "max_attempts", c.max_attempts));
    c.session_idle_timeout_ms = positive(j, "session_idle_timeout_ms", c.session_idle_timeout_ms);
    if (j.contains("tables_path")) {
        c.tables_path = resolve(base_dir, text(j, "tables_path"));
        if (!std::ifstream(*c.tables_path)) bad("tables_path", "not readable: " + c.tables_path->string());
    }
    if (j.contains("gateways")) {
        if (!j["gateways"].is_object()) bad("gateways", "expected an object of id -> URL");
        for (const auto& [id, url] : j["gateways"].items()) {
            if (!url.is_string() || !net::parse_url(url.get<std::string>())) bad("gateways." + id, "expected an http URL");
            c.gateways[id] = url.get<std::string>();
        }
    }
    if (j.contains("logics")) {
        if (!j["logics"].is_array()) bad("logics", "expected an array of paths");
        for (std::size_t i = 0; i < j["logics"].size(); ++i) {
            const auto& p = j["logics"][i];
            auto field = "logics[" + std::to_string(i) + "]";
            if (!p.is_string()) bad(field, "expected a path");
            auto path = resolve(base_dir, p.get<std::string>());
            if (!std::ifstream(path)) bad(field, "not readable: " + path.string());
            c.logics.push_back(path);
        }
    }
    if (j.contains("vocabulary")) {
        if (!j["vocabulary"].is_array()) bad("vocabulary", "expected an array");
        for (const auto& v : j["vocabulary"]) {
            if (!v.is_string() || !is_capability_name(v.get<std::string>())) bad("vocabulary", "expected capability names");
            c.vocabulary.insert(v.get<std::string>());
        }
    }
    if (j.contains("console_dir")) c.console_dir = resolve(base_dir, text(j, "console_dir"));
    return c;
}

Config load_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorCode::ConfigInvalid, path.string(), "cannot open config file");
    auto j = json::parse(in, nullptr, false);
    if (j.is_discarded()) throw Error(ErrorCode::ConfigInvalid, path.string(), "not valid JSON");
    return config_from_json(j, path.parent_path());
}

}  // namespace tc::facade
