#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "tc/clock.hpp"

namespace tc::facade {

struct Config {
    std::string listen = "127.0.0.1:8080";
    std::optional<std::filesystem::path> registry_path;
    DurationMs ttl_ms = 30'000;
    int dispatch_timeout_ms = 2000;
    int max_attempts = 2;
    DurationMs session_idle_timeout_ms = 10 * 60 * 1000;
    std::optional<std::filesystem::path> tables_path;
    std::map<std::string, std::string> gateways;  // id -> base URL
    std::vector<std::filesystem::path> logics;    // preloaded at start
    std::set<std::string> vocabulary;             // empty means the default
    std::optional<std::filesystem::path> console_dir;
};

/// Relative paths resolve against `base_dir`. Throws Error(ConfigInvalid, field).
Config config_from_json(const nlohmann::json& j, const std::filesystem::path& base_dir = {});
Config load_config(const std::filesystem::path& path);

}  // namespace tc::facade
