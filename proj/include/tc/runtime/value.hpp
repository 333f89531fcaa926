#pragma once

#include <map>
#include <optional>
#include <string>
#include <variant>

#include <json.hpp>

namespace tc::runtime {

/// Evaluated expression value.
using Value = std::variant<std::string, double>;

/// Strings as-is; numbers in the DSL's canonical spelling ("4", "0.5").
std::string canonical(const Value& v);

nlohmann::json to_json(const Value& v);

/// Strings and numbers only; anything else yields nullopt.
std::optional<Value> value_from_json(const nlohmann::json& j);

using Bindings = std::map<std::string, Value>;

/// Lookup tables: function name -> key -> text.
using Tables = std::map<std::string, std::map<std::string, std::string>>;

/// Accepts `{"fn":{"key":"text"}}` or a document with that under "tables".
/// Throws Error(ConfigInvalid, path).
Tables tables_from_json(const nlohmann::json& j);

}  // namespace tc::runtime
