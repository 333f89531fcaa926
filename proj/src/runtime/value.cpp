#include "tc/runtime/value.hpp"

#include <cmath>
#include <cstdint>

#include "tc/dsl/printer.hpp"
#include "tc/error.hpp"

namespace tc::runtime {

std::string canonical(const Value& v) {
    if (const auto* s = std::get_if<std::string>(&v)) return *s;
    return dsl::format_number(std::get<double>(v));
}

nlohmann::json to_json(const Value& v) {
    if (const auto* s = std::get_if<std::string>(&v)) return *s;
    double d = std::get<double>(v);
    // Integral values go out as JSON integers so "4" never becomes "4.0".
    if (std::trunc(d) == d && std::fabs(d) < 9007199254740992.0) return static_cast<std::int64_t>(d);
    return d;
}

std::optional<Value> value_from_json(const nlohmann::json& j) {
    if (j.is_string()) return Value{j.get<std::string>()};
    if (j.is_number()) return Value{j.get<double>()};
    return std::nullopt;
}

Tables tables_from_json(const nlohmann::json& j) {
    const auto& doc = j.is_object() && j.contains("tables") ? j["tables"] : j;
    if (!doc.is_object()) throw Error(ErrorCode::ConfigInvalid, "tables", "expected an object");
    Tables out;
    for (const auto& [fn, entries] : doc.items()) {
        if (!entries.is_object()) throw Error(ErrorCode::ConfigInvalid, "tables." + fn, "expected an object");
        auto& table = out[fn];
        for (const auto& [key, text] : entries.items()) {
            if (!text.is_string()) throw Error(ErrorCode::ConfigInvalid, "tables." + fn + "." + key, "expected a string");
            table[key] = text.get<std::string>();
        }
    }
    return out;
}

}  // namespace tc::runtime
