#include "tc/gateway/lineproto.hpp"

#include <vector>

#include "tc/error.hpp"
#include "tc/gateway/base64.hpp"
#include "tc/names.hpp"

namespace tc::gateway {

namespace {

std::string excerpt(std::string_view line) {
    constexpr std::size_t kMax = 40;
    std::string out(line.substr(0, kMax));
    if (line.size() > kMax) out += "...";
    return out;
}

[[noreturn]] void malformed(std::string_view line, std::string why) {
    throw Error(ErrorCode::MalformedLine, excerpt(line), std::move(why));
}

std::string_view strip_terminator(std::string_view line) {
    if (!line.empty() && line.back() == '\n') line.remove_suffix(1);
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    return line;
}

std::vector<std::string_view> split_spaces(std::string_view s) {
    std::vector<std::string_view> out;
    std::size_t start = 0;
    while (start <= s.size()) {
        auto sp = s.find(' ', start);
        if (sp == std::string_view::npos) sp = s.size();
        out.push_back(s.substr(start, sp - start));
        start = sp + 1;
    }
    return out;
}

std::string encode_fields(std::string head, const std::map<std::string, std::string>& fields) {
    for (const auto& [k, v] : fields) {
        if (!is_lower_identifier(k)) throw Error(ErrorCode::EncodingError, k, "key is not an identifier");
        head += ' ';
        head += k;
        head += '=';
        head += base64_encode(v);
    }
    head += '\n';
    return head;
}

std::map<std::string, std::string> decode_fields(std::string_view line, const std::vector<std::string_view>& parts,
                                                 std::size_t first) {
    std::map<std::string, std::string> out;
    for (std::size_t i = first; i < parts.size(); ++i) {
        auto eq = parts[i].find('=');
        if (eq == std::string_view::npos) malformed(line, "field without '='");
        auto key = parts[i].substr(0, eq);
        if (!is_lower_identifier(key)) malformed(line, "bad field key");
        auto value = base64_decode(parts[i].substr(eq + 1));
        if (!value) malformed(line, "bad base64 value");
        if (!out.emplace(std::string(key), std::move(*value)).second) malformed(line, "duplicate key");
    }
    return out;
}

}  // namespace

std::string encode_native(const DispatchEnvelope& env) {
    if (!is_lower_identifier(env.verb)) throw Error(ErrorCode::EncodingError, env.verb, "verb is not an identifier");
    return encode_fields("CMD " + env.verb, env.args);
}

std::string encode_event(const NativeEvent& evt) {
    if (!is_lower_identifier(evt.event_type))
        throw Error(ErrorCode::EncodingError, evt.event_type, "event type is not an identifier");
    return encode_fields("EVT " + evt.event_type, evt.payload);
}

NativeMessage decode_native(std::string_view raw) {
    auto line = strip_terminator(raw);
    if (line.find('\n') != std::string_view::npos) malformed(raw, "embedded LF");
    if (line == "OK") return NativeOk{};
    auto parts = split_spaces(line);
    if (parts[0] == "ERR") {
        if (parts.size() < 2 || parts[1].empty()) malformed(raw, "ERR without code");
        auto code_end = line.find(' ', 4);
        std::string message = code_end == std::string_view::npos ? "" : std::string(line.substr(code_end + 1));
        return NativeDeviceError{std::string(parts[1]), std::move(message)};
    }
    if (parts[0] == "EVT") {
        if (parts.size() < 2 || !is_lower_identifier(parts[1])) malformed(raw, "bad event type");
        return NativeEvent{std::string(parts[1]), decode_fields(raw, parts, 2)};
    }
    malformed(raw, "unrecognized leading token");
}

NativeCommand decode_command(std::string_view raw) {
    auto line = strip_terminator(raw);
    auto parts = split_spaces(line);
    if (parts[0] != "CMD" || parts.size() < 2 || !is_lower_identifier(parts[1])) malformed(raw, "not a CMD line");
    return NativeCommand{std::string(parts[1]), decode_fields(raw, parts, 2)};
}

}  // namespace tc::gateway
