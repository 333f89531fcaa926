#pragma once

#include <map>
#include <string>
#include <string_view>
#include <variant>

namespace tc::gateway {

/// Abstract instruction as the gateway receives it over HTTP.
struct DispatchEnvelope {
    std::string device_id;
    std::string driver;
    std::string native_address;  // host:port
    std::string verb;
    std::map<std::string, std::string> args;
    std::string correlation_id;
    std::string session_id;

    bool operator==(const DispatchEnvelope&) const = default;
};

inline constexpr std::string_view kLineProtoDriver = "lineproto";

/// `CMD <verb> <key>=<base64(value)>...\n`, keys ascending.
/// Throws Error(EncodingError) if the verb or a key is not a lower identifier.
std::string encode_native(const DispatchEnvelope& env);

struct NativeOk {
    bool operator==(const NativeOk&) const = default;
};

struct NativeDeviceError {
    std::string code;
    std::string message;
    bool operator==(const NativeDeviceError&) const = default;
};

struct NativeEvent {
    std::string event_type;
    std::map<std::string, std::string> payload;
    bool operator==(const NativeEvent&) const = default;
};

using NativeMessage = std::variant<NativeOk, NativeDeviceError, NativeEvent>;

/// Decodes one device-to-gateway line (trailing LF optional).
/// Throws Error(MalformedLine, excerpt).
NativeMessage decode_native(std::string_view line);

/// `EVT <type> <key>=<base64(value)>...\n`; the device side of the event grammar.
std::string encode_event(const NativeEvent& evt);

struct NativeCommand {
    std::string verb;
    std::map<std::string, std::string> args;
    bool operator==(const NativeCommand&) const = default;
};

/// Device-side parse of a `CMD` line. Throws Error(MalformedLine, excerpt).
NativeCommand decode_command(std::string_view line);

}  // namespace tc::gateway
