#pragma once

#include <optional>
#include <string>
#include <string_view>

namespace tc {

enum class OutcomeKind { Ok, DeviceError, Timeout, TransportError };

std::string_view to_string(OutcomeKind kind);
std::optional<OutcomeKind> parse_outcome_kind(std::string_view s);

/// Result of one leg of a dispatch. `code` is set for device errors only.
struct Outcome {
    OutcomeKind kind = OutcomeKind::Ok;
    std::string code;
    std::string message;

    static Outcome ok() { return {}; }
    static Outcome device_error(std::string code, std::string message) {
        return {OutcomeKind::DeviceError, std::move(code), std::move(message)};
    }
    static Outcome timeout(std::string message) { return {OutcomeKind::Timeout, {}, std::move(message)}; }
    static Outcome transport_error(std::string message) {
        return {OutcomeKind::TransportError, {}, std::move(message)};
    }

    /// Timeouts and transport errors are worth retrying; device errors are not.
    bool retryable() const noexcept { return kind == OutcomeKind::Timeout || kind == OutcomeKind::TransportError; }

    bool operator==(const Outcome&) const = default;
};

}  // namespace tc
