#include "tc/outcome.hpp"

namespace tc {

std::string_view to_string(OutcomeKind kind) {
    switch (kind) {
        case OutcomeKind::Ok: return "ok";
        case OutcomeKind::DeviceError: return "device_error";
        case OutcomeKind::Timeout: return "timeout";
        case OutcomeKind::TransportError: return "transport_error";
    }
    return "?";
}

std::optional<OutcomeKind> parse_outcome_kind(std::string_view s) {
    if (s == "ok") return OutcomeKind::Ok;
    if (s == "device_error") return OutcomeKind::DeviceError;
    if (s == "timeout") return OutcomeKind::Timeout;
    if (s == "transport_error") return OutcomeKind::TransportError;
    return std::nullopt;
}

}  // namespace tc
