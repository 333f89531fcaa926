#include "tc/error.hpp"

namespace tc {

std::string_view to_string(ErrorCode code) {
    switch (code) {
        case ErrorCode::InvalidDescriptor: return "INVALID_DESCRIPTOR";
        case ErrorCode::UnknownDevice: return "UNKNOWN_DEVICE";
        case ErrorCode::StaleTimestamp: return "STALE_TIMESTAMP";
        case ErrorCode::IoError: return "IO_ERROR";
        case ErrorCode::RoleUnsatisfied: return "ROLE_UNSATISFIED";
        case ErrorCode::UnknownLogic: return "UNKNOWN_LOGIC";
        case ErrorCode::InvalidLogic: return "INVALID_LOGIC";
        case ErrorCode::PlanFailed: return "PLAN_FAILED";
        case ErrorCode::TableMiss: return "TABLE_MISS";
        case ErrorCode::MissingParam: return "MISSING_PARAM";
        case ErrorCode::UnknownDriver: return "UNKNOWN_DRIVER";
        case ErrorCode::EncodingError: return "ENCODING_ERROR";
        case ErrorCode::MalformedLine: return "MALFORMED_LINE";
        case ErrorCode::PortInUse: return "PORT_IN_USE";
        case ErrorCode::RegistrationFailed: return "REGISTRATION_FAILED";
        case ErrorCode::InvalidHeading: return "INVALID_HEADING";
        case ErrorCode::BindFailed: return "BIND_FAILED";
        case ErrorCode::ConfigInvalid: return "CONFIG_INVALID";
        case ErrorCode::InvalidScenario: return "INVALID_SCENARIO";
    }
    return "UNKNOWN";
}

namespace {

std::string format_what(ErrorCode code, const std::string& detail, const std::string& message) {
    std::string out(to_string(code));
    out += '(';
    out += detail;
    out += ')';
    if (!message.empty()) {
        out += ": ";
        out += message;
    }
    return out;
}

}  // namespace

Error::Error(ErrorCode code, std::string detail, std::string message)
    : std::runtime_error(format_what(code, detail, message)), code_(code), detail_(std::move(detail)) {}

}  // namespace tc
