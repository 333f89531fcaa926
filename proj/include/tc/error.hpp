#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace tc {

enum class ErrorCode {
    InvalidDescriptor,
    UnknownDevice,
    StaleTimestamp,
    IoError,
    RoleUnsatisfied,
    UnknownLogic,
    InvalidLogic,
    PlanFailed,
    TableMiss,
    MissingParam,
    UnknownDriver,
    EncodingError,
    MalformedLine,
    PortInUse,
    RegistrationFailed,
    InvalidHeading,
    BindFailed,
    ConfigInvalid,
    InvalidScenario,
};

std::string_view to_string(ErrorCode code);

/// Failure carrying a stable machine-readable code plus a human detail.
/// `detail` holds the offending field path, role name, key, etc.
class Error : public std::runtime_error {
public:
    Error(ErrorCode code, std::string detail, std::string message = {});

    ErrorCode code() const noexcept { return code_; }
    const std::string& detail() const noexcept { return detail_; }

private:
    ErrorCode code_;
    std::string detail_;
};

}  // namespace tc
