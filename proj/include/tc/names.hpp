#pragma once

#include <string_view>

namespace tc {

/// `[a-z][a-z0-9_]*`; verbs, drivers, event types and line-protocol keys.
bool is_lower_identifier(std::string_view s) noexcept;

/// Dotted capability name: lower identifiers joined by '.'.
bool is_capability_name(std::string_view s) noexcept;

/// `[A-Za-z_][A-Za-z0-9_]*`
bool is_identifier(std::string_view s) noexcept;

}  // namespace tc
