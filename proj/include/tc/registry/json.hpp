#pragma once

#include <json.hpp>

#include "tc/registry/types.hpp"

namespace tc::registry {

nlohmann::json to_json(const Location& l);
nlohmann::json to_json(const AccessSpec& a);
nlohmann::json to_json(const DeviceDescriptor& d);

/// Structural decoding. Shape problems raise Error(InvalidDescriptor, path);
/// semantic checks are left to validate().
Location location_from_json(const nlohmann::json& j);
AccessSpec access_from_json(const nlohmann::json& j);
DeviceDescriptor descriptor_from_json(const nlohmann::json& j);

}  // namespace tc::registry
