#pragma once

#include <set>
#include <string>

namespace tc::dsl {

/// Capability names the bundled simulator devices publish.
inline std::set<std::string> default_vocabulary() {
    return {"visual.display", "audio.speaker", "vision.camera", "debug.echo"};
}

/// Lookup tables the station scenario provides.
inline std::set<std::string> default_table_functions() {
    return {"route", "expected_direction", "alert_text"};
}

}  // namespace tc::dsl
