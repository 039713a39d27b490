#pragma once

#include <string>

#include <json.hpp>

#include "pelab/encodings.hpp"

namespace pelab::encodings {

nlohmann::json to_json(const SchemeConfig& cfg);

/// Overlays the keys present in `j` onto `base`. Unknown keys and wrongly typed
/// values raise ConfigError naming `section.key`.
SchemeConfig scheme_from_json(const nlohmann::json& j, SchemeConfig base,
                              const std::string& section = "scheme");

}  // namespace pelab::encodings
