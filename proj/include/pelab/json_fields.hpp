#pragma once

#include <cstddef>
#include <cstdint>
#include <string>

#include <json.hpp>

#include "pelab/errors.hpp"

namespace pelab::json_fields {

inline std::size_t get_count(const nlohmann::json& v, const std::string& field) {
  if (!v.is_number_integer() || v.get<std::int64_t>() < 0)
    throw ConfigError(field, "must be a non-negative integer");
  return v.get<std::size_t>();
}

inline double get_real(const nlohmann::json& v, const std::string& field) {
  if (!v.is_number()) throw ConfigError(field, "must be a number");
  return v.get<double>();
}

inline bool get_bool(const nlohmann::json& v, const std::string& field) {
  if (!v.is_boolean()) throw ConfigError(field, "must be true or false");
  return v.get<bool>();
}

}  // namespace pelab::json_fields
