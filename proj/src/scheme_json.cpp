#include "pelab/scheme_json.hpp"

#include "pelab/errors.hpp"
#include "pelab/json_fields.hpp"

namespace pelab::encodings {

nlohmann::json to_json(const SchemeConfig& cfg) {
  nlohmann::json j{{"name", std::string(to_string(cfg.scheme))},
                   {"d_model", cfg.d_model},
                   {"n_max", cfg.n_max},
                   {"alpha", cfg.alibi_slope()},
                   {"gamma", cfg.gamma},
                   {"clip_k", cfg.clip_k},
                   {"wavelet_max_scale", cfg.max_scale()},
                   {"refinement_levels", cfg.refinement_levels}};
  return j;
}

SchemeConfig scheme_from_json(const nlohmann::json& j, SchemeConfig base,
                              const std::string& section) {
  using json_fields::get_count;
  using json_fields::get_real;
  if (!j.is_object()) throw ConfigError(section, "must be a JSON object");
  for (const auto& [key, value] : j.items()) {
    const std::string field = section + "." + key;
    if (key == "name") {
      if (!value.is_string()) throw ConfigError(field, "must be a string");
      base.scheme = parse_scheme(value.get<std::string>(), field);
    } else if (key == "d_model") {
      base.d_model = get_count(value, field);
    } else if (key == "n_max") {
      base.n_max = get_count(value, field);
    } else if (key == "alpha") {
      base.alpha = get_real(value, field);
    } else if (key == "gamma") {
      base.gamma = get_real(value, field);
    } else if (key == "clip_k") {
      base.clip_k = get_count(value, field);
    } else if (key == "wavelet_max_scale") {
      base.wavelet_max_scale = static_cast<int>(get_count(value, field));
    } else if (key == "refinement_levels") {
      base.refinement_levels = static_cast<int>(get_count(value, field));
    } else if (key == "schemes") {
      // Scheme list for table reproduction; read by the harness.
      continue;
    } else {
      throw ConfigError(field, "unknown key");
    }
  }
  return base;
}

}  // namespace pelab::encodings
