#pragma once

#include "ifgsim/atom/response.hpp"
#include "ifgsim/core/errors.hpp"
#include "ifgsim/imaging/system.hpp"

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include <charconv>
#include <cstdint>
#include <cstdlib>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

namespace ifgsim::io {

/// Environment variable that overrides [output] dir.
inline constexpr const char* output_dir_env = "IFGSIM_OUTPUT_DIR";

/// Batch-run configuration, all quantities SI. File keys carry unit suffixes
/// (see README) and are converted on load.
struct RunConfig {
  ImagingSystem system;
  std::optional<double> rho0;     ///< explicit pupil width; otherwise calibrated
  double target_resolution = 370e-9;
  double thermal_blur = 0.0;
  LineParams line;
  double illumination_power = 5e-9; ///< W
  double illumination_fwhm = 5e-6;  ///< m
  std::vector<double> detunings;    ///< Hz
  std::vector<double> defocus;      ///< object space, m
  std::size_t grid_n = 256;
  double grid_pitch = 3.4e-6 / 256;
  double source_x = 0.0;
  double source_y = 0.0;
  double noise_sigma = 0.0;          ///< absolute per-pixel sigma
  double noise_sigma_relative = 0.0; ///< fraction of max|S| of each series
  std::uint64_t seed = 1;
  std::optional<double> calibration_detuning;
  bool pin_aberration = false;
  bool fit_rho0 = false;
  std::filesystem::path output_dir = "ifgsim_out";

  void validate() const {
    system.validate();
    line.validate();
    if (detunings.empty()) throw ConfigError("[sweep] detuning_mhz: list must not be empty");
    if (defocus.empty()) throw ConfigError("[sweep] defocus_um: list must not be empty");
    if (!(target_resolution > 0.0)) throw ConfigError("[system] target_resolution_nm must be positive");
    if (!(thermal_blur >= 0.0)) throw ConfigError("[system] thermal_blur_nm must be >= 0");
    if (!(noise_sigma >= 0.0)) throw ConfigError("[noise] sigma must be >= 0");
    if (!(noise_sigma_relative >= 0.0)) throw ConfigError("[noise] sigma_relative must be >= 0");
    if (!(illumination_power >= 0.0)) throw ConfigError("[illumination] power_nw must be >= 0");
    if (!(illumination_fwhm > 0.0)) throw ConfigError("[illumination] fwhm_um must be positive");
    if (rho0 && !(*rho0 > 0.0)) throw ConfigError("[system] rho0_mm must be positive");
  }
};

namespace detail {

inline double parse_number(const std::string& key, std::string text) {
  const auto first = text.find_first_not_of(" \t");
  const auto last = text.find_last_not_of(" \t");
  if (first == std::string::npos) throw ConfigError(key + ": empty value");
  text = text.substr(first, last - first + 1);
  char* end = nullptr;
  const double v = std::strtod(text.c_str(), &end);
  if (end != text.c_str() + text.size() || !std::isfinite(v))
    throw ConfigError(key + ": '" + text + "' is not a finite number");
  return v;
}

inline std::vector<double> parse_list(const std::string& key, const std::string& text) {
  std::vector<double> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ','))
    if (item.find_first_not_of(" \t") != std::string::npos) out.push_back(parse_number(key, item));
  return out;
}

inline bool parse_bool(const std::string& key, const std::string& text) {
  if (text == "true" || text == "1" || text == "yes") return true;
  if (text == "false" || text == "0" || text == "no") return false;
  throw ConfigError(key + ": expected true or false, got '" + text + "'");
}

} // namespace detail

inline const std::map<std::string, std::set<std::string>>& config_schema() {
  static const std::map<std::string, std::set<std::string>> schema = {
      {"system", {"f_fresnel_mm", "magnification", "na", "wavelength_nm", "rho0_mm", "target_resolution_nm",
                  "aberration_rad_per_mm4", "pupil_samples", "thermal_blur_nm"}},
      {"line", {"gamma_mhz", "delta0_mhz", "a0"}},
      {"illumination", {"power_nw", "fwhm_um"}},
      {"sweep", {"detuning_mhz", "defocus_um"}},
      {"grid", {"n", "field_um", "pitch_nm"}},
      {"source", {"offset_x_nm", "offset_y_nm"}},
      {"noise", {"sigma", "sigma_relative", "seed"}},
      {"calibration", {"detuning_mhz", "pin_aberration", "fit_rho0"}},
      {"output", {"dir"}},
  };
  return schema;
}

inline RunConfig parse_config(std::istream& in, const std::string& name = "<config>") {
  boost::property_tree::ptree tree;
  try {
    boost::property_tree::ini_parser::read_ini(in, tree);
  } catch (const boost::property_tree::ini_parser_error& e) {
    throw ConfigError(name + ": " + e.message() + " (line " + std::to_string(e.line()) + ")");
  }
  const auto& schema = config_schema();
  for (const auto& [section, body] : tree) {
    const auto s = schema.find(section);
    if (s == schema.end()) throw ConfigError(name + ": unknown section [" + section + "]");
    if (body.empty() && !body.data().empty())
      throw ConfigError(name + ": key '" + section + "' outside any section");
    for (const auto& [key, value] : body)
      if (!s->second.count(key)) throw ConfigError(name + ": unknown key [" + section + "] " + key);
  }

  auto get = [&](const std::string& section, const std::string& key) -> std::optional<std::string> {
    if (auto v = tree.get_optional<std::string>(boost::property_tree::ptree::path_type(section + "/" + key, '/')))
      return *v;
    return std::nullopt;
  };
  auto number = [&](const std::string& section, const std::string& key, double& target, double scale) {
    if (auto v = get(section, key)) target = detail::parse_number("[" + section + "] " + key, *v) * scale;
  };

  RunConfig cfg;
  double magnification = 585.0;
  number("system", "f_fresnel_mm", cfg.system.f_fresnel, 1e-3);
  number("system", "magnification", magnification, 1.0);
  number("system", "na", cfg.system.na, 1.0);
  number("system", "wavelength_nm", cfg.system.wavelength, 1e-9);
  number("system", "target_resolution_nm", cfg.target_resolution, 1e-9);
  number("system", "aberration_rad_per_mm4", cfg.system.aberration, 1e12);
  number("system", "thermal_blur_nm", cfg.thermal_blur, 1e-9);
  if (auto v = get("system", "rho0_mm")) {
    cfg.rho0 = detail::parse_number("[system] rho0_mm", *v) * 1e-3;
    cfg.system.rho0 = *cfg.rho0;
  }
  if (auto v = get("system", "pupil_samples"))
    cfg.system.pupil_samples = static_cast<std::size_t>(detail::parse_number("[system] pupil_samples", *v));
  if (!(magnification > 0.0)) throw ConfigError("[system] magnification must be positive");
  cfg.system.f_reimage = magnification * cfg.system.f_fresnel;

  number("line", "gamma_mhz", cfg.line.gamma, 1e6);
  number("line", "delta0_mhz", cfg.line.delta0, 1e6);
  number("line", "a0", cfg.line.a0, 1.0);
  number("illumination", "power_nw", cfg.illumination_power, 1e-9);
  number("illumination", "fwhm_um", cfg.illumination_fwhm, 1e-6);

  if (auto v = get("sweep", "detuning_mhz")) {
    cfg.detunings = detail::parse_list("[sweep] detuning_mhz", *v);
    for (auto& d : cfg.detunings) d *= 1e6;
  }
  if (auto v = get("sweep", "defocus_um")) {
    cfg.defocus = detail::parse_list("[sweep] defocus_um", *v);
    for (auto& z : cfg.defocus) z *= 1e-6;
  }

  if (auto v = get("grid", "n")) {
    const double n = detail::parse_number("[grid] n", *v);
    if (!(n >= 16 && n == std::floor(n))) throw ConfigError("[grid] n must be an integer >= 16");
    cfg.grid_n = static_cast<std::size_t>(n);
  }
  if ((cfg.grid_n & (cfg.grid_n - 1)) != 0) throw ConfigError("[grid] n must be a power of two");
  cfg.grid_pitch = 3.4e-6 / static_cast<double>(cfg.grid_n);
  if (auto v = get("grid", "field_um"))
    cfg.grid_pitch = detail::parse_number("[grid] field_um", *v) * 1e-6 / static_cast<double>(cfg.grid_n);
  if (auto v = get("grid", "pitch_nm")) {
    if (get("grid", "field_um")) throw ConfigError("[grid] give either field_um or pitch_nm, not both");
    cfg.grid_pitch = detail::parse_number("[grid] pitch_nm", *v) * 1e-9;
  }
  if (!(cfg.grid_pitch > 0.0)) throw ConfigError("[grid] pitch must be positive");

  number("source", "offset_x_nm", cfg.source_x, 1e-9);
  number("source", "offset_y_nm", cfg.source_y, 1e-9);
  number("noise", "sigma", cfg.noise_sigma, 1.0);
  number("noise", "sigma_relative", cfg.noise_sigma_relative, 1.0);
  if (auto v = get("noise", "seed")) {
    const double s = detail::parse_number("[noise] seed", *v);
    if (!(s >= 0 && s == std::floor(s))) throw ConfigError("[noise] seed must be a non-negative integer");
    cfg.seed = static_cast<std::uint64_t>(s);
  }
  if (auto v = get("calibration", "detuning_mhz"))
    cfg.calibration_detuning = detail::parse_number("[calibration] detuning_mhz", *v) * 1e6;
  if (auto v = get("calibration", "pin_aberration"))
    cfg.pin_aberration = detail::parse_bool("[calibration] pin_aberration", *v);
  if (auto v = get("calibration", "fit_rho0")) cfg.fit_rho0 = detail::parse_bool("[calibration] fit_rho0", *v);
  if (auto v = get("output", "dir")) cfg.output_dir = *v;
  if (const char* env = std::getenv(output_dir_env); env && *env) cfg.output_dir = env;

  cfg.validate();
  return cfg;
}

inline RunConfig parse_config_text(const std::string& text) {
  std::istringstream in(text);
  return parse_config(in);
}

inline RunConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config " + path.string());
  return parse_config(in, path.string());
}

} // namespace ifgsim::io
