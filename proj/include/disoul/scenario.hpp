// SPDX-License-Identifier: Apache-2.0
// disoul: direct localization of a radio source from distributed array snapshots
#pragma once

#include <cctype>
#include <cstdint>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "disoul/channel.hpp"
#include "disoul/common.hpp"
#include "disoul/geometry.hpp"
#include "disoul/localizer.hpp"

namespace disoul {

// Full experiment description. Every default reproduces the reference indoor
// scenario: a 100 x 100 m region with four corner stations, 100-antenna
// circular random arrays of radius 5 lambda at 7 GHz, a 30 MHz Gaussian pulse
// at 3x oversampling, E/N0 = 20 dB, and the Clyde-building channel statistics.
struct ScenarioConfig {
  double region_width = 100.0;   // meters
  double region_height = 100.0;  // meters
  std::vector<Position> stations = {{45.0, 45.0}, {45.0, -45.0}, {-45.0, 45.0}, {-45.0, -45.0}};
  std::size_t antennas = 100;
  double array_radius_wavelengths = 5.0;
  double carrier_hz = 7e9;
  double bandwidth_hz = 30e6;
  double oversampling = 3.0;
  double pulse_truncation = 4.0;  // sigma_t multiples
  double e_n0_db = 20.0;
  ChannelParams channel;  // Clyde defaults live in ChannelParams
  double gamma = 0.99;
  double p_fa = 1e-3;
  double beta = 1e-3;
  double pi_res_m = 5.0;
  double theta_res_rad = 5.71 * kPi / 180.0;
  double calibration_interval_rad = 0.0;
  double zero_threshold = 1e-3;
  int refine_depth_cap = 6;
  double toa_expansion_s = 0.0;  // 0 = 1/B
  std::uint64_t master_seed = 1;
  std::size_t trials = 100;
  std::size_t workers = 0;  // 0 = hardware concurrency
  bool redraw_arrays_per_trial = true;
  int solver_max_iterations = 100000;
  double solver_tolerance = 1e-6;
  PfaModel pfa_model = PfaModel::complement;

  double wavelength() const { return kSpeedOfLight / carrier_hz; }
  double array_radius() const { return array_radius_wavelengths * wavelength(); }
  // E/N0 = E|alpha|^2 / sigma^2 fixes the noise spectral density.
  double sigma2() const { return channel.los_energy / db_to_linear(e_n0_db); }
  Rect region() const {
    return Rect::centered({0.0, 0.0}, region_width, region_height);
  }
  LocalizerConfig localizer() const {
    LocalizerConfig cfg;
    cfg.gamma = gamma;
    cfg.beta = beta;
    cfg.pi_res = pi_res_m;
    cfg.theta_res = theta_res_rad;
    cfg.p_fa = p_fa;
    cfg.toa_expansion = toa_expansion_s;
    cfg.zero_threshold = zero_threshold;
    cfg.max_depth = refine_depth_cap;
    cfg.region = region();
    cfg.pfa_model = pfa_model;
    cfg.solver.max_iterations = solver_max_iterations;
    cfg.solver.tolerance = solver_tolerance;
    return cfg;
  }
};

// Configuration file error carrying the offending line.
struct ConfigError : std::runtime_error {
  ConfigError(int line_number, const std::string& message)
      : std::runtime_error("line " + std::to_string(line_number) + ": " + message),
        line(line_number) {}
  int line;
};

namespace detail {

inline std::string trim(const std::string& s) {
  std::size_t b = 0;
  std::size_t e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return s.substr(b, e - b);
}

inline double parse_double(const std::string& v, int line) {
  try {
    std::size_t used = 0;
    const double x = std::stod(v, &used);
    if (used != v.size()) throw std::invalid_argument("trailing characters");
    return x;
  } catch (const std::exception&) {
    throw ConfigError(line, "expected a number, got '" + v + "'");
  }
}

inline std::uint64_t parse_u64(const std::string& v, int line) {
  try {
    std::size_t used = 0;
    const unsigned long long x = std::stoull(v, &used);
    if (used != v.size()) throw std::invalid_argument("trailing characters");
    return static_cast<std::uint64_t>(x);
  } catch (const std::exception&) {
    throw ConfigError(line, "expected a non-negative integer, got '" + v + "'");
  }
}

inline std::vector<Position> parse_positions(const std::string& v, int line) {
  std::vector<Position> out;
  std::stringstream ss(v);
  std::string pair;
  while (std::getline(ss, pair, ';')) {
    pair = trim(pair);
    if (pair.empty()) continue;
    const auto comma = pair.find(',');
    if (comma == std::string::npos)
      throw ConfigError(line, "expected 'x,y' pairs separated by ';'");
    out.push_back({parse_double(trim(pair.substr(0, comma)), line),
                   parse_double(trim(pair.substr(comma + 1)), line)});
  }
  if (out.empty()) throw ConfigError(line, "expected at least one position");
  return out;
}

inline std::vector<LosCondition> parse_los_states(const std::string& v, int line) {
  std::vector<LosCondition> out;
  std::stringstream ss(v);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (item == "los") {
      out.push_back(LosCondition::los());
    } else if (item == "nlos") {
      out.push_back(LosCondition::nlos());
    } else if (item.rfind("olos:", 0) == 0) {
      out.push_back(LosCondition::olos(parse_double(item.substr(5), line)));
    } else {
      throw ConfigError(line, "expected los, nlos or olos:<dB>, got '" + item + "'");
    }
  }
  return out;
}

}  // namespace detail

// Parses the flat key = value configuration format. Unknown keys and
// malformed values raise ConfigError with the offending line number.
inline void apply_config_line(ScenarioConfig& cfg, const std::string& key,
                              const std::string& value, int line) {
  using detail::parse_double;
  using detail::parse_u64;
  if (key == "region_width") cfg.region_width = parse_double(value, line);
  else if (key == "region_height") cfg.region_height = parse_double(value, line);
  else if (key == "stations") cfg.stations = detail::parse_positions(value, line);
  else if (key == "los_states") cfg.channel.los_states = detail::parse_los_states(value, line);
  else if (key == "antennas") cfg.antennas = static_cast<std::size_t>(parse_u64(value, line));
  else if (key == "array_radius_wavelengths") cfg.array_radius_wavelengths = parse_double(value, line);
  else if (key == "carrier_hz") cfg.carrier_hz = parse_double(value, line);
  else if (key == "bandwidth_hz") cfg.bandwidth_hz = parse_double(value, line);
  else if (key == "oversampling") cfg.oversampling = parse_double(value, line);
  else if (key == "pulse_truncation") cfg.pulse_truncation = parse_double(value, line);
  else if (key == "e_n0_db") cfg.e_n0_db = parse_double(value, line);
  else if (key == "cluster_decay_ns") cfg.channel.cluster_decay = parse_double(value, line) * 1e-9;
  else if (key == "ray_decay_ns") cfg.channel.ray_decay = parse_double(value, line) * 1e-9;
  else if (key == "cluster_interarrival_ns") cfg.channel.cluster_rate = 1.0 / (parse_double(value, line) * 1e-9);
  else if (key == "ray_interarrival_ns") cfg.channel.ray_rate = 1.0 / (parse_double(value, line) * 1e-9);
  else if (key == "angular_spread_deg") cfg.channel.angular_spread = parse_double(value, line) * kPi / 180.0;
  else if (key == "los_energy") cfg.channel.los_energy = parse_double(value, line);
  else if (key == "gamma") cfg.gamma = parse_double(value, line);
  else if (key == "p_fa") cfg.p_fa = parse_double(value, line);
  else if (key == "beta") cfg.beta = parse_double(value, line);
  else if (key == "pi_res_m") cfg.pi_res_m = parse_double(value, line);
  else if (key == "theta_res_deg") cfg.theta_res_rad = parse_double(value, line) * kPi / 180.0;
  else if (key == "calibration_interval_deg") cfg.calibration_interval_rad = parse_double(value, line) * kPi / 180.0;
  else if (key == "zero_threshold") cfg.zero_threshold = parse_double(value, line);
  else if (key == "refine_depth_cap") cfg.refine_depth_cap = static_cast<int>(parse_u64(value, line));
  else if (key == "toa_expansion_s") cfg.toa_expansion_s = parse_double(value, line);
  else if (key == "master_seed") cfg.master_seed = parse_u64(value, line);
  else if (key == "trials") cfg.trials = static_cast<std::size_t>(parse_u64(value, line));
  else if (key == "workers") cfg.workers = static_cast<std::size_t>(parse_u64(value, line));
  else if (key == "redraw_arrays_per_trial") cfg.redraw_arrays_per_trial = parse_u64(value, line) != 0;
  else if (key == "solver_max_iterations") cfg.solver_max_iterations = static_cast<int>(parse_u64(value, line));
  else if (key == "solver_tolerance") cfg.solver_tolerance = parse_double(value, line);
  else if (key == "pfa_model") {
    if (value == "complement") cfg.pfa_model = PfaModel::complement;
    else if (value == "printed") cfg.pfa_model = PfaModel::printed;
    else throw ConfigError(line, "pfa_model must be 'complement' or 'printed'");
  } else {
    throw ConfigError(line, "unknown key '" + key + "'");
  }
}

inline ScenarioConfig parse_config(std::istream& in) {
  ScenarioConfig cfg;
  std::string raw;
  int line = 0;
  while (std::getline(in, raw)) {
    ++line;
    const auto hash = raw.find('#');
    if (hash != std::string::npos) raw.erase(hash);
    const std::string text = detail::trim(raw);
    if (text.empty()) continue;
    const auto eq = text.find('=');
    if (eq == std::string::npos)
      throw ConfigError(line, "expected 'key = value'");
    const std::string key = detail::trim(text.substr(0, eq));
    const std::string value = detail::trim(text.substr(eq + 1));
    if (key.empty()) throw ConfigError(line, "empty key");
    apply_config_line(cfg, key, value, line);
  }
  return cfg;
}

inline ScenarioConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config file '" + path + "'");
  return parse_config(in);
}

}  // namespace disoul
