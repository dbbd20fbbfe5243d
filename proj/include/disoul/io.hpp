// SPDX-License-Identifier: Apache-2.0
// disoul: direct localization of a radio source from distributed array snapshots
#pragma once

#include <cstdint>
#include <cstdio>
#include <istream>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>

#include "disoul/arrays.hpp"
#include "disoul/channel.hpp"
#include "disoul/sparse_solver.hpp"
#include "disoul/waveform.hpp"

namespace disoul {

// Plain-text antenna table: a wavelength header, then one "index x y" row per
// antenna.
inline void save_array_geometry(std::ostream& out, const ArrayGeometry& geom) {
  char buffer[128];
  std::snprintf(buffer, sizeof buffer, "# disoul array geometry\n# wavelength %.17g\n",
                geom.wavelength);
  out << buffer;
  for (std::size_t s = 0; s < geom.size(); ++s) {
    std::snprintf(buffer, sizeof buffer, "%zu %.17g %.17g\n", s, geom.offsets[s].x,
                  geom.offsets[s].y);
    out << buffer;
  }
}

inline ArrayGeometry load_array_geometry(std::istream& in) {
  ArrayGeometry geom;
  std::string line;
  while (std::getline(in, line)) {
    if (line.rfind("# wavelength", 0) == 0) {
      geom.wavelength = std::stod(line.substr(12));
      continue;
    }
    if (line.empty() || line[0] == '#') continue;
    std::istringstream row(line);
    std::size_t index = 0;
    Position p;
    if (!(row >> index >> p.x >> p.y))
      throw std::runtime_error("load_array_geometry: malformed row '" + line + "'");
    geom.offsets.push_back(p);
  }
  if (!(geom.wavelength > 0.0))
    throw std::runtime_error("load_array_geometry: missing wavelength header");
  return geom;
}

// Replayable channel table: one "station kind re im aoa toa" row per path.
inline void save_channel(std::ostream& out, const ChannelRealization& channel) {
  out << "# station kind re_gain im_gain aoa_rad toa_s\n";
  char buffer[192];
  for (std::size_t l = 0; l < channel.stations.size(); ++l) {
    for (const PathComponent& p : channel.stations[l].paths) {
      std::snprintf(buffer, sizeof buffer, "%zu %s %.17g %.17g %.17g %.17g\n", l,
                    p.kind == PathKind::los ? "los" : "nlos", p.gain.real(),
                    p.gain.imag(), p.aoa, p.toa);
      out << buffer;
    }
  }
}

inline ChannelRealization load_channel(std::istream& in, std::size_t stations) {
  ChannelRealization channel;
  channel.stations.resize(stations);
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    std::istringstream row(line);
    std::size_t l = 0;
    std::string kind;
    double re = 0.0, im = 0.0;
    PathComponent p;
    if (!(row >> l >> kind >> re >> im >> p.aoa >> p.toa) || l >= stations)
      throw std::runtime_error("load_channel: malformed row '" + line + "'");
    p.gain = {re, im};
    p.kind = kind == "los" ? PathKind::los : PathKind::nlos;
    channel.stations[l].paths.push_back(p);
  }
  return channel;
}

// Debug waveform dump: one text header line, then antenna-major interleaved
// re/im little-endian float64 samples.
inline void dump_waveform(std::ostream& out, const ReceivedWaveform& w) {
  char header[160];
  std::snprintf(header, sizeof header,
                "disoul-waveform rate=%.17g antennas=%zu samples=%zu sigma2=%.17g\n",
                1.0 / w.dt, w.antennas(), w.length(), w.sigma2);
  out << header;
  for (std::size_t s = 0; s < w.antennas(); ++s) {
    for (std::size_t n = 0; n < w.length(); ++n) {
      const cplx v = w.samples(static_cast<Eigen::Index>(s), static_cast<Eigen::Index>(n));
      const double re = v.real();
      const double im = v.imag();
      out.write(reinterpret_cast<const char*>(&re), sizeof re);
      out.write(reinterpret_cast<const char*>(&im), sizeof im);
    }
  }
}

// Text container with the snapshots and dictionary columns of one recovery
// problem, for cross-checking against external solvers.
inline void dump_sparse_problem(std::ostream& out, const SparseProblem& problem) {
  char buffer[192];
  out << "disoul-problem v1\n";
  std::snprintf(buffer, sizeof buffer, "stations %zu\nweight %.17g\nepsilon %.17g\n",
                problem.station_count(), problem.weight, problem.epsilon);
  out << buffer;
  std::snprintf(buffer, sizeof buffer, "locations %lld\n",
                static_cast<long long>(problem.location_count()));
  out << buffer;
  for (const Position& p : problem.locations.points) {
    std::snprintf(buffer, sizeof buffer, "%.17g %.17g\n", p.x, p.y);
    out << buffer;
  }
  for (std::size_t l = 0; l < problem.station_count(); ++l) {
    const auto& dict = problem.dictionaries[l];
    std::snprintf(buffer, sizeof buffer, "station %zu antennas %lld angles %lld\n", l,
                  static_cast<long long>(dict.rows()),
                  static_cast<long long>(problem.angle_count(l)));
    out << buffer;
    for (Eigen::Index s = 0; s < dict.rows(); ++s) {
      const cplx z = problem.snapshots[l][s];
      std::snprintf(buffer, sizeof buffer, "%.17g %.17g\n", z.real(), z.imag());
      out << buffer;
    }
    for (Eigen::Index s = 0; s < dict.rows(); ++s) {
      std::string row;
      row.reserve(static_cast<std::size_t>(dict.cols()) * 48);
      for (Eigen::Index c = 0; c < dict.cols(); ++c) {
        std::snprintf(buffer, sizeof buffer, c + 1 == dict.cols() ? "%.17g %.17g" : "%.17g %.17g ",
                      dict(s, c).real(), dict(s, c).imag());
        row += buffer;
      }
      out << row << '\n';
    }
  }
}

}  // namespace disoul
