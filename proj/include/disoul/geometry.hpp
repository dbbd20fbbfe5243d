// SPDX-License-Identifier: Apache-2.0
// disoul: direct localization of a radio source from distributed array snapshots
#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <span>
#include <stdexcept>
#include <vector>

#include "disoul/common.hpp"

namespace disoul {

struct Position {
  double x = 0.0;
  double y = 0.0;
};

inline Position operator+(Position a, Position b) { return {a.x + b.x, a.y + b.y}; }
inline Position operator-(Position a, Position b) { return {a.x - b.x, a.y - b.y}; }
inline Position operator*(double s, Position p) { return {s * p.x, s * p.y}; }

inline double norm(Position p) { return std::hypot(p.x, p.y); }
inline double distance(Position a, Position b) { return norm(a - b); }

// Axis-aligned rectangle, possibly degenerate (lo == hi is a single point).
struct Rect {
  Position lo;
  Position hi;

  Position center() const { return {0.5 * (lo.x + hi.x), 0.5 * (lo.y + hi.y)}; }
  double width() const { return hi.x - lo.x; }
  double height() const { return hi.y - lo.y; }

  static Rect centered(Position c, double width, double height) {
    return {{c.x - width / 2.0, c.y - height / 2.0},
            {c.x + width / 2.0, c.y + height / 2.0}};
  }

  bool contains(Position p) const {
    return p.x >= lo.x && p.x <= hi.x && p.y >= lo.y && p.y <= hi.y;
  }
};

struct LocationGrid {
  std::vector<Position> points;
  double resolution = 0.0;  // meters
};

struct AngleGrid {
  std::vector<double> angles;  // sorted, in [0, 2*pi)
  double resolution = 0.0;     // radians
};

// Per-station TOA upper bounds plus the step used to expand an empty
// feasible region.
struct ToaEstimates {
  std::vector<double> tau_upper;  // seconds
  double expansion_step = 0.0;    // seconds, > 0
};

inline constexpr double kPositionMergeTol = 1e-9;   // meters
inline constexpr double kAngleMergeTol = 1e-12;     // radians

// Propagation delay of the direct path from p to a station center.
inline double toa_of(Position p, Position station_center) {
  return distance(p, station_center) / kSpeedOfLight;
}

// Bearing of p seen from a station center, anticlockwise from the x-axis.
// Result lies in [-pi/2, 3*pi/2).
inline double aoa_of(Position p, Position station_center) {
  const double dx = p.x - station_center.x;
  const double dy = p.y - station_center.y;
  if (dx == 0.0 && dy == 0.0)
    throw std::invalid_argument("aoa_of: undefined bearing for coincident points");
  double theta = std::atan2(dy, dx);  // (-pi, pi]
  if (theta < -kPi / 2.0) theta += kTwoPi;
  return theta;
}

namespace detail {

inline void sort_and_merge(std::vector<Position>& pts) {
  std::sort(pts.begin(), pts.end(), [](Position a, Position b) {
    if (a.x != b.x) return a.x < b.x;
    return a.y < b.y;
  });
  std::vector<Position> out;
  out.reserve(pts.size());
  for (const Position p : pts) {
    if (!out.empty() && std::fabs(out.back().x - p.x) <= kPositionMergeTol &&
        std::fabs(out.back().y - p.y) <= kPositionMergeTol)
      continue;
    out.push_back(p);
  }
  pts = std::move(out);
}

inline void sort_and_merge_angles(std::vector<double>& angles) {
  std::sort(angles.begin(), angles.end());
  std::vector<double> out;
  out.reserve(angles.size());
  for (const double a : angles) {
    if (!out.empty() && a - out.back() <= kAngleMergeTol) continue;
    out.push_back(a);
  }
  // merge across the 0 / 2*pi seam
  if (out.size() > 1 && kTwoPi - out.back() + out.front() <= kAngleMergeTol)
    out.pop_back();
  angles = std::move(out);
}

}  // namespace detail

// Uniform lattice covering the region, anchored so the region center is a
// lattice point.
inline LocationGrid make_location_grid(const Rect& region, double resolution) {
  if (!(resolution > 0.0))
    throw std::invalid_argument("make_location_grid: resolution must be > 0");
  const Position c = region.center();
  const double half_w = region.width() / 2.0;
  const double half_h = region.height() / 2.0;
  const long nx = static_cast<long>(std::floor(half_w / resolution + 1e-9));
  const long ny = static_cast<long>(std::floor(half_h / resolution + 1e-9));
  LocationGrid grid;
  grid.resolution = resolution;
  grid.points.reserve(static_cast<std::size_t>((2 * nx + 1) * (2 * ny + 1)));
  for (long j = -ny; j <= ny; ++j)
    for (long i = -nx; i <= nx; ++i)
      grid.points.push_back({c.x + static_cast<double>(i) * resolution,
                             c.y + static_cast<double>(j) * resolution});
  return grid;
}

// {0, d, 2d, ...} with d = resolution; floor(2*pi/d) angles in [0, 2*pi).
inline AngleGrid make_angle_grid(double resolution) {
  if (!(resolution > 0.0) || !(resolution < kTwoPi))
    throw std::invalid_argument("make_angle_grid: resolution must be in (0, 2*pi)");
  const long count = static_cast<long>(std::floor(kTwoPi / resolution + 1e-9));
  AngleGrid grid;
  grid.resolution = resolution;
  grid.angles.reserve(static_cast<std::size_t>(count));
  for (long k = 0; k < count; ++k)
    grid.angles.push_back(static_cast<double>(k) * resolution);
  return grid;
}

// Keeps the grid points inside every station's TOA disk. No expansion: an
// empty result stays empty.
inline LocationGrid filter_by_toa(const LocationGrid& grid,
                                  std::span<const double> tau_upper,
                                  std::span<const Position> station_centers) {
  if (tau_upper.size() != station_centers.size())
    throw std::invalid_argument("filter_by_toa: one TOA bound per station required");
  LocationGrid out;
  out.resolution = grid.resolution;
  for (const Position p : grid.points) {
    bool keep = true;
    for (std::size_t l = 0; l < station_centers.size(); ++l) {
      if (distance(p, station_centers[l]) > kSpeedOfLight * tau_upper[l]) {
        keep = false;
        break;
      }
    }
    if (keep) out.points.push_back(p);
  }
  return out;
}

// TOA-feasible trimming. If the feasible set misses the whole grid, all TOA
// bounds are grown by one expansion step per round until a point survives.
inline LocationGrid trim_by_toa(const LocationGrid& grid, const ToaEstimates& toas,
                                std::span<const Position> station_centers) {
  if (toas.tau_upper.size() != station_centers.size())
    throw std::invalid_argument("trim_by_toa: one TOA bound per station required");
  if (grid.points.empty()) return grid;
  std::vector<double> tau(toas.tau_upper.begin(), toas.tau_upper.end());
  while (true) {
    LocationGrid out = filter_by_toa(grid, tau, station_centers);
    if (!out.points.empty()) return out;
    for (double& t : tau) t += toas.expansion_step;
  }
}

// 5x5 neighbourhoods (24 neighbours plus the point itself) around every
// estimated location, merged.
inline std::vector<Position> refine_location_grid(std::span<const Position> estimated,
                                                  double delta) {
  if (!(delta > 0.0))
    throw std::invalid_argument("refine_location_grid: delta must be > 0");
  std::vector<Position> out;
  out.reserve(estimated.size() * 25);
  for (const Position p : estimated)
    for (int j = -2; j <= 2; ++j)
      for (int i = -2; i <= 2; ++i)
        out.push_back({p.x + i * delta, p.y + j * delta});
  detail::sort_and_merge(out);
  return out;
}

// Five-point neighbourhoods around every estimated angle, plus the direct
// bearings of the estimated locations rounded to the delta lattice; all
// wrapped into [0, 2*pi).
inline std::vector<double> refine_angle_grid(std::span<const double> estimated_angles,
                                             double delta,
                                             std::span<const Position> estimated_locations,
                                             Position station_center) {
  if (!(delta > 0.0))
    throw std::invalid_argument("refine_angle_grid: delta must be > 0");
  std::vector<double> out;
  out.reserve(estimated_angles.size() * 5 + estimated_locations.size());
  for (const double a : estimated_angles)
    for (int i = -2; i <= 2; ++i) out.push_back(wrap_two_pi(a + i * delta));
  for (const Position p : estimated_locations)
    out.push_back(wrap_two_pi(round_to_multiple(aoa_of(p, station_center), delta)));
  detail::sort_and_merge_angles(out);
  return out;
}

}  // namespace disoul
