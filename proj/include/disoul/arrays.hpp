// SPDX-License-Identifier: Apache-2.0
// disoul: direct localization of a radio source from distributed array snapshots
#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <vector>

#include "disoul/common.hpp"
#include "disoul/geometry.hpp"
#include "disoul/random.hpp"

namespace disoul {

// Planar antenna array. Offsets are relative to the array center of gravity,
// which is also the phase reference of the steering model.
struct ArrayGeometry {
  std::vector<Position> offsets;
  double wavelength = 0.0;  // meters

  std::size_t size() const { return offsets.size(); }
};

// Per-antenna phase offsets, radians.
struct CalibrationError {
  std::vector<double> phase;
};

// Antennas placed uniformly at random inside a disk, then shifted so the
// centroid sits exactly at the origin.
inline ArrayGeometry circular_random_array(std::size_t antennas, double radius,
                                           double wavelength, std::uint64_t seed) {
  if (antennas < 1) throw std::invalid_argument("circular_random_array: need >= 1 antenna");
  if (!(radius > 0.0)) throw std::invalid_argument("circular_random_array: radius must be > 0");
  if (!(wavelength > 0.0)) throw std::invalid_argument("circular_random_array: wavelength must be > 0");
  Rng rng(seed);
  ArrayGeometry geom;
  geom.wavelength = wavelength;
  geom.offsets.resize(antennas);
  double cx = 0.0, cy = 0.0;
  for (Position& o : geom.offsets) {
    const double r = radius * std::sqrt(rng.uniform());
    const double phi = rng.uniform(0.0, kTwoPi);
    o = {r * std::cos(phi), r * std::sin(phi)};
    cx += o.x;
    cy += o.y;
  }
  cx /= static_cast<double>(antennas);
  cy /= static_cast<double>(antennas);
  for (Position& o : geom.offsets) o = {o.x - cx, o.y - cy};
  return geom;
}

// Far-field plane-wave response for a ray impinging from bearing theta.
// Every element has unit modulus, so the squared norm equals the antenna count.
inline Eigen::VectorXcd steering_vector(const ArrayGeometry& geom, double theta) {
  const double k = kTwoPi / geom.wavelength;
  const double cos_t = std::cos(theta);
  const double sin_t = std::sin(theta);
  Eigen::VectorXcd a(static_cast<Eigen::Index>(geom.size()));
  for (Eigen::Index s = 0; s < a.size(); ++s) {
    const Position& o = geom.offsets[static_cast<std::size_t>(s)];
    const double phase = k * (o.x * cos_t + o.y * sin_t);
    a[s] = cplx{std::cos(phase), std::sin(phase)};
  }
  return a;
}

inline CalibrationError draw_calibration_error(std::size_t antennas,
                                               double interval_rad,
                                               std::uint64_t seed) {
  Rng rng(seed);
  CalibrationError err;
  err.phase.resize(antennas);
  for (double& p : err.phase) p = rng.uniform(-interval_rad / 2.0, interval_rad / 2.0);
  return err;
}

// Element-wise phase rotation; magnitudes are untouched.
inline Eigen::VectorXcd apply_calibration_error(const Eigen::VectorXcd& response,
                                                const CalibrationError& err) {
  if (static_cast<std::size_t>(response.size()) != err.phase.size())
    throw std::invalid_argument("apply_calibration_error: length mismatch");
  Eigen::VectorXcd out(response.size());
  for (Eigen::Index s = 0; s < response.size(); ++s) {
    const double p = err.phase[static_cast<std::size_t>(s)];
    out[s] = response[s] * cplx{std::cos(p), std::sin(p)};
  }
  return out;
}

// 2*D^2/lambda with D the largest pairwise antenna separation. A single
// antenna has no aperture and reports 0.
inline double fraunhofer_distance(const ArrayGeometry& geom) {
  double d_max = 0.0;
  for (std::size_t i = 0; i + 1 < geom.size(); ++i)
    for (std::size_t j = i + 1; j < geom.size(); ++j)
      d_max = std::max(d_max, distance(geom.offsets[i], geom.offsets[j]));
  return 2.0 * d_max * d_max / geom.wavelength;
}

}  // namespace disoul
