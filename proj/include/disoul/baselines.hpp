// SPDX-License-Identifier: Apache-2.0
// disoul: direct localization of a radio source from distributed array snapshots
#pragma once

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>
#include <cmath>
#include <span>
#include <stdexcept>
#include <vector>

#include "disoul/arrays.hpp"
#include "disoul/common.hpp"
#include "disoul/geometry.hpp"

namespace disoul {

// Per-station bearing estimates; ranges are optional and switch the
// Stansfield solve between hybrid (1/r^2 weights) and pure-bearing form.
struct BearingSet {
  std::vector<double> bearings;  // radians, in [0, 2*pi)
  std::vector<double> ranges;    // meters; empty => unit weights
};

namespace detail {

// Vertex of the parabola through three (possibly unevenly spaced) points,
// clamped to the outer abscissae. Falls back to x0 when the fit degenerates.
inline double parabola_vertex(double xm, double ym, double x0, double y0,
                              double xp, double yp) {
  const double dm = x0 - xm;
  const double dp = x0 - xp;
  const double denom = dm * (y0 - yp) - dp * (y0 - ym);
  if (denom == 0.0) return x0;
  const double vertex = x0 - 0.5 * (dm * dm * (y0 - yp) - dp * dp * (y0 - ym)) / denom;
  if (!(vertex >= std::min(xm, xp) && vertex <= std::max(xm, xp))) return x0;
  return vertex;
}

}  // namespace detail

// Bearing of the strongest beamformed peak over the angle grid, refined by a
// parabolic fit across the circular lattice. Ties resolve to the lowest index.
inline double beamforming_aoa(const Eigen::VectorXcd& snapshot,
                              const ArrayGeometry& geom, const AngleGrid& grid) {
  const std::size_t m_count = grid.angles.size();
  if (m_count == 0) throw std::invalid_argument("beamforming_aoa: empty angle grid");
  std::vector<double> power(m_count);
  std::size_t best = 0;
  for (std::size_t m = 0; m < m_count; ++m) {
    const Eigen::VectorXcd a = steering_vector(geom, grid.angles[m]);
    power[m] = std::norm(a.dot(snapshot)) / a.squaredNorm();
    if (power[m] > power[best]) best = m;
  }
  if (m_count < 3) return grid.angles[best];
  const std::size_t prev = (best + m_count - 1) % m_count;
  const std::size_t next = (best + 1) % m_count;
  // unwrap neighbours around the peak
  double xm = grid.angles[prev];
  double xp = grid.angles[next];
  const double x0 = grid.angles[best];
  if (xm > x0) xm -= kTwoPi;
  if (xp < x0) xp += kTwoPi;
  return wrap_two_pi(
      detail::parabola_vertex(xm, power[prev], x0, power[best], xp, power[next]));
}

// Weighted least-squares intersection of the bearing lines
// sin(theta_l) (x - x_l) - cos(theta_l) (y - y_l) = 0, with weights 1/r_l^2
// when ranges are available. Throws when the lines are parallel.
inline Position stansfield(const BearingSet& bearings,
                           std::span<const Position> stations) {
  const std::size_t n = bearings.bearings.size();
  if (n != stations.size())
    throw std::invalid_argument("stansfield: one bearing per station required");
  if (n < 2) throw std::invalid_argument("stansfield: at least two stations required");
  const bool hybrid = !bearings.ranges.empty();
  if (hybrid && bearings.ranges.size() != n)
    throw std::invalid_argument("stansfield: one range per station required");
  Eigen::Matrix2d normal = Eigen::Matrix2d::Zero();
  Eigen::Vector2d rhs = Eigen::Vector2d::Zero();
  for (std::size_t l = 0; l < n; ++l) {
    const double s = std::sin(bearings.bearings[l]);
    const double c = std::cos(bearings.bearings[l]);
    double weight = 1.0;
    if (hybrid) {
      const double r = bearings.ranges[l];
      if (!(r > 0.0)) throw std::invalid_argument("stansfield: ranges must be positive");
      weight = 1.0 / (r * r);
    }
    const Eigen::Vector2d a{s, -c};
    const double b = s * stations[l].x - c * stations[l].y;
    normal += weight * a * a.transpose();
    rhs += weight * b * a;
  }
  const double det = normal.determinant();
  if (!(std::fabs(det) > 1e-12 * normal.trace() * normal.trace()))
    throw std::runtime_error("stansfield: bearing lines are parallel");
  const Eigen::Vector2d p = normal.ldlt().solve(rhs);
  return {p.x(), p.y()};
}

// Squared-range least squares: minimizes sum_l (||p - p_l||^2 - d_l^2)^2
// exactly through the generalized trust-region reformulation with a single
// root search on the secular equation.
inline Position srls(std::span<const double> toas, std::span<const Position> stations) {
  const std::size_t n = stations.size();
  if (toas.size() != n) throw std::invalid_argument("srls: one TOA per station required");
  if (n < 3) throw std::invalid_argument("srls: at least three stations required");
  Eigen::MatrixXd a(n, 3);
  Eigen::VectorXd b(n);
  for (std::size_t l = 0; l < n; ++l) {
    const double d = kSpeedOfLight * toas[l];
    a(static_cast<Eigen::Index>(l), 0) = -2.0 * stations[l].x;
    a(static_cast<Eigen::Index>(l), 1) = -2.0 * stations[l].y;
    a(static_cast<Eigen::Index>(l), 2) = 1.0;
    b[static_cast<Eigen::Index>(l)] =
        d * d - stations[l].x * stations[l].x - stations[l].y * stations[l].y;
  }
  const Eigen::Matrix3d ata = a.transpose() * a;
  const Eigen::Vector3d atb = a.transpose() * b;
  if (std::fabs(ata.determinant()) < 1e-9 * std::pow(ata.norm(), 3))
    throw std::runtime_error("srls: degenerate station geometry");
  Eigen::Matrix3d d_mat = Eigen::Matrix3d::Zero();
  d_mat(0, 0) = d_mat(1, 1) = 1.0;
  const Eigen::Vector3d f{0.0, 0.0, -0.5};

  const auto solve_for = [&](double lambda) -> Eigen::Vector3d {
    return (ata + lambda * d_mat).ldlt().solve(atb - lambda * f);
  };
  const auto phi = [&](double lambda) {
    const Eigen::Vector3d y = solve_for(lambda);
    return y.dot(d_mat * y) + 2.0 * f.dot(y);
  };

  // phi decreases on (lambda_lo, inf) where lambda_lo = -1/mu_max and mu_max
  // is the largest eigenvalue of the (D, A^T A) pencil.
  Eigen::GeneralizedSelfAdjointEigenSolver<Eigen::Matrix3d> pencil(d_mat, ata);
  const double mu_max = pencil.eigenvalues().maxCoeff();
  if (!(mu_max > 0.0)) throw std::runtime_error("srls: degenerate station geometry");
  const double lambda_lo = -1.0 / mu_max;

  double lo = lambda_lo + std::max(1e-12, std::fabs(lambda_lo)) * 1e-9;
  for (int i = 0; i < 80 && !(phi(lo) > 0.0); ++i)
    lo = lambda_lo + (lo - lambda_lo) * 0.5;
  double hi = std::max(1.0, std::fabs(lambda_lo));
  int expand = 0;
  while (phi(hi) > 0.0) {
    hi *= 4.0;
    if (++expand > 100) throw std::runtime_error("srls: secular equation has no root");
  }
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (phi(mid) > 0.0)
      lo = mid;
    else
      hi = mid;
    if (hi - lo <= 1e-14 * std::max(1.0, std::fabs(hi))) break;
  }
  const Eigen::Vector3d y = solve_for(0.5 * (lo + hi));
  return {y[0], y[1]};
}

}  // namespace disoul
