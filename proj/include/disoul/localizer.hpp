// SPDX-License-Identifier: Apache-2.0
// disoul: direct localization of a radio source from distributed array snapshots
#pragma once

#include <algorithm>
#include <cmath>
#include <optional>
#include <stdexcept>
#include <vector>

#include "disoul/common.hpp"
#include "disoul/geometry.hpp"
#include "disoul/sparse_solver.hpp"
#include "disoul/timing.hpp"
#include "disoul/waveform.hpp"

namespace disoul {

struct LocalizerConfig {
  double gamma = 0.99;          // feasibility coverage for epsilon
  double beta = 1e-3;           // refinement stop tolerance
  double pi_res = 5.0;          // initial location resolution, meters
  double theta_res = 5.71 * kPi / 180.0;  // initial angle resolution, radians
  double p_fa = 1e-3;           // early false-alarm target
  double toa_expansion = 0.0;   // seconds; 0 selects 1/B automatically
  double zero_threshold = 1e-3;
  int max_depth = 6;
  Rect region = Rect::centered({0.0, 0.0}, 100.0, 100.0);
  PfaModel pfa_model = PfaModel::complement;
  SolverOptions solver;
};

enum class LocalizationMethod { solver, fallback };

enum class StopReason {
  converged,       // relative objective change below beta
  monotone_guard,  // a step failed to improve; previous step kept
  depth_cap,       // refinement depth limit reached
  empty_support,   // solver returned an all-zero location block
  single_solve,    // beta = inf requests exactly one solve
  not_run
};

struct RefinementResult {
  SparseSolution solution;
  SupportSet support;
  LocationGrid locations;
  std::vector<AngleGrid> angle_grids;
  std::vector<double> objectives;  // accepted f^(k), non-increasing
  StopReason stop = StopReason::not_run;
  bool all_certified = true;
  int steps = 0;
};

struct LocalizationOutcome {
  Position estimate;
  LocalizationMethod method = LocalizationMethod::fallback;
  bool trivial_branch = false;     // snapshot energy fell under epsilon
  std::size_t l_hat = 0;           // weight index actually used
  int refinement_steps = 0;
  std::vector<double> objectives;  // f^(k) of the returned refinement run
  SupportSet support;
  StopReason stop = StopReason::not_run;
  bool solver_certified = true;
  std::vector<std::size_t> stations_used;  // indices into the caller's station list
};

// Grid refinement (adaptive re-solving around the current support). The grids
// halve in resolution around the extracted support each step; location grids
// are re-trimmed by the TOA disks, falling back to the untrimmed grid when
// trimming would empty it. Steps that fail to lower the objective are
// discarded, which keeps the recorded f^(k) non-increasing.
inline RefinementResult refine(const std::vector<Eigen::VectorXcd>& snapshots,
                               std::span<const Position> stations,
                               std::span<const ArrayGeometry> geometries,
                               const LocalizerConfig& cfg, double weight,
                               double epsilon, const ToaEstimates& toas,
                               LocationGrid initial_locations,
                               std::vector<AngleGrid> initial_angle_grids) {
  RefinementResult result;
  result.locations = std::move(initial_locations);
  result.angle_grids = std::move(initial_angle_grids);

  SparseProblem problem =
      build_sparse_problem(snapshots, stations, geometries, result.locations,
                           result.angle_grids, weight, epsilon);
  result.solution = solve(problem, cfg.solver);
  result.all_certified = result.solution.certified;
  result.objectives.push_back(result.solution.objective);
  result.support = extract_support(problem, result.solution, cfg.zero_threshold);
  result.steps = 1;

  if (result.support.locations.empty()) {
    result.stop = StopReason::empty_support;
    return result;
  }
  if (std::isinf(cfg.beta)) {
    result.stop = StopReason::single_solve;
    return result;
  }

  for (int k = 1; k <= cfg.max_depth; ++k) {
    const double delta_loc = cfg.pi_res / std::pow(2.0, k);
    const double delta_ang = cfg.theta_res / std::pow(2.0, k);
    LocationGrid next_locations;
    next_locations.resolution = delta_loc;
    next_locations.points = refine_location_grid(result.support.locations, delta_loc);
    LocationGrid trimmed = filter_by_toa(next_locations, toas.tau_upper, stations);
    if (!trimmed.points.empty()) next_locations = std::move(trimmed);
    std::vector<AngleGrid> next_angles(snapshots.size());
    for (std::size_t l = 0; l < snapshots.size(); ++l) {
      next_angles[l].resolution = delta_ang;
      next_angles[l].angles =
          refine_angle_grid(result.support.angles[l], delta_ang,
                            result.support.locations, stations[l]);
    }

    SparseProblem next_problem =
        build_sparse_problem(snapshots, stations, geometries, next_locations,
                             next_angles, weight, epsilon);
    SparseSolution next_solution = solve(next_problem, cfg.solver);
    ++result.steps;
    const double f_prev = result.objectives.back();
    const double f_k = next_solution.objective;

    if (f_k > f_prev) {
      result.stop = StopReason::monotone_guard;
      return result;
    }
    result.all_certified = result.all_certified && next_solution.certified;
    result.objectives.push_back(f_k);
    result.support = extract_support(next_problem, next_solution, cfg.zero_threshold);
    result.solution = std::move(next_solution);
    result.locations = std::move(next_locations);
    result.angle_grids = std::move(next_angles);

    if (result.support.locations.empty()) {
      result.stop = StopReason::empty_support;
      return result;
    }
    const double rel = f_prev > 0.0 ? std::fabs(f_prev - f_k) / f_prev : 0.0;
    if (rel < cfg.beta) {
      result.stop = StopReason::converged;
      return result;
    }
  }
  result.stop = StopReason::depth_cap;
  return result;
}

namespace detail {

inline Position largest_row_position(const SparseProblem& problem,
                                     const SparseSolution& solution) {
  Eigen::Index best = 0;
  double best_norm = -1.0;
  for (Eigen::Index q = 0; q < solution.location_gains.rows(); ++q) {
    const double n = solution.location_gains.row(q).norm();
    if (n > best_norm) {
      best_norm = n;
      best = q;
    }
  }
  return problem.locations.points[static_cast<std::size_t>(best)];
}

}  // namespace detail

// NLOS-robust direct localization: epsilon from the coverage target, the
// low-energy branch falling back to the correlator scan, and otherwise a
// descending weight schedule w = sqrt(Lhat - 0.5) with grid refinement as the
// inner solver. An all-zero location block decrements Lhat; exhausting the
// schedule falls back to the correlator scan as well.
inline LocalizationOutcome locate(const std::vector<Eigen::VectorXcd>& snapshots,
                                  std::span<const Position> stations,
                                  std::span<const ArrayGeometry> geometries,
                                  const LocalizerConfig& cfg,
                                  const ToaEstimates& toas, double sigma2) {
  const std::size_t n_stations = snapshots.size();
  if (stations.size() != n_stations || geometries.size() != n_stations)
    throw std::invalid_argument("locate: per-station inputs disagree");
  if (toas.tau_upper.size() != n_stations)
    throw std::invalid_argument("locate: one TOA bound per station required");

  std::size_t total_antennas = 0;
  for (const auto& z : snapshots) total_antennas += static_cast<std::size_t>(z.size());
  const double epsilon = epsilon_for(cfg.gamma, sigma2, total_antennas);

  LocationGrid initial = trim_by_toa(make_location_grid(cfg.region, cfg.pi_res),
                                     toas, stations);
  std::vector<AngleGrid> initial_angles(n_stations, make_angle_grid(cfg.theta_res));

  LocalizationOutcome outcome;
  outcome.stations_used.resize(n_stations);
  for (std::size_t l = 0; l < n_stations; ++l) outcome.stations_used[l] = l;

  if (trivial_energy_check(snapshots, epsilon)) {
    outcome.estimate = correlator_fallback(snapshots, initial, stations, geometries);
    outcome.method = LocalizationMethod::fallback;
    outcome.trivial_branch = true;
    outcome.l_hat = n_stations;
    return outcome;
  }

  for (std::size_t l_hat = n_stations; l_hat >= 2; --l_hat) {
    const double weight = std::sqrt(static_cast<double>(l_hat) - 0.5);
    RefinementResult run = refine(snapshots, stations, geometries, cfg, weight,
                                  epsilon, toas, initial, initial_angles);
    if (!run.support.locations.empty()) {
      SparseProblem final_problem =
          build_sparse_problem(snapshots, stations, geometries, run.locations,
                               run.angle_grids, weight, epsilon);
      outcome.estimate = detail::largest_row_position(final_problem, run.solution);
      outcome.method = LocalizationMethod::solver;
      outcome.l_hat = l_hat;
      outcome.refinement_steps = run.steps;
      outcome.objectives = run.objectives;
      outcome.support = std::move(run.support);
      outcome.stop = run.stop;
      outcome.solver_certified = run.all_certified;
      return outcome;
    }
  }

  outcome.estimate = correlator_fallback(snapshots, initial, stations, geometries);
  outcome.method = LocalizationMethod::fallback;
  outcome.l_hat = 1;
  return outcome;
}

// Full pipeline from per-station waveform records: thresholds from the
// false-alarm target, first-peak TOA bounds, first-crossing sampling times,
// snapshot extraction, and localization. Stations whose trace never crosses
// the threshold drop out of both the snapshot set and the feasible-region
// constraints.
inline LocalizationOutcome disoul_pipeline(const std::vector<ReceivedWaveform>& waveforms,
                                  std::span<const Position> stations,
                                  std::span<const ArrayGeometry> geometries,
                                  const Pulse& pulse, double sigma2,
                                  const LocalizerConfig& cfg) {
  const std::size_t n_stations = waveforms.size();
  if (stations.size() != n_stations || geometries.size() != n_stations)
    throw std::invalid_argument("disoul_pipeline: per-station inputs disagree");

  std::vector<Eigen::VectorXcd> snapshots;
  std::vector<Position> used_positions;
  std::vector<ArrayGeometry> used_geometries;
  std::vector<std::size_t> used_indices;
  ToaEstimates toas;
  toas.expansion_step = cfg.toa_expansion > 0.0 ? cfg.toa_expansion : 1.0 / pulse.bandwidth;

  for (std::size_t l = 0; l < n_stations; ++l) {
    const MatchedFilterTrace mf = matched_filter(waveforms[l], pulse);
    const NcTrace trace = noncoherent_trace(mf);
    double eta = threshold_for_pfa(cfg.p_fa, geometries[l].size(), sigma2,
                                   waveforms[l].duration(), pulse.bandwidth,
                                   cfg.pfa_model);
    if (eta <= 0.0) {
      // noiseless records: detect any nonzero energy, never the zero floor
      const double peak = *std::max_element(trace.values.begin(), trace.values.end());
      if (peak <= 0.0) continue;
      eta = 1e-12 * peak;
    }
    const std::optional<double> toa = estimate_toa(trace, eta);
    const std::optional<double> t_l = sampling_time(trace, eta);
    if (!toa || !t_l) continue;  // station excluded
    snapshots.push_back(snapshot_at(mf, *t_l).z);
    used_positions.push_back(stations[l]);
    used_geometries.push_back(geometries[l]);
    used_indices.push_back(l);
    toas.tau_upper.push_back(*toa);
  }
  if (snapshots.size() < 2)
    throw std::runtime_error("disoul_pipeline: insufficient detections");

  LocalizationOutcome outcome =
      locate(snapshots, used_positions, used_geometries, cfg, toas, sigma2);
  outcome.stations_used = std::move(used_indices);
  return outcome;
}

}  // namespace disoul
