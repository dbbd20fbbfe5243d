// SPDX-License-Identifier: Apache-2.0
// disoul: direct localization of a radio source from distributed array snapshots
#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <exception>
#include <limits>
#include <map>
#include <mutex>
#include <optional>
#include <ostream>
#include <string>
#include <thread>
#include <vector>

#include "disoul/baselines.hpp"
#include "disoul/localizer.hpp"
#include "disoul/scenario.hpp"

namespace disoul {

enum class Method { disoul, srls, stansfield, bearings };

inline const std::vector<Method>& all_methods() {
  static const std::vector<Method> methods{Method::disoul, Method::srls,
                                           Method::stansfield, Method::bearings};
  return methods;
}

inline std::string method_name(Method m) {
  switch (m) {
    case Method::disoul: return "disoul";
    case Method::srls: return "srls";
    case Method::stansfield: return "stansfield";
    case Method::bearings: return "bearings";
  }
  return "?";
}

// Parses a comma-separated method list. The DPD and IV baselines from the
// comparison literature are recognized as reserved external slots.
inline std::vector<Method> parse_methods(const std::string& text) {
  std::vector<Method> out;
  std::size_t begin = 0;
  while (begin <= text.size()) {
    const auto end = text.find(',', begin);
    const std::string item = detail::trim(
        text.substr(begin, end == std::string::npos ? std::string::npos : end - begin));
    if (!item.empty()) {
      if (item == "disoul") out.push_back(Method::disoul);
      else if (item == "srls") out.push_back(Method::srls);
      else if (item == "stansfield") out.push_back(Method::stansfield);
      else if (item == "bearings") out.push_back(Method::bearings);
      else if (item == "dpd" || item == "iv")
        throw std::runtime_error("method '" + item + "' is an external baseline slot; not provided by this toolkit");
      else
        throw std::runtime_error("unknown method '" + item + "'");
    }
    if (end == std::string::npos) break;
    begin = end + 1;
  }
  if (out.empty()) throw std::runtime_error("no methods selected");
  return out;
}

struct MethodResult {
  bool valid = false;
  Position estimate{};
  double error = std::numeric_limits<double>::infinity();  // meters
  std::string failure;  // reason when !valid
  // solver metadata (meaningful for the disoul method)
  bool fallback = false;
  bool trivial = false;  // the low-energy branch fired
  std::size_t l_hat = 0;
  int refinement_steps = 0;
  StopReason stop = StopReason::not_run;
  bool certified = true;
  std::vector<double> objectives;

  bool submeter() const { return valid && error < 1.0; }
};

struct TrialResult {
  std::size_t index = 0;
  std::uint64_t seed = 0;
  Position truth{};
  std::size_t detected_stations = 0;
  std::map<Method, MethodResult> results;
};

// Runs fn(0..count-1) on the requested number of workers. The first exception
// wins; remaining work is drained.
template <typename Fn>
inline void parallel_for_indexed(std::size_t count, std::size_t workers, Fn&& fn) {
  if (workers == 0) workers = std::max(1u, std::thread::hardware_concurrency());
  workers = std::min(workers, count);
  if (workers <= 1) {
    for (std::size_t i = 0; i < count; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr error;
  std::mutex error_mutex;
  auto body = [&]() {
    while (true) {
      const std::size_t i = next.fetch_add(1);
      if (i >= count) return;
      try {
        fn(i);
      } catch (...) {
        std::lock_guard lock(error_mutex);
        if (!error) error = std::current_exception();
      }
    }
  };
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (std::size_t t = 0; t < workers; ++t) pool.emplace_back(body);
  for (auto& t : pool) t.join();
  if (error) std::rethrow_exception(error);
}

namespace detail {

struct TrialScene {
  Position truth;
  std::vector<ArrayGeometry> geometries;
  std::vector<ReceivedWaveform> waveforms;
  Pulse pulse;
  double sigma2 = 0.0;
};

// Draws arrays, source position (outside every Fraunhofer disk), channel,
// calibration and noise for one trial, fully determined by (config, index).
inline TrialScene make_trial_scene(const ScenarioConfig& cfg, std::size_t index) {
  const std::uint64_t trial_seed = derive_seed(cfg.master_seed, index, "trial");
  TrialScene scene;
  scene.sigma2 = cfg.sigma2();
  scene.pulse = gaussian_pulse(cfg.bandwidth_hz, cfg.oversampling, cfg.pulse_truncation);

  const std::size_t n_stations = cfg.stations.size();
  scene.geometries.reserve(n_stations);
  for (std::size_t l = 0; l < n_stations; ++l) {
    const std::uint64_t array_seed =
        cfg.redraw_arrays_per_trial ? derive_seed(trial_seed, l, "array")
                                    : derive_seed(cfg.master_seed, l, "array");
    scene.geometries.push_back(circular_random_array(cfg.antennas, cfg.array_radius(),
                                                     cfg.wavelength(), array_seed));
  }

  std::vector<double> far_field(n_stations);
  for (std::size_t l = 0; l < n_stations; ++l)
    far_field[l] = fraunhofer_distance(scene.geometries[l]);
  Rng source_rng(derive_seed(trial_seed, 0, "source"));
  const Rect region = cfg.region();
  for (int attempt = 0;; ++attempt) {
    if (attempt > 100000)
      throw std::runtime_error("run_trial: cannot place a far-field source in the region");
    Position candidate{source_rng.uniform(region.lo.x, region.hi.x),
                       source_rng.uniform(region.lo.y, region.hi.y)};
    bool ok = true;
    for (std::size_t l = 0; l < n_stations && ok; ++l)
      ok = distance(candidate, cfg.stations[l]) >= far_field[l];
    if (ok) {
      scene.truth = candidate;
      break;
    }
  }

  const ChannelRealization channel =
      draw_channel(scene.truth, cfg.stations, cfg.channel,
                   derive_seed(trial_seed, 0, "channel"));
  const double t_obs = default_observation_time(channel, scene.pulse);
  scene.waveforms.reserve(n_stations);
  for (std::size_t l = 0; l < n_stations; ++l) {
    std::optional<CalibrationError> calibration;
    if (cfg.calibration_interval_rad > 0.0)
      calibration = draw_calibration_error(cfg.antennas, cfg.calibration_interval_rad,
                                           derive_seed(trial_seed, l, "calibration"));
    scene.waveforms.push_back(synthesize_received(
        scene.geometries[l], channel.stations[l], scene.pulse, scene.sigma2, t_obs,
        derive_seed(trial_seed, l, "noise"),
        calibration ? &*calibration : nullptr));
  }
  return scene;
}

struct StationTiming {
  std::vector<std::size_t> detected;      // station indices with a crossing
  std::vector<double> toa_upper;          // per detected station
  std::vector<Eigen::VectorXcd> snapshots;
};

inline StationTiming run_timing(const TrialScene& scene, const ScenarioConfig& cfg) {
  StationTiming timing;
  for (std::size_t l = 0; l < scene.waveforms.size(); ++l) {
    const MatchedFilterTrace mf = matched_filter(scene.waveforms[l], scene.pulse);
    const NcTrace trace = noncoherent_trace(mf);
    const double eta =
        threshold_for_pfa(cfg.p_fa, scene.geometries[l].size(), scene.sigma2,
                          scene.waveforms[l].duration(), cfg.bandwidth_hz, cfg.pfa_model);
    const auto toa = estimate_toa(trace, eta);
    const auto t_l = sampling_time(trace, eta);
    if (!toa || !t_l) continue;
    timing.detected.push_back(l);
    timing.toa_upper.push_back(*toa);
    timing.snapshots.push_back(snapshot_at(mf, *t_l).z);
  }
  return timing;
}

}  // namespace detail

// One seeded trial: synthesizes the scene once and evaluates the requested
// methods on identical waveforms. Method failures (insufficient detections,
// degenerate geometry) are recorded, not thrown.
inline TrialResult run_trial(const ScenarioConfig& cfg, std::size_t index,
                             const std::vector<Method>& methods = all_methods()) {
  detail::TrialScene scene = detail::make_trial_scene(cfg, index);
  TrialResult trial;
  trial.index = index;
  trial.seed = derive_seed(cfg.master_seed, index, "trial");
  trial.truth = scene.truth;

  const bool want_two_step =
      std::any_of(methods.begin(), methods.end(), [](Method m) { return m != Method::disoul; });
  detail::StationTiming timing;
  if (want_two_step) timing = detail::run_timing(scene, cfg);

  for (const Method method : methods) {
    MethodResult r;
    try {
      switch (method) {
        case Method::disoul: {
          const LocalizationOutcome outcome =
              disoul_pipeline(scene.waveforms, cfg.stations, scene.geometries,
                              scene.pulse, scene.sigma2, cfg.localizer());
          r.valid = true;
          r.estimate = outcome.estimate;
          r.fallback = outcome.method == LocalizationMethod::fallback;
          r.trivial = outcome.trivial_branch;
          r.l_hat = outcome.l_hat;
          r.refinement_steps = outcome.refinement_steps;
          r.stop = outcome.stop;
          r.certified = outcome.solver_certified;
          r.objectives = outcome.objectives;
          trial.detected_stations = outcome.stations_used.size();
          break;
        }
        case Method::srls: {
          if (timing.detected.size() < 3)
            throw std::runtime_error("fewer than three detecting stations");
          std::vector<Position> used;
          for (const std::size_t l : timing.detected) used.push_back(cfg.stations[l]);
          r.estimate = srls(timing.toa_upper, used);
          r.valid = true;
          break;
        }
        case Method::stansfield:
        case Method::bearings: {
          if (timing.detected.size() < 2)
            throw std::runtime_error("fewer than two detecting stations");
          const AngleGrid grid = make_angle_grid(cfg.theta_res_rad);
          BearingSet bearings;
          std::vector<Position> used;
          for (std::size_t i = 0; i < timing.detected.size(); ++i) {
            const std::size_t l = timing.detected[i];
            bearings.bearings.push_back(
                beamforming_aoa(timing.snapshots[i], scene.geometries[l], grid));
            if (method == Method::stansfield)
              bearings.ranges.push_back(kSpeedOfLight * timing.toa_upper[i]);
            used.push_back(cfg.stations[l]);
          }
          r.estimate = stansfield(bearings, used);
          r.valid = true;
          break;
        }
      }
    } catch (const std::exception& e) {
      r.valid = false;
      r.failure = e.what();
    }
    if (r.valid) r.error = distance(r.estimate, scene.truth);
    trial.results.emplace(method, std::move(r));
  }
  return trial;
}

// Sweepable scenario parameters. Values are interpreted in the parameter's
// natural unit: dB, Hz, antenna count, seconds, degrees.
inline ScenarioConfig apply_sweep_value(const ScenarioConfig& base,
                                        const std::string& param, double value) {
  ScenarioConfig cfg = base;
  if (param == "e_n0") {
    cfg.e_n0_db = value;
  } else if (param == "bandwidth") {
    cfg.bandwidth_hz = value;
  } else if (param == "antennas") {
    cfg.antennas = static_cast<std::size_t>(std::llround(value));
    if (cfg.antennas == 0) throw std::runtime_error("antennas sweep value must be >= 1");
  } else if (param == "ray_interarrival") {
    // mean ray gap in seconds; the cluster rate keeps the 5/17 ratio
    if (!(value > 0.0)) throw std::runtime_error("ray_interarrival must be positive");
    cfg.channel.ray_rate = 1.0 / value;
    cfg.channel.cluster_rate = (5.0 / 17.0) * cfg.channel.ray_rate;
  } else if (param == "calibration") {
    cfg.calibration_interval_rad = value * kPi / 180.0;
  } else {
    throw std::runtime_error("unknown sweep parameter '" + param + "'");
  }
  return cfg;
}

struct MetricsCell {
  double prob_submeter = 0.0;
  std::size_t trials = 0;
  std::vector<double> errors;  // sorted; failures recorded as +inf
};

struct MetricsTable {
  std::string param;
  std::vector<double> values;
  std::vector<Method> methods;
  std::map<std::pair<double, Method>, MetricsCell> cells;
};

inline MetricsTable run_sweep(const ScenarioConfig& base, const std::string& param,
                              const std::vector<double>& values,
                              const std::vector<Method>& methods = all_methods()) {
  MetricsTable table;
  table.param = param;
  table.values = values;
  table.methods = methods;
  for (const double value : values) {
    const ScenarioConfig cfg = apply_sweep_value(base, param, value);
    std::vector<TrialResult> trials(cfg.trials);
    parallel_for_indexed(cfg.trials, cfg.workers,
                         [&](std::size_t i) { trials[i] = run_trial(cfg, i, methods); });
    for (const Method method : methods) {
      MetricsCell cell;
      cell.trials = cfg.trials;
      std::size_t submeter = 0;
      for (const TrialResult& t : trials) {
        const MethodResult& r = t.results.at(method);
        cell.errors.push_back(r.error);
        if (r.submeter()) ++submeter;
      }
      std::sort(cell.errors.begin(), cell.errors.end());
      cell.prob_submeter = cfg.trials > 0
                               ? static_cast<double>(submeter) / static_cast<double>(cfg.trials)
                               : 0.0;
      table.cells.emplace(std::make_pair(value, method), std::move(cell));
    }
  }
  return table;
}

inline void write_sweep_csv(std::ostream& out, const MetricsTable& table) {
  out << "param,method,prob_submeter,n_trials\n";
  char buffer[128];
  for (const double value : table.values) {
    for (const Method method : table.methods) {
      const MetricsCell& cell = table.cells.at({value, method});
      std::snprintf(buffer, sizeof buffer, "%.10g,%s,%.6f,%zu\n", value,
                    method_name(method).c_str(), cell.prob_submeter, cell.trials);
      out << buffer;
    }
  }
}

inline void write_cdf_csv(std::ostream& out, const MetricsTable& table) {
  out << "param,method,error_m,cdf\n";
  char buffer[160];
  for (const double value : table.values) {
    for (const Method method : table.methods) {
      const MetricsCell& cell = table.cells.at({value, method});
      const double n = static_cast<double>(cell.errors.size());
      for (std::size_t i = 0; i < cell.errors.size(); ++i) {
        if (!std::isfinite(cell.errors[i])) break;  // failures occupy the CDF tail
        std::snprintf(buffer, sizeof buffer, "%.10g,%s,%.10g,%.6f\n", value,
                      method_name(method).c_str(), cell.errors[i],
                      static_cast<double>(i + 1) / n);
        out << buffer;
      }
    }
  }
}

// ---------------------------------------------------------------------------
// Weight validation: the two-reflector-free scenario with one reflector and a
// blocked reflection toward the top-left station, solved on exact grids for a
// sweep of w^2 with randomized path gains.

struct WeightValidationRow {
  double w_square = 0.0;
  double prob_submeter = 0.0;
  std::size_t trials = 0;
};

struct WeightValidationScene {
  Position source{18.0, 31.0};
  Position reflector{25.0, -7.0};
  // station without a reflected ray; auto = the most north-westerly one
  std::size_t blocked_station = static_cast<std::size_t>(-1);
};

inline std::vector<WeightValidationRow> run_weight_validation(
    const ScenarioConfig& base, double snr_db, const std::vector<double>& w_squares,
    std::size_t trials, const WeightValidationScene& scene = {}) {
  ScenarioConfig cfg = base;
  const std::size_t n_stations = cfg.stations.size();
  // the reflection misses the most north-westerly station
  std::size_t blocked = scene.blocked_station;
  if (blocked >= n_stations) {
    double best = -std::numeric_limits<double>::infinity();
    for (std::size_t l = 0; l < n_stations; ++l) {
      const double nw = cfg.stations[l].y - cfg.stations[l].x;
      if (nw > best) {
        best = nw;
        blocked = l;
      }
    }
  }
  // arrays fixed across trials; only gains, phases and noise are random
  std::vector<ArrayGeometry> geometries;
  for (std::size_t l = 0; l < n_stations; ++l)
    geometries.push_back(circular_random_array(
        cfg.antennas, cfg.array_radius(), cfg.wavelength(),
        derive_seed(cfg.master_seed, l, "weight-array")));

  const double sigma2 =
      static_cast<double>(cfg.antennas) * cfg.channel.los_energy / db_to_linear(snr_db);
  const double epsilon = epsilon_for(cfg.gamma, sigma2, cfg.antennas * n_stations);

  // exact grids: the uniform lattices plus the true source, the reflector and
  // both true bearings per station
  LocationGrid locations = make_location_grid(cfg.region(), cfg.pi_res_m);
  locations.points.push_back(scene.source);
  locations.points.push_back(scene.reflector);
  detail::sort_and_merge(locations.points);
  std::vector<AngleGrid> angle_grids(n_stations);
  for (std::size_t l = 0; l < n_stations; ++l) {
    AngleGrid grid = make_angle_grid(cfg.theta_res_rad);
    grid.angles.push_back(wrap_two_pi(aoa_of(scene.source, cfg.stations[l])));
    if (l != blocked)
      grid.angles.push_back(wrap_two_pi(aoa_of(scene.reflector, cfg.stations[l])));
    detail::sort_and_merge_angles(grid.angles);
    angle_grids[l] = std::move(grid);
  }

  std::vector<std::vector<std::size_t>> submeter(w_squares.size(),
                                                 std::vector<std::size_t>(trials, 0));
  parallel_for_indexed(trials, cfg.workers, [&](std::size_t t) {
    Rng rng(derive_seed(cfg.master_seed, t, "weight-trial"));
    std::vector<Eigen::VectorXcd> snapshots(n_stations);
    for (std::size_t l = 0; l < n_stations; ++l) {
      Eigen::VectorXcd z =
          rng.circular_gaussian(cfg.channel.los_energy) *
          steering_vector(geometries[l], aoa_of(scene.source, cfg.stations[l]));
      if (l != blocked)
        z += rng.circular_gaussian(cfg.channel.los_energy) *
             steering_vector(geometries[l], aoa_of(scene.reflector, cfg.stations[l]));
      for (Eigen::Index s = 0; s < z.size(); ++s) z[s] += rng.circular_gaussian(sigma2);
      snapshots[l] = std::move(z);
    }
    if (trivial_energy_check(snapshots, epsilon)) return;  // all weights fail

    SolverOptions options;
    options.max_iterations = cfg.solver_max_iterations;
    options.tolerance = cfg.solver_tolerance;
    for (std::size_t wi = 0; wi < w_squares.size(); ++wi) {
      const SparseProblem problem =
          build_sparse_problem(snapshots, cfg.stations, geometries, locations,
                               angle_grids, std::sqrt(w_squares[wi]), epsilon);
      const SparseSolution solution = solve(problem, options);
      const SupportSet support = extract_support(problem, solution, cfg.zero_threshold);
      if (support.locations.empty()) continue;
      Eigen::Index best = 0;
      double best_norm = -1.0;
      for (Eigen::Index q = 0; q < solution.location_gains.rows(); ++q) {
        const double nrm = solution.location_gains.row(q).norm();
        if (nrm > best_norm) {
          best_norm = nrm;
          best = q;
        }
      }
      const Position estimate = problem.locations.points[static_cast<std::size_t>(best)];
      if (distance(estimate, scene.source) < 1.0) submeter[wi][t] = 1;
    }
  });

  std::vector<WeightValidationRow> rows;
  for (std::size_t wi = 0; wi < w_squares.size(); ++wi) {
    WeightValidationRow row;
    row.w_square = w_squares[wi];
    row.trials = trials;
    std::size_t hits = 0;
    for (const std::size_t h : submeter[wi]) hits += h;
    row.prob_submeter =
        trials > 0 ? static_cast<double>(hits) / static_cast<double>(trials) : 0.0;
    rows.push_back(row);
  }
  return rows;
}

inline void write_weight_validation_csv(std::ostream& out,
                                        const std::vector<WeightValidationRow>& rows) {
  out << "w_square,prob_submeter,n_trials\n";
  char buffer[96];
  for (const WeightValidationRow& row : rows) {
    std::snprintf(buffer, sizeof buffer, "%.10g,%.6f,%zu\n", row.w_square,
                  row.prob_submeter, row.trials);
    out << buffer;
  }
}

inline void print_trial(std::ostream& out, const TrialResult& trial) {
  char buffer[256];
  std::snprintf(buffer, sizeof buffer, "trial %zu seed %llu truth (%.6f, %.6f) detections %zu\n",
                trial.index, static_cast<unsigned long long>(trial.seed), trial.truth.x,
                trial.truth.y, trial.detected_stations);
  out << buffer;
  for (const auto& [method, r] : trial.results) {
    if (r.valid) {
      std::snprintf(buffer, sizeof buffer,
                    "  %-10s estimate (%.6f, %.6f) error %.6f m%s%s\n",
                    method_name(method).c_str(), r.estimate.x, r.estimate.y, r.error,
                    r.fallback ? " [fallback]" : "",
                    method == Method::disoul && !r.certified ? " [no certificate]" : "");
    } else {
      std::snprintf(buffer, sizeof buffer, "  %-10s failed: %s\n",
                    method_name(method).c_str(), r.failure.c_str());
    }
    out << buffer;
  }
}

}  // namespace disoul
