// SPDX-License-Identifier: Apache-2.0
// disoul: direct localization of a radio source from distributed array snapshots
#pragma once

#include <cmath>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <vector>

#include "disoul/common.hpp"
#include "disoul/geometry.hpp"
#include "disoul/random.hpp"

namespace disoul {

enum class PathKind { los, nlos };

struct PathComponent {
  cplx gain;
  double aoa = 0.0;  // radians
  double toa = 0.0;  // seconds
  PathKind kind = PathKind::nlos;
};

// Visibility of the direct path at one station.
struct LosCondition {
  enum class Kind { los, olos, nlos };
  Kind kind = Kind::los;
  double olos_attenuation_db = 0.0;  // energy attenuation, used when kind == olos

  static LosCondition los() { return {}; }
  static LosCondition olos(double attenuation_db) {
    return {Kind::olos, attenuation_db};
  }
  static LosCondition nlos() { return {Kind::nlos, 0.0}; }
};

// Clustered indoor multipath statistics. Rates and decays follow the usual
// Saleh-Valenzuela parameterization; defaults are set by the scenario layer.
struct ChannelParams {
  double cluster_decay = 34e-9;      // seconds
  double ray_decay = 29e-9;          // seconds
  double cluster_rate = 1.0 / 17e-9; // 1/seconds
  double ray_rate = 1.0 / 5e-9;      // 1/seconds
  double angular_spread = 26.0 * kPi / 180.0;  // radians (Laplacian std dev)
  double los_energy = 1.0;                     // E = E|alpha_l|^2
  std::vector<LosCondition> los_states;        // per station; empty = all LOS
  double ray_energy_floor = 1e-6;  // stop generating rays below floor * E

  LosCondition los_state(std::size_t station) const {
    return station < los_states.size() ? los_states[station] : LosCondition::los();
  }
};

struct StationChannel {
  std::vector<PathComponent> paths;

  const PathComponent* los_path() const {
    for (const auto& p : paths)
      if (p.kind == PathKind::los) return &p;
    return nullptr;
  }
  double max_toa() const {
    double m = 0.0;
    for (const auto& p : paths) m = std::max(m, p.toa);
    return m;
  }
};

struct ChannelRealization {
  std::vector<StationChannel> stations;

  double max_toa() const {
    double m = 0.0;
    for (const auto& s : stations) m = std::max(m, s.max_toa());
    return m;
  }
};

// Draws one multipath realization. The LOS component carries the exact
// geometric bearing and delay; clusters arrive after the LOS delay as a
// Poisson process, with intra-cluster rays again Poisson. Average ray energy
// decays exponentially in both cluster and ray delay, cluster mean bearings
// are uniform and ray bearings scatter around them with Laplacian deviation.
inline ChannelRealization draw_channel(Position source,
                                       std::span<const Position> stations,
                                       const ChannelParams& params,
                                       std::uint64_t seed) {
  if (!(params.cluster_decay > 0.0) || !(params.ray_decay > 0.0) ||
      !(params.cluster_rate > 0.0) || !(params.ray_rate > 0.0))
    throw std::invalid_argument("draw_channel: rates and decays must be positive");
  Rng rng(seed);
  ChannelRealization out;
  out.stations.resize(stations.size());
  // Expected ray energy E*exp(-T/G)*exp(-t/g) >= floor*E bounds both sums.
  const double log_floor = -std::log(params.ray_energy_floor);
  for (std::size_t l = 0; l < stations.size(); ++l) {
    StationChannel& st = out.stations[l];
    const LosCondition cond = params.los_state(l);
    const double los_toa = toa_of(source, stations[l]);
    const double los_aoa = aoa_of(source, stations[l]);
    if (cond.kind != LosCondition::Kind::nlos) {
      double energy = params.los_energy;
      if (cond.kind == LosCondition::Kind::olos)
        energy *= db_to_linear(-cond.olos_attenuation_db);
      st.paths.push_back({rng.circular_gaussian(energy), los_aoa, los_toa, PathKind::los});
    }
    // Cluster 0 starts at the LOS arrival time; later clusters follow at
    // exponential gaps.
    double cluster_delay = 0.0;
    while (cluster_delay / params.cluster_decay < log_floor) {
      const double cluster_aoa = rng.uniform(0.0, kTwoPi);
      const double cluster_factor = std::exp(-cluster_delay / params.cluster_decay);
      double ray_delay = rng.exponential(params.ray_rate);
      while (true) {
        const double mean_energy = params.los_energy * cluster_factor *
                                   std::exp(-ray_delay / params.ray_decay);
        if (mean_energy < params.ray_energy_floor * params.los_energy) break;
        PathComponent ray;
        ray.gain = rng.circular_gaussian(mean_energy);
        ray.aoa = wrap_two_pi(cluster_aoa + rng.laplace(params.angular_spread));
        ray.toa = los_toa + cluster_delay + ray_delay;
        ray.kind = PathKind::nlos;
        st.paths.push_back(ray);
        ray_delay += rng.exponential(params.ray_rate);
      }
      cluster_delay += rng.exponential(params.cluster_rate);
    }
  }
  return out;
}

// Nominal per-station SNR in dB: S * E{|alpha|^2} / sigma^2 with the
// configured LOS gain statistics.
inline double snr_of(const ChannelParams& params, std::size_t station,
                     double sigma2, std::size_t antennas) {
  const LosCondition cond = params.los_state(station);
  if (cond.kind == LosCondition::Kind::nlos)
    throw std::domain_error("snr_of: undefined for a station without LOS");
  double energy = params.los_energy;
  if (cond.kind == LosCondition::Kind::olos)
    energy *= db_to_linear(-cond.olos_attenuation_db);
  return linear_to_db(static_cast<double>(antennas) * energy / sigma2);
}

}  // namespace disoul
