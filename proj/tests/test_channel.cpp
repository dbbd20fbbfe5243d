// SPDX-License-Identifier: Apache-2.0
#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <cmath>
#include <vector>

#include "disoul/channel.hpp"
#include "disoul/random.hpp"

using namespace disoul;
using Catch::Approx;

namespace {

const std::vector<Position> kStations{{45, 45}, {45, -45}, {-45, 45}, {-45, -45}};

double nlos_energy(const StationChannel& st) {
  double e = 0.0;
  for (const auto& p : st.paths)
    if (p.kind == PathKind::nlos) e += std::norm(p.gain);
  return e;
}

}  // namespace

TEST_CASE("draw_channel ties the LOS component to the geometry", "[channel]") {
  const Position source{18.0, 31.0};
  ChannelParams params;
  const ChannelRealization channel = draw_channel(source, kStations, params, 17);
  REQUIRE(channel.stations.size() == kStations.size());
  for (std::size_t l = 0; l < kStations.size(); ++l) {
    const PathComponent* los = channel.stations[l].los_path();
    REQUIRE(los != nullptr);
    CHECK(los->aoa == aoa_of(source, kStations[l]));
    CHECK(los->toa == toa_of(source, kStations[l]));
    std::size_t los_count = 0;
    for (const auto& p : channel.stations[l].paths) {
      CHECK(p.toa >= los->toa);
      if (p.kind == PathKind::los) ++los_count;
    }
    CHECK(los_count == 1);
  }

  // same seed, same realization
  const ChannelRealization again = draw_channel(source, kStations, params, 17);
  for (std::size_t l = 0; l < kStations.size(); ++l) {
    REQUIRE(again.stations[l].paths.size() == channel.stations[l].paths.size());
    for (std::size_t i = 0; i < again.stations[l].paths.size(); ++i) {
      CHECK(again.stations[l].paths[i].gain == channel.stations[l].paths[i].gain);
      CHECK(again.stations[l].paths[i].toa == channel.stations[l].paths[i].toa);
    }
  }
}

TEST_CASE("NLOS and OLOS states control the direct path", "[channel]") {
  ChannelParams params;
  params.los_states = {LosCondition::nlos(), LosCondition::olos(20.0),
                       LosCondition::los(), LosCondition::los()};
  const ChannelRealization channel = draw_channel({0, 0}, kStations, params, 3);
  CHECK(channel.stations[0].los_path() == nullptr);
  REQUIRE(channel.stations[1].los_path() != nullptr);
  REQUIRE(channel.stations[2].los_path() != nullptr);

  // OLOS attenuates the mean LOS energy by the configured factor
  double olos_mean = 0.0, los_mean = 0.0;
  const int draws = 4000;
  for (int i = 0; i < draws; ++i) {
    const ChannelRealization c = draw_channel({0, 0}, kStations, params, 100 + i);
    olos_mean += std::norm(c.stations[1].los_path()->gain);
    los_mean += std::norm(c.stations[2].los_path()->gain);
  }
  olos_mean /= draws;
  los_mean /= draws;
  CHECK(los_mean == Approx(params.los_energy).epsilon(0.1));
  CHECK(olos_mean == Approx(params.los_energy * 0.01).epsilon(0.15));
}

TEST_CASE("sparse-arrival regime degenerates to pure LOS", "[channel]") {
  ChannelParams params;
  params.ray_rate = 1.0 / 5e-6;  // 5 us mean gaps
  params.cluster_rate = (5.0 / 17.0) * params.ray_rate;
  double nlos_paths = 0.0;
  const int draws = 200;
  for (int i = 0; i < draws; ++i) {
    const ChannelRealization c = draw_channel({10, -3}, kStations, params, 500 + i);
    for (const auto& st : c.stations)
      for (const auto& p : st.paths)
        if (p.kind == PathKind::nlos) nlos_paths += 1.0;
  }
  CHECK(nlos_paths / (draws * kStations.size()) < 0.5);
}

TEST_CASE("Clyde parameters reproduce the expected multipath energy", "[channel]") {
  // Campbell's theorem: E[sum_ray e^{-t/g}] = lambda*g per cluster and
  // E[sum_cluster e^{-T/G}] = 1 + Lambda*G, so the mean total NLOS energy is
  // E * (1 + 34/17) * (29/5) = 17.4 E.
  ChannelParams params;
  const double expected = params.los_energy * (1.0 + params.cluster_rate * params.cluster_decay) *
                          (params.ray_rate * params.ray_decay);
  CHECK(expected == Approx(17.4).epsilon(1e-9));
  double total = 0.0;
  std::size_t station_draws = 0;
  const int draws = 500;
  for (int i = 0; i < draws; ++i) {
    const ChannelRealization c = draw_channel({5, 12}, kStations, params, 900 + i);
    for (const auto& st : c.stations) {
      total += nlos_energy(st);
      ++station_draws;
    }
  }
  CHECK(total / static_cast<double>(station_draws) == Approx(expected).epsilon(0.1));

  // a handful of arrivals carries 99.9% of the energy that survives into a
  // snapshot: the pulse autocorrelation suppresses paths far from the
  // sampling instant (taken here at the LOS delay, 30 MHz pulse)
  const double sigma_t = std::sqrt(std::numbers::ln2) / (kPi * 30e6);
  double significant = 0.0;
  std::size_t cases = 0;
  for (int i = 0; i < 100; ++i) {
    const ChannelRealization c = draw_channel({5, 12}, kStations, params, 2200 + i);
    for (const auto& st : c.stations) {
      const double t_sample = st.los_path()->toa;
      std::vector<double> energies;
      double sum = 0.0;
      for (const auto& p : st.paths) {
        const double lag = t_sample - p.toa;
        if (std::fabs(lag) > 8.0 * sigma_t) continue;
        const double r = std::exp(-lag * lag / (4.0 * sigma_t * sigma_t));
        energies.push_back(r * r * std::norm(p.gain));
        sum += energies.back();
      }
      std::sort(energies.rbegin(), energies.rend());
      double acc = 0.0;
      std::size_t count = 0;
      while (count < energies.size() && acc < 0.999 * sum) acc += energies[count++];
      significant += static_cast<double>(count);
      ++cases;
    }
  }
  const double mean_significant = significant / static_cast<double>(cases);
  CHECK(mean_significant > 2.0);
  CHECK(mean_significant < 30.0);
}

TEST_CASE("expected NLOS energy falls as arrivals become sparser", "[channel]") {
  const std::vector<double> gaps{5e-9, 50e-9, 5e-7};
  std::vector<double> means;
  for (const double gap : gaps) {
    ChannelParams params;
    params.ray_rate = 1.0 / gap;
    params.cluster_rate = (5.0 / 17.0) * params.ray_rate;
    double total = 0.0;
    const int draws = 300;
    for (int i = 0; i < draws; ++i) {
      const ChannelRealization c = draw_channel({5, 12}, kStations, params, 3100 + i);
      for (const auto& st : c.stations) total += nlos_energy(st);
    }
    means.push_back(total / (draws * kStations.size()));
  }
  CHECK(means[0] > means[1]);
  CHECK(means[1] > means[2]);
}

TEST_CASE("snr_of closed forms and Monte-Carlo agreement", "[channel]") {
  ChannelParams params;
  params.los_energy = 0.5;
  CHECK(snr_of(params, 0, 0.5, 1) == Approx(0.0).margin(1e-12));
  CHECK(snr_of(params, 0, 0.5, 100) == Approx(20.0).margin(1e-12));

  params.los_states = {LosCondition::nlos()};
  CHECK_THROWS_AS(snr_of(params, 0, 0.5, 100), std::domain_error);

  // sampling oracle: mean |alpha|^2 over gain draws matches the configured
  // energy within 0.2 dB
  ChannelParams clyde;
  Rng rng(77);
  double mean = 0.0;
  const int draws = 10000;
  for (int i = 0; i < draws; ++i) mean += std::norm(rng.circular_gaussian(clyde.los_energy));
  mean /= draws;
  const double snr_mc = linear_to_db(100.0 * mean / 0.01);
  const double snr = snr_of(clyde, 0, 0.01, 100);
  CHECK(std::fabs(snr_mc - snr) < 0.2);
}
