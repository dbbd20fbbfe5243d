// SPDX-License-Identifier: Apache-2.0
// disoul: direct localization of a radio source from distributed array snapshots
#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <vector>

#include "disoul/arrays.hpp"
#include "disoul/channel.hpp"
#include "disoul/common.hpp"
#include "disoul/random.hpp"

namespace disoul {

// Truncated Gaussian pulse, unit energy on its sample lattice. samples[i]
// holds s((i - center_index) * dt); the analytic envelope is kept so paths
// can be synthesized at off-lattice delays.
struct Pulse {
  std::vector<double> samples;
  double dt = 0.0;           // seconds
  double bandwidth = 0.0;    // half-power bandwidth, Hz
  double sigma_t = 0.0;      // Gaussian time constant, seconds
  double amplitude = 0.0;    // envelope peak after normalization
  double truncation = 4.0;   // support is |t| <= truncation * sigma_t
  int center_index = 0;

  double support() const { return truncation * sigma_t; }

  // Analytic envelope value at time t (0 outside the truncated support).
  double value_at(double t) const {
    if (std::fabs(t) > support()) return 0.0;
    return amplitude * std::exp(-t * t / (2.0 * sigma_t * sigma_t));
  }

  double energy() const {
    double e = 0.0;
    for (const double s : samples) e += s * s;
    return e * dt;
  }
};

// Per-antenna complex baseband record over [0, T_obs).
struct ReceivedWaveform {
  Eigen::MatrixXcd samples;  // antennas x time
  double dt = 0.0;
  double sigma2 = 0.0;  // noise spectral density

  std::size_t antennas() const { return static_cast<std::size_t>(samples.rows()); }
  std::size_t length() const { return static_cast<std::size_t>(samples.cols()); }
  double duration() const { return static_cast<double>(length()) * dt; }
};

// Matched-filter output of every antenna on the delay lattice k * dt.
struct MatchedFilterTrace {
  Eigen::MatrixXcd values;  // antennas x delays
  double dt = 0.0;
  double sigma2 = 0.0;

  std::size_t delays() const { return static_cast<std::size_t>(values.cols()); }
};

// One complex antenna vector taken from the matched-filter output.
struct Snapshot {
  Eigen::VectorXcd z;
  double sample_time = 0.0;
  double sigma2 = 0.0;
};

// Real Gaussian pulse whose power spectrum is 3 dB down at +/- B/2, sampled
// at oversampling * B and normalized to unit energy on the lattice.
inline Pulse gaussian_pulse(double bandwidth, double oversampling,
                            double truncation = 4.0) {
  if (!(bandwidth > 0.0)) throw std::invalid_argument("gaussian_pulse: bandwidth must be > 0");
  if (!(oversampling >= 2.0)) throw std::invalid_argument("gaussian_pulse: oversampling must be >= 2");
  Pulse p;
  p.bandwidth = bandwidth;
  p.truncation = truncation;
  p.sigma_t = std::sqrt(std::numbers::ln2) / (kPi * bandwidth);
  p.dt = 1.0 / (oversampling * bandwidth);
  // all lattice samples stay inside the truncated support, so the sampled
  // template agrees with value_at everywhere
  p.center_index = static_cast<int>(std::floor(truncation * p.sigma_t / p.dt));
  const int n = 2 * p.center_index + 1;
  p.amplitude = 1.0;
  p.samples.resize(static_cast<std::size_t>(n));
  double energy = 0.0;
  for (int i = 0; i < n; ++i) {
    const double t = static_cast<double>(i - p.center_index) * p.dt;
    const double v = std::exp(-t * t / (2.0 * p.sigma_t * p.sigma_t));
    p.samples[static_cast<std::size_t>(i)] = v;
    energy += v * v;
  }
  energy *= p.dt;
  const double scale = 1.0 / std::sqrt(energy);
  for (double& s : p.samples) s *= scale;
  p.amplitude = scale;
  return p;
}

// Emitted-signal autocorrelation r_s on the lag lattice; values[k] holds
// r_s((k - center_index) * dt) and r_s(0) = 1 by the energy normalization.
struct PulseAutocorrelation {
  std::vector<double> values;
  double dt = 0.0;
  int center_index = 0;

  double at_lag(int k) const {
    const int idx = k + center_index;
    if (idx < 0 || idx >= static_cast<int>(values.size())) return 0.0;
    return values[static_cast<std::size_t>(idx)];
  }
};

inline PulseAutocorrelation autocorrelation(const Pulse& pulse) {
  const int n = static_cast<int>(pulse.samples.size());
  PulseAutocorrelation r;
  r.dt = pulse.dt;
  r.center_index = n - 1;
  r.values.assign(static_cast<std::size_t>(2 * n - 1), 0.0);
  for (int lag = -(n - 1); lag <= n - 1; ++lag) {
    double acc = 0.0;
    for (int i = std::max(0, lag); i < std::min(n, n + lag); ++i)
      acc += pulse.samples[static_cast<std::size_t>(i)] *
             pulse.samples[static_cast<std::size_t>(i - lag)];
    r.values[static_cast<std::size_t>(lag + r.center_index)] = acc * pulse.dt;
  }
  return r;
}

// Sum of path contributions alpha * a(theta) * s(t - tau) plus circular white
// Gaussian noise of spectral density sigma2 per antenna. Optional calibration
// phases rotate each antenna's signal component.
inline ReceivedWaveform synthesize_received(const ArrayGeometry& geom,
                                            const StationChannel& channel,
                                            const Pulse& pulse, double sigma2,
                                            double t_obs, std::uint64_t seed,
                                            const CalibrationError* calibration = nullptr) {
  const double support = pulse.support();
  for (const auto& path : channel.paths)
    if (path.toa + support >= t_obs)
      throw std::invalid_argument("synthesize_received: observation window too short");
  const auto n_samples = static_cast<Eigen::Index>(std::ceil(t_obs / pulse.dt));
  const auto n_antennas = static_cast<Eigen::Index>(geom.size());
  ReceivedWaveform w;
  w.dt = pulse.dt;
  w.sigma2 = sigma2;
  w.samples = Eigen::MatrixXcd::Zero(n_antennas, n_samples);
  for (const auto& path : channel.paths) {
    const Eigen::VectorXcd a = steering_vector(geom, path.aoa);
    const auto first = static_cast<Eigen::Index>(
        std::max(0.0, std::ceil((path.toa - support) / pulse.dt)));
    const auto last = std::min(n_samples - 1, static_cast<Eigen::Index>(
        std::floor((path.toa + support) / pulse.dt)));
    if (last < first) continue;
    Eigen::RowVectorXcd envelope(last - first + 1);
    for (Eigen::Index n = first; n <= last; ++n)
      envelope[n - first] = pulse.value_at(static_cast<double>(n) * pulse.dt - path.toa);
    w.samples.block(0, first, n_antennas, last - first + 1) +=
        (path.gain * a) * envelope;
  }
  if (calibration != nullptr) {
    if (calibration->phase.size() != geom.size())
      throw std::invalid_argument("synthesize_received: calibration length mismatch");
    for (Eigen::Index s = 0; s < n_antennas; ++s) {
      const double p = calibration->phase[static_cast<std::size_t>(s)];
      w.samples.row(s) *= cplx{std::cos(p), std::sin(p)};
    }
  }
  if (sigma2 > 0.0) {
    Rng rng(seed);
    const double per_sample = sigma2 / pulse.dt;
    for (Eigen::Index n = 0; n < n_samples; ++n)
      for (Eigen::Index s = 0; s < n_antennas; ++s)
        w.samples(s, n) += rng.circular_gaussian(per_sample);
  }
  return w;
}

// Discrete correlation of every antenna stream with the pulse template.
inline MatchedFilterTrace matched_filter(const ReceivedWaveform& w, const Pulse& pulse) {
  const auto n = static_cast<Eigen::Index>(w.length());
  MatchedFilterTrace mf;
  mf.dt = w.dt;
  mf.sigma2 = w.sigma2;
  mf.values = Eigen::MatrixXcd::Zero(w.samples.rows(), n);
  const int k0 = pulse.center_index;
  for (int i = 0; i < static_cast<int>(pulse.samples.size()); ++i) {
    const double coeff = pulse.samples[static_cast<std::size_t>(i)] * w.dt;
    if (coeff == 0.0) continue;
    const Eigen::Index shift = i - k0;  // template sample time relative to delay
    const Eigen::Index dst_begin = std::max<Eigen::Index>(0, -shift);
    const Eigen::Index src_begin = std::max<Eigen::Index>(0, shift);
    const Eigen::Index count = n - std::max(dst_begin, src_begin);
    if (count <= 0) continue;
    mf.values.middleCols(dst_begin, count) +=
        coeff * w.samples.middleCols(src_begin, count);
  }
  return mf;
}

// Nearest-lattice sample of the matched-filter output at time t.
inline Snapshot snapshot_at(const MatchedFilterTrace& mf, double t) {
  if (!(t >= 0.0) || t >= static_cast<double>(mf.values.cols()) * mf.dt)
    throw std::out_of_range("snapshot_at: sampling time outside the trace support");
  const auto idx = std::min(static_cast<Eigen::Index>(std::llround(t / mf.dt)),
                            mf.values.cols() - 1);
  Snapshot snap;
  snap.z = mf.values.col(idx);
  snap.sample_time = static_cast<double>(idx) * mf.dt;
  snap.sigma2 = mf.sigma2;
  return snap;
}

// Default observation window: largest path delay plus pulse support plus a
// guard of ten correlation times.
inline double default_observation_time(const ChannelRealization& channel,
                                       const Pulse& pulse) {
  return channel.max_toa() + 8.0 * pulse.sigma_t + 10.0 / pulse.bandwidth;
}

}  // namespace disoul
