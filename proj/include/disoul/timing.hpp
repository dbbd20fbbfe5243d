// SPDX-License-Identifier: Apache-2.0
// disoul: direct localization of a radio source from distributed array snapshots
#pragma once

#include <cmath>
#include <limits>
#include <optional>
#include <stdexcept>
#include <vector>

#include "disoul/common.hpp"
#include "disoul/waveform.hpp"

namespace disoul {

// Non-coherent aggregation of the matched-filter outputs over the delay lattice.
struct NcTrace {
  std::vector<double> values;
  double dt = 0.0;

  double time_of(std::size_t index) const { return static_cast<double>(index) * dt; }
};

struct TimingResult {
  double toa_upper = 0.0;   // first peak over threshold, seconds
  double sample_time = 0.0; // first threshold crossing, seconds
  double threshold = 0.0;   // energy units
};

// Model used to map a false-alarm target to an energy threshold.
// `complement` is the standard independent-look form
//   P_FA = 1 - (1 - exp(-eta / (S sigma^2)))^(T_obs/T_corr);
// `printed` is the non-monotone textbook variant kept for side-by-side study.
enum class PfaModel { complement, printed };

inline NcTrace noncoherent_trace(const MatchedFilterTrace& mf) {
  NcTrace trace;
  trace.dt = mf.dt;
  trace.values.resize(mf.delays());
  for (std::size_t k = 0; k < trace.values.size(); ++k)
    trace.values[k] = mf.values.col(static_cast<Eigen::Index>(k)).squaredNorm();
  return trace;
}

inline NcTrace noncoherent_trace(const ReceivedWaveform& w, const Pulse& pulse) {
  return noncoherent_trace(matched_filter(w, pulse));
}

// False-alarm probability of threshold eta under the chosen model, with
// looks = T_obs / T_corr independent looks.
inline double pfa_of_threshold(double eta, std::size_t antennas, double sigma2,
                               double looks, PfaModel model = PfaModel::complement) {
  const double x = std::exp(-eta / (static_cast<double>(antennas) * sigma2));
  if (model == PfaModel::complement)
    return 1.0 - std::pow(1.0 - x, looks);
  return 1.0 + (std::pow(1.0 - x, looks) - 1.0) / std::pow(x, looks);
}

// Threshold achieving the target false-alarm probability, found by bisection
// to 1e-6 relative tolerance. T_corr = 1/B.
inline double threshold_for_pfa(double p_fa, std::size_t antennas, double sigma2,
                                double t_obs, double bandwidth,
                                PfaModel model = PfaModel::complement) {
  if (!(p_fa > 0.0) || !(p_fa < 1.0))
    throw std::invalid_argument("threshold_for_pfa: target must be in (0, 1)");
  if (sigma2 == 0.0) return 0.0;  // noiseless limit: any received energy detects
  const double looks = t_obs * bandwidth;
  if (!(looks > 0.0))
    throw std::invalid_argument("threshold_for_pfa: T_obs and B must be positive");
  const double scale = static_cast<double>(antennas) * sigma2;
  // The complement model decreases monotonically in eta from 1 to 0; bracket
  // the crossing and bisect. The printed model is not monotone, so search for
  // a bracket on an expanding grid first and report failure when none exists.
  double lo = 0.0;
  double hi = scale;
  if (model == PfaModel::complement) {
    while (pfa_of_threshold(hi, antennas, sigma2, looks, model) > p_fa) {
      hi *= 2.0;
      if (hi > 1e12 * scale)
        throw std::runtime_error("threshold_for_pfa: target not attainable");
    }
  } else {
    bool bracketed = false;
    double prev_eta = 0.0;
    double prev_val = pfa_of_threshold(0.0, antennas, sigma2, looks, model);
    for (int i = 1; i <= 4096 && !bracketed; ++i) {
      const double eta = scale * 0.01 * static_cast<double>(i);
      const double val = pfa_of_threshold(eta, antennas, sigma2, looks, model);
      if ((prev_val - p_fa) * (val - p_fa) <= 0.0) {
        lo = prev_eta;
        hi = eta;
        bracketed = true;
      }
      prev_eta = eta;
      prev_val = val;
    }
    if (!bracketed)
      throw std::runtime_error("threshold_for_pfa: target not attainable under the printed model");
  }
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    const double val = pfa_of_threshold(mid, antennas, sigma2, looks, model);
    const bool above = model == PfaModel::complement ? val > p_fa
                                                     : (pfa_of_threshold(lo, antennas, sigma2, looks, model) - p_fa) * (val - p_fa) > 0.0;
    if (above)
      lo = mid;
    else
      hi = mid;
    if (hi - lo <= 1e-6 * std::max(hi, 1e-300)) break;
  }
  return 0.5 * (lo + hi);
}

namespace detail {

// Sub-lattice peak position by a 3-point parabolic fit; falls back to the
// lattice point at the trace edges or for a degenerate parabola.
inline double parabolic_peak(const NcTrace& trace, std::size_t k) {
  if (k == 0 || k + 1 >= trace.values.size()) return trace.time_of(k);
  const double ym = trace.values[k - 1];
  const double y0 = trace.values[k];
  const double yp = trace.values[k + 1];
  const double denom = ym - 2.0 * y0 + yp;
  if (denom >= 0.0) return trace.time_of(k);
  double shift = 0.5 * (ym - yp) / denom;
  shift = std::clamp(shift, -0.5, 0.5);
  return trace.time_of(k) + shift * trace.dt;
}

}  // namespace detail

// First local maximum at or above the threshold, refined by parabolic
// interpolation. Plateaus resolve to their earliest sample. Returns nothing
// when no sample reaches the threshold.
inline std::optional<double> estimate_toa(const NcTrace& trace, double eta) {
  const auto& v = trace.values;
  if (v.empty()) throw std::invalid_argument("estimate_toa: empty trace");
  for (std::size_t k = 0; k < v.size(); ++k) {
    if (v[k] < eta) continue;
    const bool left_ok = k == 0 || v[k - 1] < v[k];
    const bool right_ok = k + 1 >= v.size() || v[k + 1] <= v[k];
    if (left_ok && right_ok) return detail::parabolic_peak(trace, k);
  }
  return std::nullopt;
}

// First lattice delay whose trace value reaches the threshold.
inline std::optional<double> sampling_time(const NcTrace& trace, double eta) {
  for (std::size_t k = 0; k < trace.values.size(); ++k)
    if (trace.values[k] >= eta) return trace.time_of(k);
  return std::nullopt;
}

}  // namespace disoul
