#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <functional>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <math.h>  // pchip uses unqualified isnan

#include <boost/math/interpolators/pchip.hpp>

#include "atomweaver/lattice.hpp"
#include "atomweaver/waveform.hpp"

namespace atomweaver {

/// Optimal amplitude as a function of RF frequency. Monotone piecewise-cubic (PCHIP)
/// through the calibration points; linear for fewer than four points; held constant
/// outside the calibrated range.
class AmplitudeMap {
 public:
  AmplitudeMap(std::vector<double> freqs_hz, std::vector<double> amplitudes)
      : x_(std::move(freqs_hz)), y_(std::move(amplitudes)) {
    if (x_.empty() || x_.size() != y_.size())
      throw std::invalid_argument("amplitude map needs matching, non-empty sample lists");
    for (std::size_t i = 1; i < x_.size(); ++i)
      if (!(x_[i] > x_[i - 1])) throw std::invalid_argument("amplitude map frequencies must increase");
    if (x_.size() >= 4) {
      auto x = x_;
      auto y = y_;
      pchip_.emplace(std::move(x), std::move(y));
    }
  }

  /// Flat map over a lattice axis.
  static AmplitudeMap uniform(const AxisComb& axis, double amplitude = 1.0) {
    std::vector<double> f, a;
    for (std::size_t i = 0; i < axis.sites; ++i) {
      f.push_back(static_cast<double>(axis.frequency(i)));
      a.push_back(amplitude);
    }
    return AmplitudeMap(std::move(f), std::move(a));
  }

  double operator()(double freq_hz) const {
    if (freq_hz <= x_.front()) return y_.front();
    if (freq_hz >= x_.back()) return y_.back();
    if (pchip_) return (*pchip_)(freq_hz);
    const auto it = std::upper_bound(x_.begin(), x_.end(), freq_hz);
    const std::size_t i = static_cast<std::size_t>(it - x_.begin());
    const double t = (freq_hz - x_[i - 1]) / (x_[i] - x_[i - 1]);
    return y_[i - 1] + t * (y_[i] - y_[i - 1]);
  }

  const std::vector<double>& frequencies() const { return x_; }
  const std::vector<double>& amplitudes() const { return y_; }

 private:
  std::vector<double> x_, y_;
  std::optional<boost::math::interpolators::pchip<std::vector<double>>> pchip_;
};

/// Measured per-trap response to a vector of tone amplitudes.
using AmplitudePlant = std::function<std::vector<double>(std::span<const double>)>;

struct CalibrationOptions {
  std::size_t max_iter = 50;
  double damping = 0.5;      // exponent of the multiplicative correction
  double tolerance = 0.02;   // allowed relative deviation from target
};

struct CalibrationResult {
  AmplitudeMap map;
  std::vector<double> amplitudes;
  std::size_t iterations = 0;  // plant evaluations
  double residual_spread = 0.0;
};

class CalibrationError : public std::runtime_error {
 public:
  CalibrationError(std::size_t iterations, double residual, std::vector<double> amplitudes)
      : std::runtime_error("amplitude calibration did not converge after " + std::to_string(iterations) +
                           " iterations; residual spread " + std::to_string(residual)),
        residual_spread(residual),
        last_amplitudes(std::move(amplitudes)) {}

  double residual_spread;
  std::vector<double> last_amplitudes;
};

/// Largest relative deviation of the responses from their targets.
inline double response_spread(std::span<const double> response, std::span<const double> targets) {
  double worst = 0.0;
  for (std::size_t i = 0; i < response.size(); ++i)
    worst = std::max(worst, std::abs(response[i] / targets[i] - 1.0));
  return worst;
}

/// Multiplicative feedback A_i <- A_i (target_i / response_i)^damping, starting from
/// A = targets, until every response is within tolerance. Throws CalibrationError
/// after max_iter plant evaluations.
inline CalibrationResult calibrate_amplitudes(std::span<const Hz> frequencies, const AmplitudePlant& plant,
                                              std::span<const double> targets, const CalibrationOptions& opt = {}) {
  if (targets.empty() || targets.size() != frequencies.size())
    throw std::invalid_argument("one target per tone required");
  for (double t : targets)
    if (!(t > 0.0)) throw std::invalid_argument("calibration targets must be positive");

  std::vector<double> amps(targets.begin(), targets.end());
  double spread = 0.0;
  for (std::size_t it = 1; it <= opt.max_iter; ++it) {
    const auto response = plant(amps);
    if (response.size() != amps.size()) throw std::invalid_argument("plant returned wrong number of responses");
    for (double r : response)
      if (!(r > 0.0) || !std::isfinite(r)) throw std::runtime_error("plant response must be positive and finite");
    spread = response_spread(response, targets);
    if (spread <= opt.tolerance) {
      std::vector<double> f;
      for (auto hz : frequencies) f.push_back(static_cast<double>(hz));
      return {AmplitudeMap(std::move(f), amps), amps, it, spread};
    }
    for (std::size_t i = 0; i < amps.size(); ++i) amps[i] *= std::pow(targets[i] / response[i], opt.damping);
  }
  throw CalibrationError(opt.max_iter, spread, amps);
}

/// Plant whose trap response is the magnitude of each tone's field after adding the
/// third-order mixer products that land on it, scaled by `coupling`, times a per-trap gain.
inline AmplitudePlant make_intermod_plant(std::vector<Hz> frequencies, std::vector<double> phases, double coupling,
                                          std::vector<double> gains = {}) {
  if (phases.size() != frequencies.size()) throw std::invalid_argument("one phase per tone required");
  if (gains.empty()) gains.assign(frequencies.size(), 1.0);
  if (gains.size() != frequencies.size()) throw std::invalid_argument("one gain per tone required");
  return [frequencies = std::move(frequencies), phases = std::move(phases), coupling,
          gains = std::move(gains)](std::span<const double> amps) {
    ToneSet ts;
    for (std::size_t i = 0; i < frequencies.size(); ++i) ts.tones.push_back({amps[i], phases[i], frequencies[i]});
    const auto field = coherent_sum(intermod_products(ts, 3));
    std::vector<double> out(amps.size());
    for (std::size_t i = 0; i < amps.size(); ++i) {
      std::complex<double> e = ts.tones[i].phasor();
      if (const auto it = field.find(frequencies[i]); it != field.end()) e += coupling * it->second;
      out[i] = gains[i] * std::abs(e);
    }
    return out;
  };
}

}  // namespace atomweaver
