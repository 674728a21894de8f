#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <limits>
#include <memory>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "atomweaver/amplitude.hpp"
#include "atomweaver/lattice.hpp"
#include "atomweaver/waveform.hpp"

namespace atomweaver {

inline constexpr double kBaseSweepDuration = 3e-3;
inline constexpr double kMaxSweepStretch = 0.01;

struct SweepRequest {
  Hz start_hz = 0;
  Hz end_hz = 0;
  double start_phase = 0.0;   // tone phase when the sweep begins
  double target_phase = 0.0;  // phase the tone must have when it arrives
  double base_duration = kBaseSweepDuration;
  double max_stretch = kMaxSweepStretch;  // allowed relative duration change
  /// Frame in which phase accumulates; the generator runs at baseband, so this is the
  /// upconversion frequency by default.
  Hz reference_hz = kUpconversionHz;
};

class SweepUnreachable : public std::runtime_error {
 public:
  SweepUnreachable(double required, double base)
      : std::runtime_error("end phase needs a sweep of " + std::to_string(required) + " s (base " +
                           std::to_string(base) + " s) which exceeds the allowed stretch"),
        required_duration(required) {}
  double required_duration;
};

/// Frequency trajectory of a moved tone: constant chirp rate +a for the first half,
/// -a for the second (two parabolic arcs), amplitude following the calibrated map.
struct SweepPlan {
  Hz start_hz = 0;
  Hz end_hz = 0;
  double duration = 0.0;
  double start_phase = 0.0;
  double end_phase = 0.0;
  Hz reference_hz = kUpconversionHz;
  std::shared_ptr<const AmplitudeMap> amplitude_map;

  bool identity() const { return start_hz == end_hz; }

  double span_hz() const { return static_cast<double>(end_hz - start_hz); }

  double frequency_at(double t) const {
    if (identity() || t <= 0.0) return static_cast<double>(start_hz);
    if (t >= duration) return static_cast<double>(end_hz);
    const double u = t / duration;
    return u <= 0.5 ? static_cast<double>(start_hz) + 2.0 * span_hz() * u * u
                    : static_cast<double>(end_hz) - 2.0 * span_hz() * (1.0 - u) * (1.0 - u);
  }

  /// Chirp rate in Hz/s; largest at the midpoint, zero at both ends.
  double slope_at(double t) const {
    if (identity() || t <= 0.0 || t >= duration) return 0.0;
    const double u = t / duration;
    return 4.0 * span_hz() / duration * (u <= 0.5 ? u : 1.0 - u);
  }

  /// start_phase + 2pi * integral_0^t (f(s) - reference) ds, unwrapped.
  double unwrapped_phase_at(double t) const {
    const double fs = static_cast<double>(start_hz - reference_hz);
    const double fe = static_cast<double>(end_hz - reference_hz);
    if (identity()) return start_phase + kTwoPi * fs * std::max(0.0, t);
    t = std::clamp(t, 0.0, duration);
    const double T = duration, D = span_hz();
    double cycles;
    if (t <= 0.5 * T) {
      cycles = fs * t + 2.0 * D * t * t * t / (3.0 * T * T);
    } else {
      const double w = 1.0 - t / T;
      cycles = fs * 0.5 * T + D * T / 12.0 + fe * (t - 0.5 * T) + 2.0 * D * T / 3.0 * (w * w * w - 0.125);
    }
    return start_phase + kTwoPi * cycles;
  }

  double phase_at(double t) const { return wrap_phase(unwrapped_phase_at(t)); }

  double amplitude_at(double t) const {
    if (!amplitude_map) return 1.0;
    return (*amplitude_map)(frequency_at(t));
  }

  /// Baseband sample of this tone at time t since the sweep began.
  std::complex<double> sample(double t) const { return std::polar(amplitude_at(t), unwrapped_phase_at(t)); }

  friend bool operator==(const SweepPlan& a, const SweepPlan& b) {
    return a.start_hz == b.start_hz && a.end_hz == b.end_hz && a.duration == b.duration &&
           a.start_phase == b.start_phase && a.end_phase == b.end_phase && a.reference_hz == b.reference_hz &&
           a.amplitude_map == b.amplitude_map;
  }
};

/// Plans one sweep. The duration is the closest to base_duration for which the tone
/// arrives with target_phase; the mean frequency of the symmetric trajectory is the
/// midpoint, so the accumulated phase is 2pi T (mean - reference).
inline SweepPlan plan_sweep(const SweepRequest& req, std::shared_ptr<const AmplitudeMap> amp_map = nullptr) {
  if (!(req.base_duration > 0.0)) throw std::invalid_argument("sweep duration must be positive");
  SweepPlan plan;
  plan.start_hz = req.start_hz;
  plan.end_hz = req.end_hz;
  plan.start_phase = wrap_phase(req.start_phase);
  plan.reference_hz = req.reference_hz;
  plan.amplitude_map = std::move(amp_map);
  if (plan.identity()) {
    plan.end_phase = plan.start_phase;
    return plan;
  }

  const double mean_offset =
      0.5 * static_cast<double>(req.start_hz + req.end_hz) - static_cast<double>(req.reference_hz);
  const double delta = wrap_phase(req.target_phase - plan.start_phase) / kTwoPi;  // cycles in [0, 1)
  double T;
  if (mean_offset == 0.0) {
    if (delta > 1e-12 && delta < 1.0 - 1e-12) throw SweepUnreachable(std::numeric_limits<double>::infinity(), req.base_duration);
    T = req.base_duration;
  } else {
    const double m = std::round(req.base_duration * mean_offset - delta);
    T = (delta + m) / mean_offset;
    if (!(T > 0.0) || std::abs(T - req.base_duration) > req.max_stretch * req.base_duration)
      throw SweepUnreachable(T, req.base_duration);
  }
  plan.duration = T;
  plan.end_phase = plan.phase_at(T);
  return plan;
}

/// Precomputed sweeps between every pair of sites; entry (i, j) moves the tone of
/// site i onto site j.
class SweepTable {
 public:
  SweepTable(std::size_t sites, std::vector<SweepPlan> plans) : sites_(sites), plans_(std::move(plans)) {}

  std::size_t sites() const { return sites_; }
  std::size_t size() const { return plans_.size(); }
  const SweepPlan& at(std::size_t from, std::size_t to) const {
    if (from >= sites_ || to >= sites_) throw std::out_of_range("sweep table index out of range");
    return plans_[from * sites_ + to];
  }
  const std::vector<SweepPlan>& plans() const { return plans_; }

 private:
  std::size_t sites_;
  std::vector<SweepPlan> plans_;
};

inline SweepRequest site_sweep_request(const TrapLattice& lattice, std::span<const double> phases, std::size_t from,
                                       std::size_t to, double base_duration = kBaseSweepDuration) {
  SweepRequest req;
  req.start_hz = site_frequency(lattice, from);
  req.end_hz = site_frequency(lattice, to);
  req.start_phase = phases[from];
  req.target_phase = phases[to];
  req.base_duration = base_duration;
  return req;
}

inline SweepTable sweep_table(const TrapLattice& lattice, std::shared_ptr<const AmplitudeMap> amp_map,
                              std::span<const double> phases, double base_duration = kBaseSweepDuration) {
  const std::size_t n = lattice.col_axis().sites;
  if (lattice.is_2d()) throw std::invalid_argument("sweep table expects a 1D lattice");
  if (phases.size() != n) throw std::invalid_argument("one phase per site required");
  std::vector<SweepPlan> plans;
  plans.reserve(n * n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j)
      plans.push_back(plan_sweep(site_sweep_request(lattice, phases, i, j, base_duration), amp_map));
  return SweepTable(n, std::move(plans));
}

}  // namespace atomweaver
