#pragma once

#include <cmath>
#include <complex>
#include <cstddef>
#include <limits>
#include <span>
#include <stdexcept>
#include <vector>

#include "atomweaver/lattice.hpp"
#include "atomweaver/stochastic.hpp"
#include "atomweaver/waveform.hpp"

namespace atomweaver {

namespace detail {

inline void require_even_comb(std::span<const Hz> frequencies, std::size_t n) {
  if (frequencies.size() != n) throw std::invalid_argument("one frequency per tone required");
  if (n < 3) return;
  const Hz step = frequencies[1] - frequencies[0];
  if (step == 0) throw std::invalid_argument("tone frequencies must be distinct");
  for (std::size_t i = 2; i < n; ++i)
    if (frequencies[i] - frequencies[i - 1] != step)
      throw std::invalid_argument("intermodulation objective requires an evenly spaced comb");
}

/// S_d = sum_i A_i A_{i+d} exp(i(phi_i - phi_{i+d})), d = 1..n-1 (index 0 unused).
inline std::vector<std::complex<double>> difference_fields(std::span<const double> phases,
                                                           std::span<const double> amplitudes) {
  const std::size_t n = phases.size();
  std::vector<std::complex<double>> s(n, {0.0, 0.0});
  for (std::size_t d = 1; d < n; ++d)
    for (std::size_t i = 0; i + d < n; ++i)
      s[d] += std::polar(amplitudes[i] * amplitudes[i + d], phases[i] - phases[i + d]);
  return s;
}

inline double field_power(const std::vector<std::complex<double>>& s) {
  double total = 0.0;
  for (std::size_t d = 1; d < s.size(); ++d) total += std::norm(s[d]);
  return total;
}

}  // namespace detail

/// Power of the difference tones of an evenly spaced comb: pair products sharing a
/// frequency offset add coherently, distinct offsets add in power.
inline double imd_objective(std::span<const double> phases, std::span<const double> amplitudes,
                            std::span<const Hz> frequencies) {
  if (phases.size() != amplitudes.size()) throw std::invalid_argument("phases and amplitudes differ in length");
  detail::require_even_comb(frequencies, phases.size());
  return detail::field_power(detail::difference_fields(phases, amplitudes));
}

struct PhaseOptimizerOptions {
  std::size_t max_sweeps = 100;
  double rel_tolerance = 1e-6;
  std::size_t grid_points = 32;  // coarse scan before golden-section refinement
};

struct PhaseOptimization {
  std::vector<double> phases;
  double initial_objective = 0.0;
  double final_objective = 0.0;
  std::vector<double> objective_per_sweep;  // entry 0 is the starting point
  std::size_t sweeps = 0;
};

/// Coordinate descent over the phases, starting from `initial`. With all other phases
/// fixed, the objective is c0 + 2 Re(P e^{i phi}) + 2 Re(Q e^{2i phi}); each phase is set
/// by a grid scan plus golden-section search on that expression, and only accepted if
/// it does not increase the objective.
inline PhaseOptimization optimize_phases_from(std::span<const Hz> frequencies, std::span<const double> amplitudes,
                                              std::vector<double> initial, const PhaseOptimizerOptions& opt = {}) {
  const std::size_t n = amplitudes.size();
  if (initial.size() != n) throw std::invalid_argument("one initial phase per tone required");
  detail::require_even_comb(frequencies, n);

  PhaseOptimization res;
  res.phases = std::move(initial);
  for (auto& p : res.phases) p = wrap_phase(p);
  auto s = detail::difference_fields(res.phases, amplitudes);
  res.initial_objective = detail::field_power(s);
  res.objective_per_sweep.push_back(res.initial_objective);
  double previous = res.initial_objective;

  std::vector<std::complex<double>> u(n), v(n);
  for (std::size_t sweep = 0; sweep < opt.max_sweeps && previous > 0.0; ++sweep) {
    for (std::size_t k = 0; k < n; ++k) {
      const std::complex<double> z_old = std::polar(1.0, res.phases[k]);
      std::complex<double> P{0.0, 0.0}, Q{0.0, 0.0};
      // S_d(phi) = B_d + u_d e^{i phi} + v_d e^{-i phi}
      for (std::size_t d = 1; d < n; ++d) {
        u[d] = k + d < n ? std::polar(amplitudes[k] * amplitudes[k + d], -res.phases[k + d]) : 0.0;
        v[d] = k >= d ? std::polar(amplitudes[k - d] * amplitudes[k], res.phases[k - d]) : 0.0;
        const std::complex<double> b = s[d] - u[d] * z_old - v[d] * std::conj(z_old);
        P += std::conj(b) * u[d] + b * std::conj(v[d]);
        Q += u[d] * std::conj(v[d]);
      }
      // Constant part is irrelevant for the argmin.
      auto f = [&](double phi) {
        const std::complex<double> z = std::polar(1.0, phi);
        return 2.0 * (P * z).real() + 2.0 * (Q * z * z).real();
      };

      const double step = kTwoPi / static_cast<double>(opt.grid_points);
      std::size_t best_j = 0;
      double best_f = std::numeric_limits<double>::infinity();
      for (std::size_t j = 0; j < opt.grid_points; ++j) {
        const double fj = f(step * static_cast<double>(j));
        if (fj < best_f) {
          best_f = fj;
          best_j = j;
        }
      }
      double lo = step * (static_cast<double>(best_j) - 1.0), hi = step * (static_cast<double>(best_j) + 1.0);
      const double inv_phi = (std::sqrt(5.0) - 1.0) / 2.0;
      double x1 = hi - inv_phi * (hi - lo), x2 = lo + inv_phi * (hi - lo);
      double f1 = f(x1), f2 = f(x2);
      while (hi - lo > 1e-12) {
        if (f1 < f2) {
          hi = x2;
          x2 = x1;
          f2 = f1;
          x1 = hi - inv_phi * (hi - lo);
          f1 = f(x1);
        } else {
          lo = x1;
          x1 = x2;
          f1 = f2;
          x2 = lo + inv_phi * (hi - lo);
          f2 = f(x2);
        }
      }
      const double candidate = wrap_phase(0.5 * (lo + hi));
      if (f(candidate) >= f(res.phases[k])) continue;

      const std::complex<double> z_new = std::polar(1.0, candidate);
      for (std::size_t d = 1; d < n; ++d) s[d] += u[d] * (z_new - z_old) + v[d] * (std::conj(z_new) - std::conj(z_old));
      res.phases[k] = candidate;
    }
    // Rebuild from scratch so incremental rounding never accumulates.
    s = detail::difference_fields(res.phases, amplitudes);
    const double current = detail::field_power(s);
    res.objective_per_sweep.push_back(current);
    ++res.sweeps;
    const double improvement = previous > 0.0 ? (previous - current) / previous : 0.0;
    previous = current;
    if (improvement < opt.rel_tolerance) break;
  }
  res.final_objective = previous;
  return res;
}

/// Coordinate descent from independent uniform random phases.
inline PhaseOptimization optimize_phases(std::span<const Hz> frequencies, std::span<const double> amplitudes,
                                         RngStream& rng, const PhaseOptimizerOptions& opt = {}) {
  std::vector<double> initial(amplitudes.size());
  for (auto& p : initial) p = kTwoPi * rng.uniform();
  return optimize_phases_from(frequencies, amplitudes, std::move(initial), opt);
}

}  // namespace atomweaver
