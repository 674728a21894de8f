#pragma once

#include <cstddef>
#include <stdexcept>

namespace atomweaver {

/// Additive budget of one measurement-and-feedback cycle, in seconds.
/// Defaults reproduce the 1D experiment.
struct TimingParams {
  double exposure = 20e-3;
  double transfer_base = 9e-3;
  double transfer_per_row = 0.8e-3;
  double analysis = 0.5e-3;
  double waveform_per_sweep = 0.2e-3;
  double move_per_sweep_set = 3e-3;
  double buffer = 7e-3;
  double cycle_period = 200e-3;
  double repair_period = 100e-3;
  double rearrange_period = 50e-3;

  void validate() const {
    for (double v : {exposure, transfer_base, transfer_per_row, analysis, waveform_per_sweep,
                     move_per_sweep_set, buffer, cycle_period, repair_period, rearrange_period})
      if (!(v >= 0.0)) throw std::invalid_argument("timing parameters must be >= 0");
  }
};

inline double feedback_duration(const TimingParams& p, std::size_t n_sweeps, std::size_t n_sweep_sets,
                                std::size_t n_rows) {
  return p.exposure + p.transfer_base + p.transfer_per_row * static_cast<double>(n_rows) + p.analysis +
         p.waveform_per_sweep * static_cast<double>(n_sweeps) +
         p.move_per_sweep_set * static_cast<double>(n_sweep_sets) + p.buffer;
}

/// Mean time to the first success when each cycle succeeds with probability p_success.
inline double wait_time(double p_success, double cycle) {
  if (!(p_success > 0.0 && p_success <= 1.0))
    throw std::domain_error("wait time undefined for success probability outside (0, 1]");
  return cycle / p_success;
}

}  // namespace atomweaver
