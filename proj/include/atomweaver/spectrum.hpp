#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <filesystem>
#include <fstream>
#include <span>
#include <stdexcept>
#include <vector>

#include <fftw3.h>

#include "atomweaver/csv.hpp"
#include "atomweaver/lattice.hpp"

namespace atomweaver {

struct SpectrumBin {
  double freq_hz = 0.0;  // RF frequency (baseband offset + upconversion)
  double power_db = 0.0;
};

inline constexpr double kSpectrumFloorDb = -300.0;

/// Power per DFT bin, |X_k / N|^2 in dB, ordered by ascending frequency.
inline std::vector<SpectrumBin> power_spectrum(std::span<const std::complex<double>> samples, Hz sample_rate_hz,
                                               Hz upconversion_hz) {
  const std::size_t n = samples.size();
  if (n == 0) return {};
  std::vector<std::complex<double>> in(samples.begin(), samples.end()), out(n);
  fftw_plan plan = fftw_plan_dft_1d(static_cast<int>(n), reinterpret_cast<fftw_complex*>(in.data()),
                                    reinterpret_cast<fftw_complex*>(out.data()), FFTW_FORWARD, FFTW_ESTIMATE);
  if (plan == nullptr) throw std::runtime_error("FFTW plan creation failed");
  fftw_execute(plan);
  fftw_destroy_plan(plan);

  const double nn = static_cast<double>(n);
  const double df = static_cast<double>(sample_rate_hz) / nn;
  std::vector<SpectrumBin> bins(n);
  // Negative frequencies first.
  const std::size_t half = (n + 1) / 2;
  for (std::size_t j = 0; j < n; ++j) {
    const std::size_t k = (j + half) % n;
    const double f = (k < half ? static_cast<double>(k) : static_cast<double>(k) - nn) * df;
    const double p = std::norm(out[k] / nn);
    bins[j] = {f + static_cast<double>(upconversion_hz),
               p > 0.0 ? std::max(kSpectrumFloorDb, 10.0 * std::log10(p)) : kSpectrumFloorDb};
  }
  return bins;
}

inline void write_spectrum_csv(const std::filesystem::path& path, const std::vector<SpectrumBin>& bins) {
  CsvTable csv({"frequency_hz", "power_db"});
  for (const auto& b : bins) csv.row(b.freq_hz, b.power_db);
  csv.save(path);
}

}  // namespace atomweaver
