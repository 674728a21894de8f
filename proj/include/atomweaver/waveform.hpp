#pragma once

#include <algorithm>
#include <bit>
#include <cmath>
#include <complex>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <numbers>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "atomweaver/lattice.hpp"

namespace atomweaver {

inline constexpr Hz kUpconversionHz = 74'000'000;
inline constexpr Hz kSampleRateHz = 100'000'000;
inline constexpr double kTwoPi = 2.0 * std::numbers::pi;

/// Maps any angle onto [0, 2pi).
inline double wrap_phase(double phi) {
  double w = std::fmod(phi, kTwoPi);
  if (w < 0.0) w += kTwoPi;
  if (w >= kTwoPi) w = 0.0;
  return w;
}

struct Tone {
  double amplitude = 1.0;
  double phase = 0.0;
  Hz freq_hz = 0;

  std::complex<double> phasor() const { return std::polar(amplitude, phase); }
};

/// Tones streamed to the generator. Each tone is synthesized at baseband
/// (freq_hz - upconversion_hz) and must stay inside the complex Nyquist band.
struct ToneSet {
  std::vector<Tone> tones;
  Hz upconversion_hz = kUpconversionHz;
  Hz sample_rate_hz = kSampleRateHz;

  void validate() const {
    if (sample_rate_hz <= 0) throw std::invalid_argument("sample rate must be positive");
    std::vector<Hz> freqs;
    for (const auto& t : tones) {
      if (!(t.amplitude >= 0.0)) throw std::invalid_argument("tone amplitude must be >= 0");
      const Hz base = t.freq_hz - upconversion_hz;
      if (2 * base >= sample_rate_hz || 2 * base < -sample_rate_hz)
        throw std::invalid_argument("tone at " + std::to_string(t.freq_hz) +
                                    " Hz violates Nyquist for the sample rate");
      freqs.push_back(t.freq_hz);
    }
    std::sort(freqs.begin(), freqs.end());
    if (std::adjacent_find(freqs.begin(), freqs.end()) != freqs.end())
      throw std::invalid_argument("tone frequencies must be distinct");
  }

  std::vector<Hz> frequencies() const {
    std::vector<Hz> f;
    for (const auto& t : tones) f.push_back(t.freq_hz);
    return f;
  }
  std::vector<double> amplitudes() const {
    std::vector<double> a;
    for (const auto& t : tones) a.push_back(t.amplitude);
    return a;
  }
  std::vector<double> phases() const {
    std::vector<double> p;
    for (const auto& t : tones) p.push_back(t.phase);
    return p;
  }
};

/// One tone per lattice site with unit amplitude and the given (or zero) phases.
inline ToneSet tone_set_for(const TrapLattice& lattice, std::span<const double> phases = {},
                            std::span<const double> amplitudes = {}) {
  const AxisComb& axis = lattice.col_axis();
  if (!phases.empty() && phases.size() != axis.sites) throw std::invalid_argument("one phase per site");
  if (!amplitudes.empty() && amplitudes.size() != axis.sites)
    throw std::invalid_argument("one amplitude per site");
  ToneSet ts;
  for (std::size_t i = 0; i < axis.sites; ++i)
    ts.tones.push_back({amplitudes.empty() ? 1.0 : amplitudes[i], phases.empty() ? 0.0 : wrap_phase(phases[i]),
                        axis.frequency(i)});
  return ts;
}

/// Sample k of sum_i A_i exp(i phi_i) exp(i 2pi (f_i - f_up) k / fs). Phase arguments
/// are reduced with integer arithmetic, so sample k + fs/1kHz equals sample k exactly
/// whenever all offsets are multiples of 1 kHz.
inline std::complex<double> sample_at(const ToneSet& ts, std::int64_t k) {
  std::complex<double> acc{0.0, 0.0};
  const Hz fs = ts.sample_rate_hz;
  for (const auto& t : ts.tones) {
    Hz base = t.freq_hz - ts.upconversion_hz;
    Hz cycles = (base % fs) * (k % fs) % fs;
    if (cycles < 0) cycles += fs;
    const double arg = t.phase + kTwoPi * static_cast<double>(cycles) / static_cast<double>(fs);
    acc += std::polar(t.amplitude, arg);
  }
  return acc;
}

inline std::size_t samples_for(const ToneSet& ts, double duration) {
  const double exact = duration * static_cast<double>(ts.sample_rate_hz);
  const double rounded = std::round(exact);
  if (duration < 0.0 || std::abs(exact - rounded) > 1e-6)
    throw std::invalid_argument("duration must be a non-negative multiple of the sample period");
  return static_cast<std::size_t>(rounded);
}

inline std::vector<std::complex<double>> synthesize(const ToneSet& ts, double duration) {
  ts.validate();
  const std::size_t n = samples_for(ts, duration);
  std::vector<std::complex<double>> buf(n);
  for (std::size_t k = 0; k < n; ++k) buf[k] = sample_at(ts, static_cast<std::int64_t>(k));
  return buf;
}

/// Mixer products of a tone set with unit mixer coefficients.
/// Order 2: for each pair (a, b) with f_a > f_b, a difference tone at f_a - f_b
/// (phase phi_a - phi_b) and a sum tone at f_a + f_b (phase phi_a + phi_b), amplitude A_a A_b.
/// Order 3: each pair's difference tone mixed with the pair's own tones, giving
/// 2f_a - f_b, f_b, f_a and 2f_b - f_a.
inline std::vector<Tone> intermod_products(const ToneSet& ts, int order) {
  if (order != 2 && order != 3) throw std::invalid_argument("intermodulation order must be 2 or 3");
  std::vector<Tone> out;
  const auto& t = ts.tones;
  for (std::size_t i = 0; i < t.size(); ++i) {
    for (std::size_t j = i + 1; j < t.size(); ++j) {
      const Tone& a = t[i].freq_hz > t[j].freq_hz ? t[i] : t[j];
      const Tone& b = t[i].freq_hz > t[j].freq_hz ? t[j] : t[i];
      const double ab = a.amplitude * b.amplitude;
      if (order == 2) {
        out.push_back({ab, wrap_phase(a.phase - b.phase), a.freq_hz - b.freq_hz});
        out.push_back({ab, wrap_phase(a.phase + b.phase), a.freq_hz + b.freq_hz});
      } else {
        const double aab = a.amplitude * ab, abb = ab * b.amplitude;
        out.push_back({aab, wrap_phase(2.0 * a.phase - b.phase), 2 * a.freq_hz - b.freq_hz});
        out.push_back({aab, wrap_phase(b.phase), b.freq_hz});
        out.push_back({abb, wrap_phase(a.phase), a.freq_hz});
        out.push_back({abb, wrap_phase(2.0 * b.phase - a.phase), 2 * b.freq_hz - a.freq_hz});
      }
    }
  }
  return out;
}

/// Products falling on the same frequency add as phasors.
inline std::map<Hz, std::complex<double>> coherent_sum(const std::vector<Tone>& tones) {
  std::map<Hz, std::complex<double>> field;
  for (const auto& t : tones) field[t.freq_hz] += t.phasor();
  return field;
}

namespace detail {

inline void put_le(std::ostream& os, std::uint64_t v, int bytes) {
  for (int i = 0; i < bytes; ++i) os.put(static_cast<char>((v >> (8 * i)) & 0xffu));
}

inline std::uint64_t get_le(std::istream& is, int bytes) {
  std::uint64_t v = 0;
  for (int i = 0; i < bytes; ++i) {
    const int c = is.get();
    if (c == std::char_traits<char>::eof()) throw std::runtime_error("truncated waveform file");
    v |= static_cast<std::uint64_t>(static_cast<unsigned char>(c)) << (8 * i);
  }
  return v;
}

}  // namespace detail

/// Binary layout: u64 LE sample count, then interleaved (re, im) f32 LE pairs.
inline void write_waveform_binary(const std::filesystem::path& path,
                                  std::span<const std::complex<double>> samples) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("cannot open " + path.string() + " for writing");
  detail::put_le(os, samples.size(), 8);
  for (const auto& s : samples) {
    detail::put_le(os, std::bit_cast<std::uint32_t>(static_cast<float>(s.real())), 4);
    detail::put_le(os, std::bit_cast<std::uint32_t>(static_cast<float>(s.imag())), 4);
  }
  if (!os) throw std::runtime_error("failed writing " + path.string());
}

inline std::vector<std::complex<float>> read_waveform_binary(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("cannot open " + path.string());
  const std::uint64_t n = detail::get_le(is, 8);
  std::vector<std::complex<float>> out;
  out.reserve(n);
  for (std::uint64_t k = 0; k < n; ++k) {
    const float re = std::bit_cast<float>(static_cast<std::uint32_t>(detail::get_le(is, 4)));
    const float im = std::bit_cast<float>(static_cast<std::uint32_t>(detail::get_le(is, 4)));
    out.emplace_back(re, im);
  }
  return out;
}

}  // namespace atomweaver
