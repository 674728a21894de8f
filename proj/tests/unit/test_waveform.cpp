#include <cmath>
#include <complex>
#include <filesystem>
#include <vector>

#include <gtest/gtest.h>

#include "atomweaver/spectrum.hpp"
#include "atomweaver/stochastic.hpp"
#include "atomweaver/waveform.hpp"

using namespace atomweaver;

namespace {

ToneSet single_tone(Hz offset_hz, double amp = 1.0, double phase = 0.0) {
  ToneSet ts;
  ts.tones.push_back({amp, phase, kUpconversionHz + offset_hz});
  return ts;
}

double peak(const std::vector<std::complex<double>>& buf) {
  double m = 0.0;
  for (const auto& s : buf) m = std::max(m, std::abs(s));
  return m;
}

}  // namespace

TEST(Synthesize, SingleToneOneCycle) {
  const auto buf = synthesize(single_tone(1000), 1e-3);
  ASSERT_EQ(buf.size(), 100000u);
  EXPECT_EQ(buf[0], std::complex<double>(1.0, 0.0));
  EXPECT_NEAR(buf[25000].real(), 0.0, 1e-12);
  EXPECT_NEAR(buf[25000].imag(), 1.0, 1e-12);
  EXPECT_NEAR(buf[50000].real(), -1.0, 1e-12);
}

TEST(Synthesize, TwoTonesAddInPhase) {
  ToneSet ts = single_tone(3000);
  ts.tones.push_back({1.0, 0.0, kUpconversionHz + 5000});
  const auto buf = synthesize(ts, 1e-3);
  EXPECT_NEAR(peak(buf), 2.0, 1e-12);
  EXPECT_NEAR(std::abs(buf[0]), 2.0, 1e-12);
}

TEST(Synthesize, PaperCombLoopsSeamlessly) {
  const auto ts = tone_set_for(default_lattice_1d());
  const auto buf = synthesize(ts, 1e-3);
  ASSERT_EQ(buf.size(), 100000u);
  // The sample after the last one equals the first.
  const auto next = sample_at(ts, static_cast<std::int64_t>(buf.size()));
  EXPECT_LT(std::abs(next - buf[0]), 1e-9 * peak(buf));
  EXPECT_NEAR(std::abs(buf[0]), 100.0, 1e-9);
}

TEST(Synthesize, ParsevalIntegerCycles) {
  RngStream rng(4, 0);
  std::vector<double> phases(100), amps(100);
  for (std::size_t i = 0; i < 100; ++i) {
    phases[i] = kTwoPi * rng.uniform();
    amps[i] = 0.5 + rng.uniform();
  }
  const auto ts = tone_set_for(default_lattice_1d(), phases, amps);
  const auto buf = synthesize(ts, 1e-3);
  double power = 0.0, expected = 0.0;
  for (const auto& s : buf) power += std::norm(s);
  power /= static_cast<double>(buf.size());
  for (double a : amps) expected += a * a;
  EXPECT_NEAR(power / expected, 1.0, 1e-9);

  const auto bins = power_spectrum(buf, ts.sample_rate_hz, ts.upconversion_hz);
  double spec_power = 0.0;
  for (const auto& b : bins) spec_power += std::pow(10.0, b.power_db / 10.0);
  EXPECT_NEAR(spec_power / expected, 1.0, 1e-9);
}

TEST(Synthesize, RejectsInvalidSets) {
  EXPECT_THROW(synthesize(single_tone(50'000'000), 1e-3), std::invalid_argument);
  EXPECT_NO_THROW(synthesize(single_tone(-50'000'000), 1e-6));
  ToneSet dup = single_tone(1000);
  dup.tones.push_back(dup.tones.front());
  EXPECT_THROW(synthesize(dup, 1e-3), std::invalid_argument);
  EXPECT_THROW(synthesize(single_tone(1000), 1.5e-9), std::invalid_argument);
  EXPECT_THROW(synthesize(single_tone(1000, -1.0), 1e-3), std::invalid_argument);
}

TEST(Spectrum, ToneLandsInItsBin) {
  const auto buf = synthesize(single_tone(7000, 0.5), 1e-3);
  const auto bins = power_spectrum(buf, kSampleRateHz, kUpconversionHz);
  ASSERT_EQ(bins.size(), buf.size());
  std::size_t best = 0;
  for (std::size_t i = 1; i < bins.size(); ++i)
    if (bins[i].power_db > bins[best].power_db) best = i;
  EXPECT_DOUBLE_EQ(bins[best].freq_hz, static_cast<double>(kUpconversionHz + 7000));
  EXPECT_NEAR(bins[best].power_db, 10.0 * std::log10(0.25), 1e-9);
  EXPECT_DOUBLE_EQ(bins.front().freq_hz, static_cast<double>(kUpconversionHz - kSampleRateHz / 2));
  for (std::size_t i = 1; i < bins.size(); ++i) EXPECT_LT(bins[i - 1].freq_hz, bins[i].freq_hz);
  EXPECT_TRUE(power_spectrum({}, kSampleRateHz, kUpconversionHz).empty());
}

TEST(Intermod, DifferenceToneOfTwo) {
  ToneSet ts;
  ts.tones = {{1.0, 0.3, 90'000'000}, {2.0, 1.1, 80'000'000}};
  const auto prods = intermod_products(ts, 2);
  ASSERT_EQ(prods.size(), 2u);
  EXPECT_EQ(prods[0].freq_hz, 10'000'000);
  EXPECT_NEAR(prods[0].phase, wrap_phase(0.3 - 1.1), 1e-15);
  EXPECT_DOUBLE_EQ(prods[0].amplitude, 2.0);
  EXPECT_EQ(prods[1].freq_hz, 170'000'000);
  EXPECT_NEAR(prods[1].phase, 1.4, 1e-15);
}

TEST(Intermod, SingleToneHasNoCrossProducts) {
  EXPECT_TRUE(intermod_products(single_tone(1000), 2).empty());
  EXPECT_TRUE(intermod_products(single_tone(1000), 3).empty());
  EXPECT_THROW(intermod_products(single_tone(1000), 4), std::invalid_argument);
}

TEST(Intermod, ThirdOrderLandsOnComb) {
  const Hz f1 = 80'000'000, step = 490'000;
  ToneSet ts;
  ts.tones = {{1.0, 0.0, f1}, {1.0, 0.0, f1 + step}, {1.0, 0.0, f1 + 2 * step}};
  const auto field = coherent_sum(intermod_products(ts, 3));
  EXPECT_TRUE(field.count(f1 + 2 * step));
  EXPECT_TRUE(field.count(f1));
  EXPECT_TRUE(field.count(f1 - step));
  EXPECT_TRUE(field.count(f1 + 3 * step));
  // 2 f2 - f1 = f3 and 2 f2 - f3 = f1
  bool found = false;
  for (const auto& t : intermod_products(ts, 3)) found |= t.freq_hz == f1 + 2 * step;
  EXPECT_TRUE(found);
}

TEST(WaveformFile, RoundTrip) {
  const auto path = std::filesystem::temp_directory_path() / "atomweaver_roundtrip.bin";
  const std::vector<std::complex<double>> data{{1.0, -2.0}, {0.25, 3.5}, {-1e-3, 0.0}};
  write_waveform_binary(path, data);
  EXPECT_EQ(std::filesystem::file_size(path), 8u + data.size() * 8u);
  const auto back = read_waveform_binary(path);
  ASSERT_EQ(back.size(), data.size());
  for (std::size_t i = 0; i < data.size(); ++i) {
    EXPECT_EQ(back[i].real(), static_cast<float>(data[i].real()));
    EXPECT_EQ(back[i].imag(), static_cast<float>(data[i].imag()));
  }
  std::filesystem::remove(path);
}

TEST(WrapPhase, Range) {
  for (double x : {-100.0, -kTwoPi, -1e-18, 0.0, 1.0, kTwoPi, 1e6}) {
    const double w = wrap_phase(x);
    EXPECT_GE(w, 0.0);
    EXPECT_LT(w, kTwoPi);
  }
  EXPECT_EQ(wrap_phase(kTwoPi), 0.0);
}
