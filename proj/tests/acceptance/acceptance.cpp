// One PASS/FAIL line per acceptance criterion. Exit status is the number of failures.

#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iterator>
#include <memory>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "atomweaver/atomweaver.hpp"

using namespace atomweaver;
namespace fs = std::filesystem;

namespace {

struct Verdict {
  bool pass = true;
  std::string detail;

  void check(bool ok, const std::string& what) {
    if (!ok) {
      pass = false;
      detail += (detail.empty() ? "" : "; ") + ("failed: " + what);
    }
  }
  void note(const std::string& what) { detail += (detail.empty() ? "" : "; ") + what; }
};

std::string fmt(const char* f, double a) {
  char buf[128];
  std::snprintf(buf, sizeof buf, f, a);
  return buf;
}

std::string fmt(const char* f, double a, double b) {
  char buf[160];
  std::snprintf(buf, sizeof buf, f, a, b);
  return buf;
}

double binomial_se(double p, std::size_t n) { return std::sqrt(p * (1.0 - p) / static_cast<double>(n)); }

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

MCConfig paper_config(std::size_t trials) {
  MCConfig cfg;
  cfg.trials = trials;
  cfg.seed = 42;
  return cfg;
}

Verdict criterion1() {
  Verdict v;
  const auto t0 = std::chrono::steady_clock::now();
  const auto r = simulate_single_cycle(paper_config(100'000));
  const double elapsed = seconds_since(t0);
  for (std::size_t N : {1u, 5u, 10u, 20u}) {
    const double p = std::pow(0.6, static_cast<double>(N));
    const double z = (r.pre[N].estimate - p) / binomial_se(p, 100'000);
    v.check(std::abs(z) <= 3.0, "N=" + std::to_string(N));
    v.note("N=" + std::to_string(N) + fmt(" z=%+.2f", z));
  }
  v.check(elapsed < 10.0, "runtime");
  v.note(fmt("%.2f s", elapsed));
  return v;
}

Verdict criterion2() {
  Verdict v;
  const MCConfig cfg;
  const auto p50 = theory_curves(cfg, 50);
  v.check(std::abs(p50.dashed - std::exp(-50.0 * 0.05 / 6.2)) <= 1e-6, "dashed formula");
  v.check(std::abs(p50.dashed - 0.668) <= 5e-4, "dashed = 0.668");
  v.note(fmt("dashed(50)=%.6f", p50.dashed));
  // Tail of Binomial(100, 0.6) evaluated independently.
  const std::pair<std::size_t, double> tails[] = {{30, 0.9999999996535784}, {40, 0.9999819585375692},
                                                  {50, 0.9832383134968385}, {55, 0.8689095473802523},
                                                  {60, 0.54329448588207},   {70, 0.02478282311649308}};
  for (auto [N, expected] : tails)
    v.check(std::abs(theory_curves(cfg, N).solid - expected) <= 1e-12, "solid N=" + std::to_string(N));
  bool product = true;
  for (std::size_t N = 0; N <= 100; ++N) {
    const auto p = theory_curves(cfg, N);
    product &= std::abs(p.dashdot - p.solid * p.dashed) <= 1e-15;
  }
  v.check(product, "dashdot = solid * dashed");
  v.note(fmt("dashdot(50)=%.6f", p50.dashdot));
  return v;
}

Verdict criterion3() {
  Verdict v;
  const auto t0 = std::chrono::steady_clock::now();
  const Scenario s = preset("fig3");
  const auto r = simulate_single_cycle(s.mc);
  const double elapsed = seconds_since(t0);
  double worst = 0.0;
  std::size_t worst_n = 0;
  for (std::size_t N = 1; N <= 60; ++N) {
    const double p = theory_curves(s.mc, N).dashdot;
    const double z = std::abs(r.post[N].estimate - p) / binomial_se(p, s.mc.trials);
    if (z > worst) {
      worst = z;
      worst_n = N;
    }
  }
  v.check(worst <= 3.0, "agreement with dashdot");
  v.note("max |z|=" + fmt("%.2f", worst) + " at N=" + std::to_string(worst_n));
  v.check(0.75 <= r.post[30].estimate, "measured p_30 at or below curve");
  v.check(0.53 <= r.post[50].estimate, "measured p_50 at or below curve");
  v.note(fmt("sim p_30=%.4f p_50=%.4f", r.post[30].estimate, r.post[50].estimate));
  v.check(elapsed < 30.0, "runtime");
  v.note(fmt("%.2f s", elapsed));
  return v;
}

Verdict criterion4() {
  Verdict v;
  const double w = wait_time(0.53, 0.2);
  v.check(w == 0.2 / 0.53, "exact quotient");
  v.check(std::round(w * 1e4) / 10.0 == 377.4, "377.4 ms");
  v.check(w < 0.4, "below 400 ms");
  v.note(fmt("wait=%.4f ms", w * 1e3));
  return v;
}

Verdict criterion5() {
  Verdict v;
  MCConfig cfg = paper_config(10'000);
  cfg.loss.tau = 10.0;
  const auto off = simulate_maintenance(cfg, 20, false, 30.0);
  const double p = std::exp(-0.2);
  const double z = (off.survival.at(0).estimate - p) / binomial_se(p, off.valid_trials);
  v.check(std::abs(z) <= 3.0, "100 ms survival");
  v.note(fmt("S(100ms)=%.4f z=%+.2f", off.survival[0].estimate, z));
  const double rel = std::abs(off.lifetime.estimate - 0.5) / 0.5;
  v.check(rel <= 0.10, "time to first defect");
  v.note(fmt("T_first=%.4f s (%.1f%% off tau/N)", off.lifetime.estimate, 100.0 * rel));

  const Scenario s = preset("fig4d");
  const auto on20 = simulate_maintenance(s.mc, 20, true, s.duration);
  const auto on40 = simulate_maintenance(s.mc, 40, true, s.duration);
  v.check(on20.lifetime.estimate >= 4.0 && on20.lifetime.estimate <= 12.0, "N=20 maintained lifetime");
  v.check(on40.lifetime.estimate >= 1.0 && on40.lifetime.estimate <= 3.0, "N=40 maintained lifetime");
  v.note(fmt("repair N=20 %.2f s, N=40 %.2f s", on20.lifetime.estimate, on40.lifetime.estimate));
  v.note(fmt("p_load=%.2f (%.0f atoms loaded on average)", s.mc.loading.p_load, 100.0 * s.mc.loading.p_load));
  return v;
}

Verdict criterion6() {
  Verdict v;
  const auto t0 = std::chrono::steady_clock::now();
  auto best_of = [](const char* name) {
    const Scenario s = preset(name);
    Options2D opt;
    opt.method = s.kind == ExperimentKind::method1_2d ? Method2D::row_col_deletion : Method2D::row_by_row;
    const auto points = simulate_2d_sweep(s.mc, s.grid_rows, s.grid_cols, opt);
    const GridPoint2D* best = &points.front();
    for (const auto& pt : points)
      if (pt.expected_atoms.estimate > best->expected_atoms.estimate) best = &pt;
    return *best;
  };
  const auto m1_low = best_of("figS5a"), m1_high = best_of("figS5b");
  const auto m2_low = best_of("figS5c"), m2_high = best_of("figS5d");
  const double low = std::max(m1_low.expected_atoms.estimate, m2_low.expected_atoms.estimate);
  const double high = std::max(m1_high.expected_atoms.estimate, m2_high.expected_atoms.estimate);
  const double elapsed = seconds_since(t0);
  v.check(low > 160.0, "p=0.6 tau=10 s best > 160");
  v.check(high > 600.0, "p=0.9 tau=60 s best > 600");
  v.check(elapsed < 600.0, "runtime");
  auto describe = [](const char* tag, const GridPoint2D& g) {
    return std::string(tag) + " " + std::to_string(g.rows) + "x" + std::to_string(g.cols) +
           fmt("=%.1f", g.expected_atoms.estimate);
  };
  v.note(describe("M1(0.6)", m1_low) + " " + describe("M2(0.6)", m2_low) + " " + describe("M1(0.9)", m1_high) +
         " " + describe("M2(0.9)", m2_high));
  v.note(fmt("%.1f s", elapsed));
  return v;
}

// Every defect is removed with its row or its column; pick the best assignment.
std::size_t brute_force_product(const Occupancy& g) {
  std::vector<std::pair<std::size_t, std::size_t>> defects;
  for (std::size_t r = 0; r < g.rows(); ++r)
    for (std::size_t c = 0; c < g.cols(); ++c)
      if (!g.at(r, c)) defects.emplace_back(r, c);
  std::size_t best = 0;
  for (std::uint64_t a = 0; a < (std::uint64_t{1} << defects.size()); ++a) {
    std::set<std::size_t> rows, cols;
    for (std::size_t k = 0; k < defects.size(); ++k) {
      if ((a >> k) & 1u) rows.insert(defects[k].first);
      else cols.insert(defects[k].second);
    }
    best = std::max(best, (g.rows() - rows.size()) * (g.cols() - cols.size()));
  }
  return best;
}

Verdict criterion7() {
  Verdict v;
  std::size_t mismatches = 0, greedy_worse = 0, greedy_above = 0;
  for (std::uint64_t t = 0; t < 1000; ++t) {
    RngStream rng(7000, t);
    const std::size_t rows = 1 + static_cast<std::size_t>(rng.uniform() * 4);
    const std::size_t cols = 1 + static_cast<std::size_t>(rng.uniform() * 4);
    const double p = rng.uniform();
    Occupancy g(rows, cols);
    for (std::size_t i = 0; i < g.size(); ++i) g.set(i, rng.bernoulli(p));
    const auto exact = exact_row_col_cover(g).product();
    const auto greedy = greedy_row_col_cover(g).product();
    mismatches += exact != brute_force_product(g);
    greedy_above += greedy > exact;
    greedy_worse += greedy < exact;
  }
  v.check(mismatches == 0, "exact == brute force");
  v.check(greedy_above == 0, "greedy <= exact");
  v.note("1000 grids, " + std::to_string(mismatches) + " mismatches, greedy strictly worse on " +
         std::to_string(greedy_worse));
  return v;
}

Verdict criterion8() {
  Verdict v;
  const auto ts = tone_set_for(default_lattice_1d());
  const auto buf = synthesize(ts, 1e-3);
  double peak = 0.0;
  for (const auto& s : buf) peak = std::max(peak, std::abs(s));
  const double mismatch = std::abs(sample_at(ts, static_cast<std::int64_t>(buf.size())) - buf.front()) / peak;
  v.check(mismatch < 1e-9, "loop periodicity");
  v.note(fmt("loop mismatch %.2e of peak", mismatch));

  const std::vector<Hz> freqs = ts.frequencies();
  const std::vector<double> amps(freqs.size(), 1.0), equal(freqs.size(), 0.0);
  RngStream rng(42, 0);
  const auto opt = optimize_phases(freqs, amps, rng);
  const double db = 10.0 * std::log10(imd_objective(equal, amps, freqs) / opt.final_objective);
  v.check(db >= 20.0, "20 dB suppression");
  v.note(fmt("suppression %.1f dB", db));

  double worst = 0.0;
  const std::vector<Hz> three(freqs.begin(), freqs.begin() + 3);
  for (double A : {0.5, 1.0, 1.7}) {
    const std::vector<double> a(3, A);
    for (std::uint64_t s = 0; s < 10; ++s) {
      RngStream r(s, 3);
      worst = std::max(worst, std::abs(optimize_phases(three, a, r).final_objective / std::pow(A, 4) - 1.0));
    }
  }
  v.check(worst <= 1e-6, "n=3 optimum A^4");
  v.note(fmt("n=3 rel error %.1e", worst));
  return v;
}

Verdict criterion9() {
  Verdict v;
  const AxisComb axis;
  auto map = std::make_shared<const AmplitudeMap>(AmplitudeMap::uniform(axis));
  RngStream rng(9000, 0);
  double worst_phase = 0.0, worst_stretch = 0.0, worst_jump = 0.0;
  bool endpoints = true, midpoint = true;
  for (int k = 0; k < 100; ++k) {
    SweepRequest req;
    req.start_hz = axis.frequency(static_cast<std::size_t>(rng.uniform() * 100));
    do req.end_hz = axis.frequency(static_cast<std::size_t>(rng.uniform() * 100));
    while (req.end_hz == req.start_hz);
    req.start_phase = kTwoPi * rng.uniform();
    req.target_phase = kTwoPi * rng.uniform();
    const auto p = plan_sweep(req, map);
    endpoints &= p.frequency_at(0.0) == static_cast<double>(req.start_hz) &&
                 p.frequency_at(p.duration) == static_cast<double>(req.end_hz);
    midpoint &= p.frequency_at(0.5 * p.duration) == 0.5 * static_cast<double>(req.start_hz + req.end_hz);
    const double d = wrap_phase(p.phase_at(p.duration) - req.target_phase);
    worst_phase = std::max(worst_phase, std::min(d, kTwoPi - d));
    worst_stretch = std::max(worst_stretch, std::abs(p.duration - req.base_duration) / req.base_duration);
    // Largest frequency step relative to the sweep span on a 10^4-point grid.
    const int steps = 10'000;
    for (int i = 1; i <= steps; ++i) {
      const double t1 = p.duration * i / steps, t0 = p.duration * (i - 1) / steps;
      worst_jump = std::max(worst_jump, std::abs(p.frequency_at(t1) - p.frequency_at(t0)) / std::abs(p.span_hz()));
    }
  }
  v.check(endpoints, "endpoint frequencies exact");
  v.check(midpoint, "midpoint = mean frequency");
  v.check(worst_phase <= 1e-6, "end phase");
  v.check(worst_stretch <= 0.01, "stretch <= 1%");
  // A continuous trajectory with peak slope 2 span / T moves at most 2e-4 of the span per step.
  v.check(worst_jump <= 2.0 / 10'000 + 1e-12, "continuity");
  v.note(fmt("max phase error %.1e rad, max stretch %.3f%%", worst_phase, 100.0 * worst_stretch));
  return v;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), {}};
}

Verdict criterion10() {
  Verdict v;
  const fs::path root = fs::temp_directory_path() / "atomweaver_acceptance_determinism";
  fs::remove_all(root);
  Scenario s = preset("fig3");
  s.mc.seed = 42;
  const auto a = run_scenario(s, root / "a");
  s.mc.threads = 1;  // different worker count must not matter
  run_scenario(s, root / "b");
  std::size_t compared = 0;
  for (const auto& f : a.files) {
    if (f.extension() != ".csv") continue;
    const auto name = f.filename();
    const std::string x = slurp(root / "a" / name), y = slurp(root / "b" / name);
    v.check(!x.empty() && x == y, name.string() + " identical");
    ++compared;
  }
  v.check(compared > 0, "files written");
  v.note(std::to_string(compared) + " CSV files byte-identical");
  fs::remove_all(root);
  return v;
}

}  // namespace

int main() {
  const std::vector<std::pair<const char*, std::function<Verdict()>>> criteria = {
      {"pre-rearrangement p_N = p^N", criterion1},
      {"theory curves", criterion2},
      {"post-rearrangement vs product model", criterion3},
      {"wait time for 50 atoms", criterion4},
      {"maintenance lifetimes", criterion5},
      {"2D projections", criterion6},
      {"row/column cover optimality", criterion7},
      {"waveform properties", criterion8},
      {"sweep properties", criterion9},
      {"determinism", criterion10},
  };
  int failures = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    Verdict v;
    try {
      v = criteria[i].second();
    } catch (const std::exception& e) {
      v.pass = false;
      v.detail = std::string("exception: ") + e.what();
    }
    failures += v.pass ? 0 : 1;
    std::printf("%s criterion %zu (%s): %s\n", v.pass ? "PASS" : "FAIL", i + 1, criteria[i].first, v.detail.c_str());
    std::fflush(stdout);
  }
  return failures;
}
