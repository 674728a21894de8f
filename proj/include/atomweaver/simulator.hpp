#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <vector>

#include "atomweaver/lattice.hpp"
#include "atomweaver/parallel.hpp"
#include "atomweaver/planner.hpp"
#include "atomweaver/statistics.hpp"
#include "atomweaver/stochastic.hpp"
#include "atomweaver/timing.hpp"

namespace atomweaver {

/// Monte Carlo experiment settings. Trial t always draws from RngStream(seed, t).
struct MCConfig {
  std::size_t trials = 10'000;
  std::uint64_t seed = 42;
  TrapLattice lattice = default_lattice_1d();
  LoadingModel loading;
  LossModel loss;
  TimingParams timing;
  unsigned threads = 0;

  void validate() const {
    if (trials < 1) throw std::invalid_argument("trials must be >= 1");
    loading.validate();
    loss.validate();
    timing.validate();
  }

  void require_1d() const {
    if (lattice.is_2d()) throw std::invalid_argument("scenario requires a 1D lattice");
  }
};

struct TrialOutcome {
  std::size_t initial_atoms = 0;
  Occupancy final_occupancy;
  std::size_t defect_free_length = 0;
  double elapsed = 0.0;
  std::size_t rearrangement_losses = 0;
};

/// One load -> compact -> lose -> image cycle on a 1D lattice.
inline TrialOutcome run_single_cycle_trial(const MCConfig& cfg, RngStream& rng) {
  const double pitch = cfg.lattice.col_axis().pitch_m;
  const Occupancy loaded = load(cfg.lattice, cfg.loading, rng);
  const MovePlan plan = plan_compaction_1d(loaded, pitch);
  const Occupancy moved = apply_plan(loaded, plan);
  const auto distances = plan.distance_per_site(moved.size());
  const double dt = cfg.timing.rearrange_period;
  TrialOutcome out;
  out.initial_atoms = loaded.count();
  out.final_occupancy = apply_loss(moved, cfg.loss, dt, distances, rng);
  out.defect_free_length = out.final_occupancy.leading_run();
  out.elapsed = dt;
  out.rearrangement_losses = out.initial_atoms - out.final_occupancy.count();
  return out;
}

/// Success curves before and after rearrangement, indexed by N = 0..sites, and the
/// per-site occupation probabilities.
struct SingleCycleResult {
  std::vector<EstimateWithCI> pre;
  std::vector<EstimateWithCI> post;
  std::vector<EstimateWithCI> pre_occupancy;
  std::vector<EstimateWithCI> post_occupancy;
};

inline SingleCycleResult simulate_single_cycle(const MCConfig& cfg) {
  cfg.validate();
  cfg.require_1d();
  const std::size_t n = cfg.lattice.size();

  struct Counts {
    std::vector<std::size_t> pre_run, post_run, pre_site, post_site;
  };
  const Counts init{std::vector<std::size_t>(n + 1, 0), std::vector<std::size_t>(n + 1, 0),
                    std::vector<std::size_t>(n, 0), std::vector<std::size_t>(n, 0)};
  const Counts total = reduce_trials(
      cfg.trials, cfg.threads, init,
      [&](std::size_t t, Counts& acc) {
        RngStream rng(cfg.seed, t);
        const double pitch = cfg.lattice.col_axis().pitch_m;
        const Occupancy loaded = load(cfg.lattice, cfg.loading, rng);
        const MovePlan plan = plan_compaction_1d(loaded, pitch);
        const Occupancy moved = apply_plan(loaded, plan);
        const Occupancy after =
            apply_loss(moved, cfg.loss, cfg.timing.rearrange_period, plan.distance_per_site(n), rng);
        ++acc.pre_run[loaded.leading_run()];
        ++acc.post_run[after.leading_run()];
        for (std::size_t i = 0; i < n; ++i) {
          acc.pre_site[i] += loaded[i];
          acc.post_site[i] += after[i];
        }
      },
      [](Counts& into, const Counts& from) {
        for (std::size_t i = 0; i < into.pre_run.size(); ++i) {
          into.pre_run[i] += from.pre_run[i];
          into.post_run[i] += from.post_run[i];
        }
        for (std::size_t i = 0; i < into.pre_site.size(); ++i) {
          into.pre_site[i] += from.pre_site[i];
          into.post_site[i] += from.post_site[i];
        }
      });

  SingleCycleResult res;
  // A run of length L is defect-free for every N <= L.
  std::size_t pre_at_least = 0, post_at_least = 0;
  res.pre.resize(n + 1);
  res.post.resize(n + 1);
  for (std::size_t N = n + 1; N-- > 0;) {
    pre_at_least += total.pre_run[N];
    post_at_least += total.post_run[N];
    res.pre[N] = EstimateWithCI::proportion(pre_at_least, cfg.trials);
    res.post[N] = EstimateWithCI::proportion(post_at_least, cfg.trials);
  }
  for (std::size_t i = 0; i < n; ++i) {
    res.pre_occupancy.push_back(EstimateWithCI::proportion(total.pre_site[i], cfg.trials));
    res.post_occupancy.push_back(EstimateWithCI::proportion(total.post_site[i], cfg.trials));
  }
  return res;
}

/// Analytic limits on post-rearrangement success: enough atoms loaded (solid),
/// no atom lost during rearrangement (dashed), and both (dashdot).
struct TheoryPoint {
  double solid = 1.0;
  double dashed = 1.0;
  double dashdot = 1.0;
};

inline TheoryPoint theory_curves(std::size_t N, const std::vector<double>& atom_count_pmf, double tau,
                                 double t_r) {
  if (!(tau > 0.0) || t_r < 0.0) throw std::invalid_argument("tau must be > 0 and t_r >= 0");
  TheoryPoint p;
  p.solid = tail_at_least(atom_count_pmf, N);
  p.dashed = std::exp(-t_r * static_cast<double>(N) / tau);
  p.dashdot = p.solid * p.dashed;
  return p;
}

inline TheoryPoint theory_curves(const MCConfig& cfg, std::size_t N) {
  return theory_curves(N, binomial_pmf(cfg.lattice.size(), cfg.loading.p_load), cfg.loss.tau,
                       cfg.timing.rearrange_period);
}

/// Cumulative probability of a defect-free target within the first k attempts,
/// k = 1..max_attempts, with one rearrangement every rearrange_period.
inline std::vector<EstimateWithCI> simulate_repeated_rearrangement(const MCConfig& cfg, std::size_t target_n,
                                                                   std::size_t max_attempts) {
  cfg.validate();
  cfg.require_1d();
  if (max_attempts < 1) throw std::invalid_argument("max_attempts must be >= 1");
  const std::size_t n = cfg.lattice.size();
  const TargetSpec spec = TargetSpec::blocks(target_n, n);
  const double pitch = cfg.lattice.col_axis().pitch_m;

  // first_success[k-1] counts trials whose first success was attempt k.
  const auto first_success = reduce_trials(
      cfg.trials, cfg.threads, std::vector<std::size_t>(max_attempts, 0),
      [&](std::size_t t, std::vector<std::size_t>& acc) {
        RngStream rng(cfg.seed, t);
        Occupancy occ = load(cfg.lattice, cfg.loading, rng);
        for (std::size_t k = 0; k < max_attempts; ++k) {
          const MovePlan plan = plan_target_reservoir(occ, spec, pitch);
          occ = apply_plan(occ, plan);
          occ = apply_loss(occ, cfg.loss, cfg.timing.rearrange_period, plan.distance_per_site(n), rng);
          if (spec.defects(occ) == 0) {
            ++acc[k];
            return;
          }
        }
      },
      [](std::vector<std::size_t>& into, const std::vector<std::size_t>& from) {
        for (std::size_t i = 0; i < into.size(); ++i) into[i] += from[i];
      });

  std::vector<EstimateWithCI> out;
  std::size_t cumulative = 0;
  for (std::size_t k = 0; k < max_attempts; ++k) {
    cumulative += first_success[k];
    out.push_back(EstimateWithCI::proportion(cumulative, cfg.trials));
  }
  return out;
}

struct MaintenanceResult {
  std::vector<double> probe_times;
  /// Fraction of post-selected trials whose target is defect-free at each probe image.
  std::vector<EstimateWithCI> survival;
  /// Mean time until a defect appears that cannot be repaired.
  EstimateWithCI lifetime;
  std::size_t valid_trials = 0;
  std::size_t censored_trials = 0;
};

/// Holds a defect-free target of `target_n` atoms and probes it every repair_period.
/// Only trials whose initial rearrangement produced a defect-free target are counted.
/// A failure detected at probe k is dated to the middle of interval k.
inline MaintenanceResult simulate_maintenance(const MCConfig& cfg, std::size_t target_n, bool repair,
                                              double duration) {
  cfg.validate();
  cfg.require_1d();
  const double period = cfg.timing.repair_period;
  if (!(period > 0.0)) throw std::invalid_argument("repair_period must be positive");
  if (!(duration >= period)) throw std::invalid_argument("duration must cover at least one probe");
  if (target_n < 1) throw std::invalid_argument("maintenance target must hold at least one atom");
  const std::size_t n = cfg.lattice.size();
  const std::size_t probes = static_cast<std::size_t>(std::floor(duration / period + 1e-9));
  const TargetSpec spec = TargetSpec::blocks(target_n, n);
  const double pitch = cfg.lattice.col_axis().pitch_m;

  struct Counts {
    std::vector<std::size_t> defect_free;
    std::size_t valid = 0;
    std::size_t censored = 0;
    std::uint64_t failure_probe_sum = 0;     // sum of k over uncensored trials
    std::uint64_t failure_probe_sq_sum = 0;  // sum of k^2
  };
  const Counts total = reduce_trials(
      cfg.trials, cfg.threads, Counts{std::vector<std::size_t>(probes, 0), 0, 0, 0, 0},
      [&](std::size_t t, Counts& acc) {
        RngStream rng(cfg.seed, t);
        Occupancy occ = load(cfg.lattice, cfg.loading, rng);
        MovePlan plan = plan_target_reservoir(occ, spec, pitch);
        occ = apply_plan(occ, plan);
        occ = apply_loss(occ, cfg.loss, cfg.timing.rearrange_period, plan.distance_per_site(n), rng);
        if (spec.defects(occ) != 0) return;
        ++acc.valid;
        std::vector<double> distances;
        for (std::size_t k = 1; k <= probes; ++k) {
          occ = apply_loss(occ, cfg.loss, period, distances, rng);
          distances.clear();
          if (spec.defects(occ) == 0) {
            ++acc.defect_free[k - 1];
            continue;
          }
          if (repair) {
            plan = plan_repair(occ, spec, pitch);
            occ = apply_plan(occ, plan);
            distances = plan.distance_per_site(n);
            if (spec.defects(occ) == 0) continue;
          }
          acc.failure_probe_sum += k;
          acc.failure_probe_sq_sum += static_cast<std::uint64_t>(k) * k;
          return;
        }
        ++acc.censored;
      },
      [](Counts& into, const Counts& from) {
        for (std::size_t i = 0; i < into.defect_free.size(); ++i) into.defect_free[i] += from.defect_free[i];
        into.valid += from.valid;
        into.censored += from.censored;
        into.failure_probe_sum += from.failure_probe_sum;
        into.failure_probe_sq_sum += from.failure_probe_sq_sum;
      });

  MaintenanceResult res;
  res.valid_trials = total.valid;
  res.censored_trials = total.censored;
  if (total.valid == 0) return res;
  for (std::size_t k = 1; k <= probes; ++k) {
    res.probe_times.push_back(static_cast<double>(k) * period);
    res.survival.push_back(EstimateWithCI::proportion(total.defect_free[k - 1], total.valid));
  }
  // Censored trials contribute the full duration.
  const double nv = static_cast<double>(total.valid);
  const double cens = static_cast<double>(total.censored);
  const double sum_k = static_cast<double>(total.failure_probe_sum);
  const double sum_k2 = static_cast<double>(total.failure_probe_sq_sum);
  const double full = static_cast<double>(probes) * period;
  const double sum = period * (sum_k - 0.5 * (nv - cens)) + cens * full;
  const double sum_sq = period * period * (sum_k2 - sum_k + 0.25 * (nv - cens)) + cens * full * full;
  const double mean = sum / nv;
  const double var = total.valid > 1 ? std::max(0.0, (sum_sq - nv * mean * mean) / (nv - 1.0)) : 0.0;
  const double z = coverage_z(kErrorBarCoverage);
  const double se = std::sqrt(var / nv);
  res.lifetime = {mean, mean - z * se, mean + z * se, total.valid};
  return res;
}

enum class Method2D { row_col_deletion = 1, row_by_row = 2 };

struct Options2D {
  Method2D method = Method2D::row_by_row;
  /// Method 2 target width; 0 re-targets each pass to the shortest row's atom count.
  std::size_t target_cols = 0;
  std::size_t max_passes = 1000;
};

struct Outcome2D {
  std::size_t atoms = 0;  // defect-free rectangle size, 0 if the run ended with defects
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::size_t passes = 0;
  double elapsed = 0.0;
};

namespace detail {

inline TrapLattice grid_lattice(const MCConfig& cfg, std::size_t rows, std::size_t cols) {
  AxisComb row_axis = cfg.lattice.is_2d() ? cfg.lattice.row_axis() : cfg.lattice.col_axis();
  AxisComb col_axis = cfg.lattice.col_axis();
  row_axis.sites = rows;
  col_axis.sites = cols;
  return TrapLattice::grid(row_axis, col_axis);
}

inline Outcome2D run_method1_trial(const MCConfig& cfg, const TrapLattice& lattice, const Options2D& opt,
                                   RngStream& rng) {
  const double row_pitch = lattice.row_axis().pitch_m, col_pitch = lattice.col_axis().pitch_m;
  Occupancy active = load(lattice, cfg.loading, rng);
  Outcome2D out;
  std::size_t stalls = 0;
  for (std::size_t pass = 0; pass < opt.max_passes; ++pass) {
    const std::size_t defects = active.size() - active.count();
    if (defects == 0) {
      out.atoms = active.size();
      out.rows = active.rows();
      out.cols = active.cols();
      return out;
    }
    const Method1Plan m1 = plan_method1_2d(active, row_pitch, col_pitch);
    const Occupancy moved = apply_plan(active, m1.plan);
    const std::size_t rows = m1.cover.remaining_rows, cols = m1.cover.remaining_cols;
    Occupancy next = moved.block(rows, cols);
    const auto old_dist = m1.plan.distance_per_site(active.size());
    std::vector<double> dist(rows * cols);
    for (std::size_t r = 0; r < rows; ++r)
      for (std::size_t c = 0; c < cols; ++c) dist[r * cols + c] = old_dist[r * active.cols() + c];

    const std::size_t planned_defects = next.size() - next.count();
    stalls = planned_defects < defects ? 0 : stalls + 1;
    const double dt = feedback_duration(cfg.timing, m1.row_sweeps + m1.col_sweeps, m1.sweep_sets(), active.rows());
    active = apply_loss(next, cfg.loss, dt, dist, rng);
    out.elapsed += dt;
    ++out.passes;
    if (stalls >= 2) break;
  }
  if (active.size() == active.count()) {
    out.atoms = active.size();
    out.rows = active.rows();
    out.cols = active.cols();
  }
  return out;
}

inline std::size_t shortest_row(const Occupancy& grid) {
  std::size_t best = grid.cols();
  for (std::size_t r = 0; r < grid.rows(); ++r) {
    std::size_t n = 0;
    for (std::size_t c = 0; c < grid.cols(); ++c) n += grid.at(r, c);
    best = std::min(best, n);
  }
  return best;
}

inline std::size_t block_defects(const Occupancy& grid, std::size_t width) {
  std::size_t n = 0;
  for (std::size_t r = 0; r < grid.rows(); ++r)
    for (std::size_t c = 0; c < width; ++c) n += grid.at(r, c) ? 0 : 1;
  return n;
}

inline Outcome2D run_method2_trial(const MCConfig& cfg, const TrapLattice& lattice, const Options2D& opt,
                                   RngStream& rng) {
  if (opt.target_cols > lattice.cols()) throw std::invalid_argument("target_cols exceeds grid columns");
  const double col_pitch = lattice.col_axis().pitch_m;
  Occupancy grid = load(lattice, cfg.loading, rng);
  const bool adaptive = opt.target_cols == 0;
  std::size_t width = adaptive ? lattice.cols() : opt.target_cols;
  Outcome2D out;
  std::size_t stalls = 0;
  for (std::size_t pass = 0; pass < opt.max_passes; ++pass) {
    if (adaptive) width = std::min(width, shortest_row(grid));
    const std::size_t defects = block_defects(grid, width);
    if (defects == 0) break;
    const auto plans = plan_method2_2d(grid, width, col_pitch);
    const Occupancy moved = apply_row_plans(grid, plans);
    std::size_t sweeps = 0, sets = 0;
    std::vector<double> dist(grid.size(), 0.0);
    for (std::size_t r = 0; r < plans.size(); ++r) {
      sweeps += plans[r].sweep_count();
      sets += plans[r].has_motion() ? 1 : 0;
      for (const auto& m : plans[r].moves) dist[r * grid.cols() + m.destination] = m.distance_m;
    }
    stalls = block_defects(moved, width) < defects ? 0 : stalls + 1;
    const double dt = feedback_duration(cfg.timing, sweeps, sets, grid.rows());
    grid = apply_loss(moved, cfg.loss, dt, dist, rng);
    out.elapsed += dt;
    ++out.passes;
    if (stalls >= 2) break;
  }
  if (adaptive) width = std::min(width, shortest_row(grid));
  if (block_defects(grid, width) == 0) {
    out.atoms = grid.rows() * width;
    out.rows = grid.rows();
    out.cols = width;
  }
  return out;
}

}  // namespace detail

/// One 2D trial: load, then rearrange and image repeatedly until no defect remains in
/// the target rectangle or two consecutive passes make no progress.
inline Outcome2D run_2d_trial(const MCConfig& cfg, std::size_t rows, std::size_t cols, const Options2D& opt,
                              RngStream& rng) {
  const TrapLattice lattice = detail::grid_lattice(cfg, rows, cols);
  return opt.method == Method2D::row_col_deletion ? detail::run_method1_trial(cfg, lattice, opt, rng)
                                                  : detail::run_method2_trial(cfg, lattice, opt, rng);
}

/// Expected atom count in the final defect-free rectangle for a rows x cols array.
inline EstimateWithCI simulate_2d(const MCConfig& cfg, std::size_t rows, std::size_t cols, const Options2D& opt) {
  cfg.validate();
  if (rows < 1 || cols < 1) throw std::invalid_argument("grid dimensions must be >= 1");
  std::vector<double> atoms(cfg.trials, 0.0);
  struct Unit {};
  reduce_trials(
      cfg.trials, cfg.threads, Unit{},
      [&](std::size_t t, Unit&) {
        RngStream rng(cfg.seed, t);
        atoms[t] = static_cast<double>(run_2d_trial(cfg, rows, cols, opt, rng).atoms);
      },
      [](Unit&, const Unit&) {});
  return EstimateWithCI::mean(atoms);
}

struct GridPoint2D {
  std::size_t rows = 0;
  std::size_t cols = 0;
  EstimateWithCI expected_atoms;
};

inline std::vector<GridPoint2D> simulate_2d_sweep(const MCConfig& cfg, const std::vector<std::size_t>& rows,
                                                  const std::vector<std::size_t>& cols, const Options2D& opt) {
  std::vector<GridPoint2D> out;
  for (auto r : rows)
    for (auto c : cols) out.push_back({r, c, simulate_2d(cfg, r, c, opt)});
  return out;
}

}  // namespace atomweaver
