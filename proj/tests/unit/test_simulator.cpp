#include <cmath>
#include <cstdlib>
#include <stdexcept>
#include <vector>

#include <gtest/gtest.h>

#include "atomweaver/simulator.hpp"

using namespace atomweaver;

namespace {

MCConfig paper_config(std::size_t trials) {
  MCConfig cfg;
  cfg.trials = trials;
  cfg.seed = 42;
  return cfg;
}

double se(double p, std::size_t n) { return std::sqrt(std::max(p * (1.0 - p), 1e-12) / static_cast<double>(n)); }

}  // namespace

TEST(SingleCycle, ThreeTrapExhaustiveEnumeration) {
  // Oracle from summing over all 8 loading patterns with per-atom survival
  // exp(-t/tau) * (1 - beta * distance): p = 0.7, tau = 1 s, t = 0.2 s, beta = 5e4 /m.
  const double pre_oracle[] = {1.0, 0.7, 0.49, 0.343};
  const double post_oracle[] = {1.0, 0.7608628634504301, 0.48876674394308417, 0.18824239118025102};
  MCConfig cfg = paper_config(200000);
  AxisComb axis;
  axis.sites = 3;
  cfg.lattice = TrapLattice::line(axis);
  cfg.loading.p_load = 0.7;
  cfg.loss = {1.0, 5e4};
  cfg.timing.rearrange_period = 0.2;
  const auto r = simulate_single_cycle(cfg);
  ASSERT_EQ(r.post.size(), 4u);
  for (std::size_t N = 0; N <= 3; ++N) {
    EXPECT_NEAR(r.pre[N].estimate, pre_oracle[N], 4.0 * se(pre_oracle[N], cfg.trials) + 1e-12) << N;
    EXPECT_NEAR(r.post[N].estimate, post_oracle[N], 4.0 * se(post_oracle[N], cfg.trials) + 1e-12) << N;
  }
}

TEST(SingleCycle, PreRearrangementIsGeometric) {
  const auto r = simulate_single_cycle(paper_config(100000));
  for (std::size_t N : {1u, 5u, 10u, 20u}) {
    const double p = std::pow(0.6, static_cast<double>(N));
    EXPECT_NEAR(r.pre[N].estimate, p, 3.0 * se(p, 100000) + 1e-9) << N;
  }
  EXPECT_NEAR(std::pow(0.6, 5), 0.07776, 1e-12);
}

TEST(SingleCycle, PerfectLoadingNoLoss) {
  MCConfig cfg = paper_config(50);
  cfg.loading.p_load = 1.0;
  cfg.loss.tau = INFINITY;
  const auto r = simulate_single_cycle(cfg);
  for (const auto& e : r.post) EXPECT_EQ(e.estimate, 1.0);
}

TEST(SingleCycle, MonotoneAndBoundedBySolidCurve) {
  const MCConfig cfg = paper_config(20000);
  const auto r = simulate_single_cycle(cfg);
  for (std::size_t N = 1; N < r.post.size(); ++N) {
    EXPECT_LE(r.post[N].estimate, r.post[N - 1].estimate);
    EXPECT_LE(r.pre[N].estimate, r.pre[N - 1].estimate);
    const double solid = theory_curves(cfg, N).solid;
    EXPECT_LE(r.post[N].estimate, solid + 3.0 * se(solid, cfg.trials) + 1e-12);
  }
}

TEST(SingleCycle, IndependentOfThreadCount) {
  MCConfig cfg = paper_config(3001);
  cfg.threads = 1;
  const auto a = simulate_single_cycle(cfg);
  for (unsigned threads : {2u, 3u, 7u}) {
    cfg.threads = threads;
    const auto b = simulate_single_cycle(cfg);
    for (std::size_t N = 0; N < a.post.size(); ++N) {
      EXPECT_EQ(a.post[N].estimate, b.post[N].estimate);
      EXPECT_EQ(a.pre[N].upper, b.pre[N].upper);
    }
  }
}

TEST(TheoryCurves, FrozenValues) {
  const MCConfig cfg;
  const auto p50 = theory_curves(cfg, 50);
  EXPECT_NEAR(p50.dashed, 0.6681612071766934, 1e-6);
  EXPECT_NEAR(p50.solid, 0.9832383134968385, 1e-12);
  EXPECT_NEAR(p50.dashdot, 0.6569616984884237, 1e-12);
  EXPECT_NEAR(theory_curves(cfg, 30).dashdot, 0.785106827699367, 1e-12);
  const auto p0 = theory_curves(cfg, 0);
  EXPECT_EQ(p0.solid, 1.0);
  for (std::size_t N = 0; N <= 100; N += 7) {
    const auto p = theory_curves(cfg, N);
    EXPECT_DOUBLE_EQ(p.dashdot, p.solid * p.dashed);
  }
}

TEST(Repeated, SingleAttemptMatchesSingleCycle) {
  const MCConfig cfg = paper_config(5000);
  const auto single = simulate_single_cycle(cfg);
  for (std::size_t N : {10u, 40u, 55u}) {
    const auto curve = simulate_repeated_rearrangement(cfg, N, 1);
    ASSERT_EQ(curve.size(), 1u);
    EXPECT_EQ(curve[0].estimate, single.post[N].estimate) << N;
  }
}

TEST(Repeated, ZeroTargetSucceedsImmediately) {
  const auto curve = simulate_repeated_rearrangement(paper_config(100), 0, 3);
  for (const auto& e : curve) EXPECT_EQ(e.estimate, 1.0);
}

TEST(Repeated, CumulativeAndBelowLoadingLimit) {
  const MCConfig cfg = paper_config(5000);
  const auto pmf = binomial_pmf(100, 0.6);
  for (std::size_t N : {40u, 50u, 60u}) {
    const auto curve = simulate_repeated_rearrangement(cfg, N, 10);
    const double bound = tail_at_least(pmf, N);
    for (std::size_t k = 1; k < curve.size(); ++k) EXPECT_GE(curve[k].estimate, curve[k - 1].estimate);
    EXPECT_LE(curve.back().estimate, bound + 3.0 * se(bound, cfg.trials));
    EXPECT_GT(curve.back().estimate, curve.front().estimate);
  }
  EXPECT_THROW(simulate_repeated_rearrangement(cfg, 10, 0), std::invalid_argument);
}

TEST(Maintenance, NoRepairMatchesExponentialOrderStatistics) {
  MCConfig cfg = paper_config(10000);
  cfg.loss.tau = 10.0;
  const auto r = simulate_maintenance(cfg, 20, false, 30.0);
  ASSERT_GT(r.valid_trials, 9000u);
  const double p = 0.8187307530779818;
  EXPECT_NEAR(r.survival[0].estimate, p, 3.0 * se(p, r.valid_trials));
  EXPECT_NEAR(r.lifetime.estimate, 0.5, 0.05);
  EXPECT_EQ(r.censored_trials, 0u);
  for (std::size_t k = 1; k < r.survival.size(); ++k) EXPECT_LE(r.survival[k].estimate, r.survival[k - 1].estimate);
}

TEST(Maintenance, RepairExtendsLifetime) {
  MCConfig cfg = paper_config(2000);
  cfg.loss.tau = 10.0;
  cfg.loading.p_load = 0.45;
  const auto off = simulate_maintenance(cfg, 20, false, 30.0);
  const auto on = simulate_maintenance(cfg, 20, true, 30.0);
  EXPECT_EQ(off.valid_trials, on.valid_trials);
  EXPECT_GT(on.lifetime.estimate, 5.0 * off.lifetime.estimate);
}

TEST(Maintenance, CensoredTrialsCountFullDuration) {
  MCConfig cfg = paper_config(100);
  cfg.loss.tau = INFINITY;
  cfg.loading.p_load = 1.0;
  const auto r = simulate_maintenance(cfg, 10, false, 1.0);
  EXPECT_EQ(r.valid_trials, 100u);
  EXPECT_EQ(r.censored_trials, 100u);
  EXPECT_DOUBLE_EQ(r.lifetime.estimate, 1.0);
  EXPECT_THROW(simulate_maintenance(cfg, 10, false, 0.01), std::invalid_argument);
  EXPECT_THROW(simulate_maintenance(cfg, 0, false, 1.0), std::invalid_argument);
}

TEST(TwoD, PerfectConditionsFillGrid) {
  MCConfig cfg = paper_config(20);
  cfg.loading.p_load = 1.0;
  cfg.loss.tau = INFINITY;
  for (auto method : {Method2D::row_col_deletion, Method2D::row_by_row}) {
    Options2D opt;
    opt.method = method;
    const auto e = simulate_2d(cfg, 6, 9, opt);
    EXPECT_EQ(e.estimate, 54.0);
  }
}

TEST(TwoD, TrialOutcomesAreDefectFreeRectangles) {
  MCConfig cfg = paper_config(1);
  cfg.loss.tau = 10.0;
  for (std::uint64_t t = 0; t < 200; ++t) {
    RngStream rng(3, t);
    Options2D opt;
    opt.method = t % 2 ? Method2D::row_col_deletion : Method2D::row_by_row;
    const auto o = run_2d_trial(cfg, 6, 8, opt, rng);
    EXPECT_EQ(o.atoms, o.rows * o.cols);
    EXPECT_LE(o.rows, 6u);
    EXPECT_LE(o.cols, 8u);
    EXPECT_GT(o.elapsed, 0.0);
  }
}

TEST(TwoD, FixedTargetWidth) {
  MCConfig cfg = paper_config(200);
  cfg.loss.tau = INFINITY;
  Options2D opt;
  opt.target_cols = 4;
  const auto e = simulate_2d(cfg, 5, 10, opt);
  // Each row needs 4 of 10 sites loaded; P(Binomial(10, 0.6) >= 4) ~ 0.945 per row.
  EXPECT_GT(e.estimate, 0.0);
  EXPECT_LE(e.estimate, 20.0);
  opt.target_cols = 11;
  EXPECT_THROW(simulate_2d(cfg, 5, 10, opt), std::invalid_argument);
}

TEST(TwoD, IndependentOfThreadCount) {
  MCConfig cfg = paper_config(64);
  Options2D opt;
  opt.method = Method2D::row_col_deletion;
  cfg.threads = 1;
  const auto a = simulate_2d(cfg, 5, 5, opt);
  cfg.threads = 4;
  const auto b = simulate_2d(cfg, 5, 5, opt);
  EXPECT_EQ(a.estimate, b.estimate);
  EXPECT_EQ(a.upper, b.upper);
}

TEST(Parallel, EnvironmentCapsThreads) {
  ::setenv("ATOMWEAVER_THREADS", "2", 1);
  EXPECT_EQ(resolve_threads(8), 2u);
  EXPECT_EQ(resolve_threads(1), 1u);
  EXPECT_LE(resolve_threads(0), 2u);
  ::setenv("ATOMWEAVER_THREADS", "junk", 1);
  EXPECT_EQ(resolve_threads(3), 3u);
  ::unsetenv("ATOMWEAVER_THREADS");
  EXPECT_EQ(resolve_threads(5), 5u);
}

TEST(Parallel, ReduceTrialsSumsAndPropagatesErrors) {
  const auto total = reduce_trials(
      1000, 4, std::size_t{0}, [](std::size_t t, std::size_t& acc) { acc += t; },
      [](std::size_t& a, const std::size_t& b) { a += b; });
  EXPECT_EQ(total, 999u * 1000u / 2u);
  EXPECT_THROW(reduce_trials(
                   10, 3, 0, [](std::size_t t, int&) { if (t == 7) throw std::runtime_error("boom"); },
                   [](int&, const int&) {}),
               std::runtime_error);
}
