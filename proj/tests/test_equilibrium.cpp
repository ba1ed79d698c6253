#include <gtest/gtest.h>

#include <random>
#include <sstream>

#include "arsim/equilibrium.hpp"
#include "oracles.hpp"

using namespace arsim;

namespace {

std::pair<double, double> faw_payoffs(double a1, double a2, double f1, double f2) {
  const auto u = payoff_pair(a1, a2, Action::fork_after_withholding(f1), Action::fork_after_withholding(f2));
  return {u.first, u.second};
}

}  // namespace

TEST(StageNash, EqualPowersBreakEven) {
  for (double a : {0.1, 0.2, 0.3, 0.4}) {
    const auto e = stage_nash(a, a);
    EXPECT_TRUE(e.converged);
    EXPECT_LT(std::abs(e.payoffs.first), 1e-4);
    EXPECT_LT(std::abs(e.payoffs.second), 1e-4);
  }
}

TEST(StageNash, LargerPoolWins) {
  const auto e = stage_nash(0.25, 0.15);
  EXPECT_GT(e.payoffs.first, 0.0);
  EXPECT_LT(e.payoffs.second, 0.0);
  EXPECT_GT(e.actions[0].faw, 0.0);
  EXPECT_EQ(e.actions[0].bwh, 0.0);
  EXPECT_EQ(e.actions[1].bwh, 0.0);
}

TEST(StageNash, NoProfitableGridDeviation) {
  for (auto [a1, a2] : {std::pair{0.25, 0.15}, std::pair{0.3, 0.1}, std::pair{0.2, 0.2}}) {
    const auto e = stage_nash(a1, a2);
    const double gain = oracle::best_grid_deviation_gain(
        [&](double f1, double f2) { return faw_payoffs(a1, a2, f1, f2); }, a1, a2, e.actions[0].faw,
        e.actions[1].faw, 200);
    EXPECT_LT(gain, 1e-7) << a1 << ", " << a2;
  }
}

TEST(StageNash, UniqueFromRandomStarts) {
  const auto ref = stage_nash(0.3, 0.15);
  std::mt19937_64 rng(17);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int n = 0; n < 20; ++n) {
    NashOptions opts;
    opts.start = {0.3 * u(rng), 0.15 * u(rng)};
    const auto e = stage_nash(0.3, 0.15, opts);
    EXPECT_NEAR(e.actions[0].faw, ref.actions[0].faw, 1e-3);
    EXPECT_NEAR(e.actions[1].faw, ref.actions[1].faw, 1e-3);
  }
}

TEST(StageNash, SwitchingToBwhHurts) {
  const double a1 = 0.25, a2 = 0.15;
  const auto e = stage_nash(a1, a2);
  const Action f1 = e.actions[0], f2 = e.actions[1];
  EXPECT_LT(payoff_pair(a1, a2, Action::block_withholding(f1.faw), f2).first, e.payoffs.first);
  EXPECT_LT(payoff_pair(a1, a2, f1, Action::block_withholding(f2.faw)).second, e.payoffs.second);
}

TEST(StageNash, NonConvergenceCarriesLastIterate) {
  NashOptions opts;
  opts.max_iterations = 1;
  try {
    stage_nash(0.3, 0.15, opts);
    FAIL() << "expected NonConvergence";
  } catch (const NonConvergenceError& e) {
    EXPECT_EQ(e.code(), Errc::NonConvergence);
    EXPECT_GT(e.last_iterate().actions[0].faw, 0.0);
  }
}

TEST(DeltaBound, BelowOne) {
  DeltaBoundOptions opts;
  opts.deviation_samples = 8;
  opts.prior_samples = 3;
  opts.grid_resolution = 200;
  for (auto [a1, a2] : {std::pair{0.2, 0.1}, std::pair{0.3, 0.3}, std::pair{0.05, 0.4}})
    for (double k : {0.0, 0.5, 0.99}) {
      const auto d = delta_bound(a1, a2, k, opts);
      EXPECT_GT(d.bound, 0.0);
      EXPECT_LT(d.bound, 1.0) << a1 << ", " << a2 << ", K=" << k;
      EXPECT_GT(d.x1.evaluated, 0u);
    }
}

TEST(DeltaBound, NotesDuplicateExpressions) {
  DeltaBoundOptions opts;
  opts.deviation_samples = 4;
  opts.prior_samples = 2;
  opts.grid_resolution = 200;
  const auto d = delta_bound(0.2, 0.15, 0.5, opts);
  EXPECT_FALSE(d.notes.empty());
  EXPECT_DOUBLE_EQ(d.x1.per_class[0], d.x1.per_class[3]);
}

TEST(OneDeviation, UnprofitableAboveBound) {
  DeltaBoundOptions opts;
  opts.grid_resolution = 200;
  const auto d = delta_bound(0.2, 0.1, 0.5, opts);
  const double delta = std::min(d.bound + 0.01, (1.0 + d.bound) / 2.0);
  for (int role = 0; role < 2; ++role) {
    const auto r = role == 0 ? one_deviation_check(0.2, 0.1, 0.5, delta, 20, 200)
                             : one_deviation_check(0.1, 0.2, 0.5, delta, 20, 200);
    for (std::size_t c = 0; c < 4; ++c) EXPECT_GT(r.sampled[c], 0u);
    EXPECT_TRUE(r.all_unprofitable());
  }
}

TEST(OneDeviation, ProfitableWhenImpatient) {
  // With almost no weight on the future a one-shot attack pays.
  const auto r = one_deviation_check(0.2, 0.3, 0.5, 0.01, 10, 200);
  EXPECT_FALSE(r.all_unprofitable());
}

TEST(AuditIpbwh, SymmetricCell) {
  const auto c = audit_ipbwh_cell(0.2, 0.2);
  EXPECT_TRUE(c.pass);
  EXPECT_GT(c.f_at_k, 0.0);
}

TEST(AuditIpbwh, BoundaryCell) {
  EXPECT_TRUE(audit_ipbwh_cell(0.45, 0.01).pass);
  EXPECT_TRUE(audit_ipbwh_cell(0.01, 0.45).pass);
}

TEST(AuditIpbwh, SmallGridHasNoFailures) {
  const auto r = audit_ipbwh_nonempty(8, 100);
  EXPECT_EQ(r.failures(), 0u);
  std::ostringstream os;
  r.write_csv(os);
  EXPECT_EQ(os.str().substr(0, os.str().find('\n')), "alpha_i,alpha_j,F,k,F_prime,pass");
}
