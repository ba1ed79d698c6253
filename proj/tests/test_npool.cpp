#include <gtest/gtest.h>

#include <random>

#include "arsim/npool.hpp"

using namespace arsim;

namespace {

std::vector<double> random_powers(std::mt19937_64& rng, std::size_t n) {
  std::uniform_real_distribution<double> u(0.02, 0.25);
  std::vector<double> p;
  for (std::size_t i = 0; i < n; ++i) p.push_back(u(rng));
  return p;
}

ActionMatrix random_matrix(std::mt19937_64& rng, const std::vector<double>& powers) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const std::size_t n = powers.size();
  ActionMatrix m(n);
  for (std::size_t i = 0; i < n; ++i) {
    double budget = powers[i] * 0.9;
    for (std::size_t j = 0; j < n; ++j) {
      if (i == j || u(rng) < 0.5) continue;
      const double x = budget * u(rng) * 0.5;
      budget -= x;
      m.at(i, j) = u(rng) < 0.5 ? Action::fork_after_withholding(x) : Action::block_withholding(x);
    }
  }
  return m;
}

}  // namespace

TEST(NPool, NoAttackIsZero) {
  const std::vector<double> p{0.25, 0.15, 0.10, 0.035, 0.02};
  for (double u : npool_payoffs(p, ActionMatrix(5))) EXPECT_NEAR(u, 0.0, 1e-14);
}

TEST(NPool, TwoPoolsMatchClosedForm) {
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int n = 0; n < 100; ++n) {
    const double a = 0.05 + 0.4 * u(rng), b = 0.05 + 0.4 * u(rng);
    if (a + b > 0.9) continue;
    ActionMatrix m(2);
    const double x = a * 0.95 * u(rng), y = b * 0.95 * u(rng);
    m.at(0, 1) = u(rng) < 0.5 ? Action::fork_after_withholding(x) : Action::block_withholding(x);
    m.at(1, 0) = u(rng) < 0.5 ? Action::fork_after_withholding(y) : Action::block_withholding(y);
    const std::vector<double> p{a, b};
    const auto got = npool_payoffs(p, m);
    const auto want = payoff_pair(a, b, m.at(0, 1), m.at(1, 0));
    EXPECT_NEAR(got[0], want.first, 1e-12);
    EXPECT_NEAR(got[1], want.second, 1e-12);
  }
}

TEST(NPool, ExactAgreesWithEventSimulation) {
  std::mt19937_64 rng(99);
  for (int trial = 0; trial < 20; ++trial) {
    const auto p = random_powers(rng, 3 + trial % 3);
    const auto m = random_matrix(rng, p);
    const auto exact = npool_payoffs(p, m);
    const auto est = simulate_npool_rounds(p, m, 200000, 500 + trial);
    for (std::size_t k = 0; k < p.size(); ++k)
      EXPECT_NEAR(est.u[k], exact[k], 3 * est.stderr_u[k] + 1e-12) << "trial " << trial << " pool " << k;
  }
}

TEST(NPool, BudgetAndSelfInfiltration) {
  const std::vector<double> p{0.2, 0.2, 0.2};
  ActionMatrix m(3);
  m.at(0, 1) = Action::fork_after_withholding(0.15);
  m.at(0, 2) = Action::block_withholding(0.1);
  try {
    npool_payoffs(p, m);
    FAIL() << "expected budget error";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::InfiltrationBudgetExceeded);
  }
  ActionMatrix self(3);
  self.at(1, 1) = Action::fork_after_withholding(0.01);
  EXPECT_THROW(npool_payoffs(p, self), Error);
}

TEST(NPool, SimulationFallbackForManyFawParts) {
  const std::vector<double> p{0.12, 0.12, 0.12, 0.12, 0.12, 0.12};
  ActionMatrix m(6);
  for (std::size_t i = 0; i < 6; ++i)
    for (std::size_t j = 0; j < 6; ++j)
      if (i != j && (i + j) % 6 != 0) m.at(i, j) = Action::fork_after_withholding(0.02);
  const auto a = npool_payoffs(p, m, kAlgebraicTolerance, 3);
  const auto b = npool_payoffs(p, m, kAlgebraicTolerance, 3);
  ASSERT_EQ(a.size(), 6u);
  EXPECT_EQ(a, b);
  for (double u : a) EXPECT_TRUE(std::isfinite(u));
}
