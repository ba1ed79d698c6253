#pragma once

// Stage-game payoffs of the two-pool FAW/BWH game.
//
// A pool's payoff is its extra reward density: the reward its members earn per
// unit of power, minus the honest-mining baseline of 1. Each pool's reward
// density depends on the other's through infiltration income, so the four
// payoff forms (FAW/FAW, FAW/BWH, BWH/FAW, BWH/BWH) are implicit. They share one
// shape,
//
//   (U_i + 1)(alpha_i + x_j) = D_i + x_i (U_j + 1),
//
// where x_i is pool i's infiltration power into the opponent and D_i is pool i's
// expected direct block revenue per round. payoff_pair solves that 2x2 system.

#include <cmath>
#include <cstdint>
#include <random>
#include <sstream>

#include "arsim/core.hpp"
#include "arsim/error.hpp"

namespace arsim {

/// Extra reward densities of the two pools for one stage (0 = honest baseline).
struct StagePayoffs {
  double first = 0.0;
  double second = 0.0;
};

/// Expected direct block revenue per round of each pool (before infiltration sharing).
struct DirectRevenue {
  double first = 0.0;
  double second = 0.0;
};

namespace detail {

inline void require_positive(double value, double tol, const char* what) {
  if (!(value > tol)) {
    std::ostringstream os;
    os << what << " = " << value;
    throw Error(Errc::DegenerateDenominator, os.str());
  }
}

inline void check_powers(double alpha_i, double alpha_j) {
  if (!(alpha_i > 0.0) || !(alpha_j > 0.0) || alpha_i > kMaxPoolPower || alpha_j > kMaxPoolPower ||
      !(alpha_i + alpha_j < 1.0)) {
    std::ostringstream os;
    os << "powers (" << alpha_i << ", " << alpha_j << ")";
    throw Error(Errc::InvalidPowers, os.str());
  }
}

// Direct revenue of pool "self" when the opponent may fork inside it.
// External miners hold 1 - alpha_self - alpha_other. With network capability 1, a
// withheld FAW block always wins the fork it triggers; a three-branch fork is
// split evenly between the two pools.
inline double direct_revenue_of(double alpha_self, double alpha_other, const Action& self,
                                const Action& other, double tol) {
  const double external = 1.0 - alpha_self - alpha_other;
  const double productive = 1.0 - self.bwh - other.bwh;
  const double live = productive - self.faw - other.faw;
  require_positive(live, tol, "1 - f_i - f_j - b_i - b_j");
  double revenue = (alpha_self - self.magnitude()) / live;
  const double f_in = other.faw;
  if (f_in > 0.0) {
    if (self.faw > 0.0) {
      const double f_out = self.faw;
      require_positive(1.0 - f_in, tol, "1 - f_j");
      require_positive(1.0 - f_out, tol, "1 - f_i");
      revenue += f_in * external / (1.0 - f_in);
      revenue += 0.5 * f_out * f_in * (1.0 / (1.0 - f_out) + 1.0 / (1.0 - f_in)) * external / live;
    } else {
      require_positive(1.0 - self.bwh, tol, "1 - b_i");
      revenue += f_in / (1.0 - self.bwh) * external / live;
    }
  }
  return revenue;
}

}  // namespace detail

inline DirectRevenue direct_revenue(double alpha_i, double alpha_j, const Action& a_i, const Action& a_j,
                                    double tol = kAlgebraicTolerance) {
  return {detail::direct_revenue_of(alpha_i, alpha_j, a_i, a_j, tol),
          detail::direct_revenue_of(alpha_j, alpha_i, a_j, a_i, tol)};
}

/// Resolves infiltration sharing exactly: returns reward densities minus one.
inline StagePayoffs densities_from_revenue(double alpha_i, double alpha_j, double x_i, double x_j,
                                           DirectRevenue d, double tol = kAlgebraicTolerance) {
  const double m_i = alpha_i + x_j;  // members of pool i: own power plus infiltrators
  const double m_j = alpha_j + x_i;
  detail::require_positive(m_i, tol, "alpha_i + x_j");
  detail::require_positive(m_j, tol, "alpha_j + x_i");
  const double det = m_i * m_j - x_i * x_j;
  detail::require_positive(det, tol * tol, "sharing determinant");
  const double v_i = (d.first * m_j + x_i * d.second) / det;
  const double v_j = (m_i * d.second + x_j * d.first) / det;
  return {v_i - 1.0, v_j - 1.0};
}

/// Both pools' extra reward densities for the action profile (a_i, a_j).
inline StagePayoffs payoff_pair(double alpha_i, double alpha_j, const Action& a_i, const Action& a_j,
                                double tol = kAlgebraicTolerance) {
  detail::check_powers(alpha_i, alpha_j);
  validate_action(a_i, alpha_i);
  validate_action(a_j, alpha_j);
  const DirectRevenue d = direct_revenue(alpha_i, alpha_j, a_i, a_j, tol);
  return densities_from_revenue(alpha_i, alpha_j, a_i.magnitude(), a_j.magnitude(), d, tol);
}

/// Payoff of pool i when it alone attacks with `kind` at power x.
inline double one_sided_payoff(AttackKind kind, double alpha_i, double alpha_j, double x) {
  return payoff_pair(alpha_i, alpha_j, Action::of(kind, x), Action::none()).first;
}

/// FAW infiltration maximizing the attacker's one-sided payoff.
inline double optimal_faw_infiltration(double alpha_i, double alpha_j) {
  detail::check_powers(alpha_i, alpha_j);
  const double rest = 1.0 - alpha_i - alpha_j;
  const double m = (std::sqrt(alpha_j * (1.0 - alpha_i) * (alpha_i + alpha_j)) - alpha_j) / rest;
  return std::clamp(m, 0.0, alpha_i);
}

/// BWH infiltration maximizing the attacker's one-sided payoff.
inline double optimal_bwh_infiltration(double alpha_i, double alpha_j) {
  detail::check_powers(alpha_i, alpha_j);
  const double rest = 1.0 - alpha_i - alpha_j;
  const double m = alpha_j * (std::sqrt(1.0 - alpha_i - alpha_i * alpha_j) - (1.0 - alpha_i)) / rest;
  return std::clamp(m, 0.0, alpha_i);
}

inline double optimal_infiltration(AttackKind kind, double alpha_i, double alpha_j) {
  return kind == AttackKind::FAW ? optimal_faw_infiltration(alpha_i, alpha_j)
                                 : optimal_bwh_infiltration(alpha_i, alpha_j);
}

/// Monte-Carlo estimate of a stage from the round-level event model.
struct RoundEstimate {
  double u_first = 0.0;
  double u_second = 0.0;
  double stderr_first = 0.0;
  double stderr_second = 0.0;
  //! Mean direct blocks per round credited to each pool.
  double blocks_first = 0.0;
  double blocks_second = 0.0;
  std::uint64_t rounds = 0;
};

/// Simulates `rounds` rounds: each round draws block finders in proportion to
/// power until someone publishes. BWH finds are discarded; FAW finds are held and
/// released only when an external miner publishes. Pool income is shared with
/// infiltrators in proportion to submitted shares.
inline RoundEstimate simulate_rounds(double alpha_i, double alpha_j, const Action& a_i, const Action& a_j,
                                     std::uint64_t rounds, std::uint64_t seed) {
  detail::check_powers(alpha_i, alpha_j);
  validate_action(a_i, alpha_i);
  validate_action(a_j, alpha_j);
  if (rounds == 0) throw Error(Errc::InvalidConfig, "rounds must be positive");

  enum Party { External, HonestI, HonestJ, InfilI, InfilJ };
  const double x_i = a_i.magnitude();
  const double x_j = a_j.magnitude();
  std::discrete_distribution<int> finder(
      {1.0 - alpha_i - alpha_j, alpha_i - x_i, alpha_j - x_j, x_i, x_j});
  std::bernoulli_distribution coin(0.5);
  std::mt19937_64 rng(seed);

  // Income sharing: v_i (alpha_i + x_j) = d_i + x_i v_j, resolved by fixed-point
  // iteration on the two unit revenue vectors (the map is linear).
  auto share = [&](double d_i, double d_j) {
    double v_i = 0.0, v_j = 0.0;
    for (int it = 0; it < 100000; ++it) {
      const double n_i = (d_i + x_i * v_j) / (alpha_i + x_j);
      const double n_j = (d_j + x_j * v_i) / (alpha_j + x_i);
      const bool done = std::abs(n_i - v_i) < 1e-16 && std::abs(n_j - v_j) < 1e-16;
      v_i = n_i;
      v_j = n_j;
      if (done) break;
    }
    return std::pair{v_i, v_j};
  };
  const auto [l11, l21] = share(1.0, 0.0);
  const auto [l12, l22] = share(0.0, 1.0);

  double sum_i = 0, sum_j = 0, sq_i = 0, sq_j = 0, blocks_i = 0, blocks_j = 0;
  for (std::uint64_t r = 0; r < rounds; ++r) {
    bool held_by_i = false;  // i's infiltrator holds a block for pool j
    bool held_by_j = false;
    double d_i = 0.0, d_j = 0.0;
    for (bool published = false; !published;) {
      switch (finder(rng)) {
        case External:
          if (held_by_i && held_by_j) {
            (coin(rng) ? d_i : d_j) = 1.0;
          } else if (held_by_i) {
            d_j = 1.0;
          } else if (held_by_j) {
            d_i = 1.0;
          }
          published = true;
          break;
        case HonestI:
          d_i = 1.0;
          published = true;
          break;
        case HonestJ:
          d_j = 1.0;
          published = true;
          break;
        case InfilI:
          if (a_i.faw > 0.0) held_by_i = true;
          break;
        case InfilJ:
          if (a_j.faw > 0.0) held_by_j = true;
          break;
      }
    }
    blocks_i += d_i;
    blocks_j += d_j;
    const double u_i = l11 * d_i + l12 * d_j - 1.0;
    const double u_j = l21 * d_i + l22 * d_j - 1.0;
    sum_i += u_i;
    sum_j += u_j;
    sq_i += u_i * u_i;
    sq_j += u_j * u_j;
  }
  const double n = static_cast<double>(rounds);
  RoundEstimate est;
  est.rounds = rounds;
  est.u_first = sum_i / n;
  est.u_second = sum_j / n;
  const double var_i = std::max(0.0, sq_i / n - est.u_first * est.u_first) * n / std::max(1.0, n - 1.0);
  const double var_j = std::max(0.0, sq_j / n - est.u_second * est.u_second) * n / std::max(1.0, n - 1.0);
  est.stderr_first = std::sqrt(var_i / n);
  est.stderr_second = std::sqrt(var_j / n);
  est.blocks_first = blocks_i / n;
  est.blocks_second = blocks_j / n;
  return est;
}

}  // namespace arsim
