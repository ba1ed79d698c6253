#pragma once

// Stage payoffs for n pools attacking each other pairwise.
//
// Round model (network capability 1): parties are external miners, each pool's
// honest part, and one infiltration part per ordered pair (i -> j). BWH finds are
// discarded. A FAW infiltrator that finds a block holds it until someone else
// publishes; it releases when the publisher is neither the attacker nor the
// victim, and released branches beat the published block. With several victims
// released at once the round is split evenly among them.
//
// Each pool's income is then shared among everybody mining in it, infiltrators
// included:  V_k (alpha_k + sum_i x_ik) - sum_j x_kj V_j = D_k.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>
#include <span>
#include <sstream>
#include <vector>

#include "arsim/core.hpp"
#include "arsim/error.hpp"
#include "arsim/payoff.hpp"

namespace arsim {

/// a(i, j) is pool i's infiltration into pool j; diagonal entries stay zero.
class ActionMatrix {
 public:
  ActionMatrix() = default;
  explicit ActionMatrix(std::size_t n) : n_(n), cells_(n * n) {}

  std::size_t size() const { return n_; }
  Action& at(std::size_t i, std::size_t j) { return cells_[i * n_ + j]; }
  const Action& at(std::size_t i, std::size_t j) const { return cells_[i * n_ + j]; }

  double outgoing(std::size_t i) const {
    double s = 0.0;
    for (std::size_t j = 0; j < n_; ++j) s += at(i, j).magnitude();
    return s;
  }
  double incoming(std::size_t j) const {
    double s = 0.0;
    for (std::size_t i = 0; i < n_; ++i) s += at(i, j).magnitude();
    return s;
  }
  bool all_none() const {
    for (const auto& a : cells_)
      if (!a.is_none()) return false;
    return true;
  }

  /// Checks each action and every pool's total infiltration budget.
  void validate(std::span<const double> powers, double tol = kAlgebraicTolerance) const {
    if (powers.size() != n_) throw Error(Errc::InvalidConfig, "action matrix size differs from pool count");
    for (std::size_t i = 0; i < n_; ++i) {
      if (!at(i, i).is_none()) throw Error(Errc::InvalidAction, "pool cannot infiltrate itself");
      for (std::size_t j = 0; j < n_; ++j) validate_action(at(i, j), powers[i]);
      if (outgoing(i) > powers[i] + tol) {
        std::ostringstream os;
        os << "pool " << i << " infiltrates " << outgoing(i) << " with power " << powers[i];
        throw Error(Errc::InfiltrationBudgetExceeded, os.str());
      }
    }
  }

  friend bool operator==(const ActionMatrix&, const ActionMatrix&) = default;

 private:
  std::size_t n_ = 0;
  std::vector<Action> cells_;
};

namespace detail {

struct FawPart {
  std::size_t attacker, victim;
  double power;
};

inline std::vector<FawPart> faw_parts(const ActionMatrix& m) {
  std::vector<FawPart> out;
  for (std::size_t i = 0; i < m.size(); ++i)
    for (std::size_t j = 0; j < m.size(); ++j)
      if (m.at(i, j).faw > 0.0) out.push_back({i, j, m.at(i, j).faw});
  return out;
}

inline void check_npool_powers(std::span<const double> powers) {
  if (powers.size() < 2) throw Error(Errc::InvalidConfig, "need at least two pools");
  double sum = 0.0;
  for (double a : powers) {
    if (!(a > 0.0) || a > kMaxPoolPower) {
      std::ostringstream os;
      os << "pool power " << a;
      throw Error(Errc::InvalidPowers, os.str());
    }
    sum += a;
  }
  if (!(sum < 1.0)) throw Error(Errc::InvalidPowers, "pool powers must leave room for external miners");
}

// Victims whose held blocks are released when `publisher` publishes
// (publisher == n means an external miner).
inline std::vector<std::size_t> released_victims(const std::vector<FawPart>& parts, std::uint64_t held,
                                                 std::size_t publisher) {
  std::vector<std::size_t> victims;
  for (std::size_t t = 0; t < parts.size(); ++t) {
    if (!(held >> t & 1u)) continue;
    if (parts[t].attacker == publisher || parts[t].victim == publisher) continue;
    if (std::find(victims.begin(), victims.end(), parts[t].victim) == victims.end())
      victims.push_back(parts[t].victim);
  }
  return victims;
}

// Income-sharing matrix A with A V = D.
inline Eigen::MatrixXd sharing_matrix(std::span<const double> powers, const ActionMatrix& m) {
  const auto n = static_cast<Eigen::Index>(powers.size());
  Eigen::MatrixXd a = Eigen::MatrixXd::Zero(n, n);
  for (Eigen::Index k = 0; k < n; ++k) {
    a(k, k) = powers[static_cast<std::size_t>(k)] + m.incoming(static_cast<std::size_t>(k));
    for (Eigen::Index j = 0; j < n; ++j)
      if (j != k) a(k, j) -= m.at(static_cast<std::size_t>(k), static_cast<std::size_t>(j)).magnitude();
  }
  return a;
}

inline Eigen::PartialPivLU<Eigen::MatrixXd> sharing_solver(std::span<const double> powers, const ActionMatrix& m,
                                                           double tol) {
  Eigen::MatrixXd a = sharing_matrix(powers, m);
  Eigen::PartialPivLU<Eigen::MatrixXd> lu(a);
  if (!(std::abs(lu.determinant()) > tol * tol)) throw Error(Errc::DegenerateDenominator, "sharing matrix singular");
  return lu;
}

}  // namespace detail

/// Largest number of simultaneous FAW infiltrations solved exactly; beyond it
/// npool_payoffs falls back to simulation.
inline constexpr std::size_t kExactFawLimit = 20;

/// Expected direct block revenue per round of every pool.
inline std::vector<double> npool_direct_revenue(std::span<const double> powers, const ActionMatrix& m,
                                                double tol = kAlgebraicTolerance) {
  const std::size_t n = powers.size();
  const auto parts = detail::faw_parts(m);
  const std::size_t holders = parts.size();
  if (holders > kExactFawLimit) throw Error(Errc::InvalidConfig, "too many FAW infiltrations for exact solution");
  double wasted = 0.0, external = 1.0;
  std::vector<double> honest(n);
  for (std::size_t k = 0; k < n; ++k) {
    external -= powers[k];
    honest[k] = powers[k] - m.outgoing(k);
    for (std::size_t j = 0; j < n; ++j) wasted += m.at(k, j).bwh;
  }
  std::vector<double> d(n, 0.0);
  // prob[S]: probability that the set of holding infiltrators reaches S before a
  // block is published. States only grow, so increasing S is a topological order.
  std::vector<double> prob(std::size_t{1} << holders, 0.0);
  prob[0] = 1.0;
  for (std::uint64_t s = 0; s < prob.size(); ++s) {
    const double p = prob[s];
    if (p == 0.0) continue;
    double active = 1.0 - wasted;
    for (std::size_t t = 0; t < holders; ++t)
      if (s >> t & 1u) active -= parts[t].power;
    detail::require_positive(active, tol, "active mining power");
    for (std::size_t pub = 0; pub <= n; ++pub) {
      const double weight = pub == n ? external : honest[pub];
      if (weight <= 0.0) continue;
      const double q = p * weight / active;
      const auto victims = detail::released_victims(parts, s, pub);
      if (!victims.empty()) {
        for (std::size_t v : victims) d[v] += q / static_cast<double>(victims.size());
      } else if (pub < n) {
        d[pub] += q;
      }
    }
    for (std::size_t t = 0; t < holders; ++t)
      if (!(s >> t & 1u)) prob[s | (std::uint64_t{1} << t)] += p * parts[t].power / active;
  }
  return d;
}

struct NPoolEstimate {
  std::vector<double> u;
  std::vector<double> stderr_u;
  std::uint64_t rounds = 0;
};

/// Event-level simulation of the n-pool round model.
inline NPoolEstimate simulate_npool_rounds(std::span<const double> powers, const ActionMatrix& m,
                                           std::uint64_t rounds, std::uint64_t seed,
                                           double tol = kAlgebraicTolerance) {
  detail::check_npool_powers(powers);
  m.validate(powers, tol);
  if (rounds == 0) throw Error(Errc::InvalidConfig, "rounds must be positive");
  const std::size_t n = powers.size();

  struct Party {
    std::size_t pool;    // publisher index, n for external
    std::size_t victim;  // for infiltration parts
    bool faw;
    bool infiltration;
  };
  std::vector<Party> parties;
  std::vector<double> weights;
  double external = 1.0;
  for (double a : powers) external -= a;
  parties.push_back({n, n, false, false});
  weights.push_back(external);
  for (std::size_t k = 0; k < n; ++k) {
    parties.push_back({k, n, false, false});
    weights.push_back(powers[k] - m.outgoing(k));
  }
  std::vector<detail::FawPart> parts;
  std::vector<std::size_t> part_of(parties.size(), 0);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) {
      const Action& a = m.at(i, j);
      if (a.is_none()) continue;
      if (a.faw > 0.0) {
        part_of.push_back(parts.size());
        parts.push_back({i, j, a.faw});
      } else {
        part_of.push_back(0);
      }
      parties.push_back({i, j, a.faw > 0.0, true});
      weights.push_back(a.magnitude());
    }
  if (parts.size() > 63) throw Error(Errc::InvalidConfig, "too many FAW infiltrations to simulate");

  std::discrete_distribution<std::size_t> finder(weights.begin(), weights.end());
  std::mt19937_64 rng(seed);
  const auto lu = detail::sharing_solver(powers, m, tol);
  const Eigen::MatrixXd share = lu.inverse();

  std::vector<double> sum(n, 0.0), sq(n, 0.0);
  Eigen::VectorXd d(static_cast<Eigen::Index>(n));
  for (std::uint64_t r = 0; r < rounds; ++r) {
    d.setZero();
    std::uint64_t held = 0;
    for (bool published = false; !published;) {
      const std::size_t w = finder(rng);
      const Party& p = parties[w];
      if (p.infiltration) {
        if (p.faw) held |= std::uint64_t{1} << part_of[w];
        continue;
      }
      const auto victims = detail::released_victims(parts, held, p.pool);
      if (!victims.empty()) {
        std::uniform_int_distribution<std::size_t> pick(0, victims.size() - 1);
        d(static_cast<Eigen::Index>(victims[pick(rng)])) = 1.0;
      } else if (p.pool < n) {
        d(static_cast<Eigen::Index>(p.pool)) = 1.0;
      }
      published = true;
    }
    const Eigen::VectorXd v = share * d;
    for (std::size_t k = 0; k < n; ++k) {
      const double u = v(static_cast<Eigen::Index>(k)) - 1.0;
      sum[k] += u;
      sq[k] += u * u;
    }
  }
  NPoolEstimate est;
  est.rounds = rounds;
  const double cnt = static_cast<double>(rounds);
  for (std::size_t k = 0; k < n; ++k) {
    const double mean = sum[k] / cnt;
    const double var = std::max(0.0, sq[k] / cnt - mean * mean) * cnt / std::max(1.0, cnt - 1.0);
    est.u.push_back(mean);
    est.stderr_u.push_back(std::sqrt(var / cnt));
  }
  return est;
}

/// Extra reward density of every pool for the stage action matrix.
inline std::vector<double> npool_payoffs(std::span<const double> powers, const ActionMatrix& m,
                                         double tol = kAlgebraicTolerance, std::uint64_t fallback_seed = 0x5eed) {
  detail::check_npool_powers(powers);
  m.validate(powers, tol);
  if (detail::faw_parts(m).size() > kExactFawLimit)
    return simulate_npool_rounds(powers, m, 2'000'000, fallback_seed, tol).u;
  const std::vector<double> d = npool_direct_revenue(powers, m, tol);
  const auto lu = detail::sharing_solver(powers, m, tol);
  const Eigen::VectorXd v = lu.solve(Eigen::Map<const Eigen::VectorXd>(d.data(), static_cast<Eigen::Index>(d.size())));
  std::vector<double> u(powers.size());
  for (std::size_t k = 0; k < u.size(); ++k) u[k] = v(static_cast<Eigen::Index>(k)) - 1.0;
  return u;
}

}  // namespace arsim
