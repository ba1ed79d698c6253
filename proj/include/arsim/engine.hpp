#pragma once

// Repeated-game execution: two-pool runs, the two-stage deviation sweeps behind
// the heatmaps, n-pool ARS tournaments, and the closed-pool scenario.

#include <cmath>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "arsim/ars.hpp"
#include "arsim/core.hpp"
#include "arsim/npool.hpp"
#include "arsim/optimize.hpp"
#include "arsim/parallel.hpp"
#include "arsim/payoff.hpp"

namespace arsim {

struct StageRecord {
  std::size_t stage = 0;
  ActionMatrix actions;
  std::vector<double> payoffs;
};

struct History {
  std::vector<StageRecord> records;
  double discount = 0.9;
};

/// Sum over stages of discount^t * U_pool(stage t), t counted from zero.
inline double discounted_payoff(const History& h, PoolId pool) {
  if (h.records.empty()) throw Error(Errc::EmptyInput, "empty history");
  double total = 0.0, weight = 1.0;
  for (const auto& r : h.records) {
    total += weight * r.payoffs.at(pool.index);
    weight *= h.discount;
  }
  return total;
}

// ---------------------------------------------------------------------------
// Strategies

struct ArsAgent {
  double k = kOneMinus;
};

/// Plays schedule[t] at stage t (one row per stage, indexed by target pool),
/// then no-attack.
struct ScriptedDeviator {
  std::vector<std::vector<Action>> schedule;

  /// Two-pool schedule: each entry targets the other pool.
  static ScriptedDeviator two_pool(std::vector<Action> actions, std::size_t self) {
    ScriptedDeviator s;
    for (const Action& a : actions) {
      std::vector<Action> row(2);
      row[1 - self] = a;
      s.schedule.push_back(std::move(row));
    }
    return s;
  }
};

/// Deviates at `stage` with the attack maximizing its own stage payoff against
/// every other pool at once; otherwise follows ARS_k.
struct OptimalOneShotAttacker {
  AttackKind kind = AttackKind::FAW;
  double k = kOneMinus;
  std::size_t stage = 0;
};

struct AlwaysHonest {};

using Strategy = std::variant<ArsAgent, ScriptedDeviator, OptimalOneShotAttacker, AlwaysHonest>;

struct EngineOptions {
  int grid_resolution = 1000;
  double tolerance = kAlgebraicTolerance;
  //! Coordinate-ascent sweeps for multi-target attackers.
  int ascent_sweeps = 5;
};

/// Attack vector of pool `self` maximizing its stage payoff when every other pool
/// plays no-attack. A single target uses the closed-form optimum; several targets
/// use coordinate ascent under the budget sum_j x_j <= alpha_self.
inline std::vector<Action> optimal_attack_vector(std::span<const double> powers, std::size_t self, AttackKind kind,
                                                 const EngineOptions& opts = {}) {
  const std::size_t n = powers.size();
  std::vector<Action> row(n);
  if (n == 2) {
    row[1 - self] = Action::of(kind, optimal_infiltration(kind, powers[self], powers[1 - self]));
    return row;
  }
  const double budget = powers[self];
  std::vector<double> x(n, 0.0);
  double start_total = 0.0;
  for (std::size_t j = 0; j < n; ++j)
    if (j != self) {
      x[j] = optimal_infiltration(kind, powers[self], powers[j]);
      start_total += x[j];
    }
  if (start_total > budget)
    for (double& v : x) v *= budget / start_total;

  auto payoff_of = [&](const std::vector<double>& xs) {
    ActionMatrix m(n);
    for (std::size_t j = 0; j < n; ++j)
      if (j != self && xs[j] > 0.0) m.at(self, j) = Action::of(kind, xs[j]);
    return npool_payoffs(powers, m, opts.tolerance)[self];
  };
  for (int sweep = 0; sweep < opts.ascent_sweeps; ++sweep) {
    for (std::size_t j = 0; j < n; ++j) {
      if (j == self) continue;
      double others = 0.0;
      for (std::size_t i = 0; i < n; ++i)
        if (i != j) others += x[i];
      const double upper = std::max(0.0, std::min(budget - others, powers[self]));
      auto trial = x;
      auto f = [&](double v) {
        trial[j] = v;
        return payoff_of(trial);
      };
      const auto best = opt::maximize_on_interval(f, 0.0, upper, 32, 1e-12);
      x[j] = best.x;
    }
  }
  for (std::size_t j = 0; j < n; ++j)
    if (j != self && x[j] > 0.0) row[j] = Action::of(kind, x[j]);
  return row;
}

namespace detail {

// Agent bookkeeping: one ARS state per opponent.
struct Agent {
  Strategy strategy;
  std::vector<ArsState> ars;  // indexed by opponent
};

inline double strategy_k(const Strategy& s) {
  if (const auto* a = std::get_if<ArsAgent>(&s)) return a->k;
  if (const auto* o = std::get_if<OptimalOneShotAttacker>(&s)) return o->k;
  return kOneMinus;
}

inline std::vector<Agent> make_agents(const std::vector<Strategy>& strategies, const EngineOptions& opts) {
  std::vector<Agent> agents;
  const std::size_t n = strategies.size();
  for (const auto& s : strategies) {
    Agent a{s, {}};
    a.ars.assign(n, ArsState::make(strategy_k(s), opts.grid_resolution, opts.tolerance));
    agents.push_back(std::move(a));
  }
  // Each agent models its opponent as ARS with the opponent's own K.
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) agents[i].ars[j].opp_k = strategy_k(strategies[j]);
  return agents;
}

}  // namespace detail

/// Plays `stages` stages of the n-pool game. Pools observe all pairwise actions of
/// the previous stage and run ARS independently against each opponent.
inline History run_npool(const GameConfig& config, const std::vector<Strategy>& strategies, std::size_t stages,
                         const EngineOptions& engine = {}) {
  config.validate();
  const std::vector<double> powers = config.powers();
  const std::size_t n = powers.size();
  if (n < 2) throw Error(Errc::InvalidConfig, "need at least two pools");
  if (strategies.size() != n) throw Error(Errc::InvalidConfig, "one strategy per pool required");
  EngineOptions opts = engine;
  opts.grid_resolution = config.grid_resolution;
  opts.tolerance = config.tolerance;
  auto agents = detail::make_agents(strategies, opts);

  History h;
  h.discount = config.discount;
  for (std::size_t t = 0; t < stages; ++t) {
    ActionMatrix m(n);
    std::vector<std::vector<ArsState>> next(n);
    for (std::size_t i = 0; i < n; ++i) {
      next[i].resize(n);
      std::vector<Action> prescribed(n);
      for (std::size_t j = 0; j < n; ++j) {
        if (j == i) {
          next[i][j] = agents[i].ars[j];
          continue;
        }
        auto [a, s] = ars_step(agents[i].ars[j], powers[i], powers[j]);
        prescribed[j] = a;
        next[i][j] = s;
      }
      std::vector<Action> row = prescribed;
      std::visit(
          [&](const auto& s) {
            using S = std::decay_t<decltype(s)>;
            if constexpr (std::is_same_v<S, ScriptedDeviator>) {
              row.assign(n, Action::none());
              if (t < s.schedule.size())
                for (std::size_t j = 0; j < n && j < s.schedule[t].size(); ++j) row[j] = s.schedule[t][j];
            } else if constexpr (std::is_same_v<S, OptimalOneShotAttacker>) {
              if (t == s.stage) row = optimal_attack_vector(powers, i, s.kind, opts);
            } else if constexpr (std::is_same_v<S, AlwaysHonest>) {
              row.assign(n, Action::none());
            }
          },
          agents[i].strategy);
      for (std::size_t j = 0; j < n; ++j)
        if (j != i) m.at(i, j) = row[j];
    }
    m.validate(powers, config.tolerance);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j)
        if (j != i) agents[i].ars[j] = observe(next[i][j], m.at(i, j), m.at(j, i));

    StageRecord rec;
    rec.stage = t;
    rec.actions = m;
    if (n == 2) {
      const auto p = payoff_pair(powers[0], powers[1], m.at(0, 1), m.at(1, 0), config.tolerance);
      rec.payoffs = {p.first, p.second};
    } else {
      rec.payoffs = npool_payoffs(powers, m, config.tolerance, config.seed + t);
    }
    h.records.push_back(std::move(rec));
  }
  return h;
}

/// Two-pool repeated game.
inline History run_repeated(const GameConfig& config, const std::vector<Strategy>& strategies, std::size_t stages,
                            const EngineOptions& engine = {}) {
  if (config.pools.size() != 2) throw Error(Errc::InvalidConfig, "run_repeated takes exactly two pools");
  return run_npool(config, strategies, stages, engine);
}

/// Re-evaluates recorded actions; used to audit a history.
inline std::vector<double> stage_payoffs(std::span<const double> powers, const ActionMatrix& m,
                                         double tol = kAlgebraicTolerance) {
  if (powers.size() == 2) {
    const auto p = payoff_pair(powers[0], powers[1], m.at(0, 1), m.at(1, 0), tol);
    return {p.first, p.second};
  }
  return npool_payoffs(powers, m, tol);
}

// ---------------------------------------------------------------------------
// Two-stage deviation analysis

struct TwoStageCell {
  double alpha_1 = 0.0;
  double alpha_2 = 0.0;
  double attack_ratio = 0.0;  // attacker infiltration / alpha_1
  Action deviation;
  Action retaliation;
  double r2_faw = 0.0;  // f_2 / alpha_2
  double r2_bwh = 0.0;  // b_2 / alpha_2
  double u1_avg = 0.0;
  double u2_avg = 0.0;
  bool faw_infeasible = false;  // no FAW power could retaliate
  std::string error;            // non-empty when the cell failed
};

/// Pool 1 deviates with `deviation` at stage 0, pool 2 retaliates with ARS_k at
/// stage 1. Averages are (U(stage 0) + U(stage 1)) / 2.
inline TwoStageCell two_stage_cell(double alpha_1, double alpha_2, const Action& deviation, double k,
                                   int grid_resolution = 1000) {
  TwoStageCell c;
  c.alpha_1 = alpha_1;
  c.alpha_2 = alpha_2;
  c.deviation = deviation;
  c.attack_ratio = deviation.magnitude() / alpha_1;
  try {
    const RetaliationContext ctx{alpha_2, alpha_1, Action::none(), deviation, Action::none()};
    c.faw_infeasible = infiltration_set_faw(ctx, k, grid_resolution).empty();
    c.retaliation = retaliate_detailed(ctx, k, grid_resolution).action;
    c.r2_faw = c.retaliation.faw / alpha_2;
    c.r2_bwh = c.retaliation.bwh / alpha_2;
    const auto s0 = payoff_pair(alpha_1, alpha_2, deviation, Action::none());
    const auto s1 = payoff_pair(alpha_1, alpha_2, Action::none(), c.retaliation);
    c.u1_avg = 0.5 * (s0.first + s1.first);
    c.u2_avg = 0.5 * (s0.second + s1.second);
  } catch (const Error& e) {
    c.error = e.what();
  }
  return c;
}

/// Uniform power axis: `points` values from 0.01 to 0.49.
inline std::vector<double> power_axis(int points) {
  std::vector<double> axis;
  for (int i = 0; i < points; ++i) axis.push_back(points == 1 ? 0.25 : 0.01 + 0.48 * i / (points - 1));
  return axis;
}

/// Attacker plays its optimal one-shot `kind` attack on every (alpha_1, alpha_2)
/// cell with alpha_1 + alpha_2 <= 0.9.
inline std::vector<TwoStageCell> two_stage_sweep(std::span<const double> alpha_grid, AttackKind kind, double k,
                                                 int grid_resolution = 1000) {
  std::vector<std::pair<double, double>> cells;
  for (double a1 : alpha_grid)
    for (double a2 : alpha_grid)
      if (a1 + a2 <= 0.9 + 1e-12) cells.emplace_back(a1, a2);
  std::vector<TwoStageCell> out(cells.size());
  parallel_for(cells.size(), [&](std::size_t n) {
    const auto [a1, a2] = cells[n];
    try {
      out[n] = two_stage_cell(a1, a2, Action::of(kind, optimal_infiltration(kind, a1, a2)), k, grid_resolution);
    } catch (const Error& e) {
      out[n].alpha_1 = a1;
      out[n].alpha_2 = a2;
      out[n].error = e.what();
    }
  });
  return out;
}

/// Fixed attacker power; sweeps the attacker's infiltration ratio in (0, 1]
/// against each victim power.
inline std::vector<TwoStageCell> ratio_sweep(double alpha_1, std::span<const double> ratios,
                                             std::span<const double> victim_powers, AttackKind kind, double k,
                                             int grid_resolution = 1000) {
  std::vector<std::pair<double, double>> cells;
  for (double r : ratios)
    for (double a2 : victim_powers)
      if (r > 0.0 && r <= 1.0 && alpha_1 + a2 <= 0.9 + 1e-12) cells.emplace_back(r, a2);
  std::vector<TwoStageCell> out(cells.size());
  parallel_for(cells.size(), [&](std::size_t n) {
    const auto [r, a2] = cells[n];
    out[n] = two_stage_cell(alpha_1, a2, Action::of(kind, std::min(alpha_1, r * alpha_1)), k, grid_resolution);
  });
  return out;
}

// ---------------------------------------------------------------------------
// n-pool deviation scenario

struct NPoolDeviationReport {
  std::vector<double> powers;
  std::vector<Action> deviation;    // attacker's row at stage 0
  std::vector<Action> retaliation;  // each victim's action on the attacker at stage 1
  std::vector<double> u_stage0;
  std::vector<double> u_stage1;
  double attacker_total = 0.0;  // U(stage 0) + U(stage 1)
};

/// Pool `attacker` deviates optimally against all others at stage 0; all others
/// play ARS_k. Two stages are played.
inline NPoolDeviationReport npool_deviation(std::span<const double> powers, std::size_t attacker, AttackKind kind,
                                            double k, int grid_resolution = 1000) {
  GameConfig cfg = make_config(powers, grid_resolution);
  std::vector<Strategy> strategies(powers.size(), ArsAgent{k});
  strategies[attacker] = OptimalOneShotAttacker{kind, k, 0};
  const History h = run_npool(cfg, strategies, 2);
  NPoolDeviationReport r;
  r.powers.assign(powers.begin(), powers.end());
  for (std::size_t j = 0; j < powers.size(); ++j) {
    r.deviation.push_back(h.records[0].actions.at(attacker, j));
    r.retaliation.push_back(h.records[1].actions.at(j, attacker));
  }
  r.u_stage0 = h.records[0].payoffs;
  r.u_stage1 = h.records[1].payoffs;
  r.attacker_total = r.u_stage0[attacker] + r.u_stage1[attacker];
  return r;
}

// ---------------------------------------------------------------------------
// Two-pool deviation table: one attacker against several victims, one at a time.

struct DeviationRow {
  double victim_power = 0.0;
  AttackKind kind = AttackKind::FAW;
  Action deviation;
  Action retaliation;
  double retaliation_ratio = 0.0;  // retaliation magnitude / victim power
  double attacker_total = 0.0;     // U_1(stage 0) + U_1(stage 1)
};

inline std::vector<DeviationRow> deviation_table(double attacker_power, std::span<const double> victims, double k,
                                                 int grid_resolution = 1000) {
  std::vector<DeviationRow> rows;
  for (double v : victims)
    for (AttackKind kind : {AttackKind::FAW, AttackKind::BWH}) {
      const TwoStageCell c =
          two_stage_cell(attacker_power, v, Action::of(kind, optimal_infiltration(kind, attacker_power, v)), k,
                         grid_resolution);
      if (!c.error.empty()) throw Error(Errc::InvalidScenario, c.error);
      rows.push_back({v, kind, c.deviation, c.retaliation, c.retaliation.magnitude() / v, 2.0 * c.u1_avg});
    }
  return rows;
}

// ---------------------------------------------------------------------------
// Closed pools and solo miners: one-sided optimal FAW with no retaliation.

struct ClosedPoolCase {
  std::string name;
  double attacker_power = 0.0;
  double victim_power = 0.0;
  double infiltration = 0.0;
  double attacker_gain = 0.0;
  double victim_loss = 0.0;  // victim's payoff (negative = loss)
};

inline ClosedPoolCase closed_pool_case(std::string name, double attacker_power, double victim_power) {
  ClosedPoolCase c{std::move(name), attacker_power, victim_power, 0.0, 0.0, 0.0};
  if (attacker_power == 0.0) return c;
  c.infiltration = optimal_faw_infiltration(attacker_power, victim_power);
  const auto p = payoff_pair(attacker_power, victim_power, Action::fork_after_withholding(c.infiltration),
                             Action::none());
  c.attacker_gain = p.first;
  c.victim_loss = p.second;
  return c;
}

inline std::vector<ClosedPoolCase> closed_pool_scenario() {
  return {closed_pool_case("bitfury", 0.031, 0.25), closed_pool_case("58coin", 0.013, 0.25)};
}

}  // namespace arsim
