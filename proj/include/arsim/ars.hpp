#pragma once

// ARS_K: adaptive retaliation strategy.
//
// Each agent keeps a standing for itself and its opponent. A pool is in GOOD
// standing when its last action equals what ARS prescribed for it. An agent that
// is GOOD facing a BAD opponent retaliates; every other state plays no-attack.
// The retaliation power is picked from the set of powers that make the
// opponent's deviation unprofitable, balancing "equal retaliation" against the
// retaliator's own one-sided optimum.

#include <algorithm>
#include <cmath>
#include <optional>
#include <utility>
#include <vector>

#include "arsim/core.hpp"
#include "arsim/optimize.hpp"
#include "arsim/payoff.hpp"

namespace arsim {

/// K used for ARS_{1-} (K just below one).
inline constexpr double kOneMinus = 0.999;

/// What a retaliator knows about the previous stage.
struct RetaliationContext {
  double alpha_own = 0.0;
  double alpha_opp = 0.0;
  Action own_prev;
  Action opp_prev;
  Action opp_prescribed;
};

struct InfiltrationSet {
  AttackKind kind = AttackKind::FAW;
  std::vector<double> members;  // ascending

  bool empty() const { return members.empty(); }
};

namespace detail {

inline double opp_payoff(const RetaliationContext& c, const Action& own, const Action& opp) {
  return payoff_pair(c.alpha_opp, c.alpha_own, opp, own).first;
}

inline double own_payoff(const RetaliationContext& c, const Action& own, const Action& opp) {
  return payoff_pair(c.alpha_own, c.alpha_opp, own, opp).first;
}

// Terms of the candidate-set inequality that do not depend on the candidate.
struct SetTerms {
  double deviation_stage = 0.0;   // U_opp(a^{t-1})
  double compliant_stage = 0.0;   // U_opp(a_own^{t-1}, a_opp,ars^{t-1})
  double own_loss = 0.0;          // U_own(a^{t-1}) - U_own(a_own^{t-1}, a_opp,ars^{t-1})
};

inline SetTerms set_terms(const RetaliationContext& c) {
  SetTerms t;
  t.deviation_stage = opp_payoff(c, c.own_prev, c.opp_prev);
  t.compliant_stage = opp_payoff(c, c.own_prev, c.opp_prescribed);
  t.own_loss = own_payoff(c, c.own_prev, c.opp_prev) - own_payoff(c, c.own_prev, c.opp_prescribed);
  return t;
}

inline bool satisfies_set(const RetaliationContext& c, const SetTerms& t, AttackKind kind, double x,
                          double coef, double tol) {
  const double hit = opp_payoff(c, Action::of(kind, x), Action::none());
  return t.deviation_stage + coef * hit < t.compliant_stage - tol;
}

inline void check_context(const RetaliationContext& c) {
  check_powers(c.alpha_own, c.alpha_opp);
  validate_action(c.own_prev, c.alpha_own);
  validate_action(c.opp_prev, c.alpha_opp);
  validate_action(c.opp_prescribed, c.alpha_opp);
}

}  // namespace detail

/// True when retaliating with `kind` at power x makes the opponent's last
/// deviation unprofitable, with the hit weighted by `coef` (K for FAW, 1 for BWH).
inline bool in_infiltration_set(const RetaliationContext& ctx, AttackKind kind, double x, double coef,
                                double tol = kAlgebraicTolerance) {
  return detail::satisfies_set(ctx, detail::set_terms(ctx), kind, x, coef, tol);
}

inline InfiltrationSet build_infiltration_set(const RetaliationContext& ctx, AttackKind kind, double coef,
                                              int grid_resolution, double tol) {
  detail::check_context(ctx);
  const detail::SetTerms terms = detail::set_terms(ctx);
  InfiltrationSet set{kind, {}};
  for (int k = 0; k <= grid_resolution; ++k) {
    const double x = opt::grid_point(ctx.alpha_own, grid_resolution, k);
    if (detail::satisfies_set(ctx, terms, kind, x, coef, tol)) set.members.push_back(x);
  }
  return set;
}

/// FAW candidates: U_opp(a^{t-1}) + K U_opp((f,0), 0) < U_opp(a_own^{t-1}, a_opp,ars^{t-1}).
/// May be empty.
inline InfiltrationSet infiltration_set_faw(const RetaliationContext& ctx, double k,
                                            int grid_resolution = 1000,
                                            double tol = kAlgebraicTolerance) {
  return build_infiltration_set(ctx, AttackKind::FAW, k, grid_resolution, tol);
}

/// BWH candidates, same inequality with coefficient 1. Never empty for valid
/// contexts; an empty result throws EmptySetUnexpected.
inline InfiltrationSet infiltration_set_bwh(const RetaliationContext& ctx, int grid_resolution = 1000,
                                            double tol = kAlgebraicTolerance) {
  InfiltrationSet set = build_infiltration_set(ctx, AttackKind::BWH, 1.0, grid_resolution, tol);
  if (set.empty()) {
    std::ostringstream os;
    os << "IP_bwh empty for powers (" << ctx.alpha_own << ", " << ctx.alpha_opp << "), opp_prev "
       << ctx.opp_prev;
    throw Error(Errc::EmptySetUnexpected, os.str());
  }
  return set;
}

struct RetaliationChoice {
  Action action;
  AttackKind kind = AttackKind::FAW;
  //! Smallest power achieving equal retaliation, if any candidate does.
  std::optional<double> equal_retaliation;
  //! Candidate closest to the one-sided optimum.
  double nearest_optimum = 0.0;
  //! Size of the coarse candidate set the choice was made from.
  std::size_t candidates = 0;
};

namespace detail {

// F1/F2 (or B1/B2) selection on one branch. Coarse grid first, then one pass at
// 10x density around each coarse pick.
inline RetaliationChoice choose_on_branch(const RetaliationContext& ctx, const SetTerms& terms,
                                          const InfiltrationSet& set, double coef, int resolution,
                                          double tol) {
  const AttackKind kind = set.kind;
  const double optimum = optimal_infiltration(kind, ctx.alpha_own, ctx.alpha_opp);
  const double h = ctx.alpha_own / resolution;
  auto member = [&](double x) { return satisfies_set(ctx, terms, kind, x, coef, tol); };
  auto equal = [&](double x) { return terms.own_loss >= opp_payoff(ctx, Action::of(kind, x), Action::none()); };

  RetaliationChoice out;
  out.kind = kind;
  out.candidates = set.members.size();

  std::optional<double> f1;
  for (double x : set.members) {
    if (equal(x)) {
      f1 = x;
      break;
    }
  }
  double f2 = set.members.front();
  for (double x : set.members)
    if (std::abs(x - optimum) < std::abs(f2 - optimum)) f2 = x;

  const int fine = 10;
  if (f1 && *f1 > 0.0) {
    for (int s = 1; s <= fine; ++s) {
      const double x = std::max(0.0, *f1 - h + h * s / fine);
      if (x >= *f1) break;
      if (member(x) && equal(x)) {
        f1 = x;
        break;
      }
    }
  }
  {
    double best = f2;
    for (int s = -fine; s <= fine; ++s) {
      const double x = std::clamp(f2 + h * s / fine, 0.0, ctx.alpha_own);
      if (std::abs(x - optimum) < std::abs(best - optimum) && member(x)) best = x;
    }
    f2 = best;
  }

  out.equal_retaliation = f1;
  out.nearest_optimum = f2;
  const double x = f1 ? std::min(*f1, f2) : f2;
  out.action = x > 0.0 ? Action::of(kind, x) : Action::none();
  return out;
}

}  // namespace detail

/// Retaliation against an opponent whose last action departed from its
/// prescription. FAW is tried first; if no FAW power makes the deviation
/// unprofitable, BWH is used.
inline RetaliationChoice retaliate_detailed(const RetaliationContext& ctx, double k, int grid_resolution = 1000,
                                            double tol = kAlgebraicTolerance) {
  detail::check_context(ctx);
  if (!(k >= 0.0 && k < 1.0)) throw Error(Errc::InvalidConfig, "K must lie in [0,1)");
  if (!ctx.own_prev.is_none() && !ctx.opp_prescribed.is_none())
    throw Error(Errc::InvalidConfig, "own_prev and opp_prescribed cannot both be attacks");
  const detail::SetTerms terms = detail::set_terms(ctx);
  InfiltrationSet faw = infiltration_set_faw(ctx, k, grid_resolution, tol);
  if (!faw.empty()) return detail::choose_on_branch(ctx, terms, faw, k, grid_resolution, tol);
  InfiltrationSet bwh = infiltration_set_bwh(ctx, grid_resolution, tol);
  return detail::choose_on_branch(ctx, terms, bwh, 1.0, grid_resolution, tol);
}

inline Action retaliate(double alpha_own, const Action& own_prev, double alpha_opp, const Action& opp_prev,
                        const Action& opp_prescribed, double k, int grid_resolution = 1000,
                        double tol = kAlgebraicTolerance) {
  return retaliate_detailed({alpha_own, alpha_opp, own_prev, opp_prev, opp_prescribed}, k, grid_resolution, tol)
      .action;
}

/// Per-agent memory. Prescriptions for both sides are tracked so standings can be
/// judged from the observed actions alone.
struct ArsState {
  double k = kOneMinus;
  double opp_k = kOneMinus;
  std::size_t stage = 0;
  Standing own_standing = Standing::GOOD;
  Standing opp_standing = Standing::GOOD;
  Action last_own;
  Action last_opp;
  Action last_own_prescribed;
  Action last_opp_prescribed;
  int grid_resolution = 1000;
  double tolerance = kAlgebraicTolerance;

  static ArsState make(double k, int grid_resolution = 1000, double tolerance = kAlgebraicTolerance) {
    if (!(k >= 0.0 && k < 1.0)) throw Error(Errc::InvalidConfig, "K must lie in [0,1)");
    ArsState s;
    s.k = s.opp_k = k;
    s.grid_resolution = grid_resolution;
    s.tolerance = tolerance;
    return s;
  }
};

/// Prescribed action for the next stage plus the advanced state. The caller
/// records what was actually played with observe().
inline std::pair<Action, ArsState> ars_step(const ArsState& state, double alpha_own, double alpha_opp) {
  ArsState next = state;
  if (state.stage == 0) {
    next.own_standing = next.opp_standing = Standing::GOOD;
    next.last_own_prescribed = next.last_opp_prescribed = Action::none();
    next.stage = 1;
    return {Action::none(), next};
  }
  const double tol = state.tolerance;
  next.own_standing = approx_equal(state.last_own, state.last_own_prescribed, tol) ? Standing::GOOD : Standing::BAD;
  next.opp_standing = approx_equal(state.last_opp, state.last_opp_prescribed, tol) ? Standing::GOOD : Standing::BAD;

  Action own = Action::none();
  Action opp = Action::none();
  if (next.own_standing == Standing::GOOD && next.opp_standing == Standing::BAD) {
    own = retaliate(alpha_own, state.last_own, alpha_opp, state.last_opp, state.last_opp_prescribed, state.k,
                    state.grid_resolution, tol);
  } else if (next.own_standing == Standing::BAD && next.opp_standing == Standing::GOOD) {
    opp = retaliate(alpha_opp, state.last_opp, alpha_own, state.last_own, state.last_own_prescribed, state.opp_k,
                    state.grid_resolution, tol);
  }
  next.last_own_prescribed = own;
  next.last_opp_prescribed = opp;
  next.stage = state.stage + 1;
  return {own, next};
}

/// Records the actions actually played in the stage just completed.
inline ArsState observe(ArsState state, const Action& own_played, const Action& opp_played) {
  state.last_own = own_played;
  state.last_opp = opp_played;
  return state;
}

}  // namespace arsim
