#pragma once

// Stage-game equilibrium, the discount-factor bound for (ARS_K, ARS_K), the
// one-deviation check, and the audit showing the BWH candidate set is never empty.

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "arsim/ars.hpp"
#include "arsim/core.hpp"
#include "arsim/optimize.hpp"
#include "arsim/parallel.hpp"
#include "arsim/payoff.hpp"

namespace arsim {

// ---------------------------------------------------------------------------
// Stage Nash equilibrium

struct StageEquilibrium {
  std::array<Action, 2> actions;
  StagePayoffs payoffs;
  std::size_t iterations = 0;
  bool converged = false;
};

/// Thrown when best-response dynamics exhaust their iteration budget.
class NonConvergenceError : public Error {
 public:
  NonConvergenceError(const std::string& detail, StageEquilibrium last)
      : Error(Errc::NonConvergence, detail), last_(last) {}
  const StageEquilibrium& last_iterate() const { return last_; }

 private:
  StageEquilibrium last_;
};

/// Best FAW reply of a pool with power `alpha_self` to the opponent's FAW power.
inline double faw_best_response(double alpha_self, double alpha_other, double other_faw, int grid_resolution) {
  auto u = [&](double f) {
    return payoff_pair(alpha_self, alpha_other, Action::fork_after_withholding(f),
                       Action::fork_after_withholding(other_faw))
        .first;
  };
  return opt::maximize_on_interval(u, 0.0, alpha_self, grid_resolution + 1, 1e-13).x;
}

struct NashOptions {
  int grid_resolution = 1000;
  std::size_t max_iterations = 10000;
  //! Argmax of a smooth maximum is only resolvable to about sqrt(machine eps).
  double tolerance = 1e-7;
  //! Starting FAW powers; defaults to no attack.
  std::array<double, 2> start{0.0, 0.0};
};

/// Best-response dynamics restricted to FAW actions (BWH is dominated by FAW of
/// the same power). Pools update alternately.
inline StageEquilibrium stage_nash(double alpha_1, double alpha_2, const NashOptions& opts = {}) {
  detail::check_powers(alpha_1, alpha_2);
  if (opts.grid_resolution < 100) throw Error(Errc::InvalidConfig, "grid_resolution must be at least 100");
  double f1 = std::clamp(opts.start[0], 0.0, alpha_1);
  double f2 = std::clamp(opts.start[1], 0.0, alpha_2);
  StageEquilibrium eq;
  for (std::size_t it = 1; it <= opts.max_iterations; ++it) {
    const double n1 = faw_best_response(alpha_1, alpha_2, f2, opts.grid_resolution);
    const double n2 = faw_best_response(alpha_2, alpha_1, n1, opts.grid_resolution);
    const double change = std::max(std::abs(n1 - f1), std::abs(n2 - f2));
    f1 = n1;
    f2 = n2;
    eq.iterations = it;
    if (change < opts.tolerance) {
      eq.converged = true;
      break;
    }
  }
  eq.actions = {Action::fork_after_withholding(f1), Action::fork_after_withholding(f2)};
  eq.payoffs = payoff_pair(alpha_1, alpha_2, eq.actions[0], eq.actions[1]);
  if (!eq.converged) {
    std::ostringstream os;
    os << "best-response dynamics stopped at (" << f1 << ", " << f2 << ") after " << eq.iterations
       << " iterations";
    throw NonConvergenceError(os.str(), eq);
  }
  return eq;
}

inline StageEquilibrium stage_nash(double alpha_1, double alpha_2, int grid_resolution) {
  NashOptions opts;
  opts.grid_resolution = grid_resolution;
  return stage_nash(alpha_1, alpha_2, opts);
}

// ---------------------------------------------------------------------------
// Discount bound
//
// A one-stage deviation is unprofitable iff
//   delta >= (U_d(compliant stage) - U_d(deviation stage)) / U_d(retaliation stage),
// where d is the deviator. Each subgame class gives one such ratio; the bound is
// the largest ratio over sampled deviations and classes, for both role
// assignments. Samples whose retaliation leaves the deviator at zero are skipped.

enum class SubgameClass { GoodGood, RetaliatorPunishing, DeviatorPunishing, BadBad };

inline constexpr std::array<SubgameClass, 4> kSubgameClasses{
    SubgameClass::GoodGood, SubgameClass::RetaliatorPunishing, SubgameClass::DeviatorPunishing,
    SubgameClass::BadBad};

inline const char* to_string(SubgameClass c) {
  switch (c) {
    case SubgameClass::GoodGood: return "GG";
    case SubgameClass::RetaliatorPunishing: return "GB";
    case SubgameClass::DeviatorPunishing: return "BG";
    case SubgameClass::BadBad: return "BB";
  }
  return "?";
}

struct DeltaBoundOptions {
  //! Deviation magnitudes sampled per attack kind (uniform over (0, alpha]).
  int deviation_samples = 24;
  //! Prior retaliations sampled for the punishing classes.
  int prior_samples = 6;
  //! Grid used inside Retaliate.
  int grid_resolution = 400;
};

struct RatioFamily {
  double alpha_retaliator = 0.0;
  double alpha_deviator = 0.0;
  //! Largest ratio per subgame class; -inf when every sample was skipped.
  std::array<double, 4> per_class{};
  std::size_t evaluated = 0;
  std::size_t skipped = 0;

  double max() const { return *std::max_element(per_class.begin(), per_class.end()); }
};

struct DeltaBound {
  double alpha_1 = 0.0;
  double alpha_2 = 0.0;
  double k = 0.0;
  double bound = 0.0;
  RatioFamily x1;  // pool 1 retaliates against pool 2
  RatioFamily x2;  // pool 2 retaliates against pool 1
  //! The first and last expressions of each family coincide (both standings
  //! equal reduces to the same ratio).
  std::vector<std::string> notes;
};

namespace detail {

inline std::vector<Action> sample_deviations(double alpha, int per_kind) {
  std::vector<Action> out;
  out.reserve(2 * static_cast<std::size_t>(per_kind));
  for (AttackKind kind : {AttackKind::FAW, AttackKind::BWH})
    for (int s = 1; s <= per_kind; ++s) out.push_back(Action::of(kind, opt::grid_point(alpha, per_kind, s)));
  return out;
}

// Retaliations the retaliator could be executing at the start of a subgame:
// responses to earlier deviations of the opponent.
inline std::vector<Action> sample_prior_retaliations(double alpha_ret, double alpha_opp, double k, int samples,
                                                     int grid) {
  std::vector<Action> out;
  for (const Action& d : sample_deviations(alpha_opp, samples)) {
    const Action r = retaliate(alpha_ret, Action::none(), alpha_opp, d, Action::none(), k, grid);
    if (!r.is_none() &&
        std::none_of(out.begin(), out.end(), [&](const Action& a) { return approx_equal(a, r); }))
      out.push_back(r);
  }
  return out;
}

}  // namespace detail

/// Ratio family for one role assignment. u_d(retaliator action, deviator action)
/// is the deviator's stage payoff.
inline RatioFamily ratio_family(double alpha_ret, double alpha_dev, double k, const DeltaBoundOptions& opts = {}) {
  const double ninf = -std::numeric_limits<double>::infinity();
  RatioFamily fam;
  fam.alpha_retaliator = alpha_ret;
  fam.alpha_deviator = alpha_dev;
  fam.per_class.fill(ninf);
  auto u_d = [&](const Action& ret, const Action& dev) { return payoff_pair(alpha_dev, alpha_ret, dev, ret).first; };
  const int grid = opts.grid_resolution;
  const auto deviations = detail::sample_deviations(alpha_dev, opts.deviation_samples);

  auto consider = [&](std::size_t cls, const Action& ret_now, const Action& dev_presc, const Action& dev) {
    if (approx_equal(dev, dev_presc)) return;
    const Action hit = retaliate(alpha_ret, ret_now, alpha_dev, dev, dev_presc, k, grid);
    const double denom = u_d(hit, Action::none());
    if (std::abs(denom) <= kAlgebraicTolerance * kAlgebraicTolerance) {
      ++fam.skipped;
      return;
    }
    const double ratio = (u_d(ret_now, dev_presc) - u_d(ret_now, dev)) / denom;
    fam.per_class[cls] = std::max(fam.per_class[cls], ratio);
    ++fam.evaluated;
  };

  // Both standings equal: nobody is prescribed to attack.
  for (const Action& dev : deviations) {
    consider(0, Action::none(), Action::none(), dev);
    consider(3, Action::none(), Action::none(), dev);
  }
  // Retaliator punishing the deviator at stage 0.
  for (const Action& r0 : detail::sample_prior_retaliations(alpha_ret, alpha_dev, k, opts.prior_samples, grid))
    for (const Action& dev : deviations) consider(1, r0, Action::none(), dev);
  // Deviator prescribed to punish the retaliator; deviating means punishing
  // differently (including not at all).
  for (const Action& p0 : detail::sample_prior_retaliations(alpha_dev, alpha_ret, k, opts.prior_samples, grid)) {
    consider(2, Action::none(), p0, Action::none());
    for (const Action& dev : deviations) consider(2, Action::none(), p0, dev);
  }
  return fam;
}

/// Smallest discount factor (over the sampled deviations) above which no
/// one-stage deviation from (ARS_K, ARS_K) pays.
inline DeltaBound delta_bound(double alpha_1, double alpha_2, double k, const DeltaBoundOptions& opts = {}) {
  detail::check_powers(alpha_1, alpha_2);
  if (!(k >= 0.0 && k < 1.0)) throw Error(Errc::InvalidConfig, "K must lie in [0,1)");
  DeltaBound out;
  out.alpha_1 = alpha_1;
  out.alpha_2 = alpha_2;
  out.k = k;
  out.x1 = ratio_family(alpha_1, alpha_2, k, opts);
  out.x2 = ratio_family(alpha_2, alpha_1, k, opts);
  out.bound = std::max(out.x1.max(), out.x2.max());
  out.notes.push_back("GG and BB expressions coincide; both evaluated");
  return out;
}

// ---------------------------------------------------------------------------
// One-deviation check, played out with ARS agents

struct DeviationOutcome {
  SubgameClass subgame = SubgameClass::GoodGood;
  Action deviation;
  double compliant = 0.0;  // deviator's discounted payoff when following ARS
  double deviating = 0.0;  // same, deviating once at stage 0
  bool profitable() const { return deviating > compliant + 1e-12; }
};

struct OneDeviationReport {
  double delta = 0.0;
  std::vector<DeviationOutcome> outcomes;
  std::array<std::size_t, 4> profitable{};
  std::array<std::size_t, 4> sampled{};
  bool all_unprofitable() const {
    return std::all_of(profitable.begin(), profitable.end(), [](std::size_t n) { return n == 0; });
  }
};

namespace detail {

struct Pair {
  ArsState ret, dev;
};

// Plays one stage: both agents take their prescriptions unless the deviator's
// action is overridden. Returns the deviator's payoff.
inline double play(Pair& p, double alpha_ret, double alpha_dev, const std::optional<Action>& dev_override,
                   const std::optional<Action>& ret_override = std::nullopt) {
  auto [ra, rs] = ars_step(p.ret, alpha_ret, alpha_dev);
  auto [da, ds] = ars_step(p.dev, alpha_dev, alpha_ret);
  if (ret_override) ra = *ret_override;
  if (dev_override) da = *dev_override;
  p.ret = observe(rs, ra, da);
  p.dev = observe(ds, da, ra);
  return payoff_pair(alpha_dev, alpha_ret, da, ra).first;
}

inline double continue_play(Pair p, double alpha_ret, double alpha_dev, double delta,
                            const std::optional<Action>& first, std::size_t stages) {
  double total = 0.0, weight = 1.0;
  for (std::size_t t = 0; t < stages; ++t) {
    total += weight * play(p, alpha_ret, alpha_dev, t == 0 ? first : std::nullopt);
    weight *= delta;
  }
  return total;
}

}  // namespace detail

/// For each subgame class, samples deviations of the deviator at stage 0 and
/// compares discounted payoffs of deviating once versus following ARS_K, with the
/// continuation actually played out by ARS agents.
inline OneDeviationReport one_deviation_check(double alpha_ret, double alpha_dev, double k, double delta,
                                              int samples_per_class = 100, int grid_resolution = 400,
                                              std::size_t stages = 6) {
  detail::check_powers(alpha_ret, alpha_dev);
  if (!(delta > 0.0 && delta < 1.0)) throw Error(Errc::InvalidConfig, "discount must lie in (0,1)");
  OneDeviationReport report;
  report.delta = delta;
  const int per_kind = std::max(1, samples_per_class / 2);
  const auto deviations = detail::sample_deviations(alpha_dev, per_kind);

  const ArsState fresh = ArsState::make(k, grid_resolution);
  detail::Pair start{fresh, fresh};
  detail::play(start, alpha_ret, alpha_dev, std::nullopt);  // stage with no history

  auto setup = [&](SubgameClass cls) {
    detail::Pair p = start;
    const double m_dev = optimal_faw_infiltration(alpha_dev, alpha_ret);
    const double m_ret = optimal_faw_infiltration(alpha_ret, alpha_dev);
    switch (cls) {
      case SubgameClass::GoodGood: break;
      case SubgameClass::RetaliatorPunishing:
        detail::play(p, alpha_ret, alpha_dev, Action::fork_after_withholding(m_dev));
        break;
      case SubgameClass::DeviatorPunishing:
        detail::play(p, alpha_ret, alpha_dev, std::nullopt, Action::fork_after_withholding(m_ret));
        break;
      case SubgameClass::BadBad:
        detail::play(p, alpha_ret, alpha_dev, Action::fork_after_withholding(m_dev),
                     Action::fork_after_withholding(m_ret));
        break;
    }
    return p;
  };

  for (std::size_t c = 0; c < kSubgameClasses.size(); ++c) {
    const detail::Pair p = setup(kSubgameClasses[c]);
    const double compliant = detail::continue_play(p, alpha_ret, alpha_dev, delta, std::nullopt, stages);
    std::vector<Action> devs = deviations;
    devs.push_back(Action::none());
    for (const Action& dev : devs) {
      DeviationOutcome o;
      o.subgame = kSubgameClasses[c];
      o.deviation = dev;
      o.compliant = compliant;
      o.deviating = detail::continue_play(p, alpha_ret, alpha_dev, delta, dev, stages);
      // Playing the prescription is not a deviation.
      auto [presc, ignored] = ars_step(p.dev, alpha_dev, alpha_ret);
      if (approx_equal(presc, dev)) continue;
      ++report.sampled[c];
      if (o.profitable()) ++report.profitable[c];
      report.outcomes.push_back(o);
    }
  }
  return report;
}

// ---------------------------------------------------------------------------
// IP_bwh non-emptiness audit
//
// For retaliator i (power a_i) and deviator j (power a_j), the retaliation b must
// outweigh the deviator's gain in every context ARS can produce:
//
//   min { U_j(a_i, 0) - U_j(a_i, a_j),  U_j(0, a_j,ars) - U_j(0, a_j) } - U_j((0,k), 0) > 0
//
// with a_i = (f, 0), f in [0, max(k, F*)], F* the FAW power minimizing U_j,
// a_j = (f_j, 0) any deviation, and a_j,ars = (0, b_j), b_j in [0, k'] where k'
// is the same quantity for the mirrored cell. At k = M_i^B this is the plain test.

struct AuditCell {
  double alpha_i = 0.0;
  double alpha_j = 0.0;
  double f_plain = 0.0;   // value at k = M_i^B
  double k = 0.0;         // smallest k >= M_i^B making the value positive (or NaN)
  double f_at_k = 0.0;
  bool pass = false;
};

struct AuditReport {
  std::vector<AuditCell> cells;
  std::size_t failures() const {
    return static_cast<std::size_t>(std::count_if(cells.begin(), cells.end(), [](const AuditCell& c) { return !c.pass; }));
  }
  void write_csv(std::ostream& os) const {
    os << "alpha_i,alpha_j,F,k,F_prime,pass\n";
    for (const auto& c : cells)
      os << c.alpha_i << ',' << c.alpha_j << ',' << c.f_plain << ',' << c.k << ',' << c.f_at_k << ','
         << (c.pass ? "pass" : "fail") << '\n';
  }
};

namespace detail {

// Per-cell precomputation on a grid of `res` points.
struct AuditCurves {
  double alpha_i = 0.0, alpha_j = 0.0;
  double m_b = 0.0;        // M_i^B
  double f_star = 0.0;     // FAW power of i minimizing U_j
  std::vector<double> x;   // grid over [0, alpha_i]
  std::vector<double> attacked_gain_min;  // prefix over f of min_fj U_j((f,0),0) - U_j((f,0),(fj,0))
  double deviation_gain = 0.0;            // max_fj U_j(0,(fj,0))
  std::vector<double> y;                  // grid over [0, alpha_j]
  std::vector<double> bwh_own_min;        // prefix over b of min U_j(0,(0,b))
};

inline AuditCurves audit_curves(double a_i, double a_j, int res) {
  AuditCurves c;
  c.alpha_i = a_i;
  c.alpha_j = a_j;
  c.m_b = optimal_bwh_infiltration(a_i, a_j);
  c.f_star = optimal_faw_infiltration(a_i, a_j);
  auto uj = [&](const Action& ai, const Action& aj) { return payoff_pair(a_j, a_i, aj, ai).first; };
  std::vector<Action> devs;
  for (int s = 0; s <= res; ++s) devs.push_back(Action::fork_after_withholding(opt::grid_point(a_j, res, s)));
  double running = std::numeric_limits<double>::infinity();
  for (int s = 0; s <= res; ++s) {
    const double f = opt::grid_point(a_i, res, s);
    c.x.push_back(f);
    const Action ai = Action::fork_after_withholding(f);
    const double base = uj(ai, Action::none());
    for (const Action& d : devs) running = std::min(running, base - uj(ai, d));
    c.attacked_gain_min.push_back(running);
  }
  for (const Action& d : devs) c.deviation_gain = std::max(c.deviation_gain, uj(Action::none(), d));
  running = std::numeric_limits<double>::infinity();
  for (int s = 0; s <= res; ++s) {
    const double b = opt::grid_point(a_j, res, s);
    c.y.push_back(b);
    running = std::min(running, uj(Action::none(), Action::block_withholding(b)));
    c.bwh_own_min.push_back(running);
  }
  return c;
}

inline std::size_t index_at_or_below(const std::vector<double>& grid, double v) {
  auto it = std::upper_bound(grid.begin(), grid.end(), v + 1e-15);
  return it == grid.begin() ? 0 : static_cast<std::size_t>(it - grid.begin() - 1);
}

inline double hit_at(const AuditCurves& c, double k) {
  return payoff_pair(c.alpha_j, c.alpha_i, Action::none(), Action::block_withholding(k)).first;
}

// Value of the audited expression for retaliation power k and mirrored bound kp.
inline double audit_value(const AuditCurves& c, double k, double kp) {
  const double f_range = std::max(k, c.f_star);
  const double term1 = c.attacked_gain_min[index_at_or_below(c.x, std::min(f_range, c.alpha_i))];
  const double term2 = c.bwh_own_min[index_at_or_below(c.y, std::min(kp, c.alpha_j))] - c.deviation_gain;
  return std::min(term1, term2) - hit_at(c, k);
}

// Smallest grid k >= M^B with a positive value; NaN if none.
inline double audit_search(const AuditCurves& c, double kp, double& value_at_k) {
  std::vector<double> ks{c.m_b};
  for (double x : c.x)
    if (x > c.m_b) ks.push_back(x);
  for (double k : ks) {
    const double v = audit_value(c, k, kp);
    if (v > 0.0) {
      value_at_k = v;
      return k;
    }
  }
  value_at_k = audit_value(c, c.alpha_i, kp);
  return std::numeric_limits<double>::quiet_NaN();
}

}  // namespace detail

/// Audits one (retaliator, deviator) power pair.
inline AuditCell audit_ipbwh_cell(double alpha_i, double alpha_j, int resolution = 200) {
  detail::check_powers(alpha_i, alpha_j);
  const detail::AuditCurves c = detail::audit_curves(alpha_i, alpha_j, resolution);
  const detail::AuditCurves m = detail::audit_curves(alpha_j, alpha_i, resolution);
  AuditCell cell;
  cell.alpha_i = alpha_i;
  cell.alpha_j = alpha_j;
  // k' starts at the mirrored M^B and is iterated with the mirrored cell until stable.
  double kp = m.m_b;
  double k = c.m_b;
  double v = 0.0;
  for (int round = 0; round < 20; ++round) {
    k = detail::audit_search(c, kp, v);
    if (std::isnan(k)) break;
    double vm = 0.0;
    const double kp_next = detail::audit_search(m, k, vm);
    if (std::isnan(kp_next) || std::abs(kp_next - kp) < 1e-15) {
      if (!std::isnan(kp_next)) kp = kp_next;
      break;
    }
    kp = kp_next;
  }
  cell.f_plain = detail::audit_value(c, c.m_b, m.m_b);
  cell.k = k;
  cell.f_at_k = v;
  cell.pass = !std::isnan(k);
  return cell;
}

/// Audits a square grid of powers in [0.01, 0.49] with alpha_i + alpha_j <= 0.9.
inline AuditReport audit_ipbwh_nonempty(int power_grid = 30, int resolution = 200) {
  if (power_grid < 2) throw Error(Errc::InvalidConfig, "power grid needs at least 2 points");
  std::vector<std::pair<double, double>> coords;
  for (int a = 0; a < power_grid; ++a)
    for (int b = 0; b < power_grid; ++b) {
      const double ai = 0.01 + 0.48 * a / (power_grid - 1);
      const double aj = 0.01 + 0.48 * b / (power_grid - 1);
      if (ai + aj <= 0.9 + 1e-12) coords.emplace_back(ai, aj);
    }
  AuditReport report;
  report.cells.resize(coords.size());
  parallel_for(coords.size(), [&](std::size_t n) {
    report.cells[n] = audit_ipbwh_cell(coords[n].first, coords[n].second, resolution);
  });
  return report;
}

}  // namespace arsim
