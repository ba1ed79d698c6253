// Acceptance harness: one PASS/FAIL line per criterion, nonzero exit if any fail.

#include <boost/math/distributions/chi_squared.hpp>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "arsim/arsim.hpp"
#include "oracles.hpp"

using namespace arsim;

namespace {

struct Outcome {
  bool pass = true;
  std::ostringstream detail;

  void check(bool ok, const std::string& what) {
    if (!ok) {
      pass = false;
      detail << " [miss: " << what << ']';
    }
  }
};

std::string num(double v, int digits = 4) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

bool within(double got, double want, double tol) { return std::abs(got - want) <= tol; }

// 1. Stage equilibrium: larger pool wins with pure FAW, equal pools break even.
void stage_game(Outcome& o) {
  std::mt19937_64 rng(51);
  std::uniform_real_distribution<double> p(0.02, 0.45);
  int profiles = 0;
  while (profiles < 50) {
    double a1 = p(rng), a2 = p(rng);
    if (a1 == a2) continue;
    if (a1 < a2) std::swap(a1, a2);
    const auto e = stage_nash(a1, a2);
    const bool pure_faw = e.actions[0].bwh == 0.0 && e.actions[1].bwh == 0.0 && e.actions[0].faw > 0.0;
    o.check(e.converged && pure_faw && e.payoffs.first > 0.0 && e.payoffs.second < 0.0,
            "(" + num(a1) + ", " + num(a2) + ")");
    ++profiles;
  }
  double worst = 0.0;
  for (double a : {0.1, 0.2, 0.3, 0.4}) {
    const auto e = stage_nash(a, a);
    worst = std::max({worst, std::abs(e.payoffs.first), std::abs(e.payoffs.second)});
  }
  o.check(worst < 1e-4, "equal powers |U| = " + std::to_string(worst));
  o.detail << " 50 profiles, max |U| at equal powers " << worst;
}

// 2. Two-pool deviation table against ARS_{1-}.
void table_one(Outcome& o) {
  const double ratios[] = {14.33, 46.2, 13.7, 47.2, 17.71, 13.14, 21, 13};
  const double totals[] = {-1.89, -0.78, -0.54, -0.15, -0.004, -1.1, -0.025, -0.63};
  const std::vector<double> victims{0.15, 0.10, 0.035, 0.02};
  const auto rows = deviation_table(0.25, victims, kOneMinus);
  o.check(rows.size() == 8, "row count");
  for (std::size_t i = 0; i < rows.size() && i < 8; ++i) {
    const double r = 100 * rows[i].retaliation_ratio, t = 100 * rows[i].attacker_total;
    o.check(within(r, ratios[i], 0.5), "ratio row " + std::to_string(i + 1) + " " + num(r, 2));
    o.check(within(t, totals[i], 0.1), "total row " + std::to_string(i + 1) + " " + num(t));
    o.detail << ' ' << num(r, 2) << '/' << num(t);
  }
}

// 3. Five pools, the largest deviates against all others at once.
void table_three(Outcome& o) {
  const std::vector<double> p{0.25, 0.15, 0.10, 0.035, 0.02};
  struct Want {
    AttackKind kind;
    double total;
    double ratios[4];
  };
  for (const Want& w : {Want{AttackKind::FAW, -5.4, {22.7, 15.1, 5.3, 3}},
                        Want{AttackKind::BWH, -1.55, {9.5, 6.4, 2.2, 1.3}}}) {
    const auto r = npool_deviation(p, 0, w.kind, kOneMinus);
    const double total = 100 * r.attacker_total;
    o.detail << ' ' << to_string(w.kind) << " total " << num(total) << " ratios";
    for (std::size_t j = 1; j < p.size(); ++j) {
      const double ratio = 100 * r.deviation[j].magnitude() / p[0];
      o.detail << ' ' << num(ratio, 2);
      o.check(within(ratio, w.ratios[j - 1], 1.0), std::string(to_string(w.kind)) + " ratio " + std::to_string(j));
    }
    o.check(within(total, w.total, 0.2), std::string(to_string(w.kind)) + " total " + num(total));
  }
}

// 4. Every deviation loses over two stages; BWH covers where FAW cannot retaliate.
void sweeps(Outcome& o) {
  const auto axis = power_axis(60);
  for (AttackKind kind : {AttackKind::FAW, AttackKind::BWH}) {
    const auto cells = two_stage_sweep(axis, kind, kOneMinus);
    std::size_t bad = 0, infeasible = 0, uncovered = 0;
    for (const auto& c : cells) {
      if (!c.error.empty() || !(c.u1_avg < 0.0)) ++bad;
      if (c.faw_infeasible) {
        ++infeasible;
        if (!(c.r2_bwh > 0.0 && c.u1_avg < 0.0)) ++uncovered;
      }
    }
    o.detail << ' ' << to_string(kind) << ": " << cells.size() << " cells, " << bad << " non-negative";
    o.check(bad == 0, std::string(to_string(kind)) + " non-negative cells");
    if (kind == AttackKind::FAW) {
      o.detail << ", " << infeasible << " FAW-infeasible, " << uncovered << " uncovered";
      o.check(infeasible > 0, "FAW-infeasible region empty");
      o.check(uncovered == 0, "BWH coverage");
    }
  }
}

// 5. Closed pools attacked with one-sided optimal FAW.
void closed_pools(Outcome& o) {
  const auto c = closed_pool_scenario();
  const double want[2][2] = {{0.74, -0.09}, {0.32, -0.016}};
  for (std::size_t i = 0; i < c.size() && i < 2; ++i) {
    const double g = 100 * c[i].attacker_gain, l = 100 * c[i].victim_loss;
    o.detail << ' ' << c[i].name << ' ' << num(g) << '/' << num(l);
    o.check(within(g, want[i][0], 0.02) && within(l, want[i][1], 0.02), c[i].name);
  }
}

// 6. Block-ratio and unlucky-miner detection numbers.
void detection_numbers(Outcome& o) {
  const auto t = detect_bwh_block_ratio(0.2, 0.005, 2000);
  o.check(t.expected_fraction == 0.2 / 0.995, "expected fraction");
  const double unlucky = detect_unlucky_miners(0.005, 2000);
  o.check(std::abs(unlucky - 4.5e-5) <= 0.05 * 4.5e-5, "unlucky " + num(100 * unlucky));
  o.detail << " fraction " << num(100 * t.expected_fraction) << "%, unlucky " << num(100 * unlucky)
           << "%, binomial tail " << num(100 * t.p_value, 2) << "% (reference 35.82%)";
}

double geometric_gof(const std::vector<std::uint64_t>& counts, double p) {
  const double n = static_cast<double>(counts.size());
  std::vector<double> observed, expected;
  double tail = 1.0;
  for (std::uint64_t k = 0;; ++k) {
    const double e = n * std::pow(1 - p, static_cast<double>(k)) * p;
    if (e < 5.0 || n * (tail - e / n) < 5.0) break;
    observed.push_back(0.0);
    expected.push_back(e);
    tail -= e / n;
  }
  const std::size_t cut = observed.size();
  observed.push_back(0.0);
  expected.push_back(n * tail);
  for (auto c : counts) observed[std::min<std::size_t>(c, cut)] += 1.0;
  double stat = 0.0;
  for (std::size_t i = 0; i < observed.size(); ++i)
    stat += (observed[i] - expected[i]) * (observed[i] - expected[i]) / expected[i];
  const boost::math::chi_squared_distribution<double> chi(static_cast<double>(observed.size() - 1));
  return boost::math::cdf(boost::math::complement(chi, stat));
}

// 7. Victim blocks per attacker-block period follow Geo(p).
void geometric_fit(Outcome& o) {
  const DetectionScenario configs[] = {
      {0.10, 0.20, 0.05, AttackKind::FAW, 100000, 1}, {0.10, 0.20, 0.05, AttackKind::BWH, 100000, 2},
      {0.25, 0.15, 0.04, AttackKind::FAW, 100000, 3}, {0.25, 0.15, 0.04, AttackKind::BWH, 100000, 4},
      {0.20, 0.30, 0.10, AttackKind::FAW, 100000, 5}, {0.30, 0.10, 0.02, AttackKind::BWH, 100000, 6},
  };
  for (const auto& s : configs) {
    const auto r = simulate_reward_density(s);
    const double per_block = s.gamma / (s.beta + s.gamma * s.alpha);
    std::vector<std::uint64_t> counts;
    for (double v : r.victim_component) counts.push_back(static_cast<std::uint64_t>(std::llround(v / per_block)));
    const double pv = geometric_gof(counts, geometric_param(s.alpha, s.beta, s.gamma, s.kind));
    o.detail << ' ' << num(pv, 3);
    o.check(pv > 0.01 && counts.size() == s.periods, "p-value " + num(pv, 4));
  }
}

// 8. Attack variance dwarfs honest variance on the bundled hash-rate fixture.
void variance_identification(Outcome& o) {
  const auto fixture = ingest_hashrate_csv(std::string(ARSIM_DATA_DIR) + "/hashrate_fixture.csv");
  struct Pool {
    const char* name;
    double alpha;
  };
  for (const Pool& pool : {Pool{"viabtc", 0.10}, Pool{"btc.com", 0.25}}) {
    const auto path = fixture.normalized(pool.name);
    for (AttackKind kind : {AttackKind::FAW, AttackKind::BWH}) {
      const auto attack = DetectionScenario::with_infiltration(pool.alpha, 0.2, 0.005, kind);
      DetectionScenario honest = attack;
      honest.gamma = 0.0;
      const double ratio =
          variance_ratio(simulate_reward_density(attack, path), simulate_reward_density(honest, path));
      o.detail << ' ' << pool.name << '/' << to_string(kind) << ' ' << num(ratio, 1);
      o.check(ratio > 10.0, std::string(pool.name) + "/" + to_string(kind));
    }
  }
}

// 9. Minimum share of victim income a FAW attacker must pass on.
void partial_sharing(Outcome& o) {
  const auto r = evasion_partial_sharing(0.2, 0.2, 0.005);
  o.detail << " g " << num(100 * r.gain) << "% l " << num(100 * r.loss) << "% share " << num(100 * r.share, 2) << '%';
  o.check(within(100 * r.gain, 0.48, 0.05), "g");
  o.check(within(100 * r.loss, 2.01, 0.05), "l");
  o.check(within(100 * r.share, 80.7, 1.0), "share");
}

bool monotone(const std::vector<double>& v) {
  bool up = true, down = true;
  for (std::size_t i = 1; i < v.size(); ++i) {
    up = up && v[i] >= v[i - 1] - 1e-9;
    down = down && v[i] <= v[i - 1] + 1e-9;
  }
  return up || down;
}

// 10. Discount bound, IP_bwh audit and one-deviation property.
void subgame_perfection(Outcome& o) {
  DeltaBoundOptions opts;
  opts.deviation_samples = 8;
  opts.prior_samples = 3;
  opts.grid_resolution = 200;

  const double ks[] = {0.0, 0.25, 0.5, 0.75, 0.99};
  std::size_t below_one = 0, evaluated = 0, k_monotone = 0, k_series = 0;
  for (auto [a1, a2] : {std::pair{0.2, 0.1}, std::pair{0.3, 0.15}, std::pair{0.25, 0.25}, std::pair{0.1, 0.35}}) {
    std::vector<double> bounds;
    for (double k : ks) {
      const double b = delta_bound(a1, a2, k, opts).bound;
      bounds.push_back(b);
      ++evaluated;
      if (b < 1.0) ++below_one;
    }
    ++k_series;
    if (monotone(bounds)) {
      ++k_monotone;
    } else {
      o.detail << " K-series at (" << a1 << ", " << a2 << "):";
      for (double b : bounds) o.detail << ' ' << num(b);
    }
  }
  o.check(below_one == evaluated, "bound < 1");
  o.check(k_monotone == k_series, "monotone in K");
  o.detail << " bound<1 " << below_one << '/' << evaluated << ", monotone in K " << k_monotone << '/' << k_series;

  std::vector<double> gap_bounds;
  for (auto [a1, a2] : {std::pair{0.2, 0.2}, std::pair{0.25, 0.15}, std::pair{0.3, 0.1}, std::pair{0.35, 0.05}})
    gap_bounds.push_back(delta_bound(a1, a2, 0.5, opts).bound);
  const bool gap_ok = monotone(gap_bounds);
  o.check(gap_ok, "monotone in |a1-a2|");
  o.detail << " |a1-a2|-series:";
  for (double b : gap_bounds) o.detail << ' ' << num(b);

  const auto audit = audit_ipbwh_nonempty(30, 200);
  o.check(audit.failures() == 0, "audit");
  o.detail << " audit " << audit.cells.size() << " cells, " << audit.failures() << " failures";

  const auto d = delta_bound(0.2, 0.1, 0.5, opts);
  const double delta = std::min(d.bound + 0.01, (1.0 + d.bound) / 2.0);
  std::size_t sampled = 0, profitable = 0;
  for (int role = 0; role < 2; ++role) {
    const auto r = role == 0 ? one_deviation_check(0.2, 0.1, 0.5, delta, 100, 200)
                             : one_deviation_check(0.1, 0.2, 0.5, delta, 100, 200);
    for (std::size_t c = 0; c < 4; ++c) {
      sampled += r.sampled[c];
      profitable += r.profitable[c];
      o.check(r.sampled[c] >= 100, "samples in class " + std::string(to_string(kSubgameClasses[c])));
    }
  }
  o.check(profitable == 0, "profitable one-stage deviation");
  o.detail << " one-deviation at delta " << num(delta) << ": " << profitable << '/' << sampled << " profitable";
}

// 11. Closed forms against brute force.
void oracles(Outcome& o) {
  std::mt19937_64 rng(2024);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  auto random_action = [&](double alpha) {
    const double pick = u(rng);
    if (pick < 0.15) return Action::none();
    const double x = alpha * u(rng) * 0.95;
    return pick < 0.6 ? Action::fork_after_withholding(x) : Action::block_withholding(x);
  };
  int checked = 0, inside = 0;
  while (checked < 50) {
    const double a_i = 0.05 + 0.4 * u(rng), a_j = 0.05 + 0.4 * u(rng);
    if (a_i + a_j > 0.9) continue;
    const Action x = random_action(a_i), y = random_action(a_j);
    const auto exact = payoff_pair(a_i, a_j, x, y);
    const auto est = simulate_rounds(a_i, a_j, x, y, 200000, 100 + checked);
    if (std::abs(est.u_first - exact.first) <= 3 * est.stderr_first &&
        std::abs(est.u_second - exact.second) <= 3 * est.stderr_second)
      ++inside;
    ++checked;
  }
  o.check(inside == checked, "Monte Carlo agreement");

  double worst = 0.0;
  const auto axis = power_axis(20);
  for (double a_i : axis)
    for (double a_j : axis) {
      if (a_i + a_j > 0.9 + 1e-12) continue;
      for (AttackKind kind : {AttackKind::FAW, AttackKind::BWH}) {
        const auto g = oracle::grid_argmax([&](double x) { return one_sided_payoff(kind, a_i, a_j, x); }, 0.0, a_i,
                                           20000);
        worst = std::max(worst, std::abs(optimal_infiltration(kind, a_i, a_j) - g.x));
      }
    }
  o.check(worst <= 1e-3, "closed-form optimum");
  o.detail << " MC " << inside << '/' << checked << " within 3 se, max |M - argmax| " << num(worst, 6);
}

}  // namespace

int main() {
  struct Criterion {
    int id;
    const char* name;
    std::function<void(Outcome&)> run;
  };
  const Criterion criteria[] = {
      {1, "stage equilibrium", stage_game},
      {2, "two-pool deviation table", table_one},
      {3, "five-pool deviation table", table_three},
      {4, "two-stage sweeps", sweeps},
      {5, "closed pools", closed_pools},
      {6, "detection numbers", detection_numbers},
      {7, "geometric goodness of fit", geometric_fit},
      {8, "variance-ratio identification", variance_identification},
      {9, "partial sharing", partial_sharing},
      {10, "discount bound and one-deviation", subgame_perfection},
      {11, "oracle agreement", oracles},
  };
  int failed = 0;
  for (const auto& c : criteria) {
    Outcome o;
    const auto t0 = std::chrono::steady_clock::now();
    try {
      c.run(o);
    } catch (const std::exception& e) {
      o.pass = false;
      o.detail << " [error: " << e.what() << ']';
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (!o.pass) ++failed;
    std::printf("%s %2d %s (%.1fs):%s\n", o.pass ? "PASS" : "FAIL", c.id, c.name, secs, o.detail.str().c_str());
    std::fflush(stdout);
  }
  std::printf("%d of 11 criteria failed\n", failed);
  return failed == 0 ? 0 : 1;
}
