// arsim: command-line front end for the FAW/BWH repeated-game toolkit.
//
// Every CSV starts with a `# seed=<n>` line. Powers are printed as fractions,
// ratios and payoffs as percentages, both with four decimals.

#include <cstdio>
#include <fstream>
#include <functional>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "arsim/arsim.hpp"

namespace {

using namespace arsim;

struct Common {
  std::vector<double> alpha;
  double k = kOneMinus;
  double delta = 0.9;
  int grid = 1000;
  std::uint64_t seed = 0x5eed;
  std::string out;
  std::string config;
};

std::string fmt4(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.4f", v);
  return buf;
}
std::string pct(double v) { return fmt4(100.0 * v); }

class Sink {
 public:
  explicit Sink(const std::string& path) {
    if (!path.empty()) {
      file_.open(path);
      if (!file_) throw Error(Errc::IoError, "cannot write " + path);
    }
  }
  std::ostream& os() { return file_.is_open() ? static_cast<std::ostream&>(file_) : std::cout; }

 private:
  std::ofstream file_;
};

Action action_from(const std::vector<double>& fb, double owner) {
  if (fb.size() != 2) throw Error(Errc::InvalidAction, "an action needs two values: f b");
  return validate_action(Action{fb[0], fb[1]}, owner);
}

const char* kind_name(const Action& a) { return a.is_none() ? "none" : to_string(*a.kind()); }

AttackKind kind_from(const std::string& s) { return s == "bwh" ? AttackKind::BWH : AttackKind::FAW; }

void need_pools(const Common& c, std::size_t n) {
  if (c.alpha.size() != n)
    throw Error(Errc::InvalidConfig, "expected " + std::to_string(n) + " pool powers, got " + std::to_string(c.alpha.size()));
}

// ---------------------------------------------------------------------------

void cmd_payoff(const Common& c, const std::vector<double>& a1, const std::vector<double>& a2) {
  need_pools(c, 2);
  const auto u = payoff_pair(c.alpha[0], c.alpha[1], action_from(a1, c.alpha[0]), action_from(a2, c.alpha[1]));
  Sink s(c.out);
  s.os() << "# seed=" << c.seed << "\nu1,u2\n" << pct(u.first) << ',' << pct(u.second) << '\n';
}

void cmd_stage_nash(const Common& c) {
  need_pools(c, 2);
  NashOptions opts;
  opts.grid_resolution = c.grid;
  const auto e = stage_nash(c.alpha[0], c.alpha[1], opts);
  Sink s(c.out);
  s.os() << "# seed=" << c.seed << "\nf1,f2,u1,u2,iterations\n"
         << fmt4(e.actions[0].faw) << ',' << fmt4(e.actions[1].faw) << ',' << pct(e.payoffs.first) << ','
         << pct(e.payoffs.second) << ',' << e.iterations << '\n';
}

void cmd_retaliate(const Common& c, const std::vector<double>& own_prev, const std::vector<double>& opp_prev,
                   const std::vector<double>& opp_presc) {
  need_pools(c, 2);
  const RetaliationContext ctx{c.alpha[0], c.alpha[1], action_from(own_prev, c.alpha[0]),
                               action_from(opp_prev, c.alpha[1]), action_from(opp_presc, c.alpha[1])};
  const auto r = retaliate_detailed(ctx, c.k, c.grid);
  Sink s(c.out);
  s.os() << "# seed=" << c.seed << "\nkind,f,b,ratio\n"
         << to_string(r.kind) << ',' << fmt4(r.action.faw) << ',' << fmt4(r.action.bwh) << ','
         << pct(r.action.magnitude() / c.alpha[0]) << '\n';
}

void cmd_simulate(const Common& c, const std::string& attack, std::size_t stages) {
  need_pools(c, 2);
  GameConfig cfg = make_config(c.alpha, c.grid, c.delta, c.seed);
  std::vector<Strategy> strategies{ArsAgent{c.k}, ArsAgent{c.k}};
  if (attack != "none") strategies[0] = OptimalOneShotAttacker{kind_from(attack), c.k, 0};
  const History h = run_repeated(cfg, strategies, stages);
  Sink s(c.out);
  auto& os = s.os();
  os << "# seed=" << c.seed << "\nstage,f12,b12,f21,b21,u1,u2\n";
  for (const auto& r : h.records) {
    const Action& a = r.actions.at(0, 1);
    const Action& b = r.actions.at(1, 0);
    os << r.stage << ',' << fmt4(a.faw) << ',' << fmt4(a.bwh) << ',' << fmt4(b.faw) << ',' << fmt4(b.bwh) << ','
       << pct(r.payoffs[0]) << ',' << pct(r.payoffs[1]) << '\n';
  }
  std::cerr << "discounted u1=" << pct(discounted_payoff(h, PoolId{0})) << "% u2=" << pct(discounted_payoff(h, PoolId{1}))
            << "%\n";
}

void write_cells(std::ostream& os, const std::vector<TwoStageCell>& cells, bool by_ratio) {
  os << (by_ratio ? "ratio" : "alpha1") << ",alpha2,r2F,r2B,u1_avg,u2_avg,faw_infeasible,error\n";
  for (const auto& cell : cells)
    os << (by_ratio ? pct(cell.attack_ratio) : fmt4(cell.alpha_1)) << ',' << fmt4(cell.alpha_2) << ','
       << pct(cell.r2_faw) << ',' << pct(cell.r2_bwh) << ',' << pct(cell.u1_avg) << ',' << pct(cell.u2_avg) << ','
       << (cell.faw_infeasible ? 1 : 0) << ',' << cell.error << '\n';
}

void cmd_sweep(const Common& c, const std::string& attack, int points, int resolution, std::optional<double> alpha1) {
  if (points < 1) throw Error(Errc::InvalidConfig, "sweep needs at least one grid point");
  const auto axis = power_axis(points);
  std::vector<TwoStageCell> cells;
  if (alpha1) {
    std::vector<double> ratios;
    for (int i = 1; i <= points; ++i) ratios.push_back(static_cast<double>(i) / points);
    cells = ratio_sweep(*alpha1, ratios, axis, kind_from(attack), c.k, resolution);
  } else {
    cells = two_stage_sweep(axis, kind_from(attack), c.k, resolution);
  }
  Sink s(c.out);
  s.os() << "# seed=" << c.seed << '\n';
  write_cells(s.os(), cells, alpha1.has_value());
}

void cmd_npool(const Common& c, std::size_t attacker, const std::string& attack) {
  if (c.alpha.size() < 2) throw Error(Errc::InvalidConfig, "npool needs at least two pool powers");
  if (attacker >= c.alpha.size()) throw Error(Errc::InvalidConfig, "attacker index out of range");
  const auto r = npool_deviation(c.alpha, attacker, kind_from(attack), c.k, c.grid);
  Sink s(c.out);
  auto& os = s.os();
  os << "# seed=" << c.seed << "\npool,alpha,deviation_ratio,retaliation_kind,retaliation_ratio,u_stage0,u_stage1,total\n";
  for (std::size_t j = 0; j < c.alpha.size(); ++j) {
    const Action& ret = r.retaliation[j];
    os << j << ',' << fmt4(c.alpha[j]) << ',' << pct(r.deviation[j].magnitude() / c.alpha[attacker]) << ','
       << kind_name(ret) << ',' << pct(ret.magnitude() / c.alpha[j]) << ','
       << pct(r.u_stage0[j]) << ',' << pct(r.u_stage1[j]) << ',' << pct(r.u_stage0[j] + r.u_stage1[j]) << '\n';
  }
}

struct DetectArgs {
  double beta = 0.2;
  double infiltration = 0.005;
  std::string attack = "faw";
  std::size_t periods = 0;
  std::uint64_t blocks = 2000;
  std::string hashrate;
  std::string pool;
  std::size_t window = 1;
  std::string series;
};

void cmd_detect(const Common& c, const DetectArgs& d) {
  need_pools(c, 1);
  const double alpha = c.alpha[0];
  const AttackKind kind = kind_from(d.attack);
  DetectionScenario attack = DetectionScenario::with_infiltration(alpha, d.beta, d.infiltration, kind, c.seed);
  attack.periods = d.periods;
  DetectionScenario honest = attack;
  honest.gamma = 0.0;

  RewardDensitySeries att, hon;
  if (!d.hashrate.empty()) {
    const auto hs = ingest_hashrate_csv(d.hashrate);
    const auto path = hs.normalized(d.pool);
    att = simulate_reward_density(attack, path);
    hon = simulate_reward_density(honest, path);
  } else {
    if (attack.periods == 0) attack.periods = honest.periods = 10000;
    att = simulate_reward_density(attack);
    hon = simulate_reward_density(honest);
  }
  if (d.window > 1) att = evasion_smoothing(att, d.window);

  const auto block = detect_bwh_block_ratio(d.beta, d.infiltration, d.blocks);
  const auto share = evasion_partial_sharing(alpha, d.beta, d.infiltration);

  Sink s(c.out);
  auto& os = s.os();
  os << "# seed=" << c.seed << "\nmetric,value\n";
  os << "geometric_p," << fmt4(geometric_param(alpha, d.beta, attack.gamma, kind)) << '\n';
  os << "periods," << att.samples.size() << '\n';
  os << "variance_ratio," << fmt4(variance_ratio(att, hon)) << '\n';
  os << "expected_block_fraction," << pct(block.expected_fraction) << '\n';
  os << "block_ratio_p_value," << pct(block.p_value) << '\n';
  os << "unlucky_no_fpow," << pct(detect_unlucky_miners(d.infiltration, d.blocks)) << '\n';
  os << "sharing_gain," << pct(share.gain) << '\n';
  os << "sharing_loss," << pct(share.loss) << '\n';
  os << "min_share," << pct(share.share) << '\n';

  if (!d.series.empty()) {
    Sink f(d.series);
    f.os() << "# seed=" << c.seed << '\n';
    write_series_csv(f.os(), att);
  }
}

void cmd_delta_bound(const Common& c, bool check) {
  need_pools(c, 2);
  DeltaBoundOptions opts;
  opts.grid_resolution = std::min(c.grid, 400);
  const auto d = delta_bound(c.alpha[0], c.alpha[1], c.k, opts);
  Sink s(c.out);
  auto& os = s.os();
  os << "# seed=" << c.seed << "\nfamily,GG,GB,BG,BB,max\n";
  for (const auto* f : {&d.x1, &d.x2}) {
    os << (f == &d.x1 ? "x1" : "x2");
    for (double v : f->per_class) os << ',' << fmt4(v);
    os << ',' << fmt4(f->max()) << '\n';
  }
  os << "bound,,,,," << fmt4(d.bound) << '\n';
  if (check) {
    for (int role = 0; role < 2; ++role) {
      const auto r = role == 0 ? one_deviation_check(c.alpha[0], c.alpha[1], c.k, c.delta, 100, opts.grid_resolution)
                               : one_deviation_check(c.alpha[1], c.alpha[0], c.k, c.delta, 100, opts.grid_resolution);
      os << "profitable_" << (role == 0 ? "x1" : "x2");
      for (std::size_t n : r.profitable) os << ',' << n;
      os << ",\n";
    }
  }
}

void cmd_audit(const Common& c, int points, int resolution) {
  const auto r = audit_ipbwh_nonempty(points, resolution);
  Sink s(c.out);
  s.os() << "# seed=" << c.seed << '\n';
  r.write_csv(s.os());
  std::cerr << r.failures() << " failures in " << r.cells.size() << " cells\n";
  if (r.failures() != 0) throw Error(Errc::EmptySetUnexpected, "audit found cells with an empty BWH set");
}

void cmd_table(const Common& c, int table) {
  Sink s(c.out);
  auto& os = s.os();
  os << "# seed=" << c.seed << '\n';
  if (table == 1) {
    const std::vector<double> victims{0.15, 0.10, 0.035, 0.02};
    os << "victim_alpha,attack,deviation_ratio,retaliation_kind,retaliation_ratio,attacker_total\n";
    for (const auto& r : deviation_table(0.25, victims, c.k, c.grid))
      os << fmt4(r.victim_power) << ',' << to_string(r.kind) << ',' << pct(r.deviation.magnitude() / 0.25) << ','
         << kind_name(r.retaliation) << ',' << pct(r.retaliation_ratio) << ',' << pct(r.attacker_total) << '\n';
  } else if (table == 3) {
    const std::vector<double> powers{0.25, 0.15, 0.10, 0.035, 0.02};
    os << "attack,victim_alpha,deviation_ratio,retaliation_kind,retaliation_ratio,attacker_total\n";
    for (AttackKind kind : {AttackKind::FAW, AttackKind::BWH}) {
      const auto r = npool_deviation(powers, 0, kind, c.k, c.grid);
      for (std::size_t j = 1; j < powers.size(); ++j)
        os << to_string(kind) << ',' << fmt4(powers[j]) << ',' << pct(r.deviation[j].magnitude() / powers[0]) << ','
           << kind_name(r.retaliation[j]) << ','
           << pct(r.retaliation[j].magnitude() / powers[j]) << ',' << pct(r.attacker_total) << '\n';
    }
  } else {
    throw Error(Errc::InvalidConfig, "only tables 1 and 3 can be reproduced");
  }
}

void cmd_closed_pools(const Common& c) {
  Sink s(c.out);
  auto& os = s.os();
  os << "# seed=" << c.seed << "\nname,attacker_alpha,victim_alpha,infiltration_ratio,attacker_gain,victim_loss\n";
  for (const auto& p : closed_pool_scenario())
    os << p.name << ',' << fmt4(p.attacker_power) << ',' << fmt4(p.victim_power) << ','
       << pct(p.infiltration / p.attacker_power) << ',' << pct(p.attacker_gain) << ',' << pct(p.victim_loss) << '\n';
}

void cmd_fixture(const Common& c) {
  FixtureSpec spec;
  spec.seed = c.seed;
  Sink s(c.out);
  write_hashrate_fixture(s.os(), spec);
}

// Values from --config fill in whatever the command line left unset.
void apply_config(Common& c, const CLI::App& app) {
  if (c.config.empty()) return;
  const ScenarioFile f = load_scenario(c.config);
  if (app.count("--alpha") == 0 && !f.powers.empty()) c.alpha = f.powers;
  if (app.count("--delta") == 0 && f.discount) c.delta = *f.discount;
  if (app.count("--k") == 0 && f.k) c.k = *f.k;
  if (app.count("--grid") == 0 && f.grid) c.grid = *f.grid;
  if (app.count("--seed") == 0 && f.seed) c.seed = *f.seed;
}

void add_common(CLI::App* sub, Common& c, bool with_alpha = true) {
  if (with_alpha) sub->add_option("--alpha", c.alpha, "pool powers as fractions");
  sub->add_option("--k", c.k, "retaliation strength K in [0,1)");
  sub->add_option("--delta", c.delta, "discount factor");
  sub->add_option("--grid", c.grid, "grid resolution");
  sub->add_option("--seed", c.seed, "random seed");
  sub->add_option("--out", c.out, "output path (default stdout)");
  sub->add_option("--config", c.config, "scenario file");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Repeated FAW/BWH mining-pool game toolkit"};
  app.require_subcommand(1);

  Common c;
  std::function<void()> action;

  auto with_config = [&](CLI::App* sub, std::function<void()> body) {
    sub->callback([&, sub, body] {
      action = [&, sub, body] {
        apply_config(c, *sub);
        body();
      };
    });
  };

  std::vector<double> a1{0, 0}, a2{0, 0};
  auto* payoff = app.add_subcommand("payoff", "stage payoffs of one action pair");
  add_common(payoff, c);
  payoff->add_option("--a1", a1, "pool 1 action: f b")->expected(2);
  payoff->add_option("--a2", a2, "pool 2 action: f b")->expected(2);
  with_config(payoff, [&] { cmd_payoff(c, a1, a2); });

  auto* nash = app.add_subcommand("stage-nash", "pure FAW equilibrium of the stage game");
  add_common(nash, c);
  with_config(nash, [&] { cmd_stage_nash(c); });

  std::vector<double> own_prev{0, 0}, opp_prev{0, 0}, opp_presc{0, 0};
  auto* ret = app.add_subcommand("retaliate", "ARS retaliation for pool 1 (own) against pool 2");
  add_common(ret, c);
  ret->add_option("--own-prev", own_prev, "own last action: f b")->expected(2);
  ret->add_option("--opp-prev", opp_prev, "opponent's last action: f b")->expected(2);
  ret->add_option("--opp-presc", opp_presc, "opponent's prescribed last action: f b")->expected(2);
  with_config(ret, [&] { cmd_retaliate(c, own_prev, opp_prev, opp_presc); });

  std::string attack = "faw";
  std::size_t stages = 10;
  auto* sim = app.add_subcommand("simulate", "repeated game: pool 1 deviates once, pool 2 follows ARS");
  add_common(sim, c);
  sim->add_option("--attack", attack, "faw, bwh or none")->check(CLI::IsMember({"faw", "bwh", "none"}));
  sim->add_option("--stages", stages, "stages to play");
  with_config(sim, [&] { cmd_simulate(c, attack, stages); });

  int points = 60, resolution = 1000;
  std::optional<double> sweep_alpha1;
  auto* sweep = app.add_subcommand("sweep", "two-stage deviation heatmap data");
  add_common(sweep, c, false);
  sweep->get_option("--grid")->description("points per axis");
  sweep->add_option("--attack", attack, "faw or bwh")->check(CLI::IsMember({"faw", "bwh"}));
  sweep->add_option("--resolution", resolution, "retaliation grid resolution");
  sweep->add_option("--alpha1", sweep_alpha1, "fix attacker power and sweep its infiltration ratio");
  with_config(sweep, [&] {
    points = sweep->count("--grid") ? c.grid : 60;
    cmd_sweep(c, attack, points, resolution, sweep_alpha1);
  });

  std::size_t attacker = 0;
  auto* npool = app.add_subcommand("npool", "one pool attacks all others, which follow ARS");
  add_common(npool, c);
  npool->add_option("--attacker", attacker, "index of the attacking pool");
  npool->add_option("--attack", attack, "faw or bwh")->check(CLI::IsMember({"faw", "bwh"}));
  with_config(npool, [&] { cmd_npool(c, attacker, attack); });

  DetectArgs det;
  auto* detect = app.add_subcommand("detect", "detection statistics for one attacker (--alpha a)");
  add_common(detect, c);
  detect->add_option("--beta", det.beta, "victim power");
  detect->add_option("--infiltration", det.infiltration, "infiltration power (absolute)");
  detect->add_option("--attack", det.attack, "faw or bwh")->check(CLI::IsMember({"faw", "bwh"}));
  detect->add_option("--periods", det.periods, "attacker-block periods (default: baseline length or 10000)");
  detect->add_option("--blocks", det.blocks, "blocks for the block-count detectors");
  detect->add_option("--hashrate", det.hashrate, "hash-rate CSV for a time-varying baseline");
  detect->add_option("--pool", det.pool, "pool name in the hash-rate CSV");
  detect->add_option("--window", det.window, "smoothing window for the attacker's payouts");
  detect->add_option("--series", det.series, "write the attack reward-density series here");
  with_config(detect, [&] {
    if (!det.hashrate.empty() && det.pool.empty()) throw CLI::RequiredError("--pool");
    cmd_detect(c, det);
  });

  bool check = false;
  auto* db = app.add_subcommand("delta-bound", "lower bound on the discount factor");
  add_common(db, c);
  db->add_flag("--check", check, "also run the one-deviation check at --delta");
  with_config(db, [&] { cmd_delta_bound(c, check); });

  int audit_points = 30, audit_res = 200;
  auto* audit = app.add_subcommand("audit-ipbwh", "check the BWH retaliation set is never empty");
  add_common(audit, c, false);
  audit->get_option("--grid")->description("power grid points per axis");
  audit->add_option("--resolution", audit_res, "infiltration grid resolution");
  with_config(audit, [&] {
    audit_points = audit->count("--grid") ? c.grid : 30;
    cmd_audit(c, audit_points, audit_res);
  });

  int table = 1;
  auto* repro = app.add_subcommand("reproduce-table", "deviation tables for a 25% attacker");
  add_common(repro, c, false);
  repro->add_option("table", table, "1 (one victim at a time) or 3 (all victims at once)")
      ->required()
      ->check(CLI::IsMember({1, 3}));
  with_config(repro, [&] { cmd_table(c, table); });

  auto* closed = app.add_subcommand("closed-pools", "one-sided FAW gains of small closed pools");
  add_common(closed, c, false);
  with_config(closed, [&] { cmd_closed_pools(c); });

  auto* fixture = app.add_subcommand("fixture", "write the synthetic hourly hash-rate fixture");
  add_common(fixture, c, false);
  with_config(fixture, [&] {
    if (fixture->count("--seed") == 0 && c.seed == 0x5eed) c.seed = FixtureSpec{}.seed;
    cmd_fixture(c);
  });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }
  try {
    action();
  } catch (const CLI::Error& e) {
    std::cerr << "usage error: " << e.what() << '\n';
    return 2;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
