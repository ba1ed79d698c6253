#pragma once

// Attack detection and attacker identification.
//
// A victim pool can spot BWH from its block ratio, or much faster from miners that
// submit shares but never an FPoW. To find *who* attacks, it plants moles in other
// pools and watches their reward density per attacker-block period P:
//
//   Rd_p = 1/alpha + N * gamma / (beta + gamma * alpha),
//
// where N ~ Geo(p) is the number of victim blocks during P. Honest pools only
// move with their normalized hash rate, so an attacker's Rd_p varies far more.

#include <boost/math/distributions/binomial.hpp>

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <istream>
#include <limits>
#include <map>
#include <numeric>
#include <optional>
#include <ostream>
#include <random>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "arsim/core.hpp"
#include "arsim/error.hpp"
#include "arsim/payoff.hpp"

namespace arsim {

struct DetectionScenario {
  double alpha = 0.1;   // attacker power
  double beta = 0.2;    // victim power
  double gamma = 0.0;   // fraction of attacker power infiltrated
  AttackKind kind = AttackKind::FAW;
  std::size_t periods = 0;  // 0 = as many as the baseline covers
  std::uint64_t seed = 0x5eed;

  void validate() const {
    auto fail = [](const char* why) { throw Error(Errc::InvalidScenario, why); };
    if (!(alpha > 0.0) || !(beta >= 0.0) || !(alpha + beta < 1.0)) fail("need alpha > 0, beta >= 0, alpha + beta < 1");
    if (!(gamma >= 0.0 && gamma < 1.0)) fail("gamma must lie in [0,1)");
  }

  /// Scenario where the attacker infiltrates absolute power `infiltration`.
  static DetectionScenario with_infiltration(double alpha, double beta, double infiltration, AttackKind kind,
                                             std::uint64_t seed = 0x5eed) {
    DetectionScenario s{alpha, beta, infiltration / alpha, kind, 0, seed};
    s.validate();
    return s;
  }
};

/// Success probability of N, the victim blocks per attacker-block period.
/// Support {0, 1, 2, ...}: Pr(N = n) = (1 - p)^n p.
inline double geometric_param(double alpha, double beta, double gamma, AttackKind kind) {
  DetectionScenario{alpha, beta, gamma, kind}.validate();
  const double own = (1.0 - gamma) * alpha;
  const double denom = kind == AttackKind::FAW ? beta + gamma * alpha * (1.0 - alpha - beta) + own : beta + own;
  return own / denom;
}

struct RewardDensitySeries {
  std::vector<double> samples;
  //! Part of each sample earned in the victim pool.
  std::vector<double> victim_component;
  //! True when the series was built from a constant attacker power.
  bool constant_baseline = false;
};

inline double sample_variance(const std::vector<double>& xs) {
  if (xs.size() < 2) return 0.0;
  const double mean = std::accumulate(xs.begin(), xs.end(), 0.0) / static_cast<double>(xs.size());
  double ss = 0.0;
  for (double x : xs) ss += (x - mean) * (x - mean);
  return ss / static_cast<double>(xs.size() - 1);
}

inline double sample_mean(const std::vector<double>& xs) {
  if (xs.empty()) return 0.0;
  return std::accumulate(xs.begin(), xs.end(), 0.0) / static_cast<double>(xs.size());
}

/// Blocks are found every 10 minutes on average; a period lasts until the
/// attacker's own miners find one.
inline double period_hours(double alpha, double gamma) { return (1.0 / 6.0) / ((1.0 - gamma) * alpha); }

/// Series under a constant attacker power.
inline RewardDensitySeries simulate_reward_density(const DetectionScenario& s) {
  s.validate();
  if (s.periods == 0) throw Error(Errc::InvalidScenario, "periods must be positive for a constant baseline");
  std::mt19937_64 rng(s.seed);
  std::geometric_distribution<long long> n_dist(geometric_param(s.alpha, s.beta, s.gamma, s.kind));
  RewardDensitySeries out;
  out.constant_baseline = true;
  const double per_block = s.gamma / (s.beta + s.gamma * s.alpha);
  for (std::size_t p = 0; p < s.periods; ++p) {
    const double v = s.gamma > 0.0 ? static_cast<double>(n_dist(rng)) * per_block : 0.0;
    out.samples.push_back(1.0 / s.alpha + v);
    out.victim_component.push_back(v);
  }
  return out;
}

/// Series whose attacker power follows `alpha_path` (one value per `step_hours`).
/// `s.alpha` only sets the default period count. Each period advances the clock
/// by its expected length; the path wraps if exhausted.
inline RewardDensitySeries simulate_reward_density(const DetectionScenario& s, const std::vector<double>& alpha_path,
                                                   double step_hours = 1.0) {
  s.validate();
  if (alpha_path.empty()) throw Error(Errc::EmptyInput, "empty power path");
  std::mt19937_64 rng(s.seed);
  const double span = step_hours * static_cast<double>(alpha_path.size());
  const std::size_t periods =
      s.periods > 0 ? s.periods : static_cast<std::size_t>(span / period_hours(s.alpha, s.gamma));
  RewardDensitySeries out;
  double clock = 0.0;
  for (std::size_t p = 0; p < periods; ++p) {
    const auto idx = static_cast<std::size_t>(std::floor(clock / step_hours)) % alpha_path.size();
    const double a = alpha_path[idx];
    double v = 0.0;
    if (s.gamma > 0.0) {
      std::geometric_distribution<long long> n_dist(geometric_param(a, s.beta, s.gamma, s.kind));
      v = static_cast<double>(n_dist(rng)) * s.gamma / (s.beta + s.gamma * a);
    }
    out.samples.push_back(1.0 / a + v);
    out.victim_component.push_back(v);
    clock += period_hours(a, s.gamma);
  }
  return out;
}

/// Ratio of sample variances, attack over honest.
inline double variance_ratio(const RewardDensitySeries& attack, const RewardDensitySeries& honest) {
  if (attack.samples.size() < 30 || honest.samples.size() < 30)
    throw Error(Errc::InvalidScenario, "variance ratio needs at least 30 samples per series");
  const double h = sample_variance(honest.samples);
  if (h == 0.0) {
    if (honest.constant_baseline) return std::numeric_limits<double>::infinity();
    throw Error(Errc::DegenerateVariance, "honest series has zero variance");
  }
  return sample_variance(attack.samples) / h;
}

// ---------------------------------------------------------------------------
// Block-count detectors

struct BlockRatioTest {
  double expected_fraction = 0.0;  // victim's block share under attack
  double null_fraction = 0.0;      // share if the infiltrators were benign members
  std::uint64_t threshold = 0;     // blocks at the attack-case expectation
  double p_value = 0.0;            // Pr(X <= threshold) with no attack
};

/// Victim block-ratio test. Without an attack the infiltrating power would be
/// ordinary members, so the null share is victim_power + infiltration.
inline BlockRatioTest detect_bwh_block_ratio(double victim_power, double infiltration, std::uint64_t blocks) {
  if (!(victim_power > 0.0) || !(infiltration >= 0.0) || !(victim_power + infiltration < 1.0) || blocks == 0)
    throw Error(Errc::InvalidScenario, "invalid block-ratio scenario");
  BlockRatioTest t;
  t.expected_fraction = victim_power / (1.0 - infiltration);
  t.null_fraction = victim_power + infiltration;
  t.threshold = static_cast<std::uint64_t>(std::floor(t.expected_fraction * static_cast<double>(blocks) + 1e-9));
  const boost::math::binomial_distribution<double> null(static_cast<double>(blocks), t.null_fraction);
  t.p_value = boost::math::cdf(null, static_cast<double>(t.threshold));
  return t;
}

/// Probability that miners holding `suspect_power` find no FPoW during `blocks`
/// blocks, assuming they are honest.
inline double detect_unlucky_miners(double suspect_power, std::uint64_t blocks) {
  if (!(suspect_power >= 0.0 && suspect_power <= 1.0)) throw Error(Errc::InvalidScenario, "power outside [0,1]");
  return std::pow(1.0 - suspect_power, static_cast<double>(blocks));
}

// ---------------------------------------------------------------------------
// Evasion

/// The attacker pays each period's victim income as the trailing mean over the
/// last `window` periods.
inline RewardDensitySeries evasion_smoothing(const RewardDensitySeries& series, std::size_t window) {
  if (window == 0) throw Error(Errc::InvalidScenario, "window must be at least 1");
  const auto& c = series.victim_component;
  if (c.size() != series.samples.size()) throw Error(Errc::InvalidScenario, "series lacks victim component");
  RewardDensitySeries out = series;
  if (window == 1) return out;
  double running = 0.0;
  for (std::size_t p = 0; p < c.size(); ++p) {
    running += c[p];
    if (p >= window) running -= c[p - window];
    const double mean = running / static_cast<double>(std::min(window, p + 1));
    out.victim_component[p] = mean;
    out.samples[p] = series.samples[p] - c[p] + mean;
  }
  return out;
}

/// Random-time payout: victim income is pooled over consecutive blocks of
/// `window` periods whose boundaries start at a random phase, and each block pays
/// its mean.
inline RewardDensitySeries evasion_random_phase(const RewardDensitySeries& series, std::size_t window,
                                                std::uint64_t seed) {
  if (window == 0) throw Error(Errc::InvalidScenario, "window must be at least 1");
  const auto& c = series.victim_component;
  if (c.size() != series.samples.size()) throw Error(Errc::InvalidScenario, "series lacks victim component");
  if (window == 1) return series;
  std::mt19937_64 rng(seed);
  const std::size_t phase = std::uniform_int_distribution<std::size_t>(0, window - 1)(rng);
  RewardDensitySeries out = series;
  std::size_t start = 0;
  std::size_t end = phase == 0 ? std::min(window, c.size()) : std::min(phase, c.size());
  while (start < c.size()) {
    const double mean =
        std::accumulate(c.begin() + static_cast<std::ptrdiff_t>(start), c.begin() + static_cast<std::ptrdiff_t>(end), 0.0) /
        static_cast<double>(end - start);
    for (std::size_t p = start; p < end; ++p) {
      out.victim_component[p] = mean;
      out.samples[p] = series.samples[p] - c[p] + mean;
    }
    start = end;
    end = std::min(c.size(), start + window);
  }
  return out;
}

struct PartialSharing {
  double gain = 0.0;   // attacker's extra reward density when sharing everything
  double loss = 0.0;   // members' loss when no victim income is shared
  double share = 0.0;  // minimum fraction of victim income to share, loss / (loss + gain)
};

/// How much victim-pool income a FAW attacker must pass to its own miners so they
/// do not earn less than honest mining.
inline PartialSharing evasion_partial_sharing(double alpha, double beta, double infiltration) {
  PartialSharing r;
  if (infiltration == 0.0) return r;
  const Action attack = Action::fork_after_withholding(infiltration);
  const auto d = direct_revenue(alpha, beta, attack, Action::none());
  r.gain = payoff_pair(alpha, beta, attack, Action::none()).first;
  r.loss = 1.0 - d.first / alpha;
  r.share = r.loss / (r.loss + r.gain);
  return r;
}

// ---------------------------------------------------------------------------
// Hash-rate series

struct HashrateSeries {
  std::vector<std::int64_t> timestamps;  // unix seconds, ascending
  std::vector<std::string> pools;
  std::vector<std::vector<double>> rates;  // rates[t][pool]

  std::size_t size() const { return timestamps.size(); }

  std::size_t pool_index(const std::string& name) const {
    const auto it = std::find(pools.begin(), pools.end(), name);
    if (it == pools.end()) throw Error(Errc::InvalidScenario, "unknown pool '" + name + "'");
    return static_cast<std::size_t>(it - pools.begin());
  }

  /// Pool's share of total hash rate over time. The total is the "total" row if
  /// present, otherwise the sum over all listed pools.
  std::vector<double> normalized(const std::string& name) const {
    const std::size_t k = pool_index(name);
    const auto total_it = std::find(pools.begin(), pools.end(), "total");
    std::vector<double> out;
    out.reserve(size());
    for (const auto& row : rates) {
      double total = 0.0;
      if (total_it != pools.end()) {
        total = row[static_cast<std::size_t>(total_it - pools.begin())];
      } else {
        total = std::accumulate(row.begin(), row.end(), 0.0);
      }
      out.push_back(row[k] / total);
    }
    return out;
  }
};

namespace detail {

// Days since 1970-01-01 for a proleptic Gregorian date.
inline std::int64_t days_from_civil(int y, unsigned m, unsigned d) {
  return std::chrono::sys_days{std::chrono::year{y} / std::chrono::month{m} / std::chrono::day{d}}
      .time_since_epoch()
      .count();
}

inline bool parse_int(std::string_view s, int& out) {
  auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
  return ec == std::errc{} && p == s.data() + s.size();
}

}  // namespace detail

/// Parses "YYYY-MM-DDTHH:MM:SS" with an optional "Z" or "+HH:MM"/"-HH:MM" suffix.
inline std::optional<std::int64_t> parse_iso8601(std::string_view s) {
  if (s.size() < 19 || s[4] != '-' || s[7] != '-' || (s[10] != 'T' && s[10] != ' ') || s[13] != ':' || s[16] != ':')
    return std::nullopt;
  int y, mo, d, h, mi, se;
  if (!detail::parse_int(s.substr(0, 4), y) || !detail::parse_int(s.substr(5, 2), mo) ||
      !detail::parse_int(s.substr(8, 2), d) || !detail::parse_int(s.substr(11, 2), h) ||
      !detail::parse_int(s.substr(14, 2), mi) || !detail::parse_int(s.substr(17, 2), se))
    return std::nullopt;
  using namespace std::chrono;
  const year_month_day ymd{year{y}, month{static_cast<unsigned>(mo)}, day{static_cast<unsigned>(d)}};
  if (!ymd.ok() || h > 23 || mi > 59 || se > 60) return std::nullopt;
  std::int64_t offset = 0;
  std::string_view rest = s.substr(19);
  if (rest == "Z" || rest.empty()) {
  } else if (rest.size() == 6 && (rest[0] == '+' || rest[0] == '-') && rest[3] == ':') {
    int oh, om;
    if (!detail::parse_int(rest.substr(1, 2), oh) || !detail::parse_int(rest.substr(4, 2), om)) return std::nullopt;
    offset = (rest[0] == '+' ? 1 : -1) * (oh * 3600 + om * 60);
  } else {
    return std::nullopt;
  }
  const std::int64_t days = detail::days_from_civil(y, static_cast<unsigned>(mo), static_cast<unsigned>(d));
  return days * 86400 + h * 3600 + mi * 60 + se - offset;
}

inline std::string format_iso8601(std::int64_t unix_seconds) {
  using namespace std::chrono;
  const sys_seconds tp{seconds{unix_seconds}};
  const auto day_start = floor<days>(tp);
  const year_month_day ymd{day_start};
  const hh_mm_ss<seconds> hms{tp - day_start};
  char buf[64];
  std::snprintf(buf, sizeof buf, "%04d-%02u-%02uT%02lld:%02lld:%02lldZ", static_cast<int>(ymd.year()),
                static_cast<unsigned>(ymd.month()), static_cast<unsigned>(ymd.day()),
                static_cast<long long>(hms.hours().count()), static_cast<long long>(hms.minutes().count()),
                static_cast<long long>(hms.seconds().count()));
  return buf;
}

/// Reads `timestamp,pool,hashrate` rows. Rows are grouped by timestamp in
/// non-decreasing order and every timestamp must list the same pools.
inline HashrateSeries parse_hashrate_csv(std::istream& in) {
  HashrateSeries out;
  std::string line;
  std::size_t lineno = 0;
  auto fail = [&](Errc code, const std::string& why) {
    throw Error(code, "line " + std::to_string(lineno) + ": " + why);
  };
  bool header = false;
  std::map<std::string, double> group;
  std::int64_t group_ts = 0;
  std::size_t group_line = 0;
  auto flush = [&] {
    if (group.empty()) return;
    if (out.pools.empty()) {
      for (const auto& [name, rate] : group) out.pools.push_back(name);
    } else if (group.size() != out.pools.size()) {
      lineno = group_line;
      fail(Errc::ParseError, "timestamp lists " + std::to_string(group.size()) + " pools, expected " +
                                 std::to_string(out.pools.size()));
    }
    std::vector<double> row;
    for (const auto& name : out.pools) {
      const auto it = group.find(name);
      if (it == group.end()) {
        lineno = group_line;
        fail(Errc::ParseError, "pool '" + name + "' missing at timestamp");
      }
      row.push_back(it->second);
    }
    out.timestamps.push_back(group_ts);
    out.rates.push_back(std::move(row));
    group.clear();
  };

  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (!header) {
      if (line != "timestamp,pool,hashrate") fail(Errc::ParseError, "expected header 'timestamp,pool,hashrate'");
      header = true;
      continue;
    }
    std::vector<std::string> fields;
    std::stringstream ss(line);
    for (std::string f; std::getline(ss, f, ',');) fields.push_back(f);
    if (fields.size() != 3) fail(Errc::ParseError, "expected 3 fields");
    const auto ts = parse_iso8601(fields[0]);
    if (!ts) fail(Errc::ParseError, "bad timestamp '" + fields[0] + "'");
    if (fields[1].empty()) fail(Errc::ParseError, "empty pool name");
    char* end = nullptr;
    const double rate = std::strtod(fields[2].c_str(), &end);
    if (fields[2].empty() || end != fields[2].c_str() + fields[2].size()) fail(Errc::ParseError, "bad hashrate '" + fields[2] + "'");
    if (!(rate > 0.0) || !std::isfinite(rate)) fail(Errc::NonPositiveRate, "hashrate " + fields[2]);
    if (!group.empty() && *ts < group_ts) fail(Errc::NonMonotoneTimestamp, fields[0]);
    if (!group.empty() && *ts != group_ts) {
      const std::size_t keep = lineno;
      flush();
      lineno = keep;
    }
    if (group.empty()) {
      if (!out.timestamps.empty() && *ts <= out.timestamps.back()) fail(Errc::NonMonotoneTimestamp, fields[0]);
      group_ts = *ts;
      group_line = lineno;
    }
    if (!group.emplace(fields[1], rate).second) fail(Errc::ParseError, "duplicate pool '" + fields[1] + "'");
  }
  if (!header) throw Error(Errc::ParseError, "line 1: missing header");
  flush();
  if (out.timestamps.empty()) throw Error(Errc::EmptyInput, "no rows");
  return out;
}

inline HashrateSeries ingest_hashrate_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(Errc::IoError, "cannot open " + path);
  return parse_hashrate_csv(in);
}

struct FixtureSpec {
  std::int64_t start = 1548028800;  // 2019-01-21T00:00:00Z
  std::size_t hours = 720;
  double network_rate = 45000.0;     // PH/s
  double network_sd = 0.05;          // relative hourly fluctuation shared by all pools
  std::vector<std::pair<std::string, double>> pools{{"viabtc", 0.10}, {"btc.com", 0.25}};
  double pool_sd = 0.0057;           // relative idiosyncratic fluctuation of each pool's share
  std::uint64_t seed = 20190121;
};

/// Synthetic hourly hash rates: a "total" row moving with the network, and each
/// pool holding a share of it with small independent noise.
inline void write_hashrate_fixture(std::ostream& os, const FixtureSpec& spec = {}) {
  std::mt19937_64 rng(spec.seed);
  std::normal_distribution<double> z(0.0, 1.0);
  os << "timestamp,pool,hashrate\n";
  char buf[64];
  for (std::size_t h = 0; h < spec.hours; ++h) {
    const std::string ts = format_iso8601(spec.start + static_cast<std::int64_t>(h) * 3600);
    const double total = spec.network_rate * (1.0 + spec.network_sd * z(rng));
    std::snprintf(buf, sizeof buf, "%.3f", total);
    os << ts << ",total," << buf << '\n';
    for (const auto& [name, share] : spec.pools) {
      const double rate = total * share * (1.0 + spec.pool_sd * z(rng));
      std::snprintf(buf, sizeof buf, "%.3f", rate);
      os << ts << ',' << name << ',' << buf << '\n';
    }
  }
}

inline void write_series_csv(std::ostream& os, const RewardDensitySeries& s) {
  os << "period_index,reward_density\n";
  char buf[64];
  for (std::size_t p = 0; p < s.samples.size(); ++p) {
    std::snprintf(buf, sizeof buf, "%.10g", s.samples[p]);
    os << p << ',' << buf << '\n';
  }
}

}  // namespace arsim
