#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include "arsim/error.hpp"

namespace arsim {

//! Tolerance for algebraic identities (exact-math checks).
inline constexpr double kAlgebraicTolerance = 1e-9;
//! Tolerance for optimizer outputs (search error).
inline constexpr double kOptimizerTolerance = 1e-4;
//! A pool may not control more than half of the network.
inline constexpr double kMaxPoolPower = 0.5;

struct PoolId {
  std::size_t index = 0;
  friend bool operator==(PoolId, PoolId) = default;
  friend auto operator<=>(PoolId, PoolId) = default;
};

enum class AttackKind { FAW, BWH };

constexpr const char* to_string(AttackKind kind) { return kind == AttackKind::FAW ? "faw" : "bwh"; }

enum class Standing { GOOD, BAD };

constexpr const char* to_string(Standing s) { return s == Standing::GOOD ? "G" : "B"; }

/// A pool's identity and share of the total network hash rate.
class PoolProfile {
 public:
  PoolProfile(PoolId id, double power) : id_(id), power_(power) {
    if (!(power > 0.0) || power > kMaxPoolPower) {
      std::ostringstream os;
      os << "pool " << id.index << " power " << power << " outside (0, " << kMaxPoolPower << "]";
      throw Error(Errc::InvalidPowers, os.str());
    }
  }

  PoolId id() const { return id_; }
  double power() const { return power_; }

 private:
  PoolId id_;
  double power_;
};

/// One stage's infiltration pair: FAW power and BWH power, at most one positive.
struct Action {
  double faw = 0.0;
  double bwh = 0.0;

  static constexpr Action none() { return {}; }
  static constexpr Action fork_after_withholding(double f) { return {f, 0.0}; }
  static constexpr Action block_withholding(double b) { return {0.0, b}; }
  static constexpr Action of(AttackKind kind, double x) {
    return kind == AttackKind::FAW ? fork_after_withholding(x) : block_withholding(x);
  }

  bool is_none() const { return faw == 0.0 && bwh == 0.0; }
  double magnitude() const { return faw + bwh; }
  std::optional<AttackKind> kind() const {
    if (faw > 0.0) return AttackKind::FAW;
    if (bwh > 0.0) return AttackKind::BWH;
    return std::nullopt;
  }

  friend bool operator==(const Action&, const Action&) = default;
};

inline bool approx_equal(const Action& a, const Action& b, double tol = 1e-12) {
  return std::abs(a.faw - b.faw) <= tol && std::abs(a.bwh - b.bwh) <= tol;
}

inline std::ostream& operator<<(std::ostream& os, const Action& a) {
  return os << "(" << a.faw << ", " << a.bwh << ")";
}

/// Checks non-negativity, attack homogeneity and the owner's power bound.
inline Action validate_action(const Action& a, double owner_power) {
  auto fail = [&](const char* why) {
    std::ostringstream os;
    os << why << ": action " << a << " for power " << owner_power;
    throw Error(Errc::InvalidAction, os.str());
  };
  if (!std::isfinite(a.faw) || !std::isfinite(a.bwh)) fail("non-finite infiltration");
  if (a.faw < 0.0 || a.bwh < 0.0) fail("negative infiltration");
  if (a.faw * a.bwh != 0.0) fail("FAW and BWH both positive");
  if (a.faw > owner_power || a.bwh > owner_power) fail("infiltration exceeds owner power");
  return a;
}

inline Action validate_action(const Action& a, const PoolProfile& owner) {
  return validate_action(a, owner.power());
}

/// Scales positive raw powers so they sum to one, preserving order and proportions.
inline std::vector<double> normalize_powers(std::span<const double> raw) {
  if (raw.empty()) throw Error(Errc::EmptyInput, "no powers to normalize");
  double total = 0.0;
  for (std::size_t i = 0; i < raw.size(); ++i) {
    if (!(raw[i] > 0.0) || !std::isfinite(raw[i])) {
      std::ostringstream os;
      os << "entry " << i << " = " << raw[i];
      throw Error(Errc::NonPositiveEntry, os.str());
    }
    total += raw[i];
  }
  std::vector<double> out;
  out.reserve(raw.size());
  for (double r : raw) out.push_back(r / total);
  return out;
}

struct GameConfig {
  std::vector<PoolProfile> pools;
  double discount = 0.9;
  //! Stage count; nullopt stands for an unbounded horizon.
  std::optional<std::size_t> horizon;
  int grid_resolution = 1000;
  double tolerance = kAlgebraicTolerance;
  std::uint64_t seed = 0x5eed;

  void validate() const {
    auto fail = [](const std::string& why) { throw Error(Errc::InvalidConfig, why); };
    if (!(discount > 0.0 && discount < 1.0)) fail("discount must lie in (0,1)");
    if (grid_resolution < 100) fail("grid_resolution must be at least 100");
    if (!(tolerance > 0.0)) fail("tolerance must be positive");
    double sum = 0.0;
    for (std::size_t i = 0; i < pools.size(); ++i) {
      sum += pools[i].power();
      for (std::size_t j = 0; j < i; ++j)
        if (pools[i].id() == pools[j].id()) fail("duplicate pool id");
    }
    if (sum > 1.0 + tolerance) fail("pool powers sum above one");
  }

  std::vector<double> powers() const {
    std::vector<double> out;
    out.reserve(pools.size());
    for (const auto& p : pools) out.push_back(p.power());
    return out;
  }
};

/// Builds a validated two-or-more pool config with ids 0..n-1.
inline GameConfig make_config(std::span<const double> powers, int grid_resolution = 1000,
                              double discount = 0.9, std::uint64_t seed = 0x5eed) {
  GameConfig cfg;
  for (std::size_t i = 0; i < powers.size(); ++i) cfg.pools.emplace_back(PoolId{i}, powers[i]);
  cfg.grid_resolution = grid_resolution;
  cfg.discount = discount;
  cfg.seed = seed;
  cfg.validate();
  return cfg;
}

}  // namespace arsim
