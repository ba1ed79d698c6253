#include <gtest/gtest.h>

#include <vector>

#include "arsim/core.hpp"

using namespace arsim;

namespace {

Errc code_of(auto&& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "no error thrown";
  return Errc::IoError;
}

}  // namespace

TEST(Action, ValidActionsPassThrough) {
  EXPECT_EQ(validate_action(Action::none(), 0.2), Action::none());
  EXPECT_EQ(validate_action(Action{0.1, 0.0}, 0.2), (Action{0.1, 0.0}));
  EXPECT_EQ(validate_action(Action{0.0, 0.2}, 0.2), (Action{0.0, 0.2}));
}

TEST(Action, RejectsInvalid) {
  EXPECT_EQ(code_of([] { validate_action(Action{0.1, 0.05}, 0.2); }), Errc::InvalidAction);
  EXPECT_EQ(code_of([] { validate_action(Action{0.3, 0.0}, 0.2); }), Errc::InvalidAction);
  EXPECT_EQ(code_of([] { validate_action(Action{-0.01, 0.0}, 0.2); }), Errc::InvalidAction);
}

TEST(Action, KindAndMagnitude) {
  const Action f = Action::fork_after_withholding(0.03);
  const Action b = Action::block_withholding(0.02);
  EXPECT_EQ(f.kind(), AttackKind::FAW);
  EXPECT_EQ(b.kind(), AttackKind::BWH);
  EXPECT_FALSE(Action::none().kind().has_value());
  EXPECT_DOUBLE_EQ(f.magnitude(), 0.03);
  EXPECT_DOUBLE_EQ(b.magnitude(), 0.02);
  EXPECT_EQ(Action::of(AttackKind::BWH, 0.02), b);
}

TEST(NormalizePowers, Examples) {
  const std::vector<double> two{2, 2};
  EXPECT_EQ(normalize_powers(two), (std::vector<double>{0.5, 0.5}));

  const std::vector<double> six{25, 15, 10, 3.5, 2, 44.5};
  const auto n = normalize_powers(six);
  const std::vector<double> want{0.25, 0.15, 0.10, 0.035, 0.02, 0.445};
  ASSERT_EQ(n.size(), want.size());
  for (std::size_t i = 0; i < n.size(); ++i) EXPECT_NEAR(n[i], want[i], 1e-12);

  const std::vector<double> skew{1, 3};
  const auto s = normalize_powers(skew);
  EXPECT_NEAR(s[0], 0.25, 1e-15);
  EXPECT_NEAR(s[1], 0.75, 1e-15);
}

TEST(NormalizePowers, Idempotent) {
  const std::vector<double> raw{3, 7, 11, 13};
  const auto once = normalize_powers(raw);
  const auto twice = normalize_powers(once);
  for (std::size_t i = 0; i < once.size(); ++i) EXPECT_NEAR(once[i], twice[i], 1e-15);
}

TEST(NormalizePowers, Errors) {
  EXPECT_EQ(code_of([] { normalize_powers(std::vector<double>{}); }), Errc::EmptyInput);
  EXPECT_EQ(code_of([] { normalize_powers(std::vector<double>{1, 0}); }), Errc::NonPositiveEntry);
  EXPECT_EQ(code_of([] { normalize_powers(std::vector<double>{1, -2}); }), Errc::NonPositiveEntry);
}

TEST(PoolProfile, PowerBounds) {
  EXPECT_NO_THROW(PoolProfile(PoolId{0}, 0.5));
  EXPECT_EQ(code_of([] { PoolProfile(PoolId{0}, 0.51); }), Errc::InvalidPowers);
  EXPECT_EQ(code_of([] { PoolProfile(PoolId{0}, 0.0); }), Errc::InvalidPowers);
}

TEST(GameConfig, Validation) {
  const std::vector<double> ok{0.25, 0.15};
  EXPECT_NO_THROW(make_config(ok).validate());
  const std::vector<double> crowded{0.5, 0.4, 0.3};
  EXPECT_EQ(code_of([&] { make_config(crowded).validate(); }), Errc::InvalidConfig);
  EXPECT_EQ(code_of([&] { make_config(ok, 1000, 1.0).validate(); }), Errc::InvalidConfig);
  EXPECT_EQ(code_of([&] { make_config(ok, 10).validate(); }), Errc::InvalidConfig);
}
