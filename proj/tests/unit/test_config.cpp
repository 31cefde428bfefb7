#include <gtest/gtest.h>

#include <cstring>

#include "twopart/config.hpp"
#include "twopart/errors.hpp"

using namespace twopart;

namespace {

DatasetSummary summary_with_cov(const Matrix& s) {
  DatasetSummary d;
  d.mean = Vector::LinSpaced(s.rows(), 1.0, 2.0);
  d.covariance = s;
  for (int j = 0; j < s.rows(); ++j) d.columns.push_back(j == 0 ? "z" : "x" + std::to_string(j));
  d.m = 10;
  return d;
}

bool contains(const std::vector<std::string>& v, const std::string& needle) {
  for (const auto& s : v) {
    if (s.find(needle) != std::string::npos) return true;
  }
  return false;
}

bool bit_equal(const Matrix& a, const Matrix& b) {
  return a.rows() == b.rows() && a.cols() == b.cols() &&
         std::memcmp(a.data(), b.data(), sizeof(double) * static_cast<std::size_t>(a.size())) == 0;
}

}  // namespace

TEST(DefaultConfig, PaperHyperparameters) {
  const auto c = default_config(summary_with_cov(2.0 * Matrix::Identity(2, 2)), 3);
  EXPECT_EQ(c.part1.a1_0, 2.0);
  EXPECT_EQ(c.part1.b1_0, 1.0);
  EXPECT_EQ(c.part2.a2_0, 10.0);
  EXPECT_EQ(c.part2.b2_0, 1.0);
  EXPECT_EQ(c.part2.nu1, 4.0);
  EXPECT_EQ(c.part2.nu2, 4.0);
  EXPECT_EQ(c.part2.tau1, 6.01);
  EXPECT_EQ(c.part2.tau2, 3.01);
  EXPECT_EQ(c.part1.beta1_0, Vector::Zero(3));
  EXPECT_EQ(c.part1.S_beta1_0, Matrix(10000.0 * Matrix::Identity(3, 3)));
  EXPECT_EQ(c.part2.truncation_L, 50);
  EXPECT_EQ(c.part1.mh_step_scale, 0.1);
  EXPECT_TRUE(validate(c).empty());
}

TEST(DefaultConfig, TwiceIdentityCovariance) {
  const auto c = default_config(summary_with_cov(2.0 * Matrix::Identity(2, 2)), 1);
  EXPECT_EQ(c.part2.S2, Matrix(Matrix::Identity(2, 2)));
  EXPECT_EQ(c.part2.Psi2, Matrix(Matrix::Identity(2, 2)));
  EXPECT_EQ(c.part2.m2, summary_with_cov(Matrix::Identity(2, 2)).mean);
}

TEST(DefaultConfig, HandInverse) {
  Matrix s(2, 2);
  s << 4, 1, 1, 1;
  const auto c = default_config(summary_with_cov(s), 1);
  Matrix s2(2, 2), psi2(2, 2);
  s2 << 2, 0.5, 0.5, 0.5;
  psi2 << 2.0 / 3, -2.0 / 3, -2.0 / 3, 8.0 / 3;
  EXPECT_TRUE(c.part2.S2.isApprox(s2, 1e-15));
  EXPECT_TRUE(c.part2.Psi2.isApprox(psi2, 1e-14));
}

TEST(DefaultConfig, HalfCovarianceConvention) {
  Matrix s(2, 2);
  s << 4, 1, 1, 1;
  const auto c = default_config(summary_with_cov(s), 1, Psi2Convention::kHalfCovariance);
  EXPECT_TRUE(c.part2.Psi2.isApprox(0.5 * s, 1e-15));
  EXPECT_EQ(c.psi2_convention, Psi2Convention::kHalfCovariance);
}

TEST(DefaultConfig, Deterministic) {
  Matrix s(2, 2);
  s << 4, 1, 1, 1;
  EXPECT_EQ(to_text(default_config(summary_with_cov(s), 2)),
            to_text(default_config(summary_with_cov(s), 2)));
}

TEST(DefaultConfig, SingularCovarianceNamesColumns) {
  Matrix s(3, 3);
  s << 1, 1, 0, 1, 1, 0, 0, 0, 2;  // z and x1 collinear
  try {
    default_config(summary_with_cov(s), 1);
    FAIL() << "expected ConfigError";
  } catch (const ConfigError& e) {
    EXPECT_TRUE(contains(e.problems(), "x1") || contains(e.problems(), "z"));
  }
  Matrix zero = Matrix::Identity(2, 2);
  zero(1, 1) = 0.0;
  try {
    default_config(summary_with_cov(zero), 1);
    FAIL() << "expected ConfigError";
  } catch (const ConfigError& e) {
    EXPECT_TRUE(contains(e.problems(), "x1"));
  }
}

TEST(SummarizeColumns, NeedsTwoRows) {
  EXPECT_THROW(summarize_columns(Matrix::Ones(1, 2), {"z", "x1"}), std::exception);
  Matrix rows(3, 2);
  rows << 1, 2, 3, 4, 5, 9;
  const auto s = summarize_columns(rows, {"z", "x1"});
  EXPECT_DOUBLE_EQ(s.mean[0], 3.0);
  EXPECT_DOUBLE_EQ(s.covariance(0, 0), 4.0);
  EXPECT_DOUBLE_EQ(s.covariance(0, 1), 7.0);
}

TEST(Validate, NuMessage) {
  auto c = default_config(summary_with_cov(Matrix::Identity(3, 3)), 1);
  c.part2.nu1 = 1.0;
  const auto problems = validate(c);
  EXPECT_TRUE(contains(problems, "nu1: must exceed k-1 = 2"));
}

TEST(Validate, NegativeEigenvalueNamesS2) {
  auto c = default_config(summary_with_cov(Matrix::Identity(2, 2)), 1);
  c.part2.S2 << 1, 2, 2, 1;
  EXPECT_TRUE(contains(validate(c), "S2"));
}

TEST(Validate, ReportsEveryViolation) {
  auto c = default_config(summary_with_cov(Matrix::Identity(2, 2)), 1);
  c.part1.a1_0 = -1;
  c.part2.b2_0 = 0;
  c.part2.truncation_L = 1;
  c.part1.mh_step_scale = 0;
  const auto problems = validate(c);
  EXPECT_TRUE(contains(problems, "a1_0"));
  EXPECT_TRUE(contains(problems, "b2_0"));
  EXPECT_TRUE(contains(problems, "truncation_L"));
  EXPECT_TRUE(contains(problems, "mh_step_scale"));
  EXPECT_THROW(require_valid(c), ConfigError);
}

TEST(Validate, GelmanRubinNeedsTwoChains) {
  auto c = default_config(summary_with_cov(Matrix::Identity(2, 2)), 1);
  c.schedule.chains = 1;
  EXPECT_TRUE(validate(c).empty());
  EXPECT_TRUE(contains(validate(c, true), "chains"));
}

TEST(ConfigText, RoundTripIsBitExact) {
  Matrix s(3, 3);
  s << 4.1, 1.0 / 3, 0.2, 1.0 / 3, 1.7, -0.1, 0.2, -0.1, 0.9;
  auto c = default_config(summary_with_cov(s), 4);
  c.part1.beta1_0 << 0.1, -1.0 / 7, 1e-300, 3.0;
  c.part1.mh_step_scale = 0.123456789012345678;
  c.schedule.seed = 18446744073709551615ULL;
  c.part2.log_z = true;
  const auto back = parse_config(to_text(c), Config{});
  EXPECT_EQ(to_text(back), to_text(c));
  EXPECT_TRUE(bit_equal(back.part2.Psi2, c.part2.Psi2));
  EXPECT_TRUE(bit_equal(back.part2.S2, c.part2.S2));
  EXPECT_TRUE(bit_equal(back.part1.beta1_0, c.part1.beta1_0));
  EXPECT_EQ(back.schedule.seed, c.schedule.seed);
  EXPECT_EQ(back.part2.log_z, true);
  EXPECT_EQ(config_hash(back), config_hash(c));
}

TEST(ConfigText, OverridesAndErrors) {
  auto c = default_config(summary_with_cov(Matrix::Identity(2, 2)), 1);
  apply_override(c, "burn_in=10");
  apply_override(c, "psi2_convention = half_covariance");
  EXPECT_EQ(c.schedule.burn_in, 10);
  EXPECT_EQ(c.psi2_convention, Psi2Convention::kHalfCovariance);
  EXPECT_THROW(apply_override(c, "no_such_key=1"), ConfigError);
  EXPECT_THROW(apply_override(c, "burn_in"), ConfigError);
  EXPECT_THROW(parse_config("a1_0 = two", c), ConfigError);
  const auto d = parse_config("# comment\n\nkeep = 7 # trailing\n", c);
  EXPECT_EQ(d.schedule.keep, 7);
}

TEST(ConfigText, HashChangesWithContent) {
  auto c = default_config(summary_with_cov(Matrix::Identity(2, 2)), 1);
  const auto h = config_hash(c);
  EXPECT_EQ(h.size(), 16u);
  c.schedule.seed += 1;
  EXPECT_NE(config_hash(c), h);
}

TEST(FormatReal, ShortestRoundTrip) {
  for (double v : {0.1, 1.0 / 3, 6.01, 1e-320, -2.5e300, 0.0}) {
    EXPECT_EQ(parse_real(format_real(v)), v);
  }
  EXPECT_EQ(format_real(0.1), "0.1");
  EXPECT_THROW(parse_real("1.5x"), std::invalid_argument);
}
