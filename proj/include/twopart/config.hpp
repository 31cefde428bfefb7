#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "twopart/linalg.hpp"

namespace twopart {

/// Occurrence part: Gamma(a1_0, b1_0) on the DP precision and
/// Normal_r(beta1_0, S_beta1_0) on the regression coefficients.
struct Part1Hyper {
  double a1_0 = 2.0;
  double b1_0 = 1.0;
  Vector beta1_0;
  Matrix S_beta1_0;
  /// Random-walk scale, in units of the prior-covariance Cholesky factor.
  double mh_step_scale = 0.1;
  /// Tune mh_step_scale toward 20-40% acceptance during burn-in only.
  bool mh_adapt = true;
};

/// Intensity part: DP mixture of Normal_k with NIW baseline
/// N(m1, Sigma / k0) x IW(nu1, Psi1) and hyperpriors
/// alpha2 ~ Gamma(a2_0, b2_0), m1 ~ N(m2, S2), k0 ~ Gamma(tau1/2, tau2/2),
/// Psi1 ~ Wishart(nu2, Psi2).
struct Part2Hyper {
  double a2_0 = 10.0;
  double b2_0 = 1.0;
  double nu1 = 4.0;
  double nu2 = 4.0;
  Vector m2;
  Matrix S2;
  double tau1 = 6.01;
  double tau2 = 3.01;
  Matrix Psi2;
  int truncation_L = 50;
  /// Fit the mixture to log(z) instead of z.
  bool log_z = false;
};

struct McmcSchedule {
  std::int64_t burn_in = 5000;
  std::int64_t keep = 1000;
  std::int64_t thin = 5;
  int chains = 2;
  std::uint64_t seed = 1;

  std::int64_t total_iterations() const { return burn_in + keep * thin; }
};

/// How the default Psi2 is derived from the sample covariance S.
enum class Psi2Convention {
  kInverseHalfCovariance,  ///< Psi2 = (0.5 S)^-1, so Psi2^-1 = S2.
  kHalfCovariance,         ///< Psi2 = 0.5 S.
};

struct Config {
  Part1Hyper part1;
  Part2Hyper part2;
  McmcSchedule schedule;
  Psi2Convention psi2_convention = Psi2Convention::kInverseHalfCovariance;
  /// Also write every latent threshold for each stored draw.
  bool dump_state = false;

  int r() const { return static_cast<int>(part1.beta1_0.size()); }
  int k() const { return static_cast<int>(part2.m2.size()); }
};

/// Column means and sample covariance (denominator m - 1) of (z, x) over
/// the positive-response units.
struct DatasetSummary {
  Vector mean;
  Matrix covariance;
  std::vector<std::string> columns;
  int m = 0;
};

DatasetSummary summarize_columns(const Matrix& rows, std::vector<std::string> columns);

/// Hyperparameter defaults for r occurrence covariates and the given
/// positive-subsample summary. Throws ConfigError naming the offending
/// columns when the sample covariance is singular.
Config default_config(const DatasetSummary& summary, int r,
                      Psi2Convention convention = Psi2Convention::kInverseHalfCovariance);

/// Every violated invariant, each as "field: predicate". Empty when valid.
std::vector<std::string> validate(const Config& config, bool require_gelman_rubin = false);

/// Throws ConfigError carrying all violations.
void require_valid(const Config& config, bool require_gelman_rubin = false);

/// Flat `key = value` text; reals use the shortest round-trip form so
/// parse_config(to_text(c)) reproduces c bit for bit.
std::string to_text(const Config& config);

/// Applies every `key = value` line of `text` on top of `base`.
Config parse_config(const std::string& text, const Config& base);

/// Applies a single `key=value` override.
void apply_override(Config& config, const std::string& assignment);

/// FNV-1a 64-bit digest of to_text(config), as 16 hex digits.
std::string config_hash(const Config& config);

/// Shortest decimal text that reads back to exactly `value`.
std::string format_real(double value);

/// Strict real parse; throws std::invalid_argument on trailing garbage.
double parse_real(std::string_view text);

}  // namespace twopart
