#pragma once

#include <Eigen/Dense>
#include <string>

#include "twopart/rng.hpp"

namespace twopart {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

/// True when `a` is square, symmetric to 1e-12 relative, and Cholesky succeeds.
bool is_spd(const Matrix& a);

/// Lower Cholesky factor of a symmetric matrix.
///
/// Semi-definite inputs get diagonal jitter 1e-10, 1e-9, ..., 1e-6 (relative
/// to the mean diagonal) until the factorization succeeds; after that a
/// DomainError naming `what` is thrown.
Matrix robust_cholesky(const Matrix& a, const std::string& what = "matrix");

/// Inverse of an SPD matrix through its Cholesky factor, symmetrized.
Matrix spd_inverse(const Matrix& a, const std::string& what = "matrix");

/// Multivariate Normal with its Cholesky factor cached at construction.
class MvNormal {
 public:
  MvNormal(Vector mean, Matrix covariance);

  const Vector& mean() const { return mean_; }
  const Matrix& covariance() const { return covariance_; }
  const Matrix& cholesky_factor() const { return chol_; }
  int dim() const { return static_cast<int>(mean_.size()); }

  double log_pdf(const Eigen::Ref<const Vector>& x) const;
  Vector sample(RngStream& rng) const;

 private:
  Vector mean_;
  Matrix covariance_;
  Matrix chol_;
  double log_norm_ = 0.0;
};

/// Normal-Inverse-Wishart: Sigma ~ IW(nu, Psi), mu | Sigma ~ N(m, Sigma / kappa).
struct NiwParams {
  Vector m;
  double kappa = 1.0;
  double nu = 0.0;
  Matrix Psi;

  /// Throws DomainError on kappa <= 0, nu <= k-1, non-SPD Psi or size mismatch.
  void validate() const;
};

/// Conjugate NIW update from n rows with sample mean `mean` and centred
/// scatter matrix `scatter`. n = 0 returns the prior unchanged.
NiwParams niw_posterior(const NiwParams& prior, int n, const Vector& mean, const Matrix& scatter);

/// Wishart(nu, scale) by the Bartlett decomposition; E = nu * scale.
Matrix sample_wishart(RngStream& rng, double nu, const Matrix& scale);

/// Inverse-Wishart(nu, Psi), E = Psi / (nu - k - 1): a Wishart(nu, Psi^-1)
/// draw, inverted.
Matrix sample_inverse_wishart(RngStream& rng, double nu, const Matrix& Psi);

struct NormalCovariance {
  Vector mu;
  Matrix Sigma;
};

NormalCovariance sample_niw(RngStream& rng, const NiwParams& params);

}  // namespace twopart
