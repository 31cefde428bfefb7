#include "twopart/linalg.hpp"

#include <cmath>

#include "twopart/distributions.hpp"
#include "twopart/errors.hpp"

namespace twopart {

bool is_spd(const Matrix& a) {
  if (a.rows() != a.cols() || a.rows() == 0) return false;
  if (!a.allFinite()) return false;
  const double scale = std::max(1.0, a.cwiseAbs().maxCoeff());
  if ((a - a.transpose()).cwiseAbs().maxCoeff() > 1e-12 * scale) return false;
  Eigen::LLT<Matrix> llt(a);
  return llt.info() == Eigen::Success;
}

Matrix robust_cholesky(const Matrix& a, const std::string& what) {
  if (a.rows() != a.cols() || a.rows() == 0 || !a.allFinite()) {
    throw DomainError(what + ": not a finite square matrix");
  }
  const Matrix sym = 0.5 * (a + a.transpose());
  Eigen::LLT<Matrix> llt(sym);
  if (llt.info() == Eigen::Success) return llt.matrixL();

  const double base = std::max(sym.diagonal().cwiseAbs().mean(), 1e-300);
  for (double eps = 1e-10; eps <= 1.0000001e-6; eps *= 10.0) {
    Matrix jittered = sym;
    jittered.diagonal().array() += eps * base;
    llt.compute(jittered);
    if (llt.info() == Eigen::Success) return llt.matrixL();
  }
  throw DomainError(what + ": not positive definite (Cholesky failed after jitter)");
}

Matrix spd_inverse(const Matrix& a, const std::string& what) {
  const Matrix L = robust_cholesky(a, what);
  const Matrix Linv = L.triangularView<Eigen::Lower>().solve(Matrix::Identity(a.rows(), a.cols()));
  return Linv.transpose() * Linv;
}

MvNormal::MvNormal(Vector mean, Matrix covariance)
    : mean_(std::move(mean)), covariance_(std::move(covariance)) {
  if (covariance_.rows() != mean_.size()) {
    throw DomainError("MvNormal: covariance size does not match mean");
  }
  chol_ = robust_cholesky(covariance_, "MvNormal covariance");
  const double log_det = 2.0 * chol_.diagonal().array().log().sum();
  log_norm_ = -0.5 * (static_cast<double>(dim()) * std::log(2.0 * M_PI) + log_det);
}

double MvNormal::log_pdf(const Eigen::Ref<const Vector>& x) const {
  const Vector z = chol_.triangularView<Eigen::Lower>().solve(x - mean_);
  return log_norm_ - 0.5 * z.squaredNorm();
}

Vector MvNormal::sample(RngStream& rng) const {
  Vector z(dim());
  for (int i = 0; i < dim(); ++i) z[i] = sample_standard_normal(rng);
  return mean_ + chol_.triangularView<Eigen::Lower>() * z;
}

void NiwParams::validate() const {
  const auto k = m.size();
  if (!(kappa > 0.0)) throw DomainError("NIW: kappa must be positive");
  if (!(nu > static_cast<double>(k) - 1.0)) throw DomainError("NIW: nu must exceed k-1");
  if (Psi.rows() != k || !is_spd(Psi)) throw DomainError("NIW: Psi must be k x k SPD");
}

NiwParams niw_posterior(const NiwParams& prior, int n, const Vector& mean, const Matrix& scatter) {
  if (n == 0) return prior;
  NiwParams post;
  const double nd = static_cast<double>(n);
  post.kappa = prior.kappa + nd;
  post.m = (prior.kappa * prior.m + nd * mean) / post.kappa;
  post.nu = prior.nu + nd;
  const Vector diff = mean - prior.m;
  post.Psi = prior.Psi + scatter + (prior.kappa * nd / post.kappa) * diff * diff.transpose();
  return post;
}

Matrix sample_wishart(RngStream& rng, double nu, const Matrix& scale) {
  const auto k = scale.rows();
  if (!(nu > static_cast<double>(k) - 1.0)) throw DomainError("Wishart: nu must exceed k-1");
  const Matrix L = robust_cholesky(scale, "Wishart scale");
  Matrix A = Matrix::Zero(k, k);
  for (Eigen::Index i = 0; i < k; ++i) {
    A(i, i) = std::sqrt(sample_chi_square(rng, nu - static_cast<double>(i)));
    for (Eigen::Index j = 0; j < i; ++j) A(i, j) = sample_standard_normal(rng);
  }
  const Matrix LA = L * A;
  Matrix W = LA * LA.transpose();
  return 0.5 * (W + W.transpose());
}

Matrix sample_inverse_wishart(RngStream& rng, double nu, const Matrix& Psi) {
  const Matrix W = sample_wishart(rng, nu, spd_inverse(Psi, "inverse-Wishart scale"));
  return spd_inverse(W, "Wishart draw");
}

NormalCovariance sample_niw(RngStream& rng, const NiwParams& params) {
  NormalCovariance out;
  out.Sigma = sample_inverse_wishart(rng, params.nu, params.Psi);
  MvNormal mu_dist(params.m, out.Sigma / params.kappa);
  out.mu = mu_dist.sample(rng);
  return out;
}

}  // namespace twopart
