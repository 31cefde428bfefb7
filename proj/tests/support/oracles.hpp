#pragma once

// Reference computations for tests, written independently of the library.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <functional>
#include <numbers>
#include <vector>

namespace oracle {

/// Kolmogorov distribution tail P(K > lambda).
inline double kolmogorov_tail(double lambda) {
  if (lambda < 1e-3) return 1.0;
  double sum = 0.0;
  for (int j = 1; j <= 200; ++j) {
    const double term = std::exp(-2.0 * j * j * lambda * lambda);
    sum += (j % 2 == 1 ? 2.0 : -2.0) * term;
    if (term < 1e-16) break;
  }
  return std::clamp(sum, 0.0, 1.0);
}

/// One-sample KS p-value against a continuous CDF (asymptotic, with the
/// Stephens small-sample correction).
inline double ks_pvalue(std::vector<double> x, const std::function<double(double)>& cdf) {
  std::sort(x.begin(), x.end());
  const double n = static_cast<double>(x.size());
  double d = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double f = cdf(x[i]);
    d = std::max({d, (i + 1) / n - f, f - i / n});
  }
  const double sn = std::sqrt(n);
  return kolmogorov_tail((sn + 0.12 + 0.11 / sn) * d);
}

inline double ks_two_sample_pvalue(std::vector<double> a, std::vector<double> b) {
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  const double na = static_cast<double>(a.size()), nb = static_cast<double>(b.size());
  std::size_t i = 0, j = 0;
  double d = 0.0;
  while (i < a.size() && j < b.size()) {
    const double v = std::min(a[i], b[j]);
    while (i < a.size() && a[i] <= v) ++i;
    while (j < b.size() && b[j] <= v) ++j;
    d = std::max(d, std::fabs(i / na - j / nb));
  }
  const double ne = std::sqrt(na * nb / (na + nb));
  return kolmogorov_tail((ne + 0.12 + 0.11 / ne) * d);
}

/// Multivariate normal density by LU determinant and solve.
inline double mvn_pdf(const Eigen::VectorXd& x, const Eigen::VectorXd& mu, const Eigen::MatrixXd& S) {
  Eigen::FullPivLU<Eigen::MatrixXd> lu(S);
  const Eigen::VectorXd d = x - mu;
  const double q = d.dot(lu.solve(d));
  const double k = static_cast<double>(x.size());
  return std::exp(-0.5 * q) / std::sqrt(std::pow(2.0 * std::numbers::pi, k) * lu.determinant());
}

/// sum_l w_l N_k((z, x)) / sum_l w_l N_p(x): the conditional density of
/// the response given covariates under a Gaussian mixture on (z, x).
inline double joint_over_marginal(double z, const Eigen::VectorXd& x, const std::vector<double>& w,
                                  const std::vector<Eigen::VectorXd>& mu,
                                  const std::vector<Eigen::MatrixXd>& Sigma) {
  const auto p = x.size();
  Eigen::VectorXd d(p + 1);
  d << z, x;
  double num = 0.0, den = 0.0;
  for (std::size_t l = 0; l < w.size(); ++l) {
    num += w[l] * mvn_pdf(d, mu[l], Sigma[l]);
    den += w[l] * mvn_pdf(x, mu[l].tail(p), Sigma[l].bottomRightCorner(p, p));
  }
  return num / den;
}

/// log of the NIW marginal likelihood of the rows of X (uncentred, textbook
/// form with multivariate gamma functions).
inline double niw_log_marginal(const Eigen::MatrixXd& X, const Eigen::VectorXd& m, double kappa,
                               double nu, const Eigen::MatrixXd& Psi) {
  const double n = static_cast<double>(X.rows());
  const auto k = m.size();
  const double kd = static_cast<double>(k);
  auto log_mgamma = [&](double a) {
    double s = 0.25 * kd * (kd - 1.0) * std::log(std::numbers::pi);
    for (Eigen::Index i = 0; i < k; ++i) s += std::lgamma(a - 0.5 * static_cast<double>(i));
    return s;
  };
  Eigen::VectorXd xbar = Eigen::VectorXd::Zero(k);
  Eigen::MatrixXd S = Eigen::MatrixXd::Zero(k, k);
  if (n > 0) {
    xbar = X.colwise().mean().transpose();
    for (Eigen::Index i = 0; i < X.rows(); ++i) {
      const Eigen::VectorXd c = X.row(i).transpose() - xbar;
      S += c * c.transpose();
    }
  }
  const double kn = kappa + n, nn = nu + n;
  const Eigen::MatrixXd Psin = Psi + S + (kappa * n / kn) * (xbar - m) * (xbar - m).transpose();
  return -0.5 * n * kd * std::log(std::numbers::pi) + log_mgamma(0.5 * nn) - log_mgamma(0.5 * nu) +
         0.5 * nu * std::log(Psi.determinant()) - 0.5 * nn * std::log(Psin.determinant()) +
         0.5 * kd * (std::log(kappa) - std::log(kn));
}

inline double sample_mean(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

inline double standard_error(const std::vector<double>& v) {
  const double m = sample_mean(v);
  double s = 0.0;
  for (double x : v) s += (x - m) * (x - m);
  return std::sqrt(s / static_cast<double>(v.size() - 1) / static_cast<double>(v.size()));
}

}  // namespace oracle
