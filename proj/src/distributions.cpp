#include "twopart/distributions.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "twopart/errors.hpp"

namespace twopart {

double sample_standard_normal(RngStream& rng) {
  // Marsaglia polar method; the second variate is discarded.
  for (;;) {
    const double u = 2.0 * rng.uniform() - 1.0;
    const double v = 2.0 * rng.uniform() - 1.0;
    const double s = u * u + v * v;
    if (s > 0.0 && s < 1.0) return u * std::sqrt(-2.0 * std::log(s) / s);
  }
}

double sample_normal(RngStream& rng, double mean, double sd) {
  return mean + sd * sample_standard_normal(rng);
}

double sample_gamma(RngStream& rng, double shape, double rate) {
  if (!(shape > 0.0) || !(rate > 0.0)) {
    throw DomainError("gamma: shape and rate must be positive (shape=" + std::to_string(shape) +
                      ", rate=" + std::to_string(rate) + ")");
  }
  if (shape < 1.0) {
    const double boost = std::pow(rng.uniform(), 1.0 / shape);
    return sample_gamma(rng, shape + 1.0, rate) * boost;
  }
  const double d = shape - 1.0 / 3.0;
  const double c = 1.0 / std::sqrt(9.0 * d);
  for (;;) {
    double x, v;
    do {
      x = sample_standard_normal(rng);
      v = 1.0 + c * x;
    } while (v <= 0.0);
    v = v * v * v;
    const double u = rng.uniform();
    const double x2 = x * x;
    if (u < 1.0 - 0.0331 * x2 * x2) return d * v / rate;
    if (std::log(u) < 0.5 * x2 + d * (1.0 - v + std::log(v))) return d * v / rate;
  }
}

double sample_beta(RngStream& rng, double a, double b) {
  const double x = sample_gamma(rng, a, 1.0);
  const double y = sample_gamma(rng, b, 1.0);
  return x / (x + y);
}

double sample_chi_square(RngStream& rng, double df) { return sample_gamma(rng, 0.5 * df, 0.5); }

double logistic_cdf(double v) {
  if (v >= 0.0) return 1.0 / (1.0 + std::exp(-v));
  const double e = std::exp(v);
  return e / (1.0 + e);
}

double logistic_pdf(double v) {
  const double e = std::exp(-std::fabs(v));
  return e / ((1.0 + e) * (1.0 + e));
}

double logistic_quantile(double u) { return std::log(u) - std::log1p(-u); }

double sample_truncated_logistic(RngStream& rng, double lower, double upper) {
  if (!(lower < upper)) {
    throw DomainError("truncated logistic: lower (" + std::to_string(lower) +
                      ") must be below upper (" + std::to_string(upper) + ")");
  }
  // Work in whichever tail keeps the CDF values away from 1, using the
  // symmetry X -> -X of the logistic.
  if (lower > 0.0) return -sample_truncated_logistic(rng, -upper, -lower);

  const double flo = logistic_cdf(lower);
  const double fhi = logistic_cdf(upper);
  double v = logistic_quantile(flo + rng.uniform() * (fhi - flo));
  if (!(v > lower)) v = std::nextafter(lower, upper);
  if (!(v < upper)) v = std::nextafter(upper, lower);
  return v;
}

double normal_log_pdf(double x, double mean, double variance) {
  static const double kLogTwoPi = std::log(2.0 * M_PI);
  const double r = x - mean;
  return -0.5 * (kLogTwoPi + std::log(variance) + r * r / variance);
}

std::vector<double> stick_breaking(std::span<const double> v) {
  std::vector<double> w(v.size() + 1);
  double remaining = 1.0;
  for (std::size_t l = 0; l < v.size(); ++l) {
    if (!(v[l] > 0.0 && v[l] < 1.0)) {
      throw DomainError("stick_breaking: proportion " + std::to_string(l) + " = " +
                        std::to_string(v[l]) + " outside (0,1)");
    }
    w[l] = v[l] * remaining;
    remaining *= 1.0 - v[l];
  }
  w.back() = remaining;
  return w;
}

double log_sum_exp(std::span<const double> values) {
  const double top = *std::max_element(values.begin(), values.end());
  if (!std::isfinite(top)) return top;
  double acc = 0.0;
  for (double x : values) acc += std::exp(x - top);
  return top + std::log(acc);
}

std::vector<double> softmax(std::span<const double> log_weights) {
  const double lse = log_sum_exp(log_weights);
  std::vector<double> p(log_weights.size());
  for (std::size_t i = 0; i < p.size(); ++i) p[i] = std::exp(log_weights[i] - lse);
  return p;
}

int sample_categorical_log(RngStream& rng, std::span<const double> log_weights) {
  const double top = *std::max_element(log_weights.begin(), log_weights.end());
  double total = 0.0;
  for (double lw : log_weights) total += std::exp(lw - top);
  double u = rng.uniform() * total;
  int last_positive = 0;
  for (std::size_t i = 0; i < log_weights.size(); ++i) {
    const double mass = std::exp(log_weights[i] - top);
    if (mass > 0.0) last_positive = static_cast<int>(i);
    u -= mass;
    if (u < 0.0) return static_cast<int>(i);
  }
  return last_positive;
}

}  // namespace twopart
