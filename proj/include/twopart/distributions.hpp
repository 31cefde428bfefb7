#pragma once

#include <span>
#include <vector>

#include "twopart/rng.hpp"

namespace twopart {

// Univariate samplers. Each is a pure function of the stream state and its
// arguments; nothing is cached between calls.

double sample_standard_normal(RngStream& rng);
double sample_normal(RngStream& rng, double mean, double sd);

/// Gamma with shape/rate parameterization (mean shape / rate).
/// Marsaglia-Tsang squeeze for shape >= 1, boosted by U^(1/shape) below 1.
double sample_gamma(RngStream& rng, double shape, double rate);

double sample_beta(RngStream& rng, double a, double b);
double sample_chi_square(RngStream& rng, double df);

/// Standard logistic CDF 1/(1+exp(-v)), evaluated without overflow.
double logistic_cdf(double v);
double logistic_pdf(double v);
/// Inverse of logistic_cdf on (0, 1).
double logistic_quantile(double u);

/// Logistic(0,1) restricted to (lower, upper); either end may be infinite.
/// Throws DomainError when lower >= upper.
double sample_truncated_logistic(RngStream& rng, double lower, double upper);

double normal_log_pdf(double x, double mean, double variance);

/// Stick-breaking weights from L-1 stick proportions: w_1 = v_1,
/// w_l = v_l prod_{q<l}(1 - v_q), w_L = prod_{q<L}(1 - v_q).
/// Throws DomainError unless every v lies in (0, 1).
std::vector<double> stick_breaking(std::span<const double> v);

/// Index drawn with probability proportional to exp(log_weights).
/// Normalizes with max-subtraction; -inf entries have zero mass.
int sample_categorical_log(RngStream& rng, std::span<const double> log_weights);

/// Normalized probabilities exp(lw - logsumexp(lw)).
std::vector<double> softmax(std::span<const double> log_weights);

double log_sum_exp(std::span<const double> values);

}  // namespace twopart
