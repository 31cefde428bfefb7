#pragma once

#include <span>
#include <vector>

namespace twopart {

/// Posterior mean with an equal-tailed 95% interval.
struct Band {
  double mean = 0.0;
  double lo = 0.0;
  double hi = 0.0;
};

/// Neumaier-compensated sum.
double compensated_sum(std::span<const double> values);

double mean(std::span<const double> values);

/// Sample variance with denominator n - 1.
double sample_variance(std::span<const double> values);

/// Quantile by linear interpolation of order statistics: position
/// h = (n - 1) p on the 0-based sorted sample (Hyndman-Fan type 7).
double quantile_interpolated(std::span<const double> values, double p);

/// Smallest order statistic whose empirical CDF reaches p (type 1); used for
/// integer-valued summaries such as cluster counts.
double quantile_order_statistic(std::span<const double> values, double p);

/// Mean and type-7 2.5% / 97.5% quantiles.
Band summarize(std::span<const double> values);

}  // namespace twopart
