#pragma once

#include <map>
#include <span>
#include <string>
#include <vector>

#include "twopart/part1.hpp"
#include "twopart/part2.hpp"

namespace twopart {

/// Thinned post-burn-in values of one scalar, chains x draws.
struct TraceMatrix {
  std::string name;
  std::vector<std::vector<double>> chains;
  /// Integer-valued summaries (cluster counts) use order-statistic
  /// percentiles instead of interpolation.
  bool integer_valued = false;

  std::vector<double> pooled() const;
};

/// Potential scale reduction sqrt(((N-1)/N W + B/N) / W), with W the mean
/// within-chain variance and B = N times the variance of the chain means.
/// +inf when W = 0 < B and 1 when both vanish. Needs >= 2 chains of equal
/// length >= 10; throws std::invalid_argument otherwise.
double gelman_rubin(const TraceMatrix& trace);

struct PsrfRow {
  std::string name;
  double psrf = 1.0;
  bool pass = true;
};

std::vector<PsrfRow> psrf_report(std::span<const TraceMatrix> traces, double threshold = 1.1);

struct PosteriorRow {
  std::string name;
  double mean = 0.0;
  double lo = 0.0;
  double hi = 0.0;
};

/// Scalar names reported by default, in table order: beta1_0..beta1_{r-1},
/// alpha1, clusters1, m1_z, m1_x1.., k0, psi1 diagonal then upper
/// off-diagonal entries, alpha2, clusters2.
std::vector<std::string> monitored_parameters(int r, int k);

/// Trace matrices for every monitored parameter. Either part may be empty
/// (no chains), in which case its parameters are omitted.
std::vector<TraceMatrix> monitored_traces(const std::vector<std::vector<Part1Draw>>& part1,
                                          const std::vector<std::vector<Part2Draw>>& part2);

/// One row per requested name: mean, 2.5% and 97.5% posterior percentiles.
/// Throws std::invalid_argument for a name with no trace.
std::vector<PosteriorRow> posterior_table(std::span<const TraceMatrix> traces,
                                          std::span<const std::string> names);

}  // namespace twopart
