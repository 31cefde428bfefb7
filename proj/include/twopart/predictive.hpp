#pragma once

#include <map>
#include <span>
#include <string>
#include <vector>

#include "twopart/part1.hpp"
#include "twopart/part2.hpp"
#include "twopart/stats.hpp"

namespace twopart {

/// Semicontinuous predictive for one unit: the continuous branch
/// f(y | x, w) = f(z | x) * E(delta = 1 | w) on a grid, plus the point mass
/// at zero. Bands carry only the intensity-part variability.
struct PredictiveSurface {
  std::string id;
  Vector x;
  Vector w;
  std::vector<double> z_grid;
  std::vector<double> density_mean;
  std::vector<double> density_lo;
  std::vector<double> density_hi;
  double p_positive = 0.0;
  Band p_positive_band;
  double p_zero = 1.0;
  /// p_positive times the posterior mean of E(z | x).
  double point_prediction = 0.0;
  double point_lo = 0.0;
  double point_hi = 0.0;
};

/// Product of posterior means: every intensity summary is scaled by
/// p_positive.mean.
PredictiveSurface combine(const Band& p_positive, std::span<const Band> intensity_density,
                          const Band& intensity_mean, std::vector<double> z_grid);

PredictiveSurface combine(std::span<const Part1Draw> part1,
                          std::span<const ConditionalMixture> part2, const Vector& x,
                          const Vector& w, std::vector<double> z_grid);

struct ConfusionSummary {
  double zero_correct = 0.0;
  double zero_wrong = 0.0;
  double positive_correct = 0.0;
  double positive_wrong = 0.0;
  double accuracy = 0.0;
  double cutoff = 0.5;
  int units = 0;
};

/// A unit is predicted positive iff p_positive > cutoff. Proportions are
/// over all units.
ConfusionSummary classify(std::span<const double> p_positive, std::span<const int> truth,
                          double cutoff = 0.5);

ConfusionSummary classify(std::span<const Part1Draw> draws, const Matrix& W,
                          std::span<const int> truth, double cutoff = 0.5);

struct AreaUnit {
  std::string id;
  std::string area;
};

struct AreaEstimate {
  std::string area;
  int units = 0;
  int observed = 0;
  int predicted = 0;
  double total = 0.0;
  double mean = 0.0;
};

/// Plug-in area totals: observed y for in-sample units plus point
/// predictions for the rest; mean = total / unit count. Every unit must be
/// in exactly one of `observed` and `predicted`. Areas come back sorted.
std::vector<AreaEstimate> area_plugin(std::span<const AreaUnit> units,
                                      const std::map<std::string, double>& observed,
                                      const std::map<std::string, double>& predicted);

}  // namespace twopart
