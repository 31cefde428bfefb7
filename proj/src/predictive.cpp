#include "twopart/predictive.hpp"

#include <stdexcept>

#include "twopart/errors.hpp"

namespace twopart {

PredictiveSurface combine(const Band& p_positive, std::span<const Band> intensity_density,
                          const Band& intensity_mean, std::vector<double> z_grid) {
  if (intensity_density.size() != z_grid.size()) {
    throw std::invalid_argument("combine: density and grid lengths differ");
  }
  PredictiveSurface s;
  const double p = p_positive.mean;
  s.p_positive = p;
  s.p_positive_band = p_positive;
  s.p_zero = 1.0 - p;
  s.z_grid = std::move(z_grid);
  s.density_mean.reserve(intensity_density.size());
  s.density_lo.reserve(intensity_density.size());
  s.density_hi.reserve(intensity_density.size());
  for (const Band& b : intensity_density) {
    s.density_mean.push_back(p * b.mean);
    s.density_lo.push_back(p * b.lo);
    s.density_hi.push_back(p * b.hi);
  }
  s.point_prediction = p * intensity_mean.mean;
  s.point_lo = p * intensity_mean.lo;
  s.point_hi = p * intensity_mean.hi;
  return s;
}

PredictiveSurface combine(std::span<const Part1Draw> part1,
                          std::span<const ConditionalMixture> part2, const Vector& x,
                          const Vector& w, std::vector<double> z_grid) {
  if (part1.empty() || part2.empty()) throw std::invalid_argument("combine: no draws");
  const Band p = expected_delta(part1, w);
  const auto density = conditional_density_grid(part2, x, z_grid);
  const Band mean_z = conditional_mean(part2, x);
  PredictiveSurface s = combine(p, density, mean_z, std::move(z_grid));
  s.x = x;
  s.w = w;
  return s;
}

ConfusionSummary classify(std::span<const double> p_positive, std::span<const int> truth,
                          double cutoff) {
  if (p_positive.size() != truth.size()) {
    throw DataError("classify: " + std::to_string(p_positive.size()) + " probabilities but " +
                    std::to_string(truth.size()) + " truth labels");
  }
  if (!(cutoff > 0.0 && cutoff < 1.0)) throw std::invalid_argument("classify: cutoff outside (0,1)");
  ConfusionSummary c;
  c.cutoff = cutoff;
  c.units = static_cast<int>(truth.size());
  if (truth.empty()) return c;
  int zc = 0, zw = 0, pc = 0, pw = 0;
  for (std::size_t i = 0; i < truth.size(); ++i) {
    const bool predicted_positive = p_positive[i] > cutoff;
    if (truth[i] == 0) {
      (predicted_positive ? zw : zc)++;
    } else {
      (predicted_positive ? pc : pw)++;
    }
  }
  const double n = static_cast<double>(truth.size());
  c.zero_correct = zc / n;
  c.zero_wrong = zw / n;
  c.positive_correct = pc / n;
  c.positive_wrong = pw / n;
  c.accuracy = (zc + pc) / n;
  return c;
}

ConfusionSummary classify(std::span<const Part1Draw> draws, const Matrix& W,
                          std::span<const int> truth, double cutoff) {
  std::vector<double> p(static_cast<std::size_t>(W.rows()));
  for (Eigen::Index i = 0; i < W.rows(); ++i) {
    p[static_cast<std::size_t>(i)] = expected_delta(draws, W.row(i).transpose()).mean;
  }
  return classify(p, truth, cutoff);
}

std::vector<AreaEstimate> area_plugin(std::span<const AreaUnit> units,
                                      const std::map<std::string, double>& observed,
                                      const std::map<std::string, double>& predicted) {
  struct Acc {
    std::vector<double> values;
    int observed = 0;
    int predicted = 0;
  };
  std::map<std::string, Acc> areas;
  std::map<std::string, int> seen;
  for (const AreaUnit& u : units) {
    if (++seen[u.id] > 1) throw DataError("area_plugin: unit '" + u.id + "' listed twice");
    const auto o = observed.find(u.id);
    const auto p = predicted.find(u.id);
    const bool in_obs = o != observed.end();
    const bool in_pred = p != predicted.end();
    if (in_obs == in_pred) {
      throw DataError("area_plugin: unit '" + u.id + "' is " +
                      (in_obs ? "both observed and predicted" : "neither observed nor predicted"));
    }
    Acc& a = areas[u.area];
    a.values.push_back(in_obs ? o->second : p->second);
    (in_obs ? a.observed : a.predicted)++;
  }
  for (const auto* m : {&observed, &predicted}) {
    for (const auto& [id, value] : *m) {
      if (!seen.count(id)) throw DataError("area_plugin: unit '" + id + "' has no area");
    }
  }
  std::vector<AreaEstimate> out;
  for (const auto& [name, acc] : areas) {
    AreaEstimate e;
    e.area = name;
    e.units = static_cast<int>(acc.values.size());
    e.observed = acc.observed;
    e.predicted = acc.predicted;
    e.total = compensated_sum(acc.values);
    e.mean = e.total / e.units;
    out.push_back(e);
  }
  return out;
}

}  // namespace twopart
