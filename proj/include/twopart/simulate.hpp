#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "twopart/dataset.hpp"

namespace twopart {

enum class LinkKind {
  kLogistic,       ///< P(delta = 1 | w) = F_logistic(w' beta)
  kSkewedMixture,  ///< a right-skewed two-component logistic mixture CDF
};

/// One regime of the intensity truth: x ~ N(center, diag(spread^2)) and
/// z | x ~ N(intercept + x' slope, noise^2) restricted to z > 0.
struct GeneratorExpert {
  double weight = 1.0;
  Vector center;
  Vector spread;
  double intercept = 0.0;
  Vector slope;
  double noise = 1.0;
};

/// Synthetic semicontinuous data: W = (1, w_1..w_{r-1}) with w_j ~ N(0,
/// w_sd^2), delta ~ Bernoulli(link(w' beta)), and a finite mixture of
/// experts for (x, z), independent of the occurrence part.
struct GeneratorSpec {
  int n = 800;
  Vector occurrence_beta;
  LinkKind link = LinkKind::kLogistic;
  double w_sd = 1.0;
  std::vector<GeneratorExpert> experts;
  /// Areas A0..A{areas-1} assigned uniformly; 0 omits the column.
  int areas = 0;
  /// Fraction marked in_sample = 1 (chosen without replacement); 0 omits
  /// the column.
  double in_sample_fraction = 0.0;
  std::uint64_t seed = 1;
  int truth_probes = 5;
  int truth_grid_points = 200;

  int r() const { return static_cast<int>(occurrence_beta.size()); }
  int p() const { return experts.empty() ? 0 : static_cast<int>(experts[0].center.size()); }

  /// Throws ConfigError when dimensions disagree or weights/scales are not positive.
  void validate() const;
};

/// The default two-part scenario: r = 3, p = 1, two experts.
GeneratorSpec default_generator_spec();

double true_link(LinkKind link, double t);
double true_occurrence_probability(const GeneratorSpec& spec, const Vector& w);
/// E(z | x, z > 0) under the expert mixture.
double true_conditional_mean(const GeneratorSpec& spec, const Vector& x);
/// f(z | x, z > 0); requires every noise scale to be positive.
double true_conditional_density(const GeneratorSpec& spec, double z, const Vector& x);

struct TruthDensityRow {
  int probe = 0;
  Vector x;
  double z = 0.0;
  double density = 0.0;
};

struct SimulationResult {
  SemicontinuousDataset data;
  std::vector<double> p_true;
  std::vector<double> mean_true;
  std::vector<TruthDensityRow> density_grid;
};

SimulationResult simulate(const GeneratorSpec& spec);

/// Per-unit truth (id, p_true, mean_true) and the probe density grid.
void write_truth(const std::filesystem::path& units_path, const std::filesystem::path& grid_path,
                 const SimulationResult& result);

/// Flat `key = value` generator file on top of `base`. Keys: n, seed,
/// link, w_sd, occurrence_beta, areas, in_sample_fraction, expert_weight,
/// expert_center, expert_spread, expert_intercept, expert_slope,
/// expert_noise (per-expert vectors or rows).
GeneratorSpec parse_generator_spec(const std::string& text, const GeneratorSpec& base);

}  // namespace twopart
