#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "twopart/config.hpp"
#include "twopart/dataset.hpp"
#include "twopart/diagnostics.hpp"
#include "twopart/part1.hpp"
#include "twopart/part2.hpp"
#include "twopart/predictive.hpp"

namespace twopart {

/// Scalar trace of one part-1 iteration. Traces are recorded every thin-th
/// iteration, burn-in included; `stored` marks the kept draws.
struct Part1TraceRow {
  std::int64_t iteration = 0;
  bool stored = false;
  double alpha1 = 0.0;
  int clusters = 0;
  double acceptance = 0.0;
  double mh_scale = 0.0;
  Vector beta1;
};

struct Part2TraceRow {
  std::int64_t iteration = 0;
  bool stored = false;
  double alpha2 = 0.0;
  int clusters = 0;
  double k0 = 0.0;
  Vector m1;
  Matrix Psi1;
};

struct Part1Chain {
  std::vector<Part1Draw> draws;
  std::vector<Part1TraceRow> trace;
  /// Latent thresholds per stored draw; filled only with dump_state.
  std::vector<Vector> latent;
  std::vector<std::string> warnings;
  double acceptance_rate = 0.0;
  double final_mh_scale = 0.0;
};

struct Part2Chain {
  std::vector<Part2Draw> draws;
  std::vector<Part2TraceRow> trace;
  std::int64_t underflow_count = 0;
};

/// Runs every chain of the occurrence sampler under the configured
/// schedule. Chain c uses RNG stream 2c of the schedule seed; chains run
/// concurrently. Sampler failures surface as SamplerError naming the chain
/// and iteration.
std::vector<Part1Chain> sample_part1(const Part1Data& data, const Config& config);

/// As sample_part1 for the intensity sampler, on RNG streams 2c + 1.
std::vector<Part2Chain> sample_part2(const Part2Data& data, const Config& config);

std::vector<std::vector<Part1Draw>> draws_of(const std::vector<Part1Chain>& chains);
std::vector<std::vector<Part2Draw>> draws_of(const std::vector<Part2Chain>& chains);

/// Posterior mean of P(delta = 1 | w) for every row of W.
std::vector<double> p_positive_means(const std::vector<std::vector<Part1Draw>>& draws,
                                     const Matrix& W);

/// Hyperparameter defaults from the fitted units, then `config_text` and
/// `overrides` (each "key=value") on top.
Config resolve_config(const SemicontinuousDataset& fit_data, const std::string& config_text,
                      const std::vector<std::string>& overrides);

struct FitOptions {
  /// Fraction of units to fit on, chosen with the schedule seed; the rest
  /// are held out. Without it the in_sample column (or every unit) is used.
  std::optional<double> split;
  double cutoff = 0.5;
  bool reference_figure = false;
};

struct FitSummary {
  int fitted_units = 0;
  int positives = 0;
  std::vector<PsrfRow> psrf;
  std::vector<std::string> warnings;
};

/// Units selected for fitting, in file order.
std::vector<int> fit_rows(const SemicontinuousDataset& data, const FitOptions& options,
                          std::uint64_t seed);

/// Fits both parts and writes the run directory (created if needed).
FitSummary run_fit(const Config& config, const SemicontinuousDataset& data,
                   const std::filesystem::path& out, const FitOptions& options = {});

/// Stored state of a fitted run, read back from its directory.
struct RunArtifacts {
  Config config;
  std::vector<std::vector<Part1Draw>> part1;
  std::vector<std::vector<Part2Draw>> part2;
  std::vector<std::string> fit_ids;
  std::vector<double> fit_y;
  std::vector<std::string> w_names;
  std::vector<std::string> x_names;
};

RunArtifacts load_run(const std::filesystem::path& run_dir);

/// "auto", "auto:N" (per-unit grid over the predictive mean +/- 6 sd) or
/// "lo:hi:N" (shared evenly spaced grid).
struct GridSpec {
  bool automatic = true;
  int points = 200;
  double lo = 0.0;
  double hi = 0.0;

  static GridSpec parse(const std::string& text);
};

struct PredictOptions {
  GridSpec grid;
  double cutoff = 0.5;
  bool reference_figure = false;
};

/// Predictive surfaces, classification, held-out comparison and area
/// tables for `data`, written to `out`.
std::vector<PredictiveSurface> run_predict(const std::filesystem::path& run_dir,
                                           const SemicontinuousDataset& data,
                                           const std::filesystem::path& out,
                                           const PredictOptions& options = {});

/// Recomputes psrf.csv and posterior_table.csv from the stored draws into
/// `out`. Throws ConfigError when the run has fewer than 2 chains.
std::vector<PsrfRow> run_diagnose(const std::filesystem::path& run_dir,
                                  const std::filesystem::path& out);

}  // namespace twopart
