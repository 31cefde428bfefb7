#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "twopart/config.hpp"
#include "twopart/linalg.hpp"
#include "twopart/rng.hpp"
#include "twopart/stats.hpp"

namespace twopart {

/// Positive-response rows d_j = (z_j, x_j'), an m x k matrix with the
/// response in column 0.
struct Part2Data {
  Matrix D;

  int m() const { return static_cast<int>(D.rows()); }
  int k() const { return static_cast<int>(D.cols()); }

  /// Throws DataError on non-positive responses or non-finite entries.
  /// `response_is_log` relaxes positivity for log-transformed responses.
  void validate(bool response_is_log = false) const;
};

/// Mixture component (mu_l, Sigma_l), partitioned as (response, covariates).
struct Atom {
  Vector mu;
  Matrix Sigma;
};

/// Truncated stick-breaking DP mixture state.
struct Part2State {
  std::vector<Atom> atoms;
  Vector sticks;   // L - 1 proportions
  Vector weights;  // L stick-breaking weights
  std::vector<int> alloc;
  double alpha2 = 1.0;
  Vector m1;
  double k0 = 1.0;
  Matrix Psi1;
  std::int64_t underflow_count = 0;

  int L() const { return static_cast<int>(atoms.size()); }
  std::vector<int> counts() const;
  int occupied() const;
};

struct Part2Draw {
  Vector weights;
  std::vector<Atom> atoms;
  double alpha2 = 1.0;
  Vector m1;
  double k0 = 1.0;
  Matrix Psi1;
  int occupied = 0;
};

/// Linear-Gaussian regression of the response on the covariates implied by
/// one atom: z | x ~ N(beta0 + x' beta2, sigma2).
struct Expert {
  double beta0 = 0.0;
  Vector beta2;
  double sigma2 = 1.0;
};

Expert conditional_expert(const Atom& atom);

/// Weight-dependent mixture of experts induced by one draw:
/// f(z | x) = sum_l w_l(x) N(z | beta0_l + x' beta2_l, sigma2_l) with
/// w_l(x) proportional to w_l N_p(x | mu_2l, Sigma_22l).
///
/// With `log_response` the mixture describes log(z); density() and the
/// moments are then reported on the original scale.
class ConditionalMixture {
 public:
  explicit ConditionalMixture(const Part2Draw& draw, bool log_response = false);

  /// w_l(x); all zeros when every marginal density underflows.
  std::vector<double> weights_at(const Vector& x) const;
  double density(double z, const Vector& x) const;
  /// Densities on a grid. Components with w_l(x) below 1e-15 are skipped.
  std::vector<double> density_on_grid(const Vector& x, std::span<const double> z_grid) const;
  double mean(const Vector& x) const;
  double variance(const Vector& x) const;

  int p() const { return p_; }
  int components() const { return static_cast<int>(experts_.size()); }
  bool log_response() const { return log_response_; }

 private:
  std::vector<double> log_weights_at(const Vector& x) const;

  int p_ = 0;
  bool log_response_ = false;
  std::vector<Expert> experts_;
  std::vector<MvNormal> marginals_;
  std::vector<double> log_weight_;
};

double conditional_density(double z, const Vector& x, const Part2Draw& draw);

/// Pointwise posterior mean and 95% band of f(z | x) over draws.
std::vector<Band> conditional_density_grid(std::span<const ConditionalMixture> mixtures,
                                           const Vector& x, std::span<const double> z_grid);

/// Posterior mean and 95% band of E(z | x).
Band conditional_mean(std::span<const ConditionalMixture> mixtures, const Vector& x);

/// Evenly spaced grid over posterior-predictive mean +/- half_width_sd
/// standard deviations (log-spaced when the mixtures model log z).
std::vector<double> default_z_grid(std::span<const ConditionalMixture> mixtures, const Vector& x,
                                   int points = 200, double half_width_sd = 6.0);

double trapezoid(std::span<const double> x, std::span<const double> y);

class Part2Sampler {
 public:
  Part2Sampler(const Part2Data& data, const Part2Hyper& hyper, RngStream rng);
  // The sampler keeps references to data and hyper.
  Part2Sampler(Part2Data&&, const Part2Hyper&, RngStream) = delete;
  Part2Sampler(const Part2Data&, Part2Hyper&&, RngStream) = delete;

  const Part2State& state() const { return state_; }
  void set_state(Part2State state);

  void update_allocations();
  /// Allocation pass with the atoms integrated out (NIW Student-t
  /// predictives, weights held fixed). Leaves the atoms stale, so it must be
  /// followed by update_atoms.
  void update_allocations_collapsed();
  /// Unnormalised log P(alloc_j = l | other labels, weights, baseline) with
  /// the atoms integrated out.
  std::vector<double> collapsed_log_weights(int j) const;
  void update_atoms();
  void update_sticks_and_alpha2();
  void update_baseline();
  /// Metropolis steps on log alpha2 under p(alpha2 | counts), sticks
  /// integrated out. Must be followed by update_sticks_and_alpha2.
  void update_alpha2_collapsed();
  /// Label-switching Metropolis moves: a swap of two occupied components,
  /// then swaps of adjacent components together with their sticks.
  void update_label_switch();

  /// allocations, collapsed allocations, atoms, baseline, atoms again,
  /// collapsed alpha2, sticks and alpha2, label switching.
  void sweep();
  Part2Draw snapshot() const;

  bool check_invariants(std::string* why = nullptr) const;

 private:
  Matrix centred_data() const;

  const Part2Data* data_;
  const Part2Hyper* hyper_;
  RngStream rng_;
  Part2State state_;
  Matrix Psi2_inv_;
  Matrix S2_inv_;
};

}  // namespace twopart
