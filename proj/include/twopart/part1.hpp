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

/// Occurrence data: delta_i in {0, 1} and the n x r covariate matrix W
/// (intercept column included by the caller).
struct Part1Data {
  std::vector<int> delta;
  Matrix W;

  int n() const { return static_cast<int>(delta.size()); }
  int r() const { return static_cast<int>(W.cols()); }

  /// Throws DataError on non-binary delta, size mismatch or rank-deficient W.
  void validate() const;
};

/// Latent-threshold representation delta_i = I(V_i <= w_i' beta) with
/// V_i ~ G, G ~ DP(alpha * Logistic(0, 1)), G integrated out (Polya urn).
///
/// Clusters are stored in slots; a slot with size 0 is free and may be reused.
struct Part1State {
  Vector beta1;
  Vector V;
  double alpha1 = 1.0;
  std::vector<double> cluster_value;
  std::vector<int> cluster_size;
  std::vector<int> label;
  double mh_scale = 0.1;
  std::int64_t mh_accepted = 0;
  std::int64_t mh_proposed = 0;

  int clusters() const;
  double acceptance_rate() const;
};

/// One stored posterior draw: enough to evaluate the link G at any index.
/// Cluster values are sorted ascending.
struct Part1Draw {
  double alpha1 = 1.0;
  Vector beta1;
  std::vector<double> cluster_value;
  std::vector<int> cluster_size;
  int n = 0;

  int clusters() const { return static_cast<int>(cluster_value.size()); }
};

/// Unnormalized conditional of V_i given everything else: a fresh
/// truncated-baseline draw with weight `fresh`, or joining slot c with
/// weight `join[c]`.
struct UrnWeights {
  double fresh = 0.0;
  std::vector<double> join;
};

/// Logistic-regression maximum likelihood by Newton iterations (at most
/// `max_iterations`). `converged` is false on separation or a singular
/// Hessian.
Vector logistic_mle(const Part1Data& data, bool& converged, int max_iterations = 50);

/// Escobar-West auxiliary-variable update of a DP precision with a
/// Gamma(a, b) prior, given d occupied clusters among n observations.
/// With n = 0 the prior is sampled.
double sample_dp_precision(RngStream& rng, double alpha, int d, int n, double a, double b);

class Part1Sampler {
 public:
  Part1Sampler(const Part1Data& data, const Part1Hyper& hyper, RngStream rng);
  // The sampler keeps references to data and hyper.
  Part1Sampler(Part1Data&&, const Part1Hyper&, RngStream) = delete;
  Part1Sampler(const Part1Data&, Part1Hyper&&, RngStream) = delete;

  const Part1State& state() const { return state_; }
  /// Replaces the state; throws std::logic_error if its invariants fail.
  void set_state(Part1State state);

  /// Gibbs update of every V_i through the urn conditional, followed by a
  /// redraw of each cluster's shared value given its members.
  void update_latent_V();
  void update_latent_unit(int i);
  void update_cluster_values();
  UrnWeights latent_conditional(int i) const;

  /// Random-walk MH on beta1; proposals that break sign consistency are
  /// rejected. `adapting` tunes the step scale (burn-in only).
  void update_beta1(bool adapting);
  /// Joint rescaling of (beta1, V), then a joint shift of the intercept
  /// and V when W has a column of ones.
  void update_location_scale();
  void update_alpha1();

  void sweep(bool adapting);
  Part1Draw snapshot() const;

  /// Sign consistency and cluster bookkeeping. Returns false with a reason.
  bool check_invariants(std::string* why = nullptr) const;

  const std::vector<std::string>& warnings() const { return warnings_; }

 private:
  double index(int i) const;
  void remove_from_cluster(int i);
  int open_cluster(double value);

  const Part1Data* data_;
  const Part1Hyper* hyper_;
  RngStream rng_;
  Part1State state_;
  Matrix prior_chol_;
  Vector t_;  // W * beta1, kept in sync with state_.beta1
  std::vector<int> free_slots_;
  int intercept_ = -1;  // column of W that is identically 1, if any
  std::vector<std::string> warnings_;
};

/// Posterior predictive CDF of G at t for one draw:
/// (alpha F(t) + sum_c size_c I(v_c <= t)) / (alpha + n).
double link_cdf(const Part1Draw& draw, double t);

/// Per grid point, mean and 95% band of the link across draws.
std::vector<Band> estimated_link(std::span<const Part1Draw> draws, std::span<const double> grid);

/// Mean and 95% band of P(delta = 1 | w) across draws.
Band expected_delta(std::span<const Part1Draw> draws, const Vector& w);

}  // namespace twopart
