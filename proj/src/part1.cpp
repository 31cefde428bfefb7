#include "twopart/part1.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

#include "twopart/distributions.hpp"
#include "twopart/errors.hpp"

namespace twopart {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kScaleStep = 0.1;
constexpr double kShiftStep = 0.1;

// delta = 1 requires V <= t; delta = 0 requires V > t.
bool consistent(int delta, double v, double t) { return delta == 1 ? v <= t : v > t; }

double logistic_log_pdf(double v) {
  const double a = std::fabs(v);
  return -a - 2.0 * std::log1p(std::exp(-a));
}

double draw_threshold(RngStream& rng, int delta, double t) {
  return delta == 1 ? sample_truncated_logistic(rng, -kInf, t)
                    : sample_truncated_logistic(rng, t, kInf);
}

}  // namespace

void Part1Data::validate() const {
  if (W.rows() != static_cast<Eigen::Index>(delta.size())) {
    throw DataError("occurrence data: W has " + std::to_string(W.rows()) + " rows but delta has " +
                    std::to_string(delta.size()) + " entries");
  }
  for (std::size_t i = 0; i < delta.size(); ++i) {
    if (delta[i] != 0 && delta[i] != 1) {
      throw DataError("occurrence data: delta[" + std::to_string(i) + "] is not 0 or 1");
    }
  }
  if (!W.allFinite()) throw DataError("occurrence data: W has non-finite entries");
  if (W.rows() > 0) {
    Eigen::ColPivHouseholderQR<Matrix> qr(W);
    if (qr.rank() < W.cols()) {
      throw DataError("occurrence data: W is rank deficient (rank " + std::to_string(qr.rank()) +
                      " < r = " + std::to_string(W.cols()) + ")");
    }
  }
}

int Part1State::clusters() const {
  return static_cast<int>(std::count_if(cluster_size.begin(), cluster_size.end(),
                                        [](int s) { return s > 0; }));
}

double Part1State::acceptance_rate() const {
  return mh_proposed == 0 ? 0.0
                          : static_cast<double>(mh_accepted) / static_cast<double>(mh_proposed);
}

Vector logistic_mle(const Part1Data& data, bool& converged, int max_iterations) {
  const int r = data.r();
  Vector beta = Vector::Zero(r);
  converged = false;
  if (data.n() == 0) return beta;
  Vector y(data.n());
  for (int i = 0; i < data.n(); ++i) y[i] = data.delta[static_cast<std::size_t>(i)];

  for (int it = 0; it < max_iterations; ++it) {
    const Vector eta = data.W * beta;
    Vector p(data.n()), weight(data.n());
    for (int i = 0; i < data.n(); ++i) {
      p[i] = logistic_cdf(eta[i]);
      weight[i] = p[i] * (1.0 - p[i]);
    }
    const Vector grad = data.W.transpose() * (y - p);
    const Matrix info = data.W.transpose() * weight.asDiagonal() * data.W;
    Eigen::LDLT<Matrix> ldlt(info);
    if (ldlt.info() != Eigen::Success || !(ldlt.vectorD().minCoeff() > 0.0)) return beta;
    const Vector step = ldlt.solve(grad);
    beta += step;
    if (!beta.allFinite()) return Vector::Zero(r);
    if (step.cwiseAbs().maxCoeff() < 1e-10 * (1.0 + beta.cwiseAbs().maxCoeff())) {
      converged = beta.cwiseAbs().maxCoeff() < 1e3;
      return beta;
    }
  }
  return beta;
}

double sample_dp_precision(RngStream& rng, double alpha, int d, int n, double a, double b) {
  if (n == 0) return sample_gamma(rng, a, b);
  const double eta = sample_beta(rng, alpha + 1.0, static_cast<double>(n));
  const double rate = b - std::log(eta);
  const double dd = static_cast<double>(d);
  const double odds = (a + dd - 1.0) / (static_cast<double>(n) * rate);
  const double pi = odds / (1.0 + odds);
  const double shape = rng.uniform() < pi ? a + dd : a + dd - 1.0;
  return sample_gamma(rng, shape, rate);
}

Part1Sampler::Part1Sampler(const Part1Data& data, const Part1Hyper& hyper, RngStream rng)
    : data_(&data), hyper_(&hyper), rng_(std::move(rng)) {
  prior_chol_ = robust_cholesky(hyper.S_beta1_0, "S_beta1_0");
  const int n = data.n();

  bool converged = false;
  Vector beta = logistic_mle(data, converged);
  if (n > 0 && !converged) {
    warnings_.push_back(
        "logistic MLE did not converge (separation?); starting beta1 at its prior mean");
    beta = hyper.beta1_0;
  } else if (n == 0) {
    beta = hyper.beta1_0;
  }
  state_.beta1 = beta;
  state_.alpha1 = hyper.a1_0 / hyper.b1_0;
  state_.mh_scale = hyper.mh_step_scale;
  t_ = data.W * beta;
  for (int j = 0; j < data.r() && n > 0; ++j) {
    if ((data.W.col(j).array() == 1.0).all()) {
      intercept_ = j;
      break;
    }
  }
  state_.V.resize(n);
  state_.label.resize(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    state_.V[i] = draw_threshold(rng_, data.delta[static_cast<std::size_t>(i)], t_[i]);
    state_.label[static_cast<std::size_t>(i)] = i;
    state_.cluster_value.push_back(state_.V[i]);
    state_.cluster_size.push_back(1);
  }
}

void Part1Sampler::set_state(Part1State state) {
  std::swap(state_, state);
  t_ = data_->W * state_.beta1;
  free_slots_.clear();
  for (std::size_t c = 0; c < state_.cluster_size.size(); ++c) {
    if (state_.cluster_size[c] == 0) free_slots_.push_back(static_cast<int>(c));
  }
  std::string why;
  if (!check_invariants(&why)) {
    std::swap(state_, state);
    t_ = data_->W * state_.beta1;
    throw std::logic_error("Part1Sampler::set_state: " + why);
  }
}

double Part1Sampler::index(int i) const { return t_[i]; }

void Part1Sampler::remove_from_cluster(int i) {
  const int c = state_.label[static_cast<std::size_t>(i)];
  if (--state_.cluster_size[static_cast<std::size_t>(c)] == 0) free_slots_.push_back(c);
  state_.label[static_cast<std::size_t>(i)] = -1;
}

int Part1Sampler::open_cluster(double value) {
  if (!free_slots_.empty()) {
    const int c = free_slots_.back();
    free_slots_.pop_back();
    state_.cluster_value[static_cast<std::size_t>(c)] = value;
    return c;
  }
  state_.cluster_value.push_back(value);
  state_.cluster_size.push_back(0);
  return static_cast<int>(state_.cluster_value.size()) - 1;
}

UrnWeights Part1Sampler::latent_conditional(int i) const {
  const int delta = data_->delta[static_cast<std::size_t>(i)];
  const double t = index(i);
  const int own = state_.label[static_cast<std::size_t>(i)];
  UrnWeights w;
  w.fresh = state_.alpha1 * (delta == 1 ? logistic_cdf(t) : logistic_cdf(-t));
  w.join.assign(state_.cluster_size.size(), 0.0);
  for (std::size_t c = 0; c < state_.cluster_size.size(); ++c) {
    const int size = state_.cluster_size[c] - (static_cast<int>(c) == own ? 1 : 0);
    if (size > 0 && consistent(delta, state_.cluster_value[c], t)) {
      w.join[c] = static_cast<double>(size);
    }
  }
  return w;
}

void Part1Sampler::update_latent_unit(int i) {
  const auto ui = static_cast<std::size_t>(i);
  const int delta = data_->delta[ui];
  const double t = index(i);
  remove_from_cluster(i);

  const double fresh = state_.alpha1 * (delta == 1 ? logistic_cdf(t) : logistic_cdf(-t));
  double total = fresh;
  const auto slots = state_.cluster_size.size();
  for (std::size_t c = 0; c < slots; ++c) {
    if (state_.cluster_size[c] > 0 && consistent(delta, state_.cluster_value[c], t)) {
      total += state_.cluster_size[c];
    }
  }
  double u = rng_.uniform() * total;
  int chosen = -1;
  if (u >= fresh) {
    u -= fresh;
    for (std::size_t c = 0; c < slots; ++c) {
      if (state_.cluster_size[c] > 0 && consistent(delta, state_.cluster_value[c], t)) {
        u -= state_.cluster_size[c];
        chosen = static_cast<int>(c);
        if (u < 0.0) break;
      }
    }
  }
  if (chosen < 0) chosen = open_cluster(draw_threshold(rng_, delta, t));
  state_.label[ui] = chosen;
  ++state_.cluster_size[static_cast<std::size_t>(chosen)];
  state_.V[i] = state_.cluster_value[static_cast<std::size_t>(chosen)];
}

void Part1Sampler::update_cluster_values() {
  const auto slots = state_.cluster_size.size();
  std::vector<double> lower(slots, -kInf), upper(slots, kInf);
  for (int i = 0; i < data_->n(); ++i) {
    const auto c = static_cast<std::size_t>(state_.label[static_cast<std::size_t>(i)]);
    if (data_->delta[static_cast<std::size_t>(i)] == 1) {
      upper[c] = std::min(upper[c], index(i));
    } else {
      lower[c] = std::max(lower[c], index(i));
    }
  }
  for (std::size_t c = 0; c < slots; ++c) {
    if (state_.cluster_size[c] == 0) continue;
    // The open lower end excludes V = lower; the closed upper end admits V = upper.
    double v = sample_truncated_logistic(rng_, lower[c], upper[c]);
    if (v > upper[c]) v = upper[c];
    state_.cluster_value[c] = v;
  }
  for (int i = 0; i < data_->n(); ++i) {
    state_.V[i] = state_.cluster_value[static_cast<std::size_t>(state_.label[static_cast<std::size_t>(i)])];
  }
}

void Part1Sampler::update_latent_V() {
  for (int i = 0; i < data_->n(); ++i) update_latent_unit(i);
  update_cluster_values();
}

void Part1Sampler::update_beta1(bool adapting) {
  const int r = data_->r();
  Vector eps(r);
  for (int j = 0; j < r; ++j) eps[j] = sample_standard_normal(rng_);
  const Vector proposal = state_.beta1 + state_.mh_scale * (prior_chol_ * eps);
  ++state_.mh_proposed;

  bool accept = false;
  const Vector t_new = data_->W * proposal;
  bool feasible = true;
  for (int i = 0; i < data_->n() && feasible; ++i) {
    feasible = consistent(data_->delta[static_cast<std::size_t>(i)], state_.V[i], t_new[i]);
  }
  if (feasible) {
    auto quad = [&](const Vector& b) {
      const Vector z = prior_chol_.triangularView<Eigen::Lower>().solve(b - hyper_->beta1_0);
      return z.squaredNorm();
    };
    const double log_ratio = -0.5 * (quad(proposal) - quad(state_.beta1));
    accept = log_ratio >= 0.0 || std::log(rng_.uniform()) < log_ratio;
  }
  if (accept) {
    state_.beta1 = proposal;
    t_ = t_new;
    ++state_.mh_accepted;
  }
  if (adapting && hyper_->mh_adapt) {
    // Robbins-Monro on the log scale, equilibrium at 30% acceptance.
    state_.mh_scale *= std::exp(0.05 * ((accept ? 1.0 : 0.0) - 0.3));
  }
}

void Part1Sampler::update_location_scale() {
  // (beta, V) -> (c beta, c V) and, with an intercept column, a joint shift
  // of the intercept and every V. Both keep sign consistency exactly, so the
  // ratio involves only the prior and the baseline density of the distinct
  // values (plus the Jacobian c^(r + d) for the scaling).
  auto quad = [&](const Vector& b) {
    const Vector z = prior_chol_.triangularView<Eigen::Lower>().solve(b - hyper_->beta1_0);
    return z.squaredNorm();
  };
  std::vector<std::size_t> occupied;
  for (std::size_t c = 0; c < state_.cluster_size.size(); ++c) {
    if (state_.cluster_size[c] > 0) occupied.push_back(c);
  }
  const double d = static_cast<double>(occupied.size());
  auto baseline = [&](double scale, double shift) {
    double s = 0.0;
    for (std::size_t c : occupied) s += logistic_log_pdf(scale * state_.cluster_value[c] + shift);
    return s;
  };
  // Rounding can break a near-tie, so the moved state is re-checked.
  auto try_apply = [&](const Vector& beta, double scale, double shift) {
    const Vector t_new = data_->W * beta;
    for (int i = 0; i < data_->n(); ++i) {
      const double v = scale * state_.V[i] + shift;
      if (!consistent(data_->delta[static_cast<std::size_t>(i)], v, t_new[i])) return;
    }
    for (std::size_t c : occupied) state_.cluster_value[c] = scale * state_.cluster_value[c] + shift;
    for (int i = 0; i < data_->n(); ++i) {
      state_.V[i] = state_.cluster_value[static_cast<std::size_t>(state_.label[static_cast<std::size_t>(i)])];
    }
    state_.beta1 = beta;
    t_ = t_new;
  };

  const double log_c = kScaleStep * sample_standard_normal(rng_);
  const double c = std::exp(log_c);
  const Vector scaled = c * state_.beta1;
  const double log_ratio_scale = -0.5 * (quad(scaled) - quad(state_.beta1)) + baseline(c, 0.0) -
                                 baseline(1.0, 0.0) + (data_->r() + d) * log_c;
  if (std::log(rng_.uniform()) < log_ratio_scale) {
    try_apply(scaled, c, 0.0);
  }

  if (intercept_ < 0) return;
  const double a = kShiftStep * sample_standard_normal(rng_);
  Vector shifted = state_.beta1;
  shifted[intercept_] += a;
  const double log_ratio_shift =
      -0.5 * (quad(shifted) - quad(state_.beta1)) + baseline(1.0, a) - baseline(1.0, 0.0);
  if (std::log(rng_.uniform()) < log_ratio_shift) {
    try_apply(shifted, 1.0, a);
  }
}

void Part1Sampler::update_alpha1() {
  state_.alpha1 = sample_dp_precision(rng_, state_.alpha1, state_.clusters(), data_->n(),
                                      hyper_->a1_0, hyper_->b1_0);
}

void Part1Sampler::sweep(bool adapting) {
  update_latent_V();
  update_beta1(adapting);
  update_location_scale();
  update_alpha1();
#ifndef NDEBUG
  std::string why;
  if (!check_invariants(&why)) throw SamplerError("part 1 invariant violated: " + why);
#endif
}

Part1Draw Part1Sampler::snapshot() const {
  Part1Draw d;
  d.alpha1 = state_.alpha1;
  d.beta1 = state_.beta1;
  d.n = data_->n();
  std::vector<std::size_t> order;
  for (std::size_t c = 0; c < state_.cluster_size.size(); ++c) {
    if (state_.cluster_size[c] > 0) order.push_back(c);
  }
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return state_.cluster_value[a] < state_.cluster_value[b];
  });
  for (std::size_t c : order) {
    d.cluster_value.push_back(state_.cluster_value[c]);
    d.cluster_size.push_back(state_.cluster_size[c]);
  }
  return d;
}

bool Part1Sampler::check_invariants(std::string* why) const {
  auto fail = [&](const std::string& msg) {
    if (why) *why = msg;
    return false;
  };
  const int n = data_->n();
  if (state_.V.size() != n || static_cast<int>(state_.label.size()) != n) {
    return fail("state size does not match data");
  }
  if (!(state_.alpha1 > 0.0)) return fail("alpha1 not positive");
  if (state_.cluster_value.size() != state_.cluster_size.size()) {
    return fail("cluster arrays out of step");
  }
  std::vector<int> counted(state_.cluster_size.size(), 0);
  const Vector t = data_->W * state_.beta1;
  for (int i = 0; i < n; ++i) {
    const int c = state_.label[static_cast<std::size_t>(i)];
    if (c < 0 || c >= static_cast<int>(counted.size())) return fail("label out of range");
    ++counted[static_cast<std::size_t>(c)];
    if (state_.V[i] != state_.cluster_value[static_cast<std::size_t>(c)]) {
      return fail("V_" + std::to_string(i) + " differs from its cluster value");
    }
    if (!consistent(data_->delta[static_cast<std::size_t>(i)], state_.V[i], t[i])) {
      return fail("sign consistency broken at unit " + std::to_string(i));
    }
  }
  if (counted != state_.cluster_size) return fail("cluster sizes do not match labels");
  std::vector<double> values;
  for (std::size_t c = 0; c < counted.size(); ++c) {
    if (counted[c] > 0) values.push_back(state_.cluster_value[c]);
  }
  std::sort(values.begin(), values.end());
  if (std::adjacent_find(values.begin(), values.end()) != values.end()) {
    return fail("two occupied clusters share a value");
  }
  return true;
}

double link_cdf(const Part1Draw& draw, double t) {
  double below = 0.0;
  for (std::size_t c = 0; c < draw.cluster_value.size() && draw.cluster_value[c] <= t; ++c) {
    below += draw.cluster_size[c];
  }
  return (draw.alpha1 * logistic_cdf(t) + below) / (draw.alpha1 + draw.n);
}

std::vector<Band> estimated_link(std::span<const Part1Draw> draws, std::span<const double> grid) {
  std::vector<Band> out;
  out.reserve(grid.size());
  std::vector<double> values(draws.size());
  for (double t : grid) {
    for (std::size_t d = 0; d < draws.size(); ++d) values[d] = link_cdf(draws[d], t);
    out.push_back(summarize(values));
  }
  return out;
}

Band expected_delta(std::span<const Part1Draw> draws, const Vector& w) {
  if (draws.empty()) throw std::invalid_argument("expected_delta: no draws");
  std::vector<double> values(draws.size());
  for (std::size_t d = 0; d < draws.size(); ++d) {
    if (draws[d].beta1.size() != w.size()) {
      throw DataError("expected_delta: w has length " + std::to_string(w.size()) +
                      " but the model has r = " + std::to_string(draws[d].beta1.size()));
    }
    values[d] = link_cdf(draws[d], w.dot(draws[d].beta1));
  }
  return summarize(values);
}

}  // namespace twopart
