#include "twopart/part2.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <limits>
#include <stdexcept>

#include "twopart/distributions.hpp"
#include "twopart/errors.hpp"

namespace twopart {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();
constexpr double kGridWeightFloor = 1e-15;

// Sufficient statistics of one component on column-centred data.
struct ComponentStats {
  int n = 0;
  Vector sum;
  Matrix outer;
};

// Multivariate Student-t posterior predictive of a NIW component.
struct StudentT {
  Vector loc;
  Matrix chol;  // lower factor of the scale matrix
  double df = 1.0;
  double log_norm = 0.0;

  double log_pdf(const Vector& x) const {
    const double k = static_cast<double>(loc.size());
    const Vector u = chol.triangularView<Eigen::Lower>().solve(x - loc);
    return log_norm - 0.5 * (df + k) * std::log1p(u.squaredNorm() / df);
  }
};

StudentT niw_predictive(const NiwParams& prior, const ComponentStats& st) {
  const auto k = prior.m.size();
  NiwParams post = prior;
  if (st.n > 0) {
    const Vector mean = st.sum / st.n;
    const Matrix scatter = st.outer - st.n * mean * mean.transpose();
    post = niw_posterior(prior, st.n, mean, scatter);
  }
  StudentT t;
  const double kd = static_cast<double>(k);
  t.df = post.nu - kd + 1.0;
  t.loc = post.m;
  const Matrix scale = post.Psi * ((post.kappa + 1.0) / (post.kappa * t.df));
  t.chol = robust_cholesky(scale, "predictive scale");
  const double log_det = 2.0 * t.chol.diagonal().array().log().sum();
  t.log_norm = std::lgamma(0.5 * (t.df + kd)) - std::lgamma(0.5 * t.df) -
               0.5 * kd * std::log(t.df * M_PI) - 0.5 * log_det;
  return t;
}

}  // namespace

void Part2Data::validate(bool response_is_log) const {
  if (!D.allFinite()) throw DataError("intensity data: non-finite entries");
  if (m() > 0 && k() < 2) throw DataError("intensity data: need the response and >= 1 covariate");
  if (response_is_log) return;
  for (int j = 0; j < m(); ++j) {
    if (!(D(j, 0) > 0.0)) {
      throw DataError("intensity data: row " + std::to_string(j) + " has non-positive response");
    }
  }
}

std::vector<int> Part2State::counts() const {
  std::vector<int> n(atoms.size(), 0);
  for (int a : alloc) ++n[static_cast<std::size_t>(a)];
  return n;
}

int Part2State::occupied() const {
  const auto n = counts();
  return static_cast<int>(std::count_if(n.begin(), n.end(), [](int c) { return c > 0; }));
}

Expert conditional_expert(const Atom& atom) {
  const auto k = atom.mu.size();
  const auto p = k - 1;
  const Matrix S22 = atom.Sigma.bottomRightCorner(p, p);
  const Vector S21 = atom.Sigma.block(1, 0, p, 1);
  Eigen::LLT<Matrix> llt(S22);
  if (llt.info() != Eigen::Success) throw DomainError("conditional_expert: Sigma_22 not SPD");
  Expert e;
  e.beta2 = llt.solve(S21);
  e.beta0 = atom.mu[0] - e.beta2.dot(atom.mu.tail(p));
  e.sigma2 = atom.Sigma(0, 0) - S21.dot(e.beta2);
  return e;
}

ConditionalMixture::ConditionalMixture(const Part2Draw& draw, bool log_response)
    : log_response_(log_response) {
  const auto L = draw.atoms.size();
  if (L == 0) throw std::invalid_argument("ConditionalMixture: draw has no atoms");
  p_ = static_cast<int>(draw.atoms[0].mu.size()) - 1;
  experts_.reserve(L);
  marginals_.reserve(L);
  log_weight_.reserve(L);
  for (std::size_t l = 0; l < L; ++l) {
    const Atom& a = draw.atoms[l];
    experts_.push_back(conditional_expert(a));
    marginals_.emplace_back(a.mu.tail(p_), a.Sigma.bottomRightCorner(p_, p_));
    log_weight_.push_back(draw.weights[static_cast<Eigen::Index>(l)] > 0.0
                              ? std::log(draw.weights[static_cast<Eigen::Index>(l)])
                              : kNegInf);
  }
}

std::vector<double> ConditionalMixture::log_weights_at(const Vector& x) const {
  if (x.size() != p_) {
    throw DataError("conditional density: x has length " + std::to_string(x.size()) +
                    " but the model has p = " + std::to_string(p_));
  }
  std::vector<double> lw(experts_.size());
  for (std::size_t l = 0; l < lw.size(); ++l) {
    lw[l] = log_weight_[l] == kNegInf ? kNegInf : log_weight_[l] + marginals_[l].log_pdf(x);
  }
  return lw;
}

std::vector<double> ConditionalMixture::weights_at(const Vector& x) const {
  const auto lw = log_weights_at(x);
  if (*std::max_element(lw.begin(), lw.end()) == kNegInf) return std::vector<double>(lw.size(), 0.0);
  return softmax(lw);
}

double ConditionalMixture::density(double z, const Vector& x) const {
  double jacobian = 1.0;
  if (log_response_) {
    if (!(z > 0.0)) return 0.0;
    jacobian = 1.0 / z;
    z = std::log(z);
  }
  auto lw = log_weights_at(x);
  const double lse = log_sum_exp(lw);
  if (lse == kNegInf) return 0.0;
  for (std::size_t l = 0; l < lw.size(); ++l) {
    if (lw[l] == kNegInf) continue;
    const Expert& e = experts_[l];
    lw[l] += normal_log_pdf(z, e.beta0 + x.dot(e.beta2), e.sigma2) - lse;
  }
  return std::exp(log_sum_exp(lw)) * jacobian;
}

std::vector<double> ConditionalMixture::density_on_grid(const Vector& x,
                                                        std::span<const double> z_grid) const {
  const auto w = weights_at(x);
  std::vector<double> out(z_grid.size(), 0.0);
  for (std::size_t l = 0; l < w.size(); ++l) {
    if (!(w[l] >= kGridWeightFloor)) continue;
    const Expert& e = experts_[l];
    const double mu = e.beta0 + x.dot(e.beta2);
    const double log_w = std::log(w[l]);
    for (std::size_t g = 0; g < z_grid.size(); ++g) {
      const double z = z_grid[g];
      if (log_response_) {
        if (z > 0.0) out[g] += std::exp(log_w + normal_log_pdf(std::log(z), mu, e.sigma2)) / z;
      } else {
        out[g] += std::exp(log_w + normal_log_pdf(z, mu, e.sigma2));
      }
    }
  }
  return out;
}

double ConditionalMixture::mean(const Vector& x) const {
  const auto w = weights_at(x);
  double m = 0.0;
  for (std::size_t l = 0; l < w.size(); ++l) {
    if (w[l] == 0.0) continue;
    const Expert& e = experts_[l];
    const double mu = e.beta0 + x.dot(e.beta2);
    m += w[l] * (log_response_ ? std::exp(mu + 0.5 * e.sigma2) : mu);
  }
  return m;
}

double ConditionalMixture::variance(const Vector& x) const {
  const auto w = weights_at(x);
  double m = 0.0, second = 0.0;
  for (std::size_t l = 0; l < w.size(); ++l) {
    if (w[l] == 0.0) continue;
    const Expert& e = experts_[l];
    const double mu = e.beta0 + x.dot(e.beta2);
    if (log_response_) {
      m += w[l] * std::exp(mu + 0.5 * e.sigma2);
      second += w[l] * std::exp(2.0 * mu + 2.0 * e.sigma2);
    } else {
      m += w[l] * mu;
      second += w[l] * (e.sigma2 + mu * mu);
    }
  }
  return std::max(second - m * m, 0.0);
}

double conditional_density(double z, const Vector& x, const Part2Draw& draw) {
  return ConditionalMixture(draw).density(z, x);
}

std::vector<Band> conditional_density_grid(std::span<const ConditionalMixture> mixtures,
                                           const Vector& x, std::span<const double> z_grid) {
  if (z_grid.empty()) return {};
  if (mixtures.empty()) throw std::invalid_argument("conditional_density_grid: no draws");
  for (std::size_t g = 1; g < z_grid.size(); ++g) {
    if (!(z_grid[g] > z_grid[g - 1])) {
      throw std::invalid_argument("conditional_density_grid: grid must be strictly increasing");
    }
  }
  std::vector<std::vector<double>> per_draw;
  per_draw.reserve(mixtures.size());
  for (const auto& mix : mixtures) per_draw.push_back(mix.density_on_grid(x, z_grid));
  std::vector<Band> out(z_grid.size());
  std::vector<double> column(mixtures.size());
  for (std::size_t g = 0; g < z_grid.size(); ++g) {
    for (std::size_t d = 0; d < mixtures.size(); ++d) column[d] = per_draw[d][g];
    out[g] = summarize(column);
  }
  return out;
}

Band conditional_mean(std::span<const ConditionalMixture> mixtures, const Vector& x) {
  if (mixtures.empty()) throw std::invalid_argument("conditional_mean: no draws");
  std::vector<double> values(mixtures.size());
  for (std::size_t d = 0; d < mixtures.size(); ++d) values[d] = mixtures[d].mean(x);
  return summarize(values);
}

std::vector<double> default_z_grid(std::span<const ConditionalMixture> mixtures, const Vector& x,
                                   int points, double half_width_sd) {
  if (mixtures.empty() || points < 2) throw std::invalid_argument("default_z_grid: bad arguments");
  const bool log_scale = mixtures[0].log_response();
  // Pool the per-draw mixtures into one posterior-predictive mean and variance.
  double m = 0.0, second = 0.0;
  for (const auto& mix : mixtures) {
    const double dm = mix.mean(x);
    const double dv = mix.variance(x);
    m += dm;
    second += dv + dm * dm;
  }
  const double nd = static_cast<double>(mixtures.size());
  m /= nd;
  const double sd = std::sqrt(std::max(second / nd - m * m, 1e-300));
  std::vector<double> grid(static_cast<std::size_t>(points));
  if (log_scale) {
    // Log-spaced from the (strictly positive) lower end.
    const double lo = std::max(m - half_width_sd * sd, m * 1e-6);
    const double hi = m + half_width_sd * sd;
    for (int g = 0; g < points; ++g) {
      grid[static_cast<std::size_t>(g)] =
          lo * std::pow(hi / lo, static_cast<double>(g) / (points - 1));
    }
  } else {
    const double lo = m - half_width_sd * sd;
    const double step = 2.0 * half_width_sd * sd / (points - 1);
    for (int g = 0; g < points; ++g) grid[static_cast<std::size_t>(g)] = lo + g * step;
  }
  return grid;
}

double trapezoid(std::span<const double> x, std::span<const double> y) {
  double acc = 0.0;
  for (std::size_t i = 1; i < x.size(); ++i) acc += 0.5 * (x[i] - x[i - 1]) * (y[i] + y[i - 1]);
  return acc;
}

Part2Sampler::Part2Sampler(const Part2Data& data, const Part2Hyper& hyper, RngStream rng)
    : data_(&data), hyper_(&hyper), rng_(std::move(rng)) {
  const int L = hyper.truncation_L;
  const auto k = hyper.m2.size();
  if (data.m() > 0 && data.k() != k) {
    throw DataError("intensity data has k = " + std::to_string(data.k()) +
                    " columns but the configuration has k = " + std::to_string(k));
  }
  Psi2_inv_ = spd_inverse(hyper.Psi2, "Psi2");
  S2_inv_ = spd_inverse(hyper.S2, "S2");

  state_.m1 = hyper.m2;
  state_.k0 = hyper.tau1 / hyper.tau2;
  state_.Psi1 = hyper.nu2 * hyper.Psi2;
  state_.alpha2 = hyper.a2_0 / hyper.b2_0;
  state_.atoms.assign(static_cast<std::size_t>(L), Atom{hyper.m2, Matrix::Identity(k, k)});
  state_.sticks = Vector::Constant(L - 1, 0.5);
  state_.weights = Vector::Constant(L, 1.0 / L);
  // Spread the data over a handful of components; the first sweeps merge
  // or split them.
  const int start = std::min(L, 10);
  state_.alloc.resize(static_cast<std::size_t>(data.m()));
  for (auto& a : state_.alloc) a = static_cast<int>(rng_() % static_cast<std::uint64_t>(start));
  update_atoms();
  update_sticks_and_alpha2();
}

void Part2Sampler::set_state(Part2State state) {
  std::swap(state_, state);
  std::string why;
  if (!check_invariants(&why)) {
    std::swap(state_, state);
    throw std::logic_error("Part2Sampler::set_state: " + why);
  }
}

void Part2Sampler::update_allocations() {
  const int L = state_.L();
  std::vector<MvNormal> comps;
  comps.reserve(static_cast<std::size_t>(L));
  for (int l = 0; l < L; ++l) {
    try {
      comps.emplace_back(state_.atoms[static_cast<std::size_t>(l)].mu,
                         state_.atoms[static_cast<std::size_t>(l)].Sigma);
    } catch (const DomainError& e) {
      throw SamplerError("component " + std::to_string(l) + ": " + e.what());
    }
  }
  std::vector<double> log_w(static_cast<std::size_t>(L));
  for (int l = 0; l < L; ++l) {
    const double w = state_.weights[l];
    log_w[static_cast<std::size_t>(l)] = w > 0.0 ? std::log(w) : kNegInf;
  }
  std::vector<double> lp(static_cast<std::size_t>(L)), ld(static_cast<std::size_t>(L));
  for (int j = 0; j < data_->m(); ++j) {
    const Vector d = data_->D.row(j).transpose();
    double top = kNegInf;
    for (std::size_t l = 0; l < lp.size(); ++l) {
      ld[l] = comps[l].log_pdf(d);
      lp[l] = log_w[l] + ld[l];
      top = std::max(top, lp[l]);
    }
    if (!std::isfinite(top)) {
      ++state_.underflow_count;
      state_.alloc[static_cast<std::size_t>(j)] =
          static_cast<int>(std::max_element(ld.begin(), ld.end()) - ld.begin());
      continue;
    }
    state_.alloc[static_cast<std::size_t>(j)] = sample_categorical_log(rng_, lp);
  }
}

Matrix Part2Sampler::centred_data() const {
  if (data_->m() == 0) return data_->D;
  const Vector centre = data_->D.colwise().mean().transpose();
  return data_->D.rowwise() - centre.transpose();
}

std::vector<double> Part2Sampler::collapsed_log_weights(int j) const {
  if (j < 0 || j >= data_->m()) throw std::out_of_range("collapsed_log_weights: unit index");
  const int L = state_.L();
  const int k = static_cast<int>(hyper_->m2.size());
  const Matrix C = centred_data();
  const Vector centre = data_->D.colwise().mean().transpose();
  std::vector<ComponentStats> st(static_cast<std::size_t>(L),
                                 ComponentStats{0, Vector::Zero(k), Matrix::Zero(k, k)});
  for (int i = 0; i < data_->m(); ++i) {
    if (i == j) continue;
    auto& s = st[static_cast<std::size_t>(state_.alloc[static_cast<std::size_t>(i)])];
    const Vector c = C.row(i).transpose();
    ++s.n;
    s.sum += c;
    s.outer += c * c.transpose();
  }
  const NiwParams prior{state_.m1 - centre, state_.k0, hyper_->nu1, state_.Psi1};
  const Vector x = C.row(j).transpose();
  std::vector<double> lp(static_cast<std::size_t>(L));
  for (int l = 0; l < L; ++l) {
    const double w = state_.weights[l];
    lp[static_cast<std::size_t>(l)] =
        w > 0.0 ? std::log(w) + niw_predictive(prior, st[static_cast<std::size_t>(l)]).log_pdf(x)
                : kNegInf;
  }
  return lp;
}

void Part2Sampler::update_allocations_collapsed() {
  const int L = state_.L();
  const int m = data_->m();
  if (m == 0) return;
  const int k = static_cast<int>(hyper_->m2.size());
  const Matrix C = centred_data();
  const Vector centre = data_->D.colwise().mean().transpose();
  const NiwParams prior{state_.m1 - centre, state_.k0, hyper_->nu1, state_.Psi1};

  std::vector<ComponentStats> st(static_cast<std::size_t>(L),
                                 ComponentStats{0, Vector::Zero(k), Matrix::Zero(k, k)});
  for (int i = 0; i < m; ++i) {
    auto& s = st[static_cast<std::size_t>(state_.alloc[static_cast<std::size_t>(i)])];
    const Vector c = C.row(i).transpose();
    ++s.n;
    s.sum += c;
    s.outer += c * c.transpose();
  }
  std::vector<double> log_w(static_cast<std::size_t>(L));
  for (int l = 0; l < L; ++l) {
    const double w = state_.weights[l];
    log_w[static_cast<std::size_t>(l)] = w > 0.0 ? std::log(w) : kNegInf;
  }
  // Empty components share the prior predictive.
  StudentT empty;
  std::vector<StudentT> pred(static_cast<std::size_t>(L));
  std::vector<bool> fresh(static_cast<std::size_t>(L), false);
  try {
    empty = niw_predictive(prior, ComponentStats{0, Vector::Zero(k), Matrix::Zero(k, k)});
    for (int l = 0; l < L; ++l) {
      const auto ul = static_cast<std::size_t>(l);
      if (st[ul].n > 0) {
        pred[ul] = niw_predictive(prior, st[ul]);
        fresh[ul] = true;
      }
    }
  } catch (const DomainError& e) {
    throw SamplerError(std::string("collapsed allocation: ") + e.what());
  }

  auto refresh = [&](std::size_t l) {
    fresh[l] = st[l].n > 0;
    if (fresh[l]) pred[l] = niw_predictive(prior, st[l]);
  };
  std::vector<double> lp(static_cast<std::size_t>(L));
  for (int j = 0; j < m; ++j) {
    const Vector x = C.row(j).transpose();
    const auto old = static_cast<std::size_t>(state_.alloc[static_cast<std::size_t>(j)]);
    try {
      --st[old].n;
      st[old].sum -= x;
      st[old].outer -= x * x.transpose();
      refresh(old);
      for (std::size_t l = 0; l < lp.size(); ++l) {
        lp[l] = log_w[l] + (fresh[l] ? pred[l] : empty).log_pdf(x);
      }
      const auto now = static_cast<std::size_t>(sample_categorical_log(rng_, lp));
      state_.alloc[static_cast<std::size_t>(j)] = static_cast<int>(now);
      ++st[now].n;
      st[now].sum += x;
      st[now].outer += x * x.transpose();
      refresh(now);
    } catch (const DomainError& e) {
      throw SamplerError(std::string("collapsed allocation: ") + e.what());
    }
  }
}

void Part2Sampler::update_atoms() {
  const int L = state_.L();
  const int k = static_cast<int>(hyper_->m2.size());
  std::vector<int> n(static_cast<std::size_t>(L), 0);
  std::vector<Vector> sum(static_cast<std::size_t>(L), Vector::Zero(k));
  for (int j = 0; j < data_->m(); ++j) {
    const auto l = static_cast<std::size_t>(state_.alloc[static_cast<std::size_t>(j)]);
    ++n[l];
    sum[l] += data_->D.row(j).transpose();
  }
  std::vector<Matrix> scatter(static_cast<std::size_t>(L), Matrix::Zero(k, k));
  for (int j = 0; j < data_->m(); ++j) {
    const auto l = static_cast<std::size_t>(state_.alloc[static_cast<std::size_t>(j)]);
    const Vector c = data_->D.row(j).transpose() - sum[l] / n[l];
    scatter[l] += c * c.transpose();
  }
  const NiwParams prior{state_.m1, state_.k0, hyper_->nu1, state_.Psi1};
  for (int l = 0; l < L; ++l) {
    const auto ul = static_cast<std::size_t>(l);
    const Vector mean = n[ul] > 0 ? Vector(sum[ul] / n[ul]) : Vector::Zero(k);
    try {
      const NiwParams post = niw_posterior(prior, n[ul], mean, scatter[ul]);
      const NormalCovariance draw = sample_niw(rng_, post);
      state_.atoms[ul] = Atom{draw.mu, draw.Sigma};
    } catch (const DomainError& e) {
      throw SamplerError("component " + std::to_string(l) + ": " + e.what());
    }
  }
}

void Part2Sampler::update_sticks_and_alpha2() {
  const int L = state_.L();
  const auto n = state_.counts();
  std::vector<double> v(static_cast<std::size_t>(L - 1));
  int tail = data_->m();
  double log_remaining = 0.0;
  for (int l = 0; l < L - 1; ++l) {
    const int nl = n[static_cast<std::size_t>(l)];
    tail -= nl;
    double vl = sample_beta(rng_, 1.0 + nl, state_.alpha2 + tail);
    vl = std::clamp(vl, std::numeric_limits<double>::min(), 1.0 - 1e-12);
    v[static_cast<std::size_t>(l)] = vl;
    log_remaining += std::log1p(-vl);
  }
  const auto w = stick_breaking(v);
  state_.sticks = Eigen::Map<const Vector>(v.data(), L - 1);
  state_.weights = Eigen::Map<const Vector>(w.data(), L);
  state_.alpha2 = sample_gamma(rng_, hyper_->a2_0 + L - 1, hyper_->b2_0 - log_remaining);
}

void Part2Sampler::update_alpha2_collapsed() {
  const int L = state_.L();
  const auto n = state_.counts();
  // log p(alpha | counts) with every stick integrated out.
  auto log_target = [&](double log_a) {
    const double a = std::exp(log_a);
    double s = hyper_->a2_0 * log_a - hyper_->b2_0 * a;  // includes the log-scale Jacobian
    int tail = data_->m();
    for (int l = 0; l < L - 1; ++l) {
      tail -= n[static_cast<std::size_t>(l)];
      s += log_a + std::lgamma(a + tail) - std::lgamma(1.0 + n[static_cast<std::size_t>(l)] + a + tail);
    }
    return s;
  };
  double log_a = std::log(state_.alpha2);
  double current = log_target(log_a);
  for (int step = 0; step < 5; ++step) {
    const double proposal = log_a + 0.5 * sample_standard_normal(rng_);
    const double value = log_target(proposal);
    if (std::log(rng_.uniform()) < value - current) {
      log_a = proposal;
      current = value;
    }
  }
  state_.alpha2 = std::exp(log_a);
}

void Part2Sampler::update_label_switch() {
  const int L = state_.L();
  if (L < 2) return;
  auto n = state_.counts();
  std::vector<int> perm(static_cast<std::size_t>(L));  // new label -> old label
  std::iota(perm.begin(), perm.end(), 0);
  auto swap_labels = [&](int a, int b) {
    std::swap(state_.atoms[static_cast<std::size_t>(a)], state_.atoms[static_cast<std::size_t>(b)]);
    std::swap(n[static_cast<std::size_t>(a)], n[static_cast<std::size_t>(b)]);
    std::swap(perm[static_cast<std::size_t>(a)], perm[static_cast<std::size_t>(b)]);
  };

  // Two occupied components trade atoms and members; weights stay put.
  std::vector<int> occupied;
  for (int l = 0; l < L; ++l) {
    if (n[static_cast<std::size_t>(l)] > 0) occupied.push_back(l);
  }
  if (occupied.size() >= 2) {
    const auto d = static_cast<std::uint64_t>(occupied.size());
    const int a = occupied[static_cast<std::size_t>(rng_() % d)];
    int b = occupied[static_cast<std::size_t>(rng_() % (d - 1))];
    if (b == a) b = occupied.back();
    const double log_ratio =
        (n[static_cast<std::size_t>(a)] - n[static_cast<std::size_t>(b)]) *
        (std::log(state_.weights[b]) - std::log(state_.weights[a]));
    if (std::log(rng_.uniform()) < log_ratio) swap_labels(a, b);
  }

  // Adjacent components trade places together with their sticks.
  if (L >= 3) {
    const auto pairs = static_cast<std::uint64_t>(L - 2);
    for (int rep = 0; rep < L - 2; ++rep) {
      const int j = static_cast<int>(rng_() % pairs);
      const double vj = state_.sticks[j], vk = state_.sticks[j + 1];
      const double log_ratio = n[static_cast<std::size_t>(j)] * std::log1p(-vk) -
                               n[static_cast<std::size_t>(j + 1)] * std::log1p(-vj);
      if (std::log(rng_.uniform()) < log_ratio) {
        swap_labels(j, j + 1);
        std::swap(state_.sticks[j], state_.sticks[j + 1]);
      }
    }
    std::vector<double> v(state_.sticks.data(), state_.sticks.data() + state_.sticks.size());
    const auto w = stick_breaking(v);
    state_.weights = Eigen::Map<const Vector>(w.data(), L);
  }

  std::vector<int> inverse(static_cast<std::size_t>(L));
  for (int l = 0; l < L; ++l) inverse[static_cast<std::size_t>(perm[static_cast<std::size_t>(l)])] = l;
  for (auto& a : state_.alloc) a = inverse[static_cast<std::size_t>(a)];
}

void Part2Sampler::update_baseline() {
  const int k = static_cast<int>(hyper_->m2.size());
  const auto n = state_.counts();
  std::vector<std::size_t> occupied;
  for (std::size_t l = 0; l < n.size(); ++l) {
    if (n[l] > 0) occupied.push_back(l);
  }
  const double d = static_cast<double>(occupied.size());
  std::vector<Matrix> prec;
  prec.reserve(occupied.size());
  Matrix prec_sum = Matrix::Zero(k, k);
  Vector prec_mu_sum = Vector::Zero(k);
  for (std::size_t l : occupied) {
    try {
      prec.push_back(spd_inverse(state_.atoms[l].Sigma, "Sigma_" + std::to_string(l)));
    } catch (const DomainError& e) {
      throw SamplerError(e.what());
    }
    prec_sum += prec.back();
    prec_mu_sum += prec.back() * state_.atoms[l].mu;
  }

  // m1 | Sigma's, mu's, k0
  const Matrix post_prec = S2_inv_ + state_.k0 * prec_sum;
  const Matrix post_cov = spd_inverse(post_prec, "m1 posterior precision");
  const Vector post_mean = post_cov * (S2_inv_ * hyper_->m2 + state_.k0 * prec_mu_sum);
  state_.m1 = MvNormal(post_mean, post_cov).sample(rng_);

  // k0 | mu's, Sigma's, m1
  double quad = 0.0;
  for (std::size_t i = 0; i < occupied.size(); ++i) {
    const Vector dev = state_.atoms[occupied[i]].mu - state_.m1;
    quad += dev.dot(prec[i] * dev);
  }
  state_.k0 = sample_gamma(rng_, 0.5 * (hyper_->tau1 + d * k), 0.5 * (hyper_->tau2 + quad));

  // Psi1 | Sigma's
  const Matrix scale = spd_inverse(Psi2_inv_ + prec_sum, "Psi1 posterior scale");
  state_.Psi1 = sample_wishart(rng_, hyper_->nu2 + d * hyper_->nu1, scale);
}

void Part2Sampler::sweep() {
  update_allocations();
  update_allocations_collapsed();
  update_atoms();
  update_baseline();
  update_atoms();
  update_alpha2_collapsed();
  update_sticks_and_alpha2();
  update_label_switch();
#ifndef NDEBUG
  std::string why;
  if (!check_invariants(&why)) throw SamplerError("part 2 invariant violated: " + why);
#endif
}

Part2Draw Part2Sampler::snapshot() const {
  Part2Draw d;
  d.weights = state_.weights;
  d.atoms = state_.atoms;
  d.alpha2 = state_.alpha2;
  d.m1 = state_.m1;
  d.k0 = state_.k0;
  d.Psi1 = state_.Psi1;
  d.occupied = state_.occupied();
  return d;
}

bool Part2Sampler::check_invariants(std::string* why) const {
  auto fail = [&](const std::string& msg) {
    if (why) *why = msg;
    return false;
  };
  const int L = state_.L();
  if (state_.weights.size() != L || state_.sticks.size() != L - 1) {
    return fail("weight/stick sizes do not match L");
  }
  if ((state_.weights.array() < 0.0).any()) return fail("negative weight");
  if (std::fabs(state_.weights.sum() - 1.0) > 1e-12) return fail("weights off the simplex");
  if (static_cast<int>(state_.alloc.size()) != data_->m()) return fail("allocation size");
  for (int a : state_.alloc) {
    if (a < 0 || a >= L) return fail("label out of range");
  }
  for (int l = 0; l < L; ++l) {
    if (!is_spd(state_.atoms[static_cast<std::size_t>(l)].Sigma)) {
      return fail("Sigma_" + std::to_string(l) + " not SPD");
    }
  }
  if (!(state_.alpha2 > 0.0) || !(state_.k0 > 0.0) || !is_spd(state_.Psi1)) {
    return fail("baseline or precision out of range");
  }
  return true;
}

}  // namespace twopart
