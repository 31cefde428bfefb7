#include "twopart/simulate.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <numeric>
#include <sstream>

#include "twopart/config.hpp"
#include "twopart/distributions.hpp"
#include "twopart/errors.hpp"

namespace twopart {

namespace {

double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

// Regime weights at x, proportional to weight_e N_p(x | center_e, spread_e).
std::vector<double> regime_weights(const GeneratorSpec& spec, const Vector& x) {
  std::vector<double> lw;
  for (const auto& e : spec.experts) {
    double l = std::log(e.weight);
    for (Eigen::Index j = 0; j < x.size(); ++j) {
      l += normal_log_pdf(x[j], e.center[j], e.spread[j] * e.spread[j]);
    }
    lw.push_back(l);
  }
  return softmax(lw);
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  return s.substr(b, s.find_last_not_of(" \t\r") - b + 1);
}

// "[a, b]" -> values; "[[a], [b]]" -> rows.
std::vector<std::vector<double>> parse_rows(const std::string& text) {
  std::vector<std::vector<double>> rows;
  std::string body = trim(text);
  if (body.size() < 2 || body.front() != '[' || body.back() != ']') {
    throw ConfigError("expected a bracketed list: " + text);
  }
  body = body.substr(1, body.size() - 2);
  const bool nested = body.find('[') != std::string::npos;
  if (!nested) {
    std::vector<double> row;
    std::istringstream in(body);
    std::string tok;
    while (std::getline(in, tok, ',')) {
      if (!trim(tok).empty()) row.push_back(parse_real(trim(tok)));
    }
    for (double v : row) rows.push_back({v});
    return rows;
  }
  std::size_t pos = 0;
  while ((pos = body.find('[', pos)) != std::string::npos) {
    const auto end = body.find(']', pos);
    if (end == std::string::npos) throw ConfigError("unterminated row: " + text);
    std::vector<double> row;
    std::istringstream in(body.substr(pos + 1, end - pos - 1));
    std::string tok;
    while (std::getline(in, tok, ',')) {
      if (!trim(tok).empty()) row.push_back(parse_real(trim(tok)));
    }
    rows.push_back(row);
    pos = end + 1;
  }
  return rows;
}

Vector row_vector(const std::vector<double>& v) {
  return Eigen::Map<const Vector>(v.data(), static_cast<Eigen::Index>(v.size()));
}

}  // namespace

void GeneratorSpec::validate() const {
  std::vector<std::string> bad;
  if (n < 1) bad.push_back("n: must be >= 1");
  if (r() < 1) bad.push_back("occurrence_beta: needs at least the intercept");
  if (!(w_sd > 0.0)) bad.push_back("w_sd: must be > 0");
  if (experts.empty()) bad.push_back("experts: need at least one");
  for (std::size_t e = 0; e < experts.size(); ++e) {
    const auto& ex = experts[e];
    const std::string tag = "expert " + std::to_string(e) + ": ";
    if (!(ex.weight > 0.0)) bad.push_back(tag + "weight must be > 0");
    if (ex.center.size() != p() || ex.spread.size() != p() || ex.slope.size() != p()) {
      bad.push_back(tag + "center, spread and slope must all have length p");
    } else if (!((ex.spread.array() > 0.0).all())) {
      bad.push_back(tag + "spread must be > 0");
    }
    if (!(ex.noise >= 0.0)) bad.push_back(tag + "noise must be >= 0");
  }
  if (p() < 1) bad.push_back("experts: need p >= 1 covariates");
  if (areas < 0) bad.push_back("areas: must be >= 0");
  if (!(in_sample_fraction >= 0.0 && in_sample_fraction <= 1.0)) {
    bad.push_back("in_sample_fraction: must lie in [0, 1]");
  }
  if (!bad.empty()) throw ConfigError(bad);
}

GeneratorSpec default_generator_spec() {
  GeneratorSpec s;
  s.occurrence_beta = Vector(3);
  s.occurrence_beta << -1.2, 3.5, 2.5;
  GeneratorExpert a;
  a.weight = 0.5;
  a.center = Vector::Constant(1, 2.0);
  a.spread = Vector::Constant(1, 1.0);
  a.intercept = 5.0;
  a.slope = Vector::Constant(1, 1.0);
  a.noise = 0.5;
  GeneratorExpert b;
  b.weight = 0.5;
  b.center = Vector::Constant(1, 7.0);
  b.spread = Vector::Constant(1, 1.0);
  b.intercept = 20.0;
  b.slope = Vector::Constant(1, -1.0);
  b.noise = 0.5;
  s.experts = {a, b};
  return s;
}

double true_link(LinkKind link, double t) {
  if (link == LinkKind::kLogistic) return logistic_cdf(t);
  return 0.75 * logistic_cdf((t + 0.6) / 0.7) + 0.25 * logistic_cdf((t - 1.8) / 1.5);
}

double true_occurrence_probability(const GeneratorSpec& spec, const Vector& w) {
  return true_link(spec.link, w.dot(spec.occurrence_beta));
}

double true_conditional_mean(const GeneratorSpec& spec, const Vector& x) {
  const auto w = regime_weights(spec, x);
  double num = 0.0, den = 0.0;
  for (std::size_t e = 0; e < w.size(); ++e) {
    const auto& ex = spec.experts[e];
    const double mu = ex.intercept + x.dot(ex.slope);
    if (ex.noise == 0.0) {
      if (mu > 0.0) {
        num += w[e] * mu;
        den += w[e];
      }
      continue;
    }
    const double a = mu / ex.noise;
    const double mass = normal_cdf(a);
    const double pdf = std::exp(-0.5 * a * a) / std::sqrt(2.0 * M_PI);
    num += w[e] * (mass * mu + ex.noise * pdf);
    den += w[e] * mass;
  }
  return num / den;
}

double true_conditional_density(const GeneratorSpec& spec, double z, const Vector& x) {
  if (!(z > 0.0)) return 0.0;
  const auto w = regime_weights(spec, x);
  double num = 0.0, den = 0.0;
  for (std::size_t e = 0; e < w.size(); ++e) {
    const auto& ex = spec.experts[e];
    if (!(ex.noise > 0.0)) throw DomainError("true_conditional_density: zero noise");
    const double mu = ex.intercept + x.dot(ex.slope);
    num += w[e] * std::exp(normal_log_pdf(z, mu, ex.noise * ex.noise));
    den += w[e] * normal_cdf(mu / ex.noise);
  }
  return num / den;
}

SimulationResult simulate(const GeneratorSpec& spec) {
  spec.validate();
  RngStream rng(spec.seed, 0);
  const int n = spec.n, r = spec.r(), p = spec.p();
  SimulationResult res;
  auto& ds = res.data;
  ds.y.resize(n);
  ds.W.resize(n, r);
  ds.X.resize(n, p);
  for (int j = 0; j < r; ++j) ds.w_names.push_back("w_" + std::to_string(j));
  for (int j = 1; j <= p; ++j) ds.x_names.push_back("x_" + std::to_string(j));

  std::vector<double> cumulative;
  double total = 0.0;
  for (const auto& e : spec.experts) cumulative.push_back(total += e.weight);

  for (int i = 0; i < n; ++i) {
    ds.ids.push_back("u" + std::to_string(i + 1));
    ds.W(i, 0) = 1.0;
    for (int j = 1; j < r; ++j) ds.W(i, j) = sample_normal(rng, 0.0, spec.w_sd);
    const double prob = true_occurrence_probability(spec, ds.W.row(i).transpose());
    const bool positive = rng.uniform() < prob;

    const double u = rng.uniform() * total;
    std::size_t e = 0;
    while (e + 1 < cumulative.size() && u >= cumulative[e]) ++e;
    const auto& ex = spec.experts[e];
    for (int j = 0; j < p; ++j) ds.X(i, j) = sample_normal(rng, ex.center[j], ex.spread[j]);
    const double mu = ex.intercept + ds.X.row(i).dot(ex.slope);
    double z = mu;
    if (ex.noise > 0.0) {
      int tries = 0;
      do {
        if (++tries > 10000) throw DomainError("simulate: expert puts no mass on z > 0");
        z = sample_normal(rng, mu, ex.noise);
      } while (!(z > 0.0));
    } else if (!(z > 0.0)) {
      throw DomainError("simulate: noiseless expert yields z <= 0");
    }
    ds.y[i] = positive ? z : 0.0;
    res.p_true.push_back(prob);
    res.mean_true.push_back(true_conditional_mean(spec, ds.X.row(i).transpose()));
  }

  if (spec.areas > 0) {
    ds.areas.emplace();
    for (int i = 0; i < n; ++i) {
      ds.areas->push_back("A" + std::to_string(rng() % static_cast<std::uint64_t>(spec.areas)));
    }
  }
  if (spec.in_sample_fraction > 0.0) {
    std::vector<int> order(static_cast<std::size_t>(n));
    std::iota(order.begin(), order.end(), 0);
    for (int i = n - 1; i > 0; --i) {
      const auto j = static_cast<int>(rng() % static_cast<std::uint64_t>(i + 1));
      std::swap(order[static_cast<std::size_t>(i)], order[static_cast<std::size_t>(j)]);
    }
    const auto keep = static_cast<int>(std::lround(spec.in_sample_fraction * n));
    ds.in_sample.emplace(static_cast<std::size_t>(n), 0);
    for (int i = 0; i < keep; ++i) (*ds.in_sample)[static_cast<std::size_t>(order[static_cast<std::size_t>(i)])] = 1;
  }

  // Density truth at probe x values: quantiles of the first covariate, the
  // others held at their sample means.
  const bool noisy = std::all_of(spec.experts.begin(), spec.experts.end(),
                                 [](const GeneratorExpert& e) { return e.noise > 0.0; });
  if (noisy && spec.truth_probes > 0) {
    std::vector<double> x1(ds.X.col(0).data(), ds.X.col(0).data() + n);
    std::sort(x1.begin(), x1.end());
    const Vector xbar = ds.X.colwise().mean().transpose();
    double zmax = 0.0;
    for (const auto& ex : spec.experts) {
      zmax = std::max(zmax, std::fabs(ex.intercept) + ex.slope.cwiseAbs().sum() * 20.0);
    }
    zmax = std::max(zmax, ds.y.maxCoeff() * 1.2);
    for (int q = 0; q < spec.truth_probes; ++q) {
      const double frac = (q + 1.0) / (spec.truth_probes + 1.0);
      Vector x = xbar;
      x[0] = x1[static_cast<std::size_t>(frac * (n - 1))];
      for (int g = 0; g < spec.truth_grid_points; ++g) {
        const double z = zmax * (g + 1.0) / spec.truth_grid_points;
        res.density_grid.push_back({q, x, z, true_conditional_density(spec, z, x)});
      }
    }
  }
  return res;
}

void write_truth(const std::filesystem::path& units_path, const std::filesystem::path& grid_path,
                 const SimulationResult& result) {
  std::ofstream units(units_path);
  if (!units) throw DataError("cannot write '" + units_path.string() + "'");
  units << "id,p_true,mean_true\n";
  for (int i = 0; i < result.data.n(); ++i) {
    units << result.data.ids[static_cast<std::size_t>(i)] << ','
          << format_real(result.p_true[static_cast<std::size_t>(i)]) << ','
          << format_real(result.mean_true[static_cast<std::size_t>(i)]) << '\n';
  }
  std::ofstream grid(grid_path);
  if (!grid) throw DataError("cannot write '" + grid_path.string() + "'");
  grid << "probe";
  for (int j = 1; j <= result.data.p(); ++j) grid << ",x_" << j;
  grid << ",z,density\n";
  for (const auto& row : result.density_grid) {
    grid << row.probe;
    for (Eigen::Index j = 0; j < row.x.size(); ++j) grid << ',' << format_real(row.x[j]);
    grid << ',' << format_real(row.z) << ',' << format_real(row.density) << '\n';
  }
}

GeneratorSpec parse_generator_spec(const std::string& text, const GeneratorSpec& base) {
  GeneratorSpec s = base;
  std::map<std::string, std::vector<std::vector<double>>> expert_fields;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    const std::string body = trim(hash == std::string::npos ? line : line.substr(0, hash));
    if (body.empty()) continue;
    const auto eq = body.find('=');
    if (eq == std::string::npos) {
      throw ConfigError("generator line " + std::to_string(lineno) + ": expected 'key = value'");
    }
    const std::string key = trim(body.substr(0, eq));
    const std::string value = trim(body.substr(eq + 1));
    try {
      if (key == "n") {
        s.n = static_cast<int>(parse_real(value));
      } else if (key == "seed") {
        s.seed = std::stoull(value);
      } else if (key == "link") {
        if (value == "logistic") {
          s.link = LinkKind::kLogistic;
        } else if (value == "skewed-mixture") {
          s.link = LinkKind::kSkewedMixture;
        } else {
          throw ConfigError("link must be logistic or skewed-mixture");
        }
      } else if (key == "w_sd") {
        s.w_sd = parse_real(value);
      } else if (key == "areas") {
        s.areas = static_cast<int>(parse_real(value));
      } else if (key == "in_sample_fraction") {
        s.in_sample_fraction = parse_real(value);
      } else if (key == "occurrence_beta") {
        const auto rows = parse_rows(value);
        s.occurrence_beta.resize(static_cast<Eigen::Index>(rows.size()));
        for (std::size_t j = 0; j < rows.size(); ++j) {
          s.occurrence_beta[static_cast<Eigen::Index>(j)] = rows[j].at(0);
        }
      } else if (key.rfind("expert_", 0) == 0) {
        expert_fields[key] = parse_rows(value);
      } else {
        throw ConfigError("unknown generator key '" + key + "'");
      }
    } catch (const std::invalid_argument& e) {
      throw ConfigError("generator line " + std::to_string(lineno) + ": " + e.what());
    }
  }
  if (!expert_fields.empty()) {
    std::size_t count = 0;
    for (const auto& [k, rows] : expert_fields) count = std::max(count, rows.size());
    s.experts.assign(count, GeneratorExpert{});
    for (const auto& [key, rows] : expert_fields) {
      if (rows.size() != count) throw ConfigError(key + ": expected " + std::to_string(count) + " experts");
      for (std::size_t e = 0; e < count; ++e) {
        auto& ex = s.experts[e];
        if (key == "expert_weight") {
          ex.weight = rows[e].at(0);
        } else if (key == "expert_intercept") {
          ex.intercept = rows[e].at(0);
        } else if (key == "expert_noise") {
          ex.noise = rows[e].at(0);
        } else if (key == "expert_center") {
          ex.center = row_vector(rows[e]);
        } else if (key == "expert_spread") {
          ex.spread = row_vector(rows[e]);
        } else if (key == "expert_slope") {
          ex.slope = row_vector(rows[e]);
        } else {
          throw ConfigError("unknown generator key '" + key + "'");
        }
      }
    }
  }
  return s;
}

}  // namespace twopart
