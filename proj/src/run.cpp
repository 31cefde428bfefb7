#include "twopart/run.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <future>
#include <map>
#include <numeric>
#include <set>
#include <sstream>

#include "twopart/distributions.hpp"
#include "twopart/errors.hpp"

namespace twopart {

namespace fs = std::filesystem;

namespace {

constexpr std::uint64_t kSplitStream = 1ULL << 32;

std::string header_comment(const Config& c) {
  return "# seed=" + std::to_string(c.schedule.seed) + " config_hash=" + config_hash(c) + "\n";
}

std::ofstream open_out(const fs::path& path) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write '" + path.string() + "'");
  return out;
}

std::string read_text(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot read '" + path.string() + "'");
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

std::vector<std::string> split_commas(const std::string& line) {
  std::vector<std::string> out;
  std::string field;
  std::istringstream in(line);
  while (std::getline(in, field, ',')) out.push_back(field);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

// A run-directory table: header names and string rows.
struct Table {
  fs::path path;
  std::map<std::string, std::size_t> column;
  std::vector<std::vector<std::string>> rows;

  std::size_t at(const std::string& name) const {
    const auto it = column.find(name);
    if (it == column.end()) throw DataError(path.string() + ": missing column '" + name + "'");
    return it->second;
  }
  double real(std::size_t row, const std::string& name) const {
    return parse_real(rows[row][at(name)]);
  }
  long long integer(std::size_t row, const std::string& name) const {
    return std::stoll(rows[row][at(name)]);
  }
};

Table read_table(const fs::path& path) {
  Table t{path, {}, {}};
  std::istringstream in(read_text(path));
  std::string line;
  bool header = true;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    auto fields = split_commas(line);
    if (header) {
      for (std::size_t j = 0; j < fields.size(); ++j) t.column[fields[j]] = j;
      header = false;
      continue;
    }
    if (fields.size() != t.column.size()) {
      throw DataError(path.string() + ": row with " + std::to_string(fields.size()) +
                      " fields, expected " + std::to_string(t.column.size()));
    }
    t.rows.push_back(std::move(fields));
  }
  if (header) throw DataError(path.string() + ": no header line");
  return t;
}

std::string join(const std::vector<std::string>& parts, char sep) {
  std::string s;
  for (std::size_t i = 0; i < parts.size(); ++i) {
    if (i) s += sep;
    s += parts[i];
  }
  return s;
}

std::string coordinate(int j) { return j == 0 ? "z" : "x" + std::to_string(j); }

template <class T>
std::vector<T> flatten(const std::vector<std::vector<T>>& chains) {
  std::vector<T> all;
  for (const auto& c : chains) all.insert(all.end(), c.begin(), c.end());
  return all;
}

std::string wrap(const char* part, int chain, std::int64_t iteration, const std::exception& e) {
  return std::string(part) + ", chain " + std::to_string(chain) + ", iteration " +
         std::to_string(iteration) + ": " + e.what();
}

Part1Chain run_part1_chain(const Part1Data& data, const Config& config, int c) {
  const auto& s = config.schedule;
  Part1Chain out;
  std::optional<Part1Sampler> sampler;
  try {
    sampler.emplace(data, config.part1, RngStream(s.seed, 2 * static_cast<std::uint64_t>(c)));
  } catch (const DataError&) {
    throw;
  } catch (const std::exception& e) {
    throw SamplerError(wrap("part 1", c, 0, e));
  }
  const std::int64_t total = s.total_iterations();
  for (std::int64_t t = 1; t <= total; ++t) {
    const bool burning = t <= s.burn_in;
    try {
      sampler->sweep(burning);
    } catch (const std::exception& e) {
      throw SamplerError(wrap("part 1", c, t, e));
    }
    const bool stored = !burning && (t - s.burn_in) % s.thin == 0;
    if (stored || t % s.thin == 0) {
      const auto& st = sampler->state();
      out.trace.push_back({t, stored, st.alpha1, st.clusters(), st.acceptance_rate(),
                           st.mh_scale, st.beta1});
    }
    if (stored) {
      out.draws.push_back(sampler->snapshot());
      if (config.dump_state) out.latent.push_back(sampler->state().V);
    }
  }
  out.warnings = sampler->warnings();
  out.acceptance_rate = sampler->state().acceptance_rate();
  out.final_mh_scale = sampler->state().mh_scale;
  return out;
}

Part2Chain run_part2_chain(const Part2Data& data, const Config& config, int c) {
  const auto& s = config.schedule;
  Part2Chain out;
  std::optional<Part2Sampler> sampler;
  try {
    sampler.emplace(data, config.part2,
                    RngStream(s.seed, 2 * static_cast<std::uint64_t>(c) + 1));
  } catch (const DataError&) {
    throw;
  } catch (const std::exception& e) {
    throw SamplerError(wrap("part 2", c, 0, e));
  }
  const std::int64_t total = s.total_iterations();
  for (std::int64_t t = 1; t <= total; ++t) {
    const bool burning = t <= s.burn_in;
    try {
      sampler->sweep();
    } catch (const std::exception& e) {
      throw SamplerError(wrap("part 2", c, t, e));
    }
    const bool stored = !burning && (t - s.burn_in) % s.thin == 0;
    if (stored || t % s.thin == 0) {
      const auto& st = sampler->state();
      out.trace.push_back({t, stored, st.alpha2, st.occupied(), st.k0, st.m1, st.Psi1});
    }
    if (stored) out.draws.push_back(sampler->snapshot());
  }
  out.underflow_count = sampler->state().underflow_count;
  return out;
}

template <class Chain, class Fn>
std::vector<Chain> run_chains(int chains, Fn fn) {
  std::vector<std::future<Chain>> futures;
  for (int c = 0; c < chains; ++c) futures.push_back(std::async(std::launch::async, fn, c));
  std::vector<Chain> out;
  for (auto& f : futures) out.push_back(f.get());
  return out;
}

std::vector<double> linspace(double lo, double hi, int n) {
  std::vector<double> g(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    g[static_cast<std::size_t>(i)] = n == 1 ? lo : lo + (hi - lo) * i / (n - 1);
  }
  return g;
}

void write_classification(const fs::path& path, const Config& config,
                          const ConfusionSummary& s) {
  auto out = open_out(path);
  out << header_comment(config) << "outcome,proportion\n";
  out << "zero_predicted_zero," << format_real(s.zero_correct) << '\n';
  out << "zero_predicted_positive," << format_real(s.zero_wrong) << '\n';
  out << "positive_predicted_positive," << format_real(s.positive_correct) << '\n';
  out << "positive_predicted_zero," << format_real(s.positive_wrong) << '\n';
  out << "accuracy," << format_real(s.accuracy) << '\n';
  out << "cutoff," << format_real(s.cutoff) << '\n';
  out << "units," << s.units << '\n';
}

void write_diagnostics(const fs::path& out, const Config& config,
                       const std::vector<TraceMatrix>& traces, const std::vector<PsrfRow>* psrf) {
  std::vector<std::string> names;
  for (const auto& name : monitored_parameters(config.r(), config.k())) {
    if (std::any_of(traces.begin(), traces.end(),
                    [&](const TraceMatrix& t) { return t.name == name; })) {
      names.push_back(name);
    }
  }
  const auto table = posterior_table(traces, names);
  auto t = open_out(out / "posterior_table.csv");
  t << header_comment(config) << "parameter,mean,lo_2.5,hi_97.5\n";
  for (const auto& row : table) {
    t << row.name << ',' << format_real(row.mean) << ',' << format_real(row.lo) << ','
      << format_real(row.hi) << '\n';
  }
  if (psrf) {
    auto p = open_out(out / "psrf.csv");
    p << header_comment(config) << "parameter,psrf,pass\n";
    for (const auto& row : *psrf) {
      p << row.name << ',' << format_real(row.psrf) << ',' << (row.pass ? "pass" : "fail") << '\n';
    }
  }
}

bool psrf_possible(const std::vector<TraceMatrix>& traces) {
  if (traces.empty()) return false;
  for (const auto& t : traces) {
    if (t.chains.size() < 2) return false;
    for (const auto& c : t.chains) {
      if (c.size() < 10) return false;
    }
  }
  return true;
}

}  // namespace

std::vector<Part1Chain> sample_part1(const Part1Data& data, const Config& config) {
  data.validate();
  return run_chains<Part1Chain>(config.schedule.chains,
                                [&](int c) { return run_part1_chain(data, config, c); });
}

std::vector<Part2Chain> sample_part2(const Part2Data& data, const Config& config) {
  data.validate(config.part2.log_z);
  return run_chains<Part2Chain>(config.schedule.chains,
                                [&](int c) { return run_part2_chain(data, config, c); });
}

std::vector<std::vector<Part1Draw>> draws_of(const std::vector<Part1Chain>& chains) {
  std::vector<std::vector<Part1Draw>> out;
  for (const auto& c : chains) out.push_back(c.draws);
  return out;
}

std::vector<std::vector<Part2Draw>> draws_of(const std::vector<Part2Chain>& chains) {
  std::vector<std::vector<Part2Draw>> out;
  for (const auto& c : chains) out.push_back(c.draws);
  return out;
}

std::vector<double> p_positive_means(const std::vector<std::vector<Part1Draw>>& draws,
                                     const Matrix& W) {
  const auto all = flatten(draws);
  std::vector<double> p(static_cast<std::size_t>(W.rows()));
  for (Eigen::Index i = 0; i < W.rows(); ++i) {
    p[static_cast<std::size_t>(i)] = expected_delta(all, W.row(i).transpose()).mean;
  }
  return p;
}

Config resolve_config(const SemicontinuousDataset& fit_data, const std::string& config_text,
                      const std::vector<std::string>& overrides) {
  auto layer = [&](const Config& base) {
    Config c = parse_config(config_text, base);
    for (const auto& o : overrides) apply_override(c, o);
    return c;
  };
  // A first pass reads log_z and the Psi2 convention, which shape the defaults.
  const Config probe = layer(default_config(positive_summary(fit_data, false), fit_data.r()));
  if (!probe.part2.log_z && probe.psi2_convention == Psi2Convention::kInverseHalfCovariance) {
    return probe;
  }
  return layer(default_config(positive_summary(fit_data, probe.part2.log_z), fit_data.r(),
                              probe.psi2_convention));
}

std::vector<int> fit_rows(const SemicontinuousDataset& data, const FitOptions& options,
                          std::uint64_t seed) {
  std::vector<int> rows;
  if (options.split) {
    const double f = *options.split;
    if (!(f > 0.0 && f <= 1.0)) throw ConfigError("split: must lie in (0, 1]");
    std::vector<int> order(static_cast<std::size_t>(data.n()));
    std::iota(order.begin(), order.end(), 0);
    RngStream rng(seed, kSplitStream);
    for (int i = data.n() - 1; i > 0; --i) {
      const auto j = static_cast<int>(rng() % static_cast<std::uint64_t>(i + 1));
      std::swap(order[static_cast<std::size_t>(i)], order[static_cast<std::size_t>(j)]);
    }
    const auto keep = static_cast<std::size_t>(std::lround(f * data.n()));
    rows.assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(keep));
    std::sort(rows.begin(), rows.end());
  } else if (data.in_sample) {
    for (int i = 0; i < data.n(); ++i) {
      if ((*data.in_sample)[static_cast<std::size_t>(i)] != 0) rows.push_back(i);
    }
  } else {
    rows.resize(static_cast<std::size_t>(data.n()));
    std::iota(rows.begin(), rows.end(), 0);
  }
  if (rows.empty()) throw DataError("no units selected for fitting");
  return rows;
}

FitSummary run_fit(const Config& config, const SemicontinuousDataset& data, const fs::path& out,
                   const FitOptions& options) {
  require_valid(config);
  if (!data.has_y) throw DataError("fitting needs the response column");
  const auto rows = fit_rows(data, options, config.schedule.seed);
  const auto fit = data.subset(rows);
  if (config.r() != fit.r()) {
    throw ConfigError("beta1_0 has length " + std::to_string(config.r()) + " but the data have " +
                      std::to_string(fit.r()) + " occurrence covariates");
  }
  if (config.k() != fit.p() + 1) {
    throw ConfigError("m2 has length " + std::to_string(config.k()) + " but the data give k = " +
                      std::to_string(fit.p() + 1));
  }
  const Part1Data d1{fit.delta(), fit.W};
  const Part2Data d2{fit.positive_rows(config.part2.log_z)};

  auto part2_future =
      std::async(std::launch::async, [&] { return sample_part2(d2, config); });
  std::vector<Part1Chain> part1;
  try {
    part1 = sample_part1(d1, config);
  } catch (...) {
    part2_future.wait();
    throw;
  }
  const auto part2 = part2_future.get();
  const auto draws1 = draws_of(part1);
  const auto draws2 = draws_of(part2);

  fs::create_directories(out);
  const std::string head = header_comment(config);
  const int r = config.r(), k = config.k();
  FitSummary summary;
  summary.fitted_units = fit.n();
  summary.positives = fit.positives();

  {
    std::ofstream cfg = open_out(out / "config.txt");
    cfg << to_text(config);
  }

  const auto all1 = flatten(draws1);
  std::vector<double> p_mean;
  {
    auto f = open_out(out / "fit_units.csv");
    f << head << "id,y,delta,p_positive,p_lo,p_hi\n";
    for (int i = 0; i < fit.n(); ++i) {
      const auto band = expected_delta(all1, fit.W.row(i).transpose());
      p_mean.push_back(band.mean);
      f << fit.ids[static_cast<std::size_t>(i)] << ',' << format_real(fit.y[i]) << ','
        << (fit.y[i] > 0.0 ? 1 : 0) << ',' << format_real(band.mean) << ','
        << format_real(band.lo) << ',' << format_real(band.hi) << '\n';
    }
  }

  {
    auto d = open_out(out / "part1_draws.csv");
    auto cl = open_out(out / "part1_clusters.csv");
    d << head << "chain,draw,alpha1,n,clusters";
    for (int j = 0; j < r; ++j) d << ",beta1_" << j;
    d << '\n';
    cl << head << "chain,draw,value,size\n";
    for (std::size_t c = 0; c < draws1.size(); ++c) {
      for (std::size_t t = 0; t < draws1[c].size(); ++t) {
        const auto& dr = draws1[c][t];
        d << c << ',' << t << ',' << format_real(dr.alpha1) << ',' << dr.n << ','
          << dr.clusters();
        for (int j = 0; j < r; ++j) d << ',' << format_real(dr.beta1[j]);
        d << '\n';
        for (int q = 0; q < dr.clusters(); ++q) {
          cl << c << ',' << t << ',' << format_real(dr.cluster_value[static_cast<std::size_t>(q)])
             << ',' << dr.cluster_size[static_cast<std::size_t>(q)] << '\n';
        }
      }
    }
  }

  {
    auto d = open_out(out / "part2_draws.csv");
    auto a = open_out(out / "part2_atoms.csv");
    d << head << "chain,draw,alpha2,occupied,k0";
    for (int j = 0; j < k; ++j) d << ",m1_" << coordinate(j);
    for (int i = 0; i < k; ++i) {
      for (int j = 0; j < k; ++j) d << ",Psi1_" << i << '_' << j;
    }
    d << '\n';
    a << head << "chain,draw,component,weight";
    for (int j = 0; j < k; ++j) a << ",mu_" << j;
    for (int i = 0; i < k; ++i) {
      for (int j = 0; j < k; ++j) a << ",Sigma_" << i << '_' << j;
    }
    a << '\n';
    for (std::size_t c = 0; c < draws2.size(); ++c) {
      for (std::size_t t = 0; t < draws2[c].size(); ++t) {
        const auto& dr = draws2[c][t];
        d << c << ',' << t << ',' << format_real(dr.alpha2) << ',' << dr.occupied << ','
          << format_real(dr.k0);
        for (int j = 0; j < k; ++j) d << ',' << format_real(dr.m1[j]);
        for (int i = 0; i < k; ++i) {
          for (int j = 0; j < k; ++j) d << ',' << format_real(dr.Psi1(i, j));
        }
        d << '\n';
        for (std::size_t l = 0; l < dr.atoms.size(); ++l) {
          a << c << ',' << t << ',' << l << ',' << format_real(dr.weights[static_cast<Eigen::Index>(l)]);
          for (int j = 0; j < k; ++j) a << ',' << format_real(dr.atoms[l].mu[j]);
          for (int i = 0; i < k; ++i) {
            for (int j = 0; j < k; ++j) a << ',' << format_real(dr.atoms[l].Sigma(i, j));
          }
          a << '\n';
        }
      }
    }
  }

  {
    auto t1 = open_out(out / "part1_trace.csv");
    t1 << head << "chain,iteration,stored,alpha1,clusters,acceptance,mh_scale";
    for (int j = 0; j < r; ++j) t1 << ",beta1_" << j;
    t1 << '\n';
    for (std::size_t c = 0; c < part1.size(); ++c) {
      for (const auto& row : part1[c].trace) {
        t1 << c << ',' << row.iteration << ',' << (row.stored ? 1 : 0) << ','
           << format_real(row.alpha1) << ',' << row.clusters << ',' << format_real(row.acceptance)
           << ',' << format_real(row.mh_scale);
        for (int j = 0; j < r; ++j) t1 << ',' << format_real(row.beta1[j]);
        t1 << '\n';
      }
    }
    auto t2 = open_out(out / "part2_trace.csv");
    t2 << head << "chain,iteration,stored,alpha2,clusters,k0";
    for (int j = 0; j < k; ++j) t2 << ",m1_" << coordinate(j);
    for (int i = 0; i < k; ++i) {
      for (int j = i; j < k; ++j) {
        t2 << ",psi1_" << coordinate(i) << (i == j ? "" : "_" + coordinate(j));
      }
    }
    t2 << '\n';
    for (std::size_t c = 0; c < part2.size(); ++c) {
      for (const auto& row : part2[c].trace) {
        t2 << c << ',' << row.iteration << ',' << (row.stored ? 1 : 0) << ','
           << format_real(row.alpha2) << ',' << row.clusters << ',' << format_real(row.k0);
        for (int j = 0; j < k; ++j) t2 << ',' << format_real(row.m1[j]);
        for (int i = 0; i < k; ++i) {
          for (int j = i; j < k; ++j) t2 << ',' << format_real(row.Psi1(i, j));
        }
        t2 << '\n';
      }
    }
  }

  if (config.dump_state) {
    auto f = open_out(out / "part1_latent.csv");
    f << head << "chain,draw,unit,V\n";
    for (std::size_t c = 0; c < part1.size(); ++c) {
      for (std::size_t t = 0; t < part1[c].latent.size(); ++t) {
        const auto& V = part1[c].latent[t];
        for (Eigen::Index i = 0; i < V.size(); ++i) {
          f << c << ',' << t << ',' << fit.ids[static_cast<std::size_t>(i)] << ','
            << format_real(V[i]) << '\n';
        }
      }
    }
  }

  const auto traces = monitored_traces(draws1, draws2);
  if (psrf_possible(traces)) {
    summary.psrf = psrf_report(traces);
    write_diagnostics(out, config, traces, &summary.psrf);
  } else {
    summary.warnings.push_back(
        "convergence diagnostics need at least 2 chains of 10 stored draws; psrf.csv not written");
    write_diagnostics(out, config, traces, nullptr);
  }

  write_classification(out / "classification.csv", config,
                       classify(p_mean, fit.delta(), options.cutoff));

  if (options.reference_figure) {
    auto h = open_out(out / "histogram.csv");
    h << head << "bin_lo,bin_hi,count\n";
    const int zeros = fit.n() - fit.positives();
    h << "0,0," << zeros << '\n';
    if (fit.positives() > 0) {
      const double top = fit.y.maxCoeff();
      const int bins = 20;
      std::vector<int> counts(bins, 0);
      for (int i = 0; i < fit.n(); ++i) {
        if (!(fit.y[i] > 0.0)) continue;
        const int b = std::min(bins - 1, static_cast<int>(fit.y[i] / top * bins));
        ++counts[static_cast<std::size_t>(b)];
      }
      for (int b = 0; b < bins; ++b) {
        h << format_real(top * b / bins) << ',' << format_real(top * (b + 1) / bins) << ','
          << counts[static_cast<std::size_t>(b)] << '\n';
      }
    }

    Vector beta_bar = Vector::Zero(r);
    for (const auto& dr : all1) beta_bar += dr.beta1;
    beta_bar /= static_cast<double>(std::max<std::size_t>(all1.size(), 1));
    const Vector index = fit.W * beta_bar;
    const auto grid = linspace(index.minCoeff(), index.maxCoeff(), 101);
    const auto link = estimated_link(all1, grid);
    auto g = open_out(out / "link_curve.csv");
    g << head << "t,mean,lo,hi,logistic\n";
    for (std::size_t i = 0; i < grid.size(); ++i) {
      g << format_real(grid[i]) << ',' << format_real(link[i].mean) << ','
        << format_real(link[i].lo) << ',' << format_real(link[i].hi) << ','
        << format_real(logistic_cdf(grid[i])) << '\n';
    }
  }

  for (const auto& c : part1) {
    for (const auto& w : c.warnings) {
      if (std::find(summary.warnings.begin(), summary.warnings.end(), w) == summary.warnings.end()) {
        summary.warnings.push_back(w);
      }
    }
  }
  {
    double last = 0.0;
    std::size_t count = 0;
    for (const auto& chain : draws2) {
      for (const auto& dr : chain) {
        last += dr.weights[dr.weights.size() - 1];
        ++count;
      }
    }
    if (count > 0 && last / static_cast<double>(count) >= 1e-3) {
      summary.warnings.push_back("posterior mean of the last stick-breaking weight is " +
                                 format_real(last / static_cast<double>(count)) +
                                 "; consider a larger truncation_L");
    }
  }
  for (std::size_t c = 0; c < part2.size(); ++c) {
    if (part2[c].underflow_count > 0) {
      summary.warnings.push_back("part 2 chain " + std::to_string(c) + ": " +
                                 std::to_string(part2[c].underflow_count) +
                                 " allocation underflows resolved by argmax");
    }
  }

  {
    auto info = open_out(out / "run_info.txt");
    info << "seed=" << config.schedule.seed << '\n';
    info << "config_hash=" << config_hash(config) << '\n';
    info << "w_columns=" << join(fit.w_names, ',') << '\n';
    info << "x_columns=" << join(fit.x_names, ',') << '\n';
    info << "fitted_units=" << fit.n() << '\n';
    info << "positives=" << fit.positives() << '\n';
    info << "selection="
         << (options.split ? "split:" + format_real(*options.split)
                           : data.in_sample ? std::string("in_sample") : std::string("all"))
         << '\n';
    info << "cutoff=" << format_real(options.cutoff) << '\n';
    for (std::size_t c = 0; c < part1.size(); ++c) {
      info << "part1_chain" << c << "_acceptance=" << format_real(part1[c].acceptance_rate) << '\n';
      info << "part1_chain" << c << "_mh_scale=" << format_real(part1[c].final_mh_scale) << '\n';
    }
    for (std::size_t c = 0; c < part2.size(); ++c) {
      info << "part2_chain" << c << "_underflows=" << part2[c].underflow_count << '\n';
    }
    for (const auto& w : summary.warnings) info << "warning=" << w << '\n';
  }
  return summary;
}

RunArtifacts load_run(const fs::path& run_dir) {
  RunArtifacts art;
  art.config = parse_config(read_text(run_dir / "config.txt"), Config{});
  const int r = art.config.r(), k = art.config.k();

  {
    std::istringstream info(read_text(run_dir / "run_info.txt"));
    std::string line;
    while (std::getline(info, line)) {
      const auto eq = line.find('=');
      if (eq == std::string::npos) continue;
      const auto key = line.substr(0, eq);
      const auto value = line.substr(eq + 1);
      if (key == "w_columns") art.w_names = split_commas(value);
      if (key == "x_columns") art.x_names = split_commas(value);
    }
  }

  const auto units = read_table(run_dir / "fit_units.csv");
  for (std::size_t i = 0; i < units.rows.size(); ++i) {
    art.fit_ids.push_back(units.rows[i][units.at("id")]);
    art.fit_y.push_back(units.real(i, "y"));
  }

  const auto d1 = read_table(run_dir / "part1_draws.csv");
  std::map<std::pair<long long, long long>, std::size_t> where1;
  for (std::size_t i = 0; i < d1.rows.size(); ++i) {
    const auto c = static_cast<std::size_t>(d1.integer(i, "chain"));
    if (art.part1.size() <= c) art.part1.resize(c + 1);
    Part1Draw dr;
    dr.alpha1 = d1.real(i, "alpha1");
    dr.n = static_cast<int>(d1.integer(i, "n"));
    dr.beta1.resize(r);
    for (int j = 0; j < r; ++j) dr.beta1[j] = d1.real(i, "beta1_" + std::to_string(j));
    where1[{static_cast<long long>(c), d1.integer(i, "draw")}] = art.part1[c].size();
    art.part1[c].push_back(std::move(dr));
  }
  const auto cl = read_table(run_dir / "part1_clusters.csv");
  for (std::size_t i = 0; i < cl.rows.size(); ++i) {
    const auto key = std::make_pair(cl.integer(i, "chain"), cl.integer(i, "draw"));
    const auto it = where1.find(key);
    if (it == where1.end()) throw DataError("part1_clusters.csv: cluster for an unknown draw");
    auto& dr = art.part1[static_cast<std::size_t>(key.first)][it->second];
    dr.cluster_value.push_back(cl.real(i, "value"));
    dr.cluster_size.push_back(static_cast<int>(cl.integer(i, "size")));
  }

  const auto d2 = read_table(run_dir / "part2_draws.csv");
  std::map<std::pair<long long, long long>, std::size_t> where2;
  for (std::size_t i = 0; i < d2.rows.size(); ++i) {
    const auto c = static_cast<std::size_t>(d2.integer(i, "chain"));
    if (art.part2.size() <= c) art.part2.resize(c + 1);
    Part2Draw dr;
    dr.alpha2 = d2.real(i, "alpha2");
    dr.occupied = static_cast<int>(d2.integer(i, "occupied"));
    dr.k0 = d2.real(i, "k0");
    dr.m1.resize(k);
    dr.Psi1.resize(k, k);
    for (int j = 0; j < k; ++j) dr.m1[j] = d2.real(i, "m1_" + coordinate(j));
    for (int a = 0; a < k; ++a) {
      for (int b = 0; b < k; ++b) {
        dr.Psi1(a, b) = d2.real(i, "Psi1_" + std::to_string(a) + "_" + std::to_string(b));
      }
    }
    where2[{static_cast<long long>(c), d2.integer(i, "draw")}] = art.part2[c].size();
    art.part2[c].push_back(std::move(dr));
  }
  const auto at = read_table(run_dir / "part2_atoms.csv");
  std::map<std::pair<long long, long long>, std::vector<double>> weights;
  for (std::size_t i = 0; i < at.rows.size(); ++i) {
    const auto key = std::make_pair(at.integer(i, "chain"), at.integer(i, "draw"));
    const auto it = where2.find(key);
    if (it == where2.end()) throw DataError("part2_atoms.csv: atom for an unknown draw");
    auto& dr = art.part2[static_cast<std::size_t>(key.first)][it->second];
    Atom atom{Vector(k), Matrix(k, k)};
    for (int j = 0; j < k; ++j) atom.mu[j] = at.real(i, "mu_" + std::to_string(j));
    for (int a = 0; a < k; ++a) {
      for (int b = 0; b < k; ++b) {
        atom.Sigma(a, b) = at.real(i, "Sigma_" + std::to_string(a) + "_" + std::to_string(b));
      }
    }
    dr.atoms.push_back(std::move(atom));
    weights[key].push_back(at.real(i, "weight"));
  }
  for (const auto& [key, w] : weights) {
    auto& dr = art.part2[static_cast<std::size_t>(key.first)][where2.at(key)];
    dr.weights = Eigen::Map<const Vector>(w.data(), static_cast<Eigen::Index>(w.size()));
  }
  if (art.part1.empty() || art.part2.empty()) {
    throw DataError(run_dir.string() + ": run directory holds no draws");
  }
  return art;
}

GridSpec GridSpec::parse(const std::string& text) {
  GridSpec g;
  const auto fields = [&] {
    std::vector<std::string> f;
    std::string part;
    std::istringstream in(text);
    while (std::getline(in, part, ':')) f.push_back(part);
    return f;
  }();
  try {
    if (!fields.empty() && fields[0] == "auto") {
      if (fields.size() > 2) throw ConfigError("grid: expected auto or auto:N");
      if (fields.size() == 2) g.points = static_cast<int>(parse_real(fields[1]));
    } else if (fields.size() == 3) {
      g.automatic = false;
      g.lo = parse_real(fields[0]);
      g.hi = parse_real(fields[1]);
      g.points = static_cast<int>(parse_real(fields[2]));
      if (!(g.lo < g.hi)) throw ConfigError("grid: need lo < hi");
    } else {
      throw ConfigError("grid: expected auto, auto:N or lo:hi:N (got '" + text + "')");
    }
  } catch (const std::invalid_argument&) {
    throw ConfigError("grid: non-numeric field in '" + text + "'");
  }
  if (g.points < 2) throw ConfigError("grid: need at least 2 points");
  return g;
}

std::vector<PredictiveSurface> run_predict(const fs::path& run_dir,
                                           const SemicontinuousDataset& data,
                                           const fs::path& out, const PredictOptions& options) {
  const auto art = load_run(run_dir);
  const Config& config = art.config;
  if (data.r() != config.r()) {
    throw DataError("prediction data have " + std::to_string(data.r()) +
                    " occurrence covariates; the fitted model has " + std::to_string(config.r()));
  }
  if (data.p() + 1 != config.k()) {
    throw DataError("prediction data have " + std::to_string(data.p()) +
                    " intensity covariates; the fitted model has " +
                    std::to_string(config.k() - 1));
  }
  const auto part1 = flatten(art.part1);
  std::vector<ConditionalMixture> mixtures;
  for (const auto& chain : art.part2) {
    for (const auto& d : chain) mixtures.emplace_back(d, config.part2.log_z);
  }

  std::vector<PredictiveSurface> surfaces;
  for (int i = 0; i < data.n(); ++i) {
    const Vector x = data.X.row(i).transpose();
    const Vector w = data.W.row(i).transpose();
    auto grid = options.grid.automatic
                    ? default_z_grid(mixtures, x, options.grid.points)
                    : linspace(options.grid.lo, options.grid.hi, options.grid.points);
    auto s = combine(part1, mixtures, x, w, std::move(grid));
    s.id = data.ids[static_cast<std::size_t>(i)];
    surfaces.push_back(std::move(s));
  }

  fs::create_directories(out);
  const std::string head = header_comment(config);
  {
    auto u = open_out(out / "units.csv");
    u << head << "id,p_positive,p_lo,p_hi,p_zero,point_prediction,point_lo,point_hi\n";
    for (const auto& s : surfaces) {
      u << s.id << ',' << format_real(s.p_positive) << ',' << format_real(s.p_positive_band.lo)
        << ',' << format_real(s.p_positive_band.hi) << ',' << format_real(s.p_zero) << ','
        << format_real(s.point_prediction) << ',' << format_real(s.point_lo) << ','
        << format_real(s.point_hi) << '\n';
    }
    auto g = open_out(out / "surfaces.csv");
    g << head << "id,z,density_mean,density_lo,density_hi\n";
    for (const auto& s : surfaces) {
      for (std::size_t j = 0; j < s.z_grid.size(); ++j) {
        g << s.id << ',' << format_real(s.z_grid[j]) << ',' << format_real(s.density_mean[j])
          << ',' << format_real(s.density_lo[j]) << ',' << format_real(s.density_hi[j]) << '\n';
      }
    }
  }

  const std::set<std::string> fitted(art.fit_ids.begin(), art.fit_ids.end());
  if (data.has_y) {
    std::vector<double> p;
    for (const auto& s : surfaces) p.push_back(s.p_positive);
    write_classification(out / "classification.csv", config,
                         classify(p, data.delta(), options.cutoff));
    auto c = open_out(out / "comparison.csv");
    c << head << "id,y,predicted,p_positive\n";
    for (int i = 0; i < data.n(); ++i) {
      const auto& s = surfaces[static_cast<std::size_t>(i)];
      if (fitted.count(s.id)) continue;
      c << s.id << ',' << format_real(data.y[i]) << ',' << format_real(s.point_prediction) << ','
        << format_real(s.p_positive) << '\n';
    }
  }

  if (data.areas) {
    std::map<std::string, double> fit_y;
    for (std::size_t i = 0; i < art.fit_ids.size(); ++i) fit_y[art.fit_ids[i]] = art.fit_y[i];
    std::vector<AreaUnit> units;
    std::map<std::string, double> observed, predicted;
    for (int i = 0; i < data.n(); ++i) {
      const auto& s = surfaces[static_cast<std::size_t>(i)];
      units.push_back({s.id, (*data.areas)[static_cast<std::size_t>(i)]});
      const auto it = fit_y.find(s.id);
      if (it != fit_y.end()) {
        observed[s.id] = it->second;
      } else {
        predicted[s.id] = s.point_prediction;
      }
    }
    const auto table = area_plugin(units, observed, predicted);
    auto a = open_out(out / "areas.csv");
    a << head << "area,units,observed,predicted,total,mean\n";
    for (const auto& e : table) {
      a << e.area << ',' << e.units << ',' << e.observed << ',' << e.predicted << ','
        << format_real(e.total) << ',' << format_real(e.mean) << '\n';
    }
  }

  if (options.reference_figure && data.n() > 0) {
    const Vector xbar = data.X.colwise().mean().transpose();
    const auto grid = linspace(data.X.col(0).minCoeff(), data.X.col(0).maxCoeff(), 101);
    auto f = open_out(out / "fitted_mean_curve.csv");
    f << head << data.x_names.at(0) << ",mean,lo,hi\n";
    for (double g : grid) {
      Vector x = xbar;
      x[0] = g;
      const auto b = conditional_mean(mixtures, x);
      f << format_real(g) << ',' << format_real(b.mean) << ',' << format_real(b.lo) << ','
        << format_real(b.hi) << '\n';
    }
  }
  return surfaces;
}

std::vector<PsrfRow> run_diagnose(const fs::path& run_dir, const fs::path& out) {
  const auto art = load_run(run_dir);
  if (art.part1.size() < 2 || art.part2.size() < 2) {
    throw ConfigError("diagnose: the run has fewer than 2 chains; refit with chains >= 2");
  }
  const auto traces = monitored_traces(art.part1, art.part2);
  const auto psrf = psrf_report(traces);
  fs::create_directories(out);
  write_diagnostics(out, art.config, traces, &psrf);
  return psrf;
}

}  // namespace twopart
