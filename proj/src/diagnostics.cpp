#include "twopart/diagnostics.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

#include "twopart/stats.hpp"

namespace twopart {

namespace {

std::string coordinate_name(int j) { return j == 0 ? "z" : "x" + std::to_string(j); }

}  // namespace

std::vector<double> TraceMatrix::pooled() const {
  std::vector<double> all;
  for (const auto& c : chains) all.insert(all.end(), c.begin(), c.end());
  return all;
}

double gelman_rubin(const TraceMatrix& trace) {
  const auto J = trace.chains.size();
  if (J < 2) {
    throw std::invalid_argument("gelman_rubin(" + trace.name +
                                "): needs at least 2 chains; rerun with chains >= 2");
  }
  const auto N = trace.chains[0].size();
  for (const auto& c : trace.chains) {
    if (c.size() != N) throw std::invalid_argument("gelman_rubin: chains differ in length");
  }
  if (N < 10) throw std::invalid_argument("gelman_rubin: needs at least 10 draws per chain");

  std::vector<double> means(J), vars(J);
  for (std::size_t j = 0; j < J; ++j) {
    means[j] = mean(trace.chains[j]);
    vars[j] = sample_variance(trace.chains[j]);
  }
  const double n = static_cast<double>(N);
  const double W = mean(vars);
  const double B = n * sample_variance(means);
  if (W == 0.0) return B > 0.0 ? std::numeric_limits<double>::infinity() : 1.0;
  return std::sqrt(((n - 1.0) / n * W + B / n) / W);
}

std::vector<PsrfRow> psrf_report(std::span<const TraceMatrix> traces, double threshold) {
  std::vector<PsrfRow> rows;
  for (const auto& t : traces) {
    const double r = gelman_rubin(t);
    rows.push_back({t.name, r, r < threshold});
  }
  return rows;
}

std::vector<std::string> monitored_parameters(int r, int k) {
  std::vector<std::string> names;
  for (int j = 0; j < r; ++j) names.push_back("beta1_" + std::to_string(j));
  names.push_back("alpha1");
  names.push_back("clusters1");
  for (int j = 0; j < k; ++j) names.push_back("m1_" + coordinate_name(j));
  names.push_back("k0");
  for (int j = 0; j < k; ++j) names.push_back("psi1_" + coordinate_name(j));
  for (int i = 0; i < k; ++i) {
    for (int j = i + 1; j < k; ++j) {
      names.push_back("psi1_" + coordinate_name(i) + "_" + coordinate_name(j));
    }
  }
  names.push_back("alpha2");
  names.push_back("clusters2");
  return names;
}

std::vector<TraceMatrix> monitored_traces(const std::vector<std::vector<Part1Draw>>& part1,
                                          const std::vector<std::vector<Part2Draw>>& part2) {
  std::vector<TraceMatrix> out;
  auto collect1 = [&](const std::string& name, bool integer, auto&& get) {
    TraceMatrix t{name, {}, integer};
    for (const auto& chain : part1) {
      std::vector<double> v;
      v.reserve(chain.size());
      for (const auto& d : chain) v.push_back(get(d));
      t.chains.push_back(std::move(v));
    }
    out.push_back(std::move(t));
  };
  auto collect2 = [&](const std::string& name, bool integer, auto&& get) {
    TraceMatrix t{name, {}, integer};
    for (const auto& chain : part2) {
      std::vector<double> v;
      v.reserve(chain.size());
      for (const auto& d : chain) v.push_back(get(d));
      t.chains.push_back(std::move(v));
    }
    out.push_back(std::move(t));
  };

  if (!part1.empty() && !part1[0].empty()) {
    const int r = static_cast<int>(part1[0][0].beta1.size());
    for (int j = 0; j < r; ++j) {
      collect1("beta1_" + std::to_string(j), false, [j](const Part1Draw& d) { return d.beta1[j]; });
    }
    collect1("alpha1", false, [](const Part1Draw& d) { return d.alpha1; });
    collect1("clusters1", true, [](const Part1Draw& d) { return double(d.clusters()); });
  }
  if (!part2.empty() && !part2[0].empty()) {
    const int k = static_cast<int>(part2[0][0].m1.size());
    for (int j = 0; j < k; ++j) {
      collect2("m1_" + coordinate_name(j), false, [j](const Part2Draw& d) { return d.m1[j]; });
    }
    collect2("k0", false, [](const Part2Draw& d) { return d.k0; });
    for (int j = 0; j < k; ++j) {
      collect2("psi1_" + coordinate_name(j), false,
               [j](const Part2Draw& d) { return d.Psi1(j, j); });
    }
    for (int i = 0; i < k; ++i) {
      for (int j = i + 1; j < k; ++j) {
        collect2("psi1_" + coordinate_name(i) + "_" + coordinate_name(j), false,
                 [i, j](const Part2Draw& d) { return d.Psi1(i, j); });
      }
    }
    collect2("alpha2", false, [](const Part2Draw& d) { return d.alpha2; });
    collect2("clusters2", true, [](const Part2Draw& d) { return double(d.occupied); });
  }
  return out;
}

std::vector<PosteriorRow> posterior_table(std::span<const TraceMatrix> traces,
                                          std::span<const std::string> names) {
  std::vector<PosteriorRow> rows;
  for (const auto& name : names) {
    const TraceMatrix* found = nullptr;
    for (const auto& t : traces) {
      if (t.name == name) found = &t;
    }
    if (!found) throw std::invalid_argument("posterior_table: unknown parameter '" + name + "'");
    const auto all = found->pooled();
    if (all.empty()) throw std::invalid_argument("posterior_table: no draws for '" + name + "'");
    PosteriorRow row{name, mean(all), 0.0, 0.0};
    if (found->integer_valued) {
      row.lo = quantile_order_statistic(all, 0.025);
      row.hi = quantile_order_statistic(all, 0.975);
    } else {
      row.lo = quantile_interpolated(all, 0.025);
      row.hi = quantile_interpolated(all, 0.975);
    }
    rows.push_back(row);
  }
  return rows;
}

}  // namespace twopart
