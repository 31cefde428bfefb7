// Command-line front end: fit, predict, diagnose, simulate.

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "twopart/errors.hpp"
#include "twopart/run.hpp"
#include "twopart/simulate.hpp"

namespace fs = std::filesystem;
using namespace twopart;

namespace {

std::string read_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot read '" + path + "'");
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

void print_warnings(const std::vector<std::string>& warnings) {
  for (const auto& w : warnings) std::cerr << "warning: " << w << '\n';
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Semiparametric Bayesian two-part model for semicontinuous data"};
  app.require_subcommand(1);

  std::string config_path, data_path, out_path, run_path, grid = "auto";
  std::vector<std::string> overrides;
  std::optional<std::uint64_t> seed;
  std::optional<double> split;
  double cutoff = 0.5;
  bool reference_figure = false;

  auto* fit = app.add_subcommand("fit", "Fit both parts and write a run directory");
  fit->add_option("--data", data_path, "Input CSV (id, y, w_*, x_* columns)")->required();
  fit->add_option("--out", out_path, "Run directory")->required();
  fit->add_option("--config", config_path, "key = value configuration file");
  fit->add_option("--set", overrides, "Override one configuration key (key=value)");
  fit->add_option("--seed", seed, "Master seed");
  fit->add_option("--split", split, "Fit on this seeded fraction of units, hold out the rest");
  fit->add_option("--cutoff", cutoff, "Classification cutoff")->capture_default_str();
  fit->add_flag("--reference-figure", reference_figure, "Write histogram and link-curve tables");

  auto* predict = app.add_subcommand("predict", "Predictive surfaces from a fitted run");
  predict->add_option("--run", run_path, "Run directory written by fit")->required();
  predict->add_option("--data", data_path, "Units to predict")->required();
  predict->add_option("--out", out_path, "Output directory (default: <run>/predict)");
  predict->add_option("--grid", grid, "auto, auto:N or lo:hi:N")->capture_default_str();
  predict->add_option("--cutoff", cutoff, "Classification cutoff")->capture_default_str();
  predict->add_flag("--reference-figure", reference_figure, "Write the fitted-mean curve table");

  auto* diagnose = app.add_subcommand("diagnose", "Gelman-Rubin report and posterior table");
  diagnose->add_option("--run", run_path, "Run directory written by fit")->required();
  diagnose->add_option("--out", out_path, "Output directory (default: the run directory)");

  auto* simulate_cmd = app.add_subcommand("simulate", "Generate a synthetic dataset with truth");
  simulate_cmd->add_option("--out", out_path, "Dataset CSV to write")->required();
  simulate_cmd->add_option("--config", config_path, "Generator key = value file");
  simulate_cmd->add_option("--set", overrides, "Override one generator key (key=value)");
  simulate_cmd->add_option("--seed", seed, "Generator seed");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (*fit) {
      const auto data = load_dataset(data_path);
      std::cerr << data.summary_line() << '\n';
      FitOptions options;
      options.split = split;
      options.cutoff = cutoff;
      options.reference_figure = reference_figure;
      const std::string text = config_path.empty() ? std::string() : read_file(config_path);
      // Defaults depend on the fitted units, which depend on the seed when splitting.
      std::vector<std::string> all = overrides;
      if (seed) all.push_back("seed=" + std::to_string(*seed));
      Config config = resolve_config(data, text, all);
      const auto rows = fit_rows(data, options, config.schedule.seed);
      if (rows.size() != static_cast<std::size_t>(data.n())) {
        config = resolve_config(data.subset(rows), text, all);
      }
      const auto summary = run_fit(config, data, out_path, options);
      std::cerr << "fitted " << summary.fitted_units << " units (" << summary.positives
                << " positive)\n";
      int failing = 0;
      for (const auto& row : summary.psrf) failing += row.pass ? 0 : 1;
      if (!summary.psrf.empty()) {
        std::cerr << "psrf: " << failing << " of " << summary.psrf.size()
                  << " monitored parameters at or above 1.1\n";
      }
      print_warnings(summary.warnings);
    } else if (*predict) {
      ColumnMapping mapping;
      mapping.require_y = false;
      const auto data = load_dataset(data_path, mapping);
      PredictOptions options;
      options.grid = GridSpec::parse(grid);
      options.cutoff = cutoff;
      options.reference_figure = reference_figure;
      const fs::path out = out_path.empty() ? fs::path(run_path) / "predict" : fs::path(out_path);
      const auto surfaces = run_predict(run_path, data, out, options);
      std::cerr << "predicted " << surfaces.size() << " units into " << out.string() << '\n';
    } else if (*diagnose) {
      const fs::path out = out_path.empty() ? fs::path(run_path) : fs::path(out_path);
      const auto rows = run_diagnose(run_path, out);
      for (const auto& row : rows) {
        std::cout << row.name << ' ' << row.psrf << (row.pass ? " pass" : " FAIL") << '\n';
      }
    } else if (*simulate_cmd) {
      std::string text = config_path.empty() ? std::string() : read_file(config_path);
      for (const auto& o : overrides) text += "\n" + o;
      auto spec = parse_generator_spec(text, default_generator_spec());
      if (seed) spec.seed = *seed;
      const auto result = simulate(spec);
      const fs::path out(out_path);
      if (out.has_parent_path()) fs::create_directories(out.parent_path());
      write_dataset(out, result.data);
      const auto stem = out.parent_path() / out.stem();
      write_truth(stem.string() + "_truth_units.csv", stem.string() + "_truth_grid.csv", result);
      std::cerr << result.data.summary_line() << '\n';
    }
  } catch (const SamplerError& e) {
    std::cerr << "sampler error: " << e.what() << '\n';
    return 3;
  } catch (const ConfigError& e) {
    std::cerr << "invalid configuration: " << e.what() << '\n';
    return 2;
  } catch (const DataError& e) {
    std::cerr << "invalid data: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
  return 0;
}
