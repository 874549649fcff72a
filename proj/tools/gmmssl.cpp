// gmmssl: bounds, simulations and tables for self-training on the binary
// Gaussian mixture.
//
// Exit codes: 0 success, 2 configuration error, 3 numerical failure.

#include <chrono>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "commands.hpp"
#include "config.hpp"
#include "output.hpp"

namespace fs = std::filesystem;
using namespace gmmssl;
using namespace gmmssl::cli;

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitNumerical = 3;

struct CommonFlags {
  std::string config_path;
  std::uint64_t seed = 0;
  std::string out_dir;
  std::string format = "csv";
  bool svg = false;
  CLI::Option* seed_opt = nullptr;
};

// Flag values are held here and copied into the RunConfig only when given,
// so file values survive unless overridden.
struct FlagValues {
  double sigma = 0;
  int d = 0, n = 0, m = 0, tau = 0, t_max = 0, trials = 0, test_size = 0, points = 0;
  std::string w, method, expectation, g_route, mode, population_risk;
  double delta = 0, epsilon = 0, r = 0, c = 0, c1 = 0, c2 = 0, tol = 0, x_min = 0, x_max = 0;
  std::int64_t samples = 0;
  std::vector<double> sigmas;
  std::vector<int> ts, ns, ms;
};

using Override = std::function<void(RunConfig&)>;

struct Subcommand {
  CLI::App* app = nullptr;
  CommonFlags common;
  std::vector<std::pair<CLI::Option*, Override>> overrides;

  template <class T>
  void flag(const std::string& name, T& var, const std::string& help, Override apply) {
    overrides.emplace_back(app->add_option(name, var, help), std::move(apply));
  }
};

void add_common(Subcommand& s) {
  s.app->add_option("--config", s.common.config_path, "JSON config file or run manifest");
  s.common.seed_opt = s.app->add_option("--seed", s.common.seed, "Master seed");
  s.app->add_option("--out", s.common.out_dir, "Output directory (stdout when omitted)");
  s.app->add_option("--format", s.common.format, "Output format")
      ->check(CLI::IsMember({"csv", "json"}));
  s.app->add_flag("--svg", s.common.svg, "Also write an SVG plot");
}

void add_params(Subcommand& s, FlagValues& f, bool with_sigma) {
  if (with_sigma) {
    s.flag("--sigma", f.sigma, "Class standard deviation",
           [&f](RunConfig& c) { c.params.sigma = f.sigma; });
  }
  s.flag("--d", f.d, "Dimension", [&f](RunConfig& c) { c.params.d = f.d; });
  s.flag("--n", f.n, "Labelled sample count", [&f](RunConfig& c) { c.params.n = f.n; });
  s.flag("--m", f.m, "Unlabelled batch size", [&f](RunConfig& c) { c.params.m = f.m; });
}

void add_bound_options(Subcommand& s, FlagValues& f) {
  s.flag("--t-max", f.t_max, "Largest iteration", [&f](RunConfig& c) { c.bound.t_max = f.t_max; });
  s.flag("--method", f.method, "theorem2 | corollary1 | taylor_gen1 | gen0",
         [&f](RunConfig& c) { c.bound.method = f.method; });
  s.flag("--w", f.w, "Labelled weight for corollary1 (number or auto)", [&f](RunConfig& c) {
    if (f.w == "auto") {
      c.params.w.reset();
      return;
    }
    try {
      std::size_t used = 0;
      c.params.w = std::stod(f.w, &used);
      if (used != f.w.size()) throw std::invalid_argument("trailing");
    } catch (const std::exception&) {
      throw ConfigError("--w must be a number or 'auto'");
    }
  });
  s.flag("--delta", f.delta, "Confidence level", [&f](RunConfig& c) { c.bound.delta = f.delta; });
  s.flag("--epsilon", f.epsilon, "Slack", [&f](RunConfig& c) { c.bound.epsilon = f.epsilon; });
  s.flag("--r", f.r, "Feature ball radius", [&f](RunConfig& c) { c.bound.r = f.r; });
  s.flag("--c", f.c, "Parameter ball radius", [&f](RunConfig& c) { c.bound.c = f.c; });
  s.flag("--c1", f.c1, "Loss lower endpoint", [&f](RunConfig& c) { c.bound.c1 = f.c1; });
  s.flag("--c2", f.c2, "Loss upper endpoint", [&f](RunConfig& c) { c.bound.c2 = f.c2; });
  s.flag("--tol", f.tol, "Quadrature tolerance", [&f](RunConfig& c) { c.bound.tol = f.tol; });
  s.flag("--expectation", f.expectation, "quad2d | mc",
         [&f](RunConfig& c) { c.bound.expectation = f.expectation; });
  s.flag("--samples", f.samples, "Samples for the mc expectation",
         [&f](RunConfig& c) { c.bound.samples = f.samples; });
  s.flag("--g-route", f.g_route, "projected | quadrature2d",
         [&f](RunConfig& c) { c.bound.g_route = f.g_route; });
}

void add_grid_options(Subcommand& s, FlagValues& f, const char* axis) {
  s.flag("--sigma", f.sigmas, "Sigma values",
         [&f](RunConfig& c) { c.grid.sigma = f.sigmas; });
  s.flag(std::string("--") + axis + "-min", f.x_min, "Grid start",
         [&f](RunConfig& c) { c.grid.x_min = f.x_min; });
  s.flag(std::string("--") + axis + "-max", f.x_max, "Grid end",
         [&f](RunConfig& c) { c.grid.x_max = f.x_max; });
  s.flag("--points", f.points, "Grid size", [&f](RunConfig& c) { c.grid.points = f.points; });
}

void write_file(const fs::path& path, const std::string& content) {
  fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  out << content;
  if (!out) throw ConfigError("cannot write '" + path.string() + "'");
}

std::string render(const Table& t, const std::string& format, const std::string& command) {
  if (format == "json") {
    Json doc;
    doc["command"] = command;
    doc["rows"] = to_json_rows(t);
    return doc.dump(2) + "\n";
  }
  return to_csv(t);
}

int run(const std::string& command, Subcommand& sub) {
  const auto start = std::chrono::steady_clock::now();
  RunConfig cfg;
  if (!sub.common.config_path.empty()) apply_json(load_json_file(sub.common.config_path), cfg);
  if (sub.common.seed_opt->count()) cfg.seed = sub.common.seed;
  for (auto& [opt, apply] : sub.overrides) {
    if (opt->count()) apply(cfg);
  }
  resolve_defaults(command, cfg);
  if (command == "sweep" && sub.common.out_dir.empty()) {
    throw ConfigError("sweep requires --out <dir>");
  }
  if (sub.common.svg && sub.common.out_dir.empty()) throw ConfigError("--svg requires --out");

  CommandOutput result;
  if (command == "bound") result = cmd_bound(cfg);
  else if (command == "simulate") result = cmd_simulate(cfg);
  else if (command == "fsigma") result = cmd_fsigma(cfg);
  else if (command == "gsigma") result = cmd_gsigma(cfg);
  else result = cmd_sweep(cfg);

  const std::string ext = sub.common.format == "json" ? ".json" : ".csv";
  if (sub.common.out_dir.empty()) {
    for (const auto& a : result.artifacts) std::cout << render(a.table, sub.common.format, command);
  } else {
    const fs::path dir(sub.common.out_dir);
    for (const auto& a : result.artifacts) {
      write_file(dir / (a.name + ext), render(a.table, sub.common.format, command));
      if (sub.common.svg && a.plot) write_file(dir / (a.name + ".svg"), render_svg(*a.plot));
    }
    const double seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    write_file(dir / "manifest.json", make_manifest(command, cfg, seconds).dump(2) + "\n");
  }
  if (result.partial_failure) {
    std::cerr << "gmmssl: some sweep points failed; see index" << ext << "\n";
    return kExitNumerical;
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Generalization bounds and simulations for self-training on a Gaussian mixture"};
  app.require_subcommand(1);
  FlagValues f;
  std::map<std::string, Subcommand> subs;

  auto make = [&](const std::string& name, const std::string& help) -> Subcommand& {
    Subcommand& s = subs[name];
    s.app = app.add_subcommand(name, help);
    add_common(s);
    return s;
  };

  Subcommand& bound = make("bound", "Bound on |gen_t| as a function of t");
  add_params(bound, f, true);
  add_bound_options(bound, f);

  Subcommand& simulate = make("simulate", "Monte Carlo run of the self-training procedure");
  add_params(simulate, f, true);
  simulate.flag("--tau", f.tau, "Iterations", [&f](RunConfig& c) { c.params.tau = f.tau; });
  simulate.flag("--trials", f.trials, "Independent trials",
                [&f](RunConfig& c) { c.trial.trials = f.trials; });
  simulate.flag("--mode", f.mode, "fresh | reuse", [&f](RunConfig& c) { c.trial.mode = f.mode; });
  simulate.flag("--population-risk", f.population_risk, "analytic | mc",
                [&f](RunConfig& c) { c.trial.population_risk = f.population_risk; });
  simulate.flag("--test-size", f.test_size, "Test set size for mc population risk",
                [&f](RunConfig& c) { c.trial.test_size = f.test_size; });

  Subcommand& fsigma = make("fsigma", "Table of iterated correlation maps");
  add_grid_options(fsigma, f, "x");
  fsigma.flag("--t", f.ts, "Iterate counts", [&f](RunConfig& c) { c.grid.t = f.ts; });

  Subcommand& gsigma = make("gsigma", "Table of the KL divergence G");
  add_grid_options(gsigma, f, "alpha");
  gsigma.flag("--tol", f.tol, "Quadrature tolerance", [&f](RunConfig& c) { c.bound.tol = f.tol; });

  Subcommand& sweep = make("sweep", "Bound curves over a parameter grid");
  sweep.flag("--sigma", f.sigmas, "Sigma axis", [&f](RunConfig& c) { c.sweep.sigma = f.sigmas; });
  sweep.flag("--n", f.ns, "n axis", [&f](RunConfig& c) { c.sweep.n = f.ns; });
  sweep.flag("--m", f.ms, "m axis", [&f](RunConfig& c) { c.sweep.m = f.ms; });
  sweep.flag("--t", f.ts, "t axis", [&f](RunConfig& c) { c.sweep.t = f.ts; });
  sweep.flag("--method", f.method, "theorem2 | corollary1",
             [&f](RunConfig& c) { c.bound.method = f.method; });

  try {
    app.parse(argc, argv);
  } catch (const CLI::Success& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitConfig;
  }

  for (auto& [name, sub] : subs) {
    if (!sub.app->parsed()) continue;
    try {
      return run(name, sub);
    } catch (const ConfigError& e) {
      std::cerr << "gmmssl: configuration error: " << e.what() << "\n";
      return kExitConfig;
    } catch (const NonConvergenceError& e) {
      std::cerr << "gmmssl: numerical failure: " << e.what() << "\n";
      return kExitNumerical;
    } catch (const DegenerateInputError& e) {
      std::cerr << "gmmssl: numerical failure: " << e.what() << "\n";
      return kExitNumerical;
    } catch (const std::invalid_argument& e) {
      std::cerr << "gmmssl: configuration error: " << e.what() << "\n";
      return kExitConfig;
    } catch (const std::domain_error& e) {
      std::cerr << "gmmssl: configuration error: " << e.what() << "\n";
      return kExitConfig;
    } catch (const fs::filesystem_error& e) {
      std::cerr << "gmmssl: configuration error: " << e.what() << "\n";
      return kExitConfig;
    } catch (const std::exception& e) {
      std::cerr << "gmmssl: numerical failure: " << e.what() << "\n";
      return kExitNumerical;
    }
  }
  return kExitConfig;
}
