// Subcommand implementations. Each takes a resolved RunConfig and returns the
// tables (and optional plots) it produced; writing them is left to main.
#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "config.hpp"
#include "gmmssl/bounds.hpp"
#include "gmmssl/divergence.hpp"
#include "gmmssl/evolution.hpp"
#include "gmmssl/simulator.hpp"
#include "output.hpp"

namespace gmmssl::cli {

struct Artifact {
  std::string name;  // file stem, relative to the output directory
  Table table;
  std::optional<PlotSpec> plot;
};

struct CommandOutput {
  std::vector<Artifact> artifacts;
  bool partial_failure = false;
};

namespace detail {

inline Cell num(double v) { return Cell{v}; }
inline Cell integer(std::int64_t v) { return Cell{v}; }
inline Cell text(std::string s) { return Cell{std::move(s)}; }

inline double require_sigma(const RunConfig& cfg) {
  if (!cfg.params.sigma) {
    throw ConfigError("missing required field 'sigma' (pass --sigma or set params.sigma)");
  }
  return *cfg.params.sigma;
}

inline BoundMethod parse_method(const std::string& s) {
  if (s == "theorem2") return BoundMethod::theorem2;
  if (s == "corollary1") return BoundMethod::corollary1;
  if (s == "taylor_gen1") return BoundMethod::taylor_gen1;
  if (s == "gen0") return BoundMethod::gen0;
  throw ConfigError("bound.method must be one of theorem2, corollary1, taylor_gen1, gen0; got '" +
                    s + "'");
}

inline BoundConfig make_bound_config(const RunConfig& cfg, double sigma, int n, int m) {
  BoundConfig b;
  b.params.sigma = sigma;
  b.params.d = cfg.params.d.value_or(2);
  b.params.n = n;
  b.params.m = m;
  b.params.tau = cfg.params.tau;
  b.delta = cfg.bound.delta;
  b.epsilon = cfg.bound.epsilon;
  b.r = cfg.bound.r;
  b.c = cfg.bound.c;
  b.c1 = cfg.bound.c1;
  b.c2 = cfg.bound.c2;
  b.tol = cfg.bound.tol;
  if (cfg.bound.expectation == "quad2d") {
    b.expectation.method = ExpectationMethod::quad2d;
  } else if (cfg.bound.expectation == "mc") {
    b.expectation.method = ExpectationMethod::mc;
  } else {
    throw ConfigError("bound.expectation must be quad2d or mc");
  }
  if (cfg.bound.samples < 1) throw ConfigError("bound.samples must be positive");
  b.expectation.samples = static_cast<std::size_t>(cfg.bound.samples);
  b.expectation.seed = cfg.seed;
  if (cfg.bound.g_route == "projected") {
    b.g_route = GRoute::projected;
  } else if (cfg.bound.g_route == "quadrature2d") {
    b.g_route = GRoute::quadrature2d;
  } else {
    throw ConfigError("bound.g_route must be projected or quadrature2d");
  }
  b.params.w = 0.0;
  if (parse_method(cfg.bound.method) == BoundMethod::corollary1) {
    b.params.w = cfg.params.w ? *cfg.params.w : b.params.reuse_weight();
  }
  try {
    validate(b);
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  } catch (const std::domain_error& e) {
    throw ConfigError(e.what());
  }
  return b;
}

inline Table bound_table(const BoundCurve& curve) {
  Table t;
  t.header = {"t", "bound", "method", "sigma", "d", "n", "m", "w", "epsilon", "delta"};
  const MixtureParams& p = curve.config.params;
  for (std::size_t i = 0; i < curve.t_values.size(); ++i) {
    t.rows.push_back({integer(curve.t_values[i]), num(curve.bounds[i]),
                      text(to_string(curve.method)), num(p.sigma), integer(p.d), integer(p.n),
                      integer(p.m), num(p.w), num(curve.config.epsilon),
                      num(curve.config.delta)});
  }
  return t;
}

inline PlotSpec bound_plot(const BoundCurve& curve) {
  PlotSpec plot;
  plot.title = "Generalization error bound";
  plot.x_label = "t";
  plot.y_label = "bound";
  Series s;
  s.label = to_string(curve.method);
  for (std::size_t i = 0; i < curve.t_values.size(); ++i) {
    s.x.push_back(curve.t_values[i]);
    s.y.push_back(curve.bounds[i]);
  }
  plot.series.push_back(std::move(s));
  return plot;
}

}  // namespace detail

/// Fills in command-specific defaults so the manifest records final values.
inline void resolve_defaults(const std::string& command, RunConfig& cfg) {
  if (command == "bound" || command == "sweep") {
    if (!cfg.params.d) cfg.params.d = 2;
    detail::parse_method(cfg.bound.method);
    if (cfg.bound.t_max < 0) throw ConfigError("bound.t_max must be >= 0");
  }
  if (command == "bound") detail::require_sigma(cfg);
  if (command == "simulate") {
    if (!cfg.params.sigma) cfg.params.sigma = 0.6;
    if (!cfg.params.d) cfg.params.d = 50;
  }
  if (command == "fsigma" && !cfg.grid.sigma) cfg.grid.sigma = std::vector<double>{0.5};
  if (command == "gsigma" && !cfg.grid.sigma) cfg.grid.sigma = std::vector<double>{0.3, 0.5, 0.7};
  if (command == "sweep") {
    if (!cfg.sweep.sigma) cfg.sweep.sigma = std::vector<double>{detail::require_sigma(cfg)};
    if (!cfg.sweep.n) cfg.sweep.n = std::vector<int>{cfg.params.n};
    if (!cfg.sweep.m) cfg.sweep.m = std::vector<int>{cfg.params.m};
    if (!cfg.sweep.t) {
      std::vector<int> ts;
      for (int t = 0; t <= cfg.bound.t_max; ++t) ts.push_back(t);
      cfg.sweep.t = ts;
    }
    if (cfg.sweep.sigma->empty()) throw ConfigError("sweep.sigma axis is empty");
    if (cfg.sweep.n->empty()) throw ConfigError("sweep.n axis is empty");
    if (cfg.sweep.m->empty()) throw ConfigError("sweep.m axis is empty");
    if (cfg.sweep.t->empty()) throw ConfigError("sweep.t axis is empty");
    for (int t : *cfg.sweep.t) {
      if (t < 0) throw ConfigError("sweep.t values must be >= 0");
    }
  }
}

inline CommandOutput cmd_bound(const RunConfig& cfg) {
  const BoundConfig b = detail::make_bound_config(cfg, *cfg.params.sigma, cfg.params.n,
                                                  cfg.params.m);
  const BoundCurve curve = bound_curve(detail::parse_method(cfg.bound.method), b,
                                       cfg.bound.t_max);
  CommandOutput out;
  out.artifacts.push_back({"bound", detail::bound_table(curve), detail::bound_plot(curve)});
  return out;
}

inline TrialConfig make_trial_config(const RunConfig& cfg) {
  TrialConfig tc;
  tc.params.sigma = *cfg.params.sigma;
  tc.params.d = *cfg.params.d;
  tc.params.n = cfg.params.n;
  tc.params.m = cfg.params.m;
  tc.params.tau = cfg.params.tau;
  tc.params.w = 0.0;
  if (cfg.trial.mode == "fresh") {
    tc.mode = TrainingMode::fresh;
  } else if (cfg.trial.mode == "reuse") {
    tc.mode = TrainingMode::reuse;
  } else {
    throw ConfigError("trial.mode must be fresh or reuse");
  }
  if (cfg.trial.population_risk == "analytic") {
    tc.population_risk = PopulationRiskMethod::analytic;
  } else if (cfg.trial.population_risk == "mc") {
    tc.population_risk = PopulationRiskMethod::mc;
  } else {
    throw ConfigError("trial.population_risk must be analytic or mc");
  }
  tc.test_size = cfg.trial.test_size;
  tc.trials = cfg.trial.trials;
  tc.seed = cfg.seed;
  try {
    tc.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
  return tc;
}

inline CommandOutput cmd_simulate(const RunConfig& cfg) {
  using detail::integer;
  using detail::num;
  const TrialConfig tc = make_trial_config(cfg);
  const SimulationResult res = run_trials(tc);
  Table t;
  t.header = {"t", "gen_mean", "gen_stderr", "rho_mean", "rho_stderr", "pseudo_err_mean",
              "pseudo_err_stderr", "train_risk_mean", "pop_risk_mean", "trials", "seed"};
  PlotSpec plot;
  plot.title = "Empirical generalization error";
  plot.x_label = "t";
  plot.y_label = "mean gen";
  Series s;
  s.label = "gen_mean";
  for (const auto& r : res.rows) {
    t.rows.push_back({integer(r.t), num(r.gen.mean), num(r.gen.stderr_mean), num(r.rho.mean),
                      num(r.rho.stderr_mean), num(r.pseudo_err.mean),
                      num(r.pseudo_err.stderr_mean), num(r.train_risk_mean),
                      num(r.pop_risk_mean), integer(tc.trials),
                      integer(static_cast<std::int64_t>(tc.seed))});
    s.x.push_back(r.t);
    s.y.push_back(r.gen.mean);
  }
  plot.series.push_back(std::move(s));
  CommandOutput out;
  out.artifacts.push_back({"simulate", std::move(t), std::move(plot)});
  return out;
}

inline std::vector<double> grid_points(const GridSection& g) {
  if (g.points < 1) throw ConfigError("grid.points must be >= 1");
  if (!(g.x_min <= g.x_max)) throw ConfigError("grid.x_min must not exceed grid.x_max");
  if (g.points == 1) return {g.x_min};
  std::vector<double> xs;
  for (int i = 0; i < g.points; ++i) {
    xs.push_back(i == g.points - 1 ? g.x_max
                                   : g.x_min + (g.x_max - g.x_min) * i / (g.points - 1));
  }
  return xs;
}

inline void check_unit_grid(const GridSection& g, const char* what) {
  if (!(g.x_min >= -1.0 && g.x_max <= 1.0)) {
    throw ConfigError(std::string(what) + " grid must lie inside [-1, 1]");
  }
}

inline void check_sigmas(const std::vector<double>& sigmas) {
  if (sigmas.empty()) throw ConfigError("grid.sigma is empty");
  for (double s : sigmas) {
    if (!(s > 0.0) || !std::isfinite(s)) throw ConfigError("grid.sigma values must be positive");
  }
}

inline CommandOutput cmd_fsigma(const RunConfig& cfg) {
  using detail::integer;
  using detail::num;
  check_unit_grid(cfg.grid, "x");
  check_sigmas(*cfg.grid.sigma);
  if (cfg.grid.t.empty()) throw ConfigError("grid.t is empty");
  for (int t : cfg.grid.t) {
    if (t < 0) throw ConfigError("grid.t values must be >= 0");
  }
  const std::vector<double> xs = grid_points(cfg.grid);
  Table table;
  table.header = {"x", "t", "sigma", "value"};
  PlotSpec plot;
  plot.title = "Correlation evolution";
  plot.x_label = "x";
  plot.y_label = "F^(t)(x)";
  for (double sigma : *cfg.grid.sigma) {
    for (int t : cfg.grid.t) {
      Series s;
      s.label = "sigma=" + format_double(sigma) + " t=" + std::to_string(t);
      for (double x : xs) {
        const double v = f_sigma_iter(x, sigma, t);
        table.rows.push_back({num(x), integer(t), num(sigma), num(v)});
        s.x.push_back(x);
        s.y.push_back(v);
      }
      plot.series.push_back(std::move(s));
    }
  }
  CommandOutput out;
  out.artifacts.push_back({"fsigma", std::move(table), std::move(plot)});
  return out;
}

inline CommandOutput cmd_gsigma(const RunConfig& cfg) {
  using detail::num;
  check_unit_grid(cfg.grid, "alpha");
  check_sigmas(*cfg.grid.sigma);
  if (!(cfg.bound.tol > 0.0)) throw ConfigError("bound.tol must be positive");
  const std::vector<double> alphas = grid_points(cfg.grid);
  Table table;
  table.header = {"alpha", "sigma", "value", "abs_err_estimate"};
  PlotSpec plot;
  plot.title = "KL divergence G";
  plot.x_label = "alpha";
  plot.y_label = "G";
  plot.log_y = true;
  for (double sigma : *cfg.grid.sigma) {
    Series s;
    s.label = "sigma=" + format_double(sigma);
    for (double a : alphas) {
      const IntegrationResult r = g_sigma(a, sigma, cfg.bound.tol);
      table.rows.push_back({num(a), num(sigma), num(r.value), num(r.abs_error_estimate)});
      s.x.push_back(a);
      s.y.push_back(r.value);
    }
    plot.series.push_back(std::move(s));
  }
  CommandOutput out;
  out.artifacts.push_back({"gsigma", std::move(table), std::move(plot)});
  return out;
}

/// Bound curves over sigma x n x m (each at the t axis), an index of the
/// files, and the gen0 / gen1 crossover over the n axis.
inline CommandOutput cmd_sweep(const RunConfig& cfg) {
  using detail::integer;
  using detail::num;
  using detail::text;
  const BoundMethod method = detail::parse_method(cfg.bound.method);
  std::vector<int> ts = *cfg.sweep.t;
  std::sort(ts.begin(), ts.end());
  ts.erase(std::unique(ts.begin(), ts.end()), ts.end());
  std::vector<int> ns = *cfg.sweep.n;
  std::sort(ns.begin(), ns.end());
  ns.erase(std::unique(ns.begin(), ns.end()), ns.end());

  CommandOutput out;
  Table index;
  index.header = {"file", "sigma", "n", "m", "status", "message"};
  Table cross;
  cross.header = {"sigma", "m", "n", "gen0", "gen1", "ratio"};
  Table summary;
  summary.header = {"sigma", "m", "crossover_n"};
  // Every point is validated before any work, so a bad axis value fails fast.
  for (double sigma : *cfg.sweep.sigma) {
    for (int n : ns) {
      for (int m : *cfg.sweep.m) detail::make_bound_config(cfg, sigma, n, m);
    }
  }
  int k = 0;
  for (double sigma : *cfg.sweep.sigma) {
    for (int m : *cfg.sweep.m) {
      std::optional<int> crossover;
      bool complete = true;
      for (int n : ns) {
        const std::string name = "points/point_" + std::to_string(k++);
        const BoundConfig b = detail::make_bound_config(cfg, sigma, n, m);
        try {
          BoundCurve curve;
          curve.method = method;
          curve.config = b;
          curve.constants = resolve_constants(b);
          const double gen0 = gen0_bound(b);
          std::optional<double> gen1;
          for (int t : ts) {
            double v = 0.0;
            if (t == 0) {
              v = gen0;
            } else if (method == BoundMethod::corollary1) {
              v = gen_t_bound_reuse(t, b);
            } else {
              v = gen_t_bound(t, b);
              if (t == 1) gen1 = v;
            }
            curve.t_values.push_back(t);
            curve.bounds.push_back(v);
          }
          if (!gen1) gen1 = gen_t_bound(1, b);
          cross.rows.push_back({num(sigma), integer(m), integer(n), num(gen0), num(*gen1),
                                num(*gen1 / gen0)});
          if (!crossover && *gen1 > gen0) crossover = n;
          out.artifacts.push_back({name, detail::bound_table(curve), std::nullopt});
          index.rows.push_back({text(name + ".csv"), num(sigma), integer(n), integer(m),
                                text("ok"), text("")});
        } catch (const std::exception& e) {
          out.partial_failure = true;
          complete = false;
          index.rows.push_back({text(name + ".csv"), num(sigma), integer(n), integer(m),
                                text("failed"), text(e.what())});
        }
      }
      std::string verdict = crossover ? std::to_string(*crossover) : "none";
      if (!crossover && !complete) verdict = "unknown";
      summary.rows.push_back({num(sigma), integer(m), text(verdict)});
    }
  }
  out.artifacts.push_back({"index", std::move(index), std::nullopt});
  out.artifacts.push_back({"crossover", std::move(cross), std::nullopt});
  out.artifacts.push_back({"crossover_summary", std::move(summary), std::nullopt});
  return out;
}

}  // namespace gmmssl::cli
