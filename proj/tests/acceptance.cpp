// Acceptance run: one PASS/FAIL line per criterion, nonzero exit on any FAIL.
#include <sys/wait.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <sstream>
#include <string>
#include <unistd.h>
#include <vector>

#include "gmmssl/bounds.hpp"
#include "gmmssl/divergence.hpp"
#include "gmmssl/evolution.hpp"
#include "gmmssl/quadrature.hpp"
#include "gmmssl/simulator.hpp"
#include "gmmssl/specfn.hpp"
#include "hp_oracle.hpp"

using namespace gmmssl;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool ok = true;
  std::string detail;

  void require(bool cond, const std::string& what) {
    if (!cond && ok) detail = what;
    ok = ok && cond;
  }
};

std::string fmt(const char* f, double a, double b = 0, double c = 0) {
  char buf[256];
  std::snprintf(buf, sizeof buf, f, a, b, c);
  return buf;
}

double combined(double a, double b) { return std::sqrt(a * a + b * b); }

Outcome special_functions() {
  Outcome o;
  for (int i = 0; i <= 1600; ++i) {
    const double x = -8.0 + 0.01 * i;
    o.require(std::abs(double(std_normal_cdf(x)) - oracle::cdf_d(x)) <= 1e-12,
              fmt("cdf table error at x=%g", x));
    o.require(std::abs(double(std_normal_cdf(-x)) - (1.0 - double(std_normal_cdf(x)))) <= 1e-13,
              fmt("symmetry at x=%g", x));
    if (x >= 0) {
      const double ref = oracle::upper_tail_d(x);
      o.require(std::abs(double(q_function(x)) - ref) <= 1e-10 * ref, fmt("Q relative error at x=%g", x));
    }
  }
  for (int i = 1; i < 1000; ++i) {
    const double p = i / 1000.0;
    const double back = double(std_normal_cdf(std_normal_quantile(p)));
    o.require(std::abs(back - p) <= 1e-10 * p, fmt("round trip at p=%g", p));
  }
  for (double p : {1e-300, 1e-100, 1e-12, 1e-6}) {
    const double x = std_normal_quantile(p);
    o.require(std::abs(double(std_normal_cdf(x)) - p) <= 1e-10 * p, fmt("tail round trip p=%g", p));
    o.require(std::abs(x - oracle::quantile_d(p)) <= 1e-10 * std::abs(x), fmt("quantile oracle p=%g", p));
  }
  return o;
}

Outcome evolution_structure() {
  Outcome o;
  const double sigmas[] = {0.3, 0.5, 0.7};
  for (double s : sigmas) {
    o.require(std::abs(f_sigma(0.0, s)) <= 1e-12, "F(0)");
    o.require(std::abs(f_sigma(1.0, s) - 1.0) <= 1e-12, "F(1)");
    o.require(std::abs(f_sigma(-1.0, s) + 1.0) <= 1e-12, "F(-1)");
    for (int i = 0; i <= 200; ++i) {
      const double x = -1.0 + 0.01 * i;
      o.require(std::abs(f_sigma(-x, s) + f_sigma(x, s)) <= 1e-12, fmt("oddness x=%g s=%g", x, s));
      if (x < 0) continue;
      double prev = x;
      for (int t = 1; t <= 6; ++t) {
        const double cur = f_sigma_iter(x, s, t);
        o.require(cur >= prev, fmt("expansion x=%g s=%g t=%g", x, s, t));
        prev = cur;
      }
    }
  }
  for (int i = 0; i <= 200; ++i) {
    const double x = -1.0 + 0.01 * i;
    const double a = std::abs(f_sigma(x, 0.3)), b = std::abs(f_sigma(x, 0.5)), c = std::abs(f_sigma(x, 0.7));
    o.require(a >= b && b >= c, fmt("sigma ordering x=%g", x));
  }
  return o;
}

Outcome divergence_correctness() {
  Outcome o;
  std::uint64_t seed = 1000;
  double worst = 0.0;
  for (double s : {0.3, 0.5, 0.7}) {
    for (double a : {0.1, 0.5, 0.9}) {
      const auto quad = g_sigma(a, s);
      const auto mc = g_sigma_mc(a, s, 1'000'000, seed++);
      const double z = std::abs(quad.value - mc.estimate) / combined(mc.std_error, quad.abs_error_estimate);
      worst = std::max(worst, z);
      o.require(z <= 3.0, fmt("quad vs mc alpha=%g sigma=%g z=%g", a, s, z));
    }
  }
  for (double s : {0.3, 0.5, 0.7}) {
    for (double a : {0.1, 0.5, 0.9, 1.0}) {
      const double shift = 2 * a / s;
      const double b = 2 * std::sqrt((1 - a) * (1 + a)) / s;
      auto p = [&](double u, double w) {
        return std_normal_pdf(u - shift) * std_normal_pdf(w - b) + std_normal_pdf(u) * std_normal_pdf(w);
      };
      const auto r = integrate_2d(p, Rectangle{std::min(0.0, shift) - 10, a / s, -10, b + 10}, 1e-10);
      o.require(std::abs(r.value - 1.0) <= 1e-8, fmt("normalization alpha=%g sigma=%g", a, s));
    }
    double prev = 1e300;
    for (int i = 1; i <= 50; ++i) {
      const double a = i / 50.0;
      const double g = g_sigma(a, s).value;
      o.require(g <= prev, fmt("G increases at alpha=%g sigma=%g", a, s));
      prev = g;
    }
  }
  for (int i = 0; i <= 10; ++i) {
    const double a = 0.9 + 0.01 * i;
    const double g3 = g_sigma(a, 0.3).value, g5 = g_sigma(a, 0.5).value, g7 = g_sigma(a, 0.7).value;
    o.require(g7 > g5 && g5 > g3, fmt("sigma ordering at alpha=%g", a));
  }
  if (o.ok) o.detail = fmt("worst |z| = %.2f", worst);
  return o;
}

Outcome dimension_collapse() {
  Outcome o;
  std::uint64_t seed = 77;
  for (auto [a, s] : {std::pair{0.5, 0.5}, std::pair{0.9, 0.7}, std::pair{-0.3, 0.6}}) {
    const auto reduced = g_sigma(a, s);
    for (int d : {2, 5, 10}) {
      const auto mc = g_sigma_full_dim_mc(a, s, d, 400'000, seed++);
      const double z = std::abs(reduced.value - mc.estimate) / combined(mc.std_error, reduced.abs_error_estimate);
      o.require(z <= 3.0, fmt("alpha=%g sigma=%g z=%g", a, s, z) + " d=" + std::to_string(d));
    }
  }
  return o;
}

BoundConfig bound_cfg(double sigma, int n) {
  BoundConfig cfg;
  cfg.params.sigma = sigma;
  cfg.params.n = n;
  cfg.params.d = 2;
  return cfg;
}

Outcome theorem_curve() {
  Outcome o;
  const BoundConfig cfg = bound_cfg(0.6, 10);
  std::vector<double> b = {gen0_bound(cfg)};
  for (int t = 1; t <= 6; ++t) b.push_back(gen_t_bound(t, cfg));
  for (int t = 2; t <= 6; ++t) o.require(b[t] <= b[t - 1], fmt("bound rises at t=%g", t));
  const double late = b[2] - b[3], early = b[0] - b[1];
  o.require(late < 0.05 * early, fmt("decrement ratio %g", late / early));
  if (o.ok) o.detail = fmt("gen0=%.4f gen1=%.4f gen6=%.4f", b[0], b[1], b[6]);
  return o;
}

Outcome crossover() {
  Outcome o;
  const std::vector<int> grid = {2, 3, 5, 10, 20, 50, 100, 200};
  BoundConfig base;
  const auto rep = gen01_crossover(0.7, 2, grid, base);
  o.require(rep.crossover_n.has_value(), "no n with gen1 > gen0");
  o.require(rep.rows.front().gen1 < rep.rows.front().gen0, "ordering at smallest n not reversed");
  BoundConfig scaled = base;
  const auto k = resolve_constants(bound_cfg(0.7, 10));
  scaled.c1 = k.c1;
  scaled.c2 = k.c1 + 7.5 * k.spread();
  const auto rep2 = gen01_crossover(0.7, 2, grid, scaled);
  o.require(rep.crossover_n == rep2.crossover_n, "crossover n changes with scale");
  for (std::size_t i = 0; i < rep.rows.size(); ++i) {
    o.require(std::abs(rep.rows[i].ratio() - rep2.rows[i].ratio()) <= 1e-12,
              fmt("ratio drift at n=%g", rep.rows[i].n));
  }
  if (o.ok && rep.crossover_n) o.detail = "crossover at n=" + std::to_string(*rep.crossover_n);
  return o;
}

Outcome reuse_ordering() {
  Outcome o;
  BoundConfig small = bound_cfg(0.6, 10), large = bound_cfg(0.6, 10);
  small.params.m = 100;
  small.params.w = small.params.reuse_weight();
  large.params.m = 1000;
  large.params.w = large.params.reuse_weight();
  const BoundConfig fresh = bound_cfg(0.6, 10);
  for (int t = 1; t <= 5; ++t) {
    const double bs = gen_t_bound_reuse(t, small), bl = gen_t_bound_reuse(t, large);
    const double bf = gen_t_bound(t, fresh);
    o.require(bs >= bl, fmt("m=100 below m=1000 at t=%g", t));
    o.require(std::abs(bl - bf) <= 0.05 * bf, fmt("reuse vs fresh gap %g at t=%g", std::abs(bl - bf) / bf, t));
  }
  return o;
}

TrialConfig trial_cfg(double sigma, int d, int n, int m, int tau, int trials, std::uint64_t seed) {
  TrialConfig cfg;
  cfg.params = MixtureParams{sigma, d, n, m, tau, 0.0};
  cfg.trials = trials;
  cfg.seed = seed;
  return cfg;
}

Outcome empirical_saturation() {
  Outcome o;
  const auto res = run_trials(trial_cfg(0.6, 50, 10, 1000, 20, 2000, 20240601));
  const auto& r = res.rows;
  const double drop = r[0].gen.mean - r[1].gen.mean;
  const double se = combined(r[0].gen.stderr_mean, r[1].gen.stderr_mean);
  o.require(drop > 5 * se, fmt("drop %g vs 5 stderr %g", drop, 5 * se));
  double spread = 0.0;
  for (int t = 3; t <= 20; ++t) spread = std::max(spread, std::abs(r[t].gen.mean - r[2].gen.mean));
  o.require(spread < 0.2 * drop, fmt("late variation %g vs %g", spread, 0.2 * drop));
  if (o.ok) o.detail = fmt("gen0=%.4f gen1=%.4f max|gen_t-gen2|=%.4f", r[0].gen.mean, r[1].gen.mean, spread);
  return o;
}

Outcome empirical_large_sigma() {
  Outcome o;
  const auto res = run_trials(trial_cfg(3.0, 2, 20, 1000, 10, 2000, 20240602));
  const auto& r = res.rows;
  for (int t = 1; t <= 10; ++t) {
    const double se = combined(r[0].gen.stderr_mean, r[t].gen.stderr_mean);
    o.require(r[t].gen.mean >= r[0].gen.mean - 2 * se, fmt("gen_%g below gen_0 by %g", t, r[0].gen.mean - r[t].gen.mean));
  }
  if (o.ok) o.detail = fmt("gen0=%.4f gen1=%.4f gen10=%.4f", r[0].gen.mean, r[1].gen.mean, r[10].gen.mean);
  return o;
}

SummaryStat stat(const std::vector<double>& v) { return detail::summarize_column(v); }

Outcome consistency_oracles() {
  Outcome o;
  const double sigma = 0.6;
  TrialConfig cfg = trial_cfg(sigma, 5, 10, 10'000, 3, 1000, 20240603);
  const auto res = run_trials(cfg);
  for (int t = 1; t <= 3; ++t) {
    std::vector<double> diff, rho, pred;
    for (const auto& tr : res.traces) {
      diff.push_back(tr.pseudo_err[t] - double(q_function(tr.rho[t - 1] / sigma)));
      rho.push_back(tr.rho[t]);
      pred.push_back(f_sigma_iter(tr.rho[0], sigma, t));
    }
    const auto d = stat(diff);
    o.require(std::abs(d.mean) <= 4 * d.stderr_mean, fmt("pseudo error at t=%g off by %g", t, d.mean));
    const auto sr = stat(rho), sp = stat(pred);
    const double z = (sr.mean - sp.mean) / combined(sr.stderr_mean, sp.stderr_mean);
    o.require(std::abs(z) <= 4.0, fmt("rho at t=%g: mean %.6f vs predicted %.6f", t, sr.mean, sp.mean) +
                                      fmt(" (z=%.1f)", z));
  }
  TrialConfig mc = trial_cfg(sigma, 5, 10, 1000, 3, 400, 20240604);
  TrialConfig exact = mc;
  mc.population_risk = PopulationRiskMethod::mc;
  mc.test_size = 10'000;
  const auto rm = run_trials(mc), re = run_trials(exact);
  for (int t = 0; t <= 3; ++t) {
    std::vector<double> diff;
    for (std::size_t i = 0; i < rm.traces.size(); ++i) {
      diff.push_back(rm.traces[i].pop_risk[t] - re.traces[i].pop_risk[t]);
    }
    const auto d = stat(diff);
    o.require(std::abs(d.mean) <= 4 * d.stderr_mean, fmt("population risk at t=%g off by %g", t, d.mean));
  }
  return o;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

int run_cli(const std::string& threads, const std::string& args) {
  const std::string cmd = "GMM_SSL_THREADS=" + threads + " \"" + GMMSSL_CLI_PATH + "\" " + args +
                          " > /dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

Outcome determinism() {
  Outcome o;
  const fs::path root = fs::temp_directory_path() / ("gmmssl_accept_" + std::to_string(::getpid()));
  fs::remove_all(root);
  const std::vector<std::pair<std::string, std::string>> commands = {
      {"bound", "bound --sigma 0.6 --n 10 --t-max 4"},
      {"corollary", "bound --sigma 0.6 --method corollary1 --m 100 --t-max 3"},
      {"simulate", "simulate --trials 300 --tau 6 --seed 7"},
      {"simulate_mc", "simulate --trials 50 --tau 2 --d 3 --population-risk mc --test-size 500"},
      {"fsigma", "fsigma --sigma 0.3 0.7 --t 1 2 3 --points 41"},
      {"gsigma", "gsigma --points 11"},
      {"sweep", "sweep --sigma 0.5 0.7 --n 5 20 --t 0 1 2"},
  };
  for (const auto& [name, args] : commands) {
    const fs::path first = root / name / "first", second = root / name / "second";
    o.require(run_cli("1", args + " --out \"" + first.string() + "\"") == 0, name + ": first run failed");
    o.require(run_cli("4", std::string(args.substr(0, args.find(' '))) + " --config \"" +
                               (first / "manifest.json").string() + "\" --out \"" +
                               second.string() + "\"") == 0,
              name + ": manifest rerun failed");
    int files = 0;
    for (const auto& e : fs::recursive_directory_iterator(first)) {
      if (e.path().extension() != ".csv") continue;
      ++files;
      const fs::path twin = second / fs::relative(e.path(), first);
      o.require(fs::exists(twin) && slurp(e.path()) == slurp(twin),
                name + ": " + fs::relative(e.path(), first).string() + " differs");
    }
    o.require(files > 0, name + ": no CSV written");
  }
  fs::remove_all(root);
  return o;
}

struct Criterion {
  int id;
  const char* title;
  double budget_seconds;
  std::function<Outcome()> check;
};

}  // namespace

int main() {
  const std::vector<Criterion> criteria = {
      {1, "special-function fidelity", 1, special_functions},
      {2, "F_sigma structure", 5, evolution_structure},
      {3, "G_sigma correctness", 120, divergence_correctness},
      {4, "dimension collapse", 120, dimension_collapse},
      {5, "bound curve shape", 60, theorem_curve},
      {6, "gen0/gen1 crossover", 120, crossover},
      {7, "reuse bound ordering", 120, reuse_ordering},
      {8, "empirical saturation (sigma=0.6, d=50)", 300, empirical_saturation},
      {9, "empirical large-sigma regime (sigma=3)", 120, empirical_large_sigma},
      {10, "self-training consistency oracles", 180, consistency_oracles},
      {11, "CLI determinism across thread counts", 600, determinism},
  };
  int failures = 0;
  for (const auto& c : criteria) {
    const auto start = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.check();
    } catch (const std::exception& e) {
      o.ok = false;
      o.detail = std::string("exception: ") + e.what();
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    if (o.ok && secs > c.budget_seconds) {
      o.ok = false;
      o.detail = fmt("over time budget of %gs", c.budget_seconds);
    }
    failures += !o.ok;
    std::printf("[%s] criterion %2d: %s (%.1fs)%s%s\n", o.ok ? "PASS" : "FAIL", c.id, c.title, secs,
                o.detail.empty() ? "" : " : ", o.detail.c_str());
    std::fflush(stdout);
  }
  std::printf("%d of %zu criteria passed\n", static_cast<int>(criteria.size()) - failures, criteria.size());
  return failures == 0 ? 0 : 1;
}
