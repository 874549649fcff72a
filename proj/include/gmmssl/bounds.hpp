// Generalization-error bounds for self-training on the binary Gaussian
// mixture: sub-Gaussian constants, the t = 0 bound, the t >= 1 bounds with
// fresh unlabelled batches and with reused labelled data, the Taylor form of
// the t = 1 bound, and the expectation over the randomness of theta_0.
//
// theta_0 = mu + (sigma/sqrt n)(xi0 mu + mu_perp) with xi0 ~ N(0,1) and
// |mu_perp|^2 ~ chi-square(d - 1); every bound term depends on theta_0 only
// through (xi0, |mu_perp|).
#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <numbers>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "gmmssl/divergence.hpp"
#include "gmmssl/evolution.hpp"
#include "gmmssl/quadrature.hpp"
#include "gmmssl/rng.hpp"
#include "gmmssl/specfn.hpp"

namespace gmmssl {

enum class ExpectationMethod { quad2d, mc };

struct ExpectationSpec {
  ExpectationMethod method = ExpectationMethod::quad2d;
  std::size_t samples = 100'000;  // mc only
  std::uint64_t seed = 20240601;  // mc only
};

/// How G_sigma is evaluated inside the bounds. Both routes compute the same
/// integral; the projected one is a 1-D rewrite and is far cheaper.
enum class GRoute { projected, quadrature2d };

struct BoundConfig {
  MixtureParams params;
  double delta = 0.05;
  double epsilon = 0.0;
  // Unset radii and loss endpoints are filled in by resolve_constants.
  std::optional<double> r;
  std::optional<double> c;
  std::optional<double> c1;
  std::optional<double> c2;
  double tol = 1e-7;
  ExpectationSpec expectation;
  GRoute g_route = GRoute::projected;
};

/// Fully resolved radii and loss interval for one configuration.
struct BoundConstants {
  double r = 0.0;
  double c = 0.0;
  double c1 = 0.0;
  double c2 = 0.0;
  double spread() const { return c2 - c1; }
};

enum class BoundMethod { theorem2, corollary1, taylor_gen1, gen0 };

inline const char* to_string(BoundMethod m) {
  switch (m) {
    case BoundMethod::theorem2: return "theorem2";
    case BoundMethod::corollary1: return "corollary1";
    case BoundMethod::taylor_gen1: return "taylor_gen1";
    case BoundMethod::gen0: return "gen0";
  }
  return "?";
}

struct BoundCurve {
  std::vector<int> t_values;
  std::vector<double> bounds;
  BoundMethod method = BoundMethod::theorem2;
  BoundConfig config;
  BoundConstants constants;
};

/// Expectation value with its error measure: a quadrature error estimate for
/// quad2d, a standard error for mc.
struct Expectation {
  double value = 0.0;
  double uncertainty = 0.0;
  std::size_t evaluations = 0;
};

/// Probability that an N(0, sigma^2 I_d) vector leaves the l-infinity ball of
/// radius r.
inline Probability delta_rd(double r, int d, double sigma) {
  if (!(r > 0.0)) throw std::invalid_argument("delta_rd: r must be positive");
  if (d < 1) throw std::invalid_argument("delta_rd: d must be >= 1");
  if (!(sigma > 0.0)) throw std::invalid_argument("delta_rd: sigma must be positive");
  // 1 - (1 - 2 Phi(-r/s))^d, kept accurate when 2 Phi(-r/s) is tiny.
  const double tail = 2.0 * std_normal_cdf(-r / sigma);
  return Probability(std::clamp(-std::expm1(d * std::log1p(-tail)), 0.0, 1.0));
}

/// Radius r with delta_rd(r, d, sigma) = delta_target.
inline double solve_r(double delta_target, int d, double sigma) {
  if (!(delta_target > 0.0 && delta_target < 1.0)) {
    throw std::domain_error("solve_r: delta must lie in (0,1)");
  }
  if (d < 1) throw std::invalid_argument("solve_r: d must be >= 1");
  if (!(sigma > 0.0)) throw std::invalid_argument("solve_r: sigma must be positive");
  const double tail = -std::expm1(std::log1p(-delta_target) / d);
  return -sigma * std_normal_quantile(0.5 * tail);
}

inline double c_tilde1(double sigma) {
  if (!(sigma > 0.0)) throw std::invalid_argument("c_tilde1: sigma must be positive");
  const double head = 2.0 * std_normal_cdf(1.0 / sigma) + 2.0 * sigma * kInvSqrt2Pi;
  return std::sqrt(head * head + 2.0 * sigma * sigma / std::numbers::pi);
}

/// Endpoints of the interval containing the loss on the high-probability set.
inline BoundConstants sub_gaussian_constants(double sigma, int d, double r, double c) {
  if (!(sigma > 0.0)) throw std::invalid_argument("sub_gaussian_constants: sigma must be positive");
  if (!(r > 0.0) || !(c > 0.0)) {
    throw std::invalid_argument("sub_gaussian_constants: r and c must be positive");
  }
  BoundConstants k;
  k.r = r;
  k.c = c;
  k.c1 = std::numbers::ln2 + 0.5 * d * std::log(2.0 * std::numbers::pi) + d * std::log(sigma);
  k.c2 = k.c1 + d * (c + r) * (c + r) / (2.0 * sigma * sigma);
  return k;
}

inline void validate(const BoundConfig& cfg) {
  cfg.params.validate();
  if (!(cfg.delta > 0.0 && cfg.delta < 1.0)) throw std::invalid_argument("delta must lie in (0,1)");
  if (!(cfg.epsilon >= 0.0)) throw std::invalid_argument("epsilon must be >= 0");
  if (!(cfg.tol > 0.0)) throw std::invalid_argument("tol must be positive");
  if (cfg.r && !(*cfg.r > 0.0)) throw std::invalid_argument("r must be positive");
  if (cfg.c && !(*cfg.c > c_tilde1(cfg.params.sigma))) {
    throw std::invalid_argument("c must exceed c_tilde1(sigma)");
  }
  if (cfg.c1.has_value() != cfg.c2.has_value()) {
    throw std::invalid_argument("c1 and c2 must be given together");
  }
  if (cfg.c1 && !(*cfg.c2 > *cfg.c1)) throw std::invalid_argument("c2 must exceed c1");
  if (cfg.expectation.method == ExpectationMethod::quad2d && cfg.params.d != 2) {
    throw std::invalid_argument("quad2d expectation requires d = 2; use mc for d > 2");
  }
  if (cfg.expectation.method == ExpectationMethod::mc && cfg.expectation.samples < 1000) {
    throw std::invalid_argument("mc expectation needs at least 1e3 samples");
  }
}

/// Default policy: each of the two ball events gets failure mass delta/3.
inline BoundConstants resolve_constants(const BoundConfig& cfg) {
  validate(cfg);
  const MixtureParams& p = cfg.params;
  const double r = cfg.r ? *cfg.r : solve_r(cfg.delta / 3.0, p.d, p.sigma);
  const double c =
      cfg.c ? *cfg.c
            : std::max(1.01 * c_tilde1(p.sigma),
                       solve_r(cfg.delta / 3.0, p.d, p.sigma) / std::sqrt(double(p.n)));
  BoundConstants k = sub_gaussian_constants(p.sigma, p.d, r, c);
  if (cfg.c1) {
    k.c1 = *cfg.c1;
    k.c2 = *cfg.c2;
  }
  return k;
}

/// I(theta_0; Z_i) for one labelled sample.
inline double mi_theta0_sample(int n, int d) {
  if (n < 2) throw std::domain_error("mi_theta0_sample: n must be >= 2");
  if (d < 1) throw std::invalid_argument("mi_theta0_sample: d must be >= 1");
  return -0.5 * d * std::log1p(-1.0 / n);
}

inline double gen0_bound(const BoundConfig& cfg) {
  const BoundConstants k = resolve_constants(cfg);
  const double s = k.spread();
  return std::sqrt(0.5 * s * s * mi_theta0_sample(cfg.params.n, cfg.params.d));
}

/// E over (xi0, |mu_perp|) of g(InitDecomposition). With quad2d (d = 2) the
/// second coordinate is |N(0,1)|, integrated against the half-normal density;
/// the xi0 axis carries a panel edge where 1 + (sigma/sqrt n) xi0 changes sign.
template <class G>
Expectation expect_over_init_joint(G&& g, const BoundConfig& cfg) {
  validate(cfg);
  const MixtureParams& p = cfg.params;
  const double sigma = p.sigma;
  const int n = p.n;
  if (cfg.expectation.method == ExpectationMethod::quad2d) {
    const double flip = -std::sqrt(double(n)) / sigma;
    std::vector<double> xi_edges = {-10.0, 10.0};
    if (flip > -10.0) xi_edges.insert(xi_edges.begin() + 1, flip);
    Rectangle region{-10.0, 10.0, 0.0, 10.0};
    auto integrand = [&](double xi0, double s) {
      const double weight = 2.0 * std_normal_pdf(xi0) * std_normal_pdf(s);
      if (weight == 0.0) return 0.0;
      if (1.0 + sigma / std::sqrt(double(n)) * xi0 == 0.0 && s == 0.0) return 0.0;
      return weight * g(InitDecomposition::make(xi0, s, sigma, n));
    };
    const IntegrationResult r =
        integrate_2d(integrand, region, cfg.tol, QuadratureOptions{}, xi_edges, {});
    return Expectation{r.value, r.abs_error_estimate, r.evaluations};
  }
  const std::size_t count = cfg.expectation.samples;
  double sum = 0.0;
  double sum_sq = 0.0;
  for (std::size_t i = 0; i < count; ++i) {
    RandomStream rng(cfg.expectation.seed, stream_id(0x45787063u, static_cast<std::uint32_t>(i)));
    const double xi0 = rng.normal();
    double chi_sq = 0.0;
    for (int k = 1; k < p.d; ++k) {
      const double z = rng.normal();
      chi_sq += z * z;
    }
    const double v = g(InitDecomposition::make(xi0, std::sqrt(chi_sq), sigma, n));
    sum += v;
    sum_sq += v * v;
  }
  const MonteCarloEstimate est = detail::summarize(sum, sum_sq, count);
  return Expectation{est.estimate, est.std_error, count};
}

/// E over the initial draw of g(alpha).
template <class G>
Expectation expect_over_init(G&& g, const BoundConfig& cfg) {
  return expect_over_init_joint([&](const InitDecomposition& init) { return g(init.alpha); }, cfg);
}

namespace detail {

// Tolerance handed to each inner G evaluation; sqrt(G) is taken afterwards,
// so G needs to be well below the expectation tolerance.
inline double inner_g_tol(const BoundConfig& cfg) { return std::max(1e-14, 1e-4 * cfg.tol); }

inline double g_value(double alpha, const BoundConfig& cfg) {
  const double tol = inner_g_tol(cfg);
  return cfg.g_route == GRoute::projected ? g_sigma_projected(alpha, cfg.params.sigma, tol).value
                                          : g_sigma(alpha, cfg.params.sigma, tol).value;
}

}  // namespace detail

/// Fresh-batch bound on |gen_t| for t >= 1 with a caller-supplied G(alpha).
template <class GFn>
double gen_t_bound_with(int t, const BoundConfig& cfg, GFn&& g_of_alpha) {
  if (t < 1) throw std::invalid_argument("gen_t_bound: t must be >= 1");
  const BoundConstants k = resolve_constants(cfg);
  const double sigma = cfg.params.sigma;
  const double eps = cfg.epsilon;
  const Expectation e = expect_over_init_joint(
      [&](const InitDecomposition& init) {
        const double a = f_sigma_iter(init.alpha, sigma, t - 1);
        return std::sqrt(g_of_alpha(a) + eps);
      },
      cfg);
  return std::abs(k.spread()) / std::numbers::sqrt2 * e.value;
}

inline double gen_t_bound(int t, const BoundConfig& cfg) {
  return gen_t_bound_with(t, cfg, [&](double a) { return detail::g_value(a, cfg); });
}

/// Corollary-style bound when the labelled set is reused with weight
/// params.w at every refinement step.
inline double gen_t_bound_reuse(int t, const BoundConfig& cfg) {
  if (t < 1) throw std::invalid_argument("gen_t_bound_reuse: t must be >= 1");
  const BoundConstants k = resolve_constants(cfg);
  const MixtureParams& p = cfg.params;
  const double w = p.w;
  const double eps = cfg.epsilon;
  const Expectation e = expect_over_init_joint(
      [&](const InitDecomposition& init) {
        const double a =
            f_tilde_iter(init.alpha, p.sigma, init.xi0, init.mu_perp_norm, p.n, w, t - 1);
        return std::sqrt(detail::g_value(a, cfg) + eps);
      },
      cfg);
  const double unlabelled = std::abs(k.spread()) / std::numbers::sqrt2 * e.value;
  const double labelled = w == 0.0 ? 0.0 : w * gen0_bound(cfg);
  return labelled + (1.0 - w) * unlabelled;
}

/// Large-n approximation of the t = 1 bound (d = 2): alpha is replaced by its
/// second-order expansion 1 - y^2 around the true mean.
inline double gen1_bound_taylor(const BoundConfig& cfg) {
  if (cfg.params.d != 2) throw std::invalid_argument("gen1_bound_taylor: requires d = 2");
  const BoundConstants k = resolve_constants(cfg);
  const double sigma = cfg.params.sigma;
  const double n = cfg.params.n;
  const double scale = std::sqrt(n) / (std::sqrt(std::numbers::pi) * sigma);
  auto integrand = [&](double y) {
    const double a = std::clamp(1.0 - y * y, -1.0, 1.0);
    return scale * std::exp(-n * y * y / (sigma * sigma)) * std::sqrt(detail::g_value(a, cfg));
  };
  const std::array<double, 3> edges = {-std::numbers::sqrt2, 0.0, std::numbers::sqrt2};
  const IntegrationResult r = integrate_1d(integrand, std::span<const double>(edges), cfg.tol);
  return std::abs(k.spread()) / std::numbers::sqrt2 * r.value;
}

struct CrossoverRow {
  int n = 0;
  double gen0 = 0.0;
  double gen1 = 0.0;
  double ratio() const { return gen1 / gen0; }
};

struct CrossoverReport {
  double sigma = 0.0;
  int d = 2;
  std::vector<CrossoverRow> rows;
  std::optional<int> crossover_n;  // smallest grid n with gen1 > gen0
};

inline CrossoverReport gen01_crossover(double sigma, int d, const std::vector<int>& n_grid,
                                       const BoundConfig& templ) {
  if (n_grid.empty()) throw std::invalid_argument("gen01_crossover: empty n grid");
  CrossoverReport rep;
  rep.sigma = sigma;
  rep.d = d;
  for (int n : n_grid) {
    if (n < 2) throw std::invalid_argument("gen01_crossover: every n must be >= 2");
    BoundConfig cfg = templ;
    cfg.params.sigma = sigma;
    cfg.params.d = d;
    cfg.params.n = n;
    CrossoverRow row;
    row.n = n;
    row.gen0 = gen0_bound(cfg);
    row.gen1 = gen_t_bound(1, cfg);
    if (!rep.crossover_n && row.gen1 > row.gen0) rep.crossover_n = n;
    rep.rows.push_back(row);
  }
  return rep;
}

/// Bound curve over t = 0..t_max. Iterative methods put gen0 at t = 0.
inline BoundCurve bound_curve(BoundMethod method, const BoundConfig& cfg, int t_max) {
  if (t_max < 0) throw std::invalid_argument("bound_curve: t_max must be >= 0");
  BoundCurve curve;
  curve.method = method;
  curve.config = cfg;
  curve.constants = resolve_constants(cfg);
  auto push = [&](int t, double v) {
    curve.t_values.push_back(t);
    curve.bounds.push_back(v);
  };
  switch (method) {
    case BoundMethod::gen0:
      push(0, gen0_bound(cfg));
      break;
    case BoundMethod::taylor_gen1:
      push(1, gen1_bound_taylor(cfg));
      break;
    case BoundMethod::theorem2:
    case BoundMethod::corollary1:
      push(0, gen0_bound(cfg));
      for (int t = 1; t <= t_max; ++t) {
        push(t, method == BoundMethod::theorem2 ? gen_t_bound(t, cfg) : gen_t_bound_reuse(t, cfg));
      }
      break;
  }
  return curve;
}

}  // namespace gmmssl
