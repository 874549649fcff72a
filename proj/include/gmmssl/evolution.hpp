// Correlation machinery for self-training on the binary Gaussian mixture:
// the correlation of the labelled-data estimate with the true mean, the
// one-step correlation map F_sigma, its labelled-data-reuse variant, and
// their iterates.
#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <stdexcept>
#include <string>

#include "gmmssl/specfn.hpp"

namespace gmmssl {

/// Problem instance: class spread, dimension, sample counts, iteration budget
/// and the labelled-risk weight used by the empirical risk.
struct MixtureParams {
  double sigma = 0.6;
  int d = 2;
  int n = 10;
  int m = 1000;
  int tau = 20;
  double w = 0.0;

  void validate() const {
    if (!(sigma > 0.0) || !std::isfinite(sigma)) {
      throw std::invalid_argument("sigma must be positive and finite");
    }
    if (d < 2) throw std::invalid_argument("d must be >= 2");
    if (n < 1) throw std::invalid_argument("n must be >= 1");
    if (m < 1) throw std::invalid_argument("m must be >= 1");
    if (tau < 0) throw std::invalid_argument("tau must be >= 0");
    if (!(w >= 0.0 && w <= 1.0)) throw std::invalid_argument("w must lie in [0,1]");
  }

  /// Labelled weight for the reuse scheme, n / (n + m).
  double reuse_weight() const { return static_cast<double>(n) / static_cast<double>(n + m); }
};

class DegenerateInputError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

namespace detail {

inline constexpr double kUnitClamp = 1e-12;

inline double clamp_unit(double x, const char* who) {
  if (!(std::abs(x) <= 1.0 + kUnitClamp)) {
    throw std::domain_error(std::string(who) + ": |x| must be <= 1, got " + std::to_string(x));
  }
  if (1.0 - std::abs(x) <= kUnitClamp) return std::copysign(1.0, x);
  return x;
}

// Component of E[sgn(theta^T X) X] along mu, for a labeller with correlation x.
// 1 - 2Q(x/sigma) is written as erf to stay exact near x = 0.
inline double evolution_parallel(double x, double sigma) {
  return std::erf(x / (sigma * std::numbers::sqrt2)) +
         2.0 * sigma * x * kInvSqrt2Pi * std::exp(-x * x / (2.0 * sigma * sigma));
}

// Component along the labeller's perpendicular direction; its square is the
// D(x) term of F_sigma. (1 - x^2) is formed as (1-x)(1+x).
inline double evolution_perpendicular(double x, double sigma) {
  const double one_minus_sq = (1.0 - x) * (1.0 + x);
  return 2.0 * sigma * std::sqrt(one_minus_sq) * kInvSqrt2Pi *
         std::exp(-x * x / (2.0 * sigma * sigma));
}

}  // namespace detail

/// Correlation of theta_0 = (1 + k xi0) mu + k mu_perp with mu, k = sigma/sqrt(n).
inline double alpha_of(double xi0, double mu_perp_norm, double sigma, int n) {
  if (!(sigma > 0.0)) throw std::invalid_argument("alpha_of: sigma must be positive");
  if (n < 1) throw std::invalid_argument("alpha_of: n must be >= 1");
  if (mu_perp_norm < 0.0) throw std::invalid_argument("alpha_of: mu_perp_norm must be >= 0");
  const double k = sigma / std::sqrt(static_cast<double>(n));
  const double along = 1.0 + k * xi0;
  const double across = k * mu_perp_norm;
  if (along == 0.0 && across == 0.0) {
    throw DegenerateInputError("alpha_of: theta_0 is the zero vector, correlation undefined");
  }
  return along / std::hypot(along, across);
}

/// The (xi0, |mu_perp|) randomness behind theta_0 and the correlation it induces.
struct InitDecomposition {
  double xi0 = 0.0;
  double mu_perp_norm = 0.0;
  double alpha = 1.0;
  double beta = 0.0;

  static InitDecomposition make(double xi0, double mu_perp_norm, double sigma, int n) {
    InitDecomposition out;
    out.xi0 = xi0;
    out.mu_perp_norm = mu_perp_norm;
    out.alpha = alpha_of(xi0, mu_perp_norm, sigma, n);
    const double k = sigma / std::sqrt(static_cast<double>(n));
    const double along = 1.0 + k * xi0;
    const double across = k * mu_perp_norm;
    out.beta = across / std::hypot(along, across);
    return out;
  }
};

/// Signed correlation evolution map. Its magnitude is the usual closed form
/// (1 + D/N^2)^(-1/2); the sign follows N, the component along mu.
inline double f_sigma(double x, double sigma) {
  if (!(sigma > 0.0)) throw std::invalid_argument("f_sigma: sigma must be positive");
  x = detail::clamp_unit(x, "f_sigma");
  const double along = detail::evolution_parallel(x, sigma);
  const double across = detail::evolution_perpendicular(x, sigma);
  return along / std::hypot(along, across);
}

inline double f_sigma_iter(double x, double sigma, int t) {
  if (t < 0) throw std::invalid_argument("f_sigma_iter: t must be >= 0");
  x = detail::clamp_unit(x, "f_sigma_iter");
  for (int i = 0; i < t; ++i) x = f_sigma(x, sigma);
  return x;
}

/// Correlation map when the labelled set is reused with weight w. The
/// labelled contribution enters with the theta_0 components
/// (1 + sigma xi0 / sqrt n) along mu and sigma |mu_perp| / sqrt n across.
inline double f_tilde(double x, double sigma, double xi0, double mu_perp_norm, int n, double w) {
  if (!(sigma > 0.0)) throw std::invalid_argument("f_tilde: sigma must be positive");
  if (!(w >= 0.0 && w <= 1.0)) throw std::invalid_argument("f_tilde: w must lie in [0,1]");
  if (n < 1) throw std::invalid_argument("f_tilde: n must be >= 1");
  x = detail::clamp_unit(x, "f_tilde");
  const double root_n = std::sqrt(static_cast<double>(n));
  const double along = w * (1.0 + sigma / root_n * xi0) +
                       (1.0 - w) * detail::evolution_parallel(x, sigma);
  const double across = w * sigma * mu_perp_norm / root_n +
                        (1.0 - w) * detail::evolution_perpendicular(x, sigma);
  if (along == 0.0 && across == 0.0) {
    throw DegenerateInputError("f_tilde: expected parameter is zero, correlation undefined");
  }
  return along / std::hypot(along, across);
}

inline double f_tilde_iter(double x, double sigma, double xi0, double mu_perp_norm, int n,
                           double w, int t) {
  if (t < 0) throw std::invalid_argument("f_tilde_iter: t must be >= 0");
  x = detail::clamp_unit(x, "f_tilde_iter");
  for (int i = 0; i < t; ++i) x = f_tilde(x, sigma, xi0, mu_perp_norm, n, w);
  return x;
}

}  // namespace gmmssl
