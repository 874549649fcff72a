// G_sigma: KL divergence between the pseudo-labelled joint distribution and
// the true joint distribution, for a labeller whose correlation with the
// true mean is alpha.
//
// In coordinates u along the labeller direction and w along the unit vector
// of its perpendicular offset, the pseudo-labelled class conditional is
//   p(u, w) = [phi(u - 2a/s) phi(w - b) + phi(u) phi(w)] 1{u <= a/s},
// (a = alpha, s = sigma, b = 2 sqrt(1 - a^2) / s) and the true one is
// q(u, w) = phi(u) phi(w). Every remaining direction carries the same
// standard normal factor in p and q, so the d-dimensional divergence equals
// this two-dimensional one for every d >= 2.
//
// Three evaluation routes are provided:
//   g_sigma            adaptive 2-D quadrature of p log(p/q) (reference)
//   g_sigma_projected  1-D integral obtained by rotating onto the direction
//                      in which log(p/q) varies (fast path for the bounds)
//   g_sigma_mc         Monte Carlo over samples from p (oracle)
// plus g_sigma_full_dim_mc, which samples the self-training labeller in R^d
// directly and never uses the 2-D reduction.
#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <stdexcept>
#include <vector>

#include "gmmssl/quadrature.hpp"
#include "gmmssl/rng.hpp"
#include "gmmssl/specfn.hpp"

namespace gmmssl {

/// One G_sigma evaluation request.
struct GsigmaQuery {
  double alpha = 1.0;
  double sigma = 0.5;
  double tol = kDefaultQuadTol;

  void validate() const {
    if (!(std::abs(alpha) <= 1.0)) throw std::domain_error("G_sigma: |alpha| must be <= 1");
    if (!(sigma > 0.0)) throw std::invalid_argument("G_sigma: sigma must be positive");
    if (!(tol > 0.0)) throw std::invalid_argument("G_sigma: tol must be positive");
  }
  double beta() const { return std::sqrt((1.0 - alpha) * (1.0 + alpha)); }
  /// Norm of the perpendicular offset of the mislabelled component.
  double b() const { return 2.0 * beta() / sigma; }
};

struct MonteCarloEstimate {
  double estimate = 0.0;
  double std_error = 0.0;
  std::size_t samples = 0;
};

namespace detail {

inline double softplus(double z) {
  return z > 0.0 ? z + std::log1p(std::exp(-z)) : std::log1p(std::exp(z));
}

inline double log_std_normal_pdf(double x) {
  return -0.5 * x * x - 0.91893853320467274178032973640562;  // log sqrt(2 pi)
}

inline double log_add_exp(double a, double b) {
  const double hi = std::max(a, b);
  return hi + std::log1p(std::exp(std::min(a, b) - hi));
}

inline MonteCarloEstimate summarize(double sum, double sum_sq, std::size_t count) {
  MonteCarloEstimate out;
  out.samples = count;
  const double n = static_cast<double>(count);
  out.estimate = sum / n;
  const double var = std::max(0.0, (sum_sq - n * out.estimate * out.estimate) / (n - 1.0));
  out.std_error = std::sqrt(var / n);
  return out;
}

}  // namespace detail

/// Reference evaluation: adaptive 2-D quadrature of p log(p/q) over
/// u in [min(0, 2a/s) - 10, a/s], w in [-10, b + 10]. The truncation edge
/// u = a/s is the rectangle's upper edge.
inline IntegrationResult g_sigma(double alpha, double sigma, double tol = kDefaultQuadTol) {
  const GsigmaQuery q{alpha, sigma, tol};
  q.validate();
  const double shift = 2.0 * alpha / sigma;
  const double b = q.b();
  const double offset = 2.0 / (sigma * sigma);  // (shift^2 + b^2) / 2
  Rectangle region;
  region.x_lo = std::min(0.0, shift) - 10.0;
  region.x_hi = alpha / sigma;
  region.y_lo = -10.0;
  region.y_hi = b + 10.0;
  auto integrand = [&](double u, double w) {
    const double p = std_normal_pdf(u - shift) * std_normal_pdf(w - b) +
                     std_normal_pdf(u) * std_normal_pdf(w);
    if (p < 1e-300) return 0.0;
    // log(p/q) = log(1 + phi(u-shift)phi(w-b) / (phi(u)phi(w)))
    return p * detail::softplus(shift * u + b * w - offset);
  };
  IntegrationResult r = integrate_2d(integrand, region, tol);
  r.value = std::max(r.value, 0.0);
  return r;
}

/// G_sigma as a 1-D integral. With L = 2/s the log-ratio is softplus(L v - L^2/2)
/// in the coordinate v along (2a/s, b)/L; integrating out the orthogonal
/// coordinate against the truncation leaves
///   G = int softplus(L v - L^2/2) [phi(v - L) + phi(v)] Phi((a/beta)(1/s - v)) dv.
inline IntegrationResult g_sigma_projected(double alpha, double sigma,
                                           double tol = kDefaultQuadTol) {
  const GsigmaQuery q{alpha, sigma, tol};
  q.validate();
  const double len = 2.0 / sigma;
  const double kink = 1.0 / sigma;
  const double beta = q.beta();
  const double lo = -10.0;
  const double hi = len + 10.0;
  auto density = [&](double v) {
    return detail::softplus(len * v - 0.5 * len * len) *
           (std_normal_pdf(v - len) + std_normal_pdf(v));
  };
  IntegrationResult r;
  if (beta == 0.0) {
    // Truncation becomes a half-line in v.
    if (alpha > 0.0) {
      r = integrate_1d(density, lo, kink, tol);
    } else {
      r = integrate_1d(density, kink, hi, tol);
    }
  } else {
    const double slope = alpha / beta;
    auto integrand = [&](double v) {
      return density(v) * std_normal_cdf(slope * (kink - v));
    };
    // The cdf factor steps from 1 to 0 over a width ~ 1/|slope| around the
    // kink; pin panels to that scale so the step is never straddled unseen.
    std::vector<double> edges = {lo, kink, hi};
    const double width = 1.0 / std::abs(slope);
    for (double k : {1.0, 8.0}) {
      if (kink - k * width > lo) edges.push_back(kink - k * width);
      if (kink + k * width < hi) edges.push_back(kink + k * width);
    }
    std::sort(edges.begin(), edges.end());
    edges.erase(std::unique(edges.begin(), edges.end()), edges.end());
    r = integrate_1d(integrand, std::span<const double>(edges), tol);
  }
  r.value = std::max(r.value, 0.0);
  return r;
}

/// Monte Carlo oracle: samples (u, w) from p and averages log(p/q), with both
/// densities evaluated explicitly in log space.
inline MonteCarloEstimate g_sigma_mc(double alpha, double sigma, std::size_t samples,
                                     std::uint64_t seed) {
  const GsigmaQuery q{alpha, sigma, kDefaultQuadTol};
  q.validate();
  if (samples < 10'000) throw std::invalid_argument("g_sigma_mc: need at least 1e4 samples");
  const double a = alpha / sigma;
  const double shift = 2.0 * alpha / sigma;
  const double b = q.b();
  // Mixture weights: mislabelled component Phi(-a), correctly labelled Phi(a).
  const double w_flip = std_normal_cdf(-a);
  const double w_keep = std_normal_cdf(a);
  RandomStream rng(seed, stream_id(0x6753u, 0u));
  double sum = 0.0;
  double sum_sq = 0.0;
  for (std::size_t i = 0; i < samples; ++i) {
    double u = 0.0;
    double w = 0.0;
    const double pick = rng.uniform() * (w_flip + w_keep);
    if (pick < w_flip) {
      // g ~ N(0,1) | g <= -a, then shifted by 2a/s; w ~ N(b, 1).
      u = std_normal_quantile(rng.uniform_open() * w_flip) + shift;
      w = b + rng.normal();
    } else {
      u = std_normal_quantile(rng.uniform_open() * w_keep);
      w = rng.normal();
    }
    const double log_p = detail::log_add_exp(
        detail::log_std_normal_pdf(u - shift) + detail::log_std_normal_pdf(w - b),
        detail::log_std_normal_pdf(u) + detail::log_std_normal_pdf(w));
    const double log_q = detail::log_std_normal_pdf(u) + detail::log_std_normal_pdf(w);
    const double v = log_p - log_q;
    sum += v;
    sum_sq += v * v;
  }
  return detail::summarize(sum, sum_sq, samples);
}

/// Divergence between the pseudo-labelled and true joint distributions in
/// R^d, estimated by running the labeller sgn(theta^T x) on draws from the
/// mixture with mu = e_1 and unit theta = alpha e_1 + beta e_2. Uses
///   P_{X'|Yhat=y}(x) / P_{X|Y=y}(x) = 1 + N(x; -y mu) / N(x; y mu),
/// with both Gaussian densities evaluated in all d coordinates.
inline MonteCarloEstimate g_sigma_full_dim_mc(double alpha, double sigma, int d,
                                              std::size_t samples, std::uint64_t seed) {
  const GsigmaQuery q{alpha, sigma, kDefaultQuadTol};
  q.validate();
  if (d < 2) throw std::invalid_argument("g_sigma_full_dim_mc: d must be >= 2");
  if (samples < 10'000) throw std::invalid_argument("g_sigma_full_dim_mc: need >= 1e4 samples");
  const double beta = q.beta();
  const double inv_two_var = 1.0 / (2.0 * sigma * sigma);
  RandomStream rng(seed, stream_id(0x6764u, static_cast<std::uint32_t>(d)));
  std::vector<double> x(static_cast<std::size_t>(d));
  double sum = 0.0;
  double sum_sq = 0.0;
  for (std::size_t i = 0; i < samples; ++i) {
    const int y = rng.sign();
    for (auto& xk : x) xk = sigma * rng.normal();
    x[0] += y;
    const double score = alpha * x[0] + beta * x[1];
    const double y_hat = score >= 0.0 ? 1.0 : -1.0;
    double dist_same = 0.0;  // |x - y_hat mu|^2
    double dist_other = 0.0;  // |x + y_hat mu|^2
    for (int k = 0; k < d; ++k) {
      const double centre = (k == 0) ? y_hat : 0.0;
      dist_same += (x[k] - centre) * (x[k] - centre);
      dist_other += (x[k] + centre) * (x[k] + centre);
    }
    const double v = detail::log_add_exp(0.0, (dist_same - dist_other) * inv_two_var);
    sum += v;
    sum_sq += v * v;
  }
  return detail::summarize(sum, sum_sq, samples);
}

}  // namespace gmmssl
