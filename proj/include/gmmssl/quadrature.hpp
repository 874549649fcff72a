// Adaptive Gauss-Kronrod integration in one and two dimensions.
//
// The 1-D driver is a globally adaptive bisection scheme over 21-point
// Kronrod panels (the 10-point Gauss rule embedded in them supplies the
// local error estimate, scaled as in QUADPACK's qk21). Panels are kept in
// a max-heap keyed on their error estimate; the worst panel is bisected
// until the summed estimate meets the tolerance or the evaluation budget
// runs out. Running out of budget with an estimate above 10x the tolerance
// raises NonConvergenceError rather than returning a poor value.
//
// The 2-D driver is a nested product: an adaptive outer pass over x whose
// integrand is itself an adaptive inner pass over y.
#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <limits>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace gmmssl {

struct IntegrationResult {
  double value = 0.0;
  double abs_error_estimate = 0.0;
  std::size_t evaluations = 0;
};

struct QuadratureOptions {
  // Per adaptive pass; the 2-D driver applies it to the outer pass and to
  // each inner pass separately.
  std::size_t max_evaluations = 1'000'000;
  // Optional relative criterion: converged once err <= max(tol, rel_tol*|I|).
  double rel_tol = 0.0;
};

class NonConvergenceError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline constexpr double kDefaultQuadTol = 1e-8;

namespace detail {

inline constexpr std::array<double, 11> kKronrodNodes = {
    0.995657163025808080735527280689003, 0.973906528517171720077964012084452,
    0.930157491355708226001207180059508, 0.865063366688984510732096688423493,
    0.780817726586416897063717578345042, 0.679409568299024406234327365114874,
    0.562757134668604683339000099272694, 0.433395394129247190799265943165784,
    0.294392862701460198131126603103866, 0.148874338981631210884826001129720,
    0.000000000000000000000000000000000};

inline constexpr std::array<double, 11> kKronrodWeights = {
    0.011694638867371874278064396062192, 0.032558162307964727478818972459390,
    0.054755896574351996031381300244580, 0.075039674810919952767043140916190,
    0.093125454583697605535065465083366, 0.109387158802297641899210590325805,
    0.123491976262065851077208745922720, 0.134709217311473325928054001771707,
    0.142775938577060080797094273138717, 0.147739104901338491374841515972068,
    0.149445554002916905664936468389821};

// Weights of the embedded 10-point Gauss rule, at Kronrod nodes 1, 3, 5, 7, 9.
inline constexpr std::array<double, 5> kGaussWeights = {
    0.066671344308688137593568809893332, 0.149451349150580593145776339657697,
    0.219086362515982043995534934228163, 0.269266719309996355091226921569469,
    0.295524224714752870173892994651338};

struct Panel {
  double a = 0.0;
  double b = 0.0;
  double value = 0.0;
  double error = 0.0;
  bool splittable = true;
};

template <class F>
Panel kronrod21(F& f, double a, double b) {
  constexpr double eps = std::numeric_limits<double>::epsilon();
  const double centre = 0.5 * (a + b);
  const double half = 0.5 * (b - a);
  const double abs_half = std::abs(half);

  std::array<double, 10> f_lo{};
  std::array<double, 10> f_hi{};
  const double f_centre = f(centre);
  double res_gauss = 0.0;
  double res_kronrod = kKronrodWeights[10] * f_centre;
  double res_abs = std::abs(res_kronrod);
  for (std::size_t j = 0; j < 10; ++j) {
    const double dx = half * kKronrodNodes[j];
    const double v1 = f(centre - dx);
    const double v2 = f(centre + dx);
    f_lo[j] = v1;
    f_hi[j] = v2;
    res_kronrod += kKronrodWeights[j] * (v1 + v2);
    res_abs += kKronrodWeights[j] * (std::abs(v1) + std::abs(v2));
    if (j % 2 == 1) res_gauss += kGaussWeights[j / 2] * (v1 + v2);
  }
  const double mean = 0.5 * res_kronrod;
  double res_asc = kKronrodWeights[10] * std::abs(f_centre - mean);
  for (std::size_t j = 0; j < 10; ++j) {
    res_asc += kKronrodWeights[j] * (std::abs(f_lo[j] - mean) + std::abs(f_hi[j] - mean));
  }
  res_abs *= abs_half;
  res_asc *= abs_half;

  Panel p;
  p.a = a;
  p.b = b;
  p.value = res_kronrod * half;
  double err = std::abs((res_kronrod - res_gauss) * half);
  if (res_asc != 0.0 && err != 0.0) {
    err = res_asc * std::min(1.0, std::pow(200.0 * err / res_asc, 1.5));
  }
  const double roundoff = 50.0 * eps * res_abs;
  if (res_abs > std::numeric_limits<double>::min() / (50.0 * eps)) {
    err = std::max(roundoff, err);
  }
  p.error = err;
  const double width_floor = 1e3 * eps * std::max(std::abs(a), std::abs(b)) +
                             std::numeric_limits<double>::min();
  p.splittable = err > roundoff * 1.0001 && std::abs(b - a) > width_floor;
  if (!std::isfinite(p.value) || !std::isfinite(p.error)) {
    throw NonConvergenceError("integrand produced a non-finite value on [" +
                              std::to_string(a) + ", " + std::to_string(b) + "]");
  }
  return p;
}

inline bool panel_less(const Panel& x, const Panel& y) {
  // Unsplittable panels sink to the bottom of the heap.
  if (x.splittable != y.splittable) return !x.splittable;
  return x.error < y.error;
}

}  // namespace detail

/// Adaptive integral of f over [a, b] with the interior breakpoints taken as
/// fixed panel edges. `edges` must be strictly increasing with size >= 2.
template <class F>
IntegrationResult integrate_1d(F&& f, std::span<const double> edges, double tol,
                               const QuadratureOptions& opts = {}) {
  if (edges.size() < 2) throw std::invalid_argument("integrate_1d: need at least two edges");
  if (!(tol > 0.0)) throw std::invalid_argument("integrate_1d: tol must be positive");
  for (std::size_t i = 0; i + 1 < edges.size(); ++i) {
    if (!(edges[i] < edges[i + 1]) || !std::isfinite(edges[i]) || !std::isfinite(edges[i + 1])) {
      throw std::invalid_argument("integrate_1d: edges must be finite and strictly increasing");
    }
  }
  constexpr std::size_t kPanelCost = 21;

  std::vector<detail::Panel> heap;
  heap.reserve(64);
  std::size_t evals = 0;
  double total = 0.0;
  double error = 0.0;
  for (std::size_t i = 0; i + 1 < edges.size(); ++i) {
    heap.push_back(detail::kronrod21(f, edges[i], edges[i + 1]));
    evals += kPanelCost;
    total += heap.back().value;
    error += heap.back().error;
  }
  std::make_heap(heap.begin(), heap.end(), detail::panel_less);

  auto converged = [&] { return error <= std::max(tol, opts.rel_tol * std::abs(total)); };
  while (!converged() && heap.front().splittable &&
         evals + 2 * kPanelCost <= opts.max_evaluations) {
    std::pop_heap(heap.begin(), heap.end(), detail::panel_less);
    const detail::Panel worst = heap.back();
    heap.pop_back();
    const double mid = 0.5 * (worst.a + worst.b);
    detail::Panel left = detail::kronrod21(f, worst.a, mid);
    detail::Panel right = detail::kronrod21(f, mid, worst.b);
    evals += 2 * kPanelCost;
    total += left.value + right.value - worst.value;
    error += left.error + right.error - worst.error;
    heap.push_back(left);
    std::push_heap(heap.begin(), heap.end(), detail::panel_less);
    heap.push_back(right);
    std::push_heap(heap.begin(), heap.end(), detail::panel_less);
  }

  // Re-sum in edge order so the result does not carry update drift.
  std::sort(heap.begin(), heap.end(),
            [](const detail::Panel& x, const detail::Panel& y) { return x.a < y.a; });
  IntegrationResult out;
  for (const auto& p : heap) {
    out.value += p.value;
    out.abs_error_estimate += p.error;
  }
  out.evaluations = evals;
  if (out.abs_error_estimate > 10.0 * std::max(tol, opts.rel_tol * std::abs(out.value))) {
    throw NonConvergenceError("integrate_1d: error estimate " +
                              std::to_string(out.abs_error_estimate) + " exceeds 10x tol " +
                              std::to_string(tol) + " after " + std::to_string(evals) +
                              " evaluations");
  }
  return out;
}

template <class F>
IntegrationResult integrate_1d(F&& f, double a, double b, double tol = kDefaultQuadTol,
                               const QuadratureOptions& opts = {}) {
  if (!(a < b)) throw std::invalid_argument("integrate_1d: require a < b");
  const std::array<double, 2> edges = {a, b};
  return integrate_1d(f, std::span<const double>(edges), tol, opts);
}

struct Rectangle {
  double x_lo = 0.0;
  double x_hi = 0.0;
  double y_lo = 0.0;
  double y_hi = 0.0;
};

/// Nested adaptive integral of f(x, y) over a rectangle. Optional fixed panel
/// edges may be supplied for either axis (they must include the rectangle's
/// own bounds when non-empty).
template <class F>
IntegrationResult integrate_2d(F&& f, const Rectangle& region, double tol = kDefaultQuadTol,
                               const QuadratureOptions& opts = {},
                               std::span<const double> x_edges = {},
                               std::span<const double> y_edges = {}) {
  if (!(region.x_lo < region.x_hi) || !(region.y_lo < region.y_hi)) {
    throw std::invalid_argument("integrate_2d: degenerate rectangle");
  }
  if (!(tol > 0.0)) throw std::invalid_argument("integrate_2d: tol must be positive");
  const std::array<double, 2> default_x = {region.x_lo, region.x_hi};
  const std::array<double, 2> default_y = {region.y_lo, region.y_hi};
  if (x_edges.empty()) x_edges = default_x;
  if (y_edges.empty()) y_edges = default_y;

  // Inner errors integrate to at most inner_tol * width; split tol evenly.
  const double inner_tol = 0.5 * tol / (region.x_hi - region.x_lo);
  QuadratureOptions inner_opts = opts;
  inner_opts.rel_tol = 0.0;
  std::size_t inner_evals = 0;
  double worst_inner_err = 0.0;
  auto outer = [&](double x) {
    auto slice = [&](double y) { return f(x, y); };
    const IntegrationResult r = integrate_1d(slice, y_edges, inner_tol, inner_opts);
    inner_evals += r.evaluations;
    worst_inner_err = std::max(worst_inner_err, r.abs_error_estimate);
    return r.value;
  };
  IntegrationResult out = integrate_1d(outer, x_edges, 0.5 * tol, opts);
  out.abs_error_estimate += worst_inner_err * (region.x_hi - region.x_lo);
  out.evaluations = inner_evals;
  return out;
}

}  // namespace gmmssl
