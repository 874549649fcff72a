#include <array>
#include <cmath>
#include <numbers>
#include <random>
#include <stdexcept>

#include <gtest/gtest.h>

#include "gmmssl/quadrature.hpp"
#include "gmmssl/specfn.hpp"

using namespace gmmssl;

TEST(KronrodRule, WeightsSumToTwo) {
  double sum = detail::kKronrodWeights[10];
  for (int j = 0; j < 10; ++j) sum += 2.0 * detail::kKronrodWeights[j];
  EXPECT_NEAR(sum, 2.0, 1e-15);
  double gauss = 0.0;
  for (double w : detail::kGaussWeights) gauss += 2.0 * w;
  EXPECT_NEAR(gauss, 2.0, 1e-15);
}

// A 21-point Kronrod rule integrates polynomials of degree up to 31 exactly.
TEST(KronrodRule, ExactForMonomialsUpToDegree30) {
  for (int k = 0; k <= 30; ++k) {
    auto f = [k](double x) { return std::pow(x, k); };
    const detail::Panel p = detail::kronrod21(f, -1.0, 1.0);
    const double exact = (k % 2 == 0) ? 2.0 / (k + 1) : 0.0;
    EXPECT_NEAR(p.value, exact, 1e-14) << k;
  }
}

TEST(Integrate1d, Constant) {
  const auto r = integrate_1d([](double) { return 1.0; }, 0.0, 1.0, 1e-12);
  EXPECT_NEAR(r.value, 1.0, 1e-14);
  EXPECT_GE(r.abs_error_estimate, 0.0);
  EXPECT_GT(r.evaluations, 0u);
}

TEST(Integrate1d, NormalDensityNormalizes) {
  const auto r = integrate_1d([](double x) { return std_normal_pdf(x); }, -8.0, 8.0, 1e-12);
  EXPECT_NEAR(r.value, 1.0, 1e-10);
}

TEST(Integrate1d, Square) {
  const auto r = integrate_1d([](double x) { return x * x; }, 0.0, 1.0, 1e-13);
  EXPECT_NEAR(r.value, 1.0 / 3.0, 1e-12);
}

TEST(Integrate1d, KinkAtBreakpoint) {
  const std::array<double, 3> edges = {-1.0, 0.3, 2.0};
  const auto r = integrate_1d([](double x) { return std::abs(x - 0.3); },
                              std::span<const double>(edges), 1e-12);
  EXPECT_NEAR(r.value, 0.5 * 1.3 * 1.3 + 0.5 * 1.7 * 1.7, 1e-12);
}

TEST(Integrate1d, AdaptsToSharpPeak) {
  // Narrow enough to force many bisections, wide enough for the first
  // 21-point pass to register it.
  const double w = 0.02;
  auto f = [w](double x) { return std::exp(-0.5 * (x - 0.123) * (x - 0.123) / (w * w)); };
  const auto r = integrate_1d(f, -1.0, 1.0, 1e-12);
  EXPECT_NEAR(r.value, w * std::sqrt(2.0 * std::numbers::pi), 1e-11);
}

TEST(Integrate1d, BudgetExhaustionIsAnError) {
  QuadratureOptions opts;
  opts.max_evaluations = 100;
  auto f = [](double x) { return std::sin(1.0 / (x + 1e-3)); };
  EXPECT_THROW(integrate_1d(f, 0.0, 1.0, 1e-12, opts), NonConvergenceError);
}

TEST(Integrate1d, RejectsBadArguments) {
  auto f = [](double) { return 1.0; };
  EXPECT_THROW(integrate_1d(f, 1.0, 0.0), std::invalid_argument);
  EXPECT_THROW(integrate_1d(f, 0.0, 1.0, 0.0), std::invalid_argument);
  auto bad = [](double) { return std::nan(""); };
  EXPECT_THROW(integrate_1d(bad, 0.0, 1.0), NonConvergenceError);
}

TEST(Integrate1d, LinearityOnRandomSmoothFunctions) {
  std::mt19937_64 gen(11);
  std::uniform_real_distribution<double> u(-2.0, 2.0);
  for (int rep = 0; rep < 20; ++rep) {
    const double a = u(gen), b = u(gen), c = u(gen), e = u(gen), s = u(gen), t = u(gen);
    auto f = [=](double x) { return std::sin(c * x) + x * x * e; };
    auto g = [=](double x) { return std::exp(-x * x * std::abs(c)) * std::cos(e * x); };
    auto h = [&](double x) { return s * f(x) + t * g(x); };
    const auto rf = integrate_1d(f, a - 3.0, b + 3.0, 1e-11);
    const auto rg = integrate_1d(g, a - 3.0, b + 3.0, 1e-11);
    const auto rh = integrate_1d(h, a - 3.0, b + 3.0, 1e-11);
    const double bound = std::abs(s) * rf.abs_error_estimate + std::abs(t) * rg.abs_error_estimate +
                         rh.abs_error_estimate + 1e-13;
    EXPECT_NEAR(rh.value, s * rf.value + t * rg.value, bound);
  }
}

TEST(Integrate1d, Deterministic) {
  auto f = [](double x) { return std::log1p(x * x) * std::cos(3 * x); };
  const auto a = integrate_1d(f, -2.0, 5.0, 1e-10);
  const auto b = integrate_1d(f, -2.0, 5.0, 1e-10);
  EXPECT_EQ(a.value, b.value);
  EXPECT_EQ(a.abs_error_estimate, b.abs_error_estimate);
  EXPECT_EQ(a.evaluations, b.evaluations);
}

TEST(Integrate2d, UnitSquare) {
  const auto r = integrate_2d([](double, double) { return 1.0; }, Rectangle{0, 1, 0, 1}, 1e-12);
  EXPECT_NEAR(r.value, 1.0, 1e-14);
}

TEST(Integrate2d, ProductNormalization) {
  const auto r = integrate_2d([](double u, double w) { return std_normal_pdf(u) * std_normal_pdf(w); },
                              Rectangle{-8, 8, -8, 8}, 1e-11);
  EXPECT_NEAR(r.value, 1.0, 1e-9);
}

TEST(Integrate2d, Bilinear) {
  const auto r = integrate_2d([](double u, double w) { return u * w; }, Rectangle{0, 1, 0, 1}, 1e-13);
  EXPECT_NEAR(r.value, 0.25, 1e-12);
}

TEST(Integrate2d, TriangleViaIndicatorEdge) {
  // Indicator y <= x over the unit square, with the kink left to adaptivity.
  auto f = [](double x, double y) { return y <= x ? 1.0 : 0.0; };
  QuadratureOptions opts;
  opts.max_evaluations = 200'000;
  const auto r = integrate_2d(f, Rectangle{0, 1, 0, 1}, 1e-6, opts);
  EXPECT_NEAR(r.value, 0.5, 1e-5);
}

TEST(Integrate2d, RejectsDegenerateRegion) {
  EXPECT_THROW(integrate_2d([](double, double) { return 1.0; }, Rectangle{0, 0, 0, 1}),
               std::invalid_argument);
}
