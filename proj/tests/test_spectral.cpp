#include <gtest/gtest.h>

#include <cmath>

#include "eiv/spectral.hpp"

using namespace eiv;

namespace {

double sup_diff(const GridSpectrum& s, auto&& f) {
  double w = 0.0;
  for (std::size_t i = 0; i < s.size(); ++i) w = std::max(w, std::abs(s.values[i] - cplx(f(s.zeta(i)))));
  return w;
}

}  // namespace

TEST(Sinc, Basics) {
  EXPECT_EQ(sinc(0.0), 1.0);
  EXPECT_NEAR(sinc(0.5), 2.0 / kPi, 1e-15);
  EXPECT_NEAR(sinc(1.0), 0.0, 1e-15);
}

TEST(FtStep, UnitBox) {
  auto g = RealGrid::symmetric(20.0, 0.01);
  auto s = ft_step(StepFunction::indicator(-1.0, 1.0), g);
  EXPECT_NEAR(std::abs(s.at_zero() - 2.0), 0.0, 1e-15);
  EXPECT_LT(sup_diff(s, [](double z) { return z == 0.0 ? 2.0 : 2.0 * std::sin(z) / z; }), 1e-14);
  EXPECT_TRUE(s.hermitian);
  EXPECT_TRUE(check_hermitian(s, 1e-10));
}

TEST(FtStep, HalfBoxAgainstDirectIntegral) {
  auto g = RealGrid::symmetric(10.0, 0.05);
  auto s = ft_step(StepFunction::indicator(0.0, 1.0), g);
  for (std::size_t i = 0; i < g.size(); i += 7) {
    const double z = g[i];
    const cplx direct = trapezoid_fn([&](double x) { return std::polar(1.0, x * z); }, 0.0, 1.0, 4000);
    EXPECT_LT(std::abs(s.values[i] - direct), 1e-6);
    EXPECT_NEAR(std::abs(s.values[i]), z == 0.0 ? 1.0 : std::abs(2.0 * std::sin(z / 2) / z), 1e-14);
  }
}

TEST(FtStep, ZeroFunction) {
  auto s = ft_step(StepFunction({0.0, 1.0}, {0.0}), RealGrid::symmetric(1.0, 0.1));
  for (auto v : s.values) EXPECT_EQ(v, cplx(0.0));
}

TEST(FtStep, ValueAtZeroIsIntegral) {
  StepFunction f({-2.0, -0.5, 0.25, 1.0}, {0.3, -1.2, 2.5});
  auto s = ft_step(f, RealGrid::symmetric(1.0, 0.5));
  EXPECT_NEAR(s.at_zero().real(), f.integral(), 1e-14);
}

TEST(FtStep, DerivativeMatchesNumeric) {
  StepFunction f({-2.0, -0.5, 0.25, 1.0}, {0.3, -1.2, 2.5});
  auto g = RealGrid::symmetric(10.0, 0.001);
  auto d = ft_step_derivative(f, g);
  auto n = derivative(ft_step(f, g));
  for (std::size_t i = 1; i + 1 < g.size(); i += 13) EXPECT_LT(std::abs(d.values[i] - n.values[i]), 1e-5);
}

TEST(FtPiecewiseLinear, IdentityOnUnitInterval) {
  PiecewiseLinearFunction w({PiecewiseLinearFunction::canonical(1.0, 0.0, 0.0, 1.0)});
  auto g = RealGrid::symmetric(20.0, 0.01);
  auto s = ft_piecewise_linear(w, g);
  EXPECT_EQ(s.at_zero(), cplx(0.0));
  EXPECT_LT(sup_diff(s, [](double z) {
              return z == 0.0 ? cplx(0.0) : -2.0 * kI * (z * std::cos(z) - std::sin(z)) / (z * z);
            }),
            1e-12);
  for (std::size_t i = 0; i < g.size(); i += 311) {
    const double z = g[i];
    const cplx direct = trapezoid_fn([&](double x) { return x * std::polar(1.0, x * z); }, -1.0, 1.0, 20000);
    EXPECT_LT(std::abs(s.values[i] - direct), 1e-5);
  }
  EXPECT_TRUE(check_hermitian(s, 1e-10));
}

TEST(FtPiecewiseLinear, ShiftedIntercept) {
  PiecewiseLinearFunction w({PiecewiseLinearFunction::canonical(1.0, 0.0, 0.5, 1.0)});
  auto g = RealGrid::symmetric(10.0, 0.01);
  auto s = ft_piecewise_linear(w, g);
  auto v = ft_piecewise_linear(PiecewiseLinearFunction({PiecewiseLinearFunction::canonical(1.0, 0.0, 0.0, 1.0)}), g);
  auto b = ft_step(StepFunction::indicator(-1.0, 1.0), g);
  for (std::size_t i = 0; i < g.size(); ++i) EXPECT_LT(std::abs(s.values[i] - (v.values[i] - 0.5 * b.values[i])), 1e-14);
}

TEST(FtPiecewiseLinear, ZeroFunction) {
  auto s = ft_piecewise_linear(PiecewiseLinearFunction{}, RealGrid::symmetric(1.0, 0.1));
  for (auto v : s.values) EXPECT_EQ(v, cplx(0.0));
}

TEST(Charfun, Examples) {
  auto g = RealGrid::symmetric(20.0, 0.01);
  auto one = charfun_discrete(DiscreteDistribution::point_mass(), g);
  EXPECT_LT(sup_diff(one, [](double) { return 1.0; }), 1e-15);
  auto c = charfun_discrete(DiscreteDistribution({{0.5, -1.0}, {0.5, 1.0}}), g);
  EXPECT_LT(sup_diff(c, [](double z) { return std::cos(z); }), 1e-15);
  auto t = charfun_discrete(DiscreteDistribution({{0.5, 0.0}, {0.25, -0.3}, {0.25, 0.3}}), g);
  EXPECT_LT(sup_diff(t, [](double z) { return 0.5 + 0.5 * std::cos(0.3 * z); }), 1e-15);
  EXPECT_EQ(t.at_zero(), cplx(1.0));
  EXPECT_TRUE(check_hermitian(t, 1e-10));
}

TEST(InverseFt, BoxReconstruction) {
  auto freq = RealGrid::symmetric(200.0, 0.01);
  auto s = ft_step(StepFunction::indicator(-1.0, 1.0), freq);
  RealGrid x(-3.0, 3.0, 601);
  auto r = inverse_ft_grid(s, x);
  for (std::size_t j = 0; j < x.size(); ++j) {
    if (std::abs(std::abs(x[j]) - 1.0) < 0.1) continue;
    EXPECT_NEAR(r.values[j], std::abs(x[j]) < 1.0 ? 1.0 : 0.0, 0.05) << x[j];
  }
  EXPECT_LT(r.imag_residual, 1e-8);
}

TEST(InverseFt, ZeroSpectrum) {
  auto r = inverse_ft_grid(GridSpectrum::zeros(RealGrid::symmetric(5.0, 0.1)), RealGrid(-1.0, 1.0, 11));
  for (double v : r.values) EXPECT_EQ(v, 0.0);
  EXPECT_EQ(r.imag_residual, 0.0);
}

TEST(InverseFt, NonIntegrableSpectrumDoesNotSettle) {
  RealGrid x(-3.0, 3.0, 601);
  double amp_small = 0.0;
  double amp_large = 0.0;
  for (double half : {20.0, 80.0}) {
    auto s = charfun_discrete(DiscreteDistribution({{0.5, -1.0}, {0.5, 1.0}}), RealGrid::symmetric(half, 0.01));
    auto r = inverse_ft_grid(s, x);
    EXPECT_TRUE(std::isfinite(r.imag_residual));
    double m = 0.0;
    for (double v : r.values) m = std::max(m, std::abs(v));
    (half < 50.0 ? amp_small : amp_large) = m;
  }
  EXPECT_GT(amp_large, 2.0 * amp_small);
}

TEST(ForwardFt, Gaussian) {
  RealGrid x = RealGrid::symmetric(10.0, 0.01);
  std::vector<double> v(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) v[i] = std::exp(-0.5 * x[i] * x[i]);
  auto s = forward_ft_grid(x, v, RealGrid::symmetric(3.0, 0.01));
  EXPECT_LT(sup_diff(s, [](double z) { return std::sqrt(2 * kPi) * std::exp(-0.5 * z * z); }), 1e-6);
}

TEST(ForwardFt, ZeroAndRoundTrip) {
  RealGrid x = RealGrid::symmetric(30.0, 0.02);
  auto z = forward_ft_grid(x, std::vector<double>(x.size(), 0.0), RealGrid::symmetric(2.0, 0.1));
  for (auto v : z.values) EXPECT_EQ(v, cplx(0.0));
  auto freq = RealGrid::symmetric(8.0, 0.01);
  auto spec = GridSpectrum::sample(freq, [](double w) { return std::exp(-0.5 * w * w) * std::polar(1.0, 0.3 * w); });
  RealGrid xs = RealGrid::symmetric(20.0, 0.05);
  auto g = inverse_ft_grid(spec, xs);
  EXPECT_LT(g.imag_residual, 1e-10);
  auto back = forward_ft_grid(xs, g.values, freq);
  double w = 0.0;
  for (std::size_t i = 0; i < freq.size(); ++i) w = std::max(w, std::abs(back.values[i] - spec.values[i]));
  EXPECT_LT(w, 1e-6);
}
