#include <gtest/gtest.h>

#include <cmath>

#include "eiv/weights.hpp"

using namespace eiv;

TEST(Cut, Values) {
  EXPECT_NEAR(eval_cut(0.0), std::exp(-1.0), 1e-15);
  EXPECT_EQ(eval_cut(1.0), 0.0);
  EXPECT_EQ(eval_cut(-1.0), 0.0);
  EXPECT_EQ(eval_cut(3.0), 0.0);
  EXPECT_NEAR(eval_cut(0.5), 0.263597, 1e-6);
}

TEST(Bump, IntegratesToOne) {
  const double h = 1e-4;
  double s = 0.0;
  for (int i = -10000; i <= 10000; ++i) s += eval_bump(i * h);
  EXPECT_NEAR(s * h, 1.0, 1e-8);
  EXPECT_EQ(eval_bump(1.0), 0.0);
  EXPECT_EQ(eval_bump(-1.0), 0.0);
  EXPECT_NEAR(eval_bump(0.0) * cut_integral(), std::exp(-1.0), 1e-15);
}

TEST(Bump, JetMatchesFiniteDifferences) {
  auto b = TestFunction::bump(0.3, 0.7);
  const double x = 0.45;
  const double h = 1e-4;
  EXPECT_NEAR(b.derivative(x, 1), (b(x + h) - b(x - h)) / (2 * h), 1e-6);
  EXPECT_NEAR(b.derivative(x, 2), (b(x + h) - 2 * b(x) + b(x - h)) / (h * h), 1e-3);
  EXPECT_THROW(b.derivative(x, 5), UnsupportedOrder);
}

TEST(IntervalMollified, SingleInterval) {
  auto f = make_interval_mollified({{1.0, 2.0}}, 0.2);
  EXPECT_NEAR(f(1.5), 1.0, 1e-15);
  EXPECT_EQ(f(2.3), 0.0);
  EXPECT_GT(f(2.15), 0.0);
  EXPECT_LT(f(2.15), 1.0);
  EXPECT_NEAR(f(-1.5), 1.0, 1e-15);
  EXPECT_EQ(f(0.0), 0.0);
}

TEST(IntervalMollified, PlateauAndExterior) {
  auto f = make_interval_mollified({{1.0, 2.0}, {3.0, 3.5}}, 0.2);
  for (double z = 1.0; z <= 2.0; z += 1e-3) EXPECT_LE(std::abs(f(z) - 1.0), 1e-6);
  for (double z = 3.0; z <= 3.5; z += 1e-3) EXPECT_LE(std::abs(f(-z) - 1.0), 1e-6);
  for (double z = 2.2 + 1e-9; z < 2.8 - 1e-9; z += 1e-3) EXPECT_EQ(f(z), 0.0);
  for (double z = 3.7 + 1e-9; z < 6.0; z += 1e-2) EXPECT_EQ(f(z), 0.0);
  for (double z = -4.0; z <= 4.0; z += 1e-3) {
    EXPECT_GE(f(z), 0.0);
    EXPECT_LE(f(z), 1.0 + 1e-15);
  }
}

TEST(IntervalMollified, SelfMirroredIntervalMerges) {
  auto f = make_interval_mollified({{-1.0, 1.0}}, 0.5);
  EXPECT_NEAR(f(0.0), 1.0, 1e-15);
  EXPECT_NEAR(f(1.0), 1.0, 1e-15);
  EXPECT_EQ(f(1.5), 0.0);
}

TEST(IntervalMollified, SeparationViolation) {
  EXPECT_THROW(make_interval_mollified({{1.0, 2.0}, {2.1, 3.0}}, 0.2), InvalidArgument);
  EXPECT_THROW(make_interval_mollified({{1.0, 2.0}, {1.5, 3.0}}, 0.01), InvalidArgument);
  EXPECT_THROW(make_interval_mollified({{0.05, 1.0}}, 0.2), InvalidArgument);
  EXPECT_THROW(make_interval_mollified({{1.0, 2.0}}, 0.0), InvalidArgument);
}

TEST(PolyBump, Examples) {
  auto f = make_poly_bump(0.5, 2, 0.2);
  EXPECT_NEAR(f.derivative(0.5, 2), 2.0, 1e-12);
  EXPECT_NEAR(f(0.5), 0.0, 1e-15);
  auto f0 = make_poly_bump(0.5, 0, 0.2);
  EXPECT_NEAR(f0(0.5), 1.0, 1e-15);
}

TEST(PolyBump, DerivativeIdentity) {
  for (double xi : {0.0, 0.5, 1.3}) {
    for (unsigned p = 0; p <= 3; ++p) {
      auto f = make_poly_bump(xi, p, 0.2);
      for (int l = 0; l <= 4; ++l) {
        const double expect = l == static_cast<int>(p) ? std::tgamma(p + 1.0) : 0.0;
        EXPECT_NEAR(f.derivative(xi, l), expect, 1e-3) << "xi=" << xi << " p=" << p << " l=" << l;
        if (xi != 0.0) {
          EXPECT_NEAR(f.derivative(-xi, l), (l % 2 ? -1.0 : 1.0) * expect, 1e-3);
        }
      }
    }
  }
}

TEST(PolyBump, RejectsBadInput) {
  EXPECT_THROW(make_poly_bump(0.5, 5, 0.2), UnsupportedOrder);
  EXPECT_THROW(make_poly_bump(0.1, 1, 0.2), InvalidArgument);
  EXPECT_THROW(make_poly_bump(0.5, 1, -1.0), InvalidArgument);
}

TEST(PairBump, Examples) {
  auto mu = make_pair_bump(0.5, 0.1);
  EXPECT_NEAR(mu(0.5), eval_cut(0.0) / (2.0 * cut_integral()), 1e-15);
  EXPECT_DOUBLE_EQ(mu(-0.5), mu(0.5));
  EXPECT_EQ(mu(0.0), 0.0);
  EXPECT_THROW(make_pair_bump(0.1, 0.1), InvalidArgument);
}

TEST(TestFunction, VanishesOutsideSupport) {
  std::vector<TestFunction> fs{TestFunction::cut(),
                               TestFunction::bump(0.3, 0.4),
                               make_interval_mollified({{1.0, 2.0}}, 0.2),
                               make_poly_bump(0.6, 3, 0.25),
                               make_poly_bump(0.0, 2, 0.25),
                               make_pair_bump(0.5, 0.1),
                               TestFunction::product(make_poly_bump(0.6, 1, 0.25), TestFunction::bump(0.6, 0.05))};
  for (const auto& f : fs) {
    const auto sup = f.support();
    ASSERT_FALSE(sup.empty());
    const double lo = sup.front().lo;
    const double hi = sup.back().hi;
    for (int i = 0; i < 1000; ++i) {
      const double d = 1e-9 + i * 5e-3;
      EXPECT_EQ(f(hi + d), 0.0);
      EXPECT_EQ(f(lo - d), 0.0);
      EXPECT_EQ(f.derivative(hi + d, 3), 0.0);
    }
    for (std::size_t k = 0; k + 1 < sup.size(); ++k)
      for (double z = sup[k].hi + 1e-9; z < sup[k + 1].lo; z += 1e-3) EXPECT_EQ(f(z), 0.0);
  }
}

TEST(TestFunction, EvenConstructions) {
  std::vector<TestFunction> fs{TestFunction::cut(), make_interval_mollified({{1.0, 2.0}, {0.2, 0.5}}, 0.1),
                               make_poly_bump(0.6, 2, 0.25), make_poly_bump(0.6, 1, 0.25), make_pair_bump(0.5, 0.1)};
  for (const auto& f : fs)
    for (double z = 0.0; z < 3.0; z += 1e-3) EXPECT_NEAR(f(z), f(-z), 1e-14);
}

TEST(TestFunction, AffineAndDerivative) {
  auto f = TestFunction::affine(TestFunction::cut(), 1.0, 2.0, 3.0);
  EXPECT_NEAR(f(1.0), 3.0 * std::exp(-1.0), 1e-15);
  EXPECT_NEAR(f.derivative(1.8, 1), 1.5 * TestFunction::cut().derivative(0.4, 1), 1e-14);
  auto d = TestFunction::derivative_of(TestFunction::cut());
  EXPECT_NEAR(d(0.3), TestFunction::cut().derivative(0.3, 1), 1e-15);
  EXPECT_EQ(d.max_deriv_order(), 4);
}
