#include <gtest/gtest.h>

#include <cmath>

#include "eiv/deconv.hpp"
#include "eiv/simulate.hpp"

using namespace eiv;

namespace {

double box_ft(double z) { return z == 0.0 ? 2.0 : 2.0 * std::sin(z) / z; }
double box_ft_dot(double z) { return z == 0.0 ? 0.0 : 2.0 * (z * std::cos(z) - std::sin(z)) / (z * z); }

/// Exact spectra eps_y = gamma phi, eps_y' = gamma' phi + gamma phi', eps_xy = -i gamma' phi.
template <class Phi, class PhiDot>
MomentSpectra exact_spectra(const RealGrid& g, Phi phi, PhiDot phid) {
  auto ey = GridSpectrum::sample(g, [&](double z) { return box_ft(z) * phi(z); });
  auto ed = GridSpectrum::sample(g, [&](double z) { return box_ft_dot(z) * phi(z) + box_ft(z) * phid(z); });
  auto ex = GridSpectrum::sample(g, [&](double z) { return -kI * box_ft_dot(z) * phi(z); });
  return {ey, ex, ed};
}

RegularizationConfig config(double half, double h, double zeta_bar) {
  RegularizationConfig c;
  c.grid = RealGrid::symmetric(half, h);
  c.zeta_bar = zeta_bar;
  return c;
}

MomentSpectra default_oracle(const RealGrid& g) {
  auto c = oracle_carriers(StepFunction::indicator(-1.0, 1.0), default_error_law());
  return moments_to_spectra(c.w_y, c.w_xy, g);
}

double three_atom_phi(double z) { return 0.5 + 0.5 * std::cos(0.3 * z); }

}  // namespace

TEST(Kappa, PointMassGivesZero) {
  auto cfg = config(8.0, 0.01, 8.0);
  auto k = kappa_from_spectra(exact_spectra(cfg.grid, [](double) { return 1.0; }, [](double) { return 0.0; }), cfg);
  for (auto v : k.kappa.values) EXPECT_LT(std::abs(v), 1e-12);
}

TEST(Kappa, Gaussian) {
  const double s2 = 0.25;
  auto cfg = config(4.0, 0.01, 4.0);
  auto sp = exact_spectra(cfg.grid, [&](double z) { return std::exp(-0.5 * s2 * z * z); },
                          [&](double z) { return -s2 * z * std::exp(-0.5 * s2 * z * z); });
  auto k = kappa_from_spectra(sp, cfg);
  for (std::size_t i = 0; i < cfg.grid.size(); ++i) EXPECT_LT(std::abs(k.kappa.values[i] + s2 * cfg.grid[i]), 1e-4);
}

TEST(Kappa, ThreeAtoms) {
  auto cfg = config(8.0, 0.01, 8.0);
  auto k = kappa_from_spectra(default_oracle(cfg.grid), cfg);
  for (std::size_t i = 0; i < cfg.grid.size(); ++i) {
    const double z = cfg.grid[i];
    EXPECT_LT(std::abs(k.kappa.values[i] - (-0.15 * std::sin(0.3 * z) / three_atom_phi(z))), 1e-4) << z;
  }
}

TEST(Kappa, Errors) {
  auto cfg = config(8.0, 0.01, 8.0);
  auto zero = GridSpectrum::zeros(cfg.grid);
  EXPECT_THROW(kappa_from_spectra({zero, zero, zero}, cfg), NoSignal);
  cfg.trim_threshold = 0.5;
  EXPECT_THROW(kappa_from_spectra(default_oracle(cfg.grid), cfg), UnidentifiableBand);
  cfg.trim_threshold = 1e-2;
  cfg.interpolate_trimmed = false;
  EXPECT_THROW(kappa_from_spectra(default_oracle(cfg.grid), cfg), UnidentifiableBand);
}

TEST(Phi, FromZeroKappa) {
  auto g = RealGrid::symmetric(3.0, 0.01);
  auto phi = phi_from_kappa(GridSpectrum::zeros(g));
  for (auto v : phi.values) EXPECT_EQ(v, cplx(1.0));
}

TEST(Phi, FromGaussianKappa) {
  const double s2 = 0.25;
  auto g = RealGrid::symmetric(4.0, 0.01);
  auto phi = phi_from_kappa(GridSpectrum::sample(g, [&](double z) { return cplx(-s2 * z); }));
  for (std::size_t i = 0; i < g.size(); ++i) EXPECT_LT(std::abs(phi.values[i] - std::exp(-0.5 * s2 * g[i] * g[i])), 1e-5);
  EXPECT_EQ(phi.at_zero(), cplx(1.0));
}

TEST(Phi, FromThreeAtomKappa) {
  auto cfg = config(8.0, 0.01, 8.0);
  auto phi = phi_from_kappa(kappa_from_spectra(default_oracle(cfg.grid), cfg).kappa);
  for (std::size_t i = 0; i < cfg.grid.size(); ++i) EXPECT_LT(std::abs(phi.values[i] - three_atom_phi(cfg.grid[i])), 1e-4);
}

TEST(Phi, Divergence) {
  auto g = RealGrid::symmetric(40.0, 0.01);
  EXPECT_THROW(phi_from_kappa(GridSpectrum::sample(g, [](double z) { return cplx(z); })), DivergentIntegrand);
}

TEST(Deconvolve, Examples) {
  auto cfg = config(10.0, 0.01, 8.0);
  auto ey = GridSpectrum::sample(cfg.grid, [](double z) { return cplx(box_ft(z) * three_atom_phi(z)); });
  auto one = GridSpectrum::sample(cfg.grid, [](double) { return cplx(1.0); });
  auto g1 = deconvolve(ey, one, cfg);
  auto phi = GridSpectrum::sample(cfg.grid, [](double z) { return cplx(three_atom_phi(z)); });
  auto g2 = deconvolve(ey, phi, cfg);
  auto g3 = deconvolve(GridSpectrum::zeros(cfg.grid), phi, cfg);
  for (std::size_t i = 0; i < cfg.grid.size(); ++i) {
    const double z = cfg.grid[i];
    const bool band = std::abs(z) <= 8.0;
    EXPECT_EQ(g1.values[i], band ? ey.values[i] : cplx(0.0));
    if (band) {
      EXPECT_LT(std::abs(g2.values[i] - box_ft(z)), 1e-10);
    }
    EXPECT_EQ(g3.values[i], cplx(0.0));
  }
}

TEST(Deconvolve, ZeroPhiInBand) {
  auto cfg = config(12.0, 0.01, 11.0);
  auto phi = GridSpectrum::sample(cfg.grid, [](double z) { return cplx(std::abs(z - 10.0) < 0.005 ? 0.0 : 1.0); });
  EXPECT_THROW(deconvolve(GridSpectrum::zeros(cfg.grid), phi, cfg), AssumptionViolation);
}

TEST(Pipeline, ExactMeasurementIsBandLimitedRoundTrip) {
  auto cfg = config(8.0, 0.01, 8.0);
  StepFunction g({-1.0, -0.2, 0.5, 1.0}, {1.0, 2.0, -0.5});
  auto c = oracle_carriers(g, DiscreteDistribution::point_mass());
  RealGrid x(-3.0, 3.0, 601);
  auto r = run_pipeline(c.w_y, c.w_xy, cfg, x);
  auto ref = band_limited_reconstruction(c.w_y, cfg, x);
  for (std::size_t i = 0; i < x.size(); ++i) EXPECT_NEAR(r.g_values[i], ref[i], 1e-6);
}

TEST(Pipeline, ThreeAtomRecovery) {
  auto cfg = config(8.0, 0.01, 8.0);
  auto c = oracle_carriers(StepFunction::indicator(-1.0, 1.0), default_error_law());
  RealGrid x(-3.0, 3.0, 601);
  auto r = run_pipeline(c.w_y, c.w_xy, cfg, x);
  for (std::size_t i = 0; i < cfg.grid.size(); ++i) EXPECT_LT(std::abs(r.phi.values[i] - three_atom_phi(cfg.grid[i])), 1e-3);
  std::vector<double> truth(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) truth[i] = std::abs(x[i]) < 1.0 ? 1.0 : 0.0;
  // Frozen regression value; the sharp band cut alone accounts for it (the exact gamma truncated
  // at 8 reconstructs with the same L1 error).
  const double l1 = l1_distance(x, r.g_values, truth);
  EXPECT_NEAR(l1, 0.3796, 2e-3);
  EXPECT_NEAR(l1, l1_distance(x, band_limited_reconstruction(StepFunction::indicator(-1.0, 1.0), cfg, x), truth), 1e-3);
  EXPECT_EQ(r.phi.at_zero(), cplx(1.0));
  EXPECT_LT(r.diagnostics.imag_residual, 1e-8);
}

TEST(Pipeline, TruncationBiasDecreases) {
  auto c = oracle_carriers(StepFunction::indicator(-1.0, 1.0), default_error_law());
  RealGrid x(-3.0, 3.0, 601);
  std::vector<double> truth(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) truth[i] = std::abs(x[i]) < 1.0 ? 1.0 : 0.0;
  double prev = 1e9;
  for (double zb : {2.0, 4.0, 8.0}) {
    auto r = run_pipeline(c.w_y, c.w_xy, config(8.0, 0.01, zb), x);
    const double l1 = l1_distance(x, r.g_values, truth);
    EXPECT_LT(l1, prev);
    prev = l1;
  }
}

TEST(Pipeline, ScaleEquivariance) {
  auto cfg = config(8.0, 0.01, 8.0);
  auto s = default_oracle(cfg.grid);
  const double c = -2.5;
  MomentSpectra t = s;
  for (auto* v : {&t.eps_y, &t.eps_xy, &t.eps_y_dot})
    for (auto& x : v->values) x *= c;
  RealGrid x(-3.0, 3.0, 121);
  auto a = run_pipeline(s, cfg, x);
  auto b = run_pipeline(t, cfg, x);
  for (std::size_t i = 0; i < cfg.grid.size(); ++i) {
    EXPECT_LT(std::abs(a.kappa.values[i] - b.kappa.values[i]), 1e-13);
    EXPECT_LT(std::abs(a.phi.values[i] - b.phi.values[i]), 1e-13);
  }
  for (std::size_t i = 0; i < x.size(); ++i) EXPECT_NEAR(b.g_values[i], c * a.g_values[i], 1e-12);
}

TEST(Pipeline, ShiftedErrorLaw) {
  const double a = 0.2;
  DiscreteDistribution F({{0.25, -0.3 + a}, {0.5, a}, {0.25, 0.3 + a}}, DiscreteDistribution::MeanPolicy::kAny);
  auto c = oracle_carriers(StepFunction::indicator(-1.0, 1.0), F);
  auto cfg = config(8.0, 0.01, 8.0);
  RealGrid x(-3.0, 3.0, 601);
  auto r = run_pipeline(c.w_y, c.w_xy, cfg, x);
  auto base = run_pipeline(oracle_carriers(StepFunction::indicator(-1.0, 1.0), default_error_law()).w_y,
                           oracle_carriers(StepFunction::indicator(-1.0, 1.0), default_error_law()).w_xy, cfg, x);
  for (std::size_t i = 0; i < cfg.grid.size(); ++i)
    EXPECT_LT(std::abs(r.phi.values[i] - std::polar(1.0, a * cfg.grid[i]) * base.phi.values[i]), 1e-3);
  for (std::size_t i = 0; i < x.size(); ++i) EXPECT_NEAR(r.g_values[i], base.g_values[i], 1e-3);
}

TEST(Pipeline, PhiBoundedAndReproducesEpsY) {
  auto cfg = config(8.0, 0.01, 8.0);
  auto s = default_oracle(cfg.grid);
  auto r = run_pipeline(s, cfg, RealGrid(-3.0, 3.0, 61));
  for (std::size_t i = 0; i < cfg.grid.size(); ++i) {
    EXPECT_LE(std::abs(r.phi.values[i]), 1.0 + 1e-3);
    EXPECT_LT(std::abs(r.gamma.values[i] * r.phi.values[i] - s.eps_y.values[i]), 1e-10);
  }
}

TEST(Pipeline, AutomaticBandFromSample) {
  auto d = default_dgp();
  auto b = bin_conditional_means(draw(d, 20000), default_bin_count(20000), 5);
  RegularizationConfig cfg = config(20.0, 0.01, 20.0);
  cfg.auto_zeta_bar = true;
  cfg.trim_threshold = 1e-2;
  auto r = run_pipeline(moments_to_spectra(b, cfg.grid), cfg, RealGrid(-3.0, 3.0, 121));
  EXPECT_GT(r.diagnostics.zeta_bar_used, 0.0);
  EXPECT_LE(r.diagnostics.zeta_bar_used, 20.0);
  EXPECT_LE(r.diagnostics.trimmed_fraction, 0.5);
}
