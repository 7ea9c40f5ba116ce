#include <gtest/gtest.h>

#include <cmath>

#include "eiv/semiparam.hpp"

using namespace eiv;

namespace {

DiscreteDistribution skewed_law() { return DiscreteDistribution({{0.5, -0.2}, {0.25, 0.1}, {0.25, 0.3}}); }

MomentData oracle(const ThetaModel& m, const DiscreteDistribution& F = default_error_law()) {
  return MomentData::oracle(m, m.theta_star, F);
}

}  // namespace

TEST(Optim, RichardsonRemovesPowers) {
  const std::vector<double> t{0.4, 0.2, 0.1};
  const auto w = richardson_weights(t, {2, 4});
  double v = 0.0;
  for (std::size_t j = 0; j < t.size(); ++j) v += w[j] * (3.0 + 5.0 * t[j] * t[j] - 7.0 * std::pow(t[j], 4));
  EXPECT_NEAR(v, 3.0, 1e-12);
}

TEST(Optim, NelderMeadRosenbrock) {
  auto f = [](const Eigen::VectorXd& x) {
    return 100.0 * std::pow(x(1) - x(0) * x(0), 2) + std::pow(1.0 - x(0), 2);
  };
  auto r = nelder_mead(f, Eigen::Vector2d(-1.2, 1.0), Eigen::Vector2d(0.1, 0.1), 5000, 1e-20, 1e-12);
  EXPECT_NEAR(r.x(0), 1.0, 1e-5);
  EXPECT_NEAR(r.x(1), 1.0, 1e-5);
}

TEST(Optim, GaussNewtonLinear) {
  Eigen::MatrixXd A(3, 2);
  A << 1, 0, 1, 1, 1, 2;
  Eigen::Vector3d b(1, 2, 2);
  auto r = gauss_newton([&](const Eigen::VectorXd& x) { return Eigen::VectorXd(A * x - b); }, Eigen::Vector2d(0, 0));
  const Eigen::VectorXd ls = A.colPivHouseholderQr().solve(b);
  EXPECT_NEAR((r.x - ls).norm(), 0.0, 1e-8);
}

TEST(GammaMatrices, KbarOne) {
  const cplx g0(2.0, 0.5), g1(-1.0, 3.0);
  auto G = gamma_matrices_from_coefs({g0, g1});
  Eigen::Matrix2cd y, xy;
  y << g0, g1, g1, 0.0;
  xy << g0, 2.0 * g1, g1, 0.0;
  EXPECT_EQ(G.gamma_y, y);
  EXPECT_EQ(G.gamma_xy, xy);
  EXPECT_EQ(G.M(0), 1.0);
  EXPECT_EQ(G.M(1), 1.0);
}

TEST(GammaMatrices, KbarZeroAndTwo) {
  auto G0 = gamma_matrices_from_coefs({cplx(1.5)});
  EXPECT_EQ(G0.gamma_y(0, 0), cplx(1.5));
  EXPECT_EQ(G0.gamma_xy(0, 0), cplx(1.5));
  const cplx a(1.0), b(0.0, -2.0), c(-0.7);
  auto G = gamma_matrices_from_coefs({a, b, c});
  Eigen::Matrix3cd y, xy;
  y << a, b, c, b, 2.0 * c, 0.0, c, 0.0, 0.0;
  xy << a, 2.0 * b, 3.0 * c, b, 3.0 * c, 0.0, c, 0.0, 0.0;
  EXPECT_EQ(G.gamma_y, y);
  EXPECT_EQ(G.gamma_xy, xy);
  EXPECT_EQ(G.M(2), 2.0);
}

TEST(GammaMatrices, Singular) {
  EXPECT_THROW(gamma_matrices_from_coefs({cplx(0.0)}), NoninvertibleGamma);
  auto m = make_model("poly1+gauss");
  EXPECT_THROW(build_gamma_matrices(m, 0, ThetaVec{{1.0, 0.0, 2.0}}), NoninvertibleGamma);
  EXPECT_THROW(build_gamma_matrices(m, 1, m.theta_star), InvalidArgument);
}

TEST(Model, RegistryAndValidation) {
  for (const auto& n : model_names()) EXPECT_NO_THROW(make_model(n)) << n;
  EXPECT_THROW(make_model("nope"), InvalidArgument);
  auto m = make_model("poly1");
  m.singular[0].kbar = 4;
  EXPECT_THROW(m.validate(m.theta_star), UnsupportedOrder);
  m = make_model("cosine+rational");
  m.singular.push_back(m.singular[0]);
  EXPECT_THROW(m.validate(m.theta_star), ConstructionError);
  m = make_model("gauss");
  EXPECT_THROW(m.validate(ThetaVec{{0.0, 1.0}}), AssumptionViolation);
}

TEST(Model, OracleSpectraMatchNumericTransform) {
  // Regular part of eps_y for the Gaussian component equals the transform of W_y.
  auto m = make_model("gauss");
  const auto F = default_error_law();
  auto d = oracle(m, F);
  RealGrid x(-12.0, 12.0, 4801);
  auto w = oracle_moments(m.regression(m.theta_star), F, x);
  std::vector<cplx> ey, exy;
  d.spectra(-3.0, 0.5, 13, ey, exy);
  for (std::size_t k = 0; k < 13; ++k) {
    const double z = -3.0 + 0.5 * static_cast<double>(k);
    cplx ft = 0.0, ftxy = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
      const double wt = (i == 0 || i + 1 == x.size()) ? 0.5 : 1.0;
      ft += wt * w.w_y[i] * std::polar(1.0, x[i] * z);
      ftxy += wt * w.w_xy[i] * std::polar(1.0, x[i] * z);
    }
    ft *= x.step();
    ftxy *= x.step();
    EXPECT_LT(std::abs(ft - ey[k]), 1e-8);
    EXPECT_LT(std::abs(ftxy - exy[k]), 1e-8);
  }
}

TEST(OrdinaryShape, ZeroAtTruth) {
  for (const char* n : {"poly1+gauss", "gauss", "cosine+rational", "box"}) {
    auto m = make_model(n);
    EXPECT_LT(std::abs(moment_ordinary_shape(m, m.theta_star, oracle(m, skewed_law()))), 1e-6) << n;
  }
}

TEST(OrdinaryShape, PerturbedSignMatchesClosedForm) {
  auto m = make_model("gauss");
  const auto F = skewed_law();
  ThetaVec th = m.theta_star;
  th(1) *= 1.1;
  const cplx v = moment_ordinary_shape(m, th, oracle(m, F));
  Schedule sch;
  const auto fV = ordinary_shape_window(m, sch);
  auto integrand = [&](double z) {
    const cplx a = m.gamma_o(z, m.theta_star), ad = m.gamma_o_dot(z, m.theta_star);
    return kI * F.charfun(z) * fV(z) * (a * m.gamma_o_dot(z, th) - ad * m.gamma_o(z, th));
  };
  const cplx ref = trapezoid_fn(integrand, -7.0, 7.0, 140000);
  EXPECT_GT(std::abs(ref), 1e-3);
  EXPECT_LT(std::abs(v - ref), 1e-6 * std::abs(ref) + 1e-9);
  if (std::abs(ref.real()) > 1e-6) {
    EXPECT_EQ(std::signbit(v.real()), std::signbit(ref.real()));
  }
  if (std::abs(ref.imag()) > 1e-6) {
    EXPECT_EQ(std::signbit(v.imag()), std::signbit(ref.imag()));
  }
}

TEST(OrdinaryShape, EmptyVIsZero) {
  auto m = make_model("poly1+gauss");
  Schedule sch;
  sch.v_zeta_bar = 0.6;
  ThetaVec th = m.theta_star * 1.5;
  EXPECT_EQ(moment_ordinary_shape(m, th, oracle(m), sch), cplx(0.0));
}

TEST(OrdinaryShape, InsensitiveToInjectedAtoms) {
  auto m = make_model("cosine+rational");
  auto d = oracle(m);
  ThetaVec th{{0.7, 1.9}};
  const cplx base = moment_ordinary_shape(m, th, d);
  DeltaTrain extra({{2.0, 0, cplx(3.0, -1.0)}, {2.0, 2, cplx(-0.5, 0.25)}, {-2.0, 1, cplx(1.0)}});
  const cplx moved = moment_ordinary_shape(m, th, d.with_atoms(extra, extra.derivative()));
  EXPECT_LE(std::abs(moved - base), 1e-12);
}

TEST(OrdinaryShape, SeparationError) {
  auto m = make_model("poly1+gauss");
  Schedule sch;
  sch.exclusion = 0.1;
  sch.v_mollifier = 0.2;
  EXPECT_THROW(sch.validate(), InvalidArgument);
}

TEST(OrdinaryScale, ZeroAtTruth) {
  auto m = make_model("poly1+gauss");
  EXPECT_LT(std::abs(ordinary_scale_limit(m, m.theta_star, oracle(m))), 1e-3);
}

TEST(OrdinaryScale, DoubledGammaGivesMinusHalf) {
  auto m = make_model("poly1+gauss");
  ThetaVec th = m.theta_star;
  th(2) *= 2.0;
  EXPECT_NEAR(std::abs(ordinary_scale_limit(m, th, oracle(m)) + 0.5), 0.0, 1e-3);
}

TEST(OrdinaryScale, PointMassEveryTerm) {
  auto m = make_model("gauss");
  auto d = oracle(m, DiscreteDistribution::point_mass());
  for (double xi : {0.4, 0.2, 0.1}) EXPECT_LT(std::abs(moment_ordinary_scale(m, m.theta_star, d, xi, xi / 4) - 1.0), 1e-9);
}

TEST(OrdinaryScale, WindowSelection) {
  auto m = make_model("box");
  // gamma_o = 2 sin(zeta) / zeta vanishes at pi.
  auto d = oracle(m);
  EXPECT_THROW(ordinary_scale_value(m, m.theta_star, scale_window(m, d, kPi - 0.2, 0.2, 0.1, {}), 0.1), WindowSelectionError);
}

TEST(SingularShape, ZeroAtTruth) {
  for (const char* n : {"poly1+gauss", "poly2+gauss", "poly1"}) {
    auto m = make_model(n);
    const auto v = singular_shape_limit(m, m.theta_star, oracle(m), 0);
    EXPECT_LT(v.cwiseAbs().maxCoeff(), 1e-3) << n;
  }
}

TEST(SingularShape, DetectsRatioChange) {
  auto m = make_model("poly1+gauss");
  ThetaVec th = m.theta_star;
  th(0) *= 1.5;
  EXPECT_GT(singular_shape_limit(m, th, oracle(m), 0).cwiseAbs().maxCoeff(), 1e-2);
  // Scaling both polynomial coefficients leaves the shape family at zero.
  th = m.theta_star;
  th(0) *= 2.0;
  th(1) *= 2.0;
  EXPECT_LT(singular_shape_limit(m, th, oracle(m), 0).cwiseAbs().maxCoeff(), 1e-3);
}

TEST(SingularShape, TermAndErrors) {
  auto m = make_model("poly1+gauss");
  auto d = oracle(m);
  const auto v = moment_singular_shape(m, m.theta_star, d, 0, 0.5, 0.0625);
  EXPECT_LT(v.cwiseAbs().maxCoeff(), 1e-2);
  EXPECT_THROW(moment_singular_shape(m, ThetaVec{{0.0, 0.0, 2.0}}, d, 0, 0.5, 0.1), NoninvertibleGamma);
  EXPECT_THROW(moment_singular_shape(m, m.theta_star, d, 0, 0.5, 0.6), InvalidArgument);
}

TEST(SingularScale, ZeroAtTruthAtOrigin) {
  auto m = make_model("poly1+gauss");
  EXPECT_LT(std::abs(moment_singular_scale(m, m.theta_star, oracle(m), 0)), 1e-3);
}

TEST(SingularScale, KbarZeroReduction) {
  auto m = make_model("const");
  ThetaVec th{{0.8}};
  // Re[phi(0) (gamma0* / gamma0 - 1)] with phi(0) = 1.
  EXPECT_NEAR(moment_singular_scale(m, th, oracle(m), 0).real(), 1.2 / 0.8 - 1.0, 1e-6);
  EXPECT_LT(std::abs(moment_singular_scale(m, m.theta_star, oracle(m), 0)), 1e-9);
}

TEST(SingularScale, CosineTwoEstimatesAgree) {
  auto m = make_model("cosine+rational");
  const auto F = default_error_law();
  auto d = oracle(m, F);
  EXPECT_LT(std::abs(moment_singular_scale(m, m.theta_star, d, 0)), 1e-2);
  ThetaVec th = m.theta_star;
  th(0) *= 2.0;
  const cplx v = moment_singular_scale(m, th, d, 0);
  EXPECT_NEAR(v.real(), -0.5 * F.charfun(2.0).real(), 1e-3);
}

TEST(SingularScale, NeedsOrdinaryAtNonzeroPoint) {
  ThetaModel m;
  m.name = "cos-only";
  m.m = 1, m.m_I = 0, m.m_II = 1;
  m.singular = {{2.0, 0, [](const ThetaVec& t) { return std::vector<cplx>{kPi * t(0)}; }}};
  m.theta_star = ThetaVec{{1.0}};
  auto d = MomentData::oracle(m, m.theta_star, default_error_law());
  EXPECT_THROW(moment_singular_scale(m, m.theta_star, d, 0), AssumptionViolation);
}

TEST(SingularShape, ConjugateSymmetryOfMirroredPairing) {
  auto m = make_model("cosine+rational");
  auto d = oracle(m);
  for (unsigned p : {0u, 1u, 2u}) {
    const auto psi = make_poly_bump(2.0, p, 0.25);
    const cplx v = make_window(psi, d, {}).pair_y();
    EXPECT_LT(std::abs(v.imag()), 1e-10) << p;
  }
}

TEST(Eq, TruthOnOracle) {
  for (const auto& n : model_names()) {
    auto m = make_model(n);
    auto e = eq_vector(m, m.theta_star, oracle(m));
    EXPECT_LE(e.stacked.lpNorm<Eigen::Infinity>(), 1e-3) << n;
    EXPECT_GE(e.stacked.size(), 2 * m.m) << n;
  }
}

TEST(Eq, FamilyApplicability) {
  auto poly = make_model("poly1");
  auto e = eq_vector(poly, poly.theta_star, oracle(poly));
  EXPECT_FALSE(e.has(Family::kOrdinaryShape));
  EXPECT_FALSE(e.has(Family::kOrdinaryScale));
  EXPECT_TRUE(e.has(Family::kSingularShape));
  EXPECT_TRUE(e.has(Family::kSingularScale));
  EXPECT_FALSE(e.skipped.empty());
  auto g = make_model("gauss");
  e = eq_vector(g, g.theta_star, oracle(g));
  EXPECT_TRUE(e.has(Family::kOrdinaryShape));
  EXPECT_TRUE(e.has(Family::kOrdinaryScale));
  EXPECT_FALSE(e.has(Family::kSingularShape));
  EXPECT_FALSE(e.has(Family::kSingularScale));
}

TEST(Eq, ConvergesUnderRefinement) {
  // Without extrapolation the truncation error of the finest level shrinks at least linearly.
  for (const char* n : {"poly1+gauss", "cosine+rational"}) {
    auto m = make_model(n);
    auto d = oracle(m);
    std::vector<double> norms, hs;
    for (int k = 0; k < 3; ++k) {
      Schedule s;
      s.extrapolate = false;
      const double h = 0.4 / std::pow(2.0, k);
      s.xi = {h};
      s.eps_n = {0.25 / std::pow(2.0, k)};
      norms.push_back(eq_vector(m, m.theta_star, d, s).stacked.lpNorm<Eigen::Infinity>());
      hs.push_back(h);
    }
    for (int k = 0; k + 1 < 3; ++k) {
      const double slope = std::log(norms[k] / norms[k + 1]) / std::log(hs[k] / hs[k + 1]);
      EXPECT_GE(slope, 0.9) << n << " level " << k;
    }
  }
}

TEST(Rank, PolyGaussModel) {
  auto m = make_model("poly1+gauss");
  auto r = rank_check(m, m.theta_star, oracle(m));
  EXPECT_EQ(r.rank, 3);
  EXPECT_GT(r.condition_ratio(), 1e-6);
}

TEST(Rank, DuplicatedParameter) {
  auto m = make_model("poly1+gauss");
  m.name = "dup";
  m.m = 4, m.m_II = 3;
  m.theta_star = ThetaVec{{1.0, 0.5, 2.0, 7.0}};
  auto r = rank_check(m, m.theta_star, MomentData::oracle(m, m.theta_star, default_error_law()));
  EXPECT_LT(r.rank, 4);
}

TEST(Rank, PureDelta) {
  auto m = make_model("const");
  EXPECT_EQ(rank_check(m, m.theta_star, oracle(m)).rank, 1);
}

TEST(Gmm, RecoversFromPerturbation) {
  auto m = make_model("poly1+gauss");
  ThetaVec init = m.theta_star;
  init(0) *= 1.3;
  init(1) *= 0.7;
  init(2) *= 1.3;
  auto rep = gmm_solve(m, oracle(m), init);
  EXPECT_LT((rep.theta - m.theta_star).lpNorm<Eigen::Infinity>(), 1e-2);
  EXPECT_EQ(rep.rank.rank, 3);
  EXPECT_GT(rep.trace.size(), 2u);
}

TEST(Gmm, StartAtTruth) {
  auto m = make_model("poly1+gauss");
  EqEvaluator eq(m, oracle(m));
  auto rep = gmm_solve(eq, m.theta_star);
  EXPECT_LE(rep.eq_norm_inf, 1e-3);
  EXPECT_LT((rep.theta - m.theta_star).lpNorm<Eigen::Infinity>(), 1e-6);
}

TEST(Gmm, InadmissibleStart) {
  auto m = make_model("poly1+gauss");
  EXPECT_THROW(gmm_solve(m, oracle(m), ThetaVec{{1.0, 0.0, 2.0}}), InvalidArgument);
}

TEST(SampleBackend, SpectralAndWeightFunctionFormsAgree) {
  auto m = make_model("gauss");
  DGP g;
  g.g = m.regression(m.theta_star);
  g.F = default_error_law();
  g.z = InstrumentLaw::uniform(-6.0, 6.0);
  g.sigma_dy = 0.2;
  g.sigma_dx = 0.1;
  g.seed = 11;
  auto s = draw(g, 4000);
  DensityEstimate p(StepFunction({-6.0, 6.0}, {1.0 / 12.0}), 0.0);
  auto d = MomentData::from_sample(s, p);
  auto w = make_window(ordinary_shape_window(m, Schedule{}), d, {5e-3, 400});
  const ThetaVec th{{1.2, 0.9}};
  const cplx spectral = ordinary_shape_value(m, th, w);
  std::vector<cplx> hy(w.nodes.size()), hxy(w.nodes.size());
  for (std::size_t k = 0; k < w.nodes.size(); ++k) {
    hy[k] = w.wmu[k] * kI * m.gamma_o_dot(w.nodes[k], th);
    hxy[k] = w.wmu[k] * m.gamma_o(w.nodes[k], th);
  }
  RealGrid zg(-6.0, 6.0, 6001);
  UniformInterpolator<cplx> ry(zg, weight_function_on_grid(w.nodes, hy, zg));
  UniformInterpolator<cplx> rxy(zg, weight_function_on_grid(w.nodes, hxy, zg));
  const cplx literal = sample_average_moment(s, p, ry, rxy);
  EXPECT_LT(std::abs(spectral - literal), 1e-6 * std::max(1.0, std::abs(spectral)));
}

TEST(SampleBackend, Errors) {
  std::vector<Observation> obs{{1.0, 0.0, 0.0}, {1.0, 0.0, 5.0}};
  DensityEstimate p(StepFunction({-1.0, 1.0}, {0.5}), 0.0);
  EXPECT_THROW(MomentData::from_sample(Sample(obs), p), InsufficientData);
}
