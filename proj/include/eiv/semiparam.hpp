#ifndef EIV_SEMIPARAM_HPP
#define EIV_SEMIPARAM_HPP

// Parametric spectrum models gamma = gamma_o + gamma_s, the four moment families, EQ(theta), GMM.

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "eiv/errors.hpp"
#include "eiv/estimate.hpp"
#include "eiv/numerics.hpp"
#include "eiv/optim.hpp"
#include "eiv/pairing.hpp"
#include "eiv/simulate.hpp"
#include "eiv/weights.hpp"

namespace eiv {

using ThetaVec = Eigen::VectorXd;

/// gamma_s at s: sum_k gamma_k(s, theta) delta^{(k)}(zeta - s), k = 0..kbar (mirrored at -s when s > 0).
struct SingularPoint {
  double s = 0.0;
  int kbar = 0;
  std::function<std::vector<cplx>(const ThetaVec&)> coefs;
};

struct ThetaModel {
  std::string name;
  int m = 0;
  int m_I = 0;
  int m_II = 0;
  std::function<cplx(double, const ThetaVec&)> gamma_o;      // empty: no ordinary part
  std::function<cplx(double, const ThetaVec&)> gamma_o_dot;  // d/dzeta gamma_o
  std::vector<SingularPoint> singular;
  std::vector<double> jump_points;
  double zeta_bar = 6.0;
  std::function<RegressionFunction(const ThetaVec&)> regression;
  ThetaVec theta_star;

  bool has_ordinary() const { return static_cast<bool>(gamma_o); }

  std::vector<cplx> coefs(std::size_t l, const ThetaVec& theta) const {
    auto c = singular.at(l).coefs(theta);
    if (c.size() != static_cast<std::size_t>(singular[l].kbar + 1))
      throw ConstructionError("ThetaModel: coefficient count does not match kbar");
    return c;
  }

  /// All atoms of gamma_s, mirrored to -s.
  DeltaTrain singular_train(const ThetaVec& theta) const {
    std::vector<DeltaAtom> atoms;
    for (std::size_t l = 0; l < singular.size(); ++l) {
      const auto c = coefs(l, theta);
      for (int k = 0; k <= singular[l].kbar; ++k)
        atoms.push_back({singular[l].s, k, c[static_cast<std::size_t>(k)]});
    }
    return DeltaTrain(std::move(atoms)).with_mirror();
  }

  /// Structural checks plus gamma_o != 0 on the working band except at isolated points.
  void validate(const ThetaVec& theta) const {
    if (m <= 0 || m_I + m_II != m) throw ConstructionError("ThetaModel " + name + ": bad partition (m_I, m_II)");
    if (theta.size() != m) throw InvalidArgument("ThetaModel " + name + ": theta has wrong dimension");
    for (std::size_t l = 0; l < singular.size(); ++l) {
      const auto& p = singular[l];
      if (p.s < 0.0) throw ConstructionError("ThetaModel: singular points must be >= 0");
      if (p.kbar < 0 || p.kbar > 3) throw UnsupportedOrder("ThetaModel: kbar must be in 0..3");
      if (p.s == 0.0 && l != 0) throw ConstructionError("ThetaModel: s = 0 must be listed first");
      for (std::size_t j = 0; j < l; ++j)
        if (singular[j].s == p.s) throw ConstructionError("ThetaModel: singular points must be distinct");
    }
    if (!has_ordinary()) return;
    const auto band = RealGrid::symmetric(zeta_bar, 0.01);
    double top = 0.0;
    std::vector<double> a(band.size());
    for (std::size_t i = 0; i < band.size(); ++i) top = std::max(top, a[i] = std::abs(gamma_o(band[i], theta)));
    std::size_t small = 0;
    for (double v : a) small += v <= 1e-12 * top;
    if (top == 0.0 || small > band.size() / 100)
      throw AssumptionViolation("ThetaModel " + name + ": gamma_o vanishes on a set of positive measure");
  }
};

// Ordinary atoms ---------------------------------------------------------------------------

namespace detail {

/// Ft of a exp(-c x^2): a sqrt(pi/c) exp(-zeta^2 / (4c)).
inline cplx gauss_ft(double z, double a, double c) { return a * std::sqrt(kPi / c) * std::exp(-z * z / (4.0 * c)); }
inline cplx gauss_ft_dot(double z, double a, double c) { return -z / (2.0 * c) * gauss_ft(z, a, c); }

/// Ft of a exp(-|x|): 2a / (1 + zeta^2).
inline cplx laplace_ft(double z, double a) { return 2.0 * a / (1.0 + z * z); }
inline cplx laplace_ft_dot(double z, double a) { return -4.0 * a * z / ((1.0 + z * z) * (1.0 + z * z)); }

/// Ft of a 1[-c, c]: 2a sin(c zeta) / zeta.
inline cplx box_atom_ft(double z, double a, double c) {
  return std::abs(z) < 1e-8 ? 2.0 * a * c : 2.0 * a * std::sin(c * z) / z;
}
inline cplx box_atom_ft_dot(double z, double a, double c) {
  if (std::abs(z) < 1e-6) return -2.0 * a * c * c * c * z / 3.0;
  return 2.0 * a * (c * z * std::cos(c * z) - std::sin(c * z)) / (z * z);
}

/// Coefficients of Ft(sum_k a_k x^k) = sum_k 2 pi (-i)^k a_k delta^{(k)}.
inline std::vector<cplx> polynomial_coefs(const std::vector<double>& a) {
  std::vector<cplx> c;
  cplx f = 2.0 * kPi;
  for (double v : a) {
    c.push_back(f * v);
    f *= -kI;
  }
  return c;
}

}  // namespace detail

/// Registered models: poly1+gauss, poly2+gauss, cosine+rational, gauss, box, const, poly1.
inline ThetaModel make_model(const std::string& name) {
  ThetaModel m;
  m.name = name;
  if (name == "poly1+gauss") {
    // theta1 + theta2 x + theta3 exp(-x^2)
    m.m = 3, m.m_I = 1, m.m_II = 2;
    m.gamma_o = [](double z, const ThetaVec& t) { return detail::gauss_ft(z, t(2), 1.0); };
    m.gamma_o_dot = [](double z, const ThetaVec& t) { return detail::gauss_ft_dot(z, t(2), 1.0); };
    m.singular = {{0.0, 1, [](const ThetaVec& t) { return detail::polynomial_coefs({t(0), t(1)}); }}};
    m.regression = [](const ThetaVec& t) {
      return RegressionFunction({RegressionFunction::Polynomial{{t(0), t(1)}}, RegressionFunction::Gaussian{t(2), 1.0}});
    };
    m.theta_star = ThetaVec{{1.0, 0.5, 2.0}};
  } else if (name == "poly2+gauss") {
    m.m = 4, m.m_I = 1, m.m_II = 3;
    m.gamma_o = [](double z, const ThetaVec& t) { return detail::gauss_ft(z, t(3), 1.0); };
    m.gamma_o_dot = [](double z, const ThetaVec& t) { return detail::gauss_ft_dot(z, t(3), 1.0); };
    m.singular = {{0.0, 2, [](const ThetaVec& t) { return detail::polynomial_coefs({t(0), t(1), t(2)}); }}};
    m.regression = [](const ThetaVec& t) {
      return RegressionFunction(
          {RegressionFunction::Polynomial{{t(0), t(1), t(2)}}, RegressionFunction::Gaussian{t(3), 1.0}});
    };
    m.theta_star = ThetaVec{{1.0, 0.5, -0.3, 2.0}};
  } else if (name == "cosine+rational") {
    // theta1 cos(2x) + theta2 exp(-|x|)
    m.m = 2, m.m_I = 1, m.m_II = 1;
    m.gamma_o = [](double z, const ThetaVec& t) { return detail::laplace_ft(z, t(1)); };
    m.gamma_o_dot = [](double z, const ThetaVec& t) { return detail::laplace_ft_dot(z, t(1)); };
    m.singular = {{2.0, 0, [](const ThetaVec& t) { return std::vector<cplx>{kPi * t(0)}; }}};
    m.regression = [](const ThetaVec& t) {
      return RegressionFunction({RegressionFunction::Cosine{t(0), 2.0}, RegressionFunction::Laplace{t(1), 1.0}});
    };
    m.theta_star = ThetaVec{{1.0, 1.5}};
  } else if (name == "gauss") {
    // theta1 exp(-theta2 x^2)
    m.m = 2, m.m_I = 2, m.m_II = 0;
    m.gamma_o = [](double z, const ThetaVec& t) { return detail::gauss_ft(z, t(0), t(1)); };
    m.gamma_o_dot = [](double z, const ThetaVec& t) { return detail::gauss_ft_dot(z, t(0), t(1)); };
    m.regression = [](const ThetaVec& t) { return RegressionFunction({RegressionFunction::Gaussian{t(0), t(1)}}); };
    m.theta_star = ThetaVec{{1.5, 0.8}};
  } else if (name == "box") {
    // theta1 on [-1, 1)
    m.m = 1, m.m_I = 1, m.m_II = 0;
    m.zeta_bar = 2.5;
    m.gamma_o = [](double z, const ThetaVec& t) { return detail::box_atom_ft(z, t(0), 1.0); };
    m.gamma_o_dot = [](double z, const ThetaVec& t) { return detail::box_atom_ft_dot(z, t(0), 1.0); };
    m.regression = [](const ThetaVec& t) { return RegressionFunction(StepFunction::indicator(-1.0, 1.0, t(0))); };
    m.theta_star = ThetaVec{{1.0}};
  } else if (name == "const") {
    m.m = 1, m.m_I = 0, m.m_II = 1;
    m.singular = {{0.0, 0, [](const ThetaVec& t) { return detail::polynomial_coefs({t(0)}); }}};
    m.regression = [](const ThetaVec& t) { return RegressionFunction({RegressionFunction::Polynomial{{t(0)}}}); };
    m.theta_star = ThetaVec{{1.2}};
  } else if (name == "poly1") {
    m.m = 2, m.m_I = 0, m.m_II = 2;
    m.singular = {{0.0, 1, [](const ThetaVec& t) { return detail::polynomial_coefs({t(0), t(1)}); }}};
    m.regression = [](const ThetaVec& t) { return RegressionFunction({RegressionFunction::Polynomial{{t(0), t(1)}}}); };
    m.theta_star = ThetaVec{{1.0, 0.5}};
  } else {
    throw InvalidArgument("unknown model '" + name + "'");
  }
  m.validate(m.theta_star);
  return m;
}

inline std::vector<std::string> model_names() {
  return {"poly1+gauss", "poly2+gauss", "cosine+rational", "gauss", "box", "const", "poly1"};
}

// Gamma matrices --------------------------------------------------------------------------

struct GammaMatrices {
  Eigen::MatrixXcd gamma_y;
  Eigen::MatrixXcd gamma_xy;
  Eigen::VectorXd M;  // diagonal of M_l
};

inline double binomial(int n, int k) {
  if (k < 0 || k > n) return 0.0;
  double r = 1.0;
  for (int j = 1; j <= k; ++j) r = r * static_cast<double>(n - k + j) / static_cast<double>(j);
  return r;
}

namespace detail {

inline void check_invertible(const Eigen::MatrixXcd& A, const char* what) {
  Eigen::JacobiSVD<Eigen::MatrixXcd> svd(A);
  const auto& s = svd.singularValues();
  if (s.size() == 0 || !(s(s.size() - 1) > 0.0) || s(0) / s(s.size() - 1) > 1e12)
    throw NoninvertibleGamma(std::string(what) + " is singular at the supplied theta");
}

}  // namespace detail

/// Gamma_y(i+1,k+1) = C(k+i, i) gamma_{k+i}, Gamma_xy(i+1,k+1) = C(k+i+1, i+1) gamma_{k+i}, zero for k+i > kbar.
inline GammaMatrices gamma_matrices_from_coefs(const std::vector<cplx>& g) {
  const int kb = static_cast<int>(g.size()) - 1;
  if (kb < 0) throw InvalidArgument("gamma matrices: no coefficients");
  GammaMatrices r;
  r.gamma_y = Eigen::MatrixXcd::Zero(kb + 1, kb + 1);
  r.gamma_xy = Eigen::MatrixXcd::Zero(kb + 1, kb + 1);
  r.M.resize(kb + 1);
  double fact = 1.0;
  for (int i = 0; i <= kb; ++i) {
    if (i > 0) fact *= i;
    r.M(i) = fact;
    for (int k = 0; k + i <= kb; ++k) {
      r.gamma_y(i, k) = binomial(k + i, i) * g[static_cast<std::size_t>(k + i)];
      r.gamma_xy(i, k) = binomial(k + i + 1, i + 1) * g[static_cast<std::size_t>(k + i)];
    }
  }
  detail::check_invertible(r.gamma_y, "Gamma_y");
  detail::check_invertible(r.gamma_xy, "Gamma_xy");
  return r;
}

inline GammaMatrices build_gamma_matrices(const ThetaModel& model, std::size_t l, const ThetaVec& theta) {
  if (l >= model.singular.size()) throw InvalidArgument("build_gamma_matrices: no singular point " + std::to_string(l));
  return gamma_matrices_from_coefs(model.coefs(l, theta));
}

// Data ------------------------------------------------------------------------------------

/// Moment spectra eps_y, eps_xy as seen by the moment families: closed-form (oracle) regular parts
/// with delta trains, or empirical transforms (1/n) sum w_i e^{i z_i zeta} / p(z_i) of a sample.
class MomentData {
 public:
  static MomentData oracle(const ThetaModel& model, const ThetaVec& theta, const DiscreteDistribution& F) {
    MomentData d;
    if (model.has_ordinary()) {
      d.ey_ = [model, theta, F](double z) { return model.gamma_o(z, theta) * F.charfun(z); };
      d.exy_ = [model, theta, F](double z) { return -kI * model.gamma_o_dot(z, theta) * F.charfun(z); };
    } else {
      d.ey_ = d.exy_ = [](double) { return cplx(0.0); };
    }
    const auto train = model.singular_train(theta);
    auto jet = [&F](double z) { return F.charfun_jet(z); };
    d.ay_ = train.multiplied(jet);
    d.axy_ = train.derivative().scaled(-kI).multiplied(jet);
    return d;
  }

  static MomentData from_sample(const Sample& s, const DensityEstimate& p) {
    MomentData d;
    d.sample_ = true;
    for (const auto& o : s) {
      const double dens = p(o.z);
      if (!(dens > 0.0)) throw InsufficientData("MomentData: density estimate is zero at a sample point");
      d.z_.push_back(o.z);
      d.a_.push_back(o.y / dens);
      d.b_.push_back(o.x * o.y / dens);
    }
    if (d.z_.empty()) throw InsufficientData("MomentData: empty sample");
    return d;
  }

  /// Histogram density with default bins.
  static MomentData from_sample(const Sample& s) {
    const auto b = bin_conditional_means(s, default_bin_count(s.size()), 1);
    return from_sample(s, b.p);
  }

  /// Same data with extra atoms added to eps_y and eps_xy.
  MomentData with_atoms(const DeltaTrain& y, const DeltaTrain& xy) const {
    MomentData d = *this;
    d.ay_ = d.ay_ + y;
    d.axy_ = d.axy_ + xy;
    return d;
  }

  bool is_sample() const { return sample_; }
  const DeltaTrain& atoms_y() const { return ay_; }
  const DeltaTrain& atoms_xy() const { return axy_; }

  /// Regular parts at lo + k h, k = 0..n-1.
  void spectra(double lo, double h, std::size_t n, std::vector<cplx>& ey, std::vector<cplx>& exy) const {
    ey.assign(n, 0.0);
    exy.assign(n, 0.0);
    if (!sample_) {
      for (std::size_t k = 0; k < n; ++k) {
        const double z = lo + static_cast<double>(k) * h;
        ey[k] = ey_(z);
        exy[k] = exy_(z);
      }
      return;
    }
    for (std::size_t i = 0; i < z_.size(); ++i) {
      const cplx step = std::polar(1.0, z_[i] * h);
      cplx ph;
      for (std::size_t k = 0; k < n; ++k) {
        ph = (k % 64 == 0) ? std::polar(1.0, z_[i] * (lo + static_cast<double>(k) * h)) : ph * step;
        ey[k] += a_[i] * ph;
        exy[k] += b_[i] * ph;
      }
    }
    const double inv = 1.0 / static_cast<double>(z_.size());
    for (std::size_t k = 0; k < n; ++k) {
      ey[k] *= inv;
      exy[k] *= inv;
    }
  }

 private:
  bool sample_ = false;
  std::function<cplx(double)> ey_, exy_;
  DeltaTrain ay_, axy_;
  std::vector<double> z_, a_, b_;
};

// Schedules and windows ------------------------------------------------------------------

struct Schedule {
  std::vector<double> xi{0.4, 0.2, 0.1};          // pair-bump offsets, families (ii) and (iv)
  double xi_eps_ratio = 0.25;                      // eps_n = ratio * xi_n
  double eps = 0.5;                                // outer window of the singular families
  std::vector<double> eps_n{0.25, 0.125, 0.0625};  // shrinking windows at s_l
  double exclusion = 0.5;                          // half-width cut out of V around s_l and b_j
  double v_mollifier = 0.2;
  double v_zeta_bar = 0.0;  // <= 0: the model's zeta_bar
  double v_max_step = 5e-3;
  bool extrapolate = true;
  QuadratureSpec quad{};

  void validate() const {
    if (xi.empty() || eps_n.empty()) throw InvalidArgument("schedule: empty refinement list");
    for (double x : xi)
      if (!(x > 0.0)) throw InvalidArgument("schedule: xi values must be > 0");
    for (double e : eps_n)
      if (!(e > 0.0) || !(e <= eps)) throw InvalidArgument("schedule: eps_n values must lie in (0, eps]");
    if (!(xi_eps_ratio > 0.0 && xi_eps_ratio < 1.0)) throw InvalidArgument("schedule: xi_eps_ratio must be in (0, 1)");
    if (!(v_mollifier > 0.0 && v_mollifier < exclusion))
      throw InvalidArgument("schedule: need 0 < v_mollifier < exclusion");
  }
};

/// Quadrature nodes of a compactly supported real window together with the data spectra there.
struct QuadWindow {
  std::vector<double> nodes;
  std::vector<double> wmu;  // trapezoid weight * mu(node)
  std::vector<cplx> ey, exy;
  cplx atom_y = 0.0;
  cplx atom_xy = 0.0;

  template <class F>
  cplx pair_y(F&& mult) const {
    cplx s = 0.0;
    for (std::size_t k = 0; k < nodes.size(); ++k)
      if (wmu[k] != 0.0) s += wmu[k] * ey[k] * mult(nodes[k]);
    return s;
  }
  template <class F>
  cplx pair_xy(F&& mult) const {
    cplx s = 0.0;
    for (std::size_t k = 0; k < nodes.size(); ++k)
      if (wmu[k] != 0.0) s += wmu[k] * exy[k] * mult(nodes[k]);
    return s;
  }
  cplx pair_y() const {
    return pair_y([](double) { return 1.0; }) + atom_y;
  }
  cplx pair_xy() const {
    return pair_xy([](double) { return 1.0; }) + atom_xy;
  }
};

inline QuadWindow make_window(const TestFunction& mu, const MomentData& d, const QuadratureSpec& q) {
  QuadWindow w;
  for (const auto& iv : mu.support()) {
    const auto n = std::max(q.min_points, static_cast<std::size_t>(std::ceil(iv.width() / q.max_step)));
    const double h = iv.width() / static_cast<double>(n);
    std::vector<cplx> ey, exy;
    d.spectra(iv.lo, h, n + 1, ey, exy);
    for (std::size_t k = 0; k <= n; ++k) {
      const double z = iv.lo + static_cast<double>(k) * h;
      w.nodes.push_back(z);
      w.wmu.push_back(((k == 0 || k == n) ? 0.5 : 1.0) * h * mu(z));
      w.ey.push_back(ey[k]);
      w.exy.push_back(exy[k]);
    }
  }
  w.atom_y = pair_atoms(d.atoms_y(), mu);
  w.atom_xy = pair_atoms(d.atoms_xy(), mu);
  return w;
}

namespace detail {

inline void require_atom_free(const QuadWindow& w, const char* what) {
  if (w.atom_y != 0.0 || w.atom_xy != 0.0)
    throw ConstructionError(std::string(what) + ": a singular atom of the data lies inside the window");
}

/// Positive-side pieces of [0, zb] minus (p - e, p + e) for every excluded point p.
inline std::vector<Interval> v_intervals(const ThetaModel& model, const Schedule& sch) {
  const double zb = sch.v_zeta_bar > 0.0 ? sch.v_zeta_bar : model.zeta_bar;
  std::vector<double> pts;
  for (const auto& p : model.singular) pts.push_back(p.s);
  for (double b : model.jump_points) pts.push_back(std::abs(b));
  std::sort(pts.begin(), pts.end());
  std::vector<Interval> out;
  double start = 0.0;
  for (double p : pts) {
    const double lo = p - sch.exclusion;
    if (lo > start + 2.0 * sch.v_mollifier) out.push_back({start, std::min(lo, zb)});
    start = std::max(start, p + sch.exclusion);
    if (start >= zb) break;
  }
  if (zb > start + 2.0 * sch.v_mollifier) out.push_back({start, zb});
  for (auto& iv : out)
    if (iv.lo == 0.0) iv.lo = -iv.hi;
  return out;
}

inline std::vector<double> level_weights(std::size_t n, const std::vector<double>& t, const std::vector<int>& powers,
                                         bool extrapolate) {
  if (extrapolate) return richardson_weights(t, powers);
  std::vector<double> w(n, 0.0);
  w.back() = 1.0;
  return w;
}

}  // namespace detail

/// mu_{l,i,n} = f_{s_l,i+1,eps_n} / (i+1), one-sided at s_l: its (i+1)-th derivative at s_l is i!,
/// so mu' has i-th derivative i! there.
inline TestFunction singular_window(double s, int i, double eps_n) {
  const auto f = make_poly_bump(s, static_cast<unsigned>(i + 1), eps_n, Sidedness::kOneSided);
  return TestFunction::linear_combination({{1.0 / static_cast<double>(i + 1), f}});
}

/// Smoothed indicator of V for family (i).
inline TestFunction ordinary_shape_window(const ThetaModel& model, const Schedule& sch) {
  const auto iv = detail::v_intervals(model, sch);
  if (iv.empty()) throw ConstructionError("family (i): V is empty");
  const auto f = make_interval_mollified(iv, sch.v_mollifier, true);
  for (const auto& p : model.singular)
    for (double s : {p.s, -p.s}) {
      const auto j = f.jet(s);
      if (std::any_of(j.c.begin(), j.c.end(), [](double c) { return c != 0.0; }))
        throw ConstructionError("family (i): V is not separated from s_l");
    }
  return f;
}

// Families --------------------------------------------------------------------------------

/// Family (i): (eps_y, i gamma_o'(theta) mu) + (eps_xy, gamma_o(theta) mu) with mu = f_V.
/// At theta* the integrand is i phi mu (gamma_o* gamma_o' - gamma_o*' gamma_o) = 0.
inline cplx ordinary_shape_value(const ThetaModel& model, const ThetaVec& theta, const QuadWindow& w) {
  detail::require_atom_free(w, "family (i)");
  return w.pair_y([&](double z) { return kI * model.gamma_o_dot(z, theta); }) +
         w.pair_xy([&](double z) { return model.gamma_o(z, theta); });
}

inline cplx moment_ordinary_shape(const ThetaModel& model, const ThetaVec& theta, const MomentData& data,
                                  const Schedule& sch = {}) {
  if (!model.has_ordinary()) throw InvalidArgument("family (i): model has no ordinary part");
  if (detail::v_intervals(model, sch).empty()) return 0.0;
  QuadratureSpec q = sch.quad;
  q.max_step = sch.v_max_step;
  return ordinary_shape_value(model, theta, make_window(ordinary_shape_window(model, sch), data, q));
}

/// n-th term of families (ii)/(iv) ordinary side: (eps_y, mu_n / gamma_o(theta)) / eps_n with the pair
/// bump at center +- xi_n; tends to phi(center).
inline cplx ordinary_scale_value(const ThetaModel& model, const ThetaVec& theta, const QuadWindow& w, double eps_n) {
  detail::require_atom_free(w, "ordinary scale");
  cplx s = 0.0;
  for (std::size_t k = 0; k < w.nodes.size(); ++k) {
    if (w.wmu[k] == 0.0) continue;
    const cplx g = model.gamma_o(w.nodes[k], theta);
    if (std::abs(g) < 1e-10) throw WindowSelectionError("gamma_o vanishes on the bump support; choose another xi_n");
    s += w.wmu[k] * w.ey[k] / g;
  }
  return s / eps_n;
}

inline QuadWindow scale_window(const ThetaModel& model, const MomentData& data, double center, double xi,
                               double eps_n, const QuadratureSpec& q) {
  for (const auto& p : model.singular)
    for (double s : {p.s, -p.s})
      for (double c : {center - xi, center + xi})
        if (std::abs(s - c) < eps_n && s != center)
          throw ConstructionError("ordinary scale: pair bump covers a singular point");
  return make_window(make_pair_bump(xi, eps_n, center), data, q);
}

inline cplx moment_ordinary_scale(const ThetaModel& model, const ThetaVec& theta, const MomentData& data, double xi_n,
                                  double eps_n, const QuadratureSpec& q = {}) {
  if (!model.has_ordinary()) throw InvalidArgument("family (ii): model has no ordinary part");
  return ordinary_scale_value(model, theta, scale_window(model, data, 0.0, xi_n, eps_n, q), eps_n);
}

/// Family (ii): Richardson limit over the xi schedule (even powers) minus phi(0) = 1.
inline cplx ordinary_scale_limit(const ThetaModel& model, const ThetaVec& theta, const MomentData& data,
                                 const Schedule& sch = {}) {
  const auto w = detail::level_weights(sch.xi.size(), sch.xi, {2, 4}, sch.extrapolate);
  cplx v = 0.0;
  for (std::size_t j = 0; j < sch.xi.size(); ++j)
    v += w[j] * moment_ordinary_scale(model, theta, data, sch.xi[j], sch.xi_eps_ratio * sch.xi[j], sch.quad);
  return v - 1.0;
}

/// Normalized delta-side pairings at s_l: Y'_i = (-1)^i (eps_y, mu'_i) / i! and
/// X'_i = -i (-1)^i (eps_xy, mu_i) / i!, so that Y' -> Gamma_y Phi and X' -> Gamma_xy Phi with
/// Phi_m = (-1)^m phi^{(m)}(s_l).
struct DeltaPairings {
  Eigen::VectorXcd Y;
  Eigen::VectorXcd X;
};

inline DeltaPairings delta_pairings(double s, int kbar, double eps_n, const MomentData& data, const QuadratureSpec& q) {
  DeltaPairings r{Eigen::VectorXcd(kbar + 1), Eigen::VectorXcd(kbar + 1)};
  double fact = 1.0;
  for (int i = 0; i <= kbar; ++i) {
    if (i > 0) fact *= i;
    const double sign = (i % 2) ? -1.0 : 1.0;
    const auto mu = singular_window(s, i, eps_n);
    const auto dmu = TestFunction::derivative_of(mu);
    r.Y(i) = sign * make_window(dmu, data, q).pair_y() / fact;
    r.X(i) = -kI * sign * make_window(mu, data, q).pair_xy() / fact;
  }
  return r;
}

namespace detail {

inline DeltaPairings extrapolated_pairings(const SingularPoint& p, const MomentData& data, const Schedule& sch) {
  const auto w = level_weights(sch.eps_n.size(), sch.eps_n, {3, 5}, sch.extrapolate);
  DeltaPairings acc{Eigen::VectorXcd::Zero(p.kbar + 1), Eigen::VectorXcd::Zero(p.kbar + 1)};
  for (std::size_t j = 0; j < sch.eps_n.size(); ++j) {
    if (w[j] == 0.0) continue;
    const auto d = delta_pairings(p.s, p.kbar, sch.eps_n[j], data, sch.quad);
    acc.Y += w[j] * d.Y;
    acc.X += w[j] * d.X;
  }
  return acc;
}

inline Eigen::VectorXcd singular_shape_from(const GammaMatrices& G, const DeltaPairings& d) {
  return G.gamma_y.fullPivLu().solve(d.Y) - G.gamma_xy.fullPivLu().solve(d.X);
}

}  // namespace detail

/// n-th term of family (iii) at window eps_n: Gamma_y^{-1} Y' - Gamma_xy^{-1} X'.
inline Eigen::VectorXcd moment_singular_shape(const ThetaModel& model, const ThetaVec& theta, const MomentData& data,
                                              std::size_t l, double eps, double eps_n, const QuadratureSpec& q = {}) {
  if (!(eps_n > 0.0 && eps_n <= eps)) throw InvalidArgument("family (iii): need 0 < eps_n <= eps");
  const auto G = build_gamma_matrices(model, l, theta);
  const auto& p = model.singular[l];
  return detail::singular_shape_from(G, delta_pairings(p.s, p.kbar, eps_n, data, q));
}

inline Eigen::VectorXcd singular_shape_limit(const ThetaModel& model, const ThetaVec& theta, const MomentData& data,
                                             std::size_t l, const Schedule& sch = {}) {
  const auto G = build_gamma_matrices(model, l, theta);
  return detail::singular_shape_from(G, detail::extrapolated_pairings(model.singular.at(l), data, sch));
}

/// Family (iv): s_l = 0 gives (Gamma_y^{-1} Y')_1 - 1; s_l != 0 gives the delta-side estimate of
/// phi(s_l) minus the ordinary-side estimate from pair bumps at s_l +- xi_n.
inline cplx moment_singular_scale(const ThetaModel& model, const ThetaVec& theta, const MomentData& data,
                                  std::size_t l, const Schedule& sch = {}) {
  const auto G = build_gamma_matrices(model, l, theta);
  const auto& p = model.singular.at(l);
  const cplx delta_side = G.gamma_y.fullPivLu().solve(detail::extrapolated_pairings(p, data, sch).Y)(0);
  if (p.s == 0.0) return delta_side - 1.0;
  if (!model.has_ordinary() || !(std::abs(model.gamma_o(p.s, theta)) > 1e-10))
    throw AssumptionViolation("family (iv): gamma_o must be continuous and nonzero at s_l");
  const auto w = detail::level_weights(sch.xi.size(), sch.xi, {2, 4}, sch.extrapolate);
  cplx ord = 0.0;
  for (std::size_t j = 0; j < sch.xi.size(); ++j) {
    const double e = sch.xi_eps_ratio * sch.xi[j];
    ord += w[j] * ordinary_scale_value(model, theta, scale_window(model, data, p.s, sch.xi[j], e, sch.quad), e);
  }
  return delta_side - ord;
}

// EQ(theta) -------------------------------------------------------------------------------

enum class Family { kOrdinaryShape, kOrdinaryScale, kSingularShape, kSingularScale };

inline const char* to_string(Family f) {
  switch (f) {
    case Family::kOrdinaryShape:
      return "ordinary-shape";
    case Family::kOrdinaryScale:
      return "ordinary-scale";
    case Family::kSingularShape:
      return "singular-shape";
    default:
      return "singular-scale";
  }
}

struct EqComponent {
  Family family;
  int point;  // singular point index, -1 for ordinary families
  int index;
  cplx value;
};

struct EqResult {
  std::vector<EqComponent> components;
  Eigen::VectorXd stacked;  // Re, Im of each component
  std::vector<std::string> skipped;

  bool has(Family f) const {
    return std::any_of(components.begin(), components.end(), [f](const EqComponent& c) { return c.family == f; });
  }
};

/// Precomputes every window once for (model, data, schedule) so that EQ(theta) costs only
/// node sums and small solves.
class EqEvaluator {
 public:
  EqEvaluator(ThetaModel model, const MomentData& data, Schedule sch = {})
      : model_(std::move(model)), sch_(std::move(sch)) {
    sch_.validate();
    if (model_.has_ordinary()) {
      if (detail::v_intervals(model_, sch_).empty()) {
        skipped_.push_back("ordinary-shape: V is empty");
      } else {
        QuadratureSpec q = sch_.quad;
        q.max_step = sch_.v_max_step;
        shape_ = make_window(ordinary_shape_window(model_, sch_), data, q);
        detail::require_atom_free(*shape_, "family (i)");
      }
      xi_w_ = detail::level_weights(sch_.xi.size(), sch_.xi, {2, 4}, sch_.extrapolate);
      for (double xi : sch_.xi) scale0_.push_back(scale_window(model_, data, 0.0, xi, sch_.xi_eps_ratio * xi, sch_.quad));
    } else {
      skipped_.push_back("ordinary-shape: no ordinary part");
      skipped_.push_back("ordinary-scale: no ordinary part");
    }
    if (model_.singular.empty()) {
      skipped_.push_back("singular-shape: no singular part");
      skipped_.push_back("singular-scale: no singular part");
    }
    for (const auto& p : model_.singular) {
      Point pt;
      pt.pairings = detail::extrapolated_pairings(p, data, sch_);
      if (p.s != 0.0) {
        if (!model_.has_ordinary())
          throw AssumptionViolation("family (iv): s_l != 0 needs an ordinary part for the phi(s_l) estimate");
        for (double xi : sch_.xi) pt.ordinary.push_back(scale_window(model_, data, p.s, xi, sch_.xi_eps_ratio * xi, sch_.quad));
      }
      if (p.kbar == 0) skipped_.push_back("singular-shape: kbar = 0 at s = " + std::to_string(p.s));
      points_.push_back(std::move(pt));
    }
  }

  const ThetaModel& model() const { return model_; }
  const Schedule& schedule() const { return sch_; }

  EqResult evaluate(const ThetaVec& theta) const {
    if (theta.size() != model_.m) throw InvalidArgument("EQ: theta has wrong dimension");
    EqResult r;
    r.skipped = skipped_;
    if (shape_) r.components.push_back({Family::kOrdinaryShape, -1, 0, ordinary_shape_value(model_, theta, *shape_)});
    if (model_.has_ordinary()) {
      cplx v = 0.0;
      for (std::size_t j = 0; j < scale0_.size(); ++j)
        v += xi_w_[j] * ordinary_scale_value(model_, theta, scale0_[j], sch_.xi_eps_ratio * sch_.xi[j]);
      r.components.push_back({Family::kOrdinaryScale, -1, 0, v - 1.0});
    }
    for (std::size_t l = 0; l < points_.size(); ++l) {
      const auto& p = model_.singular[l];
      const auto G = build_gamma_matrices(model_, l, theta);
      if (p.kbar > 0) {
        const auto v = detail::singular_shape_from(G, points_[l].pairings);
        for (int i = 0; i <= p.kbar; ++i) r.components.push_back({Family::kSingularShape, static_cast<int>(l), i, v(i)});
      }
      const cplx delta_side = G.gamma_y.fullPivLu().solve(points_[l].pairings.Y)(0);
      cplx ord = 1.0;
      if (p.s != 0.0) {
        if (!(std::abs(model_.gamma_o(p.s, theta)) > 1e-10))
          throw AssumptionViolation("family (iv): gamma_o must be nonzero at s_l");
        ord = 0.0;
        for (std::size_t j = 0; j < points_[l].ordinary.size(); ++j)
          ord += xi_w_[j] * ordinary_scale_value(model_, theta, points_[l].ordinary[j], sch_.xi_eps_ratio * sch_.xi[j]);
      }
      r.components.push_back({Family::kSingularScale, static_cast<int>(l), 0, delta_side - ord});
    }
    r.stacked.resize(2 * static_cast<Eigen::Index>(r.components.size()));
    for (std::size_t i = 0; i < r.components.size(); ++i) {
      r.stacked(2 * static_cast<Eigen::Index>(i)) = r.components[i].value.real();
      r.stacked(2 * static_cast<Eigen::Index>(i) + 1) = r.components[i].value.imag();
    }
    return r;
  }

  Eigen::VectorXd operator()(const ThetaVec& theta) const { return evaluate(theta).stacked; }

 private:
  struct Point {
    DeltaPairings pairings;
    std::vector<QuadWindow> ordinary;
  };

  ThetaModel model_;
  Schedule sch_;
  std::optional<QuadWindow> shape_;
  std::vector<double> xi_w_;
  std::vector<QuadWindow> scale0_;
  std::vector<Point> points_;
  std::vector<std::string> skipped_;
};

inline EqResult eq_vector(const ThetaModel& model, const ThetaVec& theta, const MomentData& data,
                          const Schedule& sch = {}) {
  return EqEvaluator(model, data, sch).evaluate(theta);
}

// Rank check and GMM ----------------------------------------------------------------------

struct RankReport {
  Eigen::MatrixXd jacobian;
  int rank = 0;
  Eigen::VectorXd singular_values;

  double condition_ratio() const {
    if (singular_values.size() == 0 || singular_values(0) == 0.0) return 0.0;
    return singular_values(singular_values.size() - 1) / singular_values(0);
  }
};

inline RankReport rank_check(const EqEvaluator& eq, const ThetaVec& theta, int jobs = 1) {
  RankReport r;
  r.jacobian = numeric_jacobian([&](const ThetaVec& t) { return eq(t); }, theta, 1e-5, jobs);
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(r.jacobian);
  r.singular_values = svd.singularValues();
  const double top = r.singular_values.size() ? r.singular_values(0) : 0.0;
  for (Eigen::Index i = 0; i < r.singular_values.size(); ++i) r.rank += r.singular_values(i) > 1e-8 * top;
  return r;
}

inline RankReport rank_check(const ThetaModel& model, const ThetaVec& theta, const MomentData& data,
                             const Schedule& sch = {}) {
  return rank_check(EqEvaluator(model, data, sch), theta);
}

struct GmmOptions {
  int max_evals = 3000;
  int restarts = 2;
  double init_scale = 0.1;  // relative simplex edge
  int gn_iters = 40;
  int jobs = 1;
};

struct TraceRow {
  std::string stage;
  int iteration;
  double objective;
};

struct GmmReport {
  ThetaVec theta;
  double objective = 0.0;
  double eq_norm_inf = 0.0;
  int evaluations = 0;
  int iterations = 0;
  bool converged = false;
  std::vector<TraceRow> trace;
  RankReport rank;
  std::vector<std::string> skipped;
};

/// Minimizes |EQ(theta)|^2: Nelder-Mead with restarts, then damped Gauss-Newton, then the rank check.
inline GmmReport gmm_solve(const EqEvaluator& eq, const ThetaVec& theta_init, const GmmOptions& opt = {}) {
  GmmReport rep;
  auto objective = [&](const ThetaVec& t) {
    ++rep.evaluations;
    try {
      const double v = eq(t).squaredNorm();
      return std::isfinite(v) ? v : std::numeric_limits<double>::infinity();
    } catch (const Error&) {
      return std::numeric_limits<double>::infinity();
    }
  };
  const double f0 = objective(theta_init);
  if (!std::isfinite(f0)) throw InvalidArgument("gmm_solve: EQ is not defined at theta_init");
  ThetaVec x = theta_init;
  double fx = f0;
  int iter = 0;
  rep.trace.push_back({"init", 0, f0});
  for (int r = 0; r <= opt.restarts && fx > 1e-28; ++r) {
    ThetaVec scale(x.size());
    for (Eigen::Index j = 0; j < x.size(); ++j) scale(j) = opt.init_scale * std::max(std::abs(x(j)), 0.1);
    const auto nm = nelder_mead(objective, x, scale, opt.max_evals, 1e-15, 1e-10, [&](int, double f) {
      ++iter;
      rep.trace.push_back({r == 0 ? "nelder-mead" : "restart-" + std::to_string(r), iter, f});
    });
    if (nm.f <= fx) {
      x = nm.x;
      fx = nm.f;
    }
    if (nm.converged && r > 0) break;
  }
  const auto gn = gauss_newton([&](const ThetaVec& t) { return eq(t); }, x, opt.gn_iters, 1e-28, opt.jobs,
                               [&](int, double f) {
                                 ++iter;
                                 rep.trace.push_back({"gauss-newton", iter, f});
                               });
  if (gn.f <= fx) {
    x = gn.x;
    fx = gn.f;
  }
  rep.theta = x;
  rep.objective = fx;
  rep.iterations = iter;
  const auto e = eq.evaluate(x);
  rep.eq_norm_inf = e.stacked.lpNorm<Eigen::Infinity>();
  rep.skipped = e.skipped;
  rep.converged = gn.converged && std::isfinite(fx);
  rep.trace.push_back({"final", iter, fx});
  rep.rank = rank_check(eq, x, opt.jobs);
  return rep;
}

inline GmmReport gmm_solve(const ThetaModel& model, const MomentData& data, const ThetaVec& theta_init,
                           const Schedule& sch = {}, const GmmOptions& opt = {}) {
  return gmm_solve(EqEvaluator(model, data, sch), theta_init, opt);
}

// Literal sample backend --------------------------------------------------------------------

/// r(z) = int h(zeta) e^{i z zeta} dzeta on a z-grid from quadrature nodes (wh = weight * h).
inline std::vector<cplx> weight_function_on_grid(const std::vector<double>& nodes, const std::vector<cplx>& wh,
                                                  const RealGrid& zgrid) {
  std::vector<cplx> r(zgrid.size());
  for (std::size_t j = 0; j < zgrid.size(); ++j) {
    cplx s = 0.0;
    for (std::size_t k = 0; k < nodes.size(); ++k)
      if (wh[k] != 0.0) s += wh[k] * std::polar(1.0, zgrid[j] * nodes[k]);
    r[j] = s;
  }
  return r;
}

/// (1/n) sum [y_i r_y(z_i) + x_i y_i r_xy(z_i)] / p(z_i), r interpolated from the z-grid.
inline cplx sample_average_moment(const Sample& s, const DensityEstimate& p, const UniformInterpolator<cplx>& r_y,
                                  const UniformInterpolator<cplx>& r_xy) {
  cplx acc = 0.0;
  for (const auto& o : s) acc += (o.y * r_y(o.z) + o.x * o.y * r_xy(o.z)) / p(o.z);
  return acc / static_cast<double>(s.size());
}

}  // namespace eiv

#endif  // EIV_SEMIPARAM_HPP
