#ifndef EIV_NUMERICS_HPP
#define EIV_NUMERICS_HPP

// Grid functions and finitely parameterized generalized functions.

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <functional>
#include <numbers>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "eiv/errors.hpp"
#include "eiv/jet.hpp"

namespace eiv {

using cplx = std::complex<double>;
inline constexpr cplx kI{0.0, 1.0};
inline constexpr double kPi = std::numbers::pi;

/// Highest Taylor order carried by jets; public derivative queries stop at 4.
inline constexpr std::size_t kJetOrder = 5;
inline constexpr int kMaxDerivOrder = 4;

using RealJet = Jet<double, kJetOrder>;
using ComplexJet = Jet<cplx, kJetOrder>;

struct Interval {
  double lo = 0.0;
  double hi = 0.0;

  double width() const { return hi - lo; }
  bool contains(double x) const { return x >= lo && x <= hi; }
};

/// Sorts and merges overlapping or touching intervals.
inline std::vector<Interval> merge_intervals(std::vector<Interval> v) {
  std::sort(v.begin(), v.end(), [](const Interval& a, const Interval& b) { return a.lo < b.lo; });
  std::vector<Interval> out;
  for (const auto& iv : v) {
    if (!out.empty() && iv.lo <= out.back().hi)
      out.back().hi = std::max(out.back().hi, iv.hi);
    else
      out.push_back(iv);
  }
  return out;
}

/// Uniform grid of n_points samples on [lo, hi].
class RealGrid {
 public:
  RealGrid(double lo, double hi, std::size_t n_points) : lo_(lo), hi_(hi), n_(n_points) {
    if (!(lo < hi)) throw InvalidArgument("RealGrid: lo must be < hi");
    if (n_points < 3) throw InvalidArgument("RealGrid: n_points must be >= 3");
  }

  /// Symmetric grid [-m h, m h] with odd point count, so that 0 is a node.
  static RealGrid symmetric(double half_width, double step) {
    if (!(half_width > 0.0) || !(step > 0.0))
      throw InvalidArgument("RealGrid::symmetric: half_width and step must be positive");
    const auto m = static_cast<std::size_t>(std::llround(half_width / step));
    if (m < 1) throw InvalidArgument("RealGrid::symmetric: step larger than half_width");
    const double hw = static_cast<double>(m) * step;
    return RealGrid(-hw, hw, 2 * m + 1);
  }

  double lo() const { return lo_; }
  double hi() const { return hi_; }
  std::size_t size() const { return n_; }
  double step() const { return (hi_ - lo_) / static_cast<double>(n_ - 1); }

  double operator[](std::size_t i) const {
    if (i + 1 == n_) return hi_;
    return lo_ + static_cast<double>(i) * step();
  }

  bool is_symmetric() const {
    return n_ % 2 == 1 && std::abs(lo_ + hi_) <= 1e-12 * std::max(1.0, std::abs(hi_));
  }

  std::size_t zero_index() const {
    if (!is_symmetric()) throw InvalidArgument("RealGrid: grid is not symmetric about 0");
    return n_ / 2;
  }

  std::vector<double> points() const {
    std::vector<double> p(n_);
    for (std::size_t i = 0; i < n_; ++i) p[i] = (*this)[i];
    return p;
  }

 private:
  double lo_;
  double hi_;
  std::size_t n_;
};

/// Real step function: a_k on [b_k, b_{k+1}), zero outside.
class StepFunction {
 public:
  StepFunction() = default;
  StepFunction(std::vector<double> breakpoints, std::vector<double> values)
      : breaks_(std::move(breakpoints)), values_(std::move(values)) {
    if (breaks_.size() != values_.size() + 1 || values_.empty())
      throw InvalidArgument("StepFunction: need N+1 breakpoints for N values (N >= 1)");
    for (std::size_t i = 1; i < breaks_.size(); ++i)
      if (!(breaks_[i] > breaks_[i - 1]))
        throw InvalidArgument("StepFunction: breakpoints must be strictly increasing");
    for (double v : values_)
      if (!std::isfinite(v)) throw InvalidArgument("StepFunction: non-finite value");
  }

  static StepFunction indicator(double a, double b, double height = 1.0) {
    return StepFunction({a, b}, {height});
  }

  /// Exact sum of overlapping terms alpha_m * I(|v - t_m| < tau_m).
  static StepFunction from_terms(std::span<const std::array<double, 3>> alpha_t_tau) {
    std::vector<double> br;
    for (const auto& [a, t, tau] : alpha_t_tau) {
      br.push_back(t - tau);
      br.push_back(t + tau);
    }
    std::sort(br.begin(), br.end());
    br.erase(std::unique(br.begin(), br.end(), [](double x, double y) { return std::abs(x - y) < 1e-14; }),
             br.end());
    if (br.size() < 2) throw InvalidArgument("StepFunction::from_terms: empty term list");
    std::vector<double> vals(br.size() - 1, 0.0);
    for (std::size_t k = 0; k + 1 < br.size(); ++k) {
      const double mid = 0.5 * (br[k] + br[k + 1]);
      for (const auto& [a, t, tau] : alpha_t_tau)
        if (std::abs(mid - t) < tau) vals[k] += a;
    }
    return StepFunction(std::move(br), std::move(vals));
  }

  const std::vector<double>& breakpoints() const { return breaks_; }
  const std::vector<double>& values() const { return values_; }
  std::size_t pieces() const { return values_.size(); }
  bool empty() const { return values_.empty(); }

  double operator()(double x) const {
    if (empty() || x < breaks_.front() || x >= breaks_.back()) return 0.0;
    const auto it = std::upper_bound(breaks_.begin(), breaks_.end(), x);
    return values_[static_cast<std::size_t>(it - breaks_.begin()) - 1];
  }

  /// Value with jumps replaced by the mean of the one-sided limits.
  double midpoint_value(double x) const {
    const double tol = 1e-12 * std::max(1.0, std::abs(x));
    for (std::size_t k = 0; k < breaks_.size(); ++k)
      if (std::abs(x - breaks_[k]) <= tol) {
        const double left = k == 0 ? 0.0 : values_[k - 1];
        const double right = k < values_.size() ? values_[k] : 0.0;
        return 0.5 * (left + right);
      }
    return (*this)(x);
  }

  double integral() const {
    double s = 0.0;
    for (std::size_t k = 0; k < values_.size(); ++k) s += values_[k] * (breaks_[k + 1] - breaks_[k]);
    return s;
  }

  StepFunction scaled(double c) const {
    auto v = values_;
    for (auto& x : v) x *= c;
    return StepFunction(breaks_, std::move(v));
  }

 private:
  std::vector<double> breaks_;
  std::vector<double> values_;
};

/// Sum of linear pieces (slope * v + intercept) * I(|v - t| < tau); pieces may overlap.
class PiecewiseLinearFunction {
 public:
  struct Segment {
    double center;
    double half_width;
    double slope;
    double intercept;
  };

  PiecewiseLinearFunction() = default;
  explicit PiecewiseLinearFunction(std::vector<Segment> segs) : segs_(std::move(segs)) {
    for (const auto& s : segs_)
      if (!(s.half_width > 0.0)) throw InvalidArgument("PiecewiseLinearFunction: tau must be > 0");
  }

  /// Canonical term alpha * (v - eps) * I(|v - t| < tau).
  static Segment canonical(double alpha, double t, double eps, double tau) {
    return Segment{t, tau, alpha, -alpha * eps};
  }

  const std::vector<Segment>& segments() const { return segs_; }

  double operator()(double v) const {
    double s = 0.0;
    for (const auto& g : segs_)
      if (std::abs(v - g.center) < g.half_width) s += g.slope * v + g.intercept;
    return s;
  }

 private:
  std::vector<Segment> segs_;
};

/// Discrete measurement-error law sum_j c_j delta(x - d_j).
class DiscreteDistribution {
 public:
  struct Atom {
    double weight;
    double location;
  };

  enum class MeanPolicy { kCentered, kAny };

  explicit DiscreteDistribution(std::vector<Atom> atoms, MeanPolicy policy = MeanPolicy::kCentered)
      : atoms_(std::move(atoms)) {
    if (atoms_.empty()) throw InvalidArgument("DiscreteDistribution: no atoms");
    std::sort(atoms_.begin(), atoms_.end(), [](const Atom& a, const Atom& b) { return a.location < b.location; });
    double total = 0.0;
    double mean = 0.0;
    for (std::size_t j = 0; j < atoms_.size(); ++j) {
      if (!(atoms_[j].weight > 0.0)) throw InvalidArgument("DiscreteDistribution: weights must be > 0");
      if (j > 0 && !(atoms_[j].location > atoms_[j - 1].location))
        throw InvalidArgument("DiscreteDistribution: duplicate atom location");
      total += atoms_[j].weight;
      mean += atoms_[j].weight * atoms_[j].location;
    }
    if (std::abs(total - 1.0) > 1e-12) throw InvalidArgument("DiscreteDistribution: weights must sum to 1");
    if (policy == MeanPolicy::kCentered && std::abs(mean) > 1e-12)
      throw InvalidArgument("DiscreteDistribution: E(U) must be 0");
  }

  static DiscreteDistribution point_mass() { return DiscreteDistribution({{1.0, 0.0}}); }

  const std::vector<Atom>& atoms() const { return atoms_; }

  double mean() const {
    double m = 0.0;
    for (const auto& a : atoms_) m += a.weight * a.location;
    return m;
  }

  cplx charfun(double zeta) const {
    cplx s = 0.0;
    for (const auto& a : atoms_) s += a.weight * std::polar(1.0, zeta * a.location);
    return s;
  }

  /// Derivatives of the characteristic function: phi^(k)(zeta) = sum c (i d)^k e^{i zeta d}.
  ComplexJet charfun_jet(double zeta) const {
    ComplexJet j;
    for (const auto& a : atoms_) {
      const cplx e = std::polar(1.0, zeta * a.location);
      cplx p = 1.0;
      double fact = 1.0;
      for (std::size_t k = 0; k <= kJetOrder; ++k) {
        if (k > 0) fact *= static_cast<double>(k);
        j.c[k] += a.weight * p * e / fact;
        p *= kI * a.location;
      }
    }
    return j;
  }

 private:
  std::vector<Atom> atoms_;
};

/// Complex function sampled on a frequency grid.
struct GridSpectrum {
  RealGrid grid;
  std::vector<cplx> values;
  bool hermitian = false;

  GridSpectrum(RealGrid g, std::vector<cplx> v, bool herm = false)
      : grid(g), values(std::move(v)), hermitian(herm) {
    if (values.size() != grid.size()) throw InvalidArgument("GridSpectrum: size mismatch with grid");
  }

  static GridSpectrum zeros(const RealGrid& g) { return GridSpectrum(g, std::vector<cplx>(g.size()), true); }

  template <class F>
  static GridSpectrum sample(const RealGrid& g, F&& f, bool herm = false) {
    std::vector<cplx> v(g.size());
    for (std::size_t i = 0; i < g.size(); ++i) v[i] = f(g[i]);
    return GridSpectrum(g, std::move(v), herm);
  }

  std::size_t size() const { return values.size(); }
  double zeta(std::size_t i) const { return grid[i]; }
  cplx at_zero() const { return values[grid.zero_index()]; }
};

/// Weighted delta derivative coef * delta^{(order)}(zeta - location).
struct DeltaAtom {
  double location;
  int order;
  cplx coef;
};

class DeltaTrain {
 public:
  DeltaTrain() = default;
  explicit DeltaTrain(std::vector<DeltaAtom> atoms) : atoms_(std::move(atoms)) {
    for (std::size_t i = 0; i < atoms_.size(); ++i) {
      if (atoms_[i].order < 0) throw InvalidArgument("DeltaTrain: negative order");
      for (std::size_t j = 0; j < i; ++j)
        if (atoms_[i].order == atoms_[j].order && atoms_[i].location == atoms_[j].location)
          throw InvalidArgument("DeltaTrain: duplicate (location, order) atom");
    }
  }

  const std::vector<DeltaAtom>& atoms() const { return atoms_; }
  bool empty() const { return atoms_.empty(); }

  int max_order() const {
    int m = -1;
    for (const auto& a : atoms_) m = std::max(m, a.order);
    return m;
  }

  /// Adds the mirrored atom (-s, k, (-1)^k conj(c)) for every atom at s > 0, which
  /// makes the train the transform of a real function.
  DeltaTrain with_mirror() const {
    std::vector<DeltaAtom> out = atoms_;
    for (const auto& a : atoms_)
      if (a.location > 0.0) out.push_back({-a.location, a.order, (a.order % 2 ? -1.0 : 1.0) * std::conj(a.coef)});
    return DeltaTrain(std::move(out));
  }

  /// Distributional derivative: every order goes up by one.
  DeltaTrain derivative() const {
    auto out = atoms_;
    for (auto& a : out) ++a.order;
    return DeltaTrain(std::move(out));
  }

  DeltaTrain scaled(cplx s) const {
    auto out = atoms_;
    for (auto& a : out) a.coef *= s;
    return DeltaTrain(std::move(out));
  }

  /// Product with a smooth function given by its jets at atom locations:
  /// a delta^{(k)}_s * phi = sum_j C(k,j) (-1)^j phi^{(j)}(s) a delta^{(k-j)}_s.
  template <class JetFn>
  DeltaTrain multiplied(JetFn&& phi_jet) const {
    std::vector<DeltaAtom> acc;
    auto add = [&](double s, int k, cplx c) {
      for (auto& a : acc)
        if (a.location == s && a.order == k) {
          a.coef += c;
          return;
        }
      acc.push_back({s, k, c});
    };
    for (const auto& a : atoms_) {
      const ComplexJet pj = phi_jet(a.location);
      double binom = 1.0;
      for (int j = 0; j <= a.order; ++j) {
        if (j > 0) binom = binom * static_cast<double>(a.order - j + 1) / static_cast<double>(j);
        const double sign = (j % 2) ? -1.0 : 1.0;
        add(a.location, a.order - j, binom * sign * pj.derivative(static_cast<std::size_t>(j)) * a.coef);
      }
    }
    return DeltaTrain(std::move(acc));
  }

  friend DeltaTrain operator+(const DeltaTrain& a, const DeltaTrain& b) {
    std::vector<DeltaAtom> out = a.atoms_;
    for (const auto& x : b.atoms_) {
      bool merged = false;
      for (auto& y : out)
        if (y.location == x.location && y.order == x.order) {
          y.coef += x.coef;
          merged = true;
        }
      if (!merged) out.push_back(x);
    }
    return DeltaTrain(std::move(out));
  }

 private:
  std::vector<DeltaAtom> atoms_;
};

/// Regular grid part plus a finite delta train.
struct GeneralizedSpectrum {
  GridSpectrum regular;
  DeltaTrain singular;

  GeneralizedSpectrum(GridSpectrum r, DeltaTrain s = {}) : regular(std::move(r)), singular(std::move(s)) {
    for (const auto& a : singular.atoms())
      if (a.location < regular.grid.lo() || a.location > regular.grid.hi())
        throw InvalidArgument("GeneralizedSpectrum: atom outside the regular grid range");
  }
};

/// Central differences inside, second-order one-sided stencils at both ends.
inline GridSpectrum derivative(const GridSpectrum& s) {
  const std::size_t n = s.size();
  const double h = s.grid.step();
  std::vector<cplx> d(n);
  const auto& v = s.values;
  for (std::size_t i = 1; i + 1 < n; ++i) d[i] = (v[i + 1] - v[i - 1]) / (2.0 * h);
  d[0] = (-3.0 * v[0] + 4.0 * v[1] - v[2]) / (2.0 * h);
  d[n - 1] = (3.0 * v[n - 1] - 4.0 * v[n - 2] + v[n - 3]) / (2.0 * h);
  return GridSpectrum(s.grid, std::move(d), false);
}

inline double hermitian_defect(const GridSpectrum& s) {
  if (!s.grid.is_symmetric()) throw InvalidArgument("check_hermitian: grid must be symmetric");
  const std::size_t n = s.size();
  double worst = 0.0;
  for (std::size_t i = 0; i < n; ++i) worst = std::max(worst, std::abs(s.values[n - 1 - i] - std::conj(s.values[i])));
  return worst;
}

inline bool check_hermitian(const GridSpectrum& s, double tol) { return hermitian_defect(s) <= tol; }

/// Composite trapezoid over uniformly spaced samples.
template <class T>
T trapezoid(std::span<const T> v, double h) {
  if (v.size() < 2) return T{};
  T s = 0.5 * (v.front() + v.back());
  for (std::size_t i = 1; i + 1 < v.size(); ++i) s += v[i];
  return s * h;
}

/// Trapezoid of f over [a, b] with n intervals.
template <class F>
auto trapezoid_fn(F&& f, double a, double b, std::size_t n) -> decltype(f(a)) {
  using T = decltype(f(a));
  const double h = (b - a) / static_cast<double>(n);
  T s = 0.5 * (f(a) + f(b));
  for (std::size_t i = 1; i < n; ++i) s += f(a + static_cast<double>(i) * h);
  return s * h;
}

/// Cumulative trapezoid anchored at the zero node of a symmetric grid, integrating outward.
inline std::vector<cplx> cumulative_from_zero(const GridSpectrum& s) {
  const std::size_t n = s.size();
  const std::size_t z = s.grid.zero_index();
  const double h = s.grid.step();
  std::vector<cplx> out(n);
  out[z] = 0.0;
  for (std::size_t i = z + 1; i < n; ++i) out[i] = out[i - 1] + 0.5 * h * (s.values[i] + s.values[i - 1]);
  for (std::size_t i = z; i-- > 0;) out[i] = out[i + 1] - 0.5 * h * (s.values[i] + s.values[i + 1]);
  return out;
}

/// Four-point Lagrange interpolation on a uniform grid; zero outside the grid.
template <class T>
class UniformInterpolator {
 public:
  UniformInterpolator(RealGrid grid, std::vector<T> values) : grid_(grid), v_(std::move(values)) {
    if (v_.size() != grid_.size()) throw InvalidArgument("UniformInterpolator: size mismatch");
  }

  T operator()(double x) const {
    const double h = grid_.step();
    const double u = (x - grid_.lo()) / h;
    const auto n = static_cast<long>(v_.size());
    if (u < 0.0 || u > static_cast<double>(n - 1)) return T{};
    long i = static_cast<long>(std::floor(u)) - 1;
    i = std::clamp(i, 0L, n - 4);
    const double t = u - static_cast<double>(i);
    const double l0 = -(t - 1) * (t - 2) * (t - 3) / 6.0;
    const double l1 = t * (t - 2) * (t - 3) / 2.0;
    const double l2 = -t * (t - 1) * (t - 3) / 2.0;
    const double l3 = t * (t - 1) * (t - 2) / 6.0;
    const auto k = static_cast<std::size_t>(i);
    return l0 * v_[k] + l1 * v_[k + 1] + l2 * v_[k + 2] + l3 * v_[k + 3];
  }

  const RealGrid& grid() const { return grid_; }

 private:
  RealGrid grid_;
  std::vector<T> v_;
};

}  // namespace eiv

#endif  // EIV_NUMERICS_HPP
