#ifndef EIV_WEIGHTS_HPP
#define EIV_WEIGHTS_HPP

// Compactly supported smooth weighting functions and their exact derivatives.

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <memory>
#include <string>
#include <utility>
#include <vector>

#include "eiv/errors.hpp"
#include "eiv/jet.hpp"
#include "eiv/numerics.hpp"

namespace eiv {

namespace detail {

/// f_cut(x) = exp(-1/(1-x^2)) on |x| < 1, as a jet.
inline RealJet cut_jet(double x0) {
  const double d0 = 1.0 - x0 * x0;
  // exp(-1/d0) underflows long before the polynomial factors of the derivatives overflow.
  if (d0 <= 2e-3) return RealJet{};
  const auto u = RealJet::variable(x0);
  const auto d = RealJet::constant(1.0) - u * u;
  return exp(RealJet::constant(-1.0) / d);
}

inline double cut_value(double x) {
  const double d = 1.0 - x * x;
  return d > 0.0 ? std::exp(-1.0 / d) : 0.0;
}

/// Tabulated bump antiderivative B(u) = int_{-1}^{u} f_bump, with Hermite cubic lookup.
class BumpTable {
 public:
  static const BumpTable& instance() {
    static const BumpTable t;
    return t;
  }

  double norm() const { return norm_; }

  double cdf(double u) const {
    if (u <= -1.0) return 0.0;
    if (u >= 1.0) return 1.0;
    const double pos = (u + 1.0) / h_;
    auto i = static_cast<std::size_t>(pos);
    if (i >= cells_) i = cells_ - 1;
    const double t = pos - static_cast<double>(i);
    const double x0 = -1.0 + static_cast<double>(i) * h_;
    const double m0 = cut_value(x0) / norm_ * h_;
    const double m1 = cut_value(x0 + h_) / norm_ * h_;
    const double t2 = t * t;
    const double t3 = t2 * t;
    return (2 * t3 - 3 * t2 + 1) * cum_[i] + (t3 - 2 * t2 + t) * m0 + (-2 * t3 + 3 * t2) * cum_[i + 1] +
           (t3 - t2) * m1;
  }

 private:
  BumpTable() {
    // 8-point Gauss-Legendre per cell.
    static constexpr std::array<double, 8> nodes{-0.9602898564975363, -0.7966664774136267, -0.5255324099163290,
                                                 -0.1834346424956498, 0.1834346424956498,  0.5255324099163290,
                                                 0.7966664774136267,  0.9602898564975363};
    static constexpr std::array<double, 8> weights{0.1012285362903763, 0.2223810344533745, 0.3137066458778873,
                                                   0.3626837833783620, 0.3626837833783620, 0.3137066458778873,
                                                   0.2223810344533745, 0.1012285362903763};
    h_ = 2.0 / static_cast<double>(cells_);
    cum_.assign(cells_ + 1, 0.0);
    for (std::size_t i = 0; i < cells_; ++i) {
      const double a = -1.0 + static_cast<double>(i) * h_;
      double s = 0.0;
      for (std::size_t q = 0; q < nodes.size(); ++q) s += weights[q] * cut_value(a + 0.5 * h_ * (nodes[q] + 1.0));
      cum_[i + 1] = cum_[i] + 0.5 * h_ * s;
    }
    norm_ = cum_.back();
    for (auto& c : cum_) c /= norm_;
  }

  std::size_t cells_ = 4000;
  double h_ = 0.0;
  double norm_ = 0.0;
  std::vector<double> cum_;
};

inline RealJet bump_jet(double x0) {
  auto j = cut_jet(x0);
  j *= 1.0 / BumpTable::instance().norm();
  return j;
}

/// Jet of B(u) around u0: B' = f_bump.
inline RealJet bump_cdf_jet(double u0) {
  RealJet r;
  r.c[0] = BumpTable::instance().cdf(u0);
  if (std::abs(u0) < 1.0) {
    const auto b = bump_jet(u0);
    for (std::size_t k = 1; k <= kJetOrder; ++k) r.c[k] = b.c[k - 1] / static_cast<double>(k);
  }
  return r;
}

}  // namespace detail

inline double eval_cut(double zeta) { return detail::cut_value(zeta); }

inline double cut_integral() { return detail::BumpTable::instance().norm(); }

inline double eval_bump(double zeta) { return detail::cut_value(zeta) / cut_integral(); }

/// Immutable, compactly supported smooth function with derivatives up to order 4.
class TestFunction {
 public:
  struct Node {
    virtual ~Node() = default;
    virtual RealJet jet(double x) const = 0;
    /// Closed intervals outside of which the function vanishes identically.
    virtual std::vector<Interval> support() const = 0;
    virtual bool compact() const { return true; }
    /// Highest derivative order available from the jet.
    virtual int capacity() const { return static_cast<int>(kJetOrder); }
  };

  explicit TestFunction(std::shared_ptr<const Node> n, std::string label = {})
      : node_(std::move(n)), label_(std::move(label)) {}

  double operator()(double x) const { return node_->jet(x).c[0]; }

  RealJet jet(double x) const { return node_->jet(x); }

  double derivative(double x, int order) const {
    if (order < 0 || order > max_deriv_order())
      throw UnsupportedOrder("TestFunction: derivative order " + std::to_string(order) + " not supported");
    return node_->jet(x).derivative(static_cast<std::size_t>(order));
  }

  int max_deriv_order() const { return std::min(kMaxDerivOrder, node_->capacity()); }

  std::vector<Interval> support() const { return node_->support(); }
  bool compact() const { return node_->compact(); }

  Interval hull() const {
    const auto s = support();
    if (s.empty()) return {0.0, 0.0};
    return {s.front().lo, s.back().hi};
  }

  const std::string& label() const { return label_; }
  const std::shared_ptr<const Node>& node() const { return node_; }

  // Building blocks ------------------------------------------------------------------

  static TestFunction cut();
  /// amplitude * f_bump((zeta - center) / halfwidth)
  static TestFunction bump(double center, double halfwidth, double amplitude = 1.0);
  /// (zeta - center)^p; not compactly supported, used inside products only.
  static TestFunction monomial(double center, unsigned p);
  static TestFunction product(const TestFunction& a, const TestFunction& b);
  static TestFunction linear_combination(std::vector<std::pair<double, TestFunction>> terms);
  /// amplitude * f((zeta - shift) / scale); scale may be negative (reflection).
  static TestFunction affine(const TestFunction& f, double shift, double scale, double amplitude = 1.0);
  static TestFunction derivative_of(const TestFunction& f);

 private:
  std::shared_ptr<const Node> node_;
  std::string label_;
};

namespace detail {

struct CutNode final : TestFunction::Node {
  RealJet jet(double x) const override { return cut_jet(x); }
  std::vector<Interval> support() const override { return {{-1.0, 1.0}}; }
};

struct BumpNode final : TestFunction::Node {
  double center, halfwidth, amplitude;
  BumpNode(double c, double w, double a) : center(c), halfwidth(w), amplitude(a) {}
  RealJet jet(double x) const override {
    auto j = rescale(bump_jet((x - center) / halfwidth), 1.0 / halfwidth);
    j *= amplitude;
    return j;
  }
  std::vector<Interval> support() const override { return {{center - halfwidth, center + halfwidth}}; }
};

/// Indicator of the half-enlarged plateau convolved with a bump of half-width `half`: 1 on each
/// plateau interval, 0 beyond distance 2 * half from it.
struct MollifiedNode final : TestFunction::Node {
  std::vector<Interval> plateau;
  double half;  // mollifier half-width
  MollifiedNode(std::vector<Interval> p, double h) : plateau(std::move(p)), half(h) {}
  RealJet jet(double x) const override {
    RealJet r;
    for (const auto& iv : plateau) {
      const double lo = iv.lo - half;
      const double hi = iv.hi + half;
      if (x <= lo - half || x >= hi + half) continue;
      r += rescale(bump_cdf_jet((x - lo) / half), 1.0 / half);
      r -= rescale(bump_cdf_jet((x - hi) / half), 1.0 / half);
    }
    return r;
  }
  std::vector<Interval> support() const override {
    std::vector<Interval> s;
    for (const auto& iv : plateau) s.push_back({iv.lo - 2.0 * half, iv.hi + 2.0 * half});
    return merge_intervals(std::move(s));
  }
};

struct MonomialNode final : TestFunction::Node {
  double center;
  unsigned p;
  MonomialNode(double c, unsigned pp) : center(c), p(pp) {}
  RealJet jet(double x) const override { return monomial<double, kJetOrder>(x - center, p); }
  std::vector<Interval> support() const override {
    const double inf = std::numeric_limits<double>::infinity();
    return {{-inf, inf}};
  }
  bool compact() const override { return false; }
};

inline std::vector<Interval> intersect(const std::vector<Interval>& a, const std::vector<Interval>& b) {
  std::vector<Interval> out;
  for (const auto& x : a)
    for (const auto& y : b) {
      const double lo = std::max(x.lo, y.lo);
      const double hi = std::min(x.hi, y.hi);
      if (lo < hi) out.push_back({lo, hi});
    }
  return merge_intervals(std::move(out));
}

struct ProductNode final : TestFunction::Node {
  TestFunction a, b;
  ProductNode(TestFunction x, TestFunction y) : a(std::move(x)), b(std::move(y)) {}
  RealJet jet(double x) const override { return a.jet(x) * b.jet(x); }
  std::vector<Interval> support() const override { return intersect(a.support(), b.support()); }
  bool compact() const override { return a.compact() || b.compact(); }
  int capacity() const override { return std::min(a.node()->capacity(), b.node()->capacity()); }
};

struct SumNode final : TestFunction::Node {
  std::vector<std::pair<double, TestFunction>> terms;
  explicit SumNode(std::vector<std::pair<double, TestFunction>> t) : terms(std::move(t)) {}
  RealJet jet(double x) const override {
    RealJet r;
    for (const auto& [c, f] : terms) r += f.jet(x) * c;
    return r;
  }
  std::vector<Interval> support() const override {
    std::vector<Interval> s;
    for (const auto& [c, f] : terms)
      for (const auto& iv : f.support()) s.push_back(iv);
    return merge_intervals(std::move(s));
  }
  bool compact() const override {
    return std::all_of(terms.begin(), terms.end(), [](const auto& t) { return t.second.compact(); });
  }
  int capacity() const override {
    int c = static_cast<int>(kJetOrder);
    for (const auto& [w, f] : terms) c = std::min(c, f.node()->capacity());
    return c;
  }
};

struct AffineNode final : TestFunction::Node {
  TestFunction f;
  double shift, scale, amplitude;
  AffineNode(TestFunction g, double s, double k, double a) : f(std::move(g)), shift(s), scale(k), amplitude(a) {}
  RealJet jet(double x) const override {
    auto j = rescale(f.jet((x - shift) / scale), 1.0 / scale);
    j *= amplitude;
    return j;
  }
  std::vector<Interval> support() const override {
    std::vector<Interval> s;
    for (const auto& iv : f.support()) {
      const double a = shift + scale * iv.lo;
      const double b = shift + scale * iv.hi;
      s.push_back({std::min(a, b), std::max(a, b)});
    }
    return merge_intervals(std::move(s));
  }
  bool compact() const override { return f.compact(); }
  int capacity() const override { return f.node()->capacity(); }
};

struct DerivativeNode final : TestFunction::Node {
  TestFunction f;
  explicit DerivativeNode(TestFunction g) : f(std::move(g)) {}
  RealJet jet(double x) const override {
    const auto j = f.jet(x);
    RealJet r;
    for (std::size_t k = 0; k < kJetOrder; ++k) r.c[k] = j.c[k + 1] * static_cast<double>(k + 1);
    return r;
  }
  std::vector<Interval> support() const override { return f.support(); }
  bool compact() const override { return f.compact(); }
  int capacity() const override { return f.node()->capacity() - 1; }
};

}  // namespace detail

inline TestFunction TestFunction::cut() { return TestFunction(std::make_shared<detail::CutNode>(), "cut"); }

inline TestFunction TestFunction::bump(double center, double halfwidth, double amplitude) {
  if (!(halfwidth > 0.0)) throw InvalidArgument("bump: halfwidth must be > 0");
  return TestFunction(std::make_shared<detail::BumpNode>(center, halfwidth, amplitude), "bump");
}

inline TestFunction TestFunction::monomial(double center, unsigned p) {
  return TestFunction(std::make_shared<detail::MonomialNode>(center, p), "monomial");
}

inline TestFunction TestFunction::product(const TestFunction& a, const TestFunction& b) {
  if (!a.compact() && !b.compact()) throw InvalidArgument("product: at least one factor must be compact");
  return TestFunction(std::make_shared<detail::ProductNode>(a, b), a.label() + "*" + b.label());
}

inline TestFunction TestFunction::linear_combination(std::vector<std::pair<double, TestFunction>> terms) {
  if (terms.empty()) throw InvalidArgument("linear_combination: no terms");
  return TestFunction(std::make_shared<detail::SumNode>(std::move(terms)), "sum");
}

inline TestFunction TestFunction::affine(const TestFunction& f, double shift, double scale, double amplitude) {
  if (scale == 0.0) throw InvalidArgument("affine: scale must be nonzero");
  return TestFunction(std::make_shared<detail::AffineNode>(f, shift, scale, amplitude), f.label());
}

inline TestFunction TestFunction::derivative_of(const TestFunction& f) {
  return TestFunction(std::make_shared<detail::DerivativeNode>(f), "d(" + f.label() + ")");
}

/// Smoothed indicator of V: equals 1 on V, 0 outside the eps-enlargement U of V, values in [0, 1].
///
/// With mirror = true, V = union of [a_i, b_i] and [-b_i, -a_i]. Distinct intervals of V must
/// be more than 2 eps apart so their enlargements stay disjoint; an interval that is its own
/// mirror (b_i = -a_i) is merged.
inline TestFunction make_interval_mollified(std::vector<Interval> intervals, double eps, bool mirror = true) {
  if (!(eps > 0.0)) throw InvalidArgument("make_interval_mollified: eps must be > 0");
  if (intervals.empty()) throw InvalidArgument("make_interval_mollified: empty interval set");
  for (const auto& iv : intervals)
    if (!(iv.lo < iv.hi)) throw InvalidArgument("make_interval_mollified: need a_i < b_i");
  std::vector<Interval> all = intervals;
  if (mirror)
    for (const auto& iv : intervals) all.push_back({-iv.hi, -iv.lo});
  std::sort(all.begin(), all.end(), [](const Interval& a, const Interval& b) { return a.lo < b.lo; });
  std::vector<Interval> v;
  for (const auto& iv : all) {
    if (!v.empty() && std::abs(iv.lo - v.back().lo) < 1e-14 && std::abs(iv.hi - v.back().hi) < 1e-14) continue;
    if (!v.empty()) {
      const double gap = iv.lo - v.back().hi;
      const bool self_mirror = std::abs(iv.lo + iv.hi) < 1e-14 || std::abs(v.back().lo + v.back().hi) < 1e-14;
      if (gap <= 0.0 && !self_mirror)
        throw InvalidArgument("make_interval_mollified: intervals of V overlap");
      if (gap <= 0.0) {
        v.back().hi = std::max(v.back().hi, iv.hi);
        continue;
      }
      if (!(eps < 0.5 * gap))
        throw InvalidArgument("make_interval_mollified: eps must be smaller than half the minimum gap");
    }
    v.push_back(iv);
  }
  return TestFunction(std::make_shared<detail::MollifiedNode>(std::move(v), 0.5 * eps), "f_V");
}

enum class Sidedness { kSymmetric, kOneSided };

/// f_{xi,p,eps}(zeta) = (zeta - xi)^p times a window equal to 1 on |zeta - xi| <= eps/2 and
/// vanishing for |zeta - xi| >= eps. Its l-th derivative at xi is p! for l = p and 0 otherwise.
///
/// For xi != 0 the symmetric form adds the mirrored piece (-1)^p (zeta + xi)^p so the function is
/// even and the same identity holds at -xi with sign (-1)^l; this needs xi > eps.
inline TestFunction make_poly_bump(double xi, unsigned p, double eps, Sidedness side = Sidedness::kSymmetric) {
  if (!(eps > 0.0)) throw InvalidArgument("make_poly_bump: eps must be > 0");
  if (p > static_cast<unsigned>(kMaxDerivOrder)) throw UnsupportedOrder("make_poly_bump: p exceeds maximum order 4");
  const double half = 0.5 * eps;
  TestFunction out = [&] {
    const auto piece = TestFunction::product(TestFunction::monomial(xi, p),
                                             make_interval_mollified({{xi - half, xi + half}}, eps / 2.0, false));
    if (xi == 0.0 || side == Sidedness::kOneSided) return piece;
    if (!(std::abs(xi) > eps))
      throw InvalidArgument("make_poly_bump: the two windows at +-xi overlap (need |xi| > eps)");
    const auto mirror = TestFunction::product(TestFunction::monomial(-xi, p),
                                              make_interval_mollified({{-xi - half, -xi + half}}, eps / 2.0, false));
    return TestFunction::linear_combination({{1.0, piece}, {(p % 2) ? -1.0 : 1.0, mirror}});
  }();
  const auto jet = out.jet(xi);
  for (unsigned l = 0; l <= static_cast<unsigned>(kMaxDerivOrder); ++l) {
    double expect = 1.0;
    for (unsigned i = 2; i <= p; ++i) expect *= i;
    if (l != p) expect = 0.0;
    if (std::abs(jet.derivative(l) - expect) > 1e-4 * std::max(1.0, expect))
      throw ConstructionError("make_poly_bump: derivative identity failed at xi");
  }
  return TestFunction(out.node(), "f_xi,p");
}

/// 1/2 [f_bump((zeta - c - xi)/eps) + f_bump((zeta - c + xi)/eps)], unnormalized as composed in
/// the moment construction; its integral is eps.
inline TestFunction make_pair_bump(double xi_n, double eps_n, double center = 0.0) {
  if (!(eps_n > 0.0)) throw InvalidArgument("make_pair_bump: eps_n must be > 0");
  if (!(eps_n < std::abs(xi_n))) throw InvalidArgument("make_pair_bump: bumps overlap (need eps_n < |xi_n|)");
  return TestFunction::linear_combination({{0.5, TestFunction::bump(center + xi_n, eps_n)},
                                           {0.5, TestFunction::bump(center - xi_n, eps_n)}});
}

}  // namespace eiv

#endif  // EIV_WEIGHTS_HPP
