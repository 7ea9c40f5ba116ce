#ifndef EIV_SIMULATE_HPP
#define EIV_SIMULATE_HPP

// Data-generating processes for Y = g(X*) + dY, X = X* + dX, X* = Z - U, and exact conditional moments.

#include <array>
#include <cmath>
#include <cstdint>
#include <random>
#include <variant>
#include <vector>

#include "eiv/errors.hpp"
#include "eiv/numerics.hpp"
#include "eiv/sample.hpp"

namespace eiv {

/// Sum of simple closed-form terms.
class RegressionFunction {
 public:
  struct Step {
    StepFunction f;
  };
  struct Polynomial {
    std::vector<double> coeffs;  // c0 + c1 x + ...
  };
  struct Gaussian {
    double amplitude;
    double rate;  // a exp(-rate x^2)
  };
  struct Cosine {
    double amplitude;
    double omega;
  };
  struct Laplace {
    double amplitude;
    double rate;  // a exp(-rate |x|)
  };
  using Term = std::variant<Step, Polynomial, Gaussian, Cosine, Laplace>;

  RegressionFunction() = default;
  explicit RegressionFunction(std::vector<Term> terms) : terms_(std::move(terms)) {}
  RegressionFunction(StepFunction f) : terms_{Step{std::move(f)}} {}  // NOLINT

  double operator()(double x) const {
    double s = 0.0;
    for (const auto& t : terms_) s += std::visit([x](const auto& v) { return eval(v, x); }, t);
    return s;
  }

  const std::vector<Term>& terms() const { return terms_; }

  bool is_step() const { return terms_.size() == 1 && std::holds_alternative<Step>(terms_[0]); }
  const StepFunction& as_step() const {
    if (!is_step()) throw InvalidArgument("RegressionFunction: not a step function");
    return std::get<Step>(terms_[0]).f;
  }

 private:
  static double eval(const Step& s, double x) { return s.f(x); }
  static double eval(const Polynomial& p, double x) {
    double r = 0.0;
    for (auto it = p.coeffs.rbegin(); it != p.coeffs.rend(); ++it) r = r * x + *it;
    return r;
  }
  static double eval(const Gaussian& g, double x) { return g.amplitude * std::exp(-g.rate * x * x); }
  static double eval(const Cosine& c, double x) { return c.amplitude * std::cos(c.omega * x); }
  static double eval(const Laplace& l, double x) { return l.amplitude * std::exp(-l.rate * std::abs(x)); }

  std::vector<Term> terms_;
};

struct InstrumentLaw {
  enum class Kind { kUniform, kGaussian };
  Kind kind = Kind::kUniform;
  double a = -3.0;  // lower bound, or mean
  double b = 3.0;   // upper bound, or standard deviation

  static InstrumentLaw uniform(double lo, double hi) { return {Kind::kUniform, lo, hi}; }
  static InstrumentLaw gaussian(double mean, double sd) { return {Kind::kGaussian, mean, sd}; }

  double density(double z) const {
    if (kind == Kind::kUniform) return (z >= a && z <= b) ? 1.0 / (b - a) : 0.0;
    const double u = (z - a) / b;
    return std::exp(-0.5 * u * u) / (b * std::sqrt(2.0 * kPi));
  }
};

struct DGP {
  RegressionFunction g;
  DiscreteDistribution F = DiscreteDistribution::point_mass();
  InstrumentLaw z;
  double sigma_dy = 0.0;
  double sigma_dx = 0.0;
  std::uint64_t seed = 1;
};

inline DiscreteDistribution default_error_law() {
  return DiscreteDistribution({{0.25, -0.3}, {0.5, 0.0}, {0.25, 0.3}});
}

/// g = 1 on [-1, 1), three-atom F, Z ~ U[-3, 3], noise (0.2, 0.1).
inline DGP default_dgp() {
  DGP d;
  d.g = RegressionFunction(StepFunction::indicator(-1.0, 1.0));
  d.F = default_error_law();
  d.z = InstrumentLaw::uniform(-3.0, 3.0);
  d.sigma_dy = 0.2;
  d.sigma_dx = 0.1;
  d.seed = 20240601;
  return d;
}

inline Sample draw(const DGP& dgp, std::size_t n) {
  if (n < 1) throw InvalidArgument("draw: n must be >= 1");
  if (dgp.sigma_dy < 0.0 || dgp.sigma_dx < 0.0) throw InvalidArgument("draw: noise sd must be >= 0");
  std::mt19937_64 rng(dgp.seed);
  std::vector<double> w;
  for (const auto& a : dgp.F.atoms()) w.push_back(a.weight);
  std::discrete_distribution<std::size_t> pick(w.begin(), w.end());
  std::uniform_real_distribution<double> unif(dgp.z.a, dgp.z.b);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::vector<Observation> obs;
  obs.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double z = dgp.z.kind == InstrumentLaw::Kind::kUniform ? unif(rng) : dgp.z.a + dgp.z.b * normal(rng);
    const double u = dgp.F.atoms()[pick(rng)].location;
    const double xs = z - u;
    const double dy = dgp.sigma_dy * normal(rng);
    const double dx = dgp.sigma_dx * normal(rng);
    obs.push_back({dgp.g(xs) + dy, xs + dx, z});
  }
  return Sample(std::move(obs));
}

struct OracleMoments {
  std::vector<double> w_y;
  std::vector<double> w_xy;
};

/// W_y(z) = sum c_j g(z - d_j) and W_xy(z) = E(XY | Z = z) = sum c_j (z - d_j) g(z - d_j).
inline OracleMoments oracle_moments(const RegressionFunction& g, const DiscreteDistribution& F, const RealGrid& z) {
  OracleMoments m{std::vector<double>(z.size()), std::vector<double>(z.size())};
  for (std::size_t i = 0; i < z.size(); ++i)
    for (const auto& a : F.atoms()) {
      const double v = z[i] - a.location;
      const double gv = g(v);
      m.w_y[i] += a.weight * gv;
      m.w_xy[i] += a.weight * v * gv;
    }
  return m;
}

/// One carrier term alpha (v - eps) I(|v - t| < tau), indexed by the pair (step k, atom j).
struct CarrierTerm {
  double alpha;
  double t;
  double eps;
  double tau;
};

struct Carriers {
  StepFunction w_y;
  PiecewiseLinearFunction w_xy;
  std::vector<CarrierTerm> terms;
};

/// Exact step / piecewise-linear carriers of the moments for step g and discrete F.
inline Carriers oracle_carriers(const StepFunction& g, const DiscreteDistribution& F) {
  Carriers c;
  std::vector<std::array<double, 3>> steps;
  std::vector<PiecewiseLinearFunction::Segment> segs;
  const auto& b = g.breakpoints();
  const auto& a = g.values();
  for (std::size_t k = 0; k < a.size(); ++k) {
    for (const auto& atom : F.atoms()) {
      CarrierTerm t{a[k] * atom.weight, atom.location + 0.5 * (b[k] + b[k + 1]), atom.location,
                    0.5 * (b[k + 1] - b[k])};
      c.terms.push_back(t);
      steps.push_back({t.alpha, t.t, t.tau});
      segs.push_back(PiecewiseLinearFunction::canonical(t.alpha, t.t, t.eps, t.tau));
    }
  }
  c.w_y = StepFunction::from_terms(steps);
  c.w_xy = PiecewiseLinearFunction(std::move(segs));
  return c;
}

}  // namespace eiv

#endif  // EIV_SIMULATE_HPP
