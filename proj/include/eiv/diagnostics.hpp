#ifndef EIV_DIAGNOSTICS_HPP
#define EIV_DIAGNOSTICS_HPP

// Well-posedness classification of the division by phi, and the b_n ill-posedness example.

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "eiv/errors.hpp"
#include "eiv/numerics.hpp"
#include "eiv/spectral.hpp"

namespace eiv {

enum class Verdict { kWellPosed, kDPrimeOnly, kIndeterminate };

inline const char* to_string(Verdict v) {
  switch (v) {
    case Verdict::kWellPosed:
      return "well-posed-by-(iii)";
    case Verdict::kDPrimeOnly:
      return "d-prime-only";
    default:
      return "indeterminate";
  }
}

struct CaseReport {
  bool case1_bounded_support = false;
  bool case2_inverse_poly_bounded = false;
  int case2_l = -1;
  double case2_C = 0.0;
  /// Only |phi| and |phi'| are checked; a finite-band proxy for the multiplier class.
  bool case3_OM_proxy = false;
  Verdict verdict = Verdict::kIndeterminate;
};

namespace detail {

struct EnvelopeFit {
  bool ok = false;
  int l = -1;
  double C = 0.0;
};

/// Smallest l in 0..8 whose least-squares fit log v ~ log C + l log(1 + zeta^2) has sup residual <= log 2.
inline EnvelopeFit fit_inverse_envelope(const std::vector<double>& zeta, const std::vector<double>& log_v) {
  for (int l = 0; l <= 8; ++l) {
    double mean = 0.0;
    for (std::size_t i = 0; i < zeta.size(); ++i) mean += log_v[i] - l * std::log1p(zeta[i] * zeta[i]);
    mean /= static_cast<double>(zeta.size());
    double worst = 0.0;
    double top = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < zeta.size(); ++i) {
      const double r = log_v[i] - l * std::log1p(zeta[i] * zeta[i]) - mean;
      worst = std::max(worst, std::abs(r));
      top = std::max(top, r);
    }
    if (worst <= std::log(2.0)) return {true, l, std::exp(mean + top)};
  }
  return {};
}

/// Some l in 0..8 keeps v(zeta) / (1 + zeta^2)^l within twice its maximum over |zeta| <= 1.
inline bool polynomial_upper_envelope(const std::vector<double>& zeta, const std::vector<double>& v) {
  double core = 0.0;
  for (std::size_t i = 0; i < zeta.size(); ++i)
    if (std::abs(zeta[i]) <= 1.0) core = std::max(core, v[i]);
  if (core == 0.0) core = std::numeric_limits<double>::min();
  for (int l = 0; l <= 8; ++l) {
    bool ok = true;
    for (std::size_t i = 0; i < zeta.size() && ok; ++i)
      ok = v[i] <= 2.0 * core * std::pow(1.0 + zeta[i] * zeta[i], l);
    if (ok) return true;
  }
  return false;
}

}  // namespace detail

/// Classifies phi on the band [band.lo, band.hi]; zeta_bar empty means unbounded support.
inline CaseReport classify(const GridSpectrum& phi, std::optional<double> zeta_bar, const RealGrid& band) {
  const auto dphi = derivative(phi);
  std::vector<double> z, log_inv, absphi, absdphi;
  for (std::size_t i = 0; i < phi.size(); ++i) {
    const double x = phi.grid[i];
    if (x < band.lo() - 1e-12 || x > band.hi() + 1e-12) continue;
    const double a = std::abs(phi.values[i]);
    if (a < 1e-300 || !std::isfinite(a)) {
      std::ostringstream os;
      os << "classify: phi vanishes at zeta = " << x;
      throw AssumptionViolation(os.str());
    }
    z.push_back(x);
    log_inv.push_back(-std::log(a));
    absphi.push_back(a);
    absdphi.push_back(std::abs(dphi.values[i]));
  }
  if (z.size() < 3) throw InvalidArgument("classify: band holds fewer than 3 grid points");
  // A zero between nodes: the chord passes far closer to 0 than either endpoint.
  std::optional<std::size_t> prev;
  for (std::size_t i = 0; i < phi.size(); ++i) {
    const double x = phi.grid[i];
    if (x < band.lo() - 1e-12 || x > band.hi() + 1e-12) continue;
    if (prev) {
      const cplx a = phi.values[*prev], d = phi.values[i] - a;
      const double t = std::norm(d) > 0.0 ? std::clamp(-std::real(std::conj(a) * d) / std::norm(d), 0.0, 1.0) : 0.0;
      if (std::abs(a + t * d) <= 1e-2 * std::min(std::abs(a), std::abs(phi.values[i]))) {
        std::ostringstream os;
        os << "classify: phi vanishes between zeta = " << phi.grid[*prev] << " and " << x;
        throw AssumptionViolation(os.str());
      }
    }
    prev = i;
  }
  CaseReport r;
  r.case1_bounded_support = zeta_bar.has_value() && std::isfinite(*zeta_bar);
  const auto fit = detail::fit_inverse_envelope(z, log_inv);
  r.case2_inverse_poly_bounded = fit.ok;
  r.case2_l = fit.l;
  r.case2_C = fit.C;
  r.case3_OM_proxy = detail::polynomial_upper_envelope(z, absphi) && detail::polynomial_upper_envelope(z, absdphi);
  if (r.case1_bounded_support || (r.case2_inverse_poly_bounded && r.case3_OM_proxy))
    r.verdict = Verdict::kWellPosed;
  else if (!r.case2_inverse_poly_bounded)
    r.verdict = Verdict::kDPrimeOnly;
  else
    r.verdict = Verdict::kIndeterminate;
  return r;
}

/// b_n: e^{-n} on |x - n| < 1/n, cosine taper to 0 on 1/n <= |x - n| <= 2/n.
inline double b_n(int n, double x) {
  const double dn = static_cast<double>(n);
  const double d = std::abs(x - dn);
  if (d < 1.0 / dn) return std::exp(-dn);
  if (d < 2.0 / dn) return std::exp(-dn) * 0.5 * (1.0 + std::cos(kPi * dn * (d - 1.0 / dn)));
  return 0.0;
}

/// (2/n) e^{-2n + (n - 1/n)^2}
inline double illposed_lower_bound(int n) {
  const double dn = static_cast<double>(n);
  return 2.0 / dn * std::exp(-2.0 * dn + (dn - 1.0 / dn) * (dn - 1.0 / dn));
}

struct IllposedRow {
  int n;
  double I_n;
  double lower_bound;
  double sup_amplified;
  double pairing;
};

/// For each n: I_n = int b_n e^{x^2} psi, psi = e^{-|x|}; the bound above; the sup over `target`
/// of |Ft^{-1}(b_n e^{zeta^2} restricted to the band)|; and the weak pairing int b_n psi.
inline std::vector<IllposedRow> illposed_demo(const std::vector<int>& n_values, const RealGrid& band,
                                              const RealGrid& target = RealGrid(-5.0, 5.0, 201)) {
  std::vector<IllposedRow> rows;
  for (int n : n_values) {
    if (n < 2) throw InvalidArgument("illposed_demo: n must be >= 2");
    const double dn = static_cast<double>(n);
    const double a = dn - 2.0 / dn;
    const double b = dn + 2.0 / dn;
    // Quadrature step 1/(400 n), well below the 1/(20 n) requirement.
    const auto m = static_cast<std::size_t>(std::ceil((b - a) * 400.0 * dn));
    const double I = trapezoid_fn([&](double x) { return b_n(n, x) * std::exp(x * x - std::abs(x)); }, a, b, m);
    const double P = trapezoid_fn([&](double x) { return b_n(n, x) * std::exp(-std::abs(x)); }, a, b, m);
    std::vector<cplx> amp(band.size());
    for (std::size_t i = 0; i < band.size(); ++i) {
      const double v = b_n(n, band[i]);
      amp[i] = v == 0.0 ? 0.0 : v * std::exp(band[i] * band[i]);
    }
    double sup = 0.0;
    for (std::size_t j = 0; j < target.size(); ++j)
      sup = std::max(sup, std::abs(detail::oscillatory_sum(band, amp, target[j], -1.0)) / (2.0 * kPi));
    rows.push_back({n, I, illposed_lower_bound(n), sup, P});
  }
  return rows;
}

}  // namespace eiv

#endif  // EIV_DIAGNOSTICS_HPP
