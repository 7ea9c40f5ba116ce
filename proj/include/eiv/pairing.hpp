#ifndef EIV_PAIRING_HPP
#define EIV_PAIRING_HPP

#include <algorithm>
#include <cmath>
#include <string>

#include "eiv/errors.hpp"
#include "eiv/numerics.hpp"
#include "eiv/weights.hpp"

namespace eiv {

struct QuadratureSpec {
  double max_step = 1e-3;
  std::size_t min_points = 400;
};

/// Sum over atoms of (-1)^k coef * psi^{(k)}(s).
inline cplx pair_atoms(const DeltaTrain& train, const TestFunction& psi) {
  cplx s = 0.0;
  for (const auto& a : train.atoms()) {
    if (a.order > psi.max_deriv_order())
      throw UnsupportedOrder("pair: atom of order " + std::to_string(a.order) +
                             " exceeds test-function derivative order " + std::to_string(psi.max_deriv_order()));
    const double d = psi.derivative(a.location, a.order);
    s += ((a.order % 2) ? -1.0 : 1.0) * a.coef * d;
  }
  return s;
}

/// Trapezoid of the regular part against psi over the grid, plus exact atom terms.
inline cplx pair(const GeneralizedSpectrum& spec, const TestFunction& psi) {
  const auto& g = spec.regular.grid;
  const double h = g.step();
  const std::size_t n = g.size();
  cplx s = 0.0;
  std::size_t lo = 0;
  std::size_t hi = n - 1;
  if (psi.compact()) {
    const auto hull = psi.hull();
    lo = static_cast<std::size_t>(std::clamp(std::floor((hull.lo - g.lo()) / h), 0.0, static_cast<double>(n - 1)));
    hi = static_cast<std::size_t>(std::clamp(std::ceil((hull.hi - g.lo()) / h), 0.0, static_cast<double>(n - 1)));
  }
  for (std::size_t i = lo; i <= hi; ++i) {
    const double w = (i == 0 || i == n - 1) ? 0.5 : 1.0;
    const double v = psi(g[i]);
    if (v != 0.0) s += w * spec.regular.values[i] * v;
  }
  return s * h + pair_atoms(spec.singular, psi);
}

/// Pairing with a regular part given as a callable, integrated over each support interval of psi.
template <class F>
cplx pair_fn(F&& regular, const DeltaTrain& atoms, const TestFunction& psi, QuadratureSpec q = {}) {
  if (!psi.compact()) throw InvalidArgument("pair_fn: test function must be compactly supported");
  cplx s = 0.0;
  for (const auto& iv : psi.support()) {
    const auto n = std::max(q.min_points, static_cast<std::size_t>(std::ceil(iv.width() / q.max_step)));
    s += trapezoid_fn([&](double z) -> cplx { return cplx(regular(z)) * psi(z); }, iv.lo, iv.hi, n);
  }
  return s + pair_atoms(atoms, psi);
}

}  // namespace eiv

#endif  // EIV_PAIRING_HPP
