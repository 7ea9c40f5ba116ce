#ifndef EIV_SPECTRAL_HPP
#define EIV_SPECTRAL_HPP

// Fourier transforms with forward kernel e^{+i x zeta} and inverse (1/2pi) e^{-i x zeta}.

#include <cmath>
#include <vector>

#include "eiv/numerics.hpp"

namespace eiv {

/// Normalized sinc: sin(pi x) / (pi x).
inline double sinc(double x) {
  const double u = kPi * x;
  if (std::abs(u) < 1e-4) return 1.0 - u * u / 6.0;
  return std::sin(u) / u;
}

namespace detail {

/// S(u) = sin(u)/u and S'(u).
inline double sin_over(double u) {
  if (std::abs(u) < 1e-2) {
    const double u2 = u * u;
    return 1.0 - u2 / 6.0 * (1.0 - u2 / 20.0 * (1.0 - u2 / 42.0));
  }
  return std::sin(u) / u;
}

inline double sin_over_prime(double u) {
  if (std::abs(u) < 1e-2) {
    const double u2 = u * u;
    return -u / 3.0 + u * u2 / 30.0 - u * u2 * u2 / 840.0;
  }
  return (u * std::cos(u) - std::sin(u)) / (u * u);
}

/// Transform of I(|v - t| < tau): 2 tau e^{i t zeta} S(tau zeta).
inline cplx box_ft(double t, double tau, double zeta) {
  return 2.0 * tau * std::polar(1.0, t * zeta) * sin_over(tau * zeta);
}

inline cplx box_ft_prime(double t, double tau, double zeta) {
  const cplx e = std::polar(1.0, t * zeta);
  return 2.0 * tau * (kI * t * e * sin_over(tau * zeta) + e * tau * sin_over_prime(tau * zeta));
}

}  // namespace detail

/// Closed-form transform of a step function at one frequency.
inline cplx ft_step_at(const StepFunction& f, double zeta) {
  cplx s = 0.0;
  const auto& b = f.breakpoints();
  const auto& a = f.values();
  for (std::size_t k = 0; k < a.size(); ++k) {
    if (a[k] == 0.0) continue;
    s += a[k] * detail::box_ft(0.5 * (b[k] + b[k + 1]), 0.5 * (b[k + 1] - b[k]), zeta);
  }
  return s;
}

inline cplx ft_step_derivative_at(const StepFunction& f, double zeta) {
  cplx s = 0.0;
  const auto& b = f.breakpoints();
  const auto& a = f.values();
  for (std::size_t k = 0; k < a.size(); ++k) {
    if (a[k] == 0.0) continue;
    s += a[k] * detail::box_ft_prime(0.5 * (b[k] + b[k + 1]), 0.5 * (b[k + 1] - b[k]), zeta);
  }
  return s;
}

/// Transform of sum (slope v + intercept) I(|v - t| < tau): slope * (-i) d/dzeta[box] + intercept * box.
inline cplx ft_piecewise_linear_at(const PiecewiseLinearFunction& w, double zeta) {
  cplx s = 0.0;
  for (const auto& g : w.segments()) {
    if (g.slope != 0.0) s += g.slope * (-kI) * detail::box_ft_prime(g.center, g.half_width, zeta);
    if (g.intercept != 0.0) s += g.intercept * detail::box_ft(g.center, g.half_width, zeta);
  }
  return s;
}

inline GridSpectrum ft_step(const StepFunction& f, const RealGrid& grid) {
  return GridSpectrum::sample(grid, [&](double z) { return ft_step_at(f, z); }, true);
}

inline GridSpectrum ft_step_derivative(const StepFunction& f, const RealGrid& grid) {
  return GridSpectrum::sample(grid, [&](double z) { return ft_step_derivative_at(f, z); }, false);
}

inline GridSpectrum ft_piecewise_linear(const PiecewiseLinearFunction& w, const RealGrid& grid) {
  return GridSpectrum::sample(grid, [&](double z) { return ft_piecewise_linear_at(w, z); }, true);
}

inline GridSpectrum charfun_discrete(const DiscreteDistribution& F, const RealGrid& grid) {
  auto s = GridSpectrum::sample(grid, [&](double z) { return F.charfun(z); }, true);
  if (grid.is_symmetric()) s.values[grid.zero_index()] = 1.0;
  return s;
}

struct InverseResult {
  std::vector<double> values;
  double imag_residual = 0.0;
};

namespace detail {

/// Trapezoid sum_i w_i v_i e^{sign i x zeta_i} h, using a phasor recurrence resynchronized every 64 steps.
template <class V>
cplx oscillatory_sum(const RealGrid& g, const V& v, double x, double sign) {
  const std::size_t n = g.size();
  const double h = g.step();
  const cplx step = std::polar(1.0, sign * x * h);
  cplx ph;
  cplx s = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    if (i % 64 == 0)
      ph = std::polar(1.0, sign * x * g[i]);
    else
      ph *= step;
    const double w = (i == 0 || i == n - 1) ? 0.5 : 1.0;
    s += w * cplx(v[i]) * ph;
  }
  return s * h;
}

}  // namespace detail

/// g(x) = (1/2pi) int s(zeta) e^{-i x zeta} dzeta by trapezoid; real part plus max |imaginary part|.
inline InverseResult inverse_ft_grid(const GridSpectrum& s, const RealGrid& target) {
  InverseResult r;
  r.values.resize(target.size());
  for (std::size_t j = 0; j < target.size(); ++j) {
    const cplx v = detail::oscillatory_sum(s.grid, s.values, target[j], -1.0) / (2.0 * kPi);
    r.values[j] = v.real();
    r.imag_residual = std::max(r.imag_residual, std::abs(v.imag()));
  }
  return r;
}

/// int f(x) e^{i x zeta} dx by trapezoid over the sample grid.
template <class T>
GridSpectrum forward_ft_grid(const RealGrid& xgrid, const std::vector<T>& values, const RealGrid& freq) {
  if (values.size() != xgrid.size()) throw InvalidArgument("forward_ft_grid: size mismatch");
  std::vector<cplx> out(freq.size());
  for (std::size_t j = 0; j < freq.size(); ++j) out[j] = detail::oscillatory_sum(xgrid, values, freq[j], 1.0);
  return GridSpectrum(freq, std::move(out), false);
}

inline RealGrid default_frequency_grid() { return RealGrid::symmetric(40.0, 0.02); }

}  // namespace eiv

#endif  // EIV_SPECTRAL_HPP
