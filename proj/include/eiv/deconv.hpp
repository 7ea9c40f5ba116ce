#ifndef EIV_DECONV_HPP
#define EIV_DECONV_HPP

// kappa = (eps_y' - i eps_xy) / eps_y, phi = exp(int_0 kappa), gamma = eps_y / phi on the band, g = Ft^{-1} gamma.

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <string>
#include <vector>

#include "eiv/errors.hpp"
#include "eiv/estimate.hpp"
#include "eiv/numerics.hpp"
#include "eiv/spectral.hpp"

namespace eiv {

struct RegularizationConfig {
  double zeta_bar = 8.0;
  double trim_threshold = 1e-4;
  RealGrid grid = RealGrid::symmetric(8.0, 0.01);
  bool interpolate_trimmed = true;
  /// Pick zeta_bar from a pilot pass instead of using the value above.
  bool auto_zeta_bar = false;

  void validate() const {
    if (!(zeta_bar > 0.0)) throw InvalidArgument("RegularizationConfig: zeta_bar must be > 0");
    if (zeta_bar > grid.hi() + 1e-12) throw InvalidArgument("RegularizationConfig: zeta_bar exceeds the grid");
    if (!(trim_threshold > 0.0)) throw InvalidArgument("RegularizationConfig: trim_threshold must be > 0");
    if (!grid.is_symmetric()) throw InvalidArgument("RegularizationConfig: grid must be symmetric with a zero node");
  }
};

struct KappaResult {
  GridSpectrum kappa;
  double trimmed_fraction = 0.0;
  double min_abs_eps_y = 0.0;
};

namespace detail {

inline bool in_band(double z, double zeta_bar) { return std::abs(z) <= zeta_bar + 1e-12; }

/// Fills runs of untrusted points by linear interpolation between trusted neighbours;
/// runs touching an end of the band copy the nearest trusted value.
inline void fill_gaps(std::vector<cplx>& v, const std::vector<bool>& ok, std::size_t lo, std::size_t hi) {
  std::size_t i = lo;
  while (i <= hi) {
    if (ok[i]) {
      ++i;
      continue;
    }
    std::size_t j = i;
    while (j <= hi && !ok[j]) ++j;
    const bool has_left = i > lo;
    const bool has_right = j <= hi;
    for (std::size_t k = i; k < j; ++k) {
      if (has_left && has_right) {
        const double t = static_cast<double>(k - (i - 1)) / static_cast<double>(j - (i - 1));
        v[k] = (1.0 - t) * v[i - 1] + t * v[j];
      } else if (has_left) {
        v[k] = v[i - 1];
      } else if (has_right) {
        v[k] = v[j];
      }
    }
    i = j;
  }
}

}  // namespace detail

inline KappaResult kappa_from_spectra(const MomentSpectra& s, const RegularizationConfig& cfg,
                                      bool enforce_trim_limit = true) {
  cfg.validate();
  const auto& g = s.eps_y.grid;
  if (s.eps_xy.size() != g.size() || s.eps_y_dot.size() != g.size())
    throw InvalidArgument("kappa_from_spectra: spectra must share the grid");
  const std::size_t n = g.size();
  std::vector<cplx> k(n, 0.0);
  std::vector<bool> ok(n, false);
  std::size_t lo = n, hi = 0, band = 0, trimmed = 0;
  double min_abs = std::numeric_limits<double>::infinity();
  double max_abs = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    if (!detail::in_band(g[i], cfg.zeta_bar)) continue;
    lo = std::min(lo, i);
    hi = std::max(hi, i);
    ++band;
    const double a = std::abs(s.eps_y.values[i]);
    min_abs = std::min(min_abs, a);
    max_abs = std::max(max_abs, a);
    if (a >= cfg.trim_threshold) {
      k[i] = (s.eps_y_dot.values[i] - kI * s.eps_xy.values[i]) / s.eps_y.values[i];
      ok[i] = true;
    } else {
      ++trimmed;
    }
  }
  if (band == 0 || max_abs == 0.0) throw NoSignal("kappa_from_spectra: eps_y vanishes on the band");
  KappaResult r{GridSpectrum::zeros(g), static_cast<double>(trimmed) / static_cast<double>(band), min_abs};
  if (trimmed == band) throw NoSignal("kappa_from_spectra: |eps_y| below the trim threshold on the whole band");
  if (enforce_trim_limit && r.trimmed_fraction > 0.5) {
    std::ostringstream os;
    os << "kappa_from_spectra: " << 100.0 * r.trimmed_fraction << "% of the band is trimmed";
    throw UnidentifiableBand(os.str());
  }
  if (trimmed > 0 && !cfg.interpolate_trimmed)
    throw UnidentifiableBand("kappa_from_spectra: eps_y below threshold inside the band and interpolation disabled");
  detail::fill_gaps(k, ok, lo, hi);
  r.kappa = GridSpectrum(g, std::move(k), false);
  return r;
}

/// phi(zeta) = exp(int_0^zeta kappa) by cumulative trapezoid from the zero node.
inline GridSpectrum phi_from_kappa(const GridSpectrum& kappa) {
  const auto c = cumulative_from_zero(kappa);
  std::vector<cplx> phi(c.size());
  for (std::size_t i = 0; i < c.size(); ++i) {
    if (std::abs(c[i].real()) > 700.0) {
      std::ostringstream os;
      os << "phi_from_kappa: |int kappa| exceeds 700 at zeta = " << kappa.grid[i];
      throw DivergentIntegrand(os.str());
    }
    phi[i] = std::exp(c[i]);
  }
  phi[kappa.grid.zero_index()] = 1.0;
  return GridSpectrum(kappa.grid, std::move(phi), false);
}

/// gamma = eps_y / phi on |zeta| <= zeta_bar, zero beyond.
inline GridSpectrum deconvolve(const GridSpectrum& eps_y, const GridSpectrum& phi, const RegularizationConfig& cfg) {
  if (eps_y.size() != phi.size()) throw InvalidArgument("deconvolve: grid mismatch");
  std::vector<cplx> gam(eps_y.size(), 0.0);
  for (std::size_t i = 0; i < eps_y.size(); ++i) {
    const double z = eps_y.grid[i];
    if (!detail::in_band(z, cfg.zeta_bar)) continue;
    if (std::abs(phi.values[i]) < 1e-12) {
      std::ostringstream os;
      os << "deconvolve: |phi| < 1e-12 at zeta = " << z << " (characteristic function vanishes on the band)";
      throw AssumptionViolation(os.str());
    }
    gam[i] = eps_y.values[i] / phi.values[i];
  }
  return GridSpectrum(eps_y.grid, std::move(gam), false);
}

struct DeconvDiagnostics {
  double min_abs_eps_y = 0.0;
  double imag_residual = 0.0;
  double trimmed_fraction = 0.0;
  double zeta_bar_used = 0.0;
  std::vector<std::string> warnings;
};

struct DeconvResult {
  GridSpectrum kappa;
  GridSpectrum phi;
  GridSpectrum gamma;
  RealGrid target;
  std::vector<double> g_values;
  DeconvDiagnostics diagnostics;
};

/// Largest zeta_bar such that a pilot phi estimate stays above 10 * trim_threshold on [-zeta_bar, zeta_bar].
inline double select_zeta_bar(const MomentSpectra& s, const RegularizationConfig& cfg) {
  RegularizationConfig pilot = cfg;
  pilot.zeta_bar = cfg.grid.hi();
  pilot.interpolate_trimmed = true;
  const auto k = kappa_from_spectra(s, pilot, false);
  const auto phi = phi_from_kappa(k.kappa);
  const auto& g = phi.grid;
  const std::size_t z0 = g.zero_index();
  std::size_t m = 0;
  while (z0 + m + 1 < g.size() && std::abs(phi.values[z0 + m + 1]) > 10.0 * cfg.trim_threshold &&
         std::abs(phi.values[z0 - m - 1]) > 10.0 * cfg.trim_threshold)
    ++m;
  // Keep the trimmed share of the band at or below one half.
  double zb = std::max(g[z0 + std::max<std::size_t>(m, 1)], g.step());
  for (;;) {
    std::size_t band = 0, trimmed = 0;
    for (std::size_t i = 0; i < g.size(); ++i)
      if (std::abs(g[i]) <= zb + 1e-12) {
        ++band;
        if (std::abs(s.eps_y.values[i]) < cfg.trim_threshold) ++trimmed;
      }
    if (2 * trimmed <= band || zb <= g.step()) break;
    zb -= g.step();
  }
  return zb;
}

inline DeconvResult run_pipeline(const MomentSpectra& s, RegularizationConfig cfg, const RealGrid& target) {
  if (cfg.auto_zeta_bar) cfg.zeta_bar = select_zeta_bar(s, cfg);
  cfg.validate();
  auto k = kappa_from_spectra(s, cfg);
  auto phi = phi_from_kappa(k.kappa);
  auto gam = deconvolve(s.eps_y, phi, cfg);
  auto inv = inverse_ft_grid(gam, target);
  DeconvDiagnostics d;
  d.min_abs_eps_y = k.min_abs_eps_y;
  d.imag_residual = inv.imag_residual;
  d.trimmed_fraction = k.trimmed_fraction;
  d.zeta_bar_used = cfg.zeta_bar;
  double gmax = 0.0;
  for (double v : inv.values) gmax = std::max(gmax, std::abs(v));
  if (inv.imag_residual > 1e-2 * gmax) {
    std::ostringstream os;
    os << "imaginary residual " << inv.imag_residual << " exceeds 1% of max |g|";
    d.warnings.push_back(os.str());
  }
  return {std::move(k.kappa), std::move(phi), std::move(gam), target, std::move(inv.values), std::move(d)};
}

inline DeconvResult run_pipeline(const StepFunction& w_y, const WxyCarrier& w_xy, const RegularizationConfig& cfg,
                                 const RealGrid& target) {
  return run_pipeline(moments_to_spectra(w_y, w_xy, cfg.grid), cfg, target);
}

/// Band-limited reconstruction (1/2pi) int_{|zeta| <= zeta_bar} Ft(f) e^{-i x zeta} on the pipeline grid.
inline std::vector<double> band_limited_reconstruction(const StepFunction& f, const RegularizationConfig& cfg,
                                                       const RealGrid& target) {
  auto s = GridSpectrum::sample(cfg.grid, [&](double z) {
    return detail::in_band(z, cfg.zeta_bar) ? ft_step_at(f, z) : cplx(0.0);
  });
  return inverse_ft_grid(s, target).values;
}

/// Trapezoid L1 distance on a uniform grid.
inline double l1_distance(const RealGrid& x, const std::vector<double>& a, const std::vector<double>& b) {
  std::vector<double> d(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) d[i] = std::abs(a[i] - b[i]);
  return trapezoid(std::span<const double>(d), x.step());
}

}  // namespace eiv

#endif  // EIV_DECONV_HPP
