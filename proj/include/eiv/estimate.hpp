#ifndef EIV_ESTIMATE_HPP
#define EIV_ESTIMATE_HPP

// Binned estimates of W_y, W_xy and the instrument density, and their spectra.

#include <algorithm>
#include <cmath>
#include <variant>
#include <vector>

#include "eiv/errors.hpp"
#include "eiv/numerics.hpp"
#include "eiv/sample.hpp"
#include "eiv/spectral.hpp"

namespace eiv {

/// Histogram density, never below `floor` on its support.
class DensityEstimate {
 public:
  DensityEstimate() = default;
  DensityEstimate(StepFunction hist, double floor) : hist_(std::move(hist)), floor_(floor) {
    if (!(floor >= 0.0)) throw InvalidArgument("DensityEstimate: floor must be >= 0");
  }

  double operator()(double z) const { return std::max(hist_(z), floor_); }
  const StepFunction& histogram() const { return hist_; }
  double floor() const { return floor_; }

 private:
  StepFunction hist_;
  double floor_ = 0.0;
};

struct BinStat {
  double lo;
  double hi;
  std::size_t count;
  double ybar;
  double xybar;

  double center() const { return 0.5 * (lo + hi); }
};

struct BinnedMoments {
  StepFunction w_y;
  StepFunction w_xy_step;
  DensityEstimate p;
  Interval kept_range;
  std::vector<BinStat> bins;
};

inline std::size_t default_bin_count(std::size_t n) {
  const auto b = static_cast<std::size_t>(std::ceil(std::cbrt(static_cast<double>(n))));
  return std::clamp<std::size_t>(b, 10, 200);
}

/// Equal-width bins on [min z, max z]; bins with fewer than min_per_bin records are merged
/// into their neighbours so the support stays an interval. W_xy bin values are means of x*y.
inline BinnedMoments bin_conditional_means(const Sample& s, std::size_t n_bins, std::size_t min_per_bin,
                                           double density_floor = -1.0) {
  if (n_bins < 2) throw InvalidArgument("bin_conditional_means: n_bins must be >= 2");
  if (s.empty()) throw InsufficientData("bin_conditional_means: empty sample");
  double lo = s[0].z;
  double hi = s[0].z;
  for (const auto& o : s) {
    lo = std::min(lo, o.z);
    hi = std::max(hi, o.z);
  }
  if (!(hi > lo)) throw InsufficientData("bin_conditional_means: instrument has no spread");
  const double w = (hi - lo) / static_cast<double>(n_bins);
  std::vector<std::size_t> cnt(n_bins, 0);
  std::vector<double> sy(n_bins, 0.0), sxy(n_bins, 0.0);
  for (const auto& o : s) {
    auto k = static_cast<std::size_t>((o.z - lo) / w);
    if (k >= n_bins) k = n_bins - 1;
    ++cnt[k];
    sy[k] += o.y;
    sxy[k] += o.x * o.y;
  }
  if (std::none_of(cnt.begin(), cnt.end(), [&](std::size_t c) { return c >= std::max<std::size_t>(min_per_bin, 1); }))
    throw InsufficientData("bin_conditional_means: every bin has fewer than min_per_bin observations");

  struct Group {
    std::size_t first, last, count;
    double sy, sxy;
  };
  std::vector<Group> groups;
  Group cur{0, 0, 0, 0.0, 0.0};
  bool open = false;
  for (std::size_t k = 0; k < n_bins; ++k) {
    if (!open) cur = {k, k, 0, 0.0, 0.0};
    open = true;
    cur.last = k;
    cur.count += cnt[k];
    cur.sy += sy[k];
    cur.sxy += sxy[k];
    if (cur.count >= std::max<std::size_t>(min_per_bin, 1)) {
      groups.push_back(cur);
      open = false;
    }
  }
  if (open) {
    auto& g = groups.back();
    g.last = cur.last;
    g.count += cur.count;
    g.sy += cur.sy;
    g.sxy += cur.sxy;
  }

  BinnedMoments out;
  std::vector<double> br{lo};
  std::vector<double> vy, vxy, vp;
  const double n = static_cast<double>(s.size());
  for (const auto& g : groups) {
    const double a = lo + static_cast<double>(g.first) * w;
    const double b = g.last + 1 == n_bins ? hi : lo + static_cast<double>(g.last + 1) * w;
    const double c = static_cast<double>(g.count);
    br.push_back(b);
    vy.push_back(g.sy / c);
    vxy.push_back(g.sxy / c);
    vp.push_back(c / (n * (b - a)));
    out.bins.push_back({a, b, g.count, g.sy / c, g.sxy / c});
  }
  out.w_y = StepFunction(br, vy);
  out.w_xy_step = StepFunction(br, vxy);
  const double floor = density_floor >= 0.0 ? density_floor : 1e-6 / (hi - lo);
  out.p = DensityEstimate(StepFunction(br, vp), floor);
  out.kept_range = {lo, hi};
  return out;
}

/// Lifts binned E(XY | Z) to a piecewise-linear carrier: slope ybar, value xybar at the bin centre.
inline PiecewiseLinearFunction lift_w_xy(const BinnedMoments& m) {
  std::vector<PiecewiseLinearFunction::Segment> segs;
  for (const auto& b : m.bins) {
    const double c = b.center();
    // Half-open bins [lo, hi) are represented by |v - c| < tau; the boundary points have measure zero.
    segs.push_back({c, 0.5 * (b.hi - b.lo), b.ybar, b.xybar - b.ybar * c});
  }
  return PiecewiseLinearFunction(std::move(segs));
}

struct MomentSpectra {
  GridSpectrum eps_y;
  GridSpectrum eps_xy;
  GridSpectrum eps_y_dot;
};

using WxyCarrier = std::variant<PiecewiseLinearFunction, StepFunction>;

inline MomentSpectra moments_to_spectra(const StepFunction& w_y, const WxyCarrier& w_xy, const RealGrid& grid) {
  auto exy = std::visit(
      [&](const auto& w) {
        if constexpr (std::is_same_v<std::decay_t<decltype(w)>, StepFunction>)
          return ft_step(w, grid);
        else
          return ft_piecewise_linear(w, grid);
      },
      w_xy);
  return {ft_step(w_y, grid), std::move(exy), ft_step_derivative(w_y, grid)};
}

inline MomentSpectra moments_to_spectra(const BinnedMoments& m, const RealGrid& grid) {
  return moments_to_spectra(m.w_y, lift_w_xy(m), grid);
}

}  // namespace eiv

#endif  // EIV_ESTIMATE_HPP
