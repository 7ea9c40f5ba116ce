#ifndef EIV_OPTIM_HPP
#define EIV_OPTIM_HPP

// Small dense solvers: Richardson weights, Nelder-Mead, numeric Jacobians, damped Gauss-Newton.

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <functional>
#include <future>
#include <limits>
#include <numeric>
#include <vector>

#include "eiv/errors.hpp"

namespace eiv {

/// Weights w with sum w_j = 1 and sum w_j t_j^p = 0 for each p in powers, so that
/// sum w_j v(t_j) removes those terms of v(t) = v0 + sum a_p t^p.
inline std::vector<double> richardson_weights(const std::vector<double>& t, const std::vector<int>& powers) {
  const std::size_t n = t.size();
  if (n == 0) throw InvalidArgument("richardson_weights: empty schedule");
  const std::size_t k = std::min(powers.size(), n - 1);
  Eigen::MatrixXd A(k + 1, n);
  Eigen::VectorXd b = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(k + 1));
  b(0) = 1.0;
  for (std::size_t j = 0; j < n; ++j) {
    A(0, static_cast<Eigen::Index>(j)) = 1.0;
    for (std::size_t p = 0; p < k; ++p)
      A(static_cast<Eigen::Index>(p + 1), static_cast<Eigen::Index>(j)) = std::pow(t[j], powers[p]);
  }
  const Eigen::VectorXd w = A.completeOrthogonalDecomposition().solve(b);
  return {w.data(), w.data() + w.size()};
}

using Objective = std::function<double(const Eigen::VectorXd&)>;
using Residual = std::function<Eigen::VectorXd(const Eigen::VectorXd&)>;

struct NelderMeadResult {
  Eigen::VectorXd x;
  double f = std::numeric_limits<double>::infinity();
  int evaluations = 0;
  bool converged = false;
};

/// Standard Nelder-Mead (reflection 1, expansion 2, contraction 1/2, shrink 1/2).
/// `scale` sets the initial simplex edge per coordinate. Non-finite values count as +inf.
inline NelderMeadResult nelder_mead(const Objective& f, const Eigen::VectorXd& x0, const Eigen::VectorXd& scale,
                                    int max_evals = 2000, double ftol = 1e-14, double xtol = 1e-10,
                                    const std::function<void(int, double)>& on_iter = {}) {
  const auto n = x0.size();
  NelderMeadResult res;
  auto eval = [&](const Eigen::VectorXd& x) {
    ++res.evaluations;
    const double v = f(x);
    return std::isfinite(v) ? v : std::numeric_limits<double>::infinity();
  };
  std::vector<Eigen::VectorXd> s(static_cast<std::size_t>(n + 1), x0);
  std::vector<double> fv(static_cast<std::size_t>(n + 1));
  for (Eigen::Index i = 0; i < n; ++i) s[static_cast<std::size_t>(i + 1)](i) += scale(i);
  for (std::size_t i = 0; i < s.size(); ++i) fv[i] = eval(s[i]);
  std::vector<std::size_t> idx(s.size());
  int iter = 0;
  while (res.evaluations < max_evals) {
    std::iota(idx.begin(), idx.end(), 0);
    std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return fv[a] < fv[b]; });
    const std::size_t best = idx.front(), worst = idx.back(), second = idx[idx.size() - 2];
    if (on_iter) on_iter(iter, fv[best]);
    ++iter;
    double spread = 0.0;
    for (const auto& p : s) spread = std::max(spread, (p - s[best]).lpNorm<Eigen::Infinity>());
    if (std::abs(fv[worst] - fv[best]) <= ftol * (1.0 + std::abs(fv[best])) && spread <= xtol) {
      res.converged = true;
      break;
    }
    Eigen::VectorXd c = Eigen::VectorXd::Zero(n);
    for (std::size_t i = 0; i < s.size(); ++i)
      if (i != worst) c += s[i];
    c /= static_cast<double>(n);
    const Eigen::VectorXd xr = c + (c - s[worst]);
    const double fr = eval(xr);
    if (fr < fv[best]) {
      const Eigen::VectorXd xe = c + 2.0 * (c - s[worst]);
      const double fe = eval(xe);
      if (fe < fr) {
        s[worst] = xe;
        fv[worst] = fe;
      } else {
        s[worst] = xr;
        fv[worst] = fr;
      }
    } else if (fr < fv[second]) {
      s[worst] = xr;
      fv[worst] = fr;
    } else {
      const bool outside = fr < fv[worst];
      const Eigen::VectorXd xc = outside ? Eigen::VectorXd(c + 0.5 * (xr - c)) : Eigen::VectorXd(c + 0.5 * (s[worst] - c));
      const double fc = eval(xc);
      if (fc < (outside ? fr : fv[worst])) {
        s[worst] = xc;
        fv[worst] = fc;
      } else {
        for (std::size_t i = 0; i < s.size(); ++i) {
          if (i == best) continue;
          s[i] = s[best] + 0.5 * (s[i] - s[best]);
          fv[i] = eval(s[i]);
        }
      }
    }
  }
  const auto b = static_cast<std::size_t>(std::min_element(fv.begin(), fv.end()) - fv.begin());
  res.x = s[b];
  res.f = fv[b];
  return res;
}

/// Central-difference Jacobian with step rel_step * max(|x_j|, 1); columns run on up to `jobs` threads.
inline Eigen::MatrixXd numeric_jacobian(const Residual& r, const Eigen::VectorXd& x, double rel_step = 1e-5,
                                        int jobs = 1) {
  const auto n = x.size();
  auto column = [&](Eigen::Index j) {
    const double h = rel_step * std::max(std::abs(x(j)), 1.0);
    Eigen::VectorXd xp = x, xm = x;
    xp(j) += h;
    xm(j) -= h;
    return Eigen::VectorXd((r(xp) - r(xm)) / (2.0 * h));
  };
  std::vector<Eigen::VectorXd> cols(static_cast<std::size_t>(n));
  if (jobs > 1) {
    std::vector<std::future<Eigen::VectorXd>> fut;
    for (Eigen::Index j = 0; j < n; ++j) fut.push_back(std::async(std::launch::async, column, j));
    for (Eigen::Index j = 0; j < n; ++j) cols[static_cast<std::size_t>(j)] = fut[static_cast<std::size_t>(j)].get();
  } else {
    for (Eigen::Index j = 0; j < n; ++j) cols[static_cast<std::size_t>(j)] = column(j);
  }
  Eigen::MatrixXd J(cols.empty() ? 0 : cols[0].size(), n);
  for (Eigen::Index j = 0; j < n; ++j) J.col(j) = cols[static_cast<std::size_t>(j)];
  return J;
}

struct GaussNewtonResult {
  Eigen::VectorXd x;
  double f = std::numeric_limits<double>::infinity();
  int iterations = 0;
  bool converged = false;
};

/// Levenberg-damped Gauss-Newton on 0.5 |r(x)|^2 with numeric Jacobian.
inline GaussNewtonResult gauss_newton(const Residual& r, Eigen::VectorXd x, int max_iter = 30, double tol = 1e-14,
                                      int jobs = 1, const std::function<void(int, double)>& on_iter = {}) {
  GaussNewtonResult res;
  auto sq = [&](const Eigen::VectorXd& v) {
    try {
      const Eigen::VectorXd e = r(v);
      return e.allFinite() ? e.squaredNorm() : std::numeric_limits<double>::infinity();
    } catch (const Error&) {
      return std::numeric_limits<double>::infinity();
    }
  };
  double f = sq(x);
  double lambda = 1e-6;
  for (int it = 0; it < max_iter; ++it) {
    res.iterations = it + 1;
    if (on_iter) on_iter(it, f);
    if (f <= tol) {
      res.converged = true;
      break;
    }
    const Eigen::MatrixXd J = numeric_jacobian(r, x, 1e-6, jobs);
    const Eigen::VectorXd e = r(x);
    const Eigen::MatrixXd JtJ = J.transpose() * J;
    const Eigen::VectorXd g = J.transpose() * e;
    bool stepped = false;
    for (int k = 0; k < 12; ++k) {
      Eigen::MatrixXd A = JtJ;
      A.diagonal() += lambda * (JtJ.diagonal().array() + 1e-12).matrix();
      const Eigen::VectorXd dx = A.ldlt().solve(-g);
      const Eigen::VectorXd xn = x + dx;
      const double fn = sq(xn);
      if (fn < f) {
        const bool small = dx.lpNorm<Eigen::Infinity>() <= 1e-13 * (1.0 + x.lpNorm<Eigen::Infinity>());
        x = xn;
        f = fn;
        lambda = std::max(lambda * 0.1, 1e-12);
        stepped = true;
        if (small) res.converged = true;
        break;
      }
      lambda *= 10.0;
    }
    if (!stepped || res.converged) {
      res.converged = true;
      break;
    }
  }
  res.x = x;
  res.f = f;
  return res;
}

}  // namespace eiv

#endif  // EIV_OPTIM_HPP
