#ifndef EIV_JET_HPP
#define EIV_JET_HPP

#include <array>
#include <cmath>
#include <complex>
#include <cstddef>

namespace eiv {

/// Truncated Taylor series f(x0 + t) = sum_k c[k] t^k, k = 0..N.
///
/// Arithmetic on jets propagates all derivatives up to order N exactly (up to
/// rounding), which is how test-function derivatives are evaluated.
template <class T, std::size_t N>
struct Jet {
  std::array<T, N + 1> c{};

  static Jet constant(T v) {
    Jet j;
    j.c[0] = v;
    return j;
  }

  /// The identity map around x0: x0 + t.
  static Jet variable(T x0) {
    Jet j;
    j.c[0] = x0;
    if constexpr (N >= 1) j.c[1] = T(1);
    return j;
  }

  T value() const { return c[0]; }

  /// k-th derivative at the expansion point.
  T derivative(std::size_t k) const {
    T f = c[k];
    for (std::size_t i = 2; i <= k; ++i) f *= T(static_cast<double>(i));
    return f;
  }

  Jet& operator+=(const Jet& o) {
    for (std::size_t k = 0; k <= N; ++k) c[k] += o.c[k];
    return *this;
  }
  Jet& operator-=(const Jet& o) {
    for (std::size_t k = 0; k <= N; ++k) c[k] -= o.c[k];
    return *this;
  }
  Jet& operator*=(T s) {
    for (auto& v : c) v *= s;
    return *this;
  }

  friend Jet operator+(Jet a, const Jet& b) { return a += b; }
  friend Jet operator-(Jet a, const Jet& b) { return a -= b; }
  friend Jet operator*(Jet a, T s) { return a *= s; }
  friend Jet operator*(T s, Jet a) { return a *= s; }
  friend Jet operator-(Jet a) { return a *= T(-1); }

  friend Jet operator*(const Jet& a, const Jet& b) {
    Jet r;
    for (std::size_t i = 0; i <= N; ++i)
      for (std::size_t j = 0; i + j <= N; ++j) r.c[i + j] += a.c[i] * b.c[j];
    return r;
  }

  friend Jet operator/(const Jet& a, const Jet& b) {
    Jet r;
    for (std::size_t k = 0; k <= N; ++k) {
      T s = a.c[k];
      for (std::size_t j = 1; j <= k; ++j) s -= b.c[j] * r.c[k - j];
      r.c[k] = s / b.c[0];
    }
    return r;
  }
};

template <class T, std::size_t N>
Jet<T, N> exp(const Jet<T, N>& a) {
  Jet<T, N> r;
  r.c[0] = std::exp(a.c[0]);
  for (std::size_t k = 1; k <= N; ++k) {
    T s{};
    for (std::size_t j = 1; j <= k; ++j) s += T(static_cast<double>(j)) * a.c[j] * r.c[k - j];
    r.c[k] = s / T(static_cast<double>(k));
  }
  return r;
}

/// Rescales the expansion variable: g(t) = f(x0 + s t).
template <class T, std::size_t N>
Jet<T, N> rescale(Jet<T, N> a, T s) {
  T p(1);
  for (std::size_t k = 0; k <= N; ++k) {
    a.c[k] *= p;
    p *= s;
  }
  return a;
}

/// Jet of x^p around x0.
template <class T, std::size_t N>
Jet<T, N> monomial(T x0, unsigned p) {
  Jet<T, N> r = Jet<T, N>::constant(T(1));
  const auto x = Jet<T, N>::variable(x0);
  for (unsigned i = 0; i < p; ++i) r = r * x;
  return r;
}

}  // namespace eiv

#endif  // EIV_JET_HPP
