#ifndef SCPM_DETAIL_DUAL_HPP
#define SCPM_DETAIL_DUAL_HPP

#include <array>
#include <cmath>

namespace scpm::detail {

// Forward-mode dual number carrying N partial derivatives.
template <int N>
struct Dual {
  double v = 0.0;
  std::array<double, N> g{};

  Dual() = default;
  Dual(double value) : v(value) {}  // NOLINT: implicit lift of constants

  static Dual variable(double value, int slot) {
    Dual d(value);
    d.g[slot] = 1.0;
    return d;
  }

  Dual& operator+=(const Dual& o) {
    v += o.v;
    for (int i = 0; i < N; ++i) g[i] += o.g[i];
    return *this;
  }
  Dual& operator-=(const Dual& o) {
    v -= o.v;
    for (int i = 0; i < N; ++i) g[i] -= o.g[i];
    return *this;
  }
  Dual& operator*=(const Dual& o) {
    for (int i = 0; i < N; ++i) g[i] = g[i] * o.v + v * o.g[i];
    v *= o.v;
    return *this;
  }
  Dual& operator/=(const Dual& o) {
    const double inv = 1.0 / o.v;
    for (int i = 0; i < N; ++i) g[i] = (g[i] * o.v - v * o.g[i]) * inv * inv;
    v *= inv;
    return *this;
  }
};

template <int N> Dual<N> operator+(Dual<N> a, const Dual<N>& b) { return a += b; }
template <int N> Dual<N> operator-(Dual<N> a, const Dual<N>& b) { return a -= b; }
template <int N> Dual<N> operator*(Dual<N> a, const Dual<N>& b) { return a *= b; }
template <int N> Dual<N> operator/(Dual<N> a, const Dual<N>& b) { return a /= b; }
template <int N> Dual<N> operator+(Dual<N> a, double b) { a.v += b; return a; }
template <int N> Dual<N> operator+(double a, Dual<N> b) { b.v += a; return b; }
template <int N> Dual<N> operator-(Dual<N> a, double b) { a.v -= b; return a; }
template <int N> Dual<N> operator-(double a, const Dual<N>& b) { return Dual<N>(a) - b; }
template <int N> Dual<N> operator*(Dual<N> a, double b) {
  a.v *= b;
  for (auto& x : a.g) x *= b;
  return a;
}
template <int N> Dual<N> operator*(double a, Dual<N> b) { return b * a; }
template <int N> Dual<N> operator/(Dual<N> a, double b) { return a * (1.0 / b); }
template <int N> Dual<N> operator/(double a, const Dual<N>& b) { return Dual<N>(a) / b; }
template <int N> Dual<N> operator-(Dual<N> a) { return a * -1.0; }

inline double value(double x) { return x; }
template <int N> double value(const Dual<N>& x) { return x.v; }

inline double sqrt_d(double x) { return std::sqrt(x); }
// Derivative of sqrt at 0 is taken as 0 (subgradient of the distance cone).
template <int N>
Dual<N> sqrt_d(const Dual<N>& x) {
  Dual<N> r(std::sqrt(x.v));
  if (r.v > 0.0) {
    const double s = 0.5 / r.v;
    for (int i = 0; i < N; ++i) r.g[i] = x.g[i] * s;
  }
  return r;
}

// arccos of a cosine clamped to [-1, 1]; the clamped (and endpoint) case is
// treated as locally constant.
inline double acos_clamped(double c) {
  return std::acos(c < -1.0 ? -1.0 : (c > 1.0 ? 1.0 : c));
}
template <int N>
Dual<N> acos_clamped(const Dual<N>& c) {
  if (c.v <= -1.0 || c.v >= 1.0) return Dual<N>(acos_clamped(c.v));
  Dual<N> r(std::acos(c.v));
  const double s = -1.0 / std::sqrt(1.0 - c.v * c.v);
  for (int i = 0; i < N; ++i) r.g[i] = c.g[i] * s;
  return r;
}

inline double min_d(double a, double b) { return b < a ? b : a; }
inline double max_d(double a, double b) { return a < b ? b : a; }

// On an exact tie the derivative is the mean of both arguments' derivatives,
// which is what a central difference sees at the kink.
template <int N>
Dual<N> min_d(const Dual<N>& a, const Dual<N>& b) {
  if (a.v != b.v) return b.v < a.v ? b : a;
  return (a + b) * 0.5;
}
template <int N>
Dual<N> max_d(const Dual<N>& a, const Dual<N>& b) {
  if (a.v != b.v) return a.v < b.v ? b : a;
  return (a + b) * 0.5;
}

}  // namespace scpm::detail

#endif  // SCPM_DETAIL_DUAL_HPP
