#pragma once

// Forward-mode dual numbers with a fixed number of directions and a tiny
// 3x3 matrix type usable with both double and Dual<N>.

#include <array>
#include <cmath>

namespace dpmor::detail {

template <int N>
struct Dual {
  double v = 0.0;
  std::array<double, N> d{};

  Dual() = default;
  Dual(double x) : v(x) {}  // NOLINT: implicit promotion of constants is intended

  static Dual variable(double x, int i) {
    Dual r(x);
    r.d[static_cast<std::size_t>(i)] = 1.0;
    return r;
  }

  Dual& operator+=(const Dual& o) {
    v += o.v;
    for (int i = 0; i < N; ++i) d[i] += o.d[i];
    return *this;
  }
  Dual& operator-=(const Dual& o) {
    v -= o.v;
    for (int i = 0; i < N; ++i) d[i] -= o.d[i];
    return *this;
  }
  Dual& operator*=(const Dual& o) {
    for (int i = 0; i < N; ++i) d[i] = d[i] * o.v + v * o.d[i];
    v *= o.v;
    return *this;
  }
  Dual& operator/=(const Dual& o) {
    const double inv = 1.0 / o.v;
    for (int i = 0; i < N; ++i) d[i] = (d[i] - v * inv * o.d[i]) * inv;
    v *= inv;
    return *this;
  }
};

template <int N> Dual<N> operator+(Dual<N> a, const Dual<N>& b) { return a += b; }
template <int N> Dual<N> operator-(Dual<N> a, const Dual<N>& b) { return a -= b; }
template <int N> Dual<N> operator*(Dual<N> a, const Dual<N>& b) { return a *= b; }
template <int N> Dual<N> operator/(Dual<N> a, const Dual<N>& b) { return a /= b; }
template <int N> Dual<N> operator+(Dual<N> a, double b) { a.v += b; return a; }
template <int N> Dual<N> operator+(double b, Dual<N> a) { a.v += b; return a; }
template <int N> Dual<N> operator-(Dual<N> a, double b) { a.v -= b; return a; }
template <int N> Dual<N> operator-(double b, const Dual<N>& a) {
  Dual<N> r;
  r.v = b - a.v;
  for (int i = 0; i < N; ++i) r.d[i] = -a.d[i];
  return r;
}
template <int N> Dual<N> operator-(const Dual<N>& a) { return 0.0 - a; }
template <int N> Dual<N> operator*(Dual<N> a, double b) {
  a.v *= b;
  for (auto& x : a.d) x *= b;
  return a;
}
template <int N> Dual<N> operator*(double b, Dual<N> a) { return a * b; }
template <int N> Dual<N> operator/(Dual<N> a, double b) { return a * (1.0 / b); }
template <int N> Dual<N> operator/(double b, const Dual<N>& a) { return Dual<N>(b) / a; }

template <int N> Dual<N> chain(const Dual<N>& a, double value, double slope) {
  Dual<N> r;
  r.v = value;
  for (int i = 0; i < N; ++i) r.d[i] = slope * a.d[i];
  return r;
}
template <int N> Dual<N> exp(const Dual<N>& a) {
  const double e = std::exp(a.v);
  return chain(a, e, e);
}
template <int N> Dual<N> log(const Dual<N>& a) { return chain(a, std::log(a.v), 1.0 / a.v); }
template <int N> Dual<N> sqrt(const Dual<N>& a) {
  const double s = std::sqrt(a.v);
  return chain(a, s, 0.5 / s);
}
template <int N> Dual<N> pow(const Dual<N>& a, double k) {
  const double p = std::pow(a.v, k);
  return chain(a, p, k * std::pow(a.v, k - 1.0));
}

inline double value(double x) { return x; }
template <int N> double value(const Dual<N>& x) { return x.v; }

using std::exp;
using std::log;
using std::pow;
using std::sqrt;

template <class T>
struct M3 {
  std::array<T, 9> m{};

  T& operator()(int i, int j) { return m[static_cast<std::size_t>(3 * i + j)]; }
  const T& operator()(int i, int j) const { return m[static_cast<std::size_t>(3 * i + j)]; }

  static M3 identity() {
    M3 r;
    r(0, 0) = 1.0;
    r(1, 1) = 1.0;
    r(2, 2) = 1.0;
    return r;
  }
  /// From (xx, yy, zz, xy, yz, xz).
  template <class V>
  static M3 sym(const V& v, int off) {
    M3 r;
    r(0, 0) = v[off + 0];
    r(1, 1) = v[off + 1];
    r(2, 2) = v[off + 2];
    r(0, 1) = r(1, 0) = v[off + 3];
    r(1, 2) = r(2, 1) = v[off + 4];
    r(0, 2) = r(2, 0) = v[off + 5];
    return r;
  }
};

template <class T> M3<T> operator+(const M3<T>& a, const M3<T>& b) {
  M3<T> r;
  for (int i = 0; i < 9; ++i) r.m[i] = a.m[i] + b.m[i];
  return r;
}
template <class T> M3<T> operator-(const M3<T>& a, const M3<T>& b) {
  M3<T> r;
  for (int i = 0; i < 9; ++i) r.m[i] = a.m[i] - b.m[i];
  return r;
}
template <class T, class S> M3<T> operator*(const S& s, const M3<T>& a) {
  M3<T> r;
  for (int i = 0; i < 9; ++i) r.m[i] = s * a.m[i];
  return r;
}
template <class T> M3<T> operator*(const M3<T>& a, const M3<T>& b) {
  M3<T> r;
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) r(i, j) = a(i, 0) * b(0, j) + a(i, 1) * b(1, j) + a(i, 2) * b(2, j);
  return r;
}
template <class T> T trace(const M3<T>& a) { return a(0, 0) + a(1, 1) + a(2, 2); }
template <class T> T det(const M3<T>& a) {
  return a(0, 0) * (a(1, 1) * a(2, 2) - a(1, 2) * a(2, 1)) - a(0, 1) * (a(1, 0) * a(2, 2) - a(1, 2) * a(2, 0)) +
         a(0, 2) * (a(1, 0) * a(2, 1) - a(1, 1) * a(2, 0));
}
template <class T> M3<T> inverse(const M3<T>& a, const T& d) {
  M3<T> r;
  const T inv = 1.0 / d;
  r(0, 0) = (a(1, 1) * a(2, 2) - a(1, 2) * a(2, 1)) * inv;
  r(0, 1) = (a(0, 2) * a(2, 1) - a(0, 1) * a(2, 2)) * inv;
  r(0, 2) = (a(0, 1) * a(1, 2) - a(0, 2) * a(1, 1)) * inv;
  r(1, 0) = (a(1, 2) * a(2, 0) - a(1, 0) * a(2, 2)) * inv;
  r(1, 1) = (a(0, 0) * a(2, 2) - a(0, 2) * a(2, 0)) * inv;
  r(1, 2) = (a(0, 2) * a(1, 0) - a(0, 0) * a(1, 2)) * inv;
  r(2, 0) = (a(1, 0) * a(2, 1) - a(1, 1) * a(2, 0)) * inv;
  r(2, 1) = (a(0, 1) * a(2, 0) - a(0, 0) * a(2, 1)) * inv;
  r(2, 2) = (a(0, 0) * a(1, 1) - a(0, 1) * a(1, 0)) * inv;
  return r;
}
template <class T> M3<T> deviator(const M3<T>& a) {
  M3<T> r = a;
  const T t = trace(a) / 3.0;
  r(0, 0) -= t;
  r(1, 1) -= t;
  r(2, 2) -= t;
  return r;
}
template <class T> M3<T> symmetric_part(const M3<T>& a) {
  M3<T> r;
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) r(i, j) = 0.5 * (a(i, j) + a(j, i));
  return r;
}
/// tr(A A), which for the Mandel-like tensors used here is non-negative.
template <class T> T trace_square(const M3<T>& a) {
  T s = 0.0;
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) s += a(i, j) * a(j, i);
  return s;
}

}  // namespace dpmor::detail
