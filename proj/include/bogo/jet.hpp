#pragma once

#include <cmath>

namespace bogo {

// Second-order forward jet in one variable: value, first and second
// derivative. Enough to get exact u_r, u_rr, u_y, u_yy of closed forms.
struct Jet {
  double v = 0, d = 0, dd = 0;

  constexpr Jet() = default;
  constexpr Jet(double value) : v(value) {}
  constexpr Jet(double value, double d1, double d2) : v(value), d(d1), dd(d2) {}

  static constexpr Jet variable(double x) { return {x, 1.0, 0.0}; }
};

inline Jet operator+(Jet a, Jet b) { return {a.v + b.v, a.d + b.d, a.dd + b.dd}; }
inline Jet operator-(Jet a, Jet b) { return {a.v - b.v, a.d - b.d, a.dd - b.dd}; }
inline Jet operator-(Jet a) { return {-a.v, -a.d, -a.dd}; }
inline Jet operator*(Jet a, Jet b) {
  return {a.v * b.v, a.d * b.v + a.v * b.d, a.dd * b.v + 2 * a.d * b.d + a.v * b.dd};
}
inline Jet operator/(Jet a, Jet b) {
  double q = a.v / b.v;
  double qd = (a.d - q * b.d) / b.v;
  double qdd = (a.dd - 2 * qd * b.d - q * b.dd) / b.v;
  return {q, qd, qdd};
}
inline Jet& operator+=(Jet& a, Jet b) { return a = a + b; }
inline Jet& operator*=(Jet& a, Jet b) { return a = a * b; }

// chain rule with f, f', f'' at a.v
inline Jet compose(Jet a, double f, double f1, double f2) {
  return {f, f1 * a.d, f2 * a.d * a.d + f1 * a.dd};
}

inline Jet sqrt(Jet a) {
  double s = std::sqrt(a.v);
  return compose(a, s, 0.5 / s, -0.25 / (s * a.v));
}
inline Jet log(Jet a) { return compose(a, std::log(a.v), 1.0 / a.v, -1.0 / (a.v * a.v)); }
inline Jet exp(Jet a) {
  double e = std::exp(a.v);
  return compose(a, e, e, e);
}

}  // namespace bogo
