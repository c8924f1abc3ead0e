#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <vector>

#include "errors.hpp"

namespace bogo {

using cplx = std::complex<double>;
inline constexpr cplx I_unit{0.0, 1.0};
inline constexpr double kDefaultTol = 1e-12;

class Mat2 {
 public:
  struct Unchecked {};

  Mat2() : m_{} {}
  Mat2(cplx a11, cplx a12, cplx a21, cplx a22) : m_{a11, a12, a21, a22} {
    if (!is_finite()) throw DomainError("Mat2: non-finite entry");
  }
  Mat2(Unchecked, cplx a11, cplx a12, cplx a21, cplx a22) : m_{a11, a12, a21, a22} {}

  static Mat2 zero() { return {}; }
  static Mat2 identity() { return diag(1.0, 1.0); }
  static Mat2 diag(cplx a, cplx b) { return {a, 0.0, 0.0, b}; }
  static Mat2 e11() { return diag(1.0, 0.0); }
  static Mat2 e22() { return diag(0.0, 1.0); }
  static Mat2 e12() { return {0.0, 1.0, 0.0, 0.0}; }
  static Mat2 e21() { return {0.0, 0.0, 1.0, 0.0}; }

  cplx operator()(int i, int j) const { return m_[2 * i + j]; }
  cplx a11() const { return m_[0]; }
  cplx a12() const { return m_[1]; }
  cplx a21() const { return m_[2]; }
  cplx a22() const { return m_[3]; }
  const std::array<cplx, 4>& entries() const { return m_; }

  Mat2 adjoint() const {
    return {Unchecked{}, std::conj(m_[0]), std::conj(m_[2]), std::conj(m_[1]), std::conj(m_[3])};
  }
  Mat2 transpose() const { return {Unchecked{}, m_[0], m_[2], m_[1], m_[3]}; }
  cplx trace() const { return m_[0] + m_[3]; }
  cplx det() const { return m_[0] * m_[3] - m_[1] * m_[2]; }
  Mat2 traceless_part() const {
    cplx h = 0.5 * trace();
    return {Unchecked{}, m_[0] - h, m_[1], m_[2], m_[3] - h};
  }
  Mat2 inverse() const {
    cplx d = det();
    if (d == cplx(0.0)) throw DomainError("Mat2: singular matrix");
    return {Unchecked{}, m_[3] / d, -m_[1] / d, -m_[2] / d, m_[0] / d};
  }

  double norm() const {  // Frobenius
    return std::sqrt(std::norm(m_[0]) + std::norm(m_[1]) + std::norm(m_[2]) + std::norm(m_[3]));
  }
  double max_abs() const {
    return std::max({std::abs(m_[0]), std::abs(m_[1]), std::abs(m_[2]), std::abs(m_[3])});
  }

  bool is_finite() const {
    for (auto& z : m_)
      if (!std::isfinite(z.real()) || !std::isfinite(z.imag())) return false;
    return true;
  }
  bool is_traceless(double tol = kDefaultTol) const { return std::abs(trace()) <= tol; }
  bool is_hermitian(double tol = kDefaultTol) const { return (*this - adjoint()).max_abs() <= tol; }
  bool is_antihermitian(double tol = kDefaultTol) const {
    return (*this + adjoint()).max_abs() <= tol;
  }

  friend Mat2 operator+(const Mat2& a, const Mat2& b) {
    return {Unchecked{}, a.m_[0] + b.m_[0], a.m_[1] + b.m_[1], a.m_[2] + b.m_[2], a.m_[3] + b.m_[3]};
  }
  friend Mat2 operator-(const Mat2& a, const Mat2& b) {
    return {Unchecked{}, a.m_[0] - b.m_[0], a.m_[1] - b.m_[1], a.m_[2] - b.m_[2], a.m_[3] - b.m_[3]};
  }
  friend Mat2 operator-(const Mat2& a) { return {Unchecked{}, -a.m_[0], -a.m_[1], -a.m_[2], -a.m_[3]}; }
  friend Mat2 operator*(const Mat2& a, const Mat2& b) {
    return {Unchecked{}, a.m_[0] * b.m_[0] + a.m_[1] * b.m_[2], a.m_[0] * b.m_[1] + a.m_[1] * b.m_[3],
            a.m_[2] * b.m_[0] + a.m_[3] * b.m_[2], a.m_[2] * b.m_[1] + a.m_[3] * b.m_[3]};
  }
  friend Mat2 operator*(cplx s, const Mat2& a) {
    return {Unchecked{}, s * a.m_[0], s * a.m_[1], s * a.m_[2], s * a.m_[3]};
  }
  friend Mat2 operator*(const Mat2& a, cplx s) { return s * a; }
  friend Mat2 operator*(double s, const Mat2& a) { return cplx(s) * a; }
  friend Mat2 operator*(const Mat2& a, double s) { return cplx(s) * a; }
  friend Mat2 operator/(const Mat2& a, cplx s) { return (1.0 / s) * a; }
  Mat2& operator+=(const Mat2& b) { return *this = *this + b; }
  Mat2& operator-=(const Mat2& b) { return *this = *this - b; }
  Mat2& operator*=(cplx s) { return *this = s * *this; }

 private:
  std::array<cplx, 4> m_;
};

inline Mat2 commutator(const Mat2& a, const Mat2& b) { return a * b - b * a; }

// Tr(A B)
inline cplx trace_product(const Mat2& a, const Mat2& b) {
  return a.a11() * b.a11() + a.a12() * b.a21() + a.a21() * b.a12() + a.a22() * b.a22();
}

// log of a unimodular matrix similar to a positive hermitian one (e.g.
// H^{-1} H' for two metrics). Uses N = M - (tr M / 2) and N^2 = sinh^2(t),
// which keeps full relative accuracy when M is close to the identity.
inline Mat2 log_unimodular(const Mat2& m) {
  Mat2 n = m.traceless_part();
  double s2 = std::max(0.0, (n.a11() * n.a11() + n.a12() * n.a21()).real());
  double s = std::sqrt(s2);
  double f = s < 1e-4 ? 1.0 - s2 / 6.0 + 3.0 * s2 * s2 / 40.0 : std::asinh(s) / s;
  return f * n;
}

// exp of a traceless matrix: cosh(q) + sinh(q)/q X with q^2 = -det X
inline Mat2 exp_traceless(const Mat2& x) {
  cplx q2 = -x.det();
  cplx q = std::sqrt(q2);
  cplx c, sq;
  if (std::abs(q2) < 1e-8) {
    c = 1.0 + q2 / 2.0 + q2 * q2 / 24.0;
    sq = 1.0 + q2 / 6.0 + q2 * q2 / 120.0;
  } else {
    c = std::cosh(q);
    sq = std::sinh(q) / q;
  }
  return Mat2(Mat2::Unchecked{}, c, 0.0, 0.0, c) + sq * x;
}

// Positive definite hermitian metric with det 1.
class HermMetric {
 public:
  HermMetric() : h_(Mat2::identity()) {}
  explicit HermMetric(const Mat2& m) {
    Mat2 s = 0.5 * (m + m.adjoint());
    double a = s.a11().real(), d = s.a22().real();
    cplx b = s.a12();
    double det = a * d - std::norm(b);
    if (!(a > 0.0) || !(d > 0.0) || !(det > 0.0) || !std::isfinite(det))
      throw DomainError("HermMetric: not positive definite");
    double k = 1.0 / std::sqrt(det);
    h_ = Mat2(a * k, b * k, std::conj(b) * k, d * k);
  }

  static HermMetric diag(double d1) { return HermMetric(Mat2::diag(d1, 1.0 / d1)); }

  const Mat2& mat() const { return h_; }
  Mat2 inverse() const { return inverse_of(h_); }
  // adjugate, i.e. the inverse of a unimodular matrix
  static Mat2 inverse_of(const Mat2& h) {
    return {Mat2::Unchecked{}, h.a22(), -h.a12(), -h.a21(), h.a11()};
  }
  std::array<double, 2> eigenvalues() const {
    double t = h_.trace().real();
    double disc = std::sqrt(std::max(0.0, 0.25 * t * t - 1.0));
    double hi = 0.5 * t + disc;
    return {1.0 / hi, hi};
  }

 private:
  Mat2 h_;
};

// H^{-1} M^dagger H
inline Mat2 herm_adjoint(const Mat2& m, const Mat2& h) { return h.inverse() * m.adjoint() * h; }
inline Mat2 herm_adjoint(const Mat2& m, const HermMetric& h) {
  return h.inverse() * m.adjoint() * h.mat();
}

// Principal square root g = g^dagger > 0 with g^dagger g = H. For det H = 1
// the square root is (H + 1)/sqrt(tr H + 2) by Cayley-Hamilton.
inline Mat2 cholesky_like_factor(const HermMetric& h) {
  double t = h.mat().trace().real();
  return (h.mat() + Mat2::identity()) * (1.0 / std::sqrt(t + 2.0));
}

// Value and first derivatives of a matrix-valued gauge transformation.
struct GaugeJet {
  Mat2 g = Mat2::identity();
  Mat2 dx2, dx3, dy;

  static GaugeJet constant(const Mat2& g) { return {g, {}, {}, {}}; }
  Mat2 dbar() const { return dx2 + I_unit * dx3; }  // d/dx2 + i d/dx3
};

inline GaugeJet operator*(const GaugeJet& a, const GaugeJet& b) {
  return {a.g * b.g, a.dx2 * b.g + a.g * b.dx2, a.dx3 * b.g + a.g * b.dx3, a.dy * b.g + a.g * b.dy};
}

inline GaugeJet inverse(const GaugeJet& a) {
  Mat2 gi = a.g.inverse();
  return {gi, -(gi * a.dx2 * gi), -(gi * a.dx3 * gi), -(gi * a.dy * gi)};
}

// Zeroth-order parts of D1 = dbar + d1, D2 = d2 (tensorial), D3 = d/dy + d3,
// together with the hermitian metric h.
struct OperatorData {
  Mat2 d1, d2, d3;
  Mat2 h = Mat2::identity();
};

// Transformed data (g^-1 D g, g^dagger h g).
inline OperatorData gauge_conjugate(const GaugeJet& g, const OperatorData& d,
                                    double singular_tol = 1e-10) {
  if (std::abs(g.g.det()) < singular_tol) throw SingularGauge("gauge transformation is singular");
  Mat2 gi = g.g.inverse();
  return {gi * d.d1 * g.g + gi * g.dbar(), gi * d.d2 * g.g, gi * d.d3 * g.g + gi * g.dy,
          g.g.adjoint() * d.h * g.g};
}

inline std::vector<OperatorData> gauge_conjugate_triple(const std::vector<GaugeJet>& g,
                                                        const std::vector<OperatorData>& d,
                                                        double singular_tol = 1e-10) {
  if (g.size() != d.size()) throw DomainError("gauge and data sizes differ");
  std::vector<OperatorData> out(d.size());
  for (std::size_t i = 0; i < d.size(); ++i) out[i] = gauge_conjugate(g[i], d[i], singular_tol);
  return out;
}

// Unitary triple at a point: A = A2 dx2 + A3 dx3 + Ay dy, phi_z dz + h.c.,
// and phi1. In unitary gauge D1 = dbar + (A2 + i A3), D2 = phi_z,
// D3 = d/dy + (Ay - i phi1).
struct UnitaryTriple {
  Mat2 a2, a3, ay, phi_z, phi1;
};

inline OperatorData to_operator(const UnitaryTriple& t) {
  return {t.a2 + I_unit * t.a3, t.phi_z, t.ay - I_unit * t.phi1, Mat2::identity()};
}

// Inverse of to_operator; meaningful when h = 1.
inline UnitaryTriple to_unitary(const OperatorData& d) {
  Mat2 d1a = d.d1.adjoint(), d3a = d.d3.adjoint();
  return {0.5 * (d.d1 - d1a), (d.d1 + d1a) * cplx(0.0, -0.5), 0.5 * (d.d3 - d3a), d.d2,
          (d.d3 + d3a) * cplx(0.0, 0.5)};
}

}  // namespace bogo
