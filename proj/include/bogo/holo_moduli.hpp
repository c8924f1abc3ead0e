#pragma once

#include <array>
#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "errors.hpp"
#include "fields.hpp"
#include "polynomial.hpp"

namespace bogo {

// 2x2 matrix of polynomials in z.
struct PolyMat {
  Poly a11, a12, a21, a22;

  Poly trace() const { return a11 + a22; }
  Mat2 at(cplx z) const { return Mat2(a11(z), a12(z), a21(z), a22(z)); }
  friend PolyMat operator*(cplx s, const PolyMat& m) { return {s * m.a11, s * m.a12, s * m.a21, s * m.a22}; }
};

struct DivisorPoint {
  cplx point;
  int mult;
};

struct Divisor {
  std::vector<DivisorPoint> points;

  int degree() const {
    int s = 0;
    for (auto& p : points) s += p.mult;
    return s;
  }
  bool even() const { return degree() % 2 == 0; }
};

inline nlohmann::json divisor_json(const Divisor& d) {
  nlohmann::json a = nlohmann::json::array();
  for (auto& p : d.points) a.push_back({{"re", p.point.real()}, {"im", p.point.imag()}, {"mult", p.mult}});
  return a;
}

inline Divisor divisor_from_json(const nlohmann::json& j) {
  Divisor d;
  for (auto& e : j) {
    int m = e.at("mult").get<int>();
    if (m < 1) throw BadConfig("divisor: mult must be positive");
    d.points.push_back({cplx(e.at("re").get<double>(), e.at("im").get<double>()), m});
  }
  return d;
}

// Zeros of 1 ^ Phi(1, 0), i.e. of the lower-left entry, with multiplicities.
inline Divisor extract_divisor(const PolyMat& phi) {
  if (phi.a21.is_zero()) throw ZeroSection("extract_divisor: lower-left entry vanishes identically");
  Divisor d;
  for (auto& r : roots_with_multiplicity(phi.a21)) d.points.push_back({r.root, r.mult});
  return d;
}

enum class Regime { below, at_or_above };  // |D| < 2g - 2, |D| >= 2g - 2

inline const char* regime_name(Regime r) { return r == Regime::below ? "<2g-2" : ">=2g-2"; }

struct LineBundleDegree {
  int degree;
  Regime regime;
};

inline void check_genus(int g) {
  if (g < 2) throw DomainError("genus must be at least 2");
}

// deg L = (2g - 2 - |D|) / 2
inline LineBundleDegree line_bundle_degree(int g, const Divisor& d) {
  check_genus(g);
  int n = d.degree();
  if (n % 2) throw OddDivisor("line_bundle_degree: |D| = " + std::to_string(n) + " is odd");
  return {(2 * g - 2 - n) / 2, n < 2 * g - 2 ? Regime::below : Regime::at_or_above};
}

// dbar perturbation alpha in the upper-right slot and Phi = [[Phi2, Phi3], [Phi1, -Phi2]]
// in the frame (L, L*).
struct NormalFormPair {
  Poly alpha, phi1, phi2, phi3;
  int genus = 2;
  int deg_l = 0;

  PolyMat higgs() const { return {phi2, phi3, phi1, -phi2}; }
};

inline NormalFormPair cstar_scale(const NormalFormPair& p, cplx xi) {
  if (xi == cplx(0)) throw DomainError("cstar_scale: xi must be nonzero");
  NormalFormPair q = p;
  q.phi1 = xi * p.phi1;
  q.phi2 = xi * p.phi2;
  q.phi3 = xi * p.phi3;
  return q;
}

// a^2 with diag(a, 1/a)^-1 (xi Phi, alpha) diag(a, 1/a) = (Phi, alpha), if any.
// Conjugation multiplies the lower-left slot by a^2 and the upper-right by a^-2,
// so each nonzero block pins a^2: Phi1 -> 1/xi, Phi3 -> xi, alpha -> 1; a
// nonzero Phi2 needs xi = 1.
inline std::optional<cplx> fixed_point_gauge(const NormalFormPair& p, cplx xi, double tol = 1e-12) {
  if (xi == cplx(0)) throw DomainError("fixed_point_gauge: xi must be nonzero");
  double scale = std::max({p.alpha.max_abs(), p.phi1.max_abs(), p.phi2.max_abs(), p.phi3.max_abs(), 1e-300});
  auto nonzero = [&](const Poly& q) { return q.max_abs() > tol * scale; };
  if (nonzero(p.phi2) && std::abs(xi - 1.0) > tol) return std::nullopt;
  std::vector<cplx> pins;
  if (nonzero(p.phi1)) pins.push_back(1.0 / xi);
  if (nonzero(p.phi3)) pins.push_back(xi);
  if (nonzero(p.alpha)) pins.push_back(1.0);
  if (pins.empty()) return cplx(1.0);
  for (cplx a2 : pins)
    if (std::abs(a2 - pins[0]) > tol * std::abs(pins[0])) return std::nullopt;
  return pins[0];
}

inline bool fixed_point_test(const NormalFormPair& p,
                             const std::vector<cplx>& xi_samples = {cplx(2.0), cplx(-0.5, 0.3), std::polar(1.0, 0.7)}) {
  for (cplx xi : xi_samples)
    if (!fixed_point_gauge(p, xi)) return false;
  return true;
}

// beta strictly upper triangular and phi with vanishing lower-left entry.
inline bool block_membership(const TangentPair& t, double tol = 1e-10) {
  if (t.beta.size() != t.phi.size()) throw DomainError("block_membership: size mismatch");
  for (std::size_t i = 0; i < t.beta.size(); ++i) {
    const Mat2 &b = t.beta[i], &f = t.phi[i];
    if (std::abs(b.a11()) > tol || std::abs(b.a21()) > tol || std::abs(b.a22()) > tol) return false;
    if (std::abs(f.a21()) > tol) return false;
  }
  return true;
}

// Area weights on one y-slice: trapezoid (periodic on a torus).
inline std::vector<double> slice_weights(const TorusGrid& g) {
  std::vector<double> w(std::size_t(g.n2()) * g.n3());
  for (int i2 = 0; i2 < g.n2(); ++i2)
    for (int i3 = 0; i3 < g.n3(); ++i3) {
      double a = g.h2() * g.h3();
      if (!g.periodic()) {
        if (i2 == 0 || i2 + 1 == g.n2()) a *= 0.5;
        if (i3 == 0 || i3 + 1 == g.n3()) a *= 0.5;
      }
      w[std::size_t(i2) * g.n3() + i3] = a;
    }
  return w;
}

// i * sum_x w Tr(phi2 beta1 - phi1 beta2) on the slice y = y[j].
inline cplx symplectic_pairing(const TangentPair& t1, const TangentPair& t2, const TorusGrid& g, std::size_t j = 0) {
  for (auto* t : {&t1, &t2})
    if (t->beta.size() != g.size() || t->phi.size() != g.size()) throw DomainError("symplectic_pairing: size mismatch");
  if (j >= g.ny()) throw DomainError("symplectic_pairing: slice out of range");
  auto w = slice_weights(g);
  cplx s = 0;
  for (int i2 = 0; i2 < g.n2(); ++i2)
    for (int i3 = 0; i3 < g.n3(); ++i3) {
      std::size_t q = g.index(i2, i3, j);
      s += w[std::size_t(i2) * g.n3() + i3] *
           (trace_product(t2.phi[q], t1.beta[q]) - trace_product(t1.phi[q], t2.beta[q]));
    }
  return I_unit * s;
}

struct QuaternionImages {
  TangentPair i, j, k;
};

// I(b, f) = (i b, i f), J(b, f) = (i f^*, -i b^*), K = IJ = (-f^*, b^*), adjoints in h.
inline QuaternionImages complex_structures(const TangentPair& t, const std::vector<HermMetric>& h) {
  if (t.beta.size() != t.phi.size() || h.size() != t.beta.size())
    throw DomainError("complex_structures: size mismatch");
  QuaternionImages q;
  std::size_t n = t.beta.size();
  for (auto* p : {&q.i, &q.j, &q.k}) p->beta.resize(n), p->phi.resize(n);
  for (std::size_t a = 0; a < n; ++a) {
    Mat2 bs = herm_adjoint(t.beta[a], h[a]), fs = herm_adjoint(t.phi[a], h[a]);
    q.i.beta[a] = I_unit * t.beta[a];
    q.i.phi[a] = I_unit * t.phi[a];
    q.j.beta[a] = I_unit * fs;
    q.j.phi[a] = -I_unit * bs;
    q.k.beta[a] = -1.0 * fs;
    q.k.phi[a] = bs;
  }
  return q;
}

inline TangentPair apply_i(const TangentPair& t, const std::vector<HermMetric>& h) { return complex_structures(t, h).i; }
inline TangentPair apply_j(const TangentPair& t, const std::vector<HermMetric>& h) { return complex_structures(t, h).j; }
inline TangentPair apply_k(const TangentPair& t, const std::vector<HermMetric>& h) { return complex_structures(t, h).k; }

struct RankDegLedger {
  int genus = 2;
  int rank_l = 2, rank_nplus = 2;
  int deg_nplus = 0;
};

struct IndexReport {
  long index0, index1, dimension;
};

// index dbar0 = deg N+ + (rank L + rank N+)(g - 1), index dbar1 = deg N+ - rank N+ (g - 1)
inline IndexReport index_dimension(const RankDegLedger& l) {
  check_genus(l.genus);
  if (l.rank_l < 1 || l.rank_nplus < 1) throw DomainError("index_dimension: ranks must be positive");
  long g1 = l.genus - 1;
  long i0 = l.deg_nplus + long(l.rank_l + l.rank_nplus) * g1;
  long i1 = l.deg_nplus - long(l.rank_nplus) * g1;
  return {i0, i1, i0 - i1};
}

enum class StabilityMode { stable, semistable };

inline bool stability_degree_check(int deg, StabilityMode mode) {
  return mode == StabilityMode::stable ? deg < 0 : deg <= 0;
}

}  // namespace bogo
