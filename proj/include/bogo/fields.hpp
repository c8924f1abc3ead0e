#pragma once

#include <cmath>
#include <fstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "algebra.hpp"
#include "grid.hpp"
#include "models.hpp"
#include "parallel.hpp"

namespace bogo {

// Unitary triple per node of a TorusGrid.
struct FieldConfig {
  std::vector<UnitaryTriple> nodes;

  // anti-hermitian A, traceless phi_z
  bool valid(double tol = 1e-10) const {
    for (auto& t : nodes)
      if (!t.a2.is_antihermitian(tol) || !t.a3.is_antihermitian(tol) ||
          !t.ay.is_antihermitian(tol) || !t.phi_z.is_traceless(tol))
        return false;
    return true;
  }
};

// Holomorphic-gauge data: D1 = dbar + beta, D2 = Phi, D3 = d/dy, metric H.
struct HolomorphicData {
  std::vector<Mat2> beta, phi;
  std::vector<HermMetric> h;
};

// Deformation (beta, phi) in Omega^{0,1} + Omega^{1,0} of sl(E).
struct TangentPair {
  std::vector<Mat2> beta, phi;

  bool traceless(double tol = kDefaultTol) const {
    for (std::size_t i = 0; i < beta.size(); ++i)
      if (!beta[i].is_traceless(tol) || !phi[i].is_traceless(tol)) return false;
    return true;
  }
};

struct ResidualNorms {
  double sup = 0, l2 = 0;
};

namespace detail {

// y dual-cell widths
inline std::vector<double> dual_widths(const std::vector<double>& x) {
  std::size_t n = x.size();
  std::vector<double> w(n, 1.0);
  if (n < 2) return w;
  for (std::size_t i = 0; i < n; ++i) {
    double lo = i ? x[i - 1] : x[i], hi = i + 1 < n ? x[i + 1] : x[i];
    w[i] = 0.5 * (hi - lo);
  }
  return w;
}

// Fixed-order reduction of pointwise values (negative = not evaluated).
inline ResidualNorms reduce(const std::vector<double>& pointwise, const std::vector<double>& vol) {
  ResidualNorms n;
  double s = 0;
  for (std::size_t i = 0; i < pointwise.size(); ++i) {
    if (pointwise[i] < 0) continue;
    n.sup = std::max(n.sup, pointwise[i]);
    s += pointwise[i] * pointwise[i] * vol[i];
  }
  n.l2 = std::sqrt(s);
  return n;
}

inline std::vector<double> volumes(const TorusGrid& g) {
  auto wy = dual_widths(g.y());
  std::vector<double> v(g.size());
  double a = g.h2() * g.h3() * g.g0() * g.g0();
  for (int i2 = 0; i2 < g.n2(); ++i2)
    for (int i3 = 0; i3 < g.n3(); ++i3)
      for (std::size_t j = 0; j < g.ny(); ++j) v[g.index(i2, i3, j)] = a * wy[j];
  return v;
}

inline std::vector<double> volumes(const AxiGrid& g) {
  auto wr = dual_widths(g.r()), wy = dual_widths(g.y());
  std::vector<double> v(g.size());
  for (std::size_t i = 0; i < g.nr(); ++i)
    for (std::size_t j = 0; j < g.ny(); ++j) v[g.index(i, j)] = wr[i] * wy[j];
  return v;
}

// Centered/one-sided first derivatives of a node field on a TorusGrid.
template <class T>
struct Diff {
  const TorusGrid& g;
  const std::vector<T>& f;

  T dx2(int i2, int i3, std::size_t j) const {
    if (g.periodic() || (i2 > 0 && i2 + 1 < g.n2())) {
      auto p = g.wrap(i2 + 1, i3), m = g.wrap(i2 - 1, i3);
      return (f[g.index(p[0], p[1], j)] - f[g.index(m[0], m[1], j)]) * (0.5 / g.h2());
    }
    int s = i2 == 0 ? 1 : -1;
    return (f[g.index(i2 + s, i3, j)] * 4.0 - f[g.index(i2, i3, j)] * 3.0 -
            f[g.index(i2 + 2 * s, i3, j)]) * (s * 0.5 / g.h2());
  }
  T dx3(int i2, int i3, std::size_t j) const {
    if (g.periodic() || (i3 > 0 && i3 + 1 < g.n3())) {
      auto p = g.wrap(i2, i3 + 1), m = g.wrap(i2, i3 - 1);
      return (f[g.index(p[0], p[1], j)] - f[g.index(m[0], m[1], j)]) * (0.5 / g.h3());
    }
    int s = i3 == 0 ? 1 : -1;
    return (f[g.index(i2, i3 + s, j)] * 4.0 - f[g.index(i2, i3, j)] * 3.0 -
            f[g.index(i2, i3 + 2 * s, j)]) * (s * 0.5 / g.h3());
  }
  T dy(int i2, int i3, std::size_t j) const {
    T out{};
    for (auto t : d1_stencil(g.y(), j)) out += f[g.index(i2, i3, t.idx)] * t.w;
    return out;
  }
};

template <class Body>
void for_nodes(const TorusGrid& g, Body&& body) {
  std::size_t ncol = std::size_t(g.n2()) * g.n3();
  parallel_for(
      ncol,
      [&](std::size_t c) {
        int i2 = int(c / g.n3()), i3 = int(c % g.n3());
        for (std::size_t j = 0; j < g.ny(); ++j) body(i2, i3, j);
      },
      64);
}

}  // namespace detail

inline FieldConfig sample_config(const FieldSampler& f, const TorusGrid& g) {
  FieldConfig cfg;
  cfg.nodes.resize(g.size());
  detail::for_nodes(g, [&](int i2, int i3, std::size_t j) {
    cfg.nodes[g.index(i2, i3, j)] = f(g.x2(i2), g.x3(i3), g.y()[j]);
  });
  return cfg;
}

// Unitary gauge from holomorphic data (beta = 0, Phi, H = g^dagger g):
// every operator is conjugated D -> g D g^-1, which gives
// A2 + i A3 = -(dbar g) g^-1, Ay - i phi1 = -(d_y g) g^-1, phi_z = g Phi g^-1.
inline UnitaryTriple assemble_unitary(const GaugeJet& g, const Mat2& phi) {
  OperatorData hol{Mat2::zero(), phi, Mat2::zero(), g.g.adjoint() * g.g};
  return to_unitary(gauge_conjugate(inverse(g), hol));
}

inline FieldConfig assemble_unitary(const std::vector<GaugeJet>& g, const std::vector<Mat2>& phi) {
  if (g.size() != phi.size()) throw DomainError("assemble_unitary: size mismatch");
  FieldConfig cfg;
  cfg.nodes.resize(g.size());
  for (std::size_t i = 0; i < g.size(); ++i) {
    if (std::abs(g[i].g.det()) < 1e-10) throw SingularGauge("assemble_unitary: singular g");
    cfg.nodes[i] = assemble_unitary(g[i], phi[i]);
  }
  return cfg;
}

// Same with derivatives of g taken by finite differences on the grid.
inline std::vector<GaugeJet> gauge_jets(const std::vector<Mat2>& g, const TorusGrid& grid) {
  if (g.size() != grid.size()) throw DomainError("gauge_jets: size mismatch");
  std::vector<GaugeJet> out(g.size());
  detail::Diff<Mat2> d{grid, g};
  detail::for_nodes(grid, [&](int i2, int i3, std::size_t j) {
    std::size_t n = grid.index(i2, i3, j);
    out[n] = {g[n], d.dx2(i2, i3, j), d.dx3(i2, i3, j),
              grid.ny() > 1 ? d.dy(i2, i3, j) : Mat2::zero()};
  });
  return out;
}

inline FieldConfig assemble_unitary(const std::vector<Mat2>& g, const std::vector<Mat2>& phi,
                                    const TorusGrid& grid) {
  return assemble_unitary(gauge_jets(g, grid), phi);
}

struct Eb1Residual {
  ResidualNorms eq[3];  // curvature, d_A phi, d_A^* phi
  std::vector<double> pointwise[3];  // -1 where not evaluated
};

// Residual of
//   F_A - phi^phi = *d_A phi1,  d_A phi + *[phi, phi1] = 0,  d_A^* phi = 0
// for metric g0^2 |dz|^2 + dy^2, orientation dx2 dx3 dy, phi = phi2 dx2 + phi3 dx3
// with phi_z = phi2 - i phi3. Evaluated where all neighbours exist.
inline Eb1Residual eb1_residual(const FieldConfig& cfg, const TorusGrid& g) {
  if (cfg.nodes.size() != g.size()) throw DomainError("eb1_residual: size mismatch");
  std::size_t n = g.size();
  std::vector<Mat2> a2(n), a3(n), ay(n), p1(n), p2(n), p3(n);
  for (std::size_t i = 0; i < n; ++i) {
    const auto& t = cfg.nodes[i];
    a2[i] = t.a2; a3[i] = t.a3; ay[i] = t.ay; p1[i] = t.phi1;
    Mat2 pa = t.phi_z.adjoint();
    p2[i] = 0.5 * (t.phi_z - pa);
    p3[i] = cplx(0, 0.5) * (t.phi_z + pa);
  }
  using D = detail::Diff<Mat2>;
  D da2{g, a2}, da3{g, a3}, day{g, ay}, dp1{g, p1}, dp2{g, p2}, dp3{g, p3};
  double g02 = g.g0() * g.g0();
  std::vector<double> e[3];
  for (auto& v : e) v.assign(n, -1.0);
  detail::for_nodes(g, [&](int i2, int i3, std::size_t j) {
    if (!g.x_interior(i2, i3) || j == 0 || j + 1 >= g.ny()) return;
    std::size_t k = g.index(i2, i3, j);
    const Mat2 &A2 = a2[k], &A3 = a3[k], &Ay = ay[k], &P1 = p1[k], &P2 = p2[k], &P3 = p3[k];
    auto cov2 = [&](const D& d, const Mat2& x) { return d.dx2(i2, i3, j) + commutator(A2, x); };
    auto cov3 = [&](const D& d, const Mat2& x) { return d.dx3(i2, i3, j) + commutator(A3, x); };
    auto covy = [&](const D& d, const Mat2& x) { return d.dy(i2, i3, j) + commutator(Ay, x); };
    Mat2 f23 = da3.dx2(i2, i3, j) - da2.dx3(i2, i3, j) + commutator(A2, A3);
    Mat2 f3y = day.dx3(i2, i3, j) - da3.dy(i2, i3, j) + commutator(A3, Ay);
    Mat2 fy2 = da2.dy(i2, i3, j) - day.dx2(i2, i3, j) + commutator(Ay, A2);
    Mat2 c[3] = {f23 - commutator(P2, P3) - g02 * covy(dp1, P1), f3y - cov2(dp1, P1),
                 fy2 - cov3(dp1, P1)};
    Mat2 d[3] = {cov2(dp3, P3) - cov3(dp2, P2), -covy(dp3, P3) + commutator(P2, P1),
                 covy(dp2, P2) + commutator(P3, P1)};
    Mat2 e3 = cov2(dp2, P2) + cov3(dp3, P3);
    auto nrm = [](const Mat2* m) {
      double s = 0;
      for (int q = 0; q < 3; ++q) s += m[q].norm() * m[q].norm();
      return std::sqrt(s);
    };
    e[0][k] = nrm(c);
    e[1][k] = nrm(d);
    e[2][k] = e3.norm();
  });
  auto vol = detail::volumes(g);
  Eb1Residual r;
  for (int q = 0; q < 3; ++q) {
    r.eq[q] = detail::reduce(e[q], vol);
    r.pointwise[q] = std::move(e[q]);
  }
  return r;
}

struct HoloResidual {
  ResidualNorms holomorphic;  // dbar Phi + [beta, Phi]
  ResidualNorms dy_beta, dy_phi;
};

inline HoloResidual holo_commutator_residual(const HolomorphicData& data, const TorusGrid& g) {
  if (data.beta.size() != g.size() || data.phi.size() != g.size())
    throw DomainError("holo_commutator_residual: size mismatch");
  if (g.ny() < 2) throw DomainError("holo_commutator_residual: need at least 2 y-slices");
  std::size_t n = g.size();
  std::vector<double> e0(n, -1.0), e1(n, -1.0), e2(n, -1.0);
  detail::Diff<Mat2> db{g, data.beta}, dp{g, data.phi};
  detail::for_nodes(g, [&](int i2, int i3, std::size_t j) {
    if (!g.x_interior(i2, i3)) return;
    std::size_t k = g.index(i2, i3, j);
    Mat2 dbar = dp.dx2(i2, i3, j) + I_unit * dp.dx3(i2, i3, j);
    e0[k] = (dbar + commutator(data.beta[k], data.phi[k])).norm();
    e1[k] = db.dy(i2, i3, j).norm();
    e2[k] = dp.dy(i2, i3, j).norm();
  });
  auto vol = detail::volumes(g);
  return {detail::reduce(e0, vol), detail::reduce(e1, vol), detail::reduce(e2, vol)};
}

struct MomentMapResidual {
  std::vector<Mat2> r;  // zero where not evaluated
  std::vector<double> pointwise;  // |R|_H, -1 where not evaluated
  ResidualNorms norms;
};

// |M|_H = sqrt(Re tr(M M^{*H}))
inline double h_norm(const Mat2& m, const Mat2& h) {
  return std::sqrt(std::max(0.0, trace_product(m, herm_adjoint(m, h)).real()));
}

// R(H) = 4 d_zbar(H^-1 d_z H) + g0^2 d_y(H^-1 d_y H) - [Phi, Phi^{*H}], which is
// diag(-rho, rho) for H = diag(e^-u, e^u), Phi = f e12 with
// rho = Lap u + |f|^2 e^{-2u}. Differences of H enter through log(H^-1 H'),
// so the discrete operator is exactly covariant under constant gauge changes.
// `r` receives values at x-interior, y-interior nodes.
inline void moment_map_field(const std::vector<Mat2>& H, const std::vector<Mat2>& phi,
                             const TorusGrid& g, std::vector<Mat2>& r) {
  r.assign(g.size(), Mat2::zero());
  double g02 = g.g0() * g.g0();
  double c2 = 1.0 / (g.h2() * g.h2()), c3 = 1.0 / (g.h3() * g.h3());
  double b2 = 0.5 / g.h2(), b3 = 0.5 / g.h3();
  const auto& y = g.y();
  bool use2 = g.n2() > 1 || !g.periodic(), use3 = g.n3() > 1 || !g.periodic();
  detail::for_nodes(g, [&](int i2, int i3, std::size_t j) {
    if (!g.x_interior(i2, i3) || j == 0 || j + 1 >= g.ny()) return;
    std::size_t k = g.index(i2, i3, j);
    Mat2 hinv = HermMetric::inverse_of(H[k]);
    auto L = [&](int a2, int a3, std::size_t jj) {
      auto w = g.wrap(a2, a3);
      return log_unimodular(hinv * H[g.index(w[0], w[1], jj)]);
    };
    Mat2 curv;
    Mat2 x2, x3;
    if (use2) {
      Mat2 lm = L(i2 - 1, i3, j), lp = L(i2 + 1, i3, j);
      curv += c2 * (lm + lp);
      x2 = b2 * (lp - lm);
    }
    if (use3) {
      Mat2 lm = L(i2, i3 - 1, j), lp = L(i2, i3 + 1, j);
      curv += c3 * (lm + lp);
      x3 = b3 * (lp - lm);
    }
    curv += I_unit * commutator(x2, x3);
    Weights3 wy = d2_weights(y[j] - y[j - 1], y[j + 1] - y[j]);
    curv += g02 * (wy.m * L(i2, i3, j - 1) + wy.p * L(i2, i3, j + 1));
    r[k] = curv - commutator(phi[k], herm_adjoint(phi[k], H[k]));
  });
}

inline MomentMapResidual moment_map_residual(const std::vector<Mat2>& H,
                                             const std::vector<Mat2>& phi, const TorusGrid& g) {
  if (H.size() != g.size() || phi.size() != g.size())
    throw DomainError("moment_map_residual: size mismatch");
  MomentMapResidual out;
  moment_map_field(H, phi, g, out.r);
  out.pointwise.assign(g.size(), -1.0);
  for (int i2 = 0; i2 < g.n2(); ++i2)
    for (int i3 = 0; i3 < g.n3(); ++i3)
      for (std::size_t j = 1; j + 1 < g.ny(); ++j)
        if (g.x_interior(i2, i3)) {
          std::size_t k = g.index(i2, i3, j);
          out.pointwise[k] = h_norm(out.r[k], H[k]);
        }
  out.norms = detail::reduce(out.pointwise, detail::volumes(g));
  return out;
}

inline std::vector<Mat2> metric_matrices(const std::vector<HermMetric>& h) {
  std::vector<Mat2> m(h.size());
  for (std::size_t i = 0; i < h.size(); ++i) m[i] = h[i].mat();
  return m;
}

// Chart with trivial dbar_E only.
inline MomentMapResidual moment_map_residual(const HolomorphicData& data, const TorusGrid& g) {
  for (auto& b : data.beta)
    if (b.max_abs() != 0.0)
      throw DomainError("moment_map_residual: requires beta = 0 (trivialized chart)");
  return moment_map_residual(metric_matrices(data.h), data.phi, g);
}

// Axisymmetric form on an (r, y) half-plane with Phi = z^k e12 evaluated on
// theta = 0. Exact for metrics commuting with diag(1,-1), which is the
// setting of the diagonal reduction.
inline MomentMapResidual moment_map_residual(const std::vector<HermMetric>& H, int k,
                                             const AxiGrid& g, double g0 = 1.0) {
  if (H.size() != g.size()) throw DomainError("moment_map_residual: size mismatch");
  MomentMapResidual out;
  out.r.assign(g.size(), Mat2::zero());
  out.pointwise.assign(g.size(), -1.0);
  const auto &r = g.r(), &y = g.y();
  double g02 = g0 * g0;
  parallel_for(
      g.nr(),
      [&](std::size_t i) {
        if (i == 0 || i + 1 >= g.nr()) return;
        Weights3 w2r = d2_weights(r[i] - r[i - 1], r[i + 1] - r[i]);
        Weights3 w1r = d1_weights(r[i] - r[i - 1], r[i + 1] - r[i]);
        Mat2 phi = std::pow(r[i], k) * Mat2::e12();
        for (std::size_t j = 1; j + 1 < g.ny(); ++j) {
          std::size_t c = g.index(i, j);
          const Mat2& h = H[c].mat();
          Mat2 hinv = H[c].inverse();
          Mat2 lrm = log_unimodular(hinv * H[g.index(i - 1, j)].mat());
          Mat2 lrp = log_unimodular(hinv * H[g.index(i + 1, j)].mat());
          Mat2 lym = log_unimodular(hinv * H[g.index(i, j - 1)].mat());
          Mat2 lyp = log_unimodular(hinv * H[g.index(i, j + 1)].mat());
          Weights3 w2y = d2_weights(y[j] - y[j - 1], y[j + 1] - y[j]);
          Mat2 curv = (w2r.m * lrm + w2r.p * lrp) + (1.0 / r[i]) * (w1r.m * lrm + w1r.p * lrp) +
                      g02 * (w2y.m * lym + w2y.p * lyp);
          out.r[c] = curv - commutator(phi, herm_adjoint(phi, h));
          out.pointwise[c] = h_norm(out.r[c], h);
        }
      },
      8);
  out.norms = detail::reduce(out.pointwise, detail::volumes(g));
  return out;
}

struct TangentResidual {
  ResidualNorms linear;  // dbar_E phi + [beta, Phi]
  ResidualNorms dy;      // |d_y beta| + |d_y phi|
};

// Linearised holomorphicity of Phi along (beta, phi):
//   dbar phi + [beta0, phi] + [beta, Phi] = 0,
// the sign for which gauge directions (dbar gamma + [beta0, gamma], [Phi, gamma])
// are exact.
inline TangentResidual tangent_residual(const HolomorphicData& base, const TangentPair& t,
                                        const TorusGrid& g) {
  if (t.beta.size() != g.size() || t.phi.size() != g.size() || base.phi.size() != g.size() ||
      base.beta.size() != g.size())
    throw DomainError("tangent_residual: size mismatch");
  std::size_t n = g.size();
  std::vector<double> e0(n, -1.0), e1(n, -1.0);
  detail::Diff<Mat2> dphi{g, t.phi}, dbeta{g, t.beta};
  detail::for_nodes(g, [&](int i2, int i3, std::size_t j) {
    if (!g.x_interior(i2, i3)) return;
    std::size_t k = g.index(i2, i3, j);
    Mat2 dbar = dphi.dx2(i2, i3, j) + I_unit * dphi.dx3(i2, i3, j);
    e0[k] = (dbar + commutator(base.beta[k], t.phi[k]) + commutator(t.beta[k], base.phi[k])).norm();
    e1[k] = g.ny() > 1 ? dbeta.dy(i2, i3, j).norm() + dphi.dy(i2, i3, j).norm() : 0.0;
  });
  auto vol = detail::volumes(g);
  return {detail::reduce(e0, vol), detail::reduce(e1, vol)};
}

// --- output -------------------------------------------------------------

inline nlohmann::json grid_json(const TorusGrid& g) {
  return {{"kind", g.periodic() ? "torus" : "chart"}, {"n2", g.n2()}, {"n3", g.n3()},
          {"ny", g.ny()}, {"h2", g.h2()}, {"h3", g.h3()}, {"y_min", g.y().front()},
          {"y_max", g.y().back()}, {"g0", g.g0()}};
}

inline nlohmann::json grid_json(const AxiGrid& g) {
  return {{"kind", "axisymmetric"}, {"nr", g.nr()}, {"ny", g.ny()}, {"r_min", g.r().front()},
          {"r_max", g.r().back()}, {"y_min", g.y().front()}, {"y_max", g.y().back()}};
}

template <class Grid>
nlohmann::json residual_report(const std::string& equation, const ResidualNorms& n,
                               const Grid& g) {
  return {{"equation", equation}, {"sup_norm", n.sup}, {"l2_norm", n.l2}, {"grid", grid_json(g)}};
}

inline void write_field_csv(const std::string& path, const FieldConfig& cfg, const TorusGrid& g) {
  std::ofstream out(path);
  if (!out) throw DomainError("cannot open " + path);
  out.precision(17);
  out << "x2,x3,y";
  for (const char* name : {"a2", "a3", "ay", "phi_z", "phi1"})
    for (const char* e : {"11", "12", "21", "22"}) out << ',' << name << e << "_re," << name << e << "_im";
  out << '\n';
  for (int i2 = 0; i2 < g.n2(); ++i2)
    for (int i3 = 0; i3 < g.n3(); ++i3)
      for (std::size_t j = 0; j < g.ny(); ++j) {
        const auto& t = cfg.nodes[g.index(i2, i3, j)];
        out << g.x2(i2) << ',' << g.x3(i3) << ',' << g.y()[j];
        for (const Mat2* m : {&t.a2, &t.a3, &t.ay, &t.phi_z, &t.phi1})
          for (auto z : m->entries()) out << ',' << z.real() << ',' << z.imag();
        out << '\n';
      }
}

}  // namespace bogo
