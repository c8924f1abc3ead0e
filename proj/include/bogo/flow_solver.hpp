#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <functional>
#include <limits>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "errors.hpp"
#include "fields.hpp"
#include "scalar_solver.hpp"

namespace bogo {

struct MetricField {
  std::vector<HermMetric> h;

  std::vector<Mat2> matrices() const { return metric_matrices(h); }
};

// H = diag(e^-u, e^u) on a TorusGrid with Phi = z^k e12, both sampled.
inline MetricField model_metric(int k, const TorusGrid& g, cplx p = 0.0) {
  MetricField m;
  m.h.resize(g.size());
  for (int i2 = 0; i2 < g.n2(); ++i2)
    for (int i3 = 0; i3 < g.n3(); ++i3)
      for (std::size_t j = 0; j < g.ny(); ++j) {
        double r = std::abs(cplx(g.x2(i2), g.x3(i3)) - p);
        m.h[g.index(i2, i3, j)] = HermMetric::diag(std::exp(-model_u(k, r, g.y()[j])));
      }
  return m;
}

inline std::vector<Mat2> model_higgs(int k, const TorusGrid& g, cplx p = 0.0) {
  std::vector<Mat2> phi(g.size());
  for (int i2 = 0; i2 < g.n2(); ++i2)
    for (int i3 = 0; i3 < g.n3(); ++i3)
      for (std::size_t j = 0; j < g.ny(); ++j)
        phi[g.index(i2, i3, j)] = std::pow(cplx(g.x2(i2), g.x3(i3)) - p, k) * Mat2::e12();
  return phi;
}

struct FlowParams {
  double dt = 0;  // 0: 0.9 of the explicit stability bound
  double tol = 1e-6;
  long max_steps = 200000;
  int max_halvings = 20;
  int monotone_after = 10;       // steps before the L2 monotonicity check
  double monotone_slack = 0.01;  // relative
  // Dirichlet traces; taken from H0 when absent
  std::optional<MetricField> boundary;
  std::function<void(long, double, double, double)> on_step;  // step, dt, sup, l2
};

struct FlowRecord {
  long step;
  double dt, sup, l2;
};

struct FlowResult {
  MetricField h;
  std::vector<FlowRecord> history;  // one entry per accepted state, starting at step 0
  bool converged = false;
  long steps = 0;
  long rejected = 0;
  double max_det_error = 0;  // |det H - 1| over all accepted states
  double max_herm_error = 0; // |H - H^dagger|, exact by construction
};

namespace detail {

// hermitian part, unit determinant; false if not positive definite
inline bool project_metric(Mat2& m) {
  double a = m.a11().real(), d = m.a22().real();
  cplx b = 0.5 * (m.a12() + std::conj(m.a21()));
  double det = a * d - std::norm(b);
  if (!(a > 0) || !(d > 0) || !(det > 0) || !std::isfinite(det)) return false;
  double s = 1.0 / std::sqrt(det);
  m = Mat2(Mat2::Unchecked{}, a * s, b * s, std::conj(b) * s, d * s);
  return true;
}

inline bool fixed_node(const TorusGrid& g, int i2, int i3, std::size_t j) {
  return j == 0 || j + 1 == g.ny() || !g.x_interior(i2, i3);
}

}  // namespace detail

// Largest stable explicit step for H^-1 dH/dt = R(H): the discrete Laplacian
// spectrum plus the linearised [Phi, Phi^*] term.
inline double stable_dt(const std::vector<Mat2>& h, const std::vector<Mat2>& phi, const TorusGrid& g) {
  double lam = 0;
  if (g.n2() > 1 || !g.periodic()) lam += 4.0 / (g.h2() * g.h2());
  if (g.n3() > 1 || !g.periodic()) lam += 4.0 / (g.h3() * g.h3());
  double ymin = std::numeric_limits<double>::infinity();
  for (std::size_t j = 1; j + 1 < g.ny(); ++j)
    ymin = std::min(ymin, (g.y()[j] - g.y()[j - 1]) * (g.y()[j + 1] - g.y()[j]));
  if (std::isfinite(ymin)) lam += 4.0 * g.g0() * g.g0() / ymin;
  double src = 0;
  for (std::size_t q = 0; q < h.size(); ++q) src = std::max(src, std::pow(h_norm(phi[q], h[q]), 2));
  lam += 4.0 * src;
  return 2.0 / lam;
}

// Explicit metric flow H^-1 dH/dt = R(H) toward R = 0 with H fixed on the
// y ends (and on the rim of a chart). Each step multiplies by exp(dt R0),
// R0 the traceless part, then restores hermiticity and det H = 1 exactly.
inline FlowResult flow_moment_map(const MetricField& h0, const std::vector<Mat2>& phi, const TorusGrid& g,
                                  const FlowParams& p = {}) {
  if (h0.h.size() != g.size() || phi.size() != g.size()) throw DomainError("flow_moment_map: size mismatch");
  for (auto& m : phi)
    if (!m.is_traceless(1e-12 * (1 + m.max_abs()))) throw DomainError("flow_moment_map: Phi must be traceless");
  if (g.ny() < 3) throw DomainError("flow_moment_map: need at least 3 y-samples");

  std::vector<Mat2> h = h0.matrices();
  if (p.boundary) {
    if (p.boundary->h.size() != g.size()) throw DomainError("flow_moment_map: boundary size mismatch");
    for (int i2 = 0; i2 < g.n2(); ++i2)
      for (int i3 = 0; i3 < g.n3(); ++i3)
        for (std::size_t j = 0; j < g.ny(); ++j)
          if (detail::fixed_node(g, i2, i3, j)) h[g.index(i2, i3, j)] = p.boundary->h[g.index(i2, i3, j)].mat();
  }
  double dt = p.dt > 0 ? p.dt : 0.9 * stable_dt(h, phi, g);
  auto vol = detail::volumes(g);
  std::vector<std::size_t> free_nodes;
  for (int i2 = 0; i2 < g.n2(); ++i2)
    for (int i3 = 0; i3 < g.n3(); ++i3)
      for (std::size_t j = 0; j < g.ny(); ++j)
        if (!detail::fixed_node(g, i2, i3, j)) free_nodes.push_back(g.index(i2, i3, j));

  std::vector<Mat2> r, r_trial, h_trial;
  auto norms = [&](const std::vector<Mat2>& hh, const std::vector<Mat2>& rr) {
    std::vector<double> pw(g.size(), -1.0);
    for (std::size_t q : free_nodes) pw[q] = h_norm(rr[q], hh[q]);
    return detail::reduce(pw, vol);
  };

  FlowResult res;
  auto audit = [&](const std::vector<Mat2>& hh) {
    for (auto& m : hh) {
      res.max_det_error = std::max(res.max_det_error, std::abs(m.det() - 1.0));
      res.max_herm_error = std::max(res.max_herm_error, (m - m.adjoint()).max_abs());
    }
  };
  audit(h);
  moment_map_field(h, phi, g, r);
  ResidualNorms nr = norms(h, r);
  res.history.push_back({0, dt, nr.sup, nr.l2});
  if (p.on_step) p.on_step(0, dt, nr.sup, nr.l2);

  long step = 0;
  while (nr.sup >= p.tol && step < p.max_steps) {
    int halvings = 0;
    for (;;) {
      h_trial = h;
      bool positive = true;
      for (std::size_t q : free_nodes) {
        Mat2 m = h[q] * exp_traceless(dt * r[q].traceless_part());
        if (!detail::project_metric(m)) {
          positive = false;
          break;
        }
        h_trial[q] = m;
      }
      ResidualNorms nt;
      if (positive) {
        moment_map_field(h_trial, phi, g, r_trial);
        nt = norms(h_trial, r_trial);
      }
      bool monotone = step < p.monotone_after || nt.l2 <= (1 + p.monotone_slack) * nr.l2;
      if (positive && std::isfinite(nt.sup) && monotone) {
        h.swap(h_trial);
        r.swap(r_trial);
        nr = nt;
        break;
      }
      ++res.rejected;
      if (++halvings > p.max_halvings)
        throw NonConvergence(std::string("flow_moment_map: step rejected ") + std::to_string(p.max_halvings) +
                             " times (" + (positive ? "residual grew" : "positivity lost") + ")");
      dt *= 0.5;
    }
    ++step;
    audit(h);
    res.history.push_back({step, dt, nr.sup, nr.l2});
    if (p.on_step) p.on_step(step, dt, nr.sup, nr.l2);
  }
  res.steps = step;
  res.converged = nr.sup < p.tol;
  res.h.h.resize(g.size());
  for (std::size_t q = 0; q < g.size(); ++q) res.h.h[q] = HermMetric(h[q]);
  return res;
}

struct DiagonalCheck {
  double discrepancy = 0;  // sup |R(diag(e^-u, e^u)) - diag(-rho, rho)|
  double scalar_sup = 0, matrix_sup = 0;
};

// The matrix residual of the diagonal ansatz against the scalar residual on
// the same axisymmetric grid.
inline DiagonalCheck diagonal_reduction_check(const ScalarProfile& p, const AxiGrid& g) {
  if (p.u.size() != g.size()) throw DomainError("diagonal_reduction_check: size mismatch");
  for (double v : p.u)
    if (!std::isfinite(v)) throw DomainError("diagonal_reduction_check: u must be finite");
  std::vector<HermMetric> h(g.size());
  for (std::size_t q = 0; q < g.size(); ++q) {
    double e = std::exp(p.u[q]);
    h[q] = HermMetric(Mat2::diag(1.0 / e, e));
  }
  MomentMapResidual m = moment_map_residual(h, p.k, g);
  ScalarResidual s = scalar_residual(p, g);
  DiagonalCheck out{0, s.norms.sup, m.norms.sup};
  for (std::size_t q = 0; q < g.size(); ++q)
    if (s.pointwise[q] >= 0)
      out.discrepancy = std::max(out.discrepancy, (m.r[q] - Mat2::diag(-s.rho[q], s.rho[q])).max_abs());
  return out;
}

// --- checkpoints ---------------------------------------------------------
// Layout (little-endian): "BOGOCKPT", u32 version = 1, u32 n2, u32 n3,
// u32 ny, u8 periodic, 7 zero bytes, f64 x2_0, x3_0, h2, h3, g0, then ny f64
// y-samples, then for each node in index order (i2, i3, j) the four entries
// h11 h12 h21 h22 as (re, im) f64 pairs.

namespace detail {

inline bool little_endian() {
  std::uint16_t x = 1;
  unsigned char c;
  std::memcpy(&c, &x, 1);
  return c == 1;
}

template <class T>
void put(std::ostream& o, T v) {
  unsigned char b[sizeof(T)];
  std::memcpy(b, &v, sizeof(T));
  if (!little_endian()) std::reverse(b, b + sizeof(T));
  o.write(reinterpret_cast<char*>(b), sizeof(T));
}

template <class T>
T get(std::istream& in) {
  unsigned char b[sizeof(T)];
  if (!in.read(reinterpret_cast<char*>(b), sizeof(T))) throw DomainError("checkpoint: truncated file");
  if (!little_endian()) std::reverse(b, b + sizeof(T));
  T v;
  std::memcpy(&v, b, sizeof(T));
  return v;
}

}  // namespace detail

inline void write_checkpoint(const std::string& path, const MetricField& m, const TorusGrid& g) {
  if (m.h.size() != g.size()) throw DomainError("write_checkpoint: size mismatch");
  std::ofstream o(path, std::ios::binary);
  if (!o) throw DomainError("cannot open " + path);
  o.write("BOGOCKPT", 8);
  detail::put<std::uint32_t>(o, 1);
  detail::put<std::uint32_t>(o, std::uint32_t(g.n2()));
  detail::put<std::uint32_t>(o, std::uint32_t(g.n3()));
  detail::put<std::uint32_t>(o, std::uint32_t(g.ny()));
  detail::put<std::uint8_t>(o, g.periodic() ? 1 : 0);
  for (int i = 0; i < 7; ++i) detail::put<std::uint8_t>(o, 0);
  for (double v : {g.x2(0), g.x3(0), g.h2(), g.h3(), g.g0()}) detail::put<double>(o, v);
  for (double v : g.y()) detail::put<double>(o, v);
  for (auto& h : m.h)
    for (auto z : h.mat().entries()) {
      detail::put<double>(o, z.real());
      detail::put<double>(o, z.imag());
    }
}

inline std::pair<TorusGrid, MetricField> read_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DomainError("cannot open " + path);
  char magic[8];
  if (!in.read(magic, 8) || std::memcmp(magic, "BOGOCKPT", 8) != 0) throw DomainError("checkpoint: bad magic");
  if (detail::get<std::uint32_t>(in) != 1) throw DomainError("checkpoint: unsupported version");
  int n2 = int(detail::get<std::uint32_t>(in)), n3 = int(detail::get<std::uint32_t>(in));
  std::size_t ny = detail::get<std::uint32_t>(in);
  bool periodic = detail::get<std::uint8_t>(in) != 0;
  for (int i = 0; i < 7; ++i) detail::get<std::uint8_t>(in);
  double x20 = detail::get<double>(in), x30 = detail::get<double>(in);
  double h2 = detail::get<double>(in), h3 = detail::get<double>(in), g0 = detail::get<double>(in);
  std::vector<double> y(ny);
  for (auto& v : y) v = detail::get<double>(in);
  TorusGrid g = periodic ? TorusGrid::torus(n2, n3, h2 * n2, h3 * n3, y, g0)
                         : TorusGrid::chart(n2, n3, x20, x20 + h2 * (n2 - 1), x30, x30 + h3 * (n3 - 1), y, g0);
  MetricField m;
  m.h.resize(g.size());
  for (auto& h : m.h) {
    cplx e[4];
    for (auto& z : e) {
      double re = detail::get<double>(in);
      z = {re, detail::get<double>(in)};
    }
    h = HermMetric(Mat2(e[0], e[1], e[2], e[3]));
  }
  return {g, m};
}

inline void write_flow_history(const std::string& path, const std::vector<FlowRecord>& hist) {
  std::ofstream out(path);
  if (!out) throw DomainError("cannot open " + path);
  for (auto& r : hist)
    out << nlohmann::json{{"step", r.step}, {"dt", r.dt}, {"sup", r.sup}, {"l2", r.l2}}.dump() << '\n';
}

}  // namespace bogo
