#pragma once

#include <cmath>
#include <fstream>
#include <functional>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "errors.hpp"
#include "fields.hpp"
#include "grid.hpp"
#include "models.hpp"
#include "parallel.hpp"

namespace bogo {

struct ScalarProfile {
  std::vector<double> u;  // per AxiGrid node
  int k = 0;

  void validate() const {
    check_charge(k);
    for (double v : u)
      if (!std::isfinite(v) || v <= -300.0) throw DomainError("ScalarProfile: u must be finite and > -300");
  }
};

inline ScalarProfile sample_model(int k, const AxiGrid& g) {
  ScalarProfile p{std::vector<double>(g.size()), k};
  for (std::size_t i = 0; i < g.nr(); ++i)
    for (std::size_t j = 0; j < g.ny(); ++j) p.u[g.index(i, j)] = model_u(k, g.r()[i], g.y()[j]);
  return p;
}

struct ScalarResidual {
  std::vector<double> rho;        // 0 on the boundary
  std::vector<double> pointwise;  // |rho|, -1 on the boundary
  ResidualNorms norms;
};

namespace detail {

// Interior stencil of u_rr + u_r / r + u_yy in difference form
// sum_n w_n (u_n - u_c), which is what the matrix equation produces too.
struct AxiStencil {
  double rm, rp, ym, yp, center;  // center = -(rm + rp + ym + yp)
};

inline AxiStencil axi_stencil(const AxiGrid& g, std::size_t i, std::size_t j) {
  const auto &r = g.r(), &y = g.y();
  Weights3 w2 = d2_weights(r[i] - r[i - 1], r[i + 1] - r[i]);
  Weights3 w1 = d1_weights(r[i] - r[i - 1], r[i + 1] - r[i]);
  Weights3 wy = d2_weights(y[j] - y[j - 1], y[j + 1] - y[j]);
  AxiStencil s{w2.m + w1.m / r[i], w2.p + w1.p / r[i], wy.m, wy.p, 0.0};
  s.center = -(s.rm + s.rp + s.ym + s.yp);
  return s;
}

inline double scalar_rho(const AxiGrid& g, const std::vector<double>& u, int k, std::size_t i,
                         std::size_t j) {
  AxiStencil s = axi_stencil(g, i, j);
  double uc = u[g.index(i, j)];
  double lap = s.rm * (u[g.index(i - 1, j)] - uc) + s.rp * (u[g.index(i + 1, j)] - uc) +
               s.ym * (u[g.index(i, j - 1)] - uc) + s.yp * (u[g.index(i, j + 1)] - uc);
  return lap + std::pow(g.r()[i], 2 * k) * std::exp(-2 * uc);
}

}  // namespace detail

// rho = u_rr + u_r/r + u_yy + r^{2k} e^{-2u} at interior nodes
inline ScalarResidual scalar_residual(const ScalarProfile& p, const AxiGrid& g) {
  if (p.u.size() != g.size()) throw DomainError("scalar_residual: size mismatch");
  ScalarResidual out;
  out.rho.assign(g.size(), 0.0);
  out.pointwise.assign(g.size(), -1.0);
  for (std::size_t i = 1; i + 1 < g.nr(); ++i)
    for (std::size_t j = 1; j + 1 < g.ny(); ++j) {
      std::size_t c = g.index(i, j);
      out.rho[c] = detail::scalar_rho(g, p.u, p.k, i, j);
      out.pointwise[c] = std::abs(out.rho[c]);
    }
  out.norms = detail::reduce(out.pointwise, detail::volumes(g));
  return out;
}

// u'' + e^{-2u} on samples y (not necessarily uniform), interior nodes
inline ResidualNorms ode_residual_u0(const std::vector<double>& y, const std::vector<double>& u) {
  if (y.size() < 5 || u.size() != y.size()) throw DomainError("ode_residual_u0: need >= 5 samples");
  check_axis(y, "ode_residual_u0 samples", 5);
  std::vector<double> pw(y.size(), -1.0);
  for (std::size_t j = 1; j + 1 < y.size(); ++j) {
    Weights3 w = d2_weights(y[j] - y[j - 1], y[j + 1] - y[j]);
    pw[j] = std::abs(w.m * (u[j - 1] - u[j]) + w.p * (u[j + 1] - u[j]) + std::exp(-2 * u[j]));
  }
  return detail::reduce(pw, detail::dual_widths(y));
}

inline ResidualNorms ode_residual_u0(const std::vector<double>& y, double b, double c) {
  std::vector<double> u(y.size());
  for (std::size_t j = 0; j < y.size(); ++j) u[j] = ode_u0(b, c, y[j]);
  return ode_residual_u0(y, u);
}

// --- reduction chain -----------------------------------------------------

struct ChainSamples {
  int n = 64;  // samples per axis; refinement uses 2n - 1
  double lo = 0.1, hi = 4.0;
};

struct ChainLink {
  std::string name;
  double sup_coarse = 0, sup_fine = 0;  // fine sup taken on the coarse nodes
  double ratio = 0;
};

struct ChainReport {
  int k = 0;
  std::vector<ChainLink> links;   // FD links
  double matching_error = 0;      // |v_k - log(sinh((k+1) tau)/(k+1))|, pointwise sup
  double axis_slope_error = 0;    // |dv/dlog sigma - (k+1)| at sigma = hi/lo, b = k+1
  double wrong_b_slope_error = 0; // same for b = k+1 +- 1/2 (must stay large)
  double identity_error = 0;      // k = 1: |u_1 - log(y sqrt(r^2+y^2))|
  double scale_error = 0;         // |v(r,y) - v(lr,ly)|, l in {1/2, 2}
};

namespace detail {

template <class F>
ChainLink chain_link_1d(const std::string& name, const ChainSamples& s, double lo, double hi, F rho) {
  auto eval = [&](int n) {
    auto x = geometric_samples(n, lo, hi);
    std::vector<double> out(n, 0.0);
    for (int j = 1; j + 1 < n; ++j) out[j] = std::abs(rho(x, j));
    return out;
  };
  auto a = eval(s.n), b = eval(2 * s.n - 1);
  ChainLink l{name, 0, 0, 0};
  for (int j = 1; j + 1 < s.n; ++j) {
    l.sup_coarse = std::max(l.sup_coarse, a[j]);
    l.sup_fine = std::max(l.sup_fine, b[2 * j]);
  }
  l.ratio = l.sup_fine > 0 ? l.sup_coarse / l.sup_fine : 0.0;
  return l;
}

inline double v_model(int k, double r, double y) { return model_u(k, r, y) - (k + 1) * std::log(r); }

inline double v_tau(double b, double tau) { return ode_u0(b, 0.0, tau); }

}  // namespace detail

inline ChainReport reduction_chain_check(int k, const ChainSamples& s = {}) {
  check_charge(k);
  if (s.n < 5 || !(s.lo > 0) || !(s.hi > s.lo)) throw DomainError("reduction_chain_check: bad samples");
  ChainReport rep;
  rep.k = k;

  // link 1: Lap v + r^-2 e^{-2v} on the (r, y) grid
  {
    auto eval = [&](int n) {
      AxiGrid g = AxiGrid::geometric(n, s.lo, s.hi, n, s.lo, s.hi);
      std::vector<double> v(g.size()), out(g.size(), 0.0);
      for (std::size_t i = 0; i < g.nr(); ++i)
        for (std::size_t j = 0; j < g.ny(); ++j) v[g.index(i, j)] = detail::v_model(k, g.r()[i], g.y()[j]);
      for (std::size_t i = 1; i + 1 < g.nr(); ++i)
        for (std::size_t j = 1; j + 1 < g.ny(); ++j) {
          double rr = g.r()[i];
          // same stencil as the u-equation with source r^-2 e^{-2v}
          detail::AxiStencil st = detail::axi_stencil(g, i, j);
          double vc = v[g.index(i, j)];
          double lap = st.rm * (v[g.index(i - 1, j)] - vc) + st.rp * (v[g.index(i + 1, j)] - vc) +
                       st.ym * (v[g.index(i, j - 1)] - vc) + st.yp * (v[g.index(i, j + 1)] - vc);
          out[g.index(i, j)] = std::abs(lap + std::exp(-2 * vc) / (rr * rr));
        }
      return std::pair{g, out};
    };
    auto [ga, a] = eval(s.n);
    auto [gb, b] = eval(2 * s.n - 1);
    ChainLink l{"v_substitution", 0, 0, 0};
    for (std::size_t i = 1; i + 1 < ga.nr(); ++i)
      for (std::size_t j = 1; j + 1 < ga.ny(); ++j) {
        l.sup_coarse = std::max(l.sup_coarse, a[ga.index(i, j)]);
        l.sup_fine = std::max(l.sup_fine, b[gb.index(2 * i, 2 * j)]);
      }
    l.ratio = l.sup_fine > 0 ? l.sup_coarse / l.sup_fine : 0.0;
    rep.links.push_back(l);
  }

  // link 2: (sqrt(s^2+1) d_s)^2 v + e^{-2v} = (s^2+1) v'' + s v' + e^{-2v}
  auto v_sigma = [k](double sg) { return detail::v_model(k, 1.0, sg); };
  rep.links.push_back(detail::chain_link_1d("sigma_form", s, s.lo, s.hi, [&](const std::vector<double>& x, int j) {
    Weights3 w2 = d2_weights(x[j] - x[j - 1], x[j + 1] - x[j]);
    Weights3 w1 = d1_weights(x[j] - x[j - 1], x[j + 1] - x[j]);
    double vm = v_sigma(x[j - 1]), vc = v_sigma(x[j]), vp = v_sigma(x[j + 1]);
    double d2 = w2.m * (vm - vc) + w2.p * (vp - vc), d1 = w1.m * (vm - vc) + w1.p * (vp - vc);
    return (x[j] * x[j] + 1) * d2 + x[j] * d1 + std::exp(-2 * vc);
  }));

  // link 3: v'' + e^{-2v} in tau = asinh(sigma), v taken from the model
  auto v_of_tau = [k](double t) { return detail::v_model(k, 1.0, std::sinh(t)); };
  rep.links.push_back(detail::chain_link_1d("tau_form", s, std::asinh(s.lo), std::asinh(s.hi),
                                            [&](const std::vector<double>& x, int j) {
    Weights3 w2 = d2_weights(x[j] - x[j - 1], x[j + 1] - x[j]);
    double vm = v_of_tau(x[j - 1]), vc = v_of_tau(x[j]), vp = v_of_tau(x[j + 1]);
    return w2.m * (vm - vc) + w2.p * (vp - vc) + std::exp(-2 * vc);
  }));

  // link 4: the b = k+1 member of the ODE family is the model, pointwise
  for (double r : geometric_samples(s.n, s.lo, s.hi))
    for (double y : geometric_samples(s.n, s.lo, s.hi)) {
      double tau = std::asinh(y / r);
      double v = detail::v_model(k, r, y);
      rep.matching_error = std::max(rep.matching_error, std::abs(v - detail::v_tau(k + 1, tau)));
      if (k == 1)
        rep.identity_error = std::max(rep.identity_error,
                                      std::abs(model_u(1, r, y) - std::log(y * std::hypot(r, y))));
      for (double l : {0.5, 2.0})
        rep.scale_error = std::max(rep.scale_error, std::abs(v - detail::v_model(k, l * r, l * y)));
    }
  // regularity on the axis r -> 0 (sigma -> infinity) selects b: v ~ b log sigma
  auto slope = [](double b, double sg) {
    double t = std::asinh(sg);
    // dv/dlog(sigma) = b coth(b tau) * sigma / sqrt(1 + sigma^2)
    return b / std::tanh(b * t) * sg / std::sqrt(1 + sg * sg);
  };
  double big = 1e4;
  rep.axis_slope_error = std::abs(slope(k + 1, big) - (k + 1));
  rep.wrong_b_slope_error =
      std::min(std::abs(slope(k + 0.5, big) - (k + 1)), std::abs(slope(k + 1.5, big) - (k + 1)));
  return rep;
}

// --- Newton solver -------------------------------------------------------

enum class LinearSolver { automatic, banded, cg };

struct SolveOptions {
  double tol = 1e-10;
  int max_iter = 50;
  LinearSolver linear = LinearSolver::automatic;
  std::size_t banded_limit = 256 * 256;  // nodes
  double cg_rtol = 1e-13;
  std::optional<std::vector<double>> initial;  // whole-grid guess; boundary ignored
};

struct IterLog {
  int iter;
  double residual;
  double step;  // damping factor of the accepted step
};

struct SolveResult {
  ScalarProfile profile;
  std::vector<IterLog> log;
  bool converged = false;
  double effective_tol = 0;  // tol, raised to the round-off floor of the stencil
};

namespace detail {

// Band LU without pivoting for the (negative definite) Newton matrix.
class BandSolver {
 public:
  BandSolver(std::size_t n, std::size_t bw) : n_(n), b_(bw), a_(n * (2 * bw + 1), 0.0) {}
  double& at(std::size_t i, std::size_t j) { return a_[i * (2 * b_ + 1) + (j + b_ - i)]; }
  void factor() {
    for (std::size_t k = 0; k < n_; ++k) {
      double piv = at(k, k);
      if (piv == 0.0) throw NonConvergence("banded factorisation: zero pivot");
      std::size_t hi = std::min(n_ - 1, k + b_);
      for (std::size_t i = k + 1; i <= hi; ++i) {
        double& lik = at(i, k);
        if (lik == 0.0) continue;
        lik /= piv;
        for (std::size_t j = k + 1; j <= hi; ++j) at(i, j) -= lik * at(k, j);
      }
    }
  }
  void solve(std::vector<double>& x) {
    for (std::size_t i = 0; i < n_; ++i) {
      std::size_t lo = i > b_ ? i - b_ : 0;
      for (std::size_t j = lo; j < i; ++j) x[i] -= at(i, j) * x[j];
    }
    for (std::size_t i = n_; i-- > 0;) {
      std::size_t hi = std::min(n_ - 1, i + b_);
      for (std::size_t j = i + 1; j <= hi; ++j) x[i] -= at(i, j) * x[j];
      x[i] /= at(i, i);
    }
  }

 private:
  std::size_t n_, b_;
  std::vector<double> a_;
};

struct NewtonSystem {
  const AxiGrid& g;
  std::size_t mr, my;  // interior sizes
  std::vector<AxiStencil> st;  // per interior unknown
  std::vector<double> diag_src;  // -2 r^2k e^{-2u}

  NewtonSystem(const AxiGrid& grid) : g(grid), mr(grid.nr() - 2), my(grid.ny() - 2) {
    st.resize(mr * my);
    for (std::size_t i = 0; i < mr; ++i)
      for (std::size_t j = 0; j < my; ++j) st[i * my + j] = axi_stencil(g, i + 1, j + 1);
  }
  std::size_t n() const { return mr * my; }
  std::size_t node(std::size_t q) const { return g.index(q / my + 1, q % my + 1); }
};

// Jacobian J = L + diag(src). Solves J x = rhs.
inline std::vector<double> solve_banded(const NewtonSystem& s, const std::vector<double>& rhs) {
  BandSolver b(s.n(), s.my);
  for (std::size_t q = 0; q < s.n(); ++q) {
    std::size_t i = q / s.my, j = q % s.my;
    const AxiStencil& a = s.st[q];
    b.at(q, q) = a.center + s.diag_src[q];
    if (i > 0) b.at(q, q - s.my) = a.rm;
    if (i + 1 < s.mr) b.at(q, q + s.my) = a.rp;
    if (j > 0) b.at(q, q - 1) = a.ym;
    if (j + 1 < s.my) b.at(q, q + 1) = a.yp;
  }
  b.factor();
  std::vector<double> x = rhs;
  b.solve(x);
  return x;
}

// Diagonal W with W J symmetric (J is a tensor sum of tridiagonals plus a
// diagonal), then Jacobi-preconditioned CG on -W J x = -W rhs.
inline std::vector<double> solve_cg(const NewtonSystem& s, const std::vector<double>& rhs, double rtol) {
  std::size_t n = s.n();
  std::vector<double> wr(s.mr, 1.0), wy(s.my, 1.0);
  for (std::size_t i = 0; i + 1 < s.mr; ++i) {
    double up = s.st[i * s.my].rp, lo = s.st[(i + 1) * s.my].rm;
    if (!(up > 0) || !(lo > 0)) throw NonConvergence("cg: r-stencil not symmetrisable (grid too coarse near the axis)");
    wr[i + 1] = wr[i] * up / lo;
  }
  for (std::size_t j = 0; j + 1 < s.my; ++j) wy[j + 1] = wy[j] * s.st[j].yp / s.st[j + 1].ym;
  auto w = [&](std::size_t q) { return wr[q / s.my] * wy[q % s.my]; };
  auto apply = [&](const std::vector<double>& x, std::vector<double>& out) {
    parallel_for(n, [&](std::size_t q) {
      std::size_t i = q / s.my, j = q % s.my;
      const AxiStencil& a = s.st[q];
      double v = (a.center + s.diag_src[q]) * x[q];
      if (i > 0) v += a.rm * x[q - s.my];
      if (i + 1 < s.mr) v += a.rp * x[q + s.my];
      if (j > 0) v += a.ym * x[q - 1];
      if (j + 1 < s.my) v += a.yp * x[q + 1];
      out[q] = -w(q) * v;
    });
  };
  std::vector<double> b(n), dinv(n), x(n, 0.0), r(n), z(n), p(n), ap(n);
  for (std::size_t q = 0; q < n; ++q) {
    b[q] = -w(q) * rhs[q];
    dinv[q] = 1.0 / (-w(q) * (s.st[q].center + s.diag_src[q]));
  }
  auto dot = [&](const std::vector<double>& a, const std::vector<double>& c) {
    double t = 0;
    for (std::size_t q = 0; q < n; ++q) t += a[q] * c[q];
    return t;
  };
  r = b;
  double bnorm = std::sqrt(dot(b, b));
  if (bnorm == 0) return x;
  for (std::size_t q = 0; q < n; ++q) z[q] = dinv[q] * r[q];
  p = z;
  double rz = dot(r, z);
  for (std::size_t it = 0; it < 20 * n + 100; ++it) {
    apply(p, ap);
    double alpha = rz / dot(p, ap);
    for (std::size_t q = 0; q < n; ++q) {
      x[q] += alpha * p[q];
      r[q] -= alpha * ap[q];
    }
    if (std::sqrt(dot(r, r)) <= rtol * bnorm) return x;
    for (std::size_t q = 0; q < n; ++q) z[q] = dinv[q] * r[q];
    double rz2 = dot(r, z);
    double beta = rz2 / rz;
    rz = rz2;
    for (std::size_t q = 0; q < n; ++q) p[q] = z[q] + beta * p[q];
  }
  return x;  // Newton's line search copes with an inexact step
}

}  // namespace detail

// Newton's method for Lap u + r^{2k} e^{-2u} = 0 with Dirichlet data taken
// from `boundary` on the four edges of the grid.
inline SolveResult solve_scalar(int k, const AxiGrid& g, const std::vector<double>& boundary,
                                const SolveOptions& opt = {}) {
  check_charge(k);
  if (boundary.size() != g.size()) throw DomainError("solve_scalar: boundary size mismatch");
  for (std::size_t i = 0; i < g.nr(); ++i)
    for (std::size_t j = 0; j < g.ny(); ++j)
      if (g.is_boundary(i, j) && !std::isfinite(boundary[g.index(i, j)]))
        throw DomainError("solve_scalar: non-finite boundary data");

  SolveResult res;
  res.profile.k = k;
  auto& u = res.profile.u;
  if (opt.initial) {
    if (opt.initial->size() != g.size()) throw DomainError("solve_scalar: initial guess size mismatch");
    u = *opt.initial;
  } else {
    // linear in y between the bottom and top traces
    u.assign(g.size(), 0.0);
    const auto& y = g.y();
    for (std::size_t i = 0; i < g.nr(); ++i)
      for (std::size_t j = 0; j < g.ny(); ++j) {
        double t = (y[j] - y.front()) / (y.back() - y.front());
        u[g.index(i, j)] = (1 - t) * boundary[g.index(i, 0)] + t * boundary[g.index(i, g.ny() - 1)];
      }
  }
  for (std::size_t i = 0; i < g.nr(); ++i)
    for (std::size_t j = 0; j < g.ny(); ++j)
      if (g.is_boundary(i, j)) u[g.index(i, j)] = boundary[g.index(i, j)];

  detail::NewtonSystem sys(g);
  std::size_t n = sys.n();
  auto residual = [&](const std::vector<double>& v, std::vector<double>& f) {
    f.resize(n);
    parallel_for(n, [&](std::size_t q) {
      std::size_t c = sys.node(q);
      f[q] = detail::scalar_rho(g, v, k, c / g.ny(), c % g.ny());
    });
    double m = 0;
    for (double x : f) m = std::max(m, std::abs(x));
    return m;
  };
  bool banded = opt.linear == LinearSolver::banded ||
                (opt.linear == LinearSolver::automatic && g.size() <= opt.banded_limit);

  // u is only known to eps |u|, so rho carries an error of about
  // eps |u| sum |w|; asking for less than that cannot succeed
  double wmax = 0, umax = 1;
  for (auto& a : sys.st) wmax = std::max(wmax, -a.center);
  for (std::size_t q = 0; q < g.size(); ++q)
    if (g.is_boundary(q / g.ny(), q % g.ny())) umax = std::max(umax, std::abs(u[q]));
  double floor = std::numeric_limits<double>::epsilon() * wmax * umax;
  res.effective_tol = std::max(opt.tol, 2.0 * floor);

  std::vector<double> f, trial(g.size()), ftrial;
  double fn = residual(u, f);
  if (!std::isfinite(fn)) throw NonConvergence("solve_scalar: initial residual not finite");
  res.log.push_back({0, fn, 0.0});
  for (int it = 1; fn >= res.effective_tol; ++it) {
    if (it > opt.max_iter)
      throw NonConvergence("solve_scalar: no convergence after " + std::to_string(opt.max_iter) +
                           " iterations (best residual " + std::to_string(fn) + ")");
    sys.diag_src.resize(n);
    for (std::size_t q = 0; q < n; ++q) {
      std::size_t c = sys.node(q);
      sys.diag_src[q] = -2.0 * std::pow(g.r()[c / g.ny()], 2 * k) * std::exp(-2 * u[c]);
    }
    std::vector<double> rhs(n);
    for (std::size_t q = 0; q < n; ++q) rhs[q] = -f[q];
    std::vector<double> dx = banded ? detail::solve_banded(sys, rhs) : detail::solve_cg(sys, rhs, opt.cg_rtol);
    double step = 1.0, ft = 0;
    bool stalled = false;
    for (int halving = 0;; ++halving) {
      trial = u;
      for (std::size_t q = 0; q < n; ++q) trial[sys.node(q)] += step * dx[q];
      ft = residual(trial, ftrial);
      if (std::isfinite(ft) && ft < fn) break;
      if (halving == 40) {
        if (fn < 32.0 * floor) {  // noise level of the residual itself
          stalled = true;
          break;
        }
        throw NonConvergence("solve_scalar: line search stalled at residual " + std::to_string(fn));
      }
      step *= 0.5;
    }
    if (stalled) {
      res.effective_tol = fn;
      break;
    }
    u.swap(trial);
    f.swap(ftrial);
    fn = ft;
    res.log.push_back({it, fn, step});
  }
  res.converged = true;
  return res;
}

// Dirichlet data from the closed form (only boundary entries matter).
inline std::vector<double> model_boundary(int k, const AxiGrid& g) { return sample_model(k, g).u; }

inline void write_iteration_log(const std::string& path, const std::vector<IterLog>& log) {
  std::ofstream out(path);
  if (!out) throw DomainError("cannot open " + path);
  for (auto& l : log)
    out << nlohmann::json{{"iter", l.iter}, {"residual", l.residual}, {"step", l.step}}.dump() << '\n';
}

inline void write_profile_csv(const std::string& path, const ScalarProfile& p, const AxiGrid& g) {
  std::ofstream out(path);
  if (!out) throw DomainError("cannot open " + path);
  out.precision(17);
  out << "r,y,u\n";
  for (std::size_t i = 0; i < g.nr(); ++i)
    for (std::size_t j = 0; j < g.ny(); ++j)
      out << g.r()[i] << ',' << g.y()[j] << ',' << p.u[g.index(i, j)] << '\n';
}

}  // namespace bogo
