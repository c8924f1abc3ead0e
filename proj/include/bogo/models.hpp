#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <functional>
#include <limits>
#include <map>
#include <optional>
#include <vector>

#include "algebra.hpp"
#include "errors.hpp"
#include "jet.hpp"

namespace bogo {

inline void check_charge(int k) {
  if (k < 0) throw DomainError("charge k must be nonnegative");
}

inline double binomial(int n, int j) {
  double c = 1.0;
  for (int i = 1; i <= j; ++i) c = c * (n - j + i) / i;
  return c;
}

// e^{u_k} = ((R+y)^n - (R-y)^n) / (2n), n = k+1, R = |(r,y)|, written as the
// sum over odd j of C(n,j) R^(n-j) y^j / n so nothing cancels.
template <class T>
T model_expu(int k, T r, T y) {
  using std::sqrt;
  int n = k + 1;
  T R = sqrt(r * r + y * y);
  T s = T(0.0);
  T yj = y;            // y^j
  T y2 = y * y;
  for (int j = 1; j <= n; j += 2) {
    T p = T(1.0);
    for (int e = 0; e < n - j; ++e) p = p * R;
    s += T(binomial(n, j)) * p * yj;
    yj = yj * y2;
  }
  return s / T(double(n));
}

inline double model_u(int k, double r, double y) {
  check_charge(k);
  if (r < 0 || y < 0 || !std::isfinite(r) || !std::isfinite(y))
    throw DomainError("model_u: need r >= 0, y >= 0");
  if (r == 0 && y == 0) throw DomainError("model_u: singular at r = y = 0");
  if (y == 0) return -std::numeric_limits<double>::infinity();
  return std::log(model_expu<double>(k, r, y));
}

struct ModelDerivs {
  double u, ur, uy, urr, uyy;
  double ur_over_r;  // finite on the axis
};

inline ModelDerivs model_u_derivs(int k, double r, double y) {
  check_charge(k);
  if (!(y > 0) || r < 0) throw DomainError("model_u_derivs: need r >= 0, y > 0");
  Jet jr = log(model_expu<Jet>(k, Jet::variable(r), Jet(y)));
  Jet jy = log(model_expu<Jet>(k, Jet(r), Jet::variable(y)));
  int n = k + 1;
  double R = std::hypot(r, y), s = 0.0, q = 0.0;
  for (int j = 1; j <= n; j += 2) {
    s += binomial(n, j) * std::pow(R, n - j) * std::pow(y, j);
    q += binomial(n, j) * (n - j) * std::pow(R, n - j - 2) * std::pow(y, j);
  }
  return {jr.v, jr.d, jy.d, jr.dd, jy.dd, q / s};
}

// log(sinh(b(y+c))/b), with the b -> 0 limit log(y+c)
inline double ode_u0(double b, double c, double y) {
  double x = y + c;
  if (!(x > 0)) throw DomainError("ode_u0: need y + c > 0");
  b = std::abs(b);
  if (b == 0) return std::log(x);
  double t = b * x;
  if (t > 20) return t + std::log1p(-std::exp(-2 * t)) - std::log(2.0) - std::log(b);
  double corr = t < 1e-4 ? t * t / 6.0 - t * t * t * t / 180.0 : std::log(std::sinh(t) / t);
  return std::log(x) + corr;
}

inline Mat2 model_T() { return Mat2::diag(cplx(0, 0.5), cplx(0, -0.5)); }

// Unitary triple of the charge-k model with the knot at p, in the gauge
// D -> g D g^-1 with g = diag(e^{-u/2}, e^{u/2}):
//   A = -r u_r T dtheta, phi_z = e^{-u} (z-p)^k e12, phi1 = u_y T.
struct ModelSampler {
  int k = 0;
  cplx p = 0.0;

  UnitaryTriple operator()(double x2, double x3, double y) const {
    if (!(y > 0)) throw DomainError("model triple: singular on y = 0");
    double a = x2 - p.real(), b = x3 - p.imag();
    double r = std::hypot(a, b);
    ModelDerivs d = model_u_derivs(k, r, y);
    Mat2 t = model_T();
    cplx zk = std::pow(cplx(a, b), k);
    return {(b * d.ur_over_r) * t, (-a * d.ur_over_r) * t, Mat2::zero(),
            (std::exp(-d.u) * zk) * Mat2::e12(), d.uy * t};
  }
};

inline ModelSampler model_unitary_triple(int k, cplx p = 0.0) {
  check_charge(k);
  return {k, p};
}

using FieldSampler = std::function<UnitaryTriple(double, double, double)>;

struct FieldSample {
  double x2, x3, y;
  UnitaryTriple f;
};

inline double triple_distance(const UnitaryTriple& a, const UnitaryTriple& b) {
  double s = 0;
  for (auto [x, z] : {std::pair{&a.a2, &b.a2}, {&a.a3, &b.a3}, {&a.ay, &b.ay},
                      {&a.phi_z, &b.phi_z}, {&a.phi1, &b.phi1}}) {
    double n = (*x - *z).norm();
    s += n * n;
  }
  return std::sqrt(s);
}

// Points on half circles of radius rho about (p, 0): rho geometric with
// per_decade samples per decade, psi = atan(r/y) uniform in (0, pi/2).
inline std::vector<std::array<double, 3>> knot_points(cplx p, double rho_min, double rho_max,
                                                      int per_decade, int n_psi, int n_theta = 3) {
  if (!(rho_min > 0) || !(rho_max > rho_min)) throw DomainError("knot_points: bad rho range");
  int n_rho = std::max(2, int(std::ceil(per_decade * std::log10(rho_max / rho_min))) + 1);
  std::vector<std::array<double, 3>> pts;
  for (int i = 0; i < n_rho; ++i) {
    double rho = rho_min * std::pow(rho_max / rho_min, double(i) / (n_rho - 1));
    for (int j = 0; j < n_psi; ++j) {
      double psi = 0.5 * M_PI * (j + 0.5) / n_psi;
      for (int t = 0; t < n_theta; ++t) {
        double th = 2 * M_PI * (t + 0.25) / n_theta;
        double r = rho * std::sin(psi);
        pts.push_back({p.real() + r * std::cos(th), p.imag() + r * std::sin(th), rho * std::cos(psi)});
      }
    }
  }
  return pts;
}

inline std::vector<FieldSample> sample_field(const FieldSampler& f,
                                             const std::vector<std::array<double, 3>>& pts) {
  std::vector<FieldSample> out;
  out.reserve(pts.size());
  for (auto& q : pts) out.push_back({q[0], q[1], q[2], f(q[0], q[1], q[2])});
  return out;
}

struct DeviationReport {
  double sup_weighted = 0;  // sup |cfg - model| rho^(1-eps) psi^(1-eps)
  double constant = 0;      // C used for the verdict
  double shell_slope = 0;   // d log(shell max) / d log rho
  bool bounded = true;
  std::size_t samples = 0;
};

// Weighted deviation from the charge-k model near the knot p. Bounded means
// sup <= C and the shell maxima do not grow toward the knot (slope >= -0.05).
inline DeviationReport nahm_pole_deviation(const std::vector<FieldSample>& cfg, int k, cplx p,
                                           double eps, std::optional<double> C = std::nullopt,
                                           double slope_tol = 0.05) {
  check_charge(k);
  if (!(eps > 0 && eps < 1)) throw DomainError("nahm_pole_deviation: eps must lie in (0,1)");
  if (cfg.empty()) throw GridTooCoarse("nahm_pole_deviation: no samples");
  ModelSampler model{k, p};
  std::vector<double> lr(cfg.size()), w(cfg.size());
  for (std::size_t i = 0; i < cfg.size(); ++i) {
    const auto& s = cfg[i];
    double r = std::hypot(s.x2 - p.real(), s.x3 - p.imag());
    double rho = std::hypot(r, s.y), psi = std::atan2(r, s.y);
    if (!(rho > 0) || !(psi > 0)) throw DomainError("nahm_pole_deviation: sample on the knot axis");
    double dev = triple_distance(s.f, model(s.x2, s.x3, s.y));
    w[i] = dev * std::pow(rho * psi, 1 - eps);
    lr[i] = std::log10(rho);
  }
  auto [lo_it, hi_it] = std::minmax_element(lr.begin(), lr.end());
  double lo = *lo_it, hi = *hi_it;
  // sampling density: every full decade needs 8 distinct radii
  std::map<long, double> radii;
  for (double v : lr) radii[std::lround(v * 1e9)] = v;
  double span = hi - lo;
  if (span < 1.0) {
    if (radii.size() < 8) throw GridTooCoarse("fewer than 8 radii near the knot");
  } else {
    for (double d = lo; d + 1.0 <= hi + 1e-12; d += 1.0) {
      int count = 0;
      for (auto& [key, v] : radii) count += (v >= d - 1e-12 && v <= d + 1.0 + 1e-12);
      if (count < 8) throw GridTooCoarse("fewer than 8 samples per decade in rho near the knot");
    }
  }

  DeviationReport rep;
  rep.samples = cfg.size();
  rep.sup_weighted = *std::max_element(w.begin(), w.end());
  if (C) {
    rep.constant = *C;
  } else {
    std::vector<double> mid;
    for (std::size_t i = 0; i < w.size(); ++i)
      if (lr[i] >= lo + 0.25 * span && lr[i] <= hi - 0.25 * span) mid.push_back(w[i]);
    if (mid.empty()) mid = w;
    std::nth_element(mid.begin(), mid.begin() + mid.size() / 2, mid.end());
    rep.constant = 10.0 * mid[mid.size() / 2];
  }
  // shells of a quarter decade
  std::map<long, double> shell;
  for (std::size_t i = 0; i < w.size(); ++i) {
    long b = long(std::floor((lr[i] - lo) * 4.0));
    shell[b] = std::max(shell[b], w[i]);
  }
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  int n = 0;
  for (auto& [b, m] : shell) {
    if (!(m > 0)) continue;
    double x = lo + (b + 0.5) / 4.0, yv = std::log10(m);
    sx += x; sy += yv; sxx += x * x; sxy += x * yv; ++n;
  }
  if (n >= 2 && sxx * n - sx * sx > 0) rep.shell_slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
  rep.bounded = rep.sup_weighted <= rep.constant && rep.shell_slope >= -slope_tol;
  return rep;
}

}  // namespace bogo
