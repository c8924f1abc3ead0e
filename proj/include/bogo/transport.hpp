#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <fstream>
#include <functional>
#include <limits>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "algebra.hpp"
#include "errors.hpp"
#include "models.hpp"

namespace bogo {

using Section = std::array<cplx, 2>;

// Transported sections against a decreasing fitting variable (y or psi).
struct SectionTrace {
  std::string variable = "y";
  std::vector<double> x;
  std::vector<Section> s;

  // at least 16 samples over at least two decades
  void validate() const {
    if (x.size() != s.size()) throw DomainError("SectionTrace: sample count mismatch");
    if (x.size() < 16) throw DomainError("SectionTrace: need at least 16 samples");
    for (std::size_t i = 0; i < x.size(); ++i)
      if (!(x[i] > 0) || (i && !(x[i] < x[i - 1]))) throw DomainError("SectionTrace: samples must decrease and stay positive");
    if (x.front() / x.back() < 100 * (1 - 1e-12)) throw DomainError("SectionTrace: need two decades");
  }
};

// Fundamental matrix: column c is the transport of the c-th unit vector.
struct FundamentalTrace {
  std::string variable = "y";
  std::vector<double> x;
  std::vector<Mat2> y;

  SectionTrace section(const Section& s0) const {
    SectionTrace t{variable, x, {}};
    t.s.reserve(y.size());
    for (auto& m : y) t.s.push_back({m(0, 0) * s0[0] + m(0, 1) * s0[1], m(1, 0) * s0[0] + m(1, 1) * s0[1]});
    return t;
  }
};

// Vertical line over (x2, x3), integrated from y_start down to y_min.
struct VerticalLine {
  double x2 = 0, x3 = 0;
  double y_start = 1, y_min = 1e-3;
  int per_decade = 16;
};

// Arc of constant rho = |(x - p, y)| at angle theta. The fitting variable is
// psi = atan(r / y), or chi = pi/2 - psi (the elevation above the boundary)
// when from_plane is set; it runs from psi_start down to psi_min.
struct KnotArc {
  cplx p = 0.0;
  double rho = 0.5, theta = 0;
  double psi_start = 1, psi_min = 1e-3;
  int per_decade = 16;
  bool from_plane = false;
};

struct TransportOptions {
  double rtol = 1e-10;  // relative local error per step
  long max_steps = 2000000;
};

namespace detail {

struct PathPoint {
  double x2, x3, y;
  double t2, t3, ty;  // d(x2, x3, y) / d tau
};

// dY/dtau = -M Y with M the connection of D3 (plus A along x) contracted with
// the path tangent; tau = log of the fitting variable.
inline Mat2 path_generator(const FieldSampler& f, const PathPoint& q) {
  UnitaryTriple t = f(q.x2, q.x3, q.y);
  return -1.0 * (q.t2 * t.a2 + q.t3 * t.a3 + q.ty * (t.ay - I_unit * t.phi1));
}

inline Mat2 rk4_step(const std::function<Mat2(double)>& gen, double tau, double h, const Mat2& y) {
  Mat2 m1 = gen(tau), m2 = gen(tau + 0.5 * h), m3 = gen(tau + h);
  Mat2 k1 = m1 * y;
  Mat2 k2 = m2 * (y + (0.5 * h) * k1);
  Mat2 k3 = m2 * (y + (0.5 * h) * k2);
  Mat2 k4 = m3 * (y + h * k3);
  return y + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
}

// Adaptive classical RK4 with step doubling, recording at geometric outputs.
inline FundamentalTrace integrate_path(const std::function<PathPoint(double)>& path, const FieldSampler& f,
                                       double x_start, double x_min, int per_decade, const std::string& var,
                                       const TransportOptions& opt) {
  if (!(x_start > 0) || !(x_min > 0) || !(x_min < x_start)) throw DomainError("transport: need 0 < min < start");
  if (per_decade < 1) throw DomainError("transport: per_decade must be positive");
  auto gen = [&](double tau) { return path_generator(f, path(tau)); };
  double t0 = std::log(x_start), t1 = std::log(x_min);
  long n_out = long(std::ceil((t0 - t1) / std::log(10.0) * per_decade - 1e-9));
  FundamentalTrace out{var, {x_start}, {Mat2::identity()}};
  Mat2 y = Mat2::identity();
  double tau = t0, h = -0.01;
  long steps = 0;
  for (long i = 1; i <= n_out; ++i) {
    double target = i == n_out ? t1 : t0 + (t1 - t0) * double(i) / double(n_out);
    while (tau > target) {
      if (++steps > opt.max_steps) throw NonConvergence("transport: step budget exhausted");
      bool last = tau + h <= target;
      double step = last ? target - tau : h;
      Mat2 full = rk4_step(gen, tau, step, y);
      Mat2 half = rk4_step(gen, tau + 0.5 * step, 0.5 * step, rk4_step(gen, tau, 0.5 * step, y));
      double scale = std::max(half.max_abs(), 1e-300);
      double err = (half - full).max_abs() / (15.0 * scale);
      if (!std::isfinite(err)) throw DomainError("transport: non-finite coefficients along the path");
      if (err <= opt.rtol) {
        y = half + (1.0 / 15.0) * (half - full);
        tau += step;
        if (last) tau = target;
      }
      double grow = err > 0 ? 0.9 * std::pow(opt.rtol / err, 0.2) : 4.0;
      h = step * std::clamp(grow, 0.1, 4.0);
      if (std::abs(h) < 1e-14) throw NonConvergence("transport: step size underflow");
    }
    out.x.push_back(std::exp(target));
    out.y.push_back(y);
  }
  out.x.back() = x_min;
  return out;
}

}  // namespace detail

inline FundamentalTrace fundamental_d3(const FieldSampler& f, const VerticalLine& line,
                                       const TransportOptions& opt = {}) {
  auto path = [&](double tau) {
    double y = std::exp(tau);
    return detail::PathPoint{line.x2, line.x3, y, 0, 0, y};
  };
  return detail::integrate_path(path, f, line.y_start, line.y_min, line.per_decade, "y", opt);
}

// Solves d_y s + (A_y - i phi1) s = 0 from s0 at y_start down to y_min.
inline SectionTrace transport_d3(const FieldSampler& f, const Section& s0, const VerticalLine& line,
                                 const TransportOptions& opt = {}) {
  return fundamental_d3(f, line, opt).section(s0);
}

inline FundamentalTrace fundamental_knot(const FieldSampler& f, const KnotArc& arc, const TransportOptions& opt = {}) {
  if (!(arc.rho > 0)) throw DomainError("knot arc: rho must be positive");
  if (!(arc.psi_start < M_PI / 2)) throw DomainError("knot arc: psi_start must be below pi/2");
  double c = std::cos(arc.theta), s = std::sin(arc.theta);
  auto path = [&](double tau) {
    double a = std::exp(tau);  // psi, or chi
    double ca = std::cos(a), sa = std::sin(a);
    double r = arc.rho * sa, y = arc.rho * ca, dr = a * arc.rho * ca, dy = -a * arc.rho * sa;
    if (arc.from_plane) std::swap(r, y), std::swap(dr, dy);
    return detail::PathPoint{arc.p.real() + r * c, arc.p.imag() + r * s, y, dr * c, dr * s, dy};
  };
  return detail::integrate_path(path, f, arc.psi_start, arc.psi_min, arc.per_decade,
                                arc.from_plane ? "chi" : "psi", opt);
}

inline SectionTrace transport_knot(const FieldSampler& f, const Section& s0, const KnotArc& arc,
                                   const TransportOptions& opt = {}) {
  return fundamental_knot(f, arc, opt).section(s0);
}

struct ExponentFit {
  double exponent = 0, stderr_ = 0;
  std::size_t samples = 0;
};

namespace detail {

inline ExponentFit fit_slope(const std::vector<double>& lx, const std::vector<double>& ly) {
  std::size_t n = lx.size();
  double mx = 0, my = 0;
  for (std::size_t i = 0; i < n; ++i) mx += lx[i], my += ly[i];
  mx /= n, my /= n;
  double sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < n; ++i) sxx += (lx[i] - mx) * (lx[i] - mx), sxy += (lx[i] - mx) * (ly[i] - my);
  ExponentFit f{sxy / sxx, 0, n};
  double sse = 0;
  for (std::size_t i = 0; i < n; ++i) sse += std::pow(ly[i] - my - f.exponent * (lx[i] - mx), 2);
  f.stderr_ = n > 2 ? std::sqrt(sse / double(n - 2) / sxx) : 0.0;
  return f;
}

// indices of samples within two decades of the smallest one
inline std::size_t window_start(const std::vector<double>& x) {
  double lim = 100 * x.back() * (1 + 1e-12);
  std::size_t i = 0;
  while (x[i] > lim) ++i;
  return i;
}

inline ExponentFit fit_window(const std::vector<double>& x, const std::vector<double>& mag) {
  std::vector<double> lx, ly;
  for (std::size_t i = window_start(x); i < x.size(); ++i) {
    if (!(mag[i] > std::numeric_limits<double>::min()) || !std::isfinite(mag[i]))
      throw DegenerateTrace("growth_exponent: |s| underflows or overflows on the fitting window");
    lx.push_back(std::log(x[i]));
    ly.push_back(std::log(mag[i]));
  }
  return fit_slope(lx, ly);
}

}  // namespace detail

// Least-squares slope of log|s| against log(variable) over the last two decades.
inline ExponentFit growth_exponent(const SectionTrace& t) {
  t.validate();
  std::vector<double> mag;
  for (auto& s : t.s) mag.push_back(std::hypot(std::abs(s[0]), std::abs(s[1])));
  return detail::fit_window(t.x, mag);
}

struct SmallSectionReport {
  bool verdict = false;
  Section direction{0.0, 0.0};   // initial data spanning the small subspace (unit norm)
  double exponent_large = 0;     // fitted exponent of the larger singular value
  double exponent_small = 0;     // of the smaller one
  double separation = 1;         // sigma_max / sigma_min at the last sample
  std::vector<bool> vanishing;   // per a: |x^{-1/2 + a} s| -> 0 on the window
};

// Singular values of the fundamental matrix give both exponents; the right
// singular vector of the smaller one is the distinguished initial direction.
inline SmallSectionReport small_section_test(const FundamentalTrace& ft, const std::vector<double>& a_grid = {0.1, 0.25, 0.5, 0.75, 0.9},
                                             double delta = 0.05, double min_separation = 10) {
  SectionTrace probe = ft.section({1.0, 0.0});
  probe.validate();
  for (double a : a_grid)
    if (!(a > 0 && a < 1)) throw DomainError("small_section_test: a must lie in (0, 1)");
  std::vector<double> s_max, s_min;
  Eigen::Matrix2cd last;
  for (auto& m : ft.y) {
    Eigen::Matrix2cd e;
    e << m(0, 0), m(0, 1), m(1, 0), m(1, 1);
    Eigen::JacobiSVD<Eigen::Matrix2cd> svd(e);
    s_max.push_back(svd.singularValues()(0));
    s_min.push_back(svd.singularValues()(1));
    last = e;
  }
  SmallSectionReport r;
  r.exponent_large = detail::fit_window(ft.x, s_max).exponent;
  r.exponent_small = detail::fit_window(ft.x, s_min).exponent;
  r.separation = s_max.back() / s_min.back();
  double thr = 0.5 - delta;
  int above = (r.exponent_large >= thr) + (r.exponent_small >= thr);
  if (above != 1) return r;  // none, or two
  if (r.separation < min_separation)
    throw AmbiguousSubspace("small_section_test: singular value separation " + std::to_string(r.separation) +
                            " below " + std::to_string(min_separation));
  Eigen::JacobiSVD<Eigen::Matrix2cd> svd(last, Eigen::ComputeFullV);
  Eigen::Vector2cd v = svd.matrixV().col(1);
  // fix the phase: largest component real positive
  int big = std::abs(v(1)) > std::abs(v(0)) ? 1 : 0;
  v *= std::conj(v(big)) / std::abs(v(big));
  r.direction = {v(0), v(1)};
  ExponentFit small = growth_exponent(ft.section(r.direction));
  r.verdict = true;
  for (double a : a_grid) {
    bool ok = small.exponent - 0.5 + a > 0;
    r.vanishing.push_back(ok);
    r.verdict = r.verdict && ok;
  }
  return r;
}

inline void write_trace_csv(const std::string& path, const SectionTrace& t) {
  std::ofstream out(path);
  if (!out) throw DomainError("cannot open " + path);
  out.precision(17);
  out << t.variable << ",re_s1,im_s1,re_s2,im_s2\n";
  for (std::size_t i = 0; i < t.x.size(); ++i)
    out << t.x[i] << ',' << t.s[i][0].real() << ',' << t.s[i][0].imag() << ',' << t.s[i][1].real() << ','
        << t.s[i][1].imag() << '\n';
}

}  // namespace bogo
