#pragma once

#include <array>
#include <cmath>
#include <cstddef>
#include <string>
#include <utility>
#include <vector>

#include "errors.hpp"

namespace bogo {

inline std::vector<double> uniform_samples(int n, double lo, double hi) {
  if (n < 2 || !(hi > lo)) throw DomainError("uniform_samples: need n >= 2 and hi > lo");
  std::vector<double> x(n);
  for (int i = 0; i < n; ++i) x[i] = lo + (hi - lo) * i / (n - 1);
  x.back() = hi;
  return x;
}

// x_i = lo * (hi/lo)^(i/(n-1)); refining n -> 2n-1 nests the nodes.
inline std::vector<double> geometric_samples(int n, double lo, double hi) {
  if (n < 2 || !(lo > 0) || !(hi > lo)) throw DomainError("geometric_samples: need 0 < lo < hi");
  std::vector<double> x(n);
  double q = std::log(hi / lo);
  for (int i = 0; i < n; ++i) x[i] = lo * std::exp(q * i / (n - 1));
  x.front() = lo;
  x.back() = hi;
  return x;
}

struct Weights3 {
  double m, c, p;
};

// three-point weights on a nonuniform grid, hm = x_i - x_{i-1}, hp = x_{i+1} - x_i
inline Weights3 d2_weights(double hm, double hp) {
  return {2.0 / (hm * (hm + hp)), -2.0 / (hm * hp), 2.0 / (hp * (hm + hp))};
}
inline Weights3 d1_weights(double hm, double hp) {
  return {-hp / (hm * (hm + hp)), (hp - hm) / (hm * hp), hm / (hp * (hm + hp))};
}

struct Tap {
  std::size_t idx;
  double w;
};

// First derivative at node i of samples x: centered inside, one-sided
// second order at the ends (first order when only two samples exist).
inline std::vector<Tap> d1_stencil(const std::vector<double>& x, std::size_t i) {
  std::size_t n = x.size();
  if (n < 2) return {};
  if (n == 2) {
    double h = x[1] - x[0];
    return {{0, -1.0 / h}, {1, 1.0 / h}};
  }
  if (i == 0 || i == n - 1) {
    bool lo = i == 0;
    std::size_t i1 = lo ? 1 : n - 2, i2 = lo ? 2 : n - 3;
    double h1 = x[i1] - x[i], h2 = x[i2] - x[i];
    return {{i, -(h1 + h2) / (h1 * h2)}, {i1, h2 / (h1 * (h2 - h1))}, {i2, -h1 / (h2 * (h2 - h1))}};
  }
  Weights3 w = d1_weights(x[i] - x[i - 1], x[i + 1] - x[i]);
  return {{i - 1, w.m}, {i, w.c}, {i + 1, w.p}};
}

inline void check_axis(const std::vector<double>& x, const char* name, std::size_t min_n) {
  if (x.size() < min_n)
    throw DomainError(std::string(name) + ": need at least " + std::to_string(min_n) + " samples");
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (!std::isfinite(x[i])) throw DomainError(std::string(name) + ": non-finite sample");
    if (i && !(x[i] > x[i - 1])) throw DomainError(std::string(name) + ": samples not increasing");
  }
}

// Axisymmetric half-strip {r > 0, y > 0}, nodes (r_i, y_j), index i*ny + j.
class AxiGrid {
 public:
  AxiGrid(std::vector<double> r, std::vector<double> y) : r_(std::move(r)), y_(std::move(y)) {
    check_axis(r_, "AxiGrid r", 4);
    check_axis(y_, "AxiGrid y", 4);
    if (!(r_.front() > 0)) throw DomainError("AxiGrid: r samples must be positive");
    if (!(y_.front() > 0)) throw DomainError("AxiGrid: y samples must be positive");
  }

  static AxiGrid uniform(int nr, double r0, double r1, int ny, double y0, double y1) {
    return {uniform_samples(nr, r0, r1), uniform_samples(ny, y0, y1)};
  }
  static AxiGrid geometric(int nr, double r0, double r1, int ny, double y0, double y1) {
    return {geometric_samples(nr, r0, r1), geometric_samples(ny, y0, y1)};
  }

  const std::vector<double>& r() const { return r_; }
  const std::vector<double>& y() const { return y_; }
  std::size_t nr() const { return r_.size(); }
  std::size_t ny() const { return y_.size(); }
  std::size_t size() const { return nr() * ny(); }
  std::size_t index(std::size_t i, std::size_t j) const { return i * ny() + j; }
  bool is_boundary(std::size_t i, std::size_t j) const {
    return i == 0 || j == 0 || i + 1 == nr() || j + 1 == ny();
  }

 private:
  std::vector<double> r_, y_;
};

// Product grid in (x2, x3, y). Periodic in x2, x3 with spacing P/n (a torus
// patch of the surface), or a bounded chart including both x endpoints.
// Index (i2*n3 + i3)*ny + j.
class TorusGrid {
 public:
  static TorusGrid torus(int n2, int n3, double period2, double period3, std::vector<double> y,
                         double g0 = 1.0) {
    if (!(period2 > 0) || !(period3 > 0)) throw DomainError("TorusGrid: period must be positive");
    return TorusGrid(n2, n3, 0.0, 0.0, period2 / n2, period3 / n3, std::move(y), true, g0);
  }
  static TorusGrid torus(int n, double period, std::vector<double> y, double g0 = 1.0) {
    return torus(n, n, period, period, std::move(y), g0);
  }
  static TorusGrid chart(int n2, int n3, double x2_lo, double x2_hi, double x3_lo, double x3_hi,
                         std::vector<double> y, double g0 = 1.0) {
    if (n2 < 3 || n3 < 3) throw DomainError("TorusGrid chart: need at least 3 samples per x axis");
    return TorusGrid(n2, n3, x2_lo, x3_lo, (x2_hi - x2_lo) / (n2 - 1), (x3_hi - x3_lo) / (n3 - 1),
                     std::move(y), false, g0);
  }

  int n2() const { return n2_; }
  int n3() const { return n3_; }
  std::size_t ny() const { return y_.size(); }
  std::size_t size() const { return std::size_t(n2_) * n3_ * ny(); }
  double h2() const { return h2_; }
  double h3() const { return h3_; }
  double g0() const { return g0_; }
  bool periodic() const { return periodic_; }
  const std::vector<double>& y() const { return y_; }
  double x2(int i) const { return x2_0_ + h2_ * i; }
  double x3(int i) const { return x3_0_ + h3_ * i; }
  std::size_t index(int i2, int i3, std::size_t j) const {
    return (std::size_t(i2) * n3_ + i3) * ny() + j;
  }
  std::array<int, 2> wrap(int i2, int i3) const {
    return {((i2 % n2_) + n2_) % n2_, ((i3 % n3_) + n3_) % n3_};
  }
  // x-neighbours exist for every node of a torus, only inside a chart
  bool x_interior(int i2, int i3) const {
    return periodic_ || (i2 > 0 && i3 > 0 && i2 + 1 < n2_ && i3 + 1 < n3_);
  }

 private:
  TorusGrid(int n2, int n3, double x20, double x30, double h2, double h3, std::vector<double> y,
            bool periodic, double g0)
      : n2_(n2), n3_(n3), x2_0_(x20), x3_0_(x30), h2_(h2), h3_(h3), y_(std::move(y)),
        periodic_(periodic), g0_(g0) {
    if (n2 < 1 || n3 < 1) throw DomainError("TorusGrid: empty x axis");
    if (!(h2 > 0) || !(h3 > 0)) throw DomainError("TorusGrid: bad x spacing");
    if (!(g0 > 0)) throw DomainError("TorusGrid: g0 must be positive");
    check_axis(y_, "TorusGrid y", 1);
    if (!(y_.front() > 0)) throw DomainError("TorusGrid: y samples must be positive");
  }

  int n2_, n3_;
  double x2_0_, x3_0_, h2_, h3_;
  std::vector<double> y_;
  bool periodic_;
  double g0_;
};

}  // namespace bogo
