#pragma once

#include <algorithm>
#include <cctype>
#include <cmath>
#include <complex>
#include <functional>
#include <limits>
#include <sstream>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "algebra.hpp"
#include "errors.hpp"

namespace bogo {

// Complex polynomial in z, coefficients from the constant term up.
class Poly {
 public:
  Poly() = default;
  Poly(cplx c) : c_{c} { trim(); }
  explicit Poly(std::vector<cplx> c) : c_(std::move(c)) { trim(); }

  static Poly z() { return Poly(std::vector<cplx>{0.0, 1.0}); }
  // prod (z - r_j)^{k_j} times lead
  static Poly from_roots(const std::vector<cplx>& roots, const std::vector<int>& mult, cplx lead = 1.0) {
    Poly p(lead);
    for (std::size_t j = 0; j < roots.size(); ++j)
      for (int m = 0; m < mult[j]; ++m) p = p * Poly(std::vector<cplx>{-roots[j], 1.0});
    return p;
  }

  const std::vector<cplx>& coeffs() const { return c_; }
  bool is_zero() const { return c_.empty(); }
  int degree() const { return int(c_.size()) - 1; }  // -1 for the zero polynomial
  cplx coeff(int i) const { return i >= 0 && i < int(c_.size()) ? c_[i] : cplx(0); }
  cplx lead() const { return c_.empty() ? cplx(0) : c_.back(); }
  double norm() const {
    double s = 0;
    for (auto& v : c_) s += std::norm(v);
    return std::sqrt(s);
  }
  double max_abs() const {
    double s = 0;
    for (auto& v : c_) s = std::max(s, std::abs(v));
    return s;
  }

  cplx operator()(cplx z) const {
    cplx s = 0;
    for (auto it = c_.rbegin(); it != c_.rend(); ++it) s = s * z + *it;
    return s;
  }

  Poly derivative() const {
    std::vector<cplx> d;
    for (std::size_t i = 1; i < c_.size(); ++i) d.push_back(double(i) * c_[i]);
    return Poly(d);
  }

  friend Poly operator+(const Poly& a, const Poly& b) {
    std::vector<cplx> c(std::max(a.c_.size(), b.c_.size()));
    for (std::size_t i = 0; i < c.size(); ++i) c[i] = a.coeff(int(i)) + b.coeff(int(i));
    return Poly(c);
  }
  friend Poly operator-(const Poly& a) { return cplx(-1.0) * a; }
  friend Poly operator-(const Poly& a, const Poly& b) { return a + (-b); }
  friend Poly operator*(const Poly& a, const Poly& b) {
    if (a.is_zero() || b.is_zero()) return Poly();
    std::vector<cplx> c(a.c_.size() + b.c_.size() - 1);
    for (std::size_t i = 0; i < a.c_.size(); ++i)
      for (std::size_t j = 0; j < b.c_.size(); ++j) c[i + j] += a.c_[i] * b.c_[j];
    return Poly(c);
  }
  friend Poly operator*(cplx s, const Poly& a) {
    std::vector<cplx> c = a.c_;
    for (auto& v : c) v *= s;
    return Poly(c);
  }
  Poly pow(int e) const {
    if (e < 0) throw BadConfig("poly: negative exponent");
    Poly r(1.0), b = *this;
    for (; e; e >>= 1, b = b * b)
      if (e & 1) r = r * b;
    return r;
  }

  // coefficients below tol * max|c| dropped from the top
  Poly trimmed(double tol) const {
    std::vector<cplx> c = c_;
    double m = max_abs();
    while (!c.empty() && std::abs(c.back()) <= tol * m) c.pop_back();
    return Poly(c);
  }

  std::string str() const {
    if (c_.empty()) return "0";
    std::ostringstream o;
    o.precision(17);
    bool first = true;
    for (int i = degree(); i >= 0; --i) {
      if (c_[i] == cplx(0)) continue;
      if (!first) o << " + ";
      o << '(' << c_[i].real() << (c_[i].imag() < 0 ? "-" : "+") << std::abs(c_[i].imag()) << "i)";
      if (i) o << "*z^" << i;
      first = false;
    }
    return o.str();
  }

 private:
  void trim() {
    for (auto& v : c_)
      if (!std::isfinite(v.real()) || !std::isfinite(v.imag())) throw DomainError("poly: non-finite coefficient");
    while (!c_.empty() && c_.back() == cplx(0)) c_.pop_back();
  }
  std::vector<cplx> c_;
};

namespace detail {

// Recursive descent over + - * ^ ( ), numbers, z and i. Juxtaposition
// multiplies, so "2z", "3i" and "z(z-1)" are accepted.
class PolyParser {
 public:
  explicit PolyParser(const std::string& s) : s_(s) {}

  Poly parse() {
    Poly p = expr();
    skip();
    if (pos_ != s_.size()) fail("unexpected '" + std::string(1, s_[pos_]) + "'");
    return p;
  }

 private:
  [[noreturn]] void fail(const std::string& what) const {
    throw BadConfig("poly: " + what + " at position " + std::to_string(pos_) + " in \"" + s_ + "\"");
  }
  void skip() {
    while (pos_ < s_.size() && std::isspace(static_cast<unsigned char>(s_[pos_]))) ++pos_;
  }
  bool eat(char c) {
    skip();
    if (pos_ < s_.size() && s_[pos_] == c) {
      ++pos_;
      return true;
    }
    return false;
  }
  bool starts_primary() {
    skip();
    if (pos_ >= s_.size()) return false;
    char c = s_[pos_];
    return std::isdigit(static_cast<unsigned char>(c)) || c == '.' || c == 'z' || c == 'i' || c == '(';
  }

  Poly expr() {
    Poly p = term();
    for (;;) {
      if (eat('+')) p = p + term();
      else if (eat('-')) p = p - term();
      else return p;
    }
  }
  Poly term() {
    Poly p = unary();
    for (;;) {
      if (eat('*')) p = p * unary();
      else if (starts_primary()) p = p * power();
      else return p;
    }
  }
  Poly unary() {
    if (eat('-')) return -unary();
    if (eat('+')) return unary();
    return power();
  }
  Poly power() {
    Poly b = primary();
    if (eat('^')) {
      skip();
      std::size_t start = pos_;
      while (pos_ < s_.size() && std::isdigit(static_cast<unsigned char>(s_[pos_]))) ++pos_;
      if (start == pos_ || (pos_ < s_.size() && s_[pos_] == '.')) fail("expected a non-negative integer exponent");
      if (pos_ - start > 4) fail("exponent too large");
      b = b.pow(std::stoi(s_.substr(start, pos_ - start)));
    }
    return b;
  }
  Poly primary() {
    skip();
    if (pos_ >= s_.size()) fail("unexpected end of input");
    char c = s_[pos_];
    if (c == 'z') {
      ++pos_;
      return Poly::z();
    }
    if (c == 'i') {
      ++pos_;
      return Poly(cplx(0, 1));
    }
    if (c == '(') {
      ++pos_;
      Poly p = expr();
      if (!eat(')')) fail("expected ')'");
      return p;
    }
    if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') {
      std::size_t used = 0;
      double v;
      try {
        v = std::stod(s_.substr(pos_), &used);
      } catch (const std::exception&) {
        fail("bad number");
      }
      pos_ += used;
      return Poly(cplx(v));
    }
    fail("unexpected '" + std::string(1, c) + "'");
  }

  std::string s_;
  std::size_t pos_ = 0;
};

}  // namespace detail

inline Poly parse_poly(const std::string& s) { return detail::PolyParser(s).parse(); }

// Roots as eigenvalues of the companion matrix.
inline std::vector<cplx> poly_roots(const Poly& p) {
  if (p.is_zero()) throw DomainError("poly_roots: zero polynomial");
  int n = p.degree();
  if (n == 0) return {};
  Eigen::MatrixXcd c = Eigen::MatrixXcd::Zero(n, n);
  for (int i = 1; i < n; ++i) c(i, i - 1) = 1.0;
  for (int i = 0; i < n; ++i) c(i, n - 1) = -p.coeff(i) / p.lead();
  Eigen::ComplexEigenSolver<Eigen::MatrixXcd> es(c, false);
  if (es.info() != Eigen::Success) throw NonConvergence("poly_roots: eigenvalue iteration failed");
  std::vector<cplx> r(es.eigenvalues().data(), es.eigenvalues().data() + n);
  std::sort(r.begin(), r.end(), [](cplx a, cplx b) { return a.real() != b.real() ? a.real() < b.real() : a.imag() < b.imag(); });
  return r;
}

struct RootMultiplicity {
  cplx root;
  int mult;
};

namespace detail {

// matrix of q -> f * q for deg q = d
inline Eigen::MatrixXcd convolution(const Poly& f, int d) {
  Eigen::MatrixXcd m = Eigen::MatrixXcd::Zero(f.degree() + d + 1, d + 1);
  for (int j = 0; j <= d; ++j)
    for (int i = 0; i <= f.degree(); ++i) m(i + j, j) = f.coeff(i);
  return m;
}

// Gauss-Newton on the coefficient map of lead * prod (z - z_j)^{k_j} with the
// multiplicities held fixed; well conditioned even for clustered roots.
inline double refine_roots(const Poly& p, std::vector<cplx>& z, const std::vector<int>& k, cplx& lead) {
  int n = p.degree(), m = int(z.size());
  Eigen::VectorXcd target(n + 1);
  for (int i = 0; i <= n; ++i) target(i) = p.coeff(i);
  double pn = p.norm();
  auto residual = [&](const std::vector<cplx>& zz, cplx c) {
    Poly q = Poly::from_roots(zz, k, c);
    Eigen::VectorXcd r(n + 1);
    for (int i = 0; i <= n; ++i) r(i) = q.coeff(i) - target(i);
    return r;
  };
  Eigen::VectorXcd r = residual(z, lead);
  for (int it = 0; it < 30; ++it) {
    Eigen::MatrixXcd jac(n + 1, m + 1);
    for (int j = 0; j < m; ++j) {
      std::vector<int> kk = k;
      --kk[j];
      Poly d = Poly::from_roots(z, kk, -double(k[j]) * lead);
      for (int i = 0; i <= n; ++i) jac(i, j) = d.coeff(i);
    }
    Poly base = Poly::from_roots(z, k, 1.0);
    for (int i = 0; i <= n; ++i) jac(i, m) = base.coeff(i);
    Eigen::VectorXcd step = jac.colPivHouseholderQr().solve(-r);
    std::vector<cplx> z2 = z;
    for (int j = 0; j < m; ++j) z2[j] += step(j);
    cplx lead2 = lead + step(m);
    Eigen::VectorXcd r2 = residual(z2, lead2);
    if (!(r2.norm() < r.norm())) break;
    double gain = r.norm() - r2.norm();
    z = z2, lead = lead2, r = r2;
    if (gain < 1e-16 * pn) break;
  }
  return r.norm() / pn;
}

}  // namespace detail

namespace detail {

// every partition of {0..n-1} into m blocks, as block labels (restricted growth strings)
inline void set_partitions(int n, int m, const std::function<bool(const std::vector<int>&)>& visit) {
  std::vector<int> a(n, 0);
  std::function<bool(int, int)> rec = [&](int i, int used) -> bool {
    if (n - i < m - used) return false;
    if (i == n) return used == m ? visit(a) : false;
    for (int b = 0; b <= std::min(used, m - 1); ++b) {
      a[i] = b;
      if (rec(i + 1, std::max(used, b + 1))) return true;
    }
    return false;
  };
  rec(0, 0);
}

// Zeng's estimate for m distinct roots: u = p / gcd(p, p'), v = p' / gcd from
// the null vector of [C_{m-1}(p) | -C_m(p')]; roots of u with k_j = v(z_j) / u'(z_j).
inline bool gcd_estimate(const Poly& p, int m, double rank_tol, std::vector<cplx>& z, std::vector<int>& k) {
  int n = p.degree();
  Poly dp = p.derivative();
  Eigen::MatrixXcd a(n + m, 2 * m + 1);
  a << convolution(p, m - 1), -convolution(dp, m);
  Eigen::JacobiSVD<Eigen::MatrixXcd> svd(a, Eigen::ComputeFullV);
  auto sv = svd.singularValues();
  if (sv(sv.size() - 1) > rank_tol * sv(0)) return false;
  Eigen::VectorXcd null = svd.matrixV().col(2 * m);
  Poly v(std::vector<cplx>(null.data(), null.data() + m));
  Poly u(std::vector<cplx>(null.data() + m, null.data() + 2 * m + 1));
  if (u.degree() != m) return false;
  z = poly_roots(u);
  k.clear();
  Poly du = u.derivative();
  int total = 0;
  for (cplx zj : z) {
    cplx kj = v(zj) / du(zj);
    int ki = int(std::lround(kj.real()));
    if (ki < 1 || std::abs(kj - cplx(ki)) > 0.25) return false;
    k.push_back(ki);
    total += ki;
  }
  return total == n;
}

}  // namespace detail

// Distinct roots with multiplicities: the structure with the fewest distinct
// roots whose Gauss-Newton fit reproduces p to `backward_tol` (relative
// coefficient norm). Up to degree `enumerate_max` every grouping of the
// companion eigenvalues seeds the fit (centroid, group size); above it the
// seeds come from the numerical GCD of p and p'. All-simple is the fallback.
// Roots closer than merge_tol are merged afterwards.
inline std::vector<RootMultiplicity> roots_with_multiplicity(const Poly& p0, double backward_tol = 1e-13,
                                                             double merge_tol = 1e-7, int enumerate_max = 8,
                                                             double rank_tol = 1e-8) {
  if (p0.is_zero()) throw DomainError("roots_with_multiplicity: zero polynomial");
  Poly p = cplx(1.0 / p0.norm()) * p0;
  int n = p.degree();
  if (n == 0) return {};
  std::vector<cplx> eig = poly_roots(p);
  std::vector<cplx> best_z;
  std::vector<int> best_k;
  double best = std::numeric_limits<double>::infinity();
  // the best-fitting seed for this m wins, not the first one under tolerance
  auto attempt = [&](std::vector<cplx> z, const std::vector<int>& k) {
    cplx lead = p.lead();
    double b = detail::refine_roots(p, z, k, lead);
    if (b < best) best = b, best_z = z, best_k = k;
    return false;
  };
  bool found = false;
  for (int m = 1; m < n && !found; ++m) {
    if (n <= enumerate_max) {
      detail::set_partitions(n, m, [&](const std::vector<int>& lab) {
        std::vector<cplx> z(m, 0.0);
        std::vector<int> k(m, 0);
        for (int i = 0; i < n; ++i) z[lab[i]] += eig[i], ++k[lab[i]];
        for (int j = 0; j < m; ++j) z[j] /= double(k[j]);
        return attempt(z, k);
      });
    } else {
      std::vector<cplx> z;
      std::vector<int> k;
      if (detail::gcd_estimate(p, m, rank_tol, z, k)) attempt(z, k);
    }
    found = best <= backward_tol;
  }
  if (!found) {
    best_z = eig;
    best_k.assign(n, 1);
    cplx lead = p.lead();
    detail::refine_roots(p, best_z, best_k, lead);
  }
  std::vector<RootMultiplicity> out;
  for (std::size_t j = 0; j < best_z.size(); ++j) {
    auto it = std::find_if(out.begin(), out.end(), [&](auto& e) { return std::abs(e.root - best_z[j]) < merge_tol; });
    if (it == out.end()) out.push_back({best_z[j], best_k[j]});
    else {
      it->root = (double(it->mult) * it->root + double(best_k[j]) * best_z[j]) / double(it->mult + best_k[j]);
      it->mult += best_k[j];
    }
  }
  std::sort(out.begin(), out.end(), [](auto& a, auto& b) {
    return a.root.real() != b.root.real() ? a.root.real() < b.root.real() : a.root.imag() < b.root.imag();
  });
  return out;
}

}  // namespace bogo
