#include <gtest/gtest.h>

#include <bogo/polynomial.hpp>
#include <bogo/random.hpp>

using namespace bogo;

namespace {

void expect_poly_near(const Poly& a, const Poly& b, double tol = 1e-14) {
  ASSERT_EQ(a.degree(), b.degree());
  for (int i = 0; i <= a.degree(); ++i) EXPECT_LT(std::abs(a.coeff(i) - b.coeff(i)), tol) << i;
}

}  // namespace

TEST(Polynomial, ArithmeticAndEvaluation) {
  Poly p = parse_poly("z^2 - 1");
  EXPECT_EQ(p.degree(), 2);
  EXPECT_EQ(p(cplx(1)), cplx(0));
  EXPECT_EQ(p(cplx(0, 1)), cplx(-2));
  expect_poly_near(p.derivative(), parse_poly("2z"));
  expect_poly_near(p * Poly::z(), parse_poly("z^3 - z"));
  EXPECT_TRUE((p - p).is_zero());
  EXPECT_EQ(Poly().degree(), -1);
  expect_poly_near(Poly::from_roots({1.0, -1.0}, {1, 1}), p);
}

TEST(Polynomial, ParserGrammar) {
  expect_poly_near(parse_poly("z^2*(z-1)"), parse_poly("z^3 - z^2"));
  expect_poly_near(parse_poly("2z(z+i)"), Poly(std::vector<cplx>{0.0, cplx(0, 2), 2.0}));
  expect_poly_near(parse_poly("-(z - 0.5)^2"), parse_poly("-z^2 + z - 0.25"));
  expect_poly_near(parse_poly("(1+2i) * z"), Poly(std::vector<cplx>{0.0, cplx(1, 2)}));
  expect_poly_near(parse_poly("1e-3 z"), Poly(std::vector<cplx>{0.0, 1e-3}));
  expect_poly_near(parse_poly("  3 "), Poly(3.0));
  EXPECT_TRUE(parse_poly("0").is_zero());
}

TEST(Polynomial, ParserRejectsMalformedInput) {
  for (const char* bad : {"", "z^", "z^-1", "(z-1", "z)", "x+1", "z^2.5", "2**z", "z^99999"})
    EXPECT_THROW(parse_poly(bad), BadConfig) << bad;
}

TEST(Polynomial, CompanionRootsOfSimplePolynomial) {
  auto r = poly_roots(parse_poly("(z-1)(z+2)(z-3i)"));
  ASSERT_EQ(r.size(), 3u);
  EXPECT_LT(std::abs(r[0] - cplx(-2)), 1e-13);
  EXPECT_LT(std::abs(r[1] - cplx(0, 3)), 1e-13);
  EXPECT_LT(std::abs(r[2] - cplx(1)), 1e-13);
  EXPECT_TRUE(poly_roots(Poly(2.0)).empty());
  EXPECT_THROW(poly_roots(Poly()), DomainError);
}

TEST(Polynomial, MultiplicitiesOfExamples) {
  auto a = roots_with_multiplicity(parse_poly("z^2"));
  ASSERT_EQ(a.size(), 1u);
  EXPECT_EQ(a[0].mult, 2);
  EXPECT_LT(std::abs(a[0].root), 1e-12);
  auto b = roots_with_multiplicity(parse_poly("z^2*(z-1)"));
  ASSERT_EQ(b.size(), 2u);
  EXPECT_EQ(b[0].mult, 2);
  EXPECT_EQ(b[1].mult, 1);
  EXPECT_LT(std::abs(b[1].root - 1.0), 1e-12);
  EXPECT_TRUE(roots_with_multiplicity(Poly(1.0)).empty());
}

TEST(Polynomial, RecoversPlantedStructures) {
  // degree <= 8, separation >= 1e-3
  SplitMix64 rng(99);
  int trials = 0;
  for (int t = 0; t < 200; ++t) {
    int total = int(rng.integer(1, 8));
    std::vector<int> mult;
    for (int left = total; left > 0;) {
      int m = int(rng.integer(1, left));
      mult.push_back(m);
      left -= m;
    }
    std::vector<cplx> roots;
    while (roots.size() < mult.size()) {
      cplx z(rng.uniform(-2, 2), rng.uniform(-2, 2));
      bool ok = true;
      for (cplx r : roots) ok = ok && std::abs(r - z) >= 0.05;
      if (ok) roots.push_back(z);
    }
    cplx lead = rng.complex_normal() + 0.5;
    auto got = roots_with_multiplicity(Poly::from_roots(roots, mult, lead));
    ASSERT_EQ(got.size(), roots.size()) << t;
    for (std::size_t j = 0; j < roots.size(); ++j) {
      auto it = std::min_element(got.begin(), got.end(),
                                 [&](auto& a, auto& b) { return std::abs(a.root - roots[j]) < std::abs(b.root - roots[j]); });
      EXPECT_EQ(it->mult, mult[j]) << t;
      EXPECT_LT(std::abs(it->root - roots[j]), 1e-8) << t;
    }
    ++trials;
  }
  EXPECT_EQ(trials, 200);
}

TEST(Polynomial, CloseRootsStayDistinct) {
  std::vector<cplx> roots{0.3, 0.301, cplx(-1, 0.5)};
  for (auto mult : {std::vector<int>{1, 1, 1}, {2, 1, 1}, {2, 2, 1}, {3, 2, 3}}) {
    auto got = roots_with_multiplicity(Poly::from_roots(roots, mult));
    ASSERT_EQ(got.size(), 3u);
    int total = 0;
    for (auto& g : got) total += g.mult;
    EXPECT_EQ(total, mult[0] + mult[1] + mult[2]);
    for (std::size_t j = 0; j < 3; ++j) {
      bool found = false;
      for (auto& g : got) found = found || (std::abs(g.root - roots[j]) < 1e-7 && g.mult == mult[j]);
      EXPECT_TRUE(found) << j;
    }
  }
}

TEST(Polynomial, MergesPointsBelowTolerance) {
  auto got = roots_with_multiplicity(Poly::from_roots({1.0, 1.0 + 1e-9}, {1, 1}));
  ASSERT_EQ(got.size(), 1u);
  EXPECT_EQ(got[0].mult, 2);
}

TEST(Polynomial, PairAtMinimumSeparation) {
  cplx a(0.3, -0.2), b = a + std::polar(1e-3, 0.7);
  for (int k1 = 1; k1 <= 7; ++k1)
    for (int k2 = 1; k1 + k2 <= 8; ++k2) {
      auto got = roots_with_multiplicity(Poly::from_roots({a, b}, {k1, k2}));
      ASSERT_EQ(got.size(), 2u);
      for (auto& g : got) {
        bool near_a = std::abs(g.root - a) < 1e-6;
        EXPECT_TRUE(near_a || std::abs(g.root - b) < 1e-6);
        EXPECT_EQ(g.mult, near_a ? k1 : k2);
      }
    }
}

TEST(Polynomial, HighDegreeUsesGcdSeeds) {
  std::vector<cplx> roots{cplx(1, 0), cplx(-1, 0.5), cplx(0, -1.5), cplx(2, 2)};
  std::vector<int> mult{3, 2, 4, 1};
  auto got = roots_with_multiplicity(Poly::from_roots(roots, mult, cplx(0.5, 1)));
  ASSERT_EQ(got.size(), 4u);
  for (std::size_t j = 0; j < roots.size(); ++j) {
    bool found = false;
    for (auto& g : got) found = found || (std::abs(g.root - roots[j]) < 1e-8 && g.mult == mult[j]);
    EXPECT_TRUE(found) << j;
  }
}
