#include <gtest/gtest.h>

#include <cstdio>
#include <fstream>

#include <bogo/transport.hpp>

#include "test_util.hpp"

using namespace bogo;

namespace {

FieldSampler rotated(FieldSampler f, Mat2 u) {
  return [f, u](double x2, double x3, double y) {
    return to_unitary(gauge_conjugate(GaugeJet::constant(u), to_operator(f(x2, x3, y))));
  };
}

FieldSampler flat() {
  return [](double, double, double) { return UnitaryTriple{}; };
}

double section_dist(const Section& a, const Section& b) {
  return std::max(std::abs(a[0] - b[0]), std::abs(a[1] - b[1]));
}

}  // namespace

TEST(Transport, ModelComponentsFollowClosedForm) {
  for (int k = 0; k < 4; ++k) {
    VerticalLine line{0.3, -0.2, 1.0, 1e-3, 16};
    SectionTrace t = transport_d3(model_unitary_triple(k), {1.0, 1.0}, line);
    double r = std::hypot(line.x2, line.x3), u0 = model_u(k, r, 1.0);
    for (std::size_t i = 0; i < t.x.size(); ++i) {
      double du = model_u(k, r, t.x[i]) - u0;
      EXPECT_NEAR(std::abs(t.s[i][0]) / std::exp(-du / 2), 1.0, 1e-8) << k << ' ' << t.x[i];
      EXPECT_NEAR(std::abs(t.s[i][1]) / std::exp(du / 2), 1.0, 1e-8) << k << ' ' << t.x[i];
    }
  }
}

TEST(Transport, SmallComponentOfK0ModelIsSqrtY) {
  SectionTrace t = transport_d3(model_unitary_triple(0), {0.0, 1.0}, {0, 0, 1.0, 1e-2, 16});
  for (std::size_t i = 0; i < t.x.size(); ++i) EXPECT_NEAR(std::abs(t.s[i][1]), std::sqrt(t.x[i]), 1e-9);
  SectionTrace g = transport_d3(model_unitary_triple(0), {1.0, 0.0}, {0, 0, 1.0, 1e-2, 16});
  EXPECT_DOUBLE_EQ(g.x.back(), 1e-2);
  EXPECT_NEAR(std::abs(g.s.back()[0]), 10.0, 1e-8);
}

TEST(Transport, FlatConnectionKeepsSectionConstant) {
  SectionTrace t = transport_d3(flat(), {cplx(1, 2), cplx(-3, 0.5)}, {});
  for (auto& s : t.s) EXPECT_LT(section_dist(s, {cplx(1, 2), cplx(-3, 0.5)}), 1e-14);
  EXPECT_NEAR(growth_exponent(t).exponent, 0.0, 1e-6);
}

TEST(Transport, IsLinearInInitialData) {
  SplitMix64 rng(1);
  auto f = model_unitary_triple(2, cplx(0.1, 0.2));
  VerticalLine line{0.4, 0.1, 2.0, 2e-3, 12};
  Section a{rng.complex_normal(), rng.complex_normal()}, b{rng.complex_normal(), rng.complex_normal()};
  cplx al(0.3, -1.2), be(2.0, 0.7);
  SectionTrace ta = transport_d3(f, a, line), tb = transport_d3(f, b, line);
  SectionTrace tc = transport_d3(f, {al * a[0] + be * b[0], al * a[1] + be * b[1]}, line);
  for (std::size_t i = 0; i < tc.x.size(); ++i) {
    Section lin{al * ta.s[i][0] + be * tb.s[i][0], al * ta.s[i][1] + be * tb.s[i][1]};
    double scale = std::max(std::abs(tc.s[i][0]), std::abs(tc.s[i][1]));
    EXPECT_LT(section_dist(tc.s[i], lin), 1e-10 * scale);
  }
}

TEST(Transport, GrowthExponentsOfK0Model) {
  auto f = model_unitary_triple(0);
  VerticalLine line{0.7, 0.0, 1.0, 1e-3, 16};
  ExponentFit generic = growth_exponent(transport_d3(f, {0.6, cplx(0.2, 0.8)}, line));
  ExponentFit small = growth_exponent(transport_d3(f, {0.0, 1.0}, line));
  EXPECT_NEAR(generic.exponent, -0.5, 0.02);
  EXPECT_NEAR(small.exponent, 0.5, 0.02);
  EXPECT_LT(small.stderr_, 1e-6);
  EXPECT_GE(small.samples, 16u);
}

TEST(Transport, ExponentIgnoresScalingOfInitialData) {
  auto f = model_unitary_triple(1);
  VerticalLine line{0.5, 0.5, 1.0, 1e-3, 16};
  FundamentalTrace ft = fundamental_d3(f, line);
  double e = growth_exponent(ft.section({0.3, 0.9})).exponent;
  for (cplx c : {cplx(1e-5, 0), cplx(-3, 4), cplx(0, 1e6)})
    EXPECT_NEAR(growth_exponent(ft.section({0.3 * c, 0.9 * c})).exponent, e, 1e-10);
}

TEST(Transport, DegenerateTraceRaises) {
  SectionTrace t = transport_d3(flat(), {0.0, 0.0}, {});
  EXPECT_THROW(growth_exponent(t), DegenerateTrace);
}

TEST(Transport, TraceValidation) {
  SectionTrace t = transport_d3(flat(), {1.0, 0.0}, {0, 0, 1.0, 0.05, 16});
  EXPECT_THROW(growth_exponent(t), DomainError);  // under two decades
  SectionTrace sparse = transport_d3(flat(), {1.0, 0.0}, {0, 0, 1.0, 1e-3, 2});
  EXPECT_THROW(growth_exponent(sparse), DomainError);
  EXPECT_THROW(transport_d3(flat(), {1.0, 0.0}, {0, 0, 1.0, 2.0, 16}), DomainError);
}

TEST(Transport, SmallSectionOfK0ModelIsSecondBasisVector) {
  FundamentalTrace ft = fundamental_d3(model_unitary_triple(0), {0.2, 0.3, 1.0, 1e-3, 16});
  SmallSectionReport r = small_section_test(ft);
  EXPECT_TRUE(r.verdict);
  EXPECT_LT(std::abs(r.direction[0]), 1e-10);
  EXPECT_NEAR(std::abs(r.direction[1]), 1.0, 1e-12);
  EXPECT_NEAR(r.exponent_large, -0.5, 0.02);
  EXPECT_NEAR(r.exponent_small, 0.5, 0.02);
  EXPECT_GT(r.separation, 100);
  EXPECT_EQ(r.vanishing.size(), 5u);
}

TEST(Transport, SmallSectionIsGaugeEquivariant) {
  SplitMix64 rng(17);
  VerticalLine line{0.2, 0.3, 1.0, 1e-3, 16};
  for (int trial = 0; trial < 3; ++trial) {
    Mat2 u = test::random_su2(rng);
    SmallSectionReport r = small_section_test(fundamental_d3(rotated(model_unitary_triple(0), u), line));
    ASSERT_TRUE(r.verdict);
    // sections transform by u^-1, so the direction is u^dagger (0, 1)
    cplx ov = u(1, 0) * r.direction[0] + u(1, 1) * r.direction[1];
    EXPECT_NEAR(std::abs(ov), 1.0, 1e-8);
  }
}

TEST(Transport, NoGapWithoutPhi1) {
  SmallSectionReport r = small_section_test(fundamental_d3(flat(), {}));
  EXPECT_FALSE(r.verdict);
  EXPECT_NEAR(r.exponent_small, 0.0, 1e-8);
}

TEST(Transport, WeakGapIsAmbiguous) {
  // phi1 = c T / y gives exponents -c/2 and c/2; a short window keeps the
  // singular values within a factor of ten
  FieldSampler f = [](double, double, double y) {
    UnitaryTriple t;
    t.phi1 = (1.0 / y) * model_T();
    return t;
  };
  EXPECT_THROW(small_section_test(fundamental_d3(f, {0, 0, 1.0, 1e-2, 16}), {0.5}, 0.05, 200), AmbiguousSubspace);
}

TEST(Transport, KnotArcRecordsPsiTrace) {
  KnotArc arc;
  arc.p = cplx(0.1, 0);
  arc.rho = 0.5;
  FundamentalTrace ft = fundamental_knot(model_unitary_triple(1, arc.p), arc);
  EXPECT_EQ(ft.variable, "psi");
  EXPECT_DOUBLE_EQ(ft.x.front(), 1.0);
  EXPECT_DOUBLE_EQ(ft.x.back(), 1e-3);
  for (auto& m : ft.y) EXPECT_NEAR(std::abs(m.det()), 1.0, 1e-8);
  ExponentFit e = growth_exponent(ft.section({1.0, 1.0}));
  EXPECT_TRUE(std::isfinite(e.exponent));
}

TEST(Transport, TraceCsvHasHeaderAndRows) {
  SectionTrace t = transport_d3(model_unitary_triple(0), {1.0, 1.0}, {});
  std::string path = std::string(::testing::TempDir()) + "bogo_trace.csv";
  write_trace_csv(path, t);
  std::ifstream in(path);
  std::string line;
  std::getline(in, line);
  EXPECT_EQ(line, "y,re_s1,im_s1,re_s2,im_s2");
  std::size_t rows = 0;
  while (std::getline(in, line)) ++rows;
  EXPECT_EQ(rows, t.x.size());
  std::remove(path.c_str());
}

TEST(Transport, KnotExponentsInElevationAngle) {
  // toward the boundary plane at fixed rho the exponents are -1/2 and +1/2;
  // toward the axis above the knot (psi -> 0) there is no gap
  for (int k = 1; k < 4; ++k) {
    KnotArc arc;
    arc.rho = 0.3;
    arc.from_plane = true;
    SmallSectionReport r = small_section_test(fundamental_knot(model_unitary_triple(k), arc));
    EXPECT_TRUE(r.verdict);
    EXPECT_NEAR(r.exponent_small, 0.5, 0.02);
    EXPECT_NEAR(r.exponent_large, -0.5, 0.02);
    EXPECT_NEAR(std::abs(r.direction[1]), 1.0, 1e-8);
    arc.from_plane = false;
    SmallSectionReport axis = small_section_test(fundamental_knot(model_unitary_triple(k), arc));
    EXPECT_FALSE(axis.verdict);
    EXPECT_LT(std::abs(axis.exponent_small), 0.01);
  }
}
