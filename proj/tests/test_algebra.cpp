#include <gtest/gtest.h>

#include <bogo/algebra.hpp>

#include "test_util.hpp"

using namespace bogo;
using bogo::test::random_mat;
using bogo::test::random_metric;

namespace {

double dist(const Mat2& a, const Mat2& b) { return (a - b).max_abs(); }

}  // namespace

TEST(Mat2, RejectsNonFinite) {
  EXPECT_THROW(Mat2(std::nan(""), 0.0, 0.0, 0.0), DomainError);
  EXPECT_THROW(Mat2(0.0, cplx(0, INFINITY), 0.0, 0.0), DomainError);
}

TEST(Mat2, Predicates) {
  Mat2 t = Mat2::diag(cplx(0, 0.5), cplx(0, -0.5));
  EXPECT_TRUE(t.is_traceless());
  EXPECT_TRUE(t.is_antihermitian());
  EXPECT_FALSE(t.is_hermitian());
  EXPECT_TRUE(Mat2::e12().is_traceless());
  EXPECT_FALSE(Mat2::identity().is_traceless());
  EXPECT_TRUE(Mat2::diag(1e-13, 0.0).is_traceless());
  EXPECT_FALSE(Mat2::diag(1e-13, 0.0).is_traceless(1e-14));
}

TEST(HermMetric, SymmetrizesAndNormalizes) {
  HermMetric h(Mat2(4.0, cplx(1, 1), cplx(1, -1), 1.0));
  EXPECT_TRUE(h.mat().is_hermitian(0.0));
  EXPECT_NEAR(h.mat().det().real(), 1.0, 1e-12);
  auto ev = h.eigenvalues();
  EXPECT_GT(ev[0], 0.0);
  EXPECT_NEAR(ev[0] * ev[1], 1.0, 1e-12);
  EXPECT_THROW(HermMetric(Mat2::diag(1.0, -1.0)), DomainError);
  EXPECT_THROW(HermMetric(Mat2::zero()), DomainError);
}

TEST(HermAdjoint, Examples) {
  EXPECT_LT(dist(herm_adjoint(Mat2::e21(), HermMetric()), Mat2::e12()), 1e-15);
  EXPECT_LT(dist(herm_adjoint(Mat2::diag(cplx(0, 1), cplx(0, -1)), HermMetric()),
                 Mat2::diag(cplx(0, -1), cplx(0, 1))),
            1e-15);
  double u = 0.7;
  cplx f(0.3, -1.2);
  HermMetric h = HermMetric::diag(std::exp(-u));
  Mat2 expect(0.0, 0.0, std::exp(-2 * u) * std::conj(f), 0.0);
  EXPECT_LT(dist(herm_adjoint(f * Mat2::e12(), h), expect), 1e-14);
}

TEST(HermAdjoint, InvolutionAntilinearAndProducts) {
  SplitMix64 rng(1);
  for (int trial = 0; trial < 50; ++trial) {
    Mat2 m = random_mat(rng), n = random_mat(rng);
    HermMetric h = random_metric(rng);
    cplx a = rng.complex_normal();
    EXPECT_LT(dist(herm_adjoint(herm_adjoint(m, h), h), m), 1e-12);
    EXPECT_LT(dist(herm_adjoint(a * m, h), std::conj(a) * herm_adjoint(m, h)), 1e-12);
    EXPECT_LT(dist(herm_adjoint(m * n, h), herm_adjoint(n, h) * herm_adjoint(m, h)), 1e-12);
    EXPECT_TRUE(herm_adjoint(m.traceless_part(), h).is_traceless());
  }
}

TEST(CholeskyLikeFactor, Examples) {
  EXPECT_LT(dist(cholesky_like_factor(HermMetric()), Mat2::identity()), 1e-15);
  double u = 1.3;
  Mat2 g = cholesky_like_factor(HermMetric::diag(std::exp(-u)));
  EXPECT_LT(dist(g, Mat2::diag(std::exp(-u / 2), std::exp(u / 2))), 1e-14);
  SplitMix64 rng(2);
  for (int trial = 0; trial < 100; ++trial) {
    HermMetric h = random_metric(rng, 1.5);
    Mat2 f = cholesky_like_factor(h);
    EXPECT_TRUE(f.is_hermitian(1e-14));
    EXPECT_LT((f.adjoint() * f - h.mat()).norm(), 1e-10);
    EXPECT_GT(f.trace().real(), 0.0);
  }
}

TEST(MatrixFunctions, LogInvertsExp) {
  SplitMix64 rng(3);
  for (double scale : {1e-9, 1e-5, 1e-3, 0.1, 2.0}) {
    for (int trial = 0; trial < 20; ++trial) {
      Mat2 x = bogo::test::random_traceless(rng, scale);
      x = 0.5 * (x + x.adjoint());
      EXPECT_LT((log_unimodular(exp_traceless(x)) - x).max_abs(), 1e-14 + 1e-13 * scale);
    }
  }
}

TEST(GaugeConjugate, IdentityAndDiagonal) {
  SplitMix64 rng(4);
  OperatorData d{random_mat(rng), random_mat(rng), random_mat(rng), random_metric(rng).mat()};
  OperatorData e = gauge_conjugate(GaugeJet::constant(Mat2::identity()), d);
  EXPECT_LT(dist(e.d1, d.d1) + dist(e.d2, d.d2) + dist(e.d3, d.d3) + dist(e.h, d.h), 1e-15);

  cplx f(0.4, 0.9), a(1.7, 0.2);
  OperatorData p{{}, f * Mat2::e12(), {}, Mat2::identity()};
  OperatorData q = gauge_conjugate(GaugeJet::constant(Mat2::diag(a, 1.0 / a)), p);
  EXPECT_LT(dist(q.d2, (f / (a * a)) * Mat2::e12()), 1e-14);
}

TEST(GaugeConjugate, SingularGaugeThrows) {
  OperatorData d;
  EXPECT_THROW(gauge_conjugate(GaugeJet::constant(Mat2::diag(1e-6, 1e-6)), d), SingularGauge);
}

TEST(GaugeConjugate, CompositionLaw) {
  SplitMix64 rng(5);
  for (int trial = 0; trial < 30; ++trial) {
    GaugeJet g1{random_mat(rng) + 3.0 * Mat2::identity(), random_mat(rng), random_mat(rng),
                random_mat(rng)};
    GaugeJet g2{random_mat(rng) + 3.0 * Mat2::identity(), random_mat(rng), random_mat(rng),
                random_mat(rng)};
    OperatorData d{random_mat(rng), random_mat(rng), random_mat(rng), random_metric(rng).mat()};
    OperatorData a = gauge_conjugate(g2, gauge_conjugate(g1, d));
    OperatorData b = gauge_conjugate(g1 * g2, d);
    double scale = 1 + d.h.max_abs() * (g1 * g2).g.max_abs() * (g1 * g2).g.max_abs();
    EXPECT_LT(dist(a.d1, b.d1), 1e-10);
    EXPECT_LT(dist(a.d2, b.d2), 1e-10);
    EXPECT_LT(dist(a.d3, b.d3), 1e-10);
    EXPECT_LT(dist(a.h, b.h), 1e-12 * scale);
  }
}

// the charge-k phase of z^k e12 is removed by a diagonal constant-modulus gauge
TEST(GaugeConjugate, PhaseAbsorption) {
  for (int k : {1, 2, 3}) {
    for (double th : {0.3, 1.9, -2.5}) {
      double r = 0.8;
      cplx z = std::polar(r, th);
      OperatorData d{{}, std::pow(z, k) * Mat2::e12(), {}, Mat2::identity()};
      // g^-1 phi g with g = diag(e^{ik th/2}, e^{-ik th/2})
      Mat2 g = Mat2::diag(std::polar(1.0, k * th / 2), std::polar(1.0, -k * th / 2));
      OperatorData e = gauge_conjugate(GaugeJet::constant(g), d);
      EXPECT_LT(dist(e.d2, std::pow(r, k) * Mat2::e12()), 1e-14);
      EXPECT_LT(dist(e.h, Mat2::identity()), 1e-15);
    }
  }
}

TEST(UnitaryTriple, RoundTrip) {
  SplitMix64 rng(6);
  auto ah = [&] {
    Mat2 m = random_mat(rng);
    return 0.5 * (m - m.adjoint());
  };
  UnitaryTriple t{ah(), ah(), ah(), random_mat(rng).traceless_part(), ah()};
  UnitaryTriple s = to_unitary(to_operator(t));
  EXPECT_LT(dist(s.a2, t.a2) + dist(s.a3, t.a3) + dist(s.ay, t.ay) + dist(s.phi1, t.phi1) +
                dist(s.phi_z, t.phi_z),
            1e-14);
}
