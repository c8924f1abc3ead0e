#include <gtest/gtest.h>

#include <cstdio>
#include <fstream>

#include <bogo/flow_solver.hpp>

#include "test_util.hpp"

using namespace bogo;

namespace {

TorusGrid strip(int n, int ny) { return TorusGrid::torus(n, 1, 4.0, 4.0, uniform_samples(ny, 1.0, 2.0)); }

// model metric times exp(diag(s, -s)) with s uniform in [-amp, amp] off the fixed nodes
MetricField perturbed(const MetricField& h, const TorusGrid& g, SplitMix64& rng, double amp) {
  MetricField out = h;
  for (int i2 = 0; i2 < g.n2(); ++i2)
    for (int i3 = 0; i3 < g.n3(); ++i3)
      for (std::size_t j = 1; j + 1 < g.ny(); ++j) {
        if (!g.x_interior(i2, i3)) continue;
        std::size_t q = g.index(i2, i3, j);
        double s = amp * rng.uniform(-1, 1);
        out.h[q] = HermMetric(h.h[q].mat() * exp_traceless(Mat2::diag(s, -s)));
      }
  return out;
}

double max_diff(const MetricField& a, const MetricField& b) {
  double e = 0;
  for (std::size_t q = 0; q < a.h.size(); ++q) e = std::max(e, (a.h[q].mat() - b.h[q].mat()).max_abs());
  return e;
}

std::string temp_path(const char* name) { return (std::string(::testing::TempDir()) + name); }

}  // namespace

TEST(FlowSolver, RelaxesPerturbationBackToModel) {
  TorusGrid g = strip(16, 16);
  MetricField model = model_metric(0, g);
  SplitMix64 rng(3);
  FlowResult r = flow_moment_map(perturbed(model, g, rng, 0.2), model_higgs(0, g), g);
  EXPECT_TRUE(r.converged);
  EXPECT_LT(r.history.back().sup, 1e-6);
  EXPECT_LT(max_diff(r.h, model), 1e-3);
  EXPECT_LT(r.max_det_error, 1e-14);
  EXPECT_EQ(r.max_herm_error, 0.0);
  EXPECT_EQ(r.history.size(), std::size_t(r.steps + 1));
}

TEST(FlowSolver, EquilibriumErrorIsSecondOrder) {
  // the discrete fixed point approaches the sampled model at O(h^2)
  double prev = 0;
  for (int n : {9, 17, 33}) {
    TorusGrid g = strip(4, n);
    MetricField model = model_metric(0, g);
    FlowParams p;
    p.tol = 1e-11;
    FlowResult r = flow_moment_map(model, model_higgs(0, g), g, p);
    ASSERT_TRUE(r.converged);
    double e = max_diff(r.h, model);
    if (prev > 0) EXPECT_NEAR(prev / e, 4.0, 0.4);
    prev = e;
  }
}

TEST(FlowSolver, ChartWithVortexBoundaryData) {
  TorusGrid g = TorusGrid::chart(9, 9, -1.0, 1.0, -0.8, 1.2, uniform_samples(9, 0.5, 2.0));
  MetricField model = model_metric(1, g);
  SplitMix64 rng(11);
  MetricField h0 = perturbed(model, g, rng, 0.2);
  FlowResult r = flow_moment_map(h0, model_higgs(1, g), g);
  ASSERT_TRUE(r.converged);
  EXPECT_LT(max_diff(r.h, model), 0.02);
  for (int i2 = 0; i2 < g.n2(); ++i2)
    for (int i3 = 0; i3 < g.n3(); ++i3)
      for (std::size_t j = 0; j < g.ny(); ++j)
        if (detail::fixed_node(g, i2, i3, j)) {
          std::size_t q = g.index(i2, i3, j);
          EXPECT_LT((r.h.h[q].mat() - h0.h[q].mat()).max_abs(), 1e-14);
        }
}

TEST(FlowSolver, ExplicitBoundaryOverridesInitialTraces) {
  TorusGrid g = strip(4, 9);
  MetricField model = model_metric(0, g);
  MetricField flat;
  flat.h.assign(g.size(), HermMetric(Mat2::identity()));
  FlowParams p;
  p.boundary = model;
  p.tol = 1e-10;
  FlowResult r = flow_moment_map(flat, model_higgs(0, g), g, p);
  ASSERT_TRUE(r.converged);
  EXPECT_LT(max_diff(r.h, model), 1e-3);
}

TEST(FlowSolver, ConstantGaugeConsistency) {
  // flowing g^dagger H0 g with Phi' = g^-1 Phi g ends at g^dagger H g
  SplitMix64 rng(5);
  TorusGrid g = strip(8, 9);
  MetricField model = model_metric(0, g);
  MetricField h0 = perturbed(model, g, rng, 0.2);
  auto phi = model_higgs(0, g);
  FlowParams p;
  p.tol = 1e-9;
  FlowResult base = flow_moment_map(h0, phi, g, p);
  for (int trial = 0; trial < 3; ++trial) {
    Mat2 a = test::random_traceless(rng, 0.4);
    Mat2 gm = exp_traceless(a);
    Mat2 gi = gm.inverse();
    MetricField h1 = h0;
    auto phi1 = phi;
    for (std::size_t q = 0; q < g.size(); ++q) {
      h1.h[q] = HermMetric(gm.adjoint() * h0.h[q].mat() * gm);
      phi1[q] = gi * phi[q] * gm;
    }
    FlowResult moved = flow_moment_map(h1, phi1, g, p);
    ASSERT_TRUE(moved.converged);
    double e = 0;
    for (std::size_t q = 0; q < g.size(); ++q)
      e = std::max(e, (moved.h.h[q].mat() - gm.adjoint() * base.h.h[q].mat() * gm).max_abs());
    EXPECT_LT(e, 1e-8);
  }
}

TEST(FlowSolver, StopsAtMaxStepsWithoutConverging) {
  TorusGrid g = strip(8, 9);
  MetricField model = model_metric(0, g);
  SplitMix64 rng(9);
  FlowParams p;
  p.max_steps = 5;
  FlowResult r = flow_moment_map(perturbed(model, g, rng, 0.2), model_higgs(0, g), g, p);
  EXPECT_FALSE(r.converged);
  EXPECT_EQ(r.steps, 5);
}

TEST(FlowSolver, OversizedStepIsHalvedOrRejected) {
  TorusGrid g = strip(8, 9);
  MetricField model = model_metric(0, g);
  SplitMix64 rng(13);
  MetricField h0 = perturbed(model, g, rng, 0.2);
  auto phi = model_higgs(0, g);
  double dt = stable_dt(model.matrices(), phi, g);
  FlowParams p;
  p.dt = 50 * dt;
  p.monotone_after = 0;
  p.max_halvings = 0;
  EXPECT_THROW(flow_moment_map(h0, phi, g, p), NonConvergence);
  p.max_halvings = 20;
  p.tol = 1e-8;
  FlowResult r = flow_moment_map(h0, phi, g, p);
  EXPECT_TRUE(r.converged);
  EXPECT_GT(r.rejected, 0);
}

TEST(FlowSolver, InputValidation) {
  TorusGrid g = strip(4, 9);
  MetricField model = model_metric(0, g);
  auto phi = model_higgs(0, g);
  MetricField short_field = model;
  short_field.h.pop_back();
  EXPECT_THROW(flow_moment_map(short_field, phi, g), DomainError);
  auto bad_phi = phi;
  bad_phi[3] = Mat2::identity();
  EXPECT_THROW(flow_moment_map(model, bad_phi, g), DomainError);
}

TEST(FlowSolver, DiagonalReductionMatchesScalarResidual) {
  SplitMix64 rng(21);
  AxiGrid g = AxiGrid::geometric(24, 0.1, 4.0, 24, 0.1, 4.0);
  for (int k = 0; k < 4; ++k) {
    double a = rng.uniform(-1, 1), b = rng.uniform(0.5, 2), c = rng.uniform(-1, 1);
    ScalarProfile p{std::vector<double>(g.size()), k};
    for (std::size_t i = 0; i < g.nr(); ++i)
      for (std::size_t j = 0; j < g.ny(); ++j)
        p.u[g.index(i, j)] = a * std::sin(b * g.r()[i]) * std::cos(g.y()[j]) + c * g.y()[j];
    DiagonalCheck d = diagonal_reduction_check(p, g);
    EXPECT_LT(d.discrepancy, 1e-10 * (1 + d.scalar_sup));
    EXPECT_GT(d.scalar_sup, 0.01);
  }
}

TEST(FlowSolver, CheckpointRoundTripIsExact) {
  SplitMix64 rng(2);
  for (TorusGrid g : {TorusGrid::torus(4, 3, 2.0, 3.0, geometric_samples(5, 0.5, 3.0), 1.5),
                      TorusGrid::chart(3, 4, -1.0, 1.0, 0.0, 2.0, uniform_samples(4, 1.0, 2.0))}) {
    MetricField m;
    for (std::size_t q = 0; q < g.size(); ++q) m.h.push_back(test::random_metric(rng));
    std::string path = temp_path("bogo_ckpt.bin");
    write_checkpoint(path, m, g);
    auto [g2, m2] = read_checkpoint(path);
    EXPECT_EQ(g2.n2(), g.n2());
    EXPECT_EQ(g2.n3(), g.n3());
    EXPECT_EQ(g2.periodic(), g.periodic());
    EXPECT_EQ(g2.y(), g.y());
    EXPECT_DOUBLE_EQ(g2.g0(), g.g0());
    EXPECT_NEAR(g2.h2(), g.h2(), 1e-15);
    for (std::size_t q = 0; q < g.size(); ++q) EXPECT_LT((m2.h[q].mat() - m.h[q].mat()).max_abs(), 1e-15);
    std::remove(path.c_str());
  }
}

TEST(FlowSolver, CheckpointRejectsForeignFiles) {
  std::string path = temp_path("bogo_not_ckpt.bin");
  {
    std::ofstream o(path, std::ios::binary);
    o << "NOTACKPT and more";
  }
  EXPECT_THROW(read_checkpoint(path), DomainError);
  {
    std::ofstream o(path, std::ios::binary);
    o << "BOGOCKPT";
  }
  EXPECT_THROW(read_checkpoint(path), DomainError);
  std::remove(path.c_str());
  EXPECT_THROW(read_checkpoint(path), DomainError);
}

TEST(FlowSolver, HistoryIsJsonLines) {
  TorusGrid g = strip(4, 9);
  MetricField model = model_metric(0, g);
  SplitMix64 rng(4);
  FlowParams p;
  p.max_steps = 3;
  FlowResult r = flow_moment_map(perturbed(model, g, rng, 0.1), model_higgs(0, g), g, p);
  std::string path = temp_path("bogo_hist.jsonl");
  write_flow_history(path, r.history);
  std::ifstream in(path);
  std::string line;
  int n = 0;
  while (std::getline(in, line)) {
    auto j = nlohmann::json::parse(line);
    EXPECT_EQ(j["step"].get<long>(), n);
    EXPECT_TRUE(j.contains("sup") && j.contains("l2") && j.contains("dt"));
    ++n;
  }
  EXPECT_EQ(n, 4);
  std::remove(path.c_str());
}
