#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "test_graphs.hpp"

using namespace heatk;

namespace {

double two_state_same(double t) { return (1 + std::exp(-2 * t)) / 2; }
double two_state_other(double t) { return (1 - std::exp(-2 * t)) / 2; }

double max_oracle_gap(const DirichletDomain& dom, double t) {
  const auto K = dense_kernel_oracle(dom, t);
  double gap = 0.0;
  for (std::size_t i = 0; i < dom.size(); ++i) {
    const auto f = dirichlet_heat_kernel(dom, t, dom.vertex(i));
    for (std::size_t j = 0; j < dom.size(); ++j) gap = std::max(gap, std::abs(f(dom.vertex(j)) - K(i, j)));
  }
  return gap;
}

}  // namespace

TEST(DirichletKernel, SingleVertexIsInverseMeasure) {
  const auto g = testg::make(1, {}, {2.0});
  for (double t : {0.1, 1.0, 50.0}) EXPECT_DOUBLE_EQ(finite_heat_kernel(g, t, 0)(0), 0.5);
}

TEST(DirichletKernel, CenterOfPathDecaysAtRateTwo) {
  const auto g = testg::path(3);
  const DirichletDomain U(g, {1});
  EXPECT_TRUE(U.has_killing());
  for (double t : {0.25, 1.0, 3.0}) EXPECT_NEAR(dirichlet_heat_kernel(U, t, 1)(1), std::exp(-2 * t), 1e-13);
}

TEST(DirichletKernel, TwoVertexClosedForm) {
  const auto g = testg::two_vertex();
  EXPECT_NEAR(finite_heat_kernel(g, 1.0, 0)(0), 0.5676676, 1e-7);
  for (double t : {0.5, 1.0, 2.0}) {
    const auto f = finite_heat_kernel(g, t, 0);
    EXPECT_NEAR(f(0), two_state_same(t), 1e-12);
    EXPECT_NEAR(f(1), two_state_other(t), 1e-12);
    EXPECT_LE(f.truncation_error, kDefaultSeriesEps);
    EXPECT_EQ(f.domain_tag, "exact");
  }
}

TEST(DirichletKernel, ErrorPaths) {
  const auto g = testg::path(3);
  const DirichletDomain U(g, {1});
  EXPECT_THROW(dirichlet_heat_kernel(U, 1.0, 0), DomainError);
  EXPECT_THROW(dirichlet_heat_kernel(U, 0.0, 1), DomainError);
  EXPECT_THROW(dirichlet_heat_kernel(U, -1.0, 1), DomainError);
  EXPECT_THROW(dirichlet_heat_kernel(U, 1.0, 1, 0.0), DomainError);
  EXPECT_THROW(DirichletDomain(g, {}), DomainError);
  EXPECT_THROW(DirichletDomain(g, {1, 1}), DomainError);
}

TEST(DirichletKernel, GeneratorUsesFullParentDegree) {
  const auto g = testg::path(4);
  const DirichletDomain U(g, {1, 2});
  EXPECT_DOUBLE_EQ(U.rate(0), 2.0);
  EXPECT_DOUBLE_EQ(U.lambda_unif(), 2.0);
  EXPECT_LE(U.lambda_unif(), g.d_mu());
}

TEST(DirichletKernel, FieldInvariantsOnRandomGraphs) {
  std::mt19937_64 rng(31);
  for (int trial = 0; trial < 10; ++trial) {
    const auto g = testg::random_graph(rng, 20, 15);
    for (double t : {0.05, 1.0, 7.0}) {
      const auto f = finite_heat_kernel(g, t, 3);
      f.values.for_each([](VertexId, double p) { EXPECT_GE(p, 0.0); });
      EXPECT_LE(f.mass(g), 1.0 + f.truncation_error + 1e-14);
      EXPECT_NEAR(f.mass(g), 1.0, 1e-10);
    }
    // a proper subset kills mass
    std::vector<VertexId> sub;
    for (VertexId v = 0; v < 10; ++v) sub.push_back(v);
    const DirichletDomain U(g, sub);
    if (U.has_killing()) EXPECT_LT(dirichlet_heat_kernel(U, 2.0, 0).mass(g), 1.0);
  }
}

TEST(DenseOracle, AgreesWithUniformization) {
  const auto grid = testg::grid(9, 9);
  std::vector<WeightedGraph> graphs;
  graphs.push_back(testg::two_vertex());
  graphs.push_back(testg::cycle(5));
  graphs.push_back(testg::path(7));
  for (const auto& g : graphs) {
    for (double t : {0.1, 1.0, 10.0}) EXPECT_LE(max_oracle_gap(DirichletDomain::whole(g), t), 1e-10) << t;
  }
  for (double t : {0.1, 1.0, 10.0}) EXPECT_LE(max_oracle_gap(DirichletDomain::whole(grid.graph), t), 1e-10) << t;
  // and with killing
  const auto box = testg::box(2, 6);
  const auto U = DirichletDomain::ball(box.graph, box.center, 3);
  for (double t : {0.1, 1.0, 10.0}) EXPECT_LE(max_oracle_gap(U, t), 1e-10) << t;
}

TEST(DenseOracle, WeightedGraphAgreement) {
  std::mt19937_64 rng(41);
  const auto g = testg::random_graph(rng, 25, 20);
  for (double t : {0.1, 1.0, 10.0}) EXPECT_LE(max_oracle_gap(DirichletDomain::whole(g), t), 1e-10);
}

TEST(DenseOracle, SmallTimeIsInverseMeasureDiagonal) {
  const auto g = testg::make(3, {{0, 1, 1}, {1, 2, 2}}, {1, 2, 4});
  const auto K = dense_kernel_oracle(g, 1e-9);
  for (VertexId i = 0; i < 3; ++i) {
    for (VertexId j = 0; j < 3; ++j) EXPECT_NEAR(K(i, j), i == j ? 1.0 / g.measure(i) : 0.0, 1e-8);
  }
}

TEST(DenseOracle, TwoVertexClosedForm) {
  const auto K = dense_kernel_oracle(testg::two_vertex(), 1.0);
  EXPECT_NEAR(K(0, 0), two_state_same(1.0), 1e-12);
  EXPECT_NEAR(K(0, 1), two_state_other(1.0), 1e-12);
}

TEST(DenseOracle, RejectsLargeGraphs) {
  const auto big = testg::path(kDenseOracleLimit + 1);
  EXPECT_THROW(dense_kernel_oracle(big, 1.0), DomainError);
}

TEST(SmallTime, DiagonalApproachesInverseMeasureMonotonically) {
  std::mt19937_64 rng(51);
  const auto g = testg::random_graph(rng, 12, 10);
  double prev = std::numeric_limits<double>::infinity();
  for (int k = 1; k <= 6; ++k) {
    const double t = std::pow(10.0, -k);
    double gap = 0.0;
    for (VertexId x = 0; x < g.size(); ++x) gap = std::max(gap, std::abs(g.measure(x) * finite_heat_kernel(g, t, x)(x) - 1.0));
    EXPECT_LT(gap, prev);
    prev = gap;
  }
  EXPECT_LT(prev, 1e-5);
}

TEST(Domination, NestedBoxesIncrease) {
  const auto box = testg::box(2, 10);
  const auto& g = box.graph;
  const auto small = DirichletDomain::ball(g, box.center, 3);
  const auto large = DirichletDomain::ball(g, box.center, 6);
  const auto whole = DirichletDomain::whole(g);
  for (double t : {0.5, 2.0, 8.0}) {
    const auto a = dirichlet_heat_kernel(small, t, box.center);
    const auto b = dirichlet_heat_kernel(large, t, box.center);
    const auto c = dirichlet_heat_kernel(whole, t, box.center);
    a.values.for_each([&](VertexId y, double p) {
      EXPECT_LE(p, b(y) + 1e-12);
      EXPECT_LE(b(y), c(y) + 1e-12);
    });
  }
}

TEST(Exhaustion, FiniteGraphReachesWholeGraph) {
  const auto g = testg::path(9);
  auto sched = ExhaustionSchedule::doubling(4, 1, 8);
  const auto res = heat_kernel_traced(g, sched, 1.0, 4);
  EXPECT_TRUE(res.field.exact_domain());
  const auto direct = finite_heat_kernel(g, 1.0, 4);
  for (VertexId y = 0; y < g.size(); ++y) EXPECT_NEAR(res.field(y), direct(y), 1e-15);
}

TEST(Exhaustion, TwoVertexAnySchedule) {
  const auto g = testg::two_vertex();
  for (Distance first : {1, 2, 5}) {
    const auto f = heat_kernel(g, ExhaustionSchedule::doubling(0, first, 8), 1.0, 0);
    EXPECT_NEAR(f(1), 0.4323324, 1e-7);
  }
}

TEST(Exhaustion, LineDiagonalIsNondecreasingAndConverges) {
  const auto line = testg::box(1, 200);
  const auto res = heat_kernel_traced(line.graph, ExhaustionSchedule::doubling(line.center, 2, 128), 1.0, line.center);
  for (std::size_t k = 1; k < res.steps.size(); ++k) {
    EXPECT_GE(res.steps[k].diagonal, res.steps[k - 1].diagonal);
    EXPECT_LE(res.steps[k].monotone_violation, 1e-12);
  }
  EXPECT_LT(res.steps.back().max_change, 1e-10);
  // p(1,0,0) on Z is e^{-2} I_0(2)
  EXPECT_NEAR(res.field(line.center), std::exp(-2.0) * std::cyl_bessel_i(0.0, 2.0), 1e-10);
  EXPECT_LE(res.field.truncation_error, 1e-9);
}

TEST(Exhaustion, PlaneConverges) {
  const auto plane = testg::box(2, 40);
  const auto res = heat_kernel_traced(plane.graph, ExhaustionSchedule::doubling(plane.center, 2, 32), 1.0, plane.center);
  EXPECT_LT(res.steps.back().max_change, 1e-10);
  const double i0 = std::exp(-2.0) * std::cyl_bessel_i(0.0, 2.0);
  EXPECT_NEAR(res.field(plane.center), i0 * i0, 1e-10);
}

TEST(Exhaustion, ScheduleExhaustedCarriesIterates) {
  const auto line = testg::box(1, 100);
  try {
    heat_kernel(line.graph, ExhaustionSchedule::doubling(line.center, 1, 2), 5.0, line.center);
    FAIL();
  } catch (const ScheduleExhausted& e) {
    EXPECT_LT(e.previous()(line.center), e.last()(line.center));
  }
}

TEST(Exhaustion, ValidatesSchedule) {
  const auto g = testg::path(5);
  ExhaustionSchedule s;
  s.center = 2;
  EXPECT_THROW(heat_kernel(g, s, 1.0, 2), DomainError);
  s.radii = {2, 1};
  EXPECT_THROW(heat_kernel(g, s, 1.0, 2), DomainError);
  s.radii = {1, 2};
  EXPECT_THROW(heat_kernel(g, s, 1.0, 4), DomainError);
  EXPECT_THROW(ExhaustionSchedule::doubling(0, 0, 4), DomainError);
}

TEST(HeatEvolve, Examples) {
  const auto g = testg::two_vertex();
  const auto u = heat_evolve(g, VertexFunction::dense({1, 0}), 1.0);
  EXPECT_NEAR(u(0), two_state_same(1.0), 1e-12);
  EXPECT_NEAR(u(1), two_state_other(1.0), 1e-12);

  const auto c = testg::cycle(7);
  const auto one = heat_evolve(c, VertexFunction::constant(7, 1.0), 3.0);
  for (VertexId v = 0; v < 7; ++v) EXPECT_NEAR(one(v), 1.0, 1e-12);
}

TEST(HeatEvolve, ReproducesKernelAndSolvesHeatEquation) {
  std::mt19937_64 rng(61);
  const auto g = testg::random_graph(rng, 15, 10);
  const VertexId y = 4;
  const double t = 0.7;
  const auto u = heat_evolve(g, VertexFunction::indicator(y, 1.0 / g.measure(y)), t);
  for (VertexId x = 0; x < g.size(); ++x) EXPECT_NEAR(u(x), finite_heat_kernel(g, t, x)(y), 1e-12);

  std::vector<double> u0(g.size());
  std::normal_distribution<double> nd;
  for (auto& v : u0) v = nd(rng);
  const auto f0 = VertexFunction::dense(u0);
  const double h = 1e-3;
  const auto up = heat_evolve(g, f0, t + h), um = heat_evolve(g, f0, t - h), uc = heat_evolve(g, f0, t);
  const auto lap = laplacian_apply(g, uc);
  for (VertexId x = 0; x < g.size(); ++x) EXPECT_NEAR((up(x) - um(x)) / (2 * h), lap(x), 1e-5);

  // against the dense oracle
  const auto K = dense_kernel_oracle(g, t);
  for (VertexId x = 0; x < g.size(); ++x) {
    double expect = 0.0;
    for (VertexId z = 0; z < g.size(); ++z) expect += g.measure(z) * K(x, z) * u0[z];
    EXPECT_NEAR(uc(x), expect, 1e-10);
  }
  // small time
  const auto tiny = heat_evolve(g, f0, 1e-8);
  for (VertexId x = 0; x < g.size(); ++x) EXPECT_NEAR(tiny(x), u0[x], 1e-6);
}

TEST(HeatEvolve, RejectsUnboundedData) {
  const auto g = testg::two_vertex();
  EXPECT_THROW(heat_evolve(g, VertexFunction::dense({INFINITY, 0}), 1.0), DomainError);
}

TEST(PoissonWeightsTest, TailCertificate) {
  for (double a : {0.01, 1.0, 30.0, 400.0}) {
    const auto pw = PoissonWeights::build(a, 1e-12);
    double sum = 0.0;
    for (double w : pw.weights) sum += w;
    EXPECT_LE(pw.tail_bound, 1e-12);
    EXPECT_NEAR(sum, 1.0, 1e-11);
    EXPECT_GE(1.0 - sum, -1e-13);
  }
}
