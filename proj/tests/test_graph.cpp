#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "test_graphs.hpp"

using namespace heatk;

TEST(BuildGraph, TwoVertex) {
  const auto g = testg::two_vertex();
  EXPECT_EQ(g.size(), 2u);
  EXPECT_EQ(g.edge_count(), 1u);
  EXPECT_DOUBLE_EQ(g.d_mu(), 1.0);
  EXPECT_DOUBLE_EQ(g.mu0(), 1.0);
}

TEST(BuildGraph, DegreeMeasureGivesUnitDmu) {
  // star plus a triangle, mu = combinatorial degree
  const auto g = testg::make(5, {{0, 1, 1}, {0, 2, 1}, {0, 3, 1}, {3, 4, 1}, {2, 3, 1}}, {3, 1, 2, 3, 1});
  EXPECT_DOUBLE_EQ(g.d_mu(), 1.0);
}

TEST(BuildGraph, PathDmuAttainedAtMiddle) {
  const auto g = testg::path(3);
  EXPECT_DOUBLE_EQ(g.d_mu(), 2.0);
  EXPECT_EQ(g.d_mu_vertex(), 1u);
  EXPECT_DOUBLE_EQ(g.weighted_degree(1), 2.0);
}

TEST(BuildGraph, RejectsInvalidInput) {
  EXPECT_THROW(testg::make(2, {{0, 1, 1}}, {1, 0}), GraphError);
  EXPECT_THROW(testg::make(2, {{0, 1, 1}}, {1, -2}), GraphError);
  EXPECT_THROW(testg::make(2, {{0, 1, -1}}), GraphError);
  EXPECT_THROW(testg::make(2, {{0, 1, 1}, {1, 0, 2}}), GraphError);
  EXPECT_THROW(testg::make(3, {{0, 1, 1}}), GraphError);
  EXPECT_THROW(testg::make(2, {{0, 0, 1}, {0, 1, 1}}), GraphError);
  EXPECT_THROW(testg::make(2, {{0, 5, 1}}), Error);
  EXPECT_THROW(testg::make(2, {{0, 1, std::nan("")}}), GraphError);
}

TEST(BuildGraph, ErrorNamesOffendingElement) {
  try {
    testg::make(3, {{0, 1, 1}, {1, 2, -0.5}});
    FAIL();
  } catch (const GraphError& e) {
    EXPECT_NE(std::string(e.what()).find("(1, 2)"), std::string::npos) << e.what();
  }
}

TEST(BuildGraph, SymmetricDuplicateAccepted) {
  const auto g = testg::make(2, {{0, 1, 2}, {1, 0, 2}});
  EXPECT_EQ(g.edge_count(), 1u);
  EXPECT_DOUBLE_EQ(g.weight(0, 1), 2.0);
}

TEST(BuildGraph, ZeroWeightEdgesAreDropped) {
  // a-b-c with an extra zero-weight chord a-c: the metric ignores the chord
  const auto g = testg::make(3, {{0, 1, 1}, {1, 2, 1}, {0, 2, 0}});
  EXPECT_EQ(g.edge_count(), 2u);
  EXPECT_EQ(graph_distance(g, 0, 2), 2);
  // a zero-weight edge cannot connect a graph
  EXPECT_THROW(testg::make(2, {{0, 1, 0}}), GraphError);
}

TEST(BuildGraph, MuLowerBound) {
  GraphSpec s;
  s.vertex_count = 2;
  s.edges = {{0, 1, 1}};
  s.measure = {2, 3};
  s.mu_lower_bound = 1.5;
  EXPECT_DOUBLE_EQ(WeightedGraph::build(s).mu0(), 1.5);
  s.mu_lower_bound = 2.5;
  EXPECT_THROW(WeightedGraph::build(s), GraphError);
}

TEST(BuildGraph, Labels) {
  GraphSpec s;
  s.vertex_count = 2;
  s.labels = {"a", "b"};
  s.edges = {{0, 1, 1}};
  s.measure = {1, 1};
  const auto g = WeightedGraph::build(s);
  EXPECT_EQ(g.label(1), "b");
  EXPECT_EQ(*g.find("a"), 0u);
  EXPECT_FALSE(g.find("z").has_value());
}

TEST(BuildGraph, SingleVertex) {
  const auto g = testg::make(1, {}, {2.0});
  EXPECT_EQ(g.size(), 1u);
  EXPECT_DOUBLE_EQ(g.d_mu(), 0.0);
}

TEST(GraphDistance, Examples) {
  const auto p = testg::path(4);
  EXPECT_EQ(graph_distance(p, 0, 3), 3);
  EXPECT_EQ(graph_distance(p, 2, 2), 0);
  EXPECT_EQ(graph_distance(testg::cycle(4), 0, 2), 2);
  EXPECT_THROW(graph_distance(p, 0, 9), LookupError);
}

TEST(GraphDistance, MetricAxiomsOnRandomGraphs) {
  std::mt19937_64 rng(7);
  for (int trial = 0; trial < 20; ++trial) {
    const auto g = testg::random_graph(rng, 12, 8);
    std::vector<std::vector<Distance>> d;
    for (VertexId x = 0; x < g.size(); ++x) d.push_back(distances_from(g, x));
    for (VertexId x = 0; x < g.size(); ++x) {
      for (VertexId y = 0; y < g.size(); ++y) {
        EXPECT_GE(d[x][y], 0);
        EXPECT_EQ(d[x][y] == 0, x == y);
        EXPECT_EQ(d[x][y], d[y][x]);
        for (VertexId z = 0; z < g.size(); ++z) EXPECT_LE(d[x][z], d[x][y] + d[y][z]);
      }
    }
  }
}

TEST(Ball, Examples) {
  const auto p = testg::path(5);
  const auto b0 = ball(p, 3, 0);
  EXPECT_EQ(b0.members, std::vector<VertexId>{3});
  EXPECT_DOUBLE_EQ(b0.volume, 1.0);
  const auto b1 = ball(p, 2, 1);
  EXPECT_EQ(b1.members, (std::vector<VertexId>{1, 2, 3}));
  EXPECT_DOUBLE_EQ(b1.volume, 3.0);

  const auto box = testg::box(2, 6);
  EXPECT_DOUBLE_EQ(ball(box.graph, box.center, 2).volume, 13.0);
}

TEST(Ball, VolumesNondecreasingAndStabilize) {
  std::mt19937_64 rng(11);
  const auto g = testg::random_graph(rng, 30, 10);
  const auto prof = ball_volume_profile(g, 0, 40);
  for (std::size_t r = 1; r < prof.size(); ++r) EXPECT_GE(prof[r], prof[r - 1]);
  EXPECT_NEAR(prof.back(), g.total_measure(), 1e-12);
  for (Distance r = 0; r < 5; ++r) {
    const auto a = ball(g, 0, r), b = ball(g, 0, r + 1);
    for (VertexId v : a.members) EXPECT_TRUE(b.contains(v));
  }
}

TEST(Laplacian, Examples) {
  const auto c = laplacian_apply(testg::cycle(5), VertexFunction::constant(5, 3.0));
  for (VertexId v = 0; v < 5; ++v) EXPECT_DOUBLE_EQ(c(v), 0.0);

  const auto two = laplacian_apply(testg::two_vertex(), VertexFunction::dense({1, 0}));
  EXPECT_DOUBLE_EQ(two(0), -1.0);
  EXPECT_DOUBLE_EQ(two(1), 1.0);

  const auto p = laplacian_apply(testg::path(3), VertexFunction::dense({0, 1, 0}));
  EXPECT_DOUBLE_EQ(p(0), 1.0);
  EXPECT_DOUBLE_EQ(p(1), -2.0);
  EXPECT_DOUBLE_EQ(p(2), 1.0);
}

TEST(Laplacian, SparseInputMatchesDense) {
  const auto g = testg::path(6);
  const auto sparse = laplacian_apply(g, VertexFunction::indicator(2, 2.0));
  const auto dense = laplacian_apply(g, VertexFunction::dense({0, 0, 2, 0, 0, 0}));
  for (VertexId v = 0; v < 6; ++v) EXPECT_DOUBLE_EQ(sparse(v), dense(v));
}

TEST(GammaForm, Examples) {
  const auto g = testg::two_vertex();
  const auto f = VertexFunction::dense({1, 0});
  const auto gam = gamma_form(g, f);
  EXPECT_DOUBLE_EQ(gam(0), 0.5);
  EXPECT_DOUBLE_EQ(gam(1), 0.5);
  const auto zero = gamma_form(g, f, VertexFunction::constant(2, 4.0));
  EXPECT_DOUBLE_EQ(zero(0), 0.0);
  EXPECT_DOUBLE_EQ(zero(1), 0.0);
}

TEST(GammaForm, NonnegativeAndSymmetricOnRandomGraphs) {
  std::mt19937_64 rng(3);
  std::normal_distribution<double> nd;
  for (int trial = 0; trial < 20; ++trial) {
    const auto g = testg::random_graph(rng, 10, 10);
    std::vector<double> a(g.size()), b(g.size());
    for (auto& x : a) x = nd(rng);
    for (auto& x : b) x = nd(rng);
    const auto f = VertexFunction::dense(a), h = VertexFunction::dense(b);
    const auto gf = gamma_form(g, f), gfh = gamma_form(g, f, h), ghf = gamma_form(g, h, f);
    for (VertexId v = 0; v < g.size(); ++v) {
      EXPECT_GE(gf(v), 0.0);
      EXPECT_NEAR(gfh(v), ghf(v), 1e-14 * (1 + std::abs(gfh(v))));
    }
  }
}

TEST(InnerProduct, Examples) {
  const auto g = testg::make(3, {{0, 1, 1}, {1, 2, 1}}, {2, 3, 5});
  EXPECT_DOUBLE_EQ(mu_inner_product(g, VertexFunction::indicator(1), VertexFunction::indicator(1)), 3.0);
  EXPECT_DOUBLE_EQ(mu_inner_product(g, VertexFunction::indicator(0), VertexFunction::indicator(2)), 0.0);
}

TEST(InnerProduct, GreenIdentityAndSummationByParts) {
  std::mt19937_64 rng(5);
  std::normal_distribution<double> nd;
  for (int trial = 0; trial < 30; ++trial) {
    const auto g = testg::random_graph(rng, 15, 12);
    std::vector<double> a(g.size()), b(g.size());
    for (auto& x : a) x = nd(rng);
    for (auto& x : b) x = nd(rng);
    const auto f = VertexFunction::dense(a), h = VertexFunction::dense(b);
    const auto lf = laplacian_apply(g, f), lh = laplacian_apply(g, h);
    const double lhs = -mu_inner_product(g, lf, h);
    const double mid = -mu_inner_product(g, f, lh);
    double rhs = 0.0;
    gamma_form(g, f, h).for_each([&](VertexId v, double x) { rhs += g.measure(v) * x; });
    const double scale = std::max(1.0, std::abs(rhs));
    EXPECT_NEAR(lhs, rhs, 1e-12 * scale);
    EXPECT_NEAR(mid, rhs, 1e-12 * scale);
    double energy = 0.0;
    gamma_form(g, f).for_each([&](VertexId v, double x) { energy += g.measure(v) * x; });
    EXPECT_NEAR(-mu_inner_product(g, lf, f), energy, 1e-12 * std::max(1.0, energy));
  }
}

TEST(Invariants, DegreeRatioBoundedByDmu) {
  std::mt19937_64 rng(9);
  for (int trial = 0; trial < 20; ++trial) {
    const auto g = testg::random_graph(rng, 20, 15);
    bool attained = false;
    for (VertexId v = 0; v < g.size(); ++v) {
      const double r = g.weighted_degree(v) / g.measure(v);
      EXPECT_LE(r, g.d_mu());
      attained = attained || r == g.d_mu();
    }
    EXPECT_TRUE(attained);
  }
}

TEST(VertexFunctionTest, SparseEvaluatesZeroOffSupport) {
  const auto f = VertexFunction::sparse({4, 1}, {2.0, 3.0});
  EXPECT_DOUBLE_EQ(f(1), 3.0);
  EXPECT_DOUBLE_EQ(f(4), 2.0);
  EXPECT_DOUBLE_EQ(f(2), 0.0);
  EXPECT_EQ(f.support(), (std::vector<VertexId>{1, 4}));
}
