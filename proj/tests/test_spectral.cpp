#include <gtest/gtest.h>

#include <random>

#include "test_graphs.hpp"

using namespace heatk;

TEST(LambdaBottom, FiniteGraphIsZeroWithConstantWitness) {
  std::mt19937_64 rng(91);
  const auto g = testg::random_graph(rng, 15, 10);
  const auto b = lambda_bottom(g);
  EXPECT_LE(std::abs(b.lambda), 1e-10);
  EXPECT_GE(b.lambda, 0.0);
  const double c = b.witness(0);
  for (VertexId v = 0; v < g.size(); ++v) EXPECT_NEAR(b.witness(v), c, 1e-9);
  EXPECT_EQ(b.domain_tag, "exact");
}

TEST(LambdaBottom, SingleKilledVertex) {
  const auto g = testg::path(3);
  const auto b = lambda_bottom(DirichletDomain(g, {1}));
  EXPECT_NEAR(b.lambda, 2.0, 1e-12);
}

TEST(LambdaBottom, TwoPointDomain) {
  const auto g = testg::path(4);
  const auto b = lambda_bottom(DirichletDomain(g, {1, 2}));
  EXPECT_NEAR(b.lambda, 1.0, 1e-10);
  EXPECT_LE(b.residual, 1e-10);
  EXPECT_NEAR(b.witness(1), b.witness(2), 1e-9);
}

TEST(LambdaBottom, MatchesDenseOracle) {
  std::mt19937_64 rng(101);
  const auto box = testg::box(2, 8);
  std::vector<DirichletDomain> doms;
  doms.push_back(DirichletDomain::ball(box.graph, box.center, 2));
  doms.push_back(DirichletDomain::ball(box.graph, box.center, 5));
  const auto g = testg::random_graph(rng, 30, 20);
  std::vector<VertexId> sub;
  for (VertexId v = 0; v < 18; ++v) sub.push_back(v);
  doms.emplace_back(g, sub);
  for (const auto& d : doms) {
    const auto b = lambda_bottom(d);
    EXPECT_NEAR(b.lambda, DenseSpectrum(d).smallest(), 1e-8) << d.tag();
    EXPECT_NEAR(rayleigh_quotient(d, [&] {
                  std::vector<double> f(d.size());
                  for (std::size_t i = 0; i < d.size(); ++i) f[i] = b.witness(d.vertex(i));
                  return f;
                }()),
                b.lambda, 1e-8);
  }
}

TEST(LambdaBottom, RayleighQuotientDominatesLambda) {
  std::mt19937_64 rng(111);
  std::normal_distribution<double> nd;
  const auto box = testg::box(2, 6);
  const auto d = DirichletDomain::ball(box.graph, box.center, 4);
  const auto b = lambda_bottom(d);
  for (int k = 0; k < 200; ++k) {
    std::vector<double> f(d.size());
    for (auto& x : f) x = nd(rng);
    EXPECT_GE(rayleigh_quotient(d, f), b.lambda - 1e-10);
  }
  EXPECT_THROW(rayleigh_quotient(d, std::vector<double>(d.size(), 0.0)), DomainError);
}

TEST(LambdaBottom, IterationCapCarriesBestIterate) {
  const auto box = testg::box(2, 10);
  const auto d = DirichletDomain::ball(box.graph, box.center, 9);
  try {
    lambda_bottom(d, 1e-14, 3);
    FAIL();
  } catch (const SpectralNotConverged& e) {
    EXPECT_EQ(e.best().iterations, 3u);
    EXPECT_GT(e.best().residual, 1e-14);
  }
  EXPECT_THROW(lambda_bottom(d, 0.0), DomainError);
}

TEST(DomainMonotonicity, PathExample) {
  const auto g = testg::path(4);
  const DirichletDomain a(g, {1}), b(g, {1, 2});
  const auto rep = domain_monotonicity_check({&a, &b});
  EXPECT_TRUE(rep.passed);
  EXPECT_NEAR(rep.bottoms[0].lambda, 2.0, 1e-10);
  EXPECT_NEAR(rep.bottoms[1].lambda, 1.0, 1e-10);
}

TEST(DomainMonotonicity, IdenticalDomainsAreEqual) {
  const auto g = testg::path(4);
  const DirichletDomain a(g, {1, 2});
  const auto rep = domain_monotonicity_check({&a, &a});
  EXPECT_TRUE(rep.passed);
  EXPECT_NEAR(rep.bottoms[0].lambda, rep.bottoms[1].lambda, 1e-12);
}

TEST(DomainMonotonicity, NestedPlaneBoxesDecrease) {
  const auto box = testg::box(2, 6);
  const auto a = DirichletDomain::ball(box.graph, box.center, 2);
  const auto b = DirichletDomain::ball(box.graph, box.center, 4);
  const auto rep = domain_monotonicity_check({&a, &b});
  EXPECT_TRUE(rep.passed);
  EXPECT_GT(rep.bottoms[0].lambda, rep.bottoms[1].lambda);
}

TEST(DomainMonotonicity, RejectsNonNestedChain) {
  const auto g = testg::path(4);
  const DirichletDomain a(g, {0}), b(g, {1, 2});
  EXPECT_THROW(domain_monotonicity_check({&a, &b}), DomainError);
}
