#include <gtest/gtest.h>

#include <filesystem>
#include <random>

#include "test_graphs.hpp"

using namespace heatk;
using nlohmann::json;

namespace {

void expect_same(const WeightedGraph& a, const WeightedGraph& b) {
  ASSERT_EQ(a.size(), b.size());
  ASSERT_EQ(a.edge_count(), b.edge_count());
  for (VertexId x = 0; x < a.size(); ++x) {
    EXPECT_EQ(a.measure(x), b.measure(x));
    EXPECT_EQ(a.label(x), b.label(x));
    for (const auto& nb : a.neighbors(x)) EXPECT_EQ(b.weight(x, nb.vertex), nb.weight);
  }
  EXPECT_EQ(a.mu0(), b.mu0());
  EXPECT_EQ(a.d_mu(), b.d_mu());
}

std::string field_of(const json& j) {
  try {
    graph_from_json(j);
  } catch (const ConfigError& e) {
    return e.field();
  } catch (const GraphError&) {
    return "<graph>";
  }
  return "<none>";
}

}  // namespace

TEST(GraphIo, ParsesCountsAndConstantMeasure) {
  const auto g = graph_from_json(json::parse(R"({"vertices": 3, "edges": [[0,1,1],[1,2,2]], "measure": 2})"));
  EXPECT_EQ(g.size(), 3u);
  EXPECT_DOUBLE_EQ(g.weight(1, 2), 2.0);
  EXPECT_DOUBLE_EQ(g.measure(2), 2.0);
  EXPECT_DOUBLE_EQ(g.d_mu(), 1.5);
}

TEST(GraphIo, ParsesLabels) {
  const auto g = graph_from_json(json::parse(R"({"vertices": ["a","b","c"], "edges": [["a","b",1],[1,"c",1]], "measure": [1,2,3]})"));
  EXPECT_EQ(*g.find("c"), 2u);
  EXPECT_DOUBLE_EQ(g.weight(0, 1), 1.0);
  EXPECT_DOUBLE_EQ(g.measure(1), 2.0);
}

TEST(GraphIo, ErrorsCarryFieldPaths) {
  EXPECT_EQ(field_of(json::parse(R"({"edges": [], "measure": 1})")), "/vertices");
  EXPECT_EQ(field_of(json::parse(R"({"vertices": 2, "edges": [[0,1]], "measure": 1})")), "/edges/0");
  EXPECT_EQ(field_of(json::parse(R"({"vertices": 2, "edges": [[0,7,1]], "measure": 1})")), "/edges/0/1");
  EXPECT_EQ(field_of(json::parse(R"({"vertices": ["a","b"], "edges": [["a","z",1]], "measure": 1})")), "/edges/0/1");
  EXPECT_EQ(field_of(json::parse(R"({"vertices": 2, "edges": [[0,1,1]], "measure": [1]})")), "/measure");
  EXPECT_EQ(field_of(json::parse(R"({"vertices": 2, "edges": [[0,1,1]]})")), "/measure");
  EXPECT_EQ(field_of(json::parse(R"({"vertices": 2, "edges": [[0,1,1]], "measure": [1,"x"]})")), "/measure/1");
  EXPECT_EQ(field_of(json::parse(R"({"vertices": 3, "edges": [[0,1,1]], "measure": 1})")), "<graph>");
  EXPECT_EQ(field_of(json::parse(R"({"vertices": 2, "edges": [[0,1,1]], "measure": 1})")), "<none>");
}

TEST(GraphIo, RoundTripIsCanonicalOnRandomGraphs) {
  std::mt19937_64 rng(21);
  for (int trial = 0; trial < 25; ++trial) {
    const auto g = testg::random_graph(rng, 3 + trial, trial);
    const auto j1 = graph_to_json(g);
    const auto g2 = graph_from_json(json::parse(j1.dump()));
    expect_same(g, g2);
    EXPECT_EQ(graph_to_json(g2).dump(), j1.dump());
  }
}

TEST(GraphIo, RoundTripKeepsLabelsAndLowerBound) {
  GraphSpec s;
  s.vertex_count = 3;
  s.labels = {"x", "y", "z"};
  s.edges = {{2, 0, 0.25}, {0, 1, 3.0}};
  s.measure = {1.0, 0.75, 2.0};
  s.mu_lower_bound = 0.5;
  const auto g = WeightedGraph::build(s);
  const auto j = graph_to_json(g);
  EXPECT_EQ(j["edges"][0], json::parse("[0,1,3.0]"));
  EXPECT_DOUBLE_EQ(j["mu_lower_bound"].get<double>(), 0.5);
  expect_same(g, graph_from_json(j));
}

TEST(GraphIo, SaveAndLoadFile) {
  const auto dir = std::filesystem::temp_directory_path() / "heatk_graph_io_test";
  std::filesystem::create_directories(dir);
  const auto path = (dir / "g.json").string();
  const auto g = testg::cycle(6);
  save_graph(g, path);
  expect_same(g, load_graph(path));
  EXPECT_THROW(load_graph((dir / "missing.json").string()), ConfigError);
  {
    std::ofstream bad(dir / "bad.json");
    bad << "{not json";
  }
  EXPECT_THROW(load_graph((dir / "bad.json").string()), ConfigError);
  std::filesystem::remove_all(dir);
}

TEST(GraphIo, SampleConfigGraphLoads) {
  const auto g = load_graph(testg::source_dir() + "/configs/two_vertex.graph.json");
  EXPECT_EQ(g.size(), 2u);
  EXPECT_DOUBLE_EQ(g.d_mu(), 1.0);
}
