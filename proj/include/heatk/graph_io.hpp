#pragma once

#include <algorithm>
#include <fstream>
#include <sstream>
#include <string>
#include <unordered_map>

#include <json.hpp>

#include "heatk/errors.hpp"
#include "heatk/graph.hpp"

namespace heatk {

// Graph description file:
//
//   {
//     "vertices": 3 | ["a", "b", "c"],
//     "edges":    [[0, 1, 1.0], ["b", "c", 2.5], ...],
//     "measure":  1.0 | [1.0, 2.0, 1.0],
//     "mu_lower_bound": 0.5            (optional)
//   }
//
// Edge endpoints are indices, or labels when "vertices" is a label list.

inline GraphSpec graph_spec_from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw ConfigError("/", "graph description must be a JSON object");
  GraphSpec spec;

  if (!j.contains("vertices")) throw ConfigError("/vertices", "missing");
  const auto& verts = j.at("vertices");
  if (verts.is_number_integer()) {
    if (verts.get<long long>() <= 0) throw ConfigError("/vertices", "count must be positive");
    spec.vertex_count = verts.get<std::size_t>();
  } else if (verts.is_array()) {
    for (std::size_t i = 0; i < verts.size(); ++i) {
      if (!verts[i].is_string()) throw ConfigError("/vertices/" + std::to_string(i), "label must be a string");
      spec.labels.push_back(verts[i].get<std::string>());
    }
    spec.vertex_count = spec.labels.size();
  } else {
    throw ConfigError("/vertices", "expected a count or a list of labels");
  }

  std::unordered_map<std::string, VertexId> by_label;
  for (VertexId v = 0; v < spec.labels.size(); ++v) by_label.emplace(spec.labels[v], v);
  auto endpoint = [&](const nlohmann::json& e, const std::string& field) -> VertexId {
    if (e.is_number_integer()) {
      const auto v = e.get<long long>();
      if (v < 0 || static_cast<std::size_t>(v) >= spec.vertex_count) throw ConfigError(field, "vertex index out of range");
      return static_cast<VertexId>(v);
    }
    if (e.is_string()) {
      auto it = by_label.find(e.get<std::string>());
      if (it == by_label.end()) throw ConfigError(field, "unknown vertex label '" + e.get<std::string>() + "'");
      return it->second;
    }
    throw ConfigError(field, "vertex must be an index or a label");
  };

  const auto edges = j.value("edges", nlohmann::json::array());
  if (!edges.is_array()) throw ConfigError("/edges", "expected a list");
  for (std::size_t i = 0; i < edges.size(); ++i) {
    const std::string field = "/edges/" + std::to_string(i);
    const auto& e = edges[i];
    if (!e.is_array() || e.size() != 3 || !e[2].is_number()) throw ConfigError(field, "expected [i, j, weight]");
    spec.edges.push_back({endpoint(e[0], field + "/0"), endpoint(e[1], field + "/1"), e[2].get<double>()});
  }

  if (!j.contains("measure")) throw ConfigError("/measure", "missing");
  const auto& mu = j.at("measure");
  if (mu.is_number()) {
    spec.measure.assign(spec.vertex_count, mu.get<double>());
  } else if (mu.is_array()) {
    if (mu.size() != spec.vertex_count) throw ConfigError("/measure", "length differs from vertex count");
    for (std::size_t i = 0; i < mu.size(); ++i) {
      if (!mu[i].is_number()) throw ConfigError("/measure/" + std::to_string(i), "expected a number");
      spec.measure.push_back(mu[i].get<double>());
    }
  } else {
    throw ConfigError("/measure", "expected a number or a list");
  }
  if (j.contains("mu_lower_bound")) {
    if (!j["mu_lower_bound"].is_number()) throw ConfigError("/mu_lower_bound", "expected a number");
    spec.mu_lower_bound = j["mu_lower_bound"].get<double>();
  }
  return spec;
}

inline WeightedGraph graph_from_json(const nlohmann::json& j) {
  return WeightedGraph::build(graph_spec_from_json(j));
}

/// Canonical form: edges once each as [lo, hi, w] in ascending order, measure
/// as a full list. Loading the output reproduces the same graph.
inline nlohmann::json graph_to_json(const WeightedGraph& g) {
  nlohmann::json j;
  if (g.has_labels()) {
    j["vertices"] = std::vector<std::string>(g.labels().begin(), g.labels().end());
  } else {
    j["vertices"] = g.size();
  }
  auto edges = nlohmann::json::array();
  for (VertexId x = 0; x < g.size(); ++x) {
    for (const auto& nb : g.neighbors(x)) {
      if (nb.vertex > x) edges.push_back(nlohmann::json::array({x, nb.vertex, nb.weight}));
    }
  }
  j["edges"] = std::move(edges);
  j["measure"] = std::vector<double>(g.measures().begin(), g.measures().end());
  double stored_min = g.measures().empty() ? 0.0 : *std::min_element(g.measures().begin(), g.measures().end());
  if (g.mu0() < stored_min) j["mu_lower_bound"] = g.mu0();
  return j;
}

inline WeightedGraph load_graph(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError(path, "cannot open graph file");
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError(path, std::string("invalid JSON: ") + e.what());
  }
  return graph_from_json(j);
}

inline void save_graph(const WeightedGraph& g, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw ConfigError(path, "cannot write graph file");
  out << graph_to_json(g).dump(2) << '\n';
}

}  // namespace heatk
