#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "heatk/errors.hpp"
#include "heatk/expression.hpp"
#include "heatk/graph.hpp"
#include "heatk/graph_io.hpp"

namespace heatk {

enum class Family { path, cycle, box_zd, regular_tree, grid, custom_file };

struct WeightRule {
  double constant = 1.0;
  std::optional<std::string> expression;  // variables: i, j, di, dj
};

struct MeasureRule {
  enum class Kind { constant, degree, expression };
  Kind kind = Kind::constant;
  double constant = 1.0;
  std::string expression;  // variables: i, d, deg
};

/// Deterministic graph family. `truncation_radius` applies to box_zd and
/// regular_tree, `size` to path and cycle, `sides` to grid, `file` to
/// custom_file. `mu_min` is the declared global lower bound on mu; it is
/// required for expression measures.
struct FamilySpec {
  Family family = Family::path;
  int dimension = 1;
  int degree = 3;
  Distance truncation_radius = 0;
  std::size_t size = 0;
  std::vector<std::size_t> sides;
  std::string file;
  WeightRule weight;
  MeasureRule measure;
  std::optional<double> mu_min;
};

struct GeneratedFamily {
  WeightedGraph graph;
  VertexId center;
  /// Truncation of an infinite family (box_zd, regular_tree); balls around
  /// `center` of radius < truncation_radius match the infinite graph.
  bool truncated;
  Distance truncation_radius;
  std::string name;
};

inline const char* family_name(Family f) {
  switch (f) {
    case Family::path: return "path";
    case Family::cycle: return "cycle";
    case Family::box_zd: return "box_Zd";
    case Family::regular_tree: return "regular_tree";
    case Family::grid: return "grid";
    case Family::custom_file: return "custom_file";
  }
  return "?";
}

inline Family parse_family(const std::string& s) {
  if (s == "path") return Family::path;
  if (s == "cycle") return Family::cycle;
  if (s == "box_Zd" || s == "box_zd") return Family::box_zd;
  if (s == "regular_tree") return Family::regular_tree;
  if (s == "grid") return Family::grid;
  if (s == "custom_file") return Family::custom_file;
  throw ConfigError("/family/family", "unknown family '" + s + "'");
}

namespace detail {

// Vertices, edges, distance from the center and the degree each vertex has in
// the untruncated family.
struct RawFamily {
  std::size_t n = 0;
  std::vector<std::pair<VertexId, VertexId>> edges;
  std::vector<Distance> depth;
  std::vector<double> full_degree;
  VertexId center = 0;
};

inline RawFamily raw_path(std::size_t n) {
  if (n < 1) throw ConfigError("/family/size", "path needs at least one vertex");
  RawFamily raw;
  raw.n = n;
  raw.center = n / 2;
  for (VertexId v = 0; v + 1 < n; ++v) raw.edges.emplace_back(v, v + 1);
  for (VertexId v = 0; v < n; ++v) {
    raw.depth.push_back(static_cast<Distance>(v > raw.center ? v - raw.center : raw.center - v));
    raw.full_degree.push_back(static_cast<double>((v > 0) + (v + 1 < n)));
  }
  return raw;
}

inline RawFamily raw_cycle(std::size_t n) {
  if (n < 3) throw ConfigError("/family/size", "cycle needs at least three vertices");
  RawFamily raw;
  raw.n = n;
  for (VertexId v = 0; v < n; ++v) {
    raw.edges.emplace_back(std::min(v, (v + 1) % n), std::max(v, (v + 1) % n));
    raw.depth.push_back(static_cast<Distance>(std::min(v, n - v)));
    raw.full_degree.push_back(2.0);
  }
  return raw;
}

inline RawFamily raw_grid(const std::vector<std::size_t>& sides) {
  if (sides.empty()) throw ConfigError("/family/sides", "grid needs at least one side length");
  std::size_t n = 1;
  for (auto s : sides) {
    if (s < 1) throw ConfigError("/family/sides", "side lengths must be positive");
    n *= s;
  }
  RawFamily raw;
  raw.n = n;
  std::vector<std::size_t> stride(sides.size(), 1);
  for (std::size_t k = sides.size(); k-- > 1;) stride[k - 1] = stride[k] * sides[k];
  std::vector<std::size_t> mid(sides.size());
  for (std::size_t k = 0; k < sides.size(); ++k) {
    mid[k] = sides[k] / 2;
    raw.center += mid[k] * stride[k];
  }
  for (VertexId v = 0; v < n; ++v) {
    Distance depth = 0;
    double deg = 0;
    for (std::size_t k = 0; k < sides.size(); ++k) {
      const std::size_t c = (v / stride[k]) % sides[k];
      depth += static_cast<Distance>(c > mid[k] ? c - mid[k] : mid[k] - c);
      if (c + 1 < sides[k]) raw.edges.emplace_back(v, v + stride[k]);
      deg += (c > 0) + (c + 1 < sides[k]);
    }
    raw.depth.push_back(depth);
    raw.full_degree.push_back(deg);
  }
  return raw;
}

// l1 ball of radius R in Z^d, points in lexicographic order.
inline RawFamily raw_box(int d, Distance R) {
  if (d < 1) throw ConfigError("/family/dimension", "dimension must be at least 1");
  if (R < 0) throw ConfigError("/family/truncation_radius", "must be nonnegative");
  RawFamily raw;
  std::vector<std::vector<std::int32_t>> points;
  std::vector<std::int32_t> cur(static_cast<std::size_t>(d));
  std::function<void(int, Distance)> rec = [&](int k, Distance budget) {
    if (k == d) {
      points.push_back(cur);
      return;
    }
    for (Distance c = -budget; c <= budget; ++c) {
      cur[static_cast<std::size_t>(k)] = static_cast<std::int32_t>(c);
      rec(k + 1, budget - (c < 0 ? -c : c));
    }
  };
  rec(0, R);
  const auto base = static_cast<std::int64_t>(2 * R + 1);
  auto key = [&](const std::vector<std::int32_t>& p) {
    std::int64_t k = 0;
    for (auto c : p) k = k * base + (c + R);
    return k;
  };
  std::unordered_map<std::int64_t, VertexId> index;
  index.reserve(points.size());
  for (VertexId v = 0; v < points.size(); ++v) index.emplace(key(points[v]), v);
  raw.n = points.size();
  raw.center = index.at(key(std::vector<std::int32_t>(static_cast<std::size_t>(d), 0)));
  for (VertexId v = 0; v < points.size(); ++v) {
    auto p = points[v];
    Distance depth = 0;
    for (auto c : p) depth += c < 0 ? -c : c;
    raw.depth.push_back(depth);
    raw.full_degree.push_back(2.0 * d);
    for (std::size_t k = 0; k < p.size(); ++k) {
      // Moving +1 along axis k changes |p|_1 by +-1; skip points leaving the ball.
      const Distance moved = depth + (p[k] >= 0 ? 1 : -1);
      if (moved > R) continue;
      ++p[k];
      raw.edges.emplace_back(v, index.at(key(p)));
      --p[k];
    }
  }
  return raw;
}

// Ball of radius R around the root of the k-regular tree, in BFS order.
inline RawFamily raw_tree(int k, Distance R) {
  if (k < 2) throw ConfigError("/family/degree", "regular tree degree must be at least 2");
  if (R < 0) throw ConfigError("/family/truncation_radius", "must be nonnegative");
  RawFamily raw;
  raw.n = 1;
  raw.depth.push_back(0);
  raw.full_degree.push_back(k);
  std::size_t level_begin = 0, level_end = 1;
  for (Distance depth = 1; depth <= R; ++depth) {
    for (VertexId parent = level_begin; parent < level_end; ++parent) {
      const int children = parent == 0 ? k : k - 1;
      for (int c = 0; c < children; ++c) {
        raw.edges.emplace_back(parent, raw.n);
        raw.depth.push_back(depth);
        raw.full_degree.push_back(k);
        ++raw.n;
      }
    }
    level_begin = level_end;
    level_end = raw.n;
  }
  return raw;
}

}  // namespace detail

inline GeneratedFamily generate_family(const FamilySpec& spec) {
  if (spec.family == Family::custom_file) {
    auto g = load_graph(spec.file);
    return {std::move(g), 0, false, 0, "custom_file(" + spec.file + ")"};
  }

  detail::RawFamily raw;
  bool truncated = false;
  std::string name = family_name(spec.family);
  switch (spec.family) {
    case Family::path:
      raw = detail::raw_path(spec.size);
      name += "(" + std::to_string(spec.size) + ")";
      break;
    case Family::cycle:
      raw = detail::raw_cycle(spec.size);
      name += "(" + std::to_string(spec.size) + ")";
      break;
    case Family::grid: {
      raw = detail::raw_grid(spec.sides);
      std::string dims;
      for (auto s : spec.sides) dims += (dims.empty() ? "" : "x") + std::to_string(s);
      name += "(" + dims + ")";
      break;
    }
    case Family::box_zd:
      raw = detail::raw_box(spec.dimension, spec.truncation_radius);
      truncated = true;
      name = "box_Z" + std::to_string(spec.dimension) + "(R=" + std::to_string(spec.truncation_radius) + ")";
      break;
    case Family::regular_tree:
      raw = detail::raw_tree(spec.degree, spec.truncation_radius);
      truncated = true;
      name = "regular_tree(" + std::to_string(spec.degree) + ",R=" + std::to_string(spec.truncation_radius) + ")";
      break;
    case Family::custom_file:
      break;
  }

  GraphSpec gs;
  gs.vertex_count = raw.n;
  std::optional<Expression> wexpr;
  if (spec.weight.expression) wexpr = Expression::parse(*spec.weight.expression, {"i", "j", "di", "dj"});
  for (const auto& [a, b] : raw.edges) {
    double w = spec.weight.constant;
    if (wexpr) {
      const double vars[] = {static_cast<double>(a), static_cast<double>(b), static_cast<double>(raw.depth[a]),
                             static_cast<double>(raw.depth[b])};
      w = (*wexpr)(vars);
    }
    gs.edges.push_back({a, b, w});
  }

  std::optional<double> mu_min = spec.mu_min;
  switch (spec.measure.kind) {
    case MeasureRule::Kind::constant:
      gs.measure.assign(raw.n, spec.measure.constant);
      if (!mu_min && truncated) mu_min = spec.measure.constant;
      break;
    case MeasureRule::Kind::degree:
      gs.measure = raw.full_degree;
      break;
    case MeasureRule::Kind::expression: {
      if (!mu_min) throw ConfigError("/family/mu_min", "required with an expression measure rule");
      const auto mexpr = Expression::parse(spec.measure.expression, {"i", "d", "deg"});
      for (VertexId v = 0; v < raw.n; ++v) {
        const double vars[] = {static_cast<double>(v), static_cast<double>(raw.depth[v]), raw.full_degree[v]};
        gs.measure.push_back(mexpr(vars));
      }
      break;
    }
  }
  if (mu_min) {
    for (VertexId v = 0; v < raw.n; ++v) {
      if (gs.measure[v] < *mu_min) {
        throw ConfigError("/family/mu_min", "measure " + std::to_string(gs.measure[v]) + " at vertex " + std::to_string(v) +
                                                " is below the declared bound " + std::to_string(*mu_min));
      }
    }
    gs.mu_lower_bound = mu_min;
  }
  auto g = WeightedGraph::build(gs);
  return {std::move(g), raw.center, truncated, truncated ? spec.truncation_radius : 0, name};
}

}  // namespace heatk
