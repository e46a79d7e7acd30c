#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <numeric>
#include <optional>
#include <queue>
#include <span>
#include <string>
#include <tuple>
#include <unordered_map>
#include <utility>
#include <vector>

#include "heatk/errors.hpp"

namespace heatk {

using VertexId = std::size_t;

/// Graph distance (edge count). `kUnreached` marks vertices beyond a BFS cutoff.
using Distance = std::int64_t;
inline constexpr Distance kUnreached = -1;

struct EdgeSpec {
  VertexId a = 0;
  VertexId b = 0;
  double weight = 0.0;
};

/// Raw description accepted by WeightedGraph::build. An edge may be listed once
/// or in both directions; listing it twice with different weights is an error.
struct GraphSpec {
  std::size_t vertex_count = 0;
  std::vector<std::string> labels;  // empty, or one per vertex
  std::vector<EdgeSpec> edges;
  std::vector<double> measure;      // one per vertex
  // Global lower bound on mu for truncations of infinite families.
  std::optional<double> mu_lower_bound;
};

struct Neighbor {
  VertexId vertex;
  double weight;
};

/// Immutable weighted graph (G, omega, mu) stored in CSR form.
///
/// Only edges with omega > 0 are kept, so adjacency, the Laplacian and the
/// natural metric all see the same edge set. D_mu = max m(x)/mu(x) and
/// mu0 = min mu(x) are computed once at construction.
class WeightedGraph {
 public:
  static WeightedGraph build(const GraphSpec& spec);

  std::size_t size() const noexcept { return measure_.size(); }
  std::size_t edge_count() const noexcept { return neighbors_.size() / 2; }

  std::span<const Neighbor> neighbors(VertexId x) const {
    check(x);
    return {neighbors_.data() + offsets_[x], neighbors_.data() + offsets_[x + 1]};
  }

  double measure(VertexId x) const { return measure_.at(check(x)); }
  /// m(x): sum of omega(x,y) over y ~ x.
  double weighted_degree(VertexId x) const { return degree_.at(check(x)); }
  double d_mu() const noexcept { return d_mu_; }
  VertexId d_mu_vertex() const noexcept { return d_mu_vertex_; }
  /// Lower bound on mu used by the estimates; the declared global bound when
  /// one was supplied, otherwise the minimum over stored vertices.
  double mu0() const noexcept { return mu0_; }
  double total_measure() const noexcept { return total_measure_; }

  std::span<const double> measures() const noexcept { return measure_; }
  std::span<const std::string> labels() const noexcept { return labels_; }
  bool has_labels() const noexcept { return !labels_.empty(); }
  std::string label(VertexId x) const {
    check(x);
    return labels_.empty() ? std::to_string(x) : labels_[x];
  }
  std::optional<VertexId> find(const std::string& label) const;

  /// omega(x,y), zero when x and y are not adjacent.
  double weight(VertexId x, VertexId y) const;

  VertexId check(VertexId x) const {
    if (x >= size()) {
      throw LookupError("vertex " + std::to_string(x) + " not in graph of size " +
                        std::to_string(size()));
    }
    return x;
  }

 private:
  WeightedGraph() = default;

  std::vector<std::size_t> offsets_;
  std::vector<Neighbor> neighbors_;
  std::vector<double> measure_;
  std::vector<double> degree_;
  std::vector<std::string> labels_;
  double d_mu_ = 0.0;
  VertexId d_mu_vertex_ = 0;
  double mu0_ = 0.0;
  double total_measure_ = 0.0;
};

/// Operation-level alias of WeightedGraph::build.
inline WeightedGraph build_graph(const GraphSpec& spec) { return WeightedGraph::build(spec); }

// ---------------------------------------------------------------------------
// Metric

/// BFS distances from `source`. Vertices farther than `max_radius` (or
/// unreachable) are kUnreached.
inline std::vector<Distance> distances_from(const WeightedGraph& g, VertexId source,
                                            Distance max_radius = std::numeric_limits<Distance>::max()) {
  g.check(source);
  std::vector<Distance> dist(g.size(), kUnreached);
  std::vector<VertexId> frontier{source};
  dist[source] = 0;
  std::size_t head = 0;
  while (head < frontier.size()) {
    const VertexId x = frontier[head++];
    if (dist[x] >= max_radius) continue;
    for (const auto& nb : g.neighbors(x)) {
      if (dist[nb.vertex] == kUnreached) {
        dist[nb.vertex] = dist[x] + 1;
        frontier.push_back(nb.vertex);
      }
    }
  }
  return dist;
}

/// Natural graph metric: smallest number of edges on a path from x to y.
inline Distance graph_distance(const WeightedGraph& g, VertexId x, VertexId y) {
  g.check(x);
  g.check(y);
  if (x == y) return 0;
  std::vector<Distance> dist(g.size(), kUnreached);
  std::vector<VertexId> frontier{x};
  dist[x] = 0;
  std::size_t head = 0;
  while (head < frontier.size()) {
    const VertexId u = frontier[head++];
    for (const auto& nb : g.neighbors(u)) {
      if (dist[nb.vertex] != kUnreached) continue;
      dist[nb.vertex] = dist[u] + 1;
      if (nb.vertex == y) return dist[y];
      frontier.push_back(nb.vertex);
    }
  }
  // Unreachable only if construction let a disconnected graph through.
  throw GraphError("vertices " + std::to_string(x) + " and " + std::to_string(y) +
                   " are not connected");
}

// ---------------------------------------------------------------------------
// Balls

struct Ball {
  VertexId center = 0;
  Distance radius = 0;
  std::vector<VertexId> members;  // ascending vertex index
  double volume = 0.0;

  bool contains(VertexId v) const { return std::binary_search(members.begin(), members.end(), v); }
};

/// B(x,r) = { y : d(x,y) <= r } and its measure V(x,r).
inline Ball ball(const WeightedGraph& g, VertexId x, Distance r) {
  if (r < 0) throw DomainError("ball radius must be nonnegative, got " + std::to_string(r));
  const auto dist = distances_from(g, x, r);
  Ball b{x, r, {}, 0.0};
  for (VertexId v = 0; v < g.size(); ++v) {
    if (dist[v] != kUnreached) {
      b.members.push_back(v);
      b.volume += g.measure(v);
    }
  }
  return b;
}

/// V(x,r) for every r in [0, r_max], from a single BFS.
inline std::vector<double> ball_volume_profile(const WeightedGraph& g, VertexId x, Distance r_max) {
  if (r_max < 0) throw DomainError("r_max must be nonnegative");
  const auto dist = distances_from(g, x, r_max);
  std::vector<double> shell(static_cast<std::size_t>(r_max) + 1, 0.0);
  for (VertexId v = 0; v < g.size(); ++v) {
    if (dist[v] != kUnreached) shell[static_cast<std::size_t>(dist[v])] += g.measure(v);
  }
  std::partial_sum(shell.begin(), shell.end(), shell.begin());
  return shell;
}

// ---------------------------------------------------------------------------
// Vertex functions

/// Real function on the vertices of a graph. Either dense (one value per
/// vertex) or supported on a sorted vertex list; zero off the support.
class VertexFunction {
 public:
  VertexFunction() = default;

  static VertexFunction dense(std::vector<double> values) {
    VertexFunction f;
    f.dense_ = true;
    f.values_ = std::move(values);
    return f;
  }

  static VertexFunction sparse(std::vector<VertexId> support, std::vector<double> values) {
    if (support.size() != values.size()) {
      throw DomainError("support and values differ in length");
    }
    std::vector<std::size_t> order(support.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::sort(order.begin(), order.end(), [&](auto a, auto b) { return support[a] < support[b]; });
    VertexFunction f;
    f.support_.reserve(support.size());
    f.values_.reserve(values.size());
    for (auto i : order) {
      if (!f.support_.empty() && f.support_.back() == support[i]) {
        throw DomainError("duplicate vertex " + std::to_string(support[i]) + " in support");
      }
      f.support_.push_back(support[i]);
      f.values_.push_back(values[i]);
    }
    return f;
  }

  static VertexFunction constant(std::size_t n, double c) { return dense(std::vector<double>(n, c)); }
  static VertexFunction indicator(VertexId v, double value = 1.0) { return sparse({v}, {value}); }

  bool is_dense() const noexcept { return dense_; }
  /// Number of stored entries.
  std::size_t size() const noexcept { return values_.size(); }
  VertexId vertex_at(std::size_t i) const { return dense_ ? i : support_[i]; }
  double value_at(std::size_t i) const { return values_[i]; }
  std::span<const double> values() const noexcept { return values_; }

  double operator()(VertexId v) const {
    if (dense_) return v < values_.size() ? values_[v] : 0.0;
    auto it = std::lower_bound(support_.begin(), support_.end(), v);
    if (it == support_.end() || *it != v) return 0.0;
    return values_[static_cast<std::size_t>(it - support_.begin())];
  }

  bool in_support(VertexId v) const {
    if (dense_) return v < values_.size();
    return std::binary_search(support_.begin(), support_.end(), v);
  }

  std::vector<VertexId> support() const {
    if (!dense_) return support_;
    std::vector<VertexId> s(values_.size());
    std::iota(s.begin(), s.end(), VertexId{0});
    return s;
  }

  template <typename Fn>
  void for_each(Fn&& fn) const {
    for (std::size_t i = 0; i < values_.size(); ++i) fn(vertex_at(i), values_[i]);
  }

 private:
  bool dense_ = false;
  std::vector<VertexId> support_;
  std::vector<double> values_;
};

namespace detail {

// Support of the result of a local operator applied to functions on `inputs`:
// the union of the supports and their neighbours.
inline std::vector<VertexId> closed_neighbourhood(const WeightedGraph& g,
                                                  std::initializer_list<const VertexFunction*> inputs) {
  std::vector<VertexId> out;
  for (const auto* f : inputs) {
    f->for_each([&](VertexId v, double) {
      out.push_back(g.check(v));
      for (const auto& nb : g.neighbors(v)) out.push_back(nb.vertex);
    });
  }
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

inline void require_fits(const WeightedGraph& g, const VertexFunction& f) {
  if (f.is_dense() && f.size() != g.size()) {
    throw DomainError("dense function has " + std::to_string(f.size()) + " values for a graph of " +
                      std::to_string(g.size()) + " vertices");
  }
}

}  // namespace detail

/// (Delta f)(x) = 1/mu(x) * sum_{y~x} omega(x,y) (f(y) - f(x)).
inline double laplacian_at(const WeightedGraph& g, const VertexFunction& f, VertexId x) {
  const double fx = f(x);
  double acc = 0.0;
  for (const auto& nb : g.neighbors(x)) acc += nb.weight * (f(nb.vertex) - fx);
  return acc / g.measure(x);
}

inline VertexFunction laplacian_apply(const WeightedGraph& g, const VertexFunction& f) {
  detail::require_fits(g, f);
  if (f.is_dense()) {
    std::vector<double> out(g.size());
    const auto vals = f.values();
    for (VertexId x = 0; x < g.size(); ++x) {
      double acc = 0.0;
      for (const auto& nb : g.neighbors(x)) acc += nb.weight * (vals[nb.vertex] - vals[x]);
      out[x] = acc / g.measure(x);
    }
    return VertexFunction::dense(std::move(out));
  }
  auto support = detail::closed_neighbourhood(g, {&f});
  std::vector<double> out(support.size());
  for (std::size_t i = 0; i < support.size(); ++i) out[i] = laplacian_at(g, f, support[i]);
  return VertexFunction::sparse(std::move(support), std::move(out));
}

/// Gamma(f,h)(x) = 1/(2 mu(x)) * sum_{y~x} omega(x,y) (f(y)-f(x)) (h(y)-h(x)).
inline double gamma_at(const WeightedGraph& g, const VertexFunction& f, const VertexFunction& h,
                       VertexId x) {
  const double fx = f(x);
  const double hx = h(x);
  double acc = 0.0;
  for (const auto& nb : g.neighbors(x)) acc += nb.weight * (f(nb.vertex) - fx) * (h(nb.vertex) - hx);
  return acc / (2.0 * g.measure(x));
}

inline VertexFunction gamma_form(const WeightedGraph& g, const VertexFunction& f, const VertexFunction& h) {
  detail::require_fits(g, f);
  detail::require_fits(g, h);
  if (f.is_dense() || h.is_dense()) {
    std::vector<double> out(g.size());
    for (VertexId x = 0; x < g.size(); ++x) out[x] = gamma_at(g, f, h, x);
    return VertexFunction::dense(std::move(out));
  }
  auto support = detail::closed_neighbourhood(g, {&f, &h});
  std::vector<double> out(support.size());
  for (std::size_t i = 0; i < support.size(); ++i) out[i] = gamma_at(g, f, h, support[i]);
  return VertexFunction::sparse(std::move(support), std::move(out));
}

inline VertexFunction gamma_form(const WeightedGraph& g, const VertexFunction& f) { return gamma_form(g, f, f); }

/// <f,h> = sum_x mu(x) f(x) h(x).
inline double mu_inner_product(const WeightedGraph& g, const VertexFunction& f, const VertexFunction& h) {
  detail::require_fits(g, f);
  detail::require_fits(g, h);
  const VertexFunction& outer = (f.is_dense() && !h.is_dense()) ? h : f;
  const VertexFunction& inner = (&outer == &f) ? h : f;
  double acc = 0.0;
  outer.for_each([&](VertexId v, double value) { acc += g.measure(v) * value * inner(v); });
  return acc;
}

// ---------------------------------------------------------------------------
// WeightedGraph::build

inline WeightedGraph WeightedGraph::build(const GraphSpec& spec) {
  const std::size_t n = spec.vertex_count;
  if (n == 0) throw GraphError("graph has no vertices");
  if (spec.measure.size() != n) {
    throw GraphError("measure has " + std::to_string(spec.measure.size()) + " entries for " +
                     std::to_string(n) + " vertices");
  }
  if (!spec.labels.empty() && spec.labels.size() != n) {
    throw GraphError("labels has " + std::to_string(spec.labels.size()) + " entries for " +
                     std::to_string(n) + " vertices");
  }

  WeightedGraph g;
  g.labels_ = spec.labels;
  if (!g.labels_.empty()) {
    std::unordered_map<std::string, VertexId> seen;
    for (VertexId v = 0; v < n; ++v) {
      if (!seen.emplace(g.labels_[v], v).second) throw GraphError("duplicate vertex label '" + g.labels_[v] + "'");
    }
  }
  auto name = [&](VertexId v) { return g.labels_.empty() ? std::to_string(v) : "'" + g.labels_[v] + "'"; };

  g.measure_ = spec.measure;
  for (VertexId v = 0; v < n; ++v) {
    if (!std::isfinite(g.measure_[v]) || g.measure_[v] <= 0.0) {
      throw GraphError("measure of vertex " + name(v) + " must be positive and finite");
    }
  }

  // Normalise to (lo, hi, w), sort, and fold repeated listings.
  struct Key {
    VertexId lo, hi;
    double w;
  };
  std::vector<Key> keys;
  keys.reserve(spec.edges.size());
  for (const auto& e : spec.edges) {
    if (e.a >= n || e.b >= n) {
      throw GraphError("edge (" + std::to_string(e.a) + ", " + std::to_string(e.b) + ") references a missing vertex");
    }
    if (e.a == e.b) throw GraphError("self-loop at vertex " + name(e.a));
    if (!std::isfinite(e.weight)) throw GraphError("edge (" + name(e.a) + ", " + name(e.b) + ") has non-finite weight");
    if (e.weight < 0.0) throw GraphError("edge (" + name(e.a) + ", " + name(e.b) + ") has negative weight");
    keys.push_back({std::min(e.a, e.b), std::max(e.a, e.b), e.weight});
  }
  std::sort(keys.begin(), keys.end(), [](const Key& l, const Key& r) { return std::tie(l.lo, l.hi) < std::tie(r.lo, r.hi); });
  std::vector<Key> edges;
  edges.reserve(keys.size());
  for (const auto& k : keys) {
    if (!edges.empty() && edges.back().lo == k.lo && edges.back().hi == k.hi) {
      if (edges.back().w != k.w) {
        throw GraphError("non-symmetric weights for edge (" + name(k.lo) + ", " + name(k.hi) + ")");
      }
      continue;
    }
    edges.push_back(k);
  }
  std::erase_if(edges, [](const Key& k) { return k.w == 0.0; });

  std::vector<std::size_t> count(n + 1, 0);
  for (const auto& e : edges) {
    ++count[e.lo + 1];
    ++count[e.hi + 1];
  }
  std::partial_sum(count.begin(), count.end(), count.begin());
  g.offsets_ = count;
  g.neighbors_.resize(2 * edges.size());
  std::vector<std::size_t> cursor(g.offsets_.begin(), g.offsets_.end() - 1);
  // Edges are sorted by (lo, hi), so each adjacency list comes out sorted.
  for (const auto& e : edges) g.neighbors_[cursor[e.lo]++] = {e.hi, e.w};
  for (const auto& e : edges) g.neighbors_[cursor[e.hi]++] = {e.lo, e.w};
  for (VertexId v = 0; v < n; ++v) {
    std::sort(g.neighbors_.begin() + static_cast<std::ptrdiff_t>(g.offsets_[v]),
              g.neighbors_.begin() + static_cast<std::ptrdiff_t>(g.offsets_[v + 1]),
              [](const Neighbor& a, const Neighbor& b) { return a.vertex < b.vertex; });
  }

  g.degree_.assign(n, 0.0);
  g.mu0_ = std::numeric_limits<double>::infinity();
  for (VertexId v = 0; v < n; ++v) {
    for (const auto& nb : g.neighbors(v)) g.degree_[v] += nb.weight;
    const double ratio = g.degree_[v] / g.measure_[v];
    if (v == 0 || ratio > g.d_mu_) {
      g.d_mu_ = ratio;
      g.d_mu_vertex_ = v;
    }
    g.mu0_ = std::min(g.mu0_, g.measure_[v]);
    g.total_measure_ += g.measure_[v];
  }
  if (spec.mu_lower_bound) {
    const double bound = *spec.mu_lower_bound;
    if (!(bound > 0.0) || bound > g.mu0_) {
      throw GraphError("mu_lower_bound " + std::to_string(bound) + " must be positive and at most the smallest stored measure");
    }
    g.mu0_ = bound;
  }

  const auto dist = distances_from(g, 0);
  for (VertexId v = 0; v < n; ++v) {
    if (dist[v] == kUnreached) throw GraphError("graph is disconnected: vertex " + name(v) + " unreachable from " + name(0));
  }
  return g;
}

inline std::optional<VertexId> WeightedGraph::find(const std::string& label) const {
  if (labels_.empty()) {
    std::size_t pos = 0;
    try {
      const auto v = std::stoull(label, &pos);
      if (pos == label.size() && v < size()) return static_cast<VertexId>(v);
    } catch (const std::exception&) {
    }
    return std::nullopt;
  }
  auto it = std::find(labels_.begin(), labels_.end(), label);
  if (it == labels_.end()) return std::nullopt;
  return static_cast<VertexId>(it - labels_.begin());
}

inline double WeightedGraph::weight(VertexId x, VertexId y) const {
  const auto nbs = neighbors(x);
  auto it = std::lower_bound(nbs.begin(), nbs.end(), y, [](const Neighbor& nb, VertexId v) { return nb.vertex < v; });
  return (it != nbs.end() && it->vertex == y) ? it->weight : 0.0;
}

}  // namespace heatk
