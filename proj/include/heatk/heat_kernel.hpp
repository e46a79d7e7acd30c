#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "heatk/errors.hpp"
#include "heatk/graph.hpp"

namespace heatk {

inline constexpr double kDefaultSeriesEps = 1e-12;
inline constexpr double kDefaultExhaustionTolerance = 1e-10;

// ---------------------------------------------------------------------------
// Dirichlet domains

/// Finite vertex subset U of a parent graph with killing at its boundary.
///
/// The generator is Delta_U f(x) = 1/mu(x) (sum_{y in U, y~x} omega f(y)) - m(x)/mu(x) f(x),
/// where m(x) is the full weighted degree in the parent, so edges leaving U
/// act as killing and the semigroup is substochastic. The parent must outlive
/// the domain.
class DirichletDomain {
 public:
  struct LocalNeighbor {
    std::size_t local;
    double weight;
  };

  DirichletDomain(const WeightedGraph& parent, std::vector<VertexId> subset, std::string tag = "subset")
      : parent_(&parent), vertices_(std::move(subset)), tag_(std::move(tag)) {
    if (vertices_.empty()) throw DomainError("Dirichlet domain must be nonempty");
    std::sort(vertices_.begin(), vertices_.end());
    for (std::size_t i = 0; i < vertices_.size(); ++i) {
      parent.check(vertices_[i]);
      if (i > 0 && vertices_[i] == vertices_[i - 1]) {
        throw DomainError("duplicate vertex " + std::to_string(vertices_[i]) + " in domain");
      }
    }
    offsets_.reserve(vertices_.size() + 1);
    offsets_.push_back(0);
    rate_.reserve(vertices_.size());
    for (VertexId v : vertices_) {
      for (const auto& nb : parent.neighbors(v)) {
        if (auto j = local_index(nb.vertex)) {
          adjacency_.push_back({*j, nb.weight});
        } else {
          killing_ = true;
        }
      }
      offsets_.push_back(adjacency_.size());
      const double r = parent.weighted_degree(v) / parent.measure(v);
      rate_.push_back(r);
      lambda_unif_ = std::max(lambda_unif_, r);
    }
  }

  static DirichletDomain whole(const WeightedGraph& g) {
    std::vector<VertexId> all(g.size());
    std::iota(all.begin(), all.end(), VertexId{0});
    return DirichletDomain(g, std::move(all), "exact");
  }

  static DirichletDomain ball(const WeightedGraph& g, VertexId center, Distance radius) {
    auto b = heatk::ball(g, center, radius);
    if (b.members.size() == g.size()) return whole(g);
    return DirichletDomain(g, std::move(b.members),
                           "ball(" + std::to_string(center) + "," + std::to_string(radius) + ")");
  }

  const WeightedGraph& parent() const noexcept { return *parent_; }
  std::span<const VertexId> vertices() const noexcept { return vertices_; }
  std::size_t size() const noexcept { return vertices_.size(); }
  VertexId vertex(std::size_t local) const { return vertices_.at(local); }
  const std::string& tag() const noexcept { return tag_; }

  std::optional<std::size_t> local_index(VertexId v) const {
    auto it = std::lower_bound(vertices_.begin(), vertices_.end(), v);
    if (it == vertices_.end() || *it != v) return std::nullopt;
    return static_cast<std::size_t>(it - vertices_.begin());
  }
  bool contains(VertexId v) const { return local_index(v).has_value(); }

  /// True when some edge leaves U (the semigroup loses mass).
  bool has_killing() const noexcept { return killing_; }
  bool is_whole() const noexcept { return vertices_.size() == parent_->size(); }

  /// m(x)/mu(x), the magnitude of the generator's diagonal.
  double rate(std::size_t local) const { return rate_.at(local); }
  double lambda_unif() const noexcept { return lambda_unif_; }
  double measure(std::size_t local) const { return parent_->measure(vertices_[local]); }

  std::span<const LocalNeighbor> interior_neighbors(std::size_t local) const {
    return {adjacency_.data() + offsets_[local], adjacency_.data() + offsets_[local + 1]};
  }

  /// (Delta_U f)(x) for f given in local coordinates.
  std::vector<double> apply_generator(std::span<const double> f) const {
    std::vector<double> out(size());
    for (std::size_t i = 0; i < size(); ++i) {
      double acc = 0.0;
      for (const auto& nb : interior_neighbors(i)) acc += nb.weight * f[nb.local];
      out[i] = acc / measure(i) - rate_[i] * f[i];
    }
    return out;
  }

 private:
  const WeightedGraph* parent_;
  std::vector<VertexId> vertices_;
  std::string tag_;
  std::vector<std::size_t> offsets_;
  std::vector<LocalNeighbor> adjacency_;
  std::vector<double> rate_;
  double lambda_unif_ = 0.0;
  bool killing_ = false;
};

// ---------------------------------------------------------------------------
// Poisson weights for uniformization

/// Weights e^{-a} a^n / n! for n = 0..N, with N the first index >= a at which
/// the certified tail bound sum_{k>N} w_k <= w_{N+1} / (1 - a/(N+2)) drops
/// below `tail_target`. Weights are formed in log space so large a does not
/// underflow e^{-a}.
struct PoissonWeights {
  std::vector<double> weights;
  double tail_bound = 0.0;

  static PoissonWeights build(double a, double tail_target) {
    PoissonWeights pw;
    if (a == 0.0) {
      pw.weights = {1.0};
      return pw;
    }
    const double log_a = std::log(a);
    double log_w = -a;
    const auto n_min = static_cast<std::size_t>(std::ceil(a));
    const auto n_cap = n_min + static_cast<std::size_t>(60.0 * std::sqrt(a) + 200.0);
    for (std::size_t n = 0;; ++n) {
      pw.weights.push_back(std::exp(log_w));
      const double log_next = log_w + log_a - std::log(static_cast<double>(n + 1));
      if (n >= n_min) {
        const double ratio = a / static_cast<double>(n + 2);
        const double bound = std::exp(log_next) / (1.0 - ratio);
        if (bound < tail_target || n >= n_cap) {
          pw.tail_bound = bound;
          return pw;
        }
      }
      log_w = log_next;
    }
  }

  std::size_t terms() const noexcept { return weights.size(); }
};

// ---------------------------------------------------------------------------
// Kernel fields

/// p(t, source, .) on a finite support, with a certified bound on the
/// max-norm error of every stored value.
struct HeatKernelField {
  double t = 0.0;
  VertexId source = 0;
  VertexFunction values;
  double truncation_error = 0.0;
  std::string domain_tag;
  std::size_t series_terms = 0;

  double operator()(VertexId y) const { return values(y); }
  bool exact_domain() const { return domain_tag == "exact"; }

  /// sum_y mu(y) p(t, source, y) over the stored support.
  double mass(const WeightedGraph& g) const {
    double acc = 0.0;
    values.for_each([&](VertexId y, double p) { acc += g.measure(y) * p; });
    return acc;
  }
};

namespace detail {

inline void require_positive_time(double t) {
  if (!(t > 0.0) || !std::isfinite(t)) throw DomainError("time must be positive and finite, got " + std::to_string(t));
}

inline void require_positive_eps(double eps) {
  if (!(eps > 0.0)) throw DomainError("eps must be positive, got " + std::to_string(eps));
}

}  // namespace detail

/// Dirichlet heat kernel p_U(t, x, .) by uniformization:
///
///   p_U(t,x,.) = e^{-lambda t} sum_{n<=N} (lambda t)^n / n! * P^n (delta_x / mu(x)),
///   P = I + Delta_U / lambda,  lambda = max_{U} m/mu.
///
/// P has nonnegative entries and substochastic rows, so every partial sum is
/// nonnegative and underestimates the true value by at most
/// tail(N) / mu(x) <= eps.
inline HeatKernelField dirichlet_heat_kernel(const DirichletDomain& dom, double t, VertexId x,
                                             double eps = kDefaultSeriesEps) {
  detail::require_positive_time(t);
  detail::require_positive_eps(eps);
  const auto src = dom.local_index(x);
  if (!src) throw DomainError("source vertex " + std::to_string(x) + " is not in domain " + dom.tag());
  const double mu_x = dom.measure(*src);

  // Lay the reachable part of U out in BFS order from x, so after n steps
  // only the first layer_end[n] entries can be nonzero.
  std::vector<std::size_t> order{*src};
  std::vector<std::size_t> position(dom.size(), std::numeric_limits<std::size_t>::max());
  position[*src] = 0;
  std::vector<std::size_t> layer_end;
  {
    std::size_t begin = 0;
    while (begin < order.size()) {
      const std::size_t end = order.size();
      layer_end.push_back(end);
      for (std::size_t k = begin; k < end; ++k) {
        for (const auto& nb : dom.interior_neighbors(order[k])) {
          if (position[nb.local] == std::numeric_limits<std::size_t>::max()) {
            position[nb.local] = order.size();
            order.push_back(nb.local);
          }
        }
      }
      begin = end;
    }
  }
  const std::size_t reach = order.size();

  HeatKernelField field;
  field.t = t;
  field.source = x;
  field.domain_tag = dom.tag();

  std::vector<double> result(reach, 0.0);
  const double lambda = dom.lambda_unif();
  if (lambda == 0.0) {
    // No edges touch U: Delta_U = 0 and the kernel is the identity.
    result[0] = 1.0 / mu_x;
    field.series_terms = 1;
  } else {
    const auto pw = PoissonWeights::build(lambda * t, eps * mu_x);
    field.truncation_error = pw.tail_bound / mu_x;
    field.series_terms = pw.terms();

    // Transition structure in BFS coordinates.
    std::vector<double> stay(reach);
    std::vector<std::size_t> offs(reach + 1, 0);
    std::vector<std::pair<std::size_t, double>> jumps;
    for (std::size_t k = 0; k < reach; ++k) {
      const std::size_t i = order[k];
      stay[k] = 1.0 - dom.rate(i) / lambda;
      const double scale = 1.0 / (dom.measure(i) * lambda);
      for (const auto& nb : dom.interior_neighbors(i)) jumps.emplace_back(position[nb.local], nb.weight * scale);
      offs[k + 1] = jumps.size();
    }

    std::vector<double> cur(reach, 0.0), next(reach, 0.0);
    cur[0] = 1.0 / mu_x;
    std::size_t active = 1;
    for (std::size_t n = 0; n < pw.terms(); ++n) {
      const double w = pw.weights[n];
      for (std::size_t k = 0; k < active; ++k) result[k] += w * cur[k];
      if (n + 1 == pw.terms()) break;
      const std::size_t grown = layer_end[std::min(n + 1, layer_end.size() - 1)];
      for (std::size_t k = 0; k < grown; ++k) {
        double acc = stay[k] * cur[k];
        for (std::size_t e = offs[k]; e < offs[k + 1]; ++e) acc += jumps[e].second * cur[jumps[e].first];
        next[k] = acc;
      }
      std::swap(cur, next);
      active = grown;
    }
  }

  std::vector<VertexId> support(reach);
  for (std::size_t k = 0; k < reach; ++k) support[k] = dom.vertex(order[k]);
  field.values = VertexFunction::sparse(std::move(support), std::move(result));
  return field;
}

/// Exact kernel of a finite graph (U = V).
inline HeatKernelField finite_heat_kernel(const WeightedGraph& g, double t, VertexId x,
                                          double eps = kDefaultSeriesEps) {
  return dirichlet_heat_kernel(DirichletDomain::whole(g), t, x, eps);
}

// ---------------------------------------------------------------------------
// Exhaustion

/// U_k = B(center, radii[k]); radii strictly increasing.
struct ExhaustionSchedule {
  VertexId center = 0;
  std::vector<Distance> radii;
  double tolerance = kDefaultExhaustionTolerance;
  double series_eps = kDefaultSeriesEps;

  /// R_k = first * 2^{k-1}, capped at `last` (which is always included).
  static ExhaustionSchedule doubling(VertexId center, Distance first, Distance last,
                                     double tolerance = kDefaultExhaustionTolerance) {
    if (first < 1 || last < first) throw DomainError("doubling schedule needs 1 <= first <= last");
    ExhaustionSchedule s;
    s.center = center;
    s.tolerance = tolerance;
    for (Distance r = first; r < last; r *= 2) s.radii.push_back(r);
    s.radii.push_back(last);
    return s;
  }

  void validate() const {
    if (radii.empty()) throw DomainError("exhaustion schedule has no radii");
    for (std::size_t i = 0; i < radii.size(); ++i) {
      if (radii[i] < 0 || (i > 0 && radii[i] <= radii[i - 1])) {
        throw DomainError("exhaustion radii must be nonnegative and strictly increasing");
      }
    }
    if (!(tolerance > 0.0)) throw DomainError("exhaustion tolerance must be positive");
    detail::require_positive_eps(series_eps);
  }
};

/// Raised when the largest radius is reached without convergence; carries the
/// last two iterates.
class ScheduleExhausted : public ConvergenceError {
 public:
  ScheduleExhausted(const std::string& what, HeatKernelField previous, HeatKernelField last)
      : ConvergenceError(what), previous_(std::move(previous)), last_(std::move(last)) {}

  const HeatKernelField& previous() const noexcept { return previous_; }
  const HeatKernelField& last() const noexcept { return last_; }

 private:
  HeatKernelField previous_;
  HeatKernelField last_;
};

struct ExhaustionStep {
  Distance radius;
  std::size_t domain_size;
  double diagonal;           // p_k(t, x, x)
  double max_change;         // max_y |p_k - p_{k-1}|, infinity for k = 0
  double monotone_violation; // max_y (p_{k-1} - p_k - err_k), clipped at 0
  double lost_mass;          // 1 - sum mu p_k
};

struct ExhaustionResult {
  HeatKernelField field;
  std::vector<ExhaustionStep> steps;
  double max_monotone_violation = 0.0;
};

inline constexpr double kMonotoneSlack = 1e-12;

/// p_k <= p_{k+1} failed beyond kMonotoneSlack.
class MonotonicityViolation : public Error {
 public:
  MonotonicityViolation(const std::string& what, double violation) : Error(what), violation_(violation) {}
  double violation() const noexcept { return violation_; }

 private:
  double violation_;
};

/// p(t, x, .) = lim p_k(t, x, .) along the schedule.
///
/// Stops when successive iterates agree to `sched.tolerance` everywhere, or
/// when U_k covers the whole graph. p_k <= p_{k+1} is checked pointwise at
/// every step. For a truncated result, truncation_error is the series error
/// plus the lost mass over mu0, which bounds p - p_U by the killed-process
/// representation.
inline ExhaustionResult heat_kernel_traced(const WeightedGraph& g, const ExhaustionSchedule& sched, double t,
                                           VertexId x) {
  sched.validate();
  detail::require_positive_time(t);
  g.check(sched.center);
  g.check(x);
  if (graph_distance(g, sched.center, x) > sched.radii.front()) {
    throw DomainError("source vertex " + std::to_string(x) + " lies outside the first exhaustion member");
  }

  ExhaustionResult out;
  std::optional<HeatKernelField> prev;
  for (std::size_t k = 0; k < sched.radii.size(); ++k) {
    const Distance radius = sched.radii[k];
    const auto dom = DirichletDomain::ball(g, sched.center, radius);
    auto cur = dirichlet_heat_kernel(dom, t, x, sched.series_eps);

    ExhaustionStep step{radius, dom.size(), cur(x), std::numeric_limits<double>::infinity(), 0.0,
                        std::max(0.0, 1.0 - cur.mass(g))};
    if (prev) {
      double change = 0.0;
      double violation = 0.0;
      cur.values.for_each([&](VertexId y, double p) { change = std::max(change, std::abs(p - (*prev)(y))); });
      prev->values.for_each([&](VertexId y, double p) {
        change = std::max(change, std::abs(p - cur(y)));
        violation = std::max(violation, p - cur(y) - cur.truncation_error);
      });
      step.max_change = change;
      step.monotone_violation = violation;
      out.max_monotone_violation = std::max(out.max_monotone_violation, violation);
      if (violation > kMonotoneSlack) {
        throw MonotonicityViolation("exhaustion monotonicity p_k <= p_{k+1} violated by " +
                                        std::to_string(violation) + " at radius " + std::to_string(radius),
                                    violation);
      }
    }
    out.steps.push_back(step);

    const bool finished = dom.is_whole() || (prev && step.max_change < sched.tolerance);
    if (finished) {
      if (!dom.is_whole()) cur.truncation_error += step.lost_mass / g.mu0();
      out.field = std::move(cur);
      return out;
    }
    if (k + 1 == sched.radii.size()) {
      HeatKernelField last = cur;
      if (!prev) prev = cur;
      throw ScheduleExhausted("exhaustion schedule exhausted at radius " + std::to_string(radius) +
                                  " without reaching tolerance",
                              std::move(*prev), std::move(last));
    }
    prev = std::move(cur);
  }
  throw ConvergenceError("unreachable");
}

inline HeatKernelField heat_kernel(const WeightedGraph& g, const ExhaustionSchedule& sched, double t, VertexId x) {
  return heat_kernel_traced(g, sched, t, x).field;
}

// ---------------------------------------------------------------------------
// Evolution

/// e^{t Delta_U} u0 in local coordinates, by the same uniformized series.
/// The absolute error is at most tail * max|u0|.
inline std::vector<double> uniformized_apply(const DirichletDomain& dom, double t, std::span<const double> u0,
                                             double eps = kDefaultSeriesEps) {
  detail::require_positive_time(t);
  detail::require_positive_eps(eps);
  if (u0.size() != dom.size()) throw DomainError("initial data does not match domain size");
  const double lambda = dom.lambda_unif();
  std::vector<double> cur(u0.begin(), u0.end());
  if (lambda == 0.0) return cur;
  const auto pw = PoissonWeights::build(lambda * t, eps);
  std::vector<double> out(dom.size(), 0.0), next(dom.size());
  for (std::size_t n = 0; n < pw.terms(); ++n) {
    for (std::size_t i = 0; i < cur.size(); ++i) out[i] += pw.weights[n] * cur[i];
    if (n + 1 == pw.terms()) break;
    for (std::size_t i = 0; i < dom.size(); ++i) {
      double acc = (1.0 - dom.rate(i) / lambda) * cur[i];
      const double scale = 1.0 / (dom.measure(i) * lambda);
      for (const auto& nb : dom.interior_neighbors(i)) acc += nb.weight * scale * cur[nb.local];
      next[i] = acc;
    }
    std::swap(cur, next);
  }
  return out;
}

/// u(t,x) = sum_y mu(y) p(t,x,y) u0(y) on a finite graph.
inline VertexFunction heat_evolve(const WeightedGraph& g, const VertexFunction& u0, double t,
                                  double eps = kDefaultSeriesEps) {
  std::vector<double> dense(g.size(), 0.0);
  u0.for_each([&](VertexId v, double value) {
    if (!std::isfinite(value)) throw DomainError("initial data must be bounded");
    dense[g.check(v)] = value;
  });
  return VertexFunction::dense(uniformized_apply(DirichletDomain::whole(g), t, dense, eps));
}

}  // namespace heatk
