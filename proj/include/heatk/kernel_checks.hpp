#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <utility>
#include <vector>

#include "heatk/graph.hpp"
#include "heatk/heat_kernel.hpp"

namespace heatk {

/// Five-point central difference of a scalar function of time.
template <typename Fn>
double time_derivative(Fn&& f, double t, double h) {
  return (-f(t + 2 * h) + 8 * f(t + h) - 8 * f(t - h) + f(t - 2 * h)) / (12 * h);
}

inline double derivative_step(double t) { return std::min(1e-3, t / 4); }

/// Largest observed violation of each heat-kernel property over a sample.
struct KernelPropertyReport {
  double symmetry = 0.0;         // |p(t,x,y) - p(t,y,x)|
  double negativity = 0.0;       // max(0, -p)
  double mass_excess = 0.0;      // max(0, sum mu p - 1 - err)
  double conservation = 0.0;     // |sum mu p - 1|, meaningful when no killing
  double heat_equation = 0.0;    // |d/dt p - Delta_y p|
  double semigroup = 0.0;        // |sum_z mu p(t,x,z) p(s,z,y) - p(t+s,x,y)|
  std::size_t pairs_checked = 0;
};

/// Evaluates symmetry, nonnegativity, mass bound, heat equation and the
/// semigroup identity for p_U at times t and s on the sampled pairs.
inline KernelPropertyReport check_kernel_properties(const DirichletDomain& dom, double t, double s,
                                                    const std::vector<std::pair<VertexId, VertexId>>& pairs,
                                                    double eps = kDefaultSeriesEps) {
  detail::require_positive_time(t);
  detail::require_positive_time(s);
  const auto& g = dom.parent();
  KernelPropertyReport rep;

  std::map<std::pair<VertexId, double>, HeatKernelField> cache;
  auto field = [&](VertexId x, double time) -> const HeatKernelField& {
    auto key = std::make_pair(x, time);
    auto it = cache.find(key);
    if (it == cache.end()) it = cache.emplace(key, dirichlet_heat_kernel(dom, time, x, eps)).first;
    return it->second;
  };

  const double h = derivative_step(t);
  for (const auto& [x, y] : pairs) {
    const auto& px = field(x, t);
    const auto& py = field(y, t);
    rep.symmetry = std::max(rep.symmetry, std::abs(px(y) - py(x)));

    for (const auto* f : {&px, &py}) {
      f->values.for_each([&](VertexId, double p) { rep.negativity = std::max(rep.negativity, -p); });
      const double mass = f->mass(g);
      rep.mass_excess = std::max(rep.mass_excess, mass - 1.0 - f->truncation_error);
      if (!dom.has_killing()) rep.conservation = std::max(rep.conservation, std::abs(mass - 1.0));
    }

    // d/dt p(t,x,y) against Delta_U applied in y.
    const double dpdt = time_derivative([&](double tau) { return dirichlet_heat_kernel(dom, tau, x, eps)(y); }, t, h);
    std::vector<double> local(dom.size(), 0.0);
    px.values.for_each([&](VertexId v, double p) { local[*dom.local_index(v)] = p; });
    const auto lap = dom.apply_generator(local);
    rep.heat_equation = std::max(rep.heat_equation, std::abs(dpdt - lap[*dom.local_index(y)]));

    // sum_z mu(z) p(t,x,z) p(s,z,y), with p(s,z,y) read from the field of y.
    const auto& ps_y = field(y, s);
    double conv = 0.0;
    px.values.for_each([&](VertexId z, double p) { conv += g.measure(z) * p * ps_y(z); });
    rep.semigroup = std::max(rep.semigroup, std::abs(conv - field(x, t + s)(y)));
    ++rep.pairs_checked;
  }
  return rep;
}

inline KernelPropertyReport check_kernel_properties(const WeightedGraph& g, double t, double s,
                                                    const std::vector<std::pair<VertexId, VertexId>>& pairs,
                                                    double eps = kDefaultSeriesEps) {
  return check_kernel_properties(DirichletDomain::whole(g), t, s, pairs, eps);
}

struct DiagonalPoint {
  double t;
  double value;          // p(t,x,x)
  double derivative;     // finite-difference d/dt p(t,x,x)
  double energy;         // -sum_y mu(y) Gamma(p(t/2,x,.))(y)
};

struct DiagonalMonotonicityReport {
  VertexId x = 0;
  std::vector<DiagonalPoint> points;
  double max_increase = 0.0;          // max(0, p(t_{i+1}) - p(t_i))
  double max_derivative_error = 0.0;  // |derivative - energy|
};

/// p(t,x,x) along an increasing time grid, and the identity
/// d/dt p(t,x,x) = -sum_y mu(y) Gamma(p(t/2,x,.))(y).
///
/// Gamma is the parent graph's form applied to p_U(t/2,x,.) extended by zero,
/// which accounts for the killing edges of a Dirichlet domain.
inline DiagonalMonotonicityReport check_diagonal_monotonicity(const DirichletDomain& dom, VertexId x,
                                                              const std::vector<double>& times,
                                                              double eps = kDefaultSeriesEps) {
  for (std::size_t i = 0; i < times.size(); ++i) {
    detail::require_positive_time(times[i]);
    if (i > 0 && times[i] <= times[i - 1]) throw DomainError("time grid must be strictly increasing");
  }
  const auto& g = dom.parent();
  DiagonalMonotonicityReport rep;
  rep.x = x;
  auto diag = [&](double tau) { return dirichlet_heat_kernel(dom, tau, x, eps)(x); };
  for (const double t : times) {
    DiagonalPoint pt{t, diag(t), 0.0, 0.0};
    pt.derivative = time_derivative(diag, t, derivative_step(t));
    const auto half = dirichlet_heat_kernel(dom, t / 2, x, eps);
    const auto gam = gamma_form(g, half.values);
    double energy = 0.0;
    gam.for_each([&](VertexId y, double value) { energy += g.measure(y) * value; });
    pt.energy = -energy;
    rep.max_derivative_error = std::max(rep.max_derivative_error, std::abs(pt.derivative - pt.energy));
    if (!rep.points.empty()) rep.max_increase = std::max(rep.max_increase, pt.value - rep.points.back().value);
    rep.points.push_back(pt);
  }
  return rep;
}

inline DiagonalMonotonicityReport check_diagonal_monotonicity(const WeightedGraph& g, VertexId x,
                                                              const std::vector<double>& times,
                                                              double eps = kDefaultSeriesEps) {
  return check_diagonal_monotonicity(DirichletDomain::whole(g), x, times, eps);
}

/// n log-spaced points from lo to hi inclusive.
inline std::vector<double> log_spaced(double lo, double hi, std::size_t n) {
  std::vector<double> out;
  if (n == 0) return out;
  if (n == 1) return {lo};
  const double a = std::log(lo), b = std::log(hi);
  for (std::size_t i = 0; i < n; ++i) out.push_back(std::exp(a + (b - a) * static_cast<double>(i) / static_cast<double>(n - 1)));
  out.back() = hi;
  out.front() = lo;
  return out;
}

}  // namespace heatk
