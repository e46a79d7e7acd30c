#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numbers>
#include <numeric>
#include <optional>
#include <string>
#include <vector>

#include "heatk/errors.hpp"
#include "heatk/graph.hpp"
#include "heatk/heat_kernel.hpp"
#include "heatk/legendre.hpp"

namespace heatk {

/// Absolute slack allowed on every probability-level certificate.
inline constexpr double kCertificateTolerance = 1e-9;

enum class LambdaMode { exact, zero };

inline const char* to_string(LambdaMode m) { return m == LambdaMode::exact ? "exact" : "zero"; }

/// One certified comparison. For upper bounds slack = bound - true, for lower
/// bounds slack = true - bound; passed iff slack >= -tolerance.
struct BoundReport {
  std::string theorem;
  std::string instance;
  double true_value = 0.0;
  double bound_value = 0.0;
  double slack = 0.0;
  bool passed = false;
  LambdaMode lambda_mode = LambdaMode::zero;
  std::map<std::string, double> parameters;
};

inline BoundReport make_upper_report(std::string theorem, std::string instance, double truth, double bound,
                                     LambdaMode mode, double tol = kCertificateTolerance) {
  BoundReport r{std::move(theorem), std::move(instance), truth, bound, bound - truth, false, mode, {}};
  r.passed = r.slack >= -tol;
  return r;
}

inline BoundReport make_lower_report(std::string theorem, std::string instance, double truth, double bound,
                                     LambdaMode mode, double tol = kCertificateTolerance) {
  BoundReport r{std::move(theorem), std::move(instance), truth, bound, truth - bound, false, mode, {}};
  r.passed = r.slack >= -tol;
  return r;
}

// ---------------------------------------------------------------------------
// Davies machinery

/// b(psi,x) = 1/(2 mu(x)) sum_{y~x} omega (e^{psi(y)-psi(x)} + e^{psi(x)-psi(y)} - 2).
inline double b_of_phi(const WeightedGraph& g, const VertexFunction& psi, VertexId x) {
  const double px = psi(x);
  double acc = 0.0;
  for (const auto& nb : g.neighbors(x)) acc += nb.weight * cosh_gap(psi(nb.vertex) - px);
  return acc / (2.0 * g.measure(x));
}

struct DaviesData {
  VertexFunction psi;
  VertexFunction b_values;
  double sup_b = 0.0;
  double lambda = 0.0;
  double h = 0.0;  // sup b - Lambda
};

/// b(psi, .) over `support` (all vertices when empty) and h = sup b - Lambda.
inline DaviesData davies_data(const WeightedGraph& g, VertexFunction psi, double lambda,
                              std::vector<VertexId> support = {}) {
  if (support.empty()) {
    support.resize(g.size());
    std::iota(support.begin(), support.end(), VertexId{0});
  }
  DaviesData d;
  std::vector<double> b(support.size());
  for (std::size_t i = 0; i < support.size(); ++i) {
    b[i] = b_of_phi(g, psi, support[i]);
    d.sup_b = std::max(d.sup_b, b[i]);
  }
  d.b_values = VertexFunction::sparse(std::move(support), std::move(b));
  d.psi = std::move(psi);
  d.lambda = lambda;
  d.h = d.sup_b - lambda;
  return d;
}

/// log of (mu(x)mu(y))^{-1/2} exp(psi(x) - psi(y) + h t).
inline double davies_log_bound(const WeightedGraph& g, const DaviesData& d, double t, VertexId x, VertexId y) {
  detail::require_positive_time(t);
  return -0.5 * std::log(g.measure(x) * g.measure(y)) + d.psi(x) - d.psi(y) + d.h * t;
}

inline double davies_upper_bound(const WeightedGraph& g, const DaviesData& d, double t, VertexId x, VertexId y) {
  return std::exp(davies_log_bound(g, d, t, x, y));
}

inline double davies_upper_bound(const WeightedGraph& g, const VertexFunction& psi, double lambda, double t,
                                 VertexId x, VertexId y) {
  if (lambda < 0.0) throw DomainError("Lambda must be nonnegative");
  return davies_upper_bound(g, davies_data(g, psi, lambda), t, x, y);
}

/// psi(x) = s * min(D, d(x, x1)).
inline VertexFunction psi_test_function(const WeightedGraph& g, VertexId x1, Distance D, double s) {
  if (!(s > 0.0)) throw DomainError("psi_test_function needs s > 0");
  if (D < 0) throw DomainError("psi_test_function needs D >= 0");
  const auto dist = distances_from(g, x1, D);
  std::vector<double> out(g.size());
  for (VertexId v = 0; v < g.size(); ++v) {
    out[v] = s * static_cast<double>(dist[v] == kUnreached ? D : std::min(D, dist[v]));
  }
  return VertexFunction::dense(std::move(out));
}

// ---------------------------------------------------------------------------
// Natural-metric upper bound

/// log of (mu1 mu2)^{-1/2} exp(-(d/2) log(d / (2 D_mu e t)) - Lambda t);
/// the distance term is 0 at d = 0.
inline double theorem31_log_rhs(double mu1, double mu2, Distance d, double d_mu, double lambda, double t) {
  detail::require_positive_time(t);
  double decay = 0.0;
  if (d > 0) {
    const double dd = static_cast<double>(d);
    decay = -(dd / 2) * std::log(dd / (2 * d_mu * std::numbers::e * t));
  }
  return -0.5 * std::log(mu1 * mu2) + decay - lambda * t;
}

/// Bound from psi = s (D ^ d(., x1)) with the uniform estimate
/// h <= (s^2 e^s / 2) D_mu - Lambda, before optimising over s.
inline double theorem31_family_log_bound(double mu1, double mu2, Distance d, double d_mu, double lambda, double t,
                                         double s) {
  detail::require_positive_time(t);
  return -0.5 * std::log(mu1 * mu2) - s * static_cast<double>(d) + s * s * std::exp(s) / 2 * d_mu * t - lambda * t;
}

/// The same family optimised over s: exponent D_mu t fhat(gamma) - Lambda t, gamma = d/(D_mu t).
inline double theorem31_legendre_log_bound(double mu1, double mu2, Distance d, double d_mu, double lambda,
                                           double t) {
  detail::require_positive_time(t);
  const double base = -0.5 * std::log(mu1 * mu2) - lambda * t;
  if (d == 0) return base;
  return base + d_mu * t * legendre_fhat(static_cast<double>(d) / (d_mu * t)).value;
}

inline BoundReport theorem31_upper(const WeightedGraph& g, double lambda, LambdaMode mode, double t, VertexId x1,
                                   VertexId x2, double p_true, double tol = kCertificateTolerance) {
  detail::require_positive_time(t);
  if (lambda < 0.0) throw DomainError("Lambda must be nonnegative");
  const Distance d = graph_distance(g, x1, x2);
  const double log_rhs = theorem31_log_rhs(g.measure(x1), g.measure(x2), d, g.d_mu(), lambda, t);
  auto r = make_upper_report("thm31", "t=" + std::to_string(t) + ",x=" + g.label(x1) + ",y=" + g.label(x2), p_true,
                             std::exp(log_rhs), mode, tol);
  r.parameters = {{"D_mu", g.d_mu()}, {"Lambda", lambda}, {"d", static_cast<double>(d)}, {"t", t}, {"log_bound", log_rhs}};
  return r;
}

// ---------------------------------------------------------------------------
// Tail mass outside a ball

struct TailMass {
  double measured = 0.0;   // sum over the computed support outside B(x,r)
  double allowance = 0.0;  // mass the support does not account for
  double value = 0.0;      // measured + allowance, an upper bound on the true tail
  double inside = 0.0;     // sum over B(x,r)
};

/// sum_{z not in B(x,r)} mu(z) p(t,x,z) from a kernel field with source x.
///
/// Computed values never exceed the true kernel and the graph is stochastically
/// complete (D_mu < inf), so 1 - inside bounds the tail from above; the
/// allowance is the part of it not seen on the support.
inline TailMass tail_mass(const WeightedGraph& g, const HeatKernelField& field, Distance r) {
  if (r < 0) throw DomainError("tail radius must be nonnegative");
  const auto dist = distances_from(g, field.source, r);
  TailMass tm;
  bool outside_seen = false;
  field.values.for_each([&](VertexId z, double p) {
    if (dist[z] == kUnreached) {
      tm.measured += g.measure(z) * p;
      outside_seen = true;
    } else {
      tm.inside += g.measure(z) * p;
    }
  });
  if (!field.exact_domain() && !outside_seen) {
    throw DomainError("support too small: kernel support lies inside B(x," + std::to_string(r) + ")");
  }
  tm.allowance = std::max(0.0, 1.0 - tm.inside - tm.measured);
  // On an exact domain the series certificate bounds the missing mass too,
  // and stays meaningful below the rounding floor of 1 - sum.
  if (field.exact_domain()) tm.allowance = std::min(tm.allowance, g.measure(field.source) * field.truncation_error);
  tm.value = tm.measured + tm.allowance;
  return tm;
}

// ---------------------------------------------------------------------------
// Annulus bound

struct GrowthConstants {
  double c0 = 1.0;
  double m = 1.0;
  double r0 = 1.0;
  double mu0 = 1.0;
  double d_mu = 1.0;
  double lambda = 0.0;
};

/// K = 2^m c0 / (mu0 (1 - 2/e)).
inline double annulus_K(const GrowthConstants& p) {
  return std::pow(2.0, p.m) * p.c0 / (p.mu0 * (1.0 - 2.0 / std::numbers::e));
}

struct AnnulusConditions {
  bool radius_ok = false;     // (i)   r >= r0
  bool scale_ok = false;      // (ii)  2r / (D_mu e t) > 1
  bool ratio_ok = false;      // (iii) (r/2) log(2r / (D_mu e t)) >= m
  double ratio_lhs = 0.0;
  bool all() const { return radius_ok && scale_ok && ratio_ok; }
};

inline AnnulusConditions annulus_conditions(const GrowthConstants& p, double r, double t) {
  detail::require_positive_time(t);
  AnnulusConditions c;
  const double q = 2 * r / (p.d_mu * std::numbers::e * t);
  c.radius_ok = r >= p.r0;
  c.scale_ok = q > 1.0;
  c.ratio_lhs = r > 0 ? (r / 2) * std::log(q) : -std::numeric_limits<double>::infinity();
  c.ratio_ok = c.ratio_lhs >= p.m;
  return c;
}

struct AnnulusBound {
  double K = 0.0;
  double log_value = 0.0;
  double value = 0.0;
};

/// K r^m exp(-(r/2) log(r / (2 D_mu e t)) - Lambda t), computed in log space.
/// Throws PreconditionError naming the first failing condition.
inline AnnulusBound annulus_tail_bound(const GrowthConstants& p, double r, double t) {
  if (p.m < 1.0) throw PreconditionError("annulus bound needs m >= 1 so that (2/e)^m <= 2/e");
  const auto c = annulus_conditions(p, r, t);
  if (!c.radius_ok) throw PreconditionError("condition (i) r >= r0 fails: r=" + std::to_string(r));
  if (!c.scale_ok) throw PreconditionError("condition (ii) 2r/(D_mu e t) > 1 fails: r=" + std::to_string(r) + ", t=" + std::to_string(t));
  if (!c.ratio_ok) {
    throw PreconditionError("condition (iii) (r/2)log(2r/(D_mu e t)) >= m fails: lhs=" + std::to_string(c.ratio_lhs));
  }
  AnnulusBound b;
  b.K = annulus_K(p);
  b.log_value = std::log(b.K) + p.m * std::log(r) - (r / 2) * std::log(r / (2 * p.d_mu * std::numbers::e * t)) - p.lambda * t;
  b.value = std::exp(b.log_value);
  return b;
}

/// log a_k, a_k = (2^{k+1} r)^m exp(-(2^k r / 2) log(2^k r / (2 D_mu e t)) - Lambda t).
inline double annulus_term_log(const GrowthConstants& p, double r, double t, int k) {
  const double rk = std::ldexp(r, k);
  return p.m * std::log(2 * rk) - (rk / 2) * std::log(rk / (2 * p.d_mu * std::numbers::e * t)) - p.lambda * t;
}

/// 2^m exp(-(r/2) log(2r / (D_mu e t))), the bound on a_{k+1}/a_k.
inline double annulus_ratio_bound(const GrowthConstants& p, double r, double t) {
  return std::pow(2.0, p.m) * std::exp(-(r / 2) * std::log(2 * r / (p.d_mu * std::numbers::e * t)));
}

// ---------------------------------------------------------------------------
// On-diagonal lower bound

/// log of the tail bound with r = C t log t substituted:
/// log K + m log(C t log t) - (C t log t / 2) log(C log t / (2 D_mu e)) - Lambda t.  (t > 1)
inline double thm32_log_rhs(const GrowthConstants& p, double C, double t) {
  const double lt = std::log(t);
  const double r = C * t * lt;
  return std::log(annulus_K(p)) + p.m * std::log(r) - (r / 2) * std::log(C * lt / (2 * p.d_mu * std::numbers::e)) -
         p.lambda * t;
}

inline double thm32_log_rhs_derivative(const GrowthConstants& p, double C, double t) {
  const double lt = std::log(t);
  return p.m * (1.0 / t + 1.0 / (t * lt)) -
         (C / 2) * ((lt + 1.0) * std::log(C * lt / (2 * p.d_mu * std::numbers::e)) + 1.0) - p.lambda;
}

/// log of t^m (log t)^{m - log t}.
inline double log_power_decay(double m, double t) {
  const double lt = std::log(t);
  return m * lt + (m - lt) * std::log(lt);
}

struct Thm32Thresholds {
  double t1 = 0.0;  // r(t) >= r0 from here on
  double t2 = 0.0;  // condition (iii) from here on
  double T = 0.0;   // tail bound <= 1/2 from here on
  double t_monotone = 0.0;  // log-expression decreasing from here on
  double log_rhs_at_T = 0.0;
  bool t2_increasing = false;  // d/dt of condition (iii)'s left side > 0 at t2
};

class BelowThreshold : public PreconditionError {
 public:
  BelowThreshold(const std::string& what, Thm32Thresholds th) : PreconditionError(what), th_(th) {}
  const Thm32Thresholds& thresholds() const noexcept { return th_; }

 private:
  Thm32Thresholds th_;
};

namespace detail {

// Smallest t in (lo, hi] with pred(t), for pred false at lo and upward-closed.
template <typename Pred>
double bisect_threshold(double lo, Pred&& pred) {
  double hi = std::max(2.0 * lo, lo + 1.0);
  int guard = 0;
  while (!pred(hi)) {
    lo = hi;
    hi *= 2;
    if (++guard > 200) throw ConvergenceError("threshold bracketing failed");
  }
  for (int i = 0; i < 200 && (hi - lo) > 1e-13 * hi; ++i) {
    const double mid = lo + (hi - lo) / 2;
    (pred(mid) ? hi : lo) = mid;
  }
  return hi;
}

}  // namespace detail

inline void require_c_above_critical(double C, double d_mu) {
  const double crit = 2 * d_mu * std::numbers::e;
  if (!(C > crit)) {
    throw PreconditionError("C must exceed 2 D_mu e = " + std::to_string(crit) + ", got " + std::to_string(C));
  }
}

/// Thresholds for r(t) = C t log t.
///
/// t1 and t2 are roots of increasing functions on t > 1 (condition (iii)'s
/// left side increases once it is positive). T is the last crossing of
/// log(1/2) by the log tail bound: the bound's derivative is monotone once
/// C log t >= 2 D_mu e, so past t_monotone one bisection suffices; the stretch
/// before it is scanned on a fine grid.
inline Thm32Thresholds theorem32_thresholds(const GrowthConstants& p, double C) {
  require_c_above_critical(C, p.d_mu);
  Thm32Thresholds th;
  const double e = std::numbers::e;

  th.t1 = p.r0 <= 0 ? 1.0 : detail::bisect_threshold(1.0, [&](double t) { return C * t * std::log(t) >= p.r0; });

  const double a = 2 * C / (p.d_mu * e);
  auto lhs_iii = [&](double t) {
    const double lt = std::log(t);
    return (C * t * lt / 2) * std::log(a * lt);
  };
  th.t2 = detail::bisect_threshold(std::exp(1.0 / a), [&](double t) { return lhs_iii(t) >= p.m; });
  {
    const double h = 1e-6 * th.t2;
    th.t2_increasing = lhs_iii(th.t2 + h) > lhs_iii(th.t2);
  }

  const double start = std::max(th.t1, th.t2);
  const double b = C / (2 * p.d_mu * e);
  const double t_b = std::max(start, std::exp(1.0 / b));
  th.t_monotone = thm32_log_rhs_derivative(p, C, t_b) <= 0.0
                      ? t_b
                      : detail::bisect_threshold(t_b, [&](double t) { return thm32_log_rhs_derivative(p, C, t) <= 0.0; });

  const double half = std::log(0.5);
  auto below = [&](double t) { return thm32_log_rhs(p, C, t) <= half; };
  if (!below(th.t_monotone)) {
    th.T = detail::bisect_threshold(th.t_monotone, below);
  } else {
    th.T = start;
    constexpr int kGrid = 20000;
    for (int i = kGrid; i >= 0; --i) {
      const double t = start + (th.t_monotone - start) * i / kGrid;
      if (!below(t)) {
        th.T = detail::bisect_threshold(t, below);
        break;
      }
    }
  }
  th.log_rhs_at_T = thm32_log_rhs(p, C, th.T);
  return th;
}

// ---------------------------------------------------------------------------
// Volume growth

struct GrowthProfile {
  double c0 = 0.0;
  double m = 0.0;
  Distance r0 = 1;
  Distance r_max = 1;
  std::string center_policy;  // "all-vertices" or "listed"
  std::vector<VertexId> centers;
  VertexId worst_center = 0;
  Distance worst_radius = 0;
};

/// V(x,r) / r^m maximised over centers and integer r in [r0, r_max].
/// An empty `centers` list means every vertex.
inline GrowthProfile fit_growth_profile(const WeightedGraph& g, double m, Distance r0, Distance r_max,
                                        std::vector<VertexId> centers = {}) {
  if (r0 < 1) throw DomainError("growth profile needs r0 >= 1 (r^m vanishes at r = 0)");
  if (r_max < r0) throw DomainError("empty radius range [" + std::to_string(r0) + ", " + std::to_string(r_max) + "]");
  if (!(m > 0.0)) throw DomainError("growth exponent must be positive");
  GrowthProfile prof;
  prof.m = m;
  prof.r0 = r0;
  prof.r_max = r_max;
  prof.center_policy = centers.empty() ? "all-vertices" : "listed";
  if (centers.empty()) {
    centers.resize(g.size());
    std::iota(centers.begin(), centers.end(), VertexId{0});
  }
  for (VertexId x : centers) {
    const auto vol = ball_volume_profile(g, x, r_max);
    for (Distance r = r0; r <= r_max; ++r) {
      const double ratio = vol[static_cast<std::size_t>(r)] / std::pow(static_cast<double>(r), m);
      if (ratio > prof.c0) {
        prof.c0 = ratio;
        prof.worst_center = x;
        prof.worst_radius = r;
      }
    }
  }
  prof.centers = std::move(centers);
  return prof;
}

/// Least-squares slope of log V(x,r) against log r over the range.
inline double estimate_growth_exponent(const WeightedGraph& g, Distance r0, Distance r_max,
                                       const std::vector<VertexId>& centers) {
  if (r0 < 1 || r_max <= r0) throw DomainError("exponent fit needs 1 <= r0 < r_max");
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  double n = 0;
  for (VertexId x : centers) {
    const auto vol = ball_volume_profile(g, x, r_max);
    for (Distance r = r0; r <= r_max; ++r) {
      const double lx = std::log(static_cast<double>(r));
      const double ly = std::log(vol[static_cast<std::size_t>(r)]);
      sx += lx;
      sy += ly;
      sxx += lx * lx;
      sxy += lx * ly;
      n += 1;
    }
  }
  if (n < 2) throw DomainError("exponent fit needs at least two points");
  return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

/// V(x,r) <= c0 r^m for every listed center and integer r in [r0, r_max].
inline bool growth_profile_holds(const WeightedGraph& g, const GrowthProfile& prof) {
  for (VertexId x : prof.centers) {
    const auto vol = ball_volume_profile(g, x, prof.r_max);
    for (Distance r = prof.r0; r <= prof.r_max; ++r) {
      if (vol[static_cast<std::size_t>(r)] > prof.c0 * std::pow(static_cast<double>(r), prof.m) * (1 + 1e-12)) return false;
    }
  }
  return true;
}

inline GrowthConstants growth_constants(const WeightedGraph& g, const GrowthProfile& prof, double lambda = 0.0) {
  return {prof.c0, prof.m, static_cast<double>(prof.r0), g.mu0(), g.d_mu(), lambda};
}

/// Checks p(t,x,x) >= 1 / (4 V(x, ceil(C t log t))) with the kernel from the
/// exhaustion schedule. `volume_radius_limit` is the largest radius whose
/// ball in `g` equals the ball in the underlying (possibly infinite) graph.
///
/// Diagnostics recorded in the report: the ball mass, p(2t,x,x) via the
/// semigroup sum, the Cauchy-Schwarz lower bound (ball mass)^2 / V and the
/// certified tail.
inline BoundReport theorem32_lower_check(const WeightedGraph& g, const ExhaustionSchedule& sched, VertexId x,
                                         double t, double C, const GrowthProfile& profile,
                                         Distance volume_radius_limit = std::numeric_limits<Distance>::max(),
                                         double tol = kCertificateTolerance) {
  const auto gc = growth_constants(g, profile);
  const auto th = theorem32_thresholds(gc, C);
  if (t < th.T) {
    throw BelowThreshold("t=" + std::to_string(t) + " is below the threshold T=" + std::to_string(th.T) +
                             " (t1=" + std::to_string(th.t1) + ", t2=" + std::to_string(th.t2) + ")",
                         th);
  }
  const auto r = static_cast<Distance>(std::ceil(C * t * std::log(t)));
  if (r > volume_radius_limit) {
    throw PreconditionError("truncation too small: need V(x," + std::to_string(r) + ") but balls are exact only up to radius " +
                            std::to_string(volume_radius_limit));
  }
  const auto field = heat_kernel(g, sched, t, x);
  const auto b = ball(g, x, r);
  // The kernel support usually sits well inside B(x,r) here, so the tail is
  // taken as 1 - (ball mass) rather than through tail_mass.
  double inside = 0.0, p2t = 0.0;
  field.values.for_each([&](VertexId z, double p) {
    if (b.contains(z)) inside += g.measure(z) * p;
    p2t += g.measure(z) * p * p;
  });
  const double tail = std::max(0.0, 1.0 - inside);

  const double p_tt = field(x);
  auto rep = make_lower_report("thm32", "t=" + std::to_string(t) + ",x=" + g.label(x), p_tt, 1.0 / (4.0 * b.volume),
                               LambdaMode::zero, tol);
  rep.parameters = {{"D_mu", g.d_mu()},
                    {"Lambda", gc.lambda},
                    {"C", C},
                    {"c0", gc.c0},
                    {"m", gc.m},
                    {"r0", gc.r0},
                    {"mu0", gc.mu0},
                    {"K", annulus_K(gc)},
                    {"t1", th.t1},
                    {"t2", th.t2},
                    {"T", th.T},
                    {"r", static_cast<double>(r)},
                    {"V", b.volume},
                    {"ball_mass", inside},
                    {"tail", tail},
                    {"p_2t_semigroup", p2t},
                    {"cs_lower", inside * inside / b.volume},
                    {"kernel_error", field.truncation_error}};
  return rep;
}

}  // namespace heatk
