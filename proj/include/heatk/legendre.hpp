#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <span>
#include <string>

#include "heatk/errors.hpp"

namespace heatk {

// Scalar facts behind the distance-dependent upper bound.
//
// With f(s) = s^2 e^s / 2, the Legendre-type transform
//   fhat(gamma) = min_{s>0} { -s gamma + f(s) }
// turns the exponential-moment estimate into a decay rate in gamma = d/(D_mu t),
// and fhat(gamma) <= -(gamma/2) log(gamma / (2e)).

/// e^s + e^{-s} - 2, as 4 sinh^2(s/2) to keep precision for small s.
inline double cosh_gap(double s) {
  const double h = std::sinh(s / 2);
  return 4 * h * h;
}

/// f(v) = v + 1/v - 2 - v log^2 v at v = e^s. Nonpositive for s >= 0.
inline double chain_f(double s) { return cosh_gap(s) - s * s * std::exp(s); }

/// f1(v) = v^2 log^2 v + 2 v^2 log v - v^2 + 1 at v = e^s, with f'(v) = -f1(v)/v^2.
/// Nonnegative for s >= 0.
inline double chain_f1(double s) { return std::exp(2 * s) * (s * s + 2 * s) - std::expm1(2 * s); }

struct ScalarInequalityReport {
  std::size_t points = 0;
  std::size_t violations = 0;
  double min_margin = 0.0;     // min (s^2 e^s - cosh_gap(s)) / (s^2 e^s)
  double worst_s = 0.0;
  double max_f = 0.0;          // max chain_f, must stay <= 0
  double min_f1 = 0.0;         // min chain_f1, must stay >= 0
  double small_s_ratio = 0.0;  // cosh_gap / (s^2 e^s) at the smallest s
};

/// Checks e^s + e^{-s} - 2 <= s^2 e^s, f(e^s) <= 0 and f1(e^s) >= 0 on a grid in (0, 50].
inline ScalarInequalityReport scalar_inequality_check(std::span<const double> s_grid) {
  ScalarInequalityReport rep;
  rep.min_margin = std::numeric_limits<double>::infinity();
  rep.max_f = -std::numeric_limits<double>::infinity();
  rep.min_f1 = std::numeric_limits<double>::infinity();
  double smallest = std::numeric_limits<double>::infinity();
  for (const double s : s_grid) {
    if (!(s > 0.0) || s > 50.0) throw DomainError("scalar check grid must lie in (0, 50], got " + std::to_string(s));
    const double lhs = cosh_gap(s);
    const double rhs = s * s * std::exp(s);
    const double margin = (rhs - lhs) / rhs;
    const double f = chain_f(s);
    const double f1 = chain_f1(s);
    if (lhs > rhs || f > 0.0 || f1 < 0.0) ++rep.violations;
    if (margin < rep.min_margin) {
      rep.min_margin = margin;
      rep.worst_s = s;
    }
    rep.max_f = std::max(rep.max_f, f);
    rep.min_f1 = std::min(rep.min_f1, f1);
    if (s < smallest) {
      smallest = s;
      rep.small_s_ratio = lhs / rhs;
    }
    ++rep.points;
  }
  return rep;
}

struct LegendreMinimum {
  double value;   // fhat(gamma) = g(s*)
  double argmin;  // s*
};

/// fhat(gamma) = min_{s>0} { -s gamma + s^2 e^s / 2 }.
///
/// g'(s) = -gamma + (s^2/2 + s) e^s increases from -gamma to +inf, so s* is
/// its unique root; it is bracketed in [0, min(gamma, max(1, log gamma + 1))]
/// and located by bisection to 1e-12.
inline LegendreMinimum legendre_fhat(double gamma) {
  if (!(gamma > 0.0) || !std::isfinite(gamma)) throw DomainError("legendre_fhat needs gamma > 0, got " + std::to_string(gamma));
  auto slope = [gamma](double s) { return -gamma + (s * s / 2 + s) * std::exp(s); };
  double lo = 0.0;
  double hi = std::min(gamma, std::max(1.0, std::log(gamma) + 1.0));
  while (hi - lo > 1e-12) {
    const double mid = lo + (hi - lo) / 2;
    if (mid <= lo || mid >= hi) break;
    (slope(mid) < 0.0 ? lo : hi) = mid;
  }
  const double s = lo + (hi - lo) / 2;
  return {-s * gamma + s * s * std::exp(s) / 2, s};
}

/// -(gamma/2) log(gamma / (2e)), the closed-form majorant of fhat.
inline double folz_majorant(double gamma) {
  if (!(gamma > 0.0)) throw DomainError("folz_majorant needs gamma > 0, got " + std::to_string(gamma));
  return -(gamma / 2) * (std::log(gamma) - std::numbers::ln2 - 1.0);
}

}  // namespace heatk
