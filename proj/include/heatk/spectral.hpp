#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "heatk/errors.hpp"
#include "heatk/graph.hpp"
#include "heatk/heat_kernel.hpp"

namespace heatk {

/// Bottom of the l^2(mu) spectrum of -Delta_U with a Rayleigh-quotient witness.
struct SpectralBottom {
  double lambda = 0.0;
  VertexFunction witness;  // approximate ground state, mu-normalised
  double residual = 0.0;   // ||(-Delta_U - lambda) witness||_mu
  std::size_t iterations = 0;
  std::string domain_tag;
};

/// Best iterate of a run that hit the iteration cap.
class SpectralNotConverged : public ConvergenceError {
 public:
  SpectralNotConverged(const std::string& what, SpectralBottom best)
      : ConvergenceError(what), best_(std::move(best)) {}
  const SpectralBottom& best() const noexcept { return best_; }

 private:
  SpectralBottom best_;
};

/// <-Delta_U f, f>_mu / <f, f>_mu for f in local coordinates.
inline double rayleigh_quotient(const DirichletDomain& dom, std::span<const double> f) {
  const auto lap = dom.apply_generator(f);
  double num = 0.0, den = 0.0;
  for (std::size_t i = 0; i < dom.size(); ++i) {
    num -= dom.measure(i) * lap[i] * f[i];
    den += dom.measure(i) * f[i] * f[i];
  }
  if (den == 0.0) throw DomainError("Rayleigh quotient of the zero function");
  return num / den;
}

namespace detail {

inline SpectralBottom make_bottom(const DirichletDomain& dom, std::span<const double> v, double lambda,
                                  double residual, std::size_t iterations) {
  std::vector<double> f(dom.size());
  for (std::size_t i = 0; i < dom.size(); ++i) f[i] = v[i] / std::sqrt(dom.measure(i));
  std::vector<VertexId> support(dom.vertices().begin(), dom.vertices().end());
  // Round-off can leave -1e-17 for a harmonic ground state.
  if (lambda < 0.0 && lambda > -1e-12) lambda = 0.0;
  return {lambda, VertexFunction::sparse(std::move(support), std::move(f)), residual, iterations, dom.tag()};
}

}  // namespace detail

/// Smallest eigenvalue of -Delta_U by power iteration on
/// Q = I - S / (2 lambda_unif), S = M^{1/2} (-Delta_U) M^{-1/2}.
///
/// Q is symmetric with spectrum in [0, 1], so its top eigenvector is the
/// ground state of S. Iterates start from sqrt(mu), which is the exact ground
/// state when U has no killing, and stop once the residual of the Rayleigh
/// pair is at most `tol`.
inline SpectralBottom lambda_bottom(const DirichletDomain& dom, double tol = 1e-10,
                                    std::size_t max_iterations = 2'000'000) {
  if (!(tol > 0.0)) throw DomainError("tolerance must be positive");
  const std::size_t n = dom.size();
  const double lam = dom.lambda_unif();
  std::vector<double> v(n);
  double norm = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    v[i] = std::sqrt(dom.measure(i));
    norm += v[i] * v[i];
  }
  norm = std::sqrt(norm);
  for (auto& e : v) e /= norm;
  if (lam == 0.0) return detail::make_bottom(dom, v, 0.0, 0.0, 0);

  std::vector<double> sq(n);
  for (std::size_t i = 0; i < n; ++i) sq[i] = std::sqrt(dom.measure(i));
  std::vector<double> sv(n);
  auto apply_s = [&](const std::vector<double>& in) {
    for (std::size_t i = 0; i < n; ++i) {
      double acc = dom.rate(i) * in[i];
      for (const auto& nb : dom.interior_neighbors(i)) acc -= nb.weight / (sq[i] * sq[nb.local]) * in[nb.local];
      sv[i] = acc;
    }
  };

  double best_residual = std::numeric_limits<double>::infinity();
  double best_lambda = 0.0;
  std::vector<double> best = v;
  for (std::size_t it = 1; it <= max_iterations; ++it) {
    apply_s(v);
    double rq = 0.0;
    for (std::size_t i = 0; i < n; ++i) rq += v[i] * sv[i];
    double res = 0.0;
    for (std::size_t i = 0; i < n; ++i) res += (sv[i] - rq * v[i]) * (sv[i] - rq * v[i]);
    res = std::sqrt(res);
    if (res < best_residual) {
      best_residual = res;
      best_lambda = rq;
      best = v;
    }
    if (res <= tol) return detail::make_bottom(dom, v, rq, res, it);
    // v <- Q v / |Q v|
    norm = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      v[i] -= sv[i] / (2.0 * lam);
      norm += v[i] * v[i];
    }
    norm = std::sqrt(norm);
    for (auto& e : v) e /= norm;
  }
  throw SpectralNotConverged("power iteration did not reach residual " + std::to_string(tol) + " on " + dom.tag(),
                             detail::make_bottom(dom, best, best_lambda, best_residual, max_iterations));
}

inline SpectralBottom lambda_bottom(const WeightedGraph& g, double tol = 1e-10) {
  return lambda_bottom(DirichletDomain::whole(g), tol);
}

struct DomainMonotonicityReport {
  std::vector<SpectralBottom> bottoms;
  double max_violation = 0.0;  // max(0, Lambda(U') - Lambda(U)) over U subset U'
  bool passed = true;
};

/// Lambda(U) >= Lambda(U') - tol along a nested chain U_0 subset U_1 subset ...
inline DomainMonotonicityReport domain_monotonicity_check(const std::vector<const DirichletDomain*>& chain,
                                                          double tol = 1e-8) {
  DomainMonotonicityReport rep;
  for (std::size_t k = 0; k < chain.size(); ++k) {
    if (k > 0) {
      for (VertexId v : chain[k - 1]->vertices()) {
        if (!chain[k]->contains(v)) throw DomainError("domains are not nested: " + chain[k - 1]->tag() + " vs " + chain[k]->tag());
      }
    }
    rep.bottoms.push_back(lambda_bottom(*chain[k], tol * 1e-2));
    if (k > 0) {
      const double v = rep.bottoms[k].lambda - rep.bottoms[k - 1].lambda;
      rep.max_violation = std::max(rep.max_violation, v);
    }
  }
  rep.passed = rep.max_violation <= tol;
  return rep;
}

}  // namespace heatk
