#pragma once

#include <cmath>
#include <vector>

#include <Eigen/Dense>

#include "heatk/errors.hpp"
#include "heatk/heat_kernel.hpp"

namespace heatk {

inline constexpr std::size_t kDenseOracleLimit = 2000;

/// Spectral decomposition of -Delta_U, symmetrised by M^{1/2} (.) M^{-1/2}
/// with M = diag(mu). Columns of `eigenfunctions` are mu-orthonormal.
class DenseSpectrum {
 public:
  explicit DenseSpectrum(const DirichletDomain& dom) {
    const std::size_t n = dom.size();
    if (n > kDenseOracleLimit) {
      throw DomainError("dense oracle limited to " + std::to_string(kDenseOracleLimit) + " vertices, got " +
                        std::to_string(n));
    }
    Eigen::MatrixXd s = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
    for (std::size_t i = 0; i < n; ++i) {
      const auto ii = static_cast<Eigen::Index>(i);
      s(ii, ii) = dom.rate(i);
      for (const auto& nb : dom.interior_neighbors(i)) {
        s(ii, static_cast<Eigen::Index>(nb.local)) = -nb.weight / std::sqrt(dom.measure(i) * dom.measure(nb.local));
      }
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(s);
    if (solver.info() != Eigen::Success) throw ConvergenceError("dense eigendecomposition failed");
    eigenvalues_ = solver.eigenvalues();
    eigenfunctions_ = solver.eigenvectors();
    for (std::size_t i = 0; i < n; ++i) {
      eigenfunctions_.row(static_cast<Eigen::Index>(i)) /= std::sqrt(dom.measure(i));
    }
  }

  const Eigen::VectorXd& eigenvalues() const noexcept { return eigenvalues_; }
  const Eigen::MatrixXd& eigenfunctions() const noexcept { return eigenfunctions_; }
  double smallest() const { return eigenvalues_(0); }

  /// Full kernel matrix in local coordinates: sum_j e^{-lambda_j t} phi_j phi_j^T.
  Eigen::MatrixXd kernel(double t) const {
    detail::require_positive_time(t);
    const Eigen::VectorXd decay = (-t * eigenvalues_.array()).exp();
    return eigenfunctions_ * decay.asDiagonal() * eigenfunctions_.transpose();
  }

 private:
  Eigen::VectorXd eigenvalues_;
  Eigen::MatrixXd eigenfunctions_;
};

/// p(t, x, y) for all pairs of a finite graph (or Dirichlet domain), indexed
/// by local vertex position.
inline Eigen::MatrixXd dense_kernel_oracle(const DirichletDomain& dom, double t) { return DenseSpectrum(dom).kernel(t); }

inline Eigen::MatrixXd dense_kernel_oracle(const WeightedGraph& g, double t) {
  return dense_kernel_oracle(DirichletDomain::whole(g), t);
}

}  // namespace heatk
