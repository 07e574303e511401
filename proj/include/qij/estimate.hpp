#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <string_view>

namespace qij {

enum class CovarianceMethod { model_based, ij, ij_clustered, yang, bootstrap };

std::string_view to_string(CovarianceMethod method);

/// Symmetric positive semidefinite p x p covariance of a coefficient
/// estimator, tagged with how it was obtained. `n_units` is n, or J for
/// cluster-level estimates.
class CovarianceEstimate {
 public:
  /// Symmetrizes `matrix` and rejects estimates that are not PSD within
  /// eigenvalue tolerance -1e-10 * trace.
  CovarianceEstimate(Eigen::MatrixXd matrix, CovarianceMethod method, std::size_t n_units);

  const Eigen::MatrixXd& matrix() const noexcept { return matrix_; }
  CovarianceMethod method() const noexcept { return method_; }
  std::size_t n_units() const noexcept { return n_units_; }
  Eigen::VectorXd standard_errors() const;

 private:
  Eigen::MatrixXd matrix_;
  CovarianceMethod method_;
  std::size_t n_units_;
};

/// Empirical covariance of the rows of `draws` (denominator rows - 1).
Eigen::MatrixXd empirical_covariance(const Eigen::MatrixXd& draws);

}  // namespace qij
