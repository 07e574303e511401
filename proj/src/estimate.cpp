#include "qij/estimate.hpp"

#include "qij/error.hpp"

#include <cmath>
#include <string>

namespace qij {

std::string_view to_string(CovarianceMethod method) {
  switch (method) {
    case CovarianceMethod::model_based: return "model_based";
    case CovarianceMethod::ij: return "ij";
    case CovarianceMethod::ij_clustered: return "ij_clustered";
    case CovarianceMethod::yang: return "yang";
    case CovarianceMethod::bootstrap: return "bootstrap";
  }
  return "unknown";
}

CovarianceEstimate::CovarianceEstimate(Eigen::MatrixXd matrix, CovarianceMethod method,
                                       std::size_t n_units)
    : matrix_(std::move(matrix)), method_(method), n_units_(n_units) {
  if (matrix_.rows() != matrix_.cols() || matrix_.rows() == 0) {
    throw DimensionMismatch("covariance matrix must be square and non-empty");
  }
  if (!matrix_.allFinite()) throw NotPositiveSemidefinite("covariance contains non-finite entries");

  const double scale = std::max(1.0, matrix_.cwiseAbs().maxCoeff());
  const double asym = (matrix_ - matrix_.transpose()).cwiseAbs().maxCoeff();
  if (asym > 1e-12 * scale) {
    throw NotPositiveSemidefinite("covariance is not symmetric (max asymmetry " +
                                  std::to_string(asym) + ")");
  }
  matrix_ = 0.5 * (matrix_ + matrix_.transpose()).eval();

  const double trace = matrix_.trace();
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(matrix_, Eigen::EigenvaluesOnly);
  const double min_eig = eig.eigenvalues().minCoeff();
  if (min_eig < -1e-10 * std::abs(trace) || trace < 0.0) {
    throw NotPositiveSemidefinite("covariance has negative eigenvalue " + std::to_string(min_eig));
  }
}

Eigen::VectorXd CovarianceEstimate::standard_errors() const {
  return matrix_.diagonal().cwiseMax(0.0).cwiseSqrt();
}

Eigen::MatrixXd empirical_covariance(const Eigen::MatrixXd& draws) {
  if (draws.rows() < 2) throw InvalidArgument("empirical covariance needs at least two rows");
  const Eigen::RowVectorXd mu = draws.colwise().mean();
  const Eigen::MatrixXd centered = draws.rowwise() - mu;
  Eigen::MatrixXd cov = centered.transpose() * centered / static_cast<double>(draws.rows() - 1);
  return 0.5 * (cov + cov.transpose());
}

}  // namespace qij
