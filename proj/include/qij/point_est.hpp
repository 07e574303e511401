#pragma once

#include "qij/ald.hpp"
#include "qij/data.hpp"
#include "qij/estimate.hpp"

#include <Eigen/Dense>

#include <cstdint>

namespace qij {

struct FitResult {
  Eigen::VectorXd beta_hat;
  /// Sum of check losses at beta_hat.
  double objective = 0.0;
  int neg_residual_count = 0;
  /// Residuals treated as exactly zero (interpolated points).
  int zero_residual_count = 0;
};

/// Minimizes sum_i rho_tau(y_i - x_i' beta). The returned point interpolates
/// p observations (a vertex of the piecewise-linear objective).
///
/// Throws RankDeficient when n < p or X lacks full column rank.
FitResult fit_check_loss(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, QuantileLevel tau);
FitResult fit_check_loss(const RegressionData& data, QuantileLevel tau);

/// Subgradient optimality certificate on the negative-residual count:
/// neg <= n tau <= neg + zero. With exactly p zero residuals this is
/// n tau - p <= neg <= n tau.
bool satisfies_certificate(const FitResult& fit, std::size_t n, QuantileLevel tau);

enum class BootstrapScheme { pair, cluster };

struct BootstrapOptions {
  int replicates = 200;
  BootstrapScheme scheme = BootstrapScheme::pair;
  std::uint64_t seed = 0;
  int threads = 1;
};

struct BootstrapReplicates {
  /// B x p matrix of refitted coefficients.
  Eigen::MatrixXd coefficients;
  /// Resamples rejected for a singular design and drawn again.
  int redraws = 0;
};

/// Refits the check-loss estimator on B resamples: n units with replacement
/// (pair) or J whole clusters with replacement (cluster). Replicate b uses
/// its own stream derived from (seed, b). Singular resamples are redrawn, at
/// most 10 B times in total.
BootstrapReplicates bootstrap_replicates(const RegressionData& data, QuantileLevel tau,
                                         const BootstrapOptions& options);

CovarianceEstimate bootstrap_cov(const RegressionData& data, QuantileLevel tau,
                                 const BootstrapOptions& options);

}  // namespace qij
