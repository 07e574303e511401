#pragma once

#include "qij/data.hpp"
#include "qij/estimate.hpp"
#include "qij/gibbs.hpp"

#include <Eigen/Dense>

#include <span>
#include <vector>

namespace qij {

/// Empirical influence of each unit (or cluster) on the posterior mean.
///
/// Unit mode: I_i = n * cov(beta, l_i). Cluster mode: I_j = J * cov(beta, l_j)
/// with l_j the sum of l_i over the members of cluster j, which equals
/// (J / n) * sum_{i in j} I_i.
struct InfluenceSet {
  /// p x count, one column per unit or cluster.
  Eigen::MatrixXd influence;
  Eigen::VectorXd mean;
  bool clustered = false;

  std::size_t count() const noexcept { return static_cast<std::size_t>(influence.cols()); }
};

/// Posterior covariance of the coefficient draws (denominator S - 1).
CovarianceEstimate posterior_cov(const PosteriorDraws& draws);

InfluenceSet ij_influence(const PosteriorDraws& draws);
/// Cluster mode; `labels` are dense cluster ids, one per unit.
InfluenceSet ij_influence(const PosteriorDraws& draws, std::span<const int> labels);

/// V = 1 / (K (K - 1)) * sum_k (I_k - Ibar)(I_k - Ibar)' over the K
/// influences of the set.
CovarianceEstimate ij_cov(const InfluenceSet& influences);

/// Sandwich rescaling of a fixed-sigma posterior covariance:
///   tau (1 - tau) / sigma^2 * Sigma * (sum_i x_i x_i') * Sigma.
/// Rejects draws with estimated sigma.
CovarianceEstimate yang_adjusted(const PosteriorDraws& draws, const RegressionData& data);

struct Interval {
  double center;
  double se;
  double lower;
  double upper;
};

struct IntervalSet {
  std::vector<Interval> intervals;
  double level;
};

/// Normal-approximation intervals center +- z se, z = Phi^-1((1 + level) / 2).
IntervalSet intervals(const Eigen::VectorXd& center, const CovarianceEstimate& cov, double level);

Eigen::VectorXd posterior_mean(const PosteriorDraws& draws);
Eigen::VectorXd posterior_median(const PosteriorDraws& draws);

/// Per-coefficient posterior mean minus posterior median.
Eigen::VectorXd skew_diagnostic(const PosteriorDraws& draws);

}  // namespace qij
