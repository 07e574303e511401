#include "qij/ij.hpp"

#include "qij/error.hpp"
#include "qij/stats.hpp"

#include <cmath>
#include <string>

namespace qij {

namespace {

using Eigen::Index;
using Eigen::MatrixXd;
using Eigen::VectorXd;

void require_draws(const PosteriorDraws& draws) {
  if (draws.size() < 2) throw InvalidArgument("need at least two posterior draws");
  if (draws.loglik.rows() != draws.beta.rows()) {
    throw DimensionMismatch("log-likelihood rows do not match coefficient draws");
  }
}

MatrixXd centered_beta(const PosteriorDraws& draws) {
  return draws.beta.rowwise() - draws.beta.colwise().mean();
}

// cov(beta, column) for one S-vector of log-likelihood values.
VectorXd cov_with(const MatrixXd& beta_c, const VectorXd& values) {
  const VectorXd centered = values.array() - values.mean();
  return beta_c.transpose() * centered / static_cast<double>(beta_c.rows() - 1);
}

InfluenceSet finish(MatrixXd influence, bool clustered) {
  InfluenceSet out;
  out.mean = influence.rowwise().mean();
  out.influence = std::move(influence);
  out.clustered = clustered;
  return out;
}

}  // namespace

CovarianceEstimate posterior_cov(const PosteriorDraws& draws) {
  if (draws.size() < 2) throw InvalidArgument("need at least two posterior draws");
  return CovarianceEstimate(empirical_covariance(draws.beta), CovarianceMethod::model_based,
                            draws.n());
}

InfluenceSet ij_influence(const PosteriorDraws& draws) {
  require_draws(draws);
  const MatrixXd beta_c = centered_beta(draws);
  const Index n = draws.loglik.cols();
  MatrixXd influence(beta_c.cols(), n);
  for (Index i = 0; i < n; ++i) {
    influence.col(i) = static_cast<double>(n) * cov_with(beta_c, draws.loglik.col(i));
  }
  return finish(std::move(influence), false);
}

InfluenceSet ij_influence(const PosteriorDraws& draws, std::span<const int> labels) {
  require_draws(draws);
  const Index n = draws.loglik.cols();
  if (static_cast<Index>(labels.size()) != n) {
    throw DimensionMismatch("cluster labels must have one entry per unit");
  }
  int max_label = -1;
  for (int l : labels) {
    if (l < 0) throw InvalidArgument("cluster labels must be non-negative");
    max_label = std::max(max_label, l);
  }
  const Index J = max_label + 1;
  std::vector<std::vector<Index>> members(static_cast<std::size_t>(J));
  for (Index i = 0; i < n; ++i) members[static_cast<std::size_t>(labels[static_cast<std::size_t>(i)])].push_back(i);
  for (const auto& m : members) {
    if (m.empty()) throw InvalidArgument("cluster labels must be dense");
  }

  const MatrixXd beta_c = centered_beta(draws);
  MatrixXd influence(beta_c.cols(), J);
  VectorXd cluster_loglik(draws.loglik.rows());
  for (Index j = 0; j < J; ++j) {
    cluster_loglik.setZero();
    for (Index i : members[static_cast<std::size_t>(j)]) cluster_loglik += draws.loglik.col(i);
    influence.col(j) = static_cast<double>(J) * cov_with(beta_c, cluster_loglik);
  }
  return finish(std::move(influence), true);
}

CovarianceEstimate ij_cov(const InfluenceSet& influences) {
  const Index K = influences.influence.cols();
  if (K < 2) throw InvalidArgument("IJ variance needs at least two influence vectors");
  const MatrixXd dev = influences.influence.colwise() - influences.mean;
  MatrixXd v = dev * dev.transpose() / (static_cast<double>(K) * static_cast<double>(K - 1));
  v = 0.5 * (v + v.transpose()).eval();
  return CovarianceEstimate(std::move(v),
                            influences.clustered ? CovarianceMethod::ij_clustered
                                                 : CovarianceMethod::ij,
                            static_cast<std::size_t>(K));
}

CovarianceEstimate yang_adjusted(const PosteriorDraws& draws, const RegressionData& data) {
  if (!draws.sigma_fixed || draws.sigma.size() == 0 ||
      (draws.sigma.array() != draws.sigma[0]).any()) {
    throw InvalidArgument("adjusted covariance requires draws with fixed sigma");
  }
  if (static_cast<std::size_t>(data.X.cols()) != draws.p()) {
    throw DimensionMismatch("design columns do not match coefficient draws");
  }
  const double sigma = draws.sigma[0];
  const MatrixXd sigma_hat = posterior_cov(draws).matrix();
  const MatrixXd gram = data.X.transpose() * data.X;
  MatrixXd adj = (draws.tau.variance_factor() / (sigma * sigma)) * sigma_hat * gram * sigma_hat;
  adj = 0.5 * (adj + adj.transpose()).eval();
  return CovarianceEstimate(std::move(adj), CovarianceMethod::yang, data.n());
}

IntervalSet intervals(const VectorXd& center, const CovarianceEstimate& cov, double level) {
  if (!(level > 0.0 && level < 1.0)) throw InvalidArgument("interval level must lie in (0, 1)");
  if (center.size() != cov.matrix().rows()) {
    throw DimensionMismatch("center length does not match covariance dimension");
  }
  const double z = normal_quantile(0.5 * (1.0 + level));
  const VectorXd se = cov.standard_errors();
  IntervalSet out{{}, level};
  for (Index k = 0; k < center.size(); ++k) {
    out.intervals.push_back({center[k], se[k], center[k] - z * se[k], center[k] + z * se[k]});
  }
  return out;
}

VectorXd posterior_mean(const PosteriorDraws& draws) {
  if (draws.size() < 1) throw InvalidArgument("no posterior draws");
  return draws.beta.colwise().mean().transpose();
}

VectorXd posterior_median(const PosteriorDraws& draws) {
  if (draws.size() < 1) throw InvalidArgument("no posterior draws");
  VectorXd out(draws.beta.cols());
  for (Index k = 0; k < draws.beta.cols(); ++k) {
    const VectorXd col = draws.beta.col(k);
    out[k] = median(std::span<const double>(col.data(), static_cast<std::size_t>(col.size())));
  }
  return out;
}

VectorXd skew_diagnostic(const PosteriorDraws& draws) {
  if (draws.size() < 2) throw InvalidArgument("need at least two posterior draws");
  return posterior_mean(draws) - posterior_median(draws);
}

}  // namespace qij
