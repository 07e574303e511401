#include "qij/ald.hpp"

#include "qij/error.hpp"

#include <cmath>
#include <string>

namespace qij {

QuantileLevel::QuantileLevel(double tau) : tau_(tau) {
  if (!(tau > 0.0 && tau < 1.0)) {
    throw InvalidArgument("quantile level must lie in (0, 1), got " + std::to_string(tau));
  }
}

ALParameters::ALParameters(Eigen::VectorXd b, double s, QuantileLevel t)
    : beta(std::move(b)), sigma(s), tau(t) {
  if (beta.size() < 1) throw InvalidArgument("coefficient vector must be non-empty");
  if (!(sigma > 0.0) || !std::isfinite(sigma)) {
    throw InvalidArgument("AL scale must be positive and finite");
  }
}

double check_loss(double u, QuantileLevel tau) {
  if (!std::isfinite(u)) throw InvalidArgument("check_loss: non-finite residual");
  // u == 0 takes the first branch; both give zero.
  return u >= 0.0 ? u * tau.value() : -u * (1.0 - tau.value());
}

double check_loss_sum(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                      const Eigen::VectorXd& beta, QuantileLevel tau) {
  const Eigen::VectorXd r = y - X * beta;
  double total = 0.0;
  for (Eigen::Index i = 0; i < r.size(); ++i) total += check_loss(r[i], tau);
  return total;
}

double al_log_density(double y, double mu, double sigma, QuantileLevel tau) {
  if (!(sigma > 0.0)) throw InvalidArgument("al_log_density: sigma must be positive");
  return std::log(tau.variance_factor() / sigma) - check_loss((y - mu) / sigma, tau);
}

double al_log_density(double y, double mu, const ALParameters& params) {
  return al_log_density(y, mu, params.sigma, params.tau);
}

Eigen::VectorXd loglik_contributions(const RegressionData& data, const ALParameters& params) {
  if (data.X.cols() != params.beta.size()) {
    throw DimensionMismatch("design has " + std::to_string(data.X.cols()) +
                            " columns but beta has length " +
                            std::to_string(params.beta.size()));
  }
  if (data.X.rows() != data.y.size()) {
    throw DimensionMismatch("design rows do not match response length");
  }
  const Eigen::VectorXd mu = data.X * params.beta;
  const double log_norm = std::log(params.tau.variance_factor() / params.sigma);
  Eigen::VectorXd out(mu.size());
  for (Eigen::Index i = 0; i < mu.size(); ++i) {
    out[i] = log_norm - check_loss((data.y[i] - mu[i]) / params.sigma, params.tau);
  }
  return out;
}

double al_log_likelihood(const RegressionData& data, const ALParameters& params) {
  return loglik_contributions(data, params).sum();
}

MixtureConstants mixture_constants(QuantileLevel tau) {
  const double v = tau.variance_factor();
  return {(1.0 - 2.0 * tau.value()) / v, std::sqrt(2.0 / v)};
}

}  // namespace qij
