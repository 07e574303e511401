#pragma once

#include "qij/data.hpp"

#include <Eigen/Dense>

namespace qij {

/// Quantile level tau, restricted to the open interval (0, 1).
class QuantileLevel {
 public:
  explicit QuantileLevel(double tau);

  double value() const noexcept { return tau_; }
  double variance_factor() const noexcept { return tau_ * (1.0 - tau_); }

  friend bool operator==(QuantileLevel, QuantileLevel) = default;

 private:
  double tau_;
};

/// Location coefficients, scale and quantile level of an asymmetric Laplace
/// working likelihood.
struct ALParameters {
  ALParameters(Eigen::VectorXd beta, double sigma, QuantileLevel tau);

  Eigen::VectorXd beta;
  double sigma;
  QuantileLevel tau;
};

/// Constants of the normal scale-mixture representation
///   y - mu = sigma * (theta1 * nu + theta2 * z * sqrt(nu)),
/// with nu ~ Exp(1) and z ~ N(0, 1).
struct MixtureConstants {
  double theta1;
  double theta2;
};

/// rho_tau(u) = u * (tau - 1{u < 0}).
double check_loss(double u, QuantileLevel tau);

/// Sum of check losses of the residuals y - X beta.
double check_loss_sum(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                      const Eigen::VectorXd& beta, QuantileLevel tau);

/// log f(y | mu, sigma, tau) = log(tau (1 - tau) / sigma) - rho_tau((y - mu) / sigma).
double al_log_density(double y, double mu, double sigma, QuantileLevel tau);
double al_log_density(double y, double mu, const ALParameters& params);

/// Per-unit log-likelihood contributions l_i = log f(y_i | x_i' beta, sigma, tau).
Eigen::VectorXd loglik_contributions(const RegressionData& data, const ALParameters& params);

double al_log_likelihood(const RegressionData& data, const ALParameters& params);

MixtureConstants mixture_constants(QuantileLevel tau);

}  // namespace qij
