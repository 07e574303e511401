#pragma once

#include "qij/ald.hpp"
#include "qij/data.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <variant>
#include <vector>

namespace qij {

/// Improper flat prior on beta. Sampled as N(0, 1e6 I).
struct FlatPrior {};

struct NormalPrior {
  Eigen::VectorXd mean;
  Eigen::MatrixXd covariance;
};

using BetaPrior = std::variant<FlatPrior, NormalPrior>;

struct FixedSigma {
  double value = 1.0;
};

/// Half Student-t prior with 3 degrees of freedom and the given scale.
struct HalfT3Sigma {
  double scale = 2.5;
};

struct InverseGammaSigma {
  double shape = 0.01;
  double rate = 0.01;
};

using SigmaMode = std::variant<FixedSigma, HalfT3Sigma, InverseGammaSigma>;

struct PriorConfig {
  BetaPrior beta = FlatPrior{};
  SigmaMode sigma = FixedSigma{};
};

/// Throws InvalidArgument for non-positive scales, shapes or rates.
void validate(const PriorConfig& prior, std::size_t p);

struct SamplerSettings {
  int chains = 4;
  int warmup = 1000;
  int draws_per_chain = 1000;
  std::uint64_t seed = 0;
  /// Worker cap for running chains concurrently; output does not depend on it.
  int threads = 1;
};

/// Retained posterior draws, chain-major: rows [c * draws_per_chain,
/// (c + 1) * draws_per_chain) belong to chain c.
struct PosteriorDraws {
  /// S x p coefficient draws.
  Eigen::MatrixXd beta;
  /// Per-draw scale, constant when sigma was fixed.
  Eigen::VectorXd sigma;
  /// S x n per-unit log-likelihood contributions at each draw.
  Eigen::MatrixXd loglik;

  int chains = 0;
  int warmup = 0;
  int draws_per_chain = 0;
  std::uint64_t seed = 0;
  QuantileLevel tau{0.5};
  bool sigma_fixed = true;

  std::size_t size() const noexcept { return static_cast<std::size_t>(beta.rows()); }
  std::size_t p() const noexcept { return static_cast<std::size_t>(beta.cols()); }
  std::size_t n() const noexcept { return static_cast<std::size_t>(loglik.cols()); }
};

/// Data-augmentation Gibbs sampler for the AL working-likelihood posterior.
///
/// Each sweep draws sigma | beta (skipped when fixed), then the latent
/// mixing variables nu_i | beta, sigma from their generalized inverse
/// Gaussian conditionals, then beta | nu, sigma from its multivariate normal
/// conditional. Chain c uses the stream derive_seed(seed, {chain, c}).
PosteriorDraws run_sampler(const RegressionData& data, QuantileLevel tau, const PriorConfig& prior,
                           const SamplerSettings& settings);

struct ChainDiagnostics {
  /// Split potential scale reduction per parameter; absent for one chain.
  std::optional<Eigen::VectorXd> rhat;
  /// Effective sample size per parameter.
  Eigen::VectorXd ess;
};

/// `chains[c]` is a draws x parameters matrix; all chains must share shape.
ChainDiagnostics diagnostics(const std::vector<Eigen::MatrixXd>& chains);
/// Diagnostics for the coefficient draws.
ChainDiagnostics diagnostics(const PosteriorDraws& draws);

/// Columnar text dump: header `chain,iteration,<names...>,sigma`, one row
/// per retained draw.
void write_draws(std::ostream& out, const PosteriorDraws& draws,
                 const std::vector<std::string>& names);

}  // namespace qij
