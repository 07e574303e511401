#include "qij/gibbs.hpp"

#include "qij/error.hpp"
#include "qij/format.hpp"
#include "qij/parallel.hpp"
#include "qij/point_est.hpp"
#include "qij/random.hpp"

#include <cmath>
#include <limits>
#include <ostream>
#include <string>

namespace qij {

namespace {

using Eigen::Index;
using Eigen::MatrixXd;
using Eigen::VectorXd;

constexpr double kFlatPriorVariance = 1e6;
constexpr double kNuFloor = 1e-12;

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

struct ChainResult {
  MatrixXd beta;
  VectorXd sigma;
};

class ChainSampler {
 public:
  ChainSampler(const RegressionData& data, QuantileLevel tau, const PriorConfig& prior,
               std::uint64_t seed)
      : data_(data), tau_(tau), prior_(prior), rng_(seed),
        mix_(mixture_constants(tau)),
        // GIG(1/2, a, b) conditional of nu_i: a = theta1^2 / theta2^2 + 2.
        gig_a_(mix_.theta1 * mix_.theta1 / (mix_.theta2 * mix_.theta2) + 2.0),
        nu_(VectorXd::Ones(data.X.rows())) {
    const Index p = data.X.cols();
    std::visit(overloaded{
                   [&](const FlatPrior&) {
                     prior_precision_ = MatrixXd::Identity(p, p) / kFlatPriorVariance;
                     prior_shift_ = VectorXd::Zero(p);
                   },
                   [&](const NormalPrior& np) {
                     prior_precision_ = np.covariance.llt().solve(MatrixXd::Identity(p, p));
                     prior_shift_ = prior_precision_ * np.mean;
                   }},
               prior.beta);
  }

  ChainResult run(VectorXd beta, double sigma, int warmup, int draws) {
    const Index p = data_.X.cols();
    ChainResult out{MatrixXd(draws, p), VectorXd(draws)};
    for (int it = 0; it < warmup + draws; ++it) {
      sigma = draw_sigma(beta, sigma);
      draw_latent(beta, sigma);
      beta = draw_beta(sigma);
      if (it >= warmup) {
        out.beta.row(it - warmup) = beta.transpose();
        out.sigma[it - warmup] = sigma;
      }
    }
    return out;
  }

 private:
  double draw_sigma(const VectorXd& beta, double current) {
    return std::visit(
        overloaded{
            [&](const FixedSigma& f) { return f.value; },
            [&](const InverseGammaSigma& ig) {
              // Integrating out nu: sigma | beta ~ IG(shape + n, rate + sum rho).
              const double loss = check_loss_sum(data_.X, data_.y, beta, tau_);
              const double shape = ig.shape + static_cast<double>(data_.X.rows());
              std::gamma_distribution<double> gamma(shape, 1.0 / (ig.rate + loss));
              return 1.0 / gamma(rng_);
            },
            [&](const HalfT3Sigma& ht) {
              const double loss = check_loss_sum(data_.X, data_.y, beta, tau_);
              return slice_log_sigma(current, loss, ht.scale);
            }},
        prior_.sigma);
  }

  // Univariate slice sampler (stepping out, shrinkage) on eta = log sigma for
  // the target  sigma^-n exp(-loss / sigma) * half-t3(sigma) * sigma.
  double slice_log_sigma(double sigma, double loss, double scale) {
    const double n = static_cast<double>(data_.X.rows());
    auto log_target = [&](double eta) {
      const double s = std::exp(eta);
      const double u = s / scale;
      return -n * eta - loss / s - 2.0 * std::log1p(u * u / 3.0) + eta;
    };
    std::uniform_real_distribution<double> unif;
    std::exponential_distribution<double> expo(1.0);
    const double eta0 = std::log(sigma);
    const double level = log_target(eta0) - expo(rng_);
    constexpr double width = 1.0;
    double left = eta0 - width * unif(rng_);
    double right = left + width;
    for (int k = 0; k < 100 && log_target(left) > level; ++k) left -= width;
    for (int k = 0; k < 100 && log_target(right) > level; ++k) right += width;
    for (int k = 0; k < 1000; ++k) {
      const double eta = left + (right - left) * unif(rng_);
      if (log_target(eta) > level) return std::exp(eta);
      if (eta < eta0) {
        left = eta;
      } else {
        right = eta;
      }
    }
    return sigma;
  }

  // nu_i | beta, sigma is GIG(1/2, a, b_i) with b_i = r_i^2 / (sigma theta2)^2;
  // its reciprocal is inverse Gaussian with mean sqrt(a / b_i) and shape a.
  void draw_latent(const VectorXd& beta, double sigma) {
    const VectorXd r = data_.y - data_.X * beta;
    const double denom = sigma * mix_.theta2;
    std::gamma_distribution<double> gamma_half(0.5, 2.0 / gig_a_);
    for (Index i = 0; i < r.size(); ++i) {
      const double b = (r[i] / denom) * (r[i] / denom);
      double nu = 0.0;
      if (b < 1e-200) {
        nu = gamma_half(rng_);
      } else {
        nu = 1.0 / sample_inverse_gaussian(rng_, std::sqrt(gig_a_ / b), gig_a_);
      }
      nu_[i] = std::max(nu, kNuFloor);
    }
  }

  // beta | nu, sigma: y_i - sigma theta1 nu_i ~ N(x_i' beta, (sigma theta2)^2 nu_i).
  VectorXd draw_beta(double sigma) {
    const double var_scale = sigma * sigma * mix_.theta2 * mix_.theta2;
    const VectorXd w = (var_scale * nu_).cwiseInverse();
    const VectorXd z = data_.y - (sigma * mix_.theta1) * nu_;
    const MatrixXd precision = prior_precision_ + data_.X.transpose() * w.asDiagonal() * data_.X;
    const VectorXd rhs = prior_shift_ + data_.X.transpose() * w.cwiseProduct(z);
    Eigen::LLT<MatrixXd> llt(precision);
    if (llt.info() != Eigen::Success) {
      throw RankDeficient("beta conditional precision is not positive definite");
    }
    const VectorXd mean = llt.solve(rhs);
    VectorXd xi(mean.size());
    for (Index k = 0; k < xi.size(); ++k) xi[k] = normal_(rng_);
    return mean + llt.matrixU().solve(xi);
  }

  const RegressionData& data_;
  QuantileLevel tau_;
  const PriorConfig& prior_;
  Rng rng_;
  std::normal_distribution<double> normal_;
  MixtureConstants mix_;
  double gig_a_;
  VectorXd nu_;
  MatrixXd prior_precision_;
  VectorXd prior_shift_;
};

}  // namespace

void validate(const PriorConfig& prior, std::size_t p) {
  std::visit(overloaded{[](const FlatPrior&) {},
                        [&](const NormalPrior& np) {
                          if (static_cast<std::size_t>(np.mean.size()) != p ||
                              static_cast<std::size_t>(np.covariance.rows()) != p ||
                              static_cast<std::size_t>(np.covariance.cols()) != p) {
                            throw DimensionMismatch("normal prior dimension does not match design");
                          }
                          if (np.covariance.llt().info() != Eigen::Success) {
                            throw InvalidArgument("normal prior covariance must be positive definite");
                          }
                        }},
             prior.beta);
  std::visit(overloaded{[](const FixedSigma& f) {
                          if (!(f.value > 0.0) || !std::isfinite(f.value)) {
                            throw InvalidArgument("fixed sigma must be positive");
                          }
                        },
                        [](const HalfT3Sigma& h) {
                          if (!(h.scale > 0.0)) throw InvalidArgument("half-t scale must be positive");
                        },
                        [](const InverseGammaSigma& ig) {
                          if (!(ig.shape > 0.0) || !(ig.rate > 0.0)) {
                            throw InvalidArgument("inverse-gamma shape and rate must be positive");
                          }
                        }},
             prior.sigma);
}

PosteriorDraws run_sampler(const RegressionData& data, QuantileLevel tau, const PriorConfig& prior,
                           const SamplerSettings& settings) {
  validate(data);
  validate(prior, data.p());
  if (settings.chains < 1) throw InvalidArgument("need at least one chain");
  if (settings.warmup < 100) throw InvalidArgument("warmup must be at least 100");
  if (settings.draws_per_chain < 100) throw InvalidArgument("draws per chain must be at least 100");

  // Also rejects rank-deficient designs.
  const FitResult start = fit_check_loss(data, tau);
  const bool fixed = std::holds_alternative<FixedSigma>(prior.sigma);
  double sigma0 = fixed ? std::get<FixedSigma>(prior.sigma).value
                        : start.objective / static_cast<double>(data.n());
  if (!(sigma0 > 0.0)) sigma0 = 1.0;

  const auto chains = static_cast<std::size_t>(settings.chains);
  const Index per_chain = settings.draws_per_chain;
  const Index S = static_cast<Index>(chains) * per_chain;

  PosteriorDraws out;
  out.beta.resize(S, data.X.cols());
  out.sigma.resize(S);
  out.loglik.resize(S, data.X.rows());
  out.chains = settings.chains;
  out.warmup = settings.warmup;
  out.draws_per_chain = settings.draws_per_chain;
  out.seed = settings.seed;
  out.tau = tau;
  out.sigma_fixed = fixed;

  parallel_for(chains, settings.threads, [&](std::size_t c) {
    ChainSampler sampler(data, tau, prior, derive_seed(settings.seed, {key(Stream::chain), c}));
    ChainResult res = sampler.run(start.beta_hat, sigma0, settings.warmup, settings.draws_per_chain);
    const Index offset = static_cast<Index>(c) * per_chain;
    out.beta.middleRows(offset, per_chain) = res.beta;
    out.sigma.segment(offset, per_chain) = res.sigma;
    for (Index s = 0; s < per_chain; ++s) {
      const ALParameters params(res.beta.row(s).transpose(), res.sigma[s], tau);
      out.loglik.row(offset + s) = loglik_contributions(data, params).transpose();
    }
  });
  return out;
}

void write_draws(std::ostream& out, const PosteriorDraws& draws,
                 const std::vector<std::string>& names) {
  if (names.size() != draws.p()) throw DimensionMismatch("one name per coefficient required");
  out << "chain,iteration";
  for (const auto& name : names) out << ',' << name;
  out << ",sigma\n";
  for (Index s = 0; s < static_cast<Index>(draws.size()); ++s) {
    const Index chain = s / draws.draws_per_chain;
    const Index iteration = draws.warmup + s % draws.draws_per_chain + 1;
    out << chain << ',' << iteration;
    for (Index k = 0; k < draws.beta.cols(); ++k) out << ',' << format_double(draws.beta(s, k));
    out << ',' << format_double(draws.sigma[s]) << '\n';
  }
}

}  // namespace qij
