#include "oracles.hpp"
#include "qij/cli.hpp"
#include "qij/error.hpp"
#include "qij/gibbs.hpp"
#include "qij/ij.hpp"
#include "qij/point_est.hpp"
#include "qij/random.hpp"
#include "qij/simlab.hpp"

#include <doctest.h>

#include <cmath>
#include <functional>
#include <random>
#include <sstream>

using namespace qij;

namespace {

RegressionData al_data(int n, double tau, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> z;
  std::exponential_distribution<double> expo(1.0);
  const double t1 = (1 - 2 * tau) / (tau * (1 - tau));
  const double t2 = std::sqrt(2 / (tau * (1 - tau)));
  RegressionData d;
  d.y.resize(n);
  d.X.resize(n, 2);
  for (int i = 0; i < n; ++i) {
    const double x = z(rng);
    const double nu = expo(rng);
    d.X(i, 0) = 1.0;
    d.X(i, 1) = x;
    d.y[i] = 1.0 + 0.5 * x + t1 * nu + t2 * std::sqrt(nu) * z(rng);
  }
  return d;
}

// Mean and batch-means Monte Carlo SE of a series.
struct SeriesSummary {
  double mean;
  double sd;
  double mc_se;
};

SeriesSummary summarize(const std::vector<double>& v, int batches = 50) {
  const double m = oracle::sample_mean(v);
  const double sd = std::sqrt(oracle::sample_var(v));
  const std::size_t len = v.size() / static_cast<std::size_t>(batches);
  std::vector<double> means;
  for (int b = 0; b < batches; ++b) {
    double s = 0.0;
    for (std::size_t i = 0; i < len; ++i) s += v[b * len + i];
    means.push_back(s / static_cast<double>(len));
  }
  return {m, sd, std::sqrt(oracle::sample_var(means) / batches)};
}

// Random-walk Metropolis on (beta, log sigma) with the same target as the
// Gibbs sampler: AL likelihood, N(0, 1e6 I) beta prior, and a sigma prior
// given by its log density (ignored when sigma is fixed).
struct MetropolisRun {
  std::vector<std::vector<double>> beta;
  std::vector<double> sigma;
};

MetropolisRun metropolis(const RegressionData& d, double tau, std::optional<double> fixed_sigma,
                         const std::function<double(double)>& log_sigma_prior, long steps, int thin,
                         std::uint64_t seed, const std::vector<double>& step_size) {
  const int n = static_cast<int>(d.n());
  const int p = static_cast<int>(d.p());
  auto log_post = [&](const std::vector<double>& th) {
    const double eta = fixed_sigma ? std::log(*fixed_sigma) : th[p];
    const double s = std::exp(eta);
    double lp = 0.0;
    for (int i = 0; i < n; ++i) {
      double mu = 0.0;
      for (int j = 0; j < p; ++j) mu += d.X(i, j) * th[j];
      lp += std::log(tau * (1 - tau) / s) - oracle::loss((d.y[i] - mu) / s, tau);
    }
    for (int j = 0; j < p; ++j) lp -= 0.5 * th[j] * th[j] / 1e6;
    if (!fixed_sigma) lp += log_sigma_prior(s) + eta;
    return lp;
  };
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> z;
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const int dim = fixed_sigma ? p : p + 1;
  std::vector<double> th(dim, 0.0);
  th[0] = 1.0;
  if (!fixed_sigma) th[p] = 0.0;
  double cur = log_post(th);
  MetropolisRun out;
  const long burn = steps / 10;
  for (long it = 0; it < steps + burn; ++it) {
    std::vector<double> prop = th;
    for (int j = 0; j < dim; ++j) prop[j] += step_size[j] * z(rng);
    const double lp = log_post(prop);
    if (std::log(u(rng)) < lp - cur) {
      th = prop;
      cur = lp;
    }
    if (it >= burn && (it - burn) % thin == 0) {
      out.beta.emplace_back(th.begin(), th.begin() + p);
      out.sigma.push_back(fixed_sigma ? *fixed_sigma : std::exp(th[p]));
    }
  }
  return out;
}

std::vector<double> column(const Eigen::MatrixXd& m, int j) {
  return std::vector<double>(m.col(j).data(), m.col(j).data() + m.rows());
}

std::vector<double> column(const std::vector<std::vector<double>>& m, int j) {
  std::vector<double> out;
  for (const auto& r : m) out.push_back(r[static_cast<std::size_t>(j)]);
  return out;
}

void compare(const std::vector<double>& gibbs, const std::vector<double>& mh) {
  const SeriesSummary a = summarize(gibbs);
  const SeriesSummary b = summarize(mh);
  const double se_mean = std::hypot(a.mc_se, b.mc_se);
  // SD of a sample SD, scaled up by the same inefficiency as the mean.
  const double ineff_a = a.mc_se / (a.sd / std::sqrt(static_cast<double>(gibbs.size())));
  const double ineff_b = b.mc_se / (b.sd / std::sqrt(static_cast<double>(mh.size())));
  const double se_sd = std::hypot(a.sd * ineff_a / std::sqrt(2.0 * gibbs.size()),
                                  b.sd * ineff_b / std::sqrt(2.0 * mh.size()));
  CAPTURE(a.mean);
  CAPTURE(b.mean);
  CAPTURE(a.sd);
  CAPTURE(b.sd);
  CHECK(std::abs(a.mean - b.mean) < 3.0 * se_mean);
  CHECK(std::abs(a.sd - b.sd) < 3.0 * se_sd);
}

SamplerSettings settings(std::uint64_t seed, int draws = 1000, int chains = 4) {
  SamplerSettings s;
  s.chains = chains;
  s.warmup = 500;
  s.draws_per_chain = draws;
  s.seed = seed;
  return s;
}

}  // namespace

TEST_CASE("inverse Gaussian sampler moments") {
  Rng rng(3);
  for (auto [mu, lambda] : {std::pair{1.0, 1.0}, std::pair{0.05, 2.0}, std::pair{40.0, 0.3}}) {
    const int m = 400000;
    std::vector<double> v(m);
    for (double& x : v) x = sample_inverse_gaussian(rng, mu, lambda);
    const double mean = oracle::sample_mean(v);
    const double var = oracle::sample_var(v);
    const double true_var = mu * mu * mu / lambda;
    CAPTURE(mu);
    CHECK(std::abs(mean - mu) < 5.0 * std::sqrt(true_var / m));
    CHECK(var == doctest::Approx(true_var).epsilon(0.08));
    for (double x : v) REQUIRE(x > 0.0);
  }
}

TEST_CASE("Gibbs agrees with a random-walk Metropolis oracle") {
  SUBCASE("fixed sigma, tau = 0.3") {
    const RegressionData d = al_data(20, 0.3, 11);
    const PosteriorDraws g = run_sampler(d, QuantileLevel(0.3), PriorConfig{FlatPrior{}, FixedSigma{1.0}},
                                         settings(1, 10000));
    const MetropolisRun mh =
        metropolis(d, 0.3, 1.0, nullptr, 2000000, 20, 99, {0.6, 0.6});
    for (int j = 0; j < 2; ++j) compare(column(g.beta, j), column(mh.beta, j));
  }
  SUBCASE("half-t(3) sigma") {
    const RegressionData d = al_data(20, 0.5, 12);
    const double scale = 2.5;
    auto half_t3 = [scale](double s) { return -2.0 * std::log1p((s / scale) * (s / scale) / 3.0); };
    const PosteriorDraws g = run_sampler(d, QuantileLevel(0.5),
                                         PriorConfig{FlatPrior{}, HalfT3Sigma{scale}}, settings(2, 10000));
    CHECK_FALSE(g.sigma_fixed);
    const MetropolisRun mh = metropolis(d, 0.5, std::nullopt, half_t3, 3000000, 30, 98, {0.5, 0.5, 0.3});
    for (int j = 0; j < 2; ++j) compare(column(g.beta, j), column(mh.beta, j));
    std::vector<double> gs(g.sigma.data(), g.sigma.data() + g.sigma.size());
    compare(gs, mh.sigma);
  }
  SUBCASE("inverse-gamma sigma") {
    const RegressionData d = al_data(20, 0.7, 13);
    auto inv_gamma = [](double s) { return -(0.01 + 1.0) * std::log(s) - 0.01 / s; };
    const PosteriorDraws g = run_sampler(d, QuantileLevel(0.7),
                                         PriorConfig{FlatPrior{}, InverseGammaSigma{0.01, 0.01}},
                                         settings(3, 10000));
    const MetropolisRun mh = metropolis(d, 0.7, std::nullopt, inv_gamma, 3000000, 30, 97, {0.5, 0.5, 0.3});
    for (int j = 0; j < 2; ++j) compare(column(g.beta, j), column(mh.beta, j));
    std::vector<double> gs(g.sigma.data(), g.sigma.data() + g.sigma.size());
    compare(gs, mh.sigma);
  }
}

TEST_CASE("stored log-likelihood rows are reproducible bit for bit") {
  const RegressionData d = al_data(30, 0.5, 4);
  for (const SigmaMode& mode : {SigmaMode{FixedSigma{0.7}}, SigmaMode{HalfT3Sigma{}}}) {
    const PosteriorDraws g = run_sampler(d, QuantileLevel(0.4), PriorConfig{FlatPrior{}, mode}, settings(8, 200, 2));
    REQUIRE(g.loglik.rows() == 400);
    REQUIRE(g.loglik.cols() == 30);
    for (Eigen::Index s = 0; s < g.beta.rows(); ++s) {
      REQUIRE(g.sigma[s] > 0.0);
      const Eigen::VectorXd row =
          loglik_contributions(d, ALParameters(g.beta.row(s).transpose(), g.sigma[s], QuantileLevel(0.4)));
      REQUIRE((row.transpose().array() == g.loglik.row(s).array()).all());
    }
  }
}

TEST_CASE("same seed and settings give identical draws at any thread count") {
  const RegressionData d = al_data(25, 0.5, 6);
  const PriorConfig prior{FlatPrior{}, HalfT3Sigma{}};
  SamplerSettings s = settings(42, 150, 3);
  const PosteriorDraws a = run_sampler(d, QuantileLevel(0.6), prior, s);
  s.threads = 3;
  const PosteriorDraws b = run_sampler(d, QuantileLevel(0.6), prior, s);
  CHECK(a.beta == b.beta);
  CHECK(a.sigma == b.sigma);
  CHECK(a.loglik == b.loglik);
  s.seed = 43;
  CHECK(run_sampler(d, QuantileLevel(0.6), prior, s).beta != a.beta);
  CHECK(a.chains == 3);
  CHECK(a.draws_per_chain == 150);
  CHECK(a.size() == 450);
}

TEST_CASE("sampler preconditions") {
  const RegressionData d = al_data(10, 0.5, 7);
  const PriorConfig prior;
  SamplerSettings s = settings(1, 100, 1);
  s.warmup = 99;
  CHECK_THROWS_AS(run_sampler(d, QuantileLevel(0.5), prior, s), InvalidArgument);
  s.warmup = 100;
  s.draws_per_chain = 99;
  CHECK_THROWS_AS(run_sampler(d, QuantileLevel(0.5), prior, s), InvalidArgument);
  s.draws_per_chain = 100;
  s.chains = 0;
  CHECK_THROWS_AS(run_sampler(d, QuantileLevel(0.5), prior, s), InvalidArgument);
  s.chains = 1;
  RegressionData bad = d;
  bad.X.col(1) = 2.0 * bad.X.col(0);
  CHECK_THROWS_AS(run_sampler(bad, QuantileLevel(0.5), prior, s), RankDeficient);
  bad = d;
  bad.y[3] = std::nan("");
  CHECK_THROWS_AS(run_sampler(bad, QuantileLevel(0.5), prior, s), InvalidArgument);
  CHECK_THROWS_AS(run_sampler(d, QuantileLevel(0.5), PriorConfig{FlatPrior{}, FixedSigma{0.0}}, s),
                  InvalidArgument);
  CHECK_THROWS_AS(run_sampler(d, QuantileLevel(0.5), PriorConfig{FlatPrior{}, InverseGammaSigma{-1, 1}}, s),
                  InvalidArgument);
  CHECK_THROWS_AS(run_sampler(d, QuantileLevel(0.5),
                              PriorConfig{NormalPrior{Eigen::VectorXd::Zero(3), Eigen::MatrixXd::Identity(3, 3)},
                                          FixedSigma{}},
                              s),
                  DimensionMismatch);
}

TEST_CASE("an informative normal prior dominates the likelihood") {
  const RegressionData d = al_data(40, 0.5, 8);
  Eigen::VectorXd m(2);
  m << 3.0, -2.0;
  const NormalPrior prior{m, 1e-8 * Eigen::MatrixXd::Identity(2, 2)};
  const PosteriorDraws g = run_sampler(d, QuantileLevel(0.5), PriorConfig{prior, FixedSigma{1.0}}, settings(5));
  for (int j = 0; j < 2; ++j) {
    const SeriesSummary s = summarize(column(g.beta, j));
    CHECK(std::abs(s.mean - m[j]) < 3.0 * s.mc_se);
    CHECK(s.sd == doctest::Approx(1e-4).epsilon(0.05));
  }
}

TEST_CASE("intercept-only posterior concentrates on the sample median as sigma shrinks") {
  std::mt19937_64 rng(21);
  std::exponential_distribution<double> expo(1.0);
  RegressionData d;
  d.y.resize(31);
  for (Eigen::Index i = 0; i < 31; ++i) d.y[i] = expo(rng);
  d.X = Eigen::MatrixXd::Ones(31, 1);
  std::vector<double> ys(d.y.data(), d.y.data() + 31);
  std::nth_element(ys.begin(), ys.begin() + 15, ys.end());
  const double sample_median = ys[15];

  std::vector<double> gaps;
  for (double sigma : {0.003, 0.03, 0.3}) {
    const PosteriorDraws g =
        run_sampler(d, QuantileLevel(0.5), PriorConfig{FlatPrior{}, FixedSigma{sigma}}, settings(9, 5000));
    Eigen::Index best = 0;
    g.loglik.rowwise().sum().maxCoeff(&best);
    if (sigma == 0.003) CHECK(std::abs(g.beta(best, 0) - sample_median) < 0.01);
    gaps.push_back(std::abs(skew_diagnostic(g)[0]));
  }
  CHECK(gaps[0] < gaps[2]);
}

TEST_CASE("highest-posterior draw nearly attains the check-loss minimum") {
  DGPConfig cfg;
  cfg.kind = Model1{};
  cfg.n = 200;
  cfg.seed = 17;
  const RegressionData d = generate(cfg);
  for (double t : {0.25, 0.5}) {
    const QuantileLevel tau(t);
    const PosteriorDraws g = run_sampler(d, tau, PriorConfig{FlatPrior{}, FixedSigma{0.5}}, settings(10));
    Eigen::Index best = 0;
    g.loglik.rowwise().sum().maxCoeff(&best);
    const double loss_at_mode = check_loss_sum(d.X, d.y, g.beta.row(best).transpose(), tau);
    const double minimum = fit_check_loss(d, tau).objective;
    CHECK(loss_at_mode <= 1.02 * minimum);
    CHECK(loss_at_mode >= minimum - 1e-9);
  }
}

TEST_CASE("Engel intercept posterior at tau 0.75 is right-skewed for large sigma") {
  Formula f;
  f.response = ColumnSpec::parse("log(foodexp)");
  f.covariates = {ColumnSpec::parse("log(income)")};
  const RegressionData d = ingest_csv(std::string(QIJ_DATA_DIR) + "/engel.csv", f);
  const PosteriorDraws g =
      run_sampler(d, QuantileLevel(0.75), PriorConfig{FlatPrior{}, FixedSigma{100.0}}, settings(11, 10000));
  Eigen::Index best = 0;
  g.loglik.rowwise().sum().maxCoeff(&best);
  const double mean = posterior_mean(g)[0];
  const double med = posterior_median(g)[0];
  const double mode = g.beta(best, 0);
  CAPTURE(mean);
  CAPTURE(med);
  CAPTURE(mode);
  CHECK(mean > med);
  CHECK(med > mode);
}

TEST_CASE("diagnostics") {
  std::mt19937_64 rng(5);
  std::normal_distribution<double> z;
  SUBCASE("identical chains give rhat 1") {
    Eigen::MatrixXd c(1000, 2);
    for (Eigen::Index i = 0; i < c.size(); ++i) c.data()[i] = z(rng);
    const ChainDiagnostics d = diagnostics(std::vector<Eigen::MatrixXd>{c, c, c});
    REQUIRE(d.rhat);
    // Split halves of the same white noise: rhat is 1 up to sampling noise.
    CHECK((*d.rhat).maxCoeff() < 1.01);
    CHECK((*d.rhat).minCoeff() >= 1.0 - 1e-3);
  }
  SUBCASE("white noise has ESS close to S") {
    std::vector<Eigen::MatrixXd> chains(4, Eigen::MatrixXd(2500, 1));
    for (auto& c : chains) {
      for (Eigen::Index i = 0; i < c.rows(); ++i) c(i, 0) = z(rng);
    }
    const ChainDiagnostics d = diagnostics(chains);
    CHECK(d.ess[0] == doctest::Approx(10000.0).epsilon(0.2));
    CHECK(d.ess[0] <= 10000.0);
  }
  SUBCASE("AR(1) with phi 0.9 has ESS close to S (1 - phi) / (1 + phi)") {
    const double phi = 0.9;
    std::vector<Eigen::MatrixXd> chains(4, Eigen::MatrixXd(10000, 1));
    for (auto& c : chains) {
      double x = z(rng) / std::sqrt(1 - phi * phi);
      for (Eigen::Index i = 0; i < c.rows(); ++i) {
        x = phi * x + z(rng);
        c(i, 0) = x;
      }
    }
    const ChainDiagnostics d = diagnostics(chains);
    CHECK(d.ess[0] == doctest::Approx(40000.0 * (1 - phi) / (1 + phi)).epsilon(0.25));
  }
  SUBCASE("a single chain reports ESS but no rhat") {
    Eigen::MatrixXd c(500, 1);
    for (Eigen::Index i = 0; i < c.rows(); ++i) c(i, 0) = z(rng);
    const ChainDiagnostics d = diagnostics(std::vector<Eigen::MatrixXd>{c});
    CHECK_FALSE(d.rhat);
    CHECK(d.ess[0] > 0.0);
    CHECK(d.ess[0] <= 500.0);
  }
  SUBCASE("sampler output") {
    const RegressionData data = al_data(30, 0.5, 2);
    const PosteriorDraws g = run_sampler(data, QuantileLevel(0.5), PriorConfig{}, settings(3));
    const ChainDiagnostics d = diagnostics(g);
    REQUIRE(d.rhat);
    CHECK((*d.rhat).maxCoeff() < 1.05);
    CHECK(d.ess.minCoeff() > 0.0);
    CHECK(d.ess.maxCoeff() <= 4000.0);
  }
}

TEST_CASE("draw dump layout") {
  const RegressionData d = al_data(12, 0.5, 1);
  SamplerSettings s = settings(4, 100, 2);
  s.warmup = 100;
  const PosteriorDraws g = run_sampler(d, QuantileLevel(0.5), PriorConfig{}, s);
  std::ostringstream os;
  write_draws(os, g, {"intercept", "x"});
  std::istringstream is(os.str());
  std::string line;
  std::getline(is, line);
  CHECK(line == "chain,iteration,intercept,x,sigma");
  int rows = 0;
  std::string first;
  while (std::getline(is, line)) {
    if (rows == 0) first = line;
    ++rows;
  }
  CHECK(rows == 200);
  CHECK(first.rfind("0,101,", 0) == 0);
}
