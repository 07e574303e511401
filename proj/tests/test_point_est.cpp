#include "oracles.hpp"
#include "qij/error.hpp"
#include "qij/point_est.hpp"
#include "qij/random.hpp"
#include "qij/simlab.hpp"
#include "qij/stats.hpp"

#include <doctest.h>

#include <cmath>
#include <limits>
#include <random>

using namespace qij;

namespace {

// Minimum check loss over every exact-fit basis (p <= 2), Cramer's rule.
double brute_force_minimum(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, double tau) {
  const int n = static_cast<int>(X.rows());
  const int p = static_cast<int>(X.cols());
  auto total = [&](double b0, double b1) {
    double s = 0.0;
    for (int i = 0; i < n; ++i) {
      const double fit = p == 1 ? X(i, 0) * b0 : X(i, 0) * b0 + X(i, 1) * b1;
      s += oracle::loss(y[i] - fit, tau);
    }
    return s;
  };
  double best = std::numeric_limits<double>::infinity();
  if (p == 1) {
    for (int i = 0; i < n; ++i) {
      if (X(i, 0) != 0.0) best = std::min(best, total(y[i] / X(i, 0), 0.0));
    }
    return best;
  }
  for (int i = 0; i < n; ++i) {
    for (int j = i + 1; j < n; ++j) {
      const double det = X(i, 0) * X(j, 1) - X(i, 1) * X(j, 0);
      if (std::abs(det) < 1e-12) continue;
      const double b0 = (y[i] * X(j, 1) - X(i, 1) * y[j]) / det;
      const double b1 = (X(i, 0) * y[j] - y[i] * X(j, 0)) / det;
      best = std::min(best, total(b0, b1));
    }
  }
  return best;
}

int negatives(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, const Eigen::VectorXd& b) {
  const Eigen::VectorXd r = y - X * b;
  const double tol = 1e-9 * (1.0 + y.cwiseAbs().maxCoeff());
  int k = 0;
  for (Eigen::Index i = 0; i < r.size(); ++i) k += r[i] < -tol ? 1 : 0;
  return k;
}

RegressionData intercept_only(std::vector<double> ys) {
  RegressionData d;
  d.y = Eigen::Map<Eigen::VectorXd>(ys.data(), static_cast<Eigen::Index>(ys.size()));
  d.X = Eigen::MatrixXd::Ones(d.y.size(), 1);
  return d;
}

}  // namespace

TEST_CASE("intercept-only fit at the median") {
  const FitResult fit = fit_check_loss(intercept_only({1.0, 2.0, 3.0}), QuantileLevel(0.5));
  CHECK(fit.beta_hat[0] == doctest::Approx(2.0));
  CHECK(fit.objective == doctest::Approx(1.0));
  CHECK(fit.neg_residual_count == 1);

  // tau = 0.75 on 1..10: the 8th order statistic.
  const FitResult upper =
      fit_check_loss(intercept_only({5, 2, 9, 1, 7, 3, 10, 4, 8, 6}), QuantileLevel(0.75));
  CHECK(upper.beta_hat[0] == doctest::Approx(8.0));
}

TEST_CASE("objective matches brute-force basis enumeration and the certificate holds") {
  std::mt19937_64 rng(2024);
  std::normal_distribution<double> z;
  std::uniform_real_distribution<double> unit(0.02, 0.98);
  int checked = 0;
  for (int rep = 0; rep < 400; ++rep) {
    const int p = 1 + rep % 2;
    const int n = p + static_cast<int>(rng() % (13 - p));
    Eigen::MatrixXd X(n, p);
    Eigen::VectorXd y(n);
    const bool ties = rep % 5 == 0;
    for (int i = 0; i < n; ++i) {
      X(i, 0) = 1.0;
      if (p == 2) X(i, 1) = ties ? std::round(2.0 * z(rng)) : z(rng);
      y[i] = ties ? std::round(3.0 * z(rng)) : 2.0 * z(rng) + (p == 2 ? X(i, 1) : 0.0);
    }
    if (!has_full_column_rank(X)) continue;
    const double tau = unit(rng);
    const FitResult fit = fit_check_loss(X, y, QuantileLevel(tau));
    const double best = brute_force_minimum(X, y, tau);
    CAPTURE(rep);
    CHECK(fit.objective <= best + 1e-8);
    double direct = 0.0;
    for (int i = 0; i < n; ++i) direct += oracle::loss(y[i] - X.row(i).dot(fit.beta_hat), tau);
    CHECK(fit.objective == doctest::Approx(direct).epsilon(1e-12));
    CHECK(satisfies_certificate(fit, static_cast<std::size_t>(n), QuantileLevel(tau)));
    if (!ties) {
      const int neg = negatives(X, y, fit.beta_hat);
      CHECK(neg <= n * tau + 1e-9);
      CHECK(neg >= n * tau - p - 1e-9);
    }
    ++checked;
  }
  CHECK(checked > 350);
}

TEST_CASE("scale and shift equivariance") {
  DGPConfig cfg;
  cfg.kind = Model2{};
  cfg.n = 150;
  cfg.seed = 3;
  const RegressionData d = generate(cfg);
  for (double t : {0.2, 0.5, 0.9}) {
    const QuantileLevel tau(t);
    const FitResult base = fit_check_loss(d, tau);
    RegressionData scaled = d;
    scaled.y *= 3.5;
    const FitResult s = fit_check_loss(scaled, tau);
    CHECK((s.beta_hat - 3.5 * base.beta_hat).cwiseAbs().maxCoeff() < 1e-6);
    RegressionData shifted = d;
    shifted.y.array() += 4.0;
    const FitResult h = fit_check_loss(shifted, tau);
    CHECK(h.beta_hat[0] == doctest::Approx(base.beta_hat[0] + 4.0).epsilon(1e-8));
    CHECK(std::abs(h.beta_hat[1] - base.beta_hat[1]) < 1e-6);
    CHECK(satisfies_certificate(base, d.n(), tau));
  }
}

TEST_CASE("fit rejects rank-deficient designs") {
  RegressionData d;
  d.y = Eigen::VectorXd::LinSpaced(5, 0.0, 4.0);
  d.X.resize(5, 2);
  d.X.col(0).setOnes();
  d.X.col(1).setConstant(2.0);
  CHECK_THROWS_AS(fit_check_loss(d, QuantileLevel(0.5)), RankDeficient);
  RegressionData wide;
  wide.y = Eigen::VectorXd::Ones(2);
  wide.X = Eigen::MatrixXd::Identity(2, 3);
  CHECK_THROWS(fit_check_loss(wide, QuantileLevel(0.5)));
}

TEST_CASE("bootstrap") {
  DGPConfig cfg;
  cfg.kind = Model1{};
  cfg.n = 80;
  cfg.seed = 9;
  const RegressionData d = generate(cfg);
  const QuantileLevel tau(0.5);

  SUBCASE("constant response gives zero covariance") {
    const RegressionData c = intercept_only(std::vector<double>(30, 4.25));
    BootstrapOptions opt;
    opt.replicates = 60;
    const CovarianceEstimate cov = bootstrap_cov(c, tau, opt);
    CHECK(cov.matrix()(0, 0) == 0.0);
    CHECK(cov.method() == CovarianceMethod::bootstrap);
  }
  SUBCASE("same seed gives bit-identical covariance at any thread count") {
    BootstrapOptions opt;
    opt.replicates = 80;
    opt.seed = 77;
    const CovarianceEstimate a = bootstrap_cov(d, tau, opt);
    opt.threads = 3;
    const CovarianceEstimate b = bootstrap_cov(d, tau, opt);
    CHECK(a.matrix() == b.matrix());
    opt.seed = 78;
    CHECK(bootstrap_cov(d, tau, opt).matrix() != a.matrix());
  }
  SUBCASE("one unit per cluster reproduces the pair scheme") {
    RegressionData clustered = d;
    std::vector<int> labels(d.n());
    for (std::size_t i = 0; i < labels.size(); ++i) labels[i] = static_cast<int>(i);
    clustered.cluster = labels;
    BootstrapOptions pair;
    pair.replicates = 60;
    pair.seed = 5;
    BootstrapOptions cl = pair;
    cl.scheme = BootstrapScheme::cluster;
    const BootstrapReplicates a = bootstrap_replicates(d, tau, pair);
    const BootstrapReplicates b = bootstrap_replicates(clustered, tau, cl);
    CHECK(a.coefficients == b.coefficients);
  }
  SUBCASE("preconditions") {
    BootstrapOptions opt;
    opt.replicates = 49;
    CHECK_THROWS_AS(bootstrap_cov(d, tau, opt), InvalidArgument);
    opt.replicates = 50;
    opt.scheme = BootstrapScheme::cluster;
    CHECK_THROWS_AS(bootstrap_cov(d, tau, opt), InvalidArgument);
  }
  SUBCASE("singular resamples are redrawn") {
    // Only two distinct x values: some resamples hit a single one.
    RegressionData two;
    two.y = Eigen::VectorXd::LinSpaced(6, 1.0, 6.0);
    two.X.resize(6, 2);
    two.X.col(0).setOnes();
    two.X.col(1) << 0, 0, 0, 0, 0, 1;
    BootstrapOptions opt;
    opt.replicates = 50;
    opt.seed = 1;
    const BootstrapReplicates r = bootstrap_replicates(two, tau, opt);
    CHECK(r.redraws > 0);
    CHECK(r.coefficients.rows() == 50);
  }
}

TEST_CASE("pair bootstrap SE tracks the sampling SD (Model 1, 100 replications)") {
  const int m = 100;
  const QuantileLevel tau(0.5);
  std::vector<double> slopes;
  std::vector<double> boot_var;
  for (int r = 0; r < m; ++r) {
    DGPConfig cfg;
    cfg.kind = Model1{};
    cfg.n = 200;
    cfg.seed = derive_seed(31337, {static_cast<std::uint64_t>(r)});
    const RegressionData d = generate(cfg);
    slopes.push_back(fit_check_loss(d, tau).beta_hat[1]);
    BootstrapOptions opt;
    opt.replicates = 200;
    opt.seed = derive_seed(4242, {static_cast<std::uint64_t>(r)});
    boot_var.push_back(bootstrap_cov(d, tau, opt).matrix()(1, 1));
  }
  const RelativeErrorSummary re = relative_error(boot_var, slopes);
  CAPTURE(re.relative_error);
  CAPTURE(re.mc_error);
  CHECK(re.lower <= 0.0);
  CHECK(re.upper >= 0.0);
}
