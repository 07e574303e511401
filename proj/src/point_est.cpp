#include "qij/point_est.hpp"

#include "qij/error.hpp"
#include "qij/parallel.hpp"
#include "qij/random.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <optional>
#include <string>
#include <vector>

namespace qij {

namespace {

using Eigen::Index;
using Eigen::MatrixXd;
using Eigen::VectorXd;

double psi(double r, double tau) { return r < 0.0 ? tau - 1.0 : tau; }

double loss_at(const MatrixXd& X, const VectorXd& y, const VectorXd& beta, QuantileLevel tau) {
  return check_loss_sum(X, y, beta, tau);
}

// Majorize-minimize on the check loss with |r| smoothed below eps, eps shrunk
// geometrically. Returns a point close to the optimal face.
VectorXd smoothed_start(const MatrixXd& X, const VectorXd& y, double tau) {
  VectorXd beta = X.colPivHouseholderQr().solve(y);
  VectorXd r = y - X * beta;
  const double scale = r.cwiseAbs().mean();
  if (!(scale > 0.0) || !std::isfinite(scale)) return beta;

  const VectorXd tilt = (2.0 * tau - 1.0) * X.colwise().sum().transpose();
  for (double eps = 1e-2; eps >= 1e-10 * 0.999; eps *= 0.1) {
    const double floor = eps * scale;
    for (int it = 0; it < 50; ++it) {
      const VectorXd w = r.cwiseAbs().cwiseMax(floor).cwiseInverse();
      const MatrixXd A = X.transpose() * w.asDiagonal() * X;
      const VectorXd b = X.transpose() * w.cwiseProduct(y) + tilt;
      Eigen::LDLT<MatrixXd> ldlt(A);
      if (ldlt.info() != Eigen::Success) return beta;
      const VectorXd next = ldlt.solve(b);
      if (!next.allFinite()) return beta;
      const double step = (next - beta).cwiseAbs().maxCoeff();
      beta = next;
      r = y - X * beta;
      if (step <= 1e-12 * (1.0 + beta.cwiseAbs().maxCoeff())) break;
    }
  }
  return beta;
}

class VertexDescent {
 public:
  VertexDescent(const MatrixXd& X, const VectorXd& y, QuantileLevel tau)
      : X_(X), y_(y), tau_(tau), n_(X.rows()), p_(X.cols()),
        zero_tol_(1e-9 * (1.0 + y.cwiseAbs().maxCoeff())) {}

  double zero_tol() const { return zero_tol_; }

  // Picks p well-conditioned rows with the smallest |residual| at `start`.
  std::vector<Index> initial_basis(const VectorXd& start) const {
    const VectorXd r = (y_ - X_ * start).cwiseAbs();
    std::vector<Index> order(static_cast<std::size_t>(n_));
    std::iota(order.begin(), order.end(), Index{0});
    std::stable_sort(order.begin(), order.end(), [&](Index a, Index b) { return r[a] < r[b]; });

    std::vector<Index> basis;
    MatrixXd q(p_, 0);
    for (Index i : order) {
      VectorXd v = X_.row(i).transpose();
      const double norm = v.norm();
      if (norm == 0.0) continue;
      for (Index k = 0; k < q.cols(); ++k) v -= q.col(k).dot(v) * q.col(k);
      if (v.norm() <= 1e-8 * norm) continue;
      q.conservativeResize(Eigen::NoChange, q.cols() + 1);
      q.col(q.cols() - 1) = v.normalized();
      basis.push_back(i);
      if (static_cast<Index>(basis.size()) == p_) break;
    }
    return basis;
  }

  std::optional<VectorXd> solve_basis(const std::vector<Index>& basis) const {
    MatrixXd A(p_, p_);
    VectorXd b(p_);
    for (Index k = 0; k < p_; ++k) {
      A.row(k) = X_.row(basis[static_cast<std::size_t>(k)]);
      b[k] = y_[basis[static_cast<std::size_t>(k)]];
    }
    Eigen::FullPivLU<MatrixXd> lu(A);
    if (!lu.isInvertible()) return std::nullopt;
    return VectorXd(lu.solve(b));
  }

  // Walks vertex to vertex along descending rays of the local cone until
  // no ray descends.
  VectorXd run(std::vector<Index> basis) const {
    std::optional<VectorXd> solved = solve_basis(basis);
    if (!solved) throw RankDeficient("could not form an initial interpolating basis");
    VectorXd beta = *solved;
    double objective = loss_at(X_, y_, beta, tau_);
    const double tau = tau_.value();
    const Index max_steps = 20 * n_ + 1000;

    for (Index step = 0; step < max_steps; ++step) {
      const VectorXd r = y_ - X_ * beta;
      std::vector<Index> zero;
      std::vector<char> in_zero(static_cast<std::size_t>(n_), 0);
      for (Index i = 0; i < n_; ++i) {
        if (std::abs(r[i]) <= zero_tol_) {
          zero.push_back(i);
          in_zero[static_cast<std::size_t>(i)] = 1;
        }
      }
      for (Index b : basis) {
        if (!in_zero[static_cast<std::size_t>(b)]) {
          zero.push_back(b);
          in_zero[static_cast<std::size_t>(b)] = 1;
        }
      }

      // Steepest descending ray among those spanned by p-1 interpolated rows.
      double best_slope = 0.0;
      VectorXd best_dir;
      VectorXd best_a;
      std::vector<Index> best_subset;
      for_each_subset(zero, [&](const std::vector<Index>& subset) {
        std::optional<VectorXd> ray = ray_direction(subset);
        if (!ray) return;
        const VectorXd a = X_ * *ray;
        double total = 0.0;
        double slope = 0.0;
        for (Index i = 0; i < n_; ++i) {
          total += std::abs(a[i]);
          if (in_zero[static_cast<std::size_t>(i)]) {
            slope += -a[i] >= 0.0 ? -a[i] * tau : a[i] * (1.0 - tau);
          } else {
            slope -= psi(r[i], tau) * a[i];
          }
        }
        for (double sign : {1.0, -1.0}) {
          double s = slope;
          if (sign < 0.0) {
            // Flip: non-interpolated terms are linear, interpolated ones are
            // evaluated at the opposite direction.
            s = 0.0;
            for (Index i = 0; i < n_; ++i) {
              if (in_zero[static_cast<std::size_t>(i)]) {
                s += a[i] >= 0.0 ? a[i] * tau : -a[i] * (1.0 - tau);
              } else {
                s += psi(r[i], tau) * a[i];
              }
            }
          }
          if (s < best_slope && s < -1e-12 * total) {
            best_slope = s;
            best_dir = sign * *ray;
            best_a = sign * a;
            best_subset = subset;
          }
        }
      });
      if (best_dir.size() == 0) break;

      // Exact line search over the breakpoints of the convex piecewise-linear
      // restriction of the objective to the ray.
      std::vector<std::pair<double, Index>> breaks;
      for (Index i = 0; i < n_; ++i) {
        if (in_zero[static_cast<std::size_t>(i)] || best_a[i] == 0.0) continue;
        const double t = r[i] / best_a[i];
        if (t > 0.0) breaks.emplace_back(t, i);
      }
      std::sort(breaks.begin(), breaks.end());
      double slope = best_slope;
      std::optional<std::pair<double, Index>> stop;
      for (const auto& br : breaks) {
        slope += std::abs(best_a[br.second]);
        if (slope >= 0.0) {
          stop = br;
          break;
        }
      }
      if (!stop) break;  // unbounded along the ray: impossible with full rank X

      std::vector<Index> next_basis = best_subset;
      next_basis.push_back(stop->second);
      std::optional<VectorXd> next = solve_basis(next_basis);
      VectorXd candidate = next ? *next : VectorXd(beta + stop->first * best_dir);
      const double candidate_objective = loss_at(X_, y_, candidate, tau_);
      if (!(candidate_objective < objective)) break;
      beta = std::move(candidate);
      objective = candidate_objective;
      if (next) basis = std::move(next_basis);
    }
    return beta;
  }

 private:
  template <class F>
  void for_each_subset(const std::vector<Index>& pool, F&& visit) const {
    const std::size_t k = static_cast<std::size_t>(p_ - 1);
    if (pool.size() < k) return;
    std::vector<std::size_t> idx(k);
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    std::vector<Index> subset(k);
    while (true) {
      for (std::size_t j = 0; j < k; ++j) subset[j] = pool[idx[j]];
      visit(subset);
      if (k == 0) return;
      std::size_t j = k;
      while (j > 0 && idx[j - 1] == pool.size() - k + (j - 1)) --j;
      if (j == 0) return;
      ++idx[j - 1];
      for (std::size_t l = j; l < k; ++l) idx[l] = idx[l - 1] + 1;
    }
  }

  // Unit direction orthogonal to the rows in `subset`, if those rows have
  // rank p - 1.
  std::optional<VectorXd> ray_direction(const std::vector<Index>& subset) const {
    if (p_ == 1) return VectorXd::Ones(1);
    MatrixXd A(static_cast<Index>(subset.size()), p_);
    for (std::size_t k = 0; k < subset.size(); ++k) A.row(static_cast<Index>(k)) = X_.row(subset[k]);
    Eigen::FullPivLU<MatrixXd> lu(A);
    if (lu.rank() != p_ - 1) return std::nullopt;
    VectorXd d = lu.kernel().col(0);
    const double norm = d.norm();
    if (!(norm > 0.0)) return std::nullopt;
    return VectorXd(d / norm);
  }

  const MatrixXd& X_;
  const VectorXd& y_;
  QuantileLevel tau_;
  Index n_;
  Index p_;
  double zero_tol_;
};

}  // namespace

FitResult fit_check_loss(const MatrixXd& X, const VectorXd& y, QuantileLevel tau) {
  if (X.rows() != y.size()) throw DimensionMismatch("design rows do not match response length");
  if (X.cols() < 1) throw InvalidArgument("design matrix has no columns");
  if (X.rows() < X.cols()) {
    throw RankDeficient("need n >= p (n = " + std::to_string(X.rows()) +
                        ", p = " + std::to_string(X.cols()) + ")");
  }
  if (!y.allFinite() || !X.allFinite()) throw InvalidArgument("non-finite data");
  if (!has_full_column_rank(X)) throw RankDeficient("design matrix lacks full column rank");

  VertexDescent solver(X, y, tau);
  const VectorXd start = smoothed_start(X, y, tau.value());
  std::vector<Index> basis = solver.initial_basis(start);
  if (static_cast<Index>(basis.size()) != X.cols()) {
    throw RankDeficient("design matrix lacks full column rank");
  }

  FitResult fit;
  fit.beta_hat = solver.run(std::move(basis));
  const VectorXd r = y - X * fit.beta_hat;
  fit.objective = check_loss_sum(X, y, fit.beta_hat, tau);
  for (Index i = 0; i < r.size(); ++i) {
    if (std::abs(r[i]) <= solver.zero_tol()) {
      ++fit.zero_residual_count;
    } else if (r[i] < 0.0) {
      ++fit.neg_residual_count;
    }
  }
  return fit;
}

FitResult fit_check_loss(const RegressionData& data, QuantileLevel tau) {
  validate(data);
  return fit_check_loss(data.X, data.y, tau);
}

bool satisfies_certificate(const FitResult& fit, std::size_t n, QuantileLevel tau) {
  const double target = static_cast<double>(n) * tau.value();
  const double slack = 1e-9 * static_cast<double>(n);
  return fit.neg_residual_count <= target + slack &&
         target <= fit.neg_residual_count + fit.zero_residual_count + slack;
}

BootstrapReplicates bootstrap_replicates(const RegressionData& data, QuantileLevel tau,
                                         const BootstrapOptions& options) {
  validate(data);
  if (options.replicates < 50) throw InvalidArgument("bootstrap needs at least 50 replicates");
  const bool clustered = options.scheme == BootstrapScheme::cluster;
  if (clustered && !data.cluster) {
    throw InvalidArgument("cluster bootstrap requires cluster labels");
  }

  const Index n = data.X.rows();
  const Index p = data.X.cols();
  std::vector<std::vector<Index>> members;
  if (clustered) {
    members.resize(data.cluster_count());
    for (Index i = 0; i < n; ++i) {
      members[static_cast<std::size_t>((*data.cluster)[static_cast<std::size_t>(i)])].push_back(i);
    }
  }

  const auto B = static_cast<std::size_t>(options.replicates);
  const int cap = 10 * options.replicates;
  std::vector<VectorXd> coefficients(B);
  std::vector<int> redraws(B, 0);

  parallel_for(B, options.threads, [&](std::size_t b) {
    Rng rng(derive_seed(options.seed, {key(Stream::bootstrap), b}));
    std::vector<Index> rows;
    while (true) {
      rows.clear();
      if (clustered) {
        std::uniform_int_distribution<std::size_t> pick(0, members.size() - 1);
        for (std::size_t j = 0; j < members.size(); ++j) {
          const auto& m = members[pick(rng)];
          rows.insert(rows.end(), m.begin(), m.end());
        }
      } else {
        std::uniform_int_distribution<Index> pick(0, n - 1);
        for (Index i = 0; i < n; ++i) rows.push_back(pick(rng));
      }
      const auto m = static_cast<Index>(rows.size());
      MatrixXd Xs(m, p);
      VectorXd ys(m);
      for (Index k = 0; k < m; ++k) {
        Xs.row(k) = data.X.row(rows[static_cast<std::size_t>(k)]);
        ys[k] = data.y[rows[static_cast<std::size_t>(k)]];
      }
      try {
        coefficients[b] = fit_check_loss(Xs, ys, tau).beta_hat;
        return;
      } catch (const RankDeficient&) {
        if (++redraws[b] > cap) {
          throw RankDeficient("bootstrap: too many singular resamples");
        }
      }
    }
  });

  BootstrapReplicates out;
  out.coefficients.resize(static_cast<Index>(B), p);
  for (std::size_t b = 0; b < B; ++b) {
    out.coefficients.row(static_cast<Index>(b)) = coefficients[b].transpose();
    out.redraws += redraws[b];
  }
  if (out.redraws > cap) throw RankDeficient("bootstrap: too many singular resamples");
  return out;
}

CovarianceEstimate bootstrap_cov(const RegressionData& data, QuantileLevel tau,
                                 const BootstrapOptions& options) {
  const BootstrapReplicates reps = bootstrap_replicates(data, tau, options);
  const std::size_t units =
      options.scheme == BootstrapScheme::cluster ? data.cluster_count() : data.n();
  return CovarianceEstimate(empirical_covariance(reps.coefficients), CovarianceMethod::bootstrap,
                            units);
}

}  // namespace qij
