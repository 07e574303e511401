#include "qij/error.hpp"
#include "qij/gibbs.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

namespace qij {

namespace {

using Eigen::Index;
using Eigen::VectorXd;

// Between/within variance decomposition over equally long sequences.
struct VarianceParts {
  double within;
  double var_plus;
};

VarianceParts variance_parts(const std::vector<VectorXd>& seqs) {
  const auto M = static_cast<double>(seqs.size());
  const auto N = static_cast<double>(seqs.front().size());
  std::vector<double> means;
  double within = 0.0;
  for (const auto& s : seqs) {
    const double mu = s.mean();
    means.push_back(mu);
    within += (s.array() - mu).square().sum() / (N - 1.0);
  }
  within /= M;
  double between_over_n = 0.0;
  if (seqs.size() > 1) {
    double grand = 0.0;
    for (double m : means) grand += m;
    grand /= M;
    for (double m : means) between_over_n += (m - grand) * (m - grand);
    between_over_n /= (M - 1.0);
  }
  return {within, (N - 1.0) / N * within + between_over_n};
}

double split_rhat(const std::vector<VectorXd>& chains) {
  std::vector<VectorXd> halves;
  for (const auto& c : chains) {
    const Index half = c.size() / 2;
    halves.emplace_back(c.head(half));
    halves.emplace_back(c.tail(half));
  }
  const VarianceParts v = variance_parts(halves);
  if (v.within <= 0.0) return 1.0;
  return std::sqrt(v.var_plus / v.within);
}

// Multi-chain ESS with Geyer's initial monotone sequence.
double effective_size(const std::vector<VectorXd>& chains) {
  const Index N = chains.front().size();
  const auto M = static_cast<double>(chains.size());
  const double total = M * static_cast<double>(N);
  const VarianceParts v = variance_parts(chains);
  if (v.var_plus <= 0.0) return total;

  std::vector<VectorXd> centered;
  for (const auto& c : chains) centered.emplace_back(c.array() - c.mean());

  auto rho = [&](Index lag) {
    double acov = 0.0;
    for (const auto& c : centered) {
      acov += c.head(N - lag).dot(c.tail(N - lag)) / static_cast<double>(N);
    }
    acov /= M;
    return 1.0 - (v.within - acov) / v.var_plus;
  };

  double sum_pairs = 0.0;
  double prev_pair = std::numeric_limits<double>::infinity();
  for (Index t = 0; t + 1 < N; t += 2) {
    double pair = rho(t) + rho(t + 1);
    if (pair < 0.0) break;
    pair = std::min(pair, prev_pair);
    prev_pair = pair;
    sum_pairs += pair;
  }
  const double tau_hat = std::max(-1.0 + 2.0 * sum_pairs, 1.0 / std::log10(std::max(total, 10.0)));
  return std::min(total / tau_hat, total);
}

}  // namespace

ChainDiagnostics diagnostics(const std::vector<Eigen::MatrixXd>& chains) {
  if (chains.empty()) throw InvalidArgument("diagnostics need at least one chain");
  const Index N = chains.front().rows();
  const Index P = chains.front().cols();
  for (const auto& c : chains) {
    if (c.rows() != N || c.cols() != P) throw DimensionMismatch("chains must share shape");
  }
  if (N < 4) throw InvalidArgument("diagnostics need at least four draws per chain");

  ChainDiagnostics out;
  out.ess.resize(P);
  VectorXd rhat(P);
  for (Index k = 0; k < P; ++k) {
    std::vector<VectorXd> seqs;
    for (const auto& c : chains) seqs.emplace_back(c.col(k));
    out.ess[k] = effective_size(seqs);
    if (chains.size() >= 2) rhat[k] = split_rhat(seqs);
  }
  if (chains.size() >= 2) out.rhat = std::move(rhat);
  return out;
}

ChainDiagnostics diagnostics(const PosteriorDraws& draws) {
  std::vector<Eigen::MatrixXd> chains;
  for (int c = 0; c < draws.chains; ++c) {
    chains.emplace_back(
        draws.beta.middleRows(static_cast<Index>(c) * draws.draws_per_chain, draws.draws_per_chain));
  }
  return diagnostics(chains);
}

}  // namespace qij
