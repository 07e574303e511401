#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace qij {

/// Response, design matrix and optional cluster membership of one dataset.
///
/// Cluster labels, when present, are dense: every value in [0, J) occurs.
struct RegressionData {
  Eigen::VectorXd y;
  Eigen::MatrixXd X;
  std::optional<std::vector<int>> cluster;
  std::vector<std::string> coefficient_names;

  std::size_t n() const noexcept { return static_cast<std::size_t>(y.size()); }
  std::size_t p() const noexcept { return static_cast<std::size_t>(X.cols()); }
  bool clustered() const noexcept { return cluster.has_value(); }
  /// Number of clusters J; 0 when unclustered.
  std::size_t cluster_count() const;
};

/// Checks shapes, finiteness, n >= p and the cluster partition. Rank is
/// checked separately by the estimators that need it.
void validate(const RegressionData& data);

bool has_full_column_rank(const Eigen::MatrixXd& X);

/// Relabels arbitrary integer labels to 0..J-1 in ascending order of the
/// original values.
std::vector<int> densify_labels(std::span<const long long> labels);

/// Names "b0".."b{p-1}" unless the data already carries names.
std::vector<std::string> coefficient_names(const RegressionData& data);

}  // namespace qij
