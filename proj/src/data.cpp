#include "qij/data.hpp"

#include "qij/error.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace qij {

std::size_t RegressionData::cluster_count() const {
  if (!cluster || cluster->empty()) return 0;
  return static_cast<std::size_t>(*std::max_element(cluster->begin(), cluster->end())) + 1;
}

void validate(const RegressionData& data) {
  if (data.X.rows() != data.y.size()) {
    throw DimensionMismatch("design has " + std::to_string(data.X.rows()) +
                            " rows but response has length " + std::to_string(data.y.size()));
  }
  if (data.p() < 1) throw InvalidArgument("design matrix has no columns");
  if (data.n() < data.p()) {
    throw RankDeficient("need n >= p (n = " + std::to_string(data.n()) +
                        ", p = " + std::to_string(data.p()) + ")");
  }
  if (!data.y.allFinite()) throw InvalidArgument("response contains non-finite values");
  if (!data.X.allFinite()) throw InvalidArgument("design matrix contains non-finite values");
  if (!data.coefficient_names.empty() && data.coefficient_names.size() != data.p()) {
    throw DimensionMismatch("coefficient name count does not match design columns");
  }
  if (data.cluster) {
    const auto& labels = *data.cluster;
    if (labels.size() != data.n()) {
      throw DimensionMismatch("cluster labels must have one entry per unit");
    }
    const std::size_t J = data.cluster_count();
    std::vector<char> seen(J, 0);
    for (int label : labels) {
      if (label < 0) throw InvalidArgument("cluster labels must be non-negative");
      seen[static_cast<std::size_t>(label)] = 1;
    }
    if (std::find(seen.begin(), seen.end(), 0) != seen.end()) {
      throw InvalidArgument("cluster labels must be dense (use densify_labels)");
    }
    if (J < 2) throw InvalidArgument("clustered data needs at least two clusters");
  }
}

bool has_full_column_rank(const Eigen::MatrixXd& X) {
  if (X.rows() < X.cols()) return false;
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(X);
  return qr.rank() == X.cols();
}

std::vector<int> densify_labels(std::span<const long long> labels) {
  std::vector<long long> distinct(labels.begin(), labels.end());
  std::sort(distinct.begin(), distinct.end());
  distinct.erase(std::unique(distinct.begin(), distinct.end()), distinct.end());
  std::vector<int> out;
  out.reserve(labels.size());
  for (long long v : labels) {
    out.push_back(static_cast<int>(std::lower_bound(distinct.begin(), distinct.end(), v) -
                                   distinct.begin()));
  }
  return out;
}

std::vector<std::string> coefficient_names(const RegressionData& data) {
  if (data.coefficient_names.size() == data.p()) return data.coefficient_names;
  std::vector<std::string> names;
  for (std::size_t j = 0; j < data.p(); ++j) names.push_back("b" + std::to_string(j));
  return names;
}

}  // namespace qij
