#include "roadsafe/smote.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "roadsafe/rng.hpp"

namespace roadsafe {

SmoteResult smote_oversample(const Eigen::Ref<const MatrixXd>& x,
                             const std::vector<int>& y,
                             const SmoteConfig& config) {
  if (static_cast<std::size_t>(x.rows()) != y.size()) {
    throw std::invalid_argument("smote: row/label count mismatch");
  }
  if (x.hasNaN()) {
    throw std::invalid_argument("smote: input must be fully imputed");
  }
  if (config.k_neighbors < 1 || !(config.target_ratio > 0.0) ||
      config.target_ratio > 1.0) {
    throw std::invalid_argument("smote: invalid config");
  }

  std::vector<Eigen::Index> class0, class1;
  for (std::size_t i = 0; i < y.size(); ++i) {
    (y[i] == 0 ? class0 : class1).push_back(static_cast<Eigen::Index>(i));
  }
  if (class0.empty() || class1.empty()) {
    throw std::invalid_argument("smote: nothing to oversample");
  }

  // ties go to the positive class
  const bool minority_is_1 = class1.size() <= class0.size();
  const auto& minority = minority_is_1 ? class1 : class0;
  const auto& majority = minority_is_1 ? class0 : class1;
  const int minority_label = minority_is_1 ? 1 : 0;

  const auto target = static_cast<std::int64_t>(
      std::ceil(static_cast<double>(majority.size()) * config.target_ratio));
  const std::int64_t needed =
      target - static_cast<std::int64_t>(minority.size());

  SmoteResult out;
  out.x = x;
  out.y = y;
  if (needed <= 0) {
    out.k_used = config.k_neighbors;
    return out;
  }
  if (minority.size() < 2) {
    throw std::invalid_argument("smote: minority class has no neighbor");
  }

  const int m = static_cast<int>(minority.size());
  out.k_used = std::min(config.k_neighbors, m - 1);
  out.k_reduced = out.k_used < config.k_neighbors;

  // column standardization for the distance metric only
  VectorXd mean = x.colwise().mean();
  VectorXd scale(x.cols());
  for (Eigen::Index c = 0; c < x.cols(); ++c) {
    const double var =
        (x.col(c).array() - mean(c)).square().sum() / x.rows();
    scale(c) = var > 1e-24 ? std::sqrt(var) : 1.0;
  }
  MatrixXd std_minority(m, x.cols());
  for (int i = 0; i < m; ++i) {
    std_minority.row(i) =
        ((x.row(minority[i]).transpose() - mean).array() / scale.array())
            .matrix()
            .transpose();
  }

  // k nearest minority neighbors per minority row; ties by index
  std::vector<std::vector<int>> neighbors(m);
  std::vector<std::pair<double, int>> dists;
  for (int i = 0; i < m; ++i) {
    dists.clear();
    dists.reserve(m - 1);
    for (int j = 0; j < m; ++j) {
      if (j == i) continue;
      const double d2 = (std_minority.row(i) - std_minority.row(j)).squaredNorm();
      dists.emplace_back(d2, j);
    }
    std::partial_sort(dists.begin(), dists.begin() + out.k_used, dists.end());
    neighbors[i].reserve(out.k_used);
    for (int k = 0; k < out.k_used; ++k) neighbors[i].push_back(dists[k].second);
  }

  Rng rng(config.seed);
  std::vector<int> order(m);
  std::iota(order.begin(), order.end(), 0);
  rng.shuffle(order);

  const Eigen::Index n0 = x.rows();
  out.x.conservativeResize(n0 + needed, Eigen::NoChange);
  out.y.reserve(y.size() + static_cast<std::size_t>(needed));
  for (std::int64_t s = 0; s < needed; ++s) {
    const int base = order[static_cast<std::size_t>(s) % m];
    const int nn = neighbors[base][rng.below(
        static_cast<std::uint64_t>(out.k_used))];
    const double u = rng.uniform01();
    out.x.row(n0 + s) =
        x.row(minority[base]) +
        u * (x.row(minority[nn]) - x.row(minority[base]));
    out.y.push_back(minority_label);
  }
  out.synthetic_count = static_cast<int>(needed);
  return out;
}

}  // namespace roadsafe
