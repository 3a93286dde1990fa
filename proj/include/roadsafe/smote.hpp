#pragma once

#include <cstdint>
#include <vector>

#include "roadsafe/dense.hpp"

namespace roadsafe {

struct SmoteConfig {
  int k_neighbors = 5;
  // minority/majority count ratio after resampling
  double target_ratio = 1.0;
  std::uint64_t seed = 0;
};

struct SmoteResult {
  MatrixXd x;           // original rows first, synthetic rows appended
  std::vector<int> y;
  int synthetic_count = 0;
  int k_used = 0;
  bool k_reduced = false;
};

/// Appends synthetic minority rows s = x_i + u * (x_nn - x_i), u ~ U(0,1),
/// with x_nn drawn uniformly from the k nearest minority neighbors of x_i.
/// Neighbor distances are Euclidean in column-standardized space; the
/// interpolation itself happens in the input space, so every synthetic row
/// lies on the segment between two real minority rows. Base rows are cycled
/// round-robin in seeded-shuffled order. Input must be fully dense.
SmoteResult smote_oversample(const Eigen::Ref<const MatrixXd>& x,
                             const std::vector<int>& y,
                             const SmoteConfig& config);

}  // namespace roadsafe
