#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "roadsafe/geo.hpp"

namespace roadsafe {

struct SpatialCvConfig {
  int n_folds = 10;
  double min_dist_m = 500.0;
  std::uint64_t seed = 0;
};

struct Fold {
  std::vector<int> train;    // row indices
  std::vector<int> test;
  std::vector<int> dropped;  // removed from the experiment while fixing this fold
  // min over (test, train) haversine pairs; +inf when a side is empty
  double achieved_min_dist_m = 0.0;
  double pre_swap_minority_frac = 0.0;
  double test_minority_frac = 0.0;
  int swaps = 0;
};

struct FoldPlan {
  std::vector<Fold> folds;
  double min_dist_m = 500.0;
  std::uint64_t seed = 0;
  int total_swaps = 0;
  int total_dropped = 0;
};

/// Stratified assignment into n_folds, then a greedy repair pass per fold:
/// while a test sample sits closer than min_dist_m to a training sample,
/// the worst offender is swapped with a same-class train partner that keeps
/// the distance rule, or dropped when no partner exists. The final plan has no
/// cross-fold pair closer than min_dist_m among non-dropped samples.
FoldPlan build_folds(const std::vector<GeoPoint>& points,
                     const std::vector<int>& labels,
                     const SpatialCvConfig& config);

std::string fold_plan_to_json(const FoldPlan& plan,
                              const std::vector<std::string>& ids);

}  // namespace roadsafe
