#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "roadsafe/features.hpp"
#include "roadsafe/gbt.hpp"
#include "roadsafe/geo.hpp"
#include "roadsafe/impute.hpp"
#include "roadsafe/metrics.hpp"
#include "roadsafe/smote.hpp"
#include "roadsafe/spatial_cv.hpp"

namespace roadsafe {

enum class FeatureSet { All, OsmOnly };

struct PipelineCvConfig {
  int folds = 10;
  double min_dist_m = 500.0;
};

struct EvalConfig {
  FeatureSet feature_set = FeatureSet::All;
  ImputeConfig impute;
  SmoteConfig smote;  // per-fold seed is global_seed ^ fold_index
  GbtConfig gbt;
  PipelineCvConfig cv;
  std::uint64_t seed = 0;
  int jobs = 0;  // worker pool size; 0 = logical cores
  int baseline_repetitions = 1;
};

class SchemaMismatchError : public std::runtime_error {
 public:
  explicit SchemaMismatchError(const std::string& what)
      : std::runtime_error(what) {}
};

/// Feature rows joined with labels and midpoints by segment id, in feature
/// row order (sorted by id upstream).
struct Dataset {
  std::vector<std::string> ids;
  FeatureMatrix features;
  std::vector<int> y;
  std::vector<GeoPoint> midpoints;
  int unlabeled_rows = 0;  // feature rows without a label or midpoint
};

Dataset join_dataset(const FeatureMatrix& features,
                     const std::vector<std::pair<std::string, SafetyLabel>>& labels,
                     const std::vector<RoadSegment>& segments);

struct FoldOutcome {
  int fold = 0;
  ScoreResult model;
  ScoreResult baseline;
  double baseline_analytic_high_risk = 0.0;
  int train_rows = 0;
  int train_rows_after_smote = 0;
  int test_rows = 0;          // must equal test_rows_scored
  int test_rows_scored = 0;   // resampling never touches the test partition
};

struct EvalResult {
  FeatureSet feature_set = FeatureSet::All;
  ClassReport model;
  ClassReport baseline;
  double baseline_analytic_high_risk = 0.0;
  double baseline_analytic_safe = 0.0;
  FoldPlan plan;
  ImputeReport impute;
  std::vector<FoldOutcome> folds;
  std::vector<std::string> ids;  // joined row ids, for the plan serialization
  std::string config_hash;
  std::uint64_t seed = 0;
  int unlabeled_rows = 0;
};

std::string eval_config_hash(const EvalConfig& config);

/// impute -> fold plan -> per fold (SMOTE on train -> GBT -> score test),
/// with the stratified baseline scored on the same test partitions.
EvalResult run_evaluation(const FeatureMatrix& features,
                          const std::vector<std::pair<std::string, SafetyLabel>>& labels,
                          const std::vector<RoadSegment>& segments,
                          const EvalConfig& config);

std::string eval_result_to_json(const EvalResult& result);
std::string eval_result_to_text(const EvalResult& result);

struct TrainOutput {
  GbtModel model;
  ImputeReport impute;
  GbtTrainReport train;
};

/// Full-data training for deployment: impute -> SMOTE -> GBT.
TrainOutput train_full(const FeatureMatrix& features,
                       const std::vector<std::pair<std::string, SafetyLabel>>& labels,
                       const EvalConfig& config);

struct Predictions {
  std::vector<std::string> ids;
  VectorXd proba;
  std::vector<int> label;  // proba >= 0.5
};

/// Imputes the batch, checks the schema fingerprint, then scores.
Predictions predict_batch(const GbtModel& model, const FeatureMatrix& features,
                          const ImputeConfig& impute_config);

}  // namespace roadsafe
