#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace roadsafe {

struct ClassMetrics {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  long support = 0;  // truth count for this class
  long tp = 0, fp = 0, fn = 0;
  bool precision_zero_division = false;
  bool recall_zero_division = false;
};

/// One-vs-rest scores for both classes of a single prediction vector.
/// Index 1 (HighRisk) is the positive class.
struct ScoreResult {
  ClassMetrics safe;       // class 0
  ClassMetrics high_risk;  // class 1
  long n = 0;
  double accuracy = 0.0;
  const ClassMetrics& for_class(int cls) const {
    return cls == 1 ? high_risk : safe;
  }
};

ScoreResult score(std::span<const int> y_true, std::span<const int> y_pred);

/// Fold-averaged report: unweighted mean over folds plus pooled confusion
/// totals, with the per-fold values kept for either convention.
struct ClassReport {
  struct PerClass {
    double precision = 0.0, recall = 0.0, f1 = 0.0;  // macro over folds
    std::vector<double> fold_precision, fold_recall, fold_f1;
    long support = 0;
    long tp = 0, fp = 0, fn = 0;  // pooled
  };
  PerClass safe, high_risk;
  ScoreResult pooled;
  int n_folds = 0;
  const PerClass& for_class(int cls) const {
    return cls == 1 ? high_risk : safe;
  }
};

ClassReport aggregate_folds(const std::vector<ScoreResult>& folds);

struct BaselineReport {
  ClassReport report;           // simulated draws, scored like the model
  double analytic_safe = 0.0;   // expected P = R = F1 = class prior
  double analytic_high_risk = 0.0;
};

/// Predictions drawn i.i.d. from the training class distribution and scored
/// against y_true. With `repetitions` > 1 the metric means over repeated
/// draws are reported (each repetition is one fold entry).
BaselineReport stratified_baseline(double train_high_risk_frac,
                                   std::span<const int> y_true,
                                   std::uint64_t seed, int repetitions = 1);

}  // namespace roadsafe
