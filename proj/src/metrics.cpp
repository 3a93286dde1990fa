#include "roadsafe/metrics.hpp"

#include <stdexcept>

#include "roadsafe/rng.hpp"

namespace roadsafe {

namespace {

ClassMetrics class_metrics(long tp, long fp, long fn, long support) {
  ClassMetrics m;
  m.tp = tp;
  m.fp = fp;
  m.fn = fn;
  m.support = support;
  if (tp + fp > 0) {
    m.precision = static_cast<double>(tp) / static_cast<double>(tp + fp);
  } else {
    m.precision_zero_division = true;
  }
  if (tp + fn > 0) {
    m.recall = static_cast<double>(tp) / static_cast<double>(tp + fn);
  } else {
    m.recall_zero_division = true;
  }
  if (m.precision + m.recall > 0.0) {
    m.f1 = 2.0 * m.precision * m.recall / (m.precision + m.recall);
  }
  return m;
}

}  // namespace

ScoreResult score(std::span<const int> y_true, std::span<const int> y_pred) {
  if (y_true.size() != y_pred.size()) {
    throw std::invalid_argument("score: length mismatch");
  }
  if (y_true.empty()) {
    throw std::invalid_argument("score: empty input");
  }
  long tp1 = 0, fp1 = 0, fn1 = 0, tn1 = 0;
  for (std::size_t i = 0; i < y_true.size(); ++i) {
    const bool t = y_true[i] == 1;
    const bool p = y_pred[i] == 1;
    if (t && p) ++tp1;
    else if (!t && p) ++fp1;
    else if (t && !p) ++fn1;
    else ++tn1;
  }
  ScoreResult r;
  r.n = static_cast<long>(y_true.size());
  r.high_risk = class_metrics(tp1, fp1, fn1, tp1 + fn1);
  // one-vs-rest for the Safe class mirrors the confusion matrix
  r.safe = class_metrics(tn1, fn1, fp1, tn1 + fp1);
  r.accuracy = static_cast<double>(tp1 + tn1) / static_cast<double>(r.n);
  return r;
}

ClassReport aggregate_folds(const std::vector<ScoreResult>& folds) {
  if (folds.empty()) {
    throw std::invalid_argument("aggregate_folds: no folds");
  }
  ClassReport report;
  report.n_folds = static_cast<int>(folds.size());

  long tp1 = 0, fp1 = 0, fn1 = 0, tn1 = 0;
  for (const auto& fold : folds) {
    for (int cls = 0; cls <= 1; ++cls) {
      const ClassMetrics& m = fold.for_class(cls);
      auto& agg = cls == 1 ? report.high_risk : report.safe;
      agg.fold_precision.push_back(m.precision);
      agg.fold_recall.push_back(m.recall);
      agg.fold_f1.push_back(m.f1);
      agg.support += m.support;
    }
    tp1 += fold.high_risk.tp;
    fp1 += fold.high_risk.fp;
    fn1 += fold.high_risk.fn;
    tn1 += fold.safe.tp;
  }
  for (int cls = 0; cls <= 1; ++cls) {
    auto& agg = cls == 1 ? report.high_risk : report.safe;
    double sp = 0.0, sr = 0.0, sf = 0.0;
    for (std::size_t i = 0; i < agg.fold_precision.size(); ++i) {
      sp += agg.fold_precision[i];
      sr += agg.fold_recall[i];
      sf += agg.fold_f1[i];
    }
    const auto k = static_cast<double>(folds.size());
    agg.precision = sp / k;
    agg.recall = sr / k;
    agg.f1 = sf / k;
  }
  report.high_risk.tp = tp1;
  report.high_risk.fp = fp1;
  report.high_risk.fn = fn1;
  report.safe.tp = tn1;
  report.safe.fp = fn1;
  report.safe.fn = fp1;

  report.pooled.n = tp1 + fp1 + fn1 + tn1;
  report.pooled.high_risk = class_metrics(tp1, fp1, fn1, tp1 + fn1);
  report.pooled.safe = class_metrics(tn1, fn1, fp1, tn1 + fp1);
  report.pooled.accuracy =
      report.pooled.n
          ? static_cast<double>(tp1 + tn1) / static_cast<double>(report.pooled.n)
          : 0.0;
  return report;
}

BaselineReport stratified_baseline(double train_high_risk_frac,
                                   std::span<const int> y_true,
                                   std::uint64_t seed, int repetitions) {
  if (train_high_risk_frac < 0.0 || train_high_risk_frac > 1.0) {
    throw std::invalid_argument("baseline: class fraction out of range");
  }
  if (repetitions < 1) {
    throw std::invalid_argument("baseline: repetitions must be >= 1");
  }

  Rng rng(seed);
  std::vector<ScoreResult> runs;
  std::vector<int> pred(y_true.size());
  runs.reserve(static_cast<std::size_t>(repetitions));
  for (int rep = 0; rep < repetitions; ++rep) {
    for (auto& p : pred) {
      p = rng.uniform01() < train_high_risk_frac ? 1 : 0;
    }
    runs.push_back(score(y_true, pred));
  }

  BaselineReport out;
  out.report = aggregate_folds(runs);
  out.analytic_high_risk = train_high_risk_frac;
  out.analytic_safe = 1.0 - train_high_risk_frac;
  return out;
}

}  // namespace roadsafe
