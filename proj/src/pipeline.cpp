#include "roadsafe/pipeline.hpp"

#include <algorithm>
#include <atomic>
#include <cinttypes>
#include <cstdio>
#include <map>
#include <sstream>
#include <thread>

#include "json.hpp"
#include "roadsafe/rng.hpp"

namespace roadsafe {

namespace {

constexpr std::uint64_t kBaselineStream = 0x9e3779b97f4a7c15ULL;

MatrixXd rows_subset(const MatrixXd& x, const std::vector<int>& rows) {
  MatrixXd out(static_cast<Eigen::Index>(rows.size()), x.cols());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    out.row(static_cast<Eigen::Index>(i)) = x.row(rows[i]);
  }
  return out;
}

std::string hex64(std::uint64_t h) {
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016" PRIx64, h);
  return std::string(buf);
}

nlohmann::ordered_json config_json(const EvalConfig& c) {
  nlohmann::ordered_json j;
  j["feature_set"] = c.feature_set == FeatureSet::All ? "all" : "osm_only";
  j["impute"] = {{"lambda", c.impute.lambda},
                 {"max_iters", c.impute.max_iters},
                 {"tol", c.impute.tol},
                 {"standardize", c.impute.standardize}};
  j["smote"] = {{"k_neighbors", c.smote.k_neighbors},
                {"target_ratio", c.smote.target_ratio}};
  j["gbt"] = {{"n_trees", c.gbt.n_trees},
              {"learning_rate", c.gbt.learning_rate},
              {"max_depth", c.gbt.max_depth},
              {"lambda_l2", c.gbt.lambda_l2},
              {"gamma", c.gbt.gamma},
              {"min_child_weight", c.gbt.min_child_weight}};
  j["cv"] = {{"folds", c.cv.folds}, {"min_dist_m", c.cv.min_dist_m}};
  j["seed"] = c.seed;
  j["baseline_repetitions"] = c.baseline_repetitions;
  return j;
}

nlohmann::ordered_json class_report_json(const ClassReport& r) {
  auto per_class = [](const ClassReport::PerClass& c) {
    return nlohmann::ordered_json{{"precision", c.precision},
                                  {"recall", c.recall},
                                  {"f1", c.f1},
                                  {"support", c.support},
                                  {"tp", c.tp},
                                  {"fp", c.fp},
                                  {"fn", c.fn},
                                  {"fold_precision", c.fold_precision},
                                  {"fold_recall", c.fold_recall},
                                  {"fold_f1", c.fold_f1}};
  };
  nlohmann::ordered_json j;
  j["high_risk"] = per_class(r.high_risk);
  j["safe"] = per_class(r.safe);
  j["pooled"] = {{"accuracy", r.pooled.accuracy},
                 {"high_risk_f1", r.pooled.high_risk.f1},
                 {"safe_f1", r.pooled.safe.f1}};
  j["n_folds"] = r.n_folds;
  return j;
}

}  // namespace

Dataset join_dataset(const FeatureMatrix& features,
                     const std::vector<std::pair<std::string, SafetyLabel>>& labels,
                     const std::vector<RoadSegment>& segments) {
  std::map<std::string, SafetyLabel> label_of(labels.begin(), labels.end());
  std::map<std::string, GeoPoint> point_of;
  for (const auto& s : segments) point_of.emplace(s.id, s.midpoint);

  Dataset out;
  out.features.schema = features.schema;
  std::vector<int> keep;
  for (std::size_t r = 0; r < features.ids.size(); ++r) {
    const auto lit = label_of.find(features.ids[r]);
    const auto pit = point_of.find(features.ids[r]);
    if (lit == label_of.end() || pit == point_of.end()) {
      ++out.unlabeled_rows;
      continue;
    }
    keep.push_back(static_cast<int>(r));
    out.ids.push_back(features.ids[r]);
    out.y.push_back(lit->second == SafetyLabel::HighRisk ? 1 : 0);
    out.midpoints.push_back(pit->second);
  }
  out.features.ids = out.ids;
  out.features.values = rows_subset(features.values, keep);
  return out;
}

std::string eval_config_hash(const EvalConfig& config) {
  return hex64(fnv1a64(config_json(config).dump()));
}

EvalResult run_evaluation(const FeatureMatrix& features_in,
                          const std::vector<std::pair<std::string, SafetyLabel>>& labels,
                          const std::vector<RoadSegment>& segments,
                          const EvalConfig& config) {
  const FeatureMatrix features = config.feature_set == FeatureSet::OsmOnly
                                     ? features_in.select_osm_only()
                                     : features_in;

  Dataset data = join_dataset(features, labels, segments);
  if (data.ids.empty()) {
    throw std::invalid_argument("evaluation: no labeled rows after join");
  }

  EvalResult result;
  result.feature_set = config.feature_set;
  result.seed = config.seed;
  result.config_hash = eval_config_hash(config);
  result.ids = data.ids;
  result.unlabeled_rows = data.unlabeled_rows;

  const FeatureMatrix imputed =
      soft_impute(data.features, config.impute, &result.impute);
  const std::uint64_t schema_hash = imputed.schema.hash();

  result.plan = build_folds(data.midpoints, data.y,
                            {config.cv.folds, config.cv.min_dist_m, config.seed});

  const int n_folds = static_cast<int>(result.plan.folds.size());
  result.folds.resize(static_cast<std::size_t>(n_folds));

  std::atomic<int> next{0};
  auto worker = [&]() {
    while (true) {
      const int f = next.fetch_add(1);
      if (f >= n_folds) break;
      const Fold& fold = result.plan.folds[static_cast<std::size_t>(f)];
      FoldOutcome outcome;
      outcome.fold = f;
      outcome.train_rows = static_cast<int>(fold.train.size());
      outcome.test_rows = static_cast<int>(fold.test.size());
      if (fold.test.empty() || fold.train.empty()) {
        result.folds[static_cast<std::size_t>(f)] = outcome;
        continue;
      }

      MatrixXd x_train = rows_subset(imputed.values, fold.train);
      std::vector<int> y_train;
      y_train.reserve(fold.train.size());
      for (int i : fold.train) y_train.push_back(data.y[i]);

      SmoteConfig smote_cfg = config.smote;
      smote_cfg.seed = config.seed ^ static_cast<std::uint64_t>(f);
      const SmoteResult resampled = smote_oversample(x_train, y_train, smote_cfg);
      outcome.train_rows_after_smote = static_cast<int>(resampled.x.rows());

      GbtConfig gbt_cfg = config.gbt;
      gbt_cfg.seed = config.seed ^ static_cast<std::uint64_t>(f);
      const GbtModel model =
          train_gbt(resampled.x, resampled.y, gbt_cfg, schema_hash);

      MatrixXd x_test = rows_subset(imputed.values, fold.test);
      std::vector<int> y_test;
      y_test.reserve(fold.test.size());
      for (int i : fold.test) y_test.push_back(data.y[i]);
      outcome.test_rows_scored = static_cast<int>(x_test.rows());

      const VectorXd proba = predict_proba(model, x_test);
      std::vector<int> pred(y_test.size());
      for (std::size_t i = 0; i < pred.size(); ++i) {
        pred[i] = proba(static_cast<Eigen::Index>(i)) >= 0.5 ? 1 : 0;
      }
      outcome.model = score(y_test, pred);

      double train_frac = 0.0;
      for (int y : y_train) train_frac += y;
      train_frac /= static_cast<double>(y_train.size());
      outcome.baseline_analytic_high_risk = train_frac;
      const BaselineReport base = stratified_baseline(
          train_frac, y_test,
          (config.seed ^ static_cast<std::uint64_t>(f)) ^ kBaselineStream,
          config.baseline_repetitions);
      outcome.baseline = base.report.pooled;

      result.folds[static_cast<std::size_t>(f)] = outcome;
    }
  };

  int jobs = config.jobs > 0
                 ? config.jobs
                 : static_cast<int>(std::thread::hardware_concurrency());
  jobs = std::clamp(jobs, 1, n_folds);
  std::vector<std::thread> pool;
  pool.reserve(static_cast<std::size_t>(jobs));
  for (int t = 0; t < jobs; ++t) pool.emplace_back(worker);
  for (auto& t : pool) t.join();

  std::vector<ScoreResult> model_scores, baseline_scores;
  double analytic = 0.0;
  int scored = 0;
  for (const auto& outcome : result.folds) {
    if (outcome.test_rows_scored == 0) continue;
    model_scores.push_back(outcome.model);
    baseline_scores.push_back(outcome.baseline);
    analytic += outcome.baseline_analytic_high_risk;
    ++scored;
  }
  if (scored == 0) {
    throw std::runtime_error("evaluation: every fold ended up empty");
  }
  result.model = aggregate_folds(model_scores);
  result.baseline = aggregate_folds(baseline_scores);
  result.baseline_analytic_high_risk = analytic / scored;
  result.baseline_analytic_safe = 1.0 - result.baseline_analytic_high_risk;
  return result;
}

std::string eval_result_to_json(const EvalResult& result) {
  nlohmann::ordered_json j;
  j["config_hash"] = result.config_hash;
  j["seed"] = result.seed;
  j["feature_set"] =
      result.feature_set == FeatureSet::All ? "all" : "osm_only";
  j["unlabeled_rows"] = result.unlabeled_rows;
  j["model"] = class_report_json(result.model);
  j["baseline"] = class_report_json(result.baseline);
  j["baseline_analytic"] = {{"high_risk", result.baseline_analytic_high_risk},
                            {"safe", result.baseline_analytic_safe}};
  j["impute"] = {{"iterations", result.impute.iterations},
                 {"converged", result.impute.converged},
                 {"final_delta", result.impute.final_delta}};
  auto& folds = j["folds"] = nlohmann::ordered_json::array();
  for (const auto& f : result.folds) {
    folds.push_back({{"fold", f.fold},
                     {"train_rows", f.train_rows},
                     {"train_rows_after_smote", f.train_rows_after_smote},
                     {"test_rows", f.test_rows},
                     {"test_rows_scored", f.test_rows_scored},
                     {"model_high_risk_f1", f.model.high_risk.f1},
                     {"model_safe_f1", f.model.safe.f1},
                     {"baseline_high_risk_f1", f.baseline.high_risk.f1},
                     {"baseline_safe_f1", f.baseline.safe.f1}});
  }
  j["plan"] = nlohmann::ordered_json::parse(
      fold_plan_to_json(result.plan, result.ids));
  return j.dump(2) + "\n";
}

std::string eval_result_to_text(const EvalResult& result) {
  const char* fs = result.feature_set == FeatureSet::All ? "all" : "osm_only";
  std::ostringstream out;
  char line[160];
  std::snprintf(line, sizeof(line), "%-10s %-9s %-15s %-15s %-15s\n", "Class",
                "Features", "Precision", "Recall", "F1-Score");
  out << line;
  auto row = [&](const char* name, const ClassReport::PerClass& m,
                 const ClassReport::PerClass& b) {
    char p[32], r[32], f[32];
    std::snprintf(p, sizeof(p), "%.2f (%.2f)", m.precision, b.precision);
    std::snprintf(r, sizeof(r), "%.2f (%.2f)", m.recall, b.recall);
    std::snprintf(f, sizeof(f), "%.2f (%.2f)", m.f1, b.f1);
    std::snprintf(line, sizeof(line), "%-10s %-9s %-15s %-15s %-15s\n", name,
                  fs, p, r, f);
    out << line;
  };
  row("High-risk", result.model.high_risk, result.baseline.high_risk);
  row("Safe", result.model.safe, result.baseline.safe);
  return out.str();
}

TrainOutput train_full(const FeatureMatrix& features,
                       const std::vector<std::pair<std::string, SafetyLabel>>& labels,
                       const EvalConfig& config) {
  std::map<std::string, SafetyLabel> label_of(labels.begin(), labels.end());
  std::vector<int> keep;
  std::vector<int> y;
  for (std::size_t r = 0; r < features.ids.size(); ++r) {
    auto it = label_of.find(features.ids[r]);
    if (it == label_of.end()) continue;
    keep.push_back(static_cast<int>(r));
    y.push_back(it->second == SafetyLabel::HighRisk ? 1 : 0);
  }
  if (keep.empty()) {
    throw std::invalid_argument("training: no labeled rows after join");
  }

  FeatureMatrix joined;
  joined.schema = config.feature_set == FeatureSet::OsmOnly
                      ? features.schema.without_traffic()
                      : features.schema;
  FeatureMatrix base = config.feature_set == FeatureSet::OsmOnly
                           ? features.select_osm_only()
                           : features;
  joined.values = rows_subset(base.values, keep);
  for (int r : keep) joined.ids.push_back(features.ids[r]);

  TrainOutput out;
  const FeatureMatrix imputed =
      soft_impute(joined, config.impute, &out.impute);

  SmoteConfig smote_cfg = config.smote;
  smote_cfg.seed = config.seed;
  const SmoteResult resampled = smote_oversample(imputed.values, y, smote_cfg);

  GbtConfig gbt_cfg = config.gbt;
  gbt_cfg.seed = config.seed;
  out.model = train_gbt(resampled.x, resampled.y, gbt_cfg,
                        imputed.schema.hash(), &out.train);
  return out;
}

Predictions predict_batch(const GbtModel& model, const FeatureMatrix& features,
                          const ImputeConfig& impute_config) {
  if (features.schema.hash() != model.schema_hash) {
    throw SchemaMismatchError(
        "feature schema does not match the model's schema fingerprint");
  }
  FeatureMatrix dense = features;
  if (features.values.hasNaN()) {
    dense = soft_impute(features, impute_config);
  }
  Predictions out;
  out.ids = features.ids;
  out.proba = predict_proba(model, dense.values);
  out.label.resize(out.ids.size());
  for (std::size_t i = 0; i < out.label.size(); ++i) {
    out.label[i] = out.proba(static_cast<Eigen::Index>(i)) >= 0.5 ? 1 : 0;
  }
  return out;
}

}  // namespace roadsafe
