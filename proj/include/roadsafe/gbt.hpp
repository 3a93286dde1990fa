#pragma once

#include <cmath>
#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "roadsafe/dense.hpp"

namespace roadsafe {

struct GbtConfig {
  int n_trees = 200;
  double learning_rate = 0.1;
  int max_depth = 6;
  double lambda_l2 = 1.0;
  double gamma = 0.0;
  double min_child_weight = 1.0;
  std::uint64_t seed = 0;  // reserved for optional subsampling
};

// Internal node when feature >= 0, else leaf. Leaf values carry the
// learning rate already applied.
struct TreeNode {
  int feature = -1;
  double threshold = 0.0;
  int left = -1;
  int right = -1;
  double leaf = 0.0;
  bool is_leaf() const { return feature < 0; }
};

struct Tree {
  std::vector<TreeNode> nodes;  // nodes[0] is the root
  double value(const Eigen::Ref<const Eigen::RowVectorXd>& row) const;
  int depth() const;
};

struct GbtModel {
  double base_score = 0.0;  // raw log-odds
  GbtConfig config;
  std::uint64_t schema_hash = 0;
  int n_features = 0;
  std::vector<Tree> trees;
};

struct GbtTrainReport {
  std::vector<double> train_loss;  // mean logistic loss after each round
  int rounds_completed = 0;
  bool loss_monotone = true;
  bool stopped_early = false;  // no split had positive gain
};

inline double sigmoid(double x) {
  if (x >= 0.0) {
    const double e = std::exp(-x);
    return 1.0 / (1.0 + e);
  }
  const double e = std::exp(x);
  return e / (1.0 + e);
}

/// Second-order split gain for logistic boosting.
double split_gain(double g_left, double h_left, double g_right, double h_right,
                  double lambda_l2, double gamma);
double leaf_weight(double g_sum, double h_sum, double lambda_l2);

/// Exact greedy training: every midpoint between consecutive distinct
/// feature values is a candidate threshold; ties are broken toward the
/// lower feature index, then the lower threshold.
GbtModel train_gbt(const Eigen::Ref<const MatrixXd>& x,
                   const std::vector<int>& y, const GbtConfig& config,
                   std::uint64_t schema_hash = 0,
                   GbtTrainReport* report = nullptr);

VectorXd predict_raw(const GbtModel& model,
                     const Eigen::Ref<const MatrixXd>& x);
VectorXd predict_proba(const GbtModel& model,
                       const Eigen::Ref<const MatrixXd>& x);

std::string model_to_json(const GbtModel& model);
GbtModel model_from_json(std::istream& in);
void save_model(const std::string& path, const GbtModel& model);
GbtModel load_model(const std::string& path);

}  // namespace roadsafe
