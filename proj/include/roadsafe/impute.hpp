#pragma once

#include <vector>

#include "roadsafe/dense.hpp"
#include "roadsafe/features.hpp"

namespace roadsafe {

struct ImputeConfig {
  double lambda = 1.0;  // soft-threshold level, in standardized space
  int max_iters = 200;
  double tol = 1e-5;  // relative Frobenius change of the completion
  bool standardize = true;
};

struct ImputeReport {
  int iterations = 0;
  double final_delta = 0.0;
  bool converged = false;
  // 0.5*||P_obs(X - Z)||_F^2 + lambda*||Z||_* after every SVD step
  std::vector<double> objective;
};

struct ThinSvd {
  MatrixXd u;
  VectorXd s;
  MatrixXd v;
};

/// Thin SVD with a fixed sign convention: the first nonzero entry of each
/// left singular vector is non-negative, so repeated runs are bit-equal.
ThinSvd thin_svd(const MatrixXd& a);

/// Iterative soft-thresholded SVD completion over NaN-masked cells.
/// Observed cells of the result are bit-identical to the input.
MatrixXd soft_impute_values(const MatrixXd& x, const ImputeConfig& config,
                            ImputeReport* report = nullptr);

/// FeatureMatrix wrapper: imputes, then restores observed cells exactly,
/// clamps binary/one-hot cells at 0.5 and rounds integer columns (imputed
/// cells only).
FeatureMatrix soft_impute(const FeatureMatrix& m, const ImputeConfig& config,
                          ImputeReport* report = nullptr);

}  // namespace roadsafe
