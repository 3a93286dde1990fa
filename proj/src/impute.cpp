#include "roadsafe/impute.hpp"

#include <Eigen/SVD>

#include <cmath>
#include <stdexcept>

namespace roadsafe {

ThinSvd thin_svd(const MatrixXd& a) {
  Eigen::BDCSVD<MatrixXd> svd(a, Eigen::ComputeThinU | Eigen::ComputeThinV);
  ThinSvd out{svd.matrixU(), svd.singularValues(), svd.matrixV()};
  for (Eigen::Index j = 0; j < out.u.cols(); ++j) {
    for (Eigen::Index i = 0; i < out.u.rows(); ++i) {
      if (out.u(i, j) != 0.0) {
        if (out.u(i, j) < 0.0) {
          out.u.col(j) = -out.u.col(j);
          out.v.col(j) = -out.v.col(j);
        }
        break;
      }
    }
  }
  return out;
}

MatrixXd soft_impute_values(const MatrixXd& x, const ImputeConfig& config,
                            ImputeReport* report) {
  if (x.rows() < 2) throw std::invalid_argument("soft_impute needs >= 2 rows");
  if (!(config.tol > 0.0) || config.max_iters < 1 || !(config.lambda > 0.0)) {
    throw std::invalid_argument("invalid impute config");
  }

  const Eigen::Index rows = x.rows(), cols = x.cols();
  const auto observed = x.array().isNaN().select(0.0, 1.0).eval();

  VectorXd mean = VectorXd::Zero(cols);
  VectorXd scale = VectorXd::Ones(cols);
  for (Eigen::Index c = 0; c < cols; ++c) {
    const double n_obs = observed.col(c).sum();
    if (n_obs == 0.0) {
      throw std::invalid_argument("column " + std::to_string(c) +
                                  " has no observed values");
    }
    if (config.standardize) {
      double sum = 0.0, sumsq = 0.0;
      for (Eigen::Index r = 0; r < rows; ++r) {
        if (observed(r, c) > 0.0) {
          sum += x(r, c);
          sumsq += x(r, c) * x(r, c);
        }
      }
      mean(c) = sum / n_obs;
      const double var = sumsq / n_obs - mean(c) * mean(c);
      scale(c) = var > 1e-24 ? std::sqrt(var) : 1.0;
    }
  }

  ImputeReport local;
  if ((observed.array() > 0.0).all()) {
    // nothing to fill; the restore step would undo any smoothing anyway
    local.converged = true;
    if (report) *report = local;
    return x;
  }

  MatrixXd xs = x;
  for (Eigen::Index c = 0; c < cols; ++c) {
    for (Eigen::Index r = 0; r < rows; ++r) {
      if (observed(r, c) > 0.0) {
        xs(r, c) = (x(r, c) - mean(c)) / scale(c);
      } else {
        xs(r, c) = 0.0;  // placeholder; overwritten from Z below
      }
    }
  }

  MatrixXd z = MatrixXd::Zero(rows, cols);
  // start from observed values with zeros (= column means) in the holes
  MatrixXd work = xs;

  for (int iter = 0; iter < config.max_iters; ++iter) {
    const ThinSvd svd = thin_svd(work);
    const VectorXd thresholded =
        (svd.s.array() - config.lambda).max(0.0).matrix();
    MatrixXd z_new = svd.u * thresholded.asDiagonal() * svd.v.transpose();

    double resid = 0.0;
    for (Eigen::Index c = 0; c < cols; ++c) {
      for (Eigen::Index r = 0; r < rows; ++r) {
        if (observed(r, c) > 0.0) {
          const double d = xs(r, c) - z_new(r, c);
          resid += d * d;
        }
      }
    }
    local.objective.push_back(0.5 * resid + config.lambda * thresholded.sum());

    const double znorm = z.norm();
    const double delta = (z_new - z).norm() / std::max(znorm, 1e-12);
    z = std::move(z_new);
    local.iterations = iter + 1;
    local.final_delta = delta;

    // next iterate: observed cells pinned, missing cells from Z
    for (Eigen::Index c = 0; c < cols; ++c) {
      for (Eigen::Index r = 0; r < rows; ++r) {
        work(r, c) = observed(r, c) > 0.0 ? xs(r, c) : z(r, c);
      }
    }

    if (iter > 0 && delta < config.tol) {
      local.converged = true;
      break;
    }
  }

  MatrixXd out(rows, cols);
  for (Eigen::Index c = 0; c < cols; ++c) {
    for (Eigen::Index r = 0; r < rows; ++r) {
      out(r, c) = observed(r, c) > 0.0 ? x(r, c)
                                       : z(r, c) * scale(c) + mean(c);
    }
  }
  if (report) *report = local;
  return out;
}

FeatureMatrix soft_impute(const FeatureMatrix& m, const ImputeConfig& config,
                          ImputeReport* report) {
  for (int c = 0; c < m.schema.width(); ++c) {
    if (m.values.col(c).array().isNaN().all()) {
      throw std::invalid_argument("feature column '" +
                                  m.schema.column(c).name +
                                  "' has no observed values");
    }
  }

  FeatureMatrix out;
  out.schema = m.schema;
  out.ids = m.ids;
  out.values = soft_impute_values(m.values, config, report);

  for (int c = 0; c < m.schema.width(); ++c) {
    const FeatureKind kind = m.schema.column(c).kind;
    if (kind == FeatureKind::Real) continue;
    for (Eigen::Index r = 0; r < out.values.rows(); ++r) {
      if (!m.is_missing(r, c)) continue;  // observed cells stay bit-identical
      double& v = out.values(r, c);
      if (kind == FeatureKind::Binary) {
        v = v >= 0.5 ? 1.0 : 0.0;
      } else {
        v = std::round(v);
      }
    }
  }
  return out;
}

}  // namespace roadsafe
