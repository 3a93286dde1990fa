#include <cmath>
#include <limits>

#include "doctest.h"
#include "roadsafe/impute.hpp"
#include "roadsafe/rng.hpp"

using namespace roadsafe;

namespace {
constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

FeatureMatrix wrap(const MatrixXd& values, std::vector<FeatureColumn> cols) {
  FeatureMatrix m;
  m.schema = FeatureSchema(std::move(cols));
  m.values = values;
  for (Eigen::Index r = 0; r < values.rows(); ++r) {
    m.ids.push_back("r" + std::to_string(r));
  }
  return m;
}
}  // namespace

TEST_CASE("fully observed matrix returns unchanged") {
  MatrixXd x(3, 2);
  x << 1.25, -2.0, 0.5, 4.0, 3.75, 0.125;
  ImputeReport report;
  const MatrixXd out = soft_impute_values(x, ImputeConfig{}, &report);
  CHECK(out == x);
  CHECK(report.converged);
  CHECK(report.iterations == 0);
}

TEST_CASE("rank-1 matrix with hidden cells is recovered") {
  VectorXd u(5), v(4);
  u << 1.0, 2.0, 3.0, 4.0, 5.0;
  v << 0.5, -1.0, 2.0, 1.5;
  const MatrixXd truth = u * v.transpose();

  MatrixXd masked = truth;
  masked(0, 0) = kNaN;
  masked(2, 1) = kNaN;
  masked(3, 3) = kNaN;
  masked(4, 2) = kNaN;

  ImputeConfig cfg;
  cfg.lambda = 0.01;
  cfg.standardize = false;
  cfg.max_iters = 2000;
  cfg.tol = 1e-10;
  const MatrixXd out = soft_impute_values(masked, cfg);
  CHECK((out - truth).cwiseAbs().maxCoeff() < 1e-2);
}

TEST_CASE("2x2 with one hole completes the rank-1 pattern") {
  MatrixXd x(2, 2);
  x << 1.0, 1.0, 1.0, kNaN;
  ImputeConfig cfg;
  cfg.lambda = 1e-4;
  cfg.standardize = false;
  cfg.max_iters = 5000;
  cfg.tol = 1e-12;
  const MatrixXd out = soft_impute_values(x, cfg);
  CHECK(out(1, 1) == doctest::Approx(1.0).epsilon(0.01));
}

TEST_CASE("observed cells are bit-identical and objective never increases") {
  Rng rng(31337);
  MatrixXd x(40, 8);
  for (Eigen::Index r = 0; r < x.rows(); ++r) {
    for (Eigen::Index c = 0; c < x.cols(); ++c) {
      x(r, c) = rng.normal() * (1.0 + static_cast<double>(c));
    }
  }
  MatrixXd masked = x;
  int hidden = 0;
  for (Eigen::Index r = 0; r < x.rows(); ++r) {
    for (Eigen::Index c = 0; c < x.cols(); ++c) {
      if (rng.uniform01() < 0.25) {
        masked(r, c) = kNaN;
        ++hidden;
      }
    }
  }
  REQUIRE(hidden > 0);

  ImputeReport report;
  const MatrixXd out = soft_impute_values(masked, ImputeConfig{}, &report);

  for (Eigen::Index r = 0; r < x.rows(); ++r) {
    for (Eigen::Index c = 0; c < x.cols(); ++c) {
      if (!std::isnan(masked(r, c))) {
        CHECK(out(r, c) == masked(r, c));  // bit-identical
      } else {
        CHECK(!std::isnan(out(r, c)));  // no missing cells remain
      }
    }
  }
  for (std::size_t i = 1; i < report.objective.size(); ++i) {
    CHECK(report.objective[i] <=
          report.objective[i - 1] + 1e-9 * std::max(1.0, report.objective[i - 1]));
  }
}

TEST_CASE("all-missing column raises with the column name") {
  MatrixXd x(3, 2);
  x << 1.0, kNaN, 2.0, kNaN, 3.0, kNaN;
  FeatureMatrix m = wrap(x, {{"ok", FeatureKind::Real, FeatureSource::Osm, ""},
                             {"gone", FeatureKind::Real, FeatureSource::Osm, ""}});
  try {
    soft_impute(m, ImputeConfig{});
    FAIL("expected error");
  } catch (const std::invalid_argument& e) {
    CHECK(std::string(e.what()).find("gone") != std::string::npos);
  }
}

TEST_CASE("binary cells clamp to {0,1}; integer cells round") {
  MatrixXd x(6, 3);
  x << 1, 5, 0.5,
       0, 7, 1.5,
       1, 6, 2.5,
       kNaN, kNaN, kNaN,
       0, 5, 3.5,
       1, 6, 1.25;
  FeatureMatrix m = wrap(x, {{"flag", FeatureKind::Binary, FeatureSource::Osm, ""},
                             {"count", FeatureKind::Integer, FeatureSource::Osm, ""},
                             {"value", FeatureKind::Real, FeatureSource::Osm, ""}});
  const FeatureMatrix out = soft_impute(m, ImputeConfig{});
  const double flag = out.values(3, 0);
  CHECK((flag == 0.0 || flag == 1.0));
  CHECK(out.values(3, 1) == std::round(out.values(3, 1)));
  // observed cells keep their exact values even in discrete columns
  CHECK(out.values(5, 2) == 1.25);
}

TEST_CASE("same input and config give identical output") {
  Rng rng(777);
  MatrixXd x(30, 6);
  for (Eigen::Index r = 0; r < x.rows(); ++r) {
    for (Eigen::Index c = 0; c < x.cols(); ++c) {
      x(r, c) = rng.normal();
      if (rng.uniform01() < 0.3) x(r, c) = kNaN;
    }
  }
  for (Eigen::Index c = 0; c < x.cols(); ++c) {
    x(0, c) = 1.0;  // keep every column observed somewhere
  }
  const MatrixXd a = soft_impute_values(x, ImputeConfig{});
  const MatrixXd b = soft_impute_values(x, ImputeConfig{});
  CHECK(a == b);
}

TEST_CASE("non-convergence at max_iters sets the warning flag") {
  Rng rng(5);
  MatrixXd x(20, 5);
  for (Eigen::Index r = 0; r < x.rows(); ++r) {
    for (Eigen::Index c = 0; c < x.cols(); ++c) {
      x(r, c) = rng.normal();
      if (rng.uniform01() < 0.3 && r > 0) x(r, c) = kNaN;
    }
  }
  ImputeConfig cfg;
  cfg.max_iters = 1;
  ImputeReport report;
  soft_impute_values(x, cfg, &report);
  CHECK(!report.converged);
  CHECK(report.iterations == 1);
}

TEST_CASE("thin SVD meets the reconstruction contract with fixed signs") {
  Rng rng(123456);
  MatrixXd a(50, 20);
  for (Eigen::Index r = 0; r < a.rows(); ++r) {
    for (Eigen::Index c = 0; c < a.cols(); ++c) {
      a(r, c) = rng.normal();
    }
  }
  const ThinSvd svd = thin_svd(a);
  const MatrixXd recon = svd.u * svd.s.asDiagonal() * svd.v.transpose();
  CHECK((a - recon).norm() <= 1e-8 * a.norm());
  for (Eigen::Index j = 0; j < svd.u.cols(); ++j) {
    for (Eigen::Index i = 0; i < svd.u.rows(); ++i) {
      if (svd.u(i, j) != 0.0) {
        CHECK(svd.u(i, j) > 0.0);
        break;
      }
    }
  }
}
