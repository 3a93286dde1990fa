#include <algorithm>
#include <cmath>
#include <limits>
#include <set>
#include <string>

#include "doctest.h"
#include "roadsafe/spatial_cv.hpp"

using namespace roadsafe;

namespace {

constexpr double kDegPerKmLat = 1.0 / 111.31949079327358;

// brute-force verification of the distance rule, independent of the grid
double exhaustive_min_cross(const std::vector<GeoPoint>& pts,
                            const Fold& fold) {
  double best = std::numeric_limits<double>::infinity();
  for (int t : fold.test) {
    for (int r : fold.train) {
      best = std::min(best, haversine_m(pts[t], pts[r]));
    }
  }
  return best;
}

void check_partition(const FoldPlan& plan, int n) {
  std::set<int> seen;
  std::set<int> dropped;
  for (const auto& fold : plan.folds) {
    for (int i : fold.dropped) {
      CHECK(dropped.insert(i).second);
    }
  }
  for (const auto& fold : plan.folds) {
    for (int i : fold.test) {
      CHECK(seen.insert(i).second);  // exactly one test fold
      CHECK(!dropped.count(i));
    }
    std::set<int> train(fold.train.begin(), fold.train.end());
    for (int i : fold.test) CHECK(!train.count(i));
    for (int i : dropped) CHECK(!train.count(i));
  }
  CHECK(seen.size() + dropped.size() == static_cast<std::size_t>(n));
}

std::vector<GeoPoint> grid_points(int side, double spacing_km) {
  std::vector<GeoPoint> pts;
  for (int i = 0; i < side; ++i) {
    for (int j = 0; j < side; ++j) {
      pts.emplace_back(45.0 + i * spacing_km * kDegPerKmLat,
                       10.0 + j * spacing_km * kDegPerKmLat /
                                  std::cos(45.0 * 0.017453292519943295));
    }
  }
  return pts;
}

std::vector<int> patterned_labels(std::size_t n, int every) {
  std::vector<int> labels(n, 0);
  for (std::size_t i = 0; i < n; ++i) {
    if (static_cast<int>(i) % every == 0) labels[i] = 1;
  }
  return labels;
}

}  // namespace

TEST_CASE("1 km grid needs no swaps and satisfies the rule directly") {
  const auto pts = grid_points(10, 1.0);
  const auto labels = patterned_labels(pts.size(), 7);
  const FoldPlan plan = build_folds(pts, labels, {10, 500.0, 42});

  CHECK(plan.total_swaps == 0);
  CHECK(plan.total_dropped == 0);
  check_partition(plan, static_cast<int>(pts.size()));
  for (const auto& fold : plan.folds) {
    CHECK(fold.achieved_min_dist_m >= 500.0);
    const double brute = exhaustive_min_cross(pts, fold);
    CHECK(fold.achieved_min_dist_m == doctest::Approx(brute).epsilon(1e-9));
    CHECK(brute >= 990.0);  // grid spacing
  }
}

TEST_CASE("clustered points 100 m apart: final plan honors the 500 m rule") {
  // 8 tight chains of 25 points (100 m pitch), chains 10 km apart
  std::vector<GeoPoint> pts;
  for (int c = 0; c < 8; ++c) {
    for (int i = 0; i < 25; ++i) {
      pts.emplace_back(45.0 + (c * 10.0 + i * 0.1) * kDegPerKmLat, 10.0);
    }
  }
  const auto labels = patterned_labels(pts.size(), 5);
  const FoldPlan plan = build_folds(pts, labels, {10, 500.0, 7});

  check_partition(plan, static_cast<int>(pts.size()));
  int retained = 0;
  for (const auto& fold : plan.folds) retained += static_cast<int>(fold.test.size());
  CHECK(retained > 0);
  for (const auto& fold : plan.folds) {
    if (fold.test.empty() || fold.train.empty()) continue;
    const double brute = exhaustive_min_cross(pts, fold);
    CHECK(brute >= 500.0);
    CHECK(fold.achieved_min_dist_m >= 500.0);
  }
}

TEST_CASE("pre-swap stratification stays within two points of global") {
  const auto pts = grid_points(12, 1.0);  // 144 points
  const auto labels = patterned_labels(pts.size(), 6);
  double global = 0.0;
  for (int v : labels) global += v;
  global /= static_cast<double>(labels.size());

  const FoldPlan plan = build_folds(pts, labels, {10, 500.0, 3});
  for (const auto& fold : plan.folds) {
    CHECK(std::abs(fold.pre_swap_minority_frac - global) <= 0.02 + 1e-9);
  }
}

TEST_CASE("a close pair ends co-folded or dropped") {
  for (std::uint64_t seed : {1ULL, 2ULL, 3ULL}) {
    auto pts = grid_points(5, 2.0);  // 25 well-separated points
    pts.emplace_back(pts[0].lat + 0.1 * kDegPerKmLat, pts[0].lon);  // 100 m pair
    auto labels = patterned_labels(pts.size(), 4);
    labels[0] = 1;
    labels[pts.size() - 1] = 1;  // same class so a swap partner can exist

    const FoldPlan plan = build_folds(pts, labels, {5, 500.0, seed});
    check_partition(plan, static_cast<int>(pts.size()));
    for (const auto& fold : plan.folds) {
      if (fold.test.empty() || fold.train.empty()) continue;
      CHECK(exhaustive_min_cross(pts, fold) >= 500.0);
    }
    // the pair is either together in one test fold or one of them is gone
    int fold_a = -1, fold_b = -1;
    bool dropped_any = false;
    for (std::size_t f = 0; f < plan.folds.size(); ++f) {
      for (int i : plan.folds[f].test) {
        if (i == 0) fold_a = static_cast<int>(f);
        if (i == static_cast<int>(pts.size()) - 1) fold_b = static_cast<int>(f);
      }
      for (int i : plan.folds[f].dropped) {
        if (i == 0 || i == static_cast<int>(pts.size()) - 1) dropped_any = true;
      }
    }
    CHECK((dropped_any || fold_a == fold_b));
  }
}

TEST_CASE("fixed seed reproduces the identical plan") {
  const auto pts = grid_points(8, 0.3);  // close enough to force repairs
  const auto labels = patterned_labels(pts.size(), 5);
  const FoldPlan a = build_folds(pts, labels, {10, 500.0, 11});
  const FoldPlan b = build_folds(pts, labels, {10, 500.0, 11});
  REQUIRE(a.folds.size() == b.folds.size());
  for (std::size_t f = 0; f < a.folds.size(); ++f) {
    CHECK(a.folds[f].test == b.folds[f].test);
    CHECK(a.folds[f].train == b.folds[f].train);
    CHECK(a.folds[f].dropped == b.folds[f].dropped);
  }
  const FoldPlan c = build_folds(pts, labels, {10, 500.0, 12});
  bool any_diff = false;
  for (std::size_t f = 0; f < a.folds.size(); ++f) {
    if (a.folds[f].test != c.folds[f].test) any_diff = true;
  }
  CHECK(any_diff);
}

TEST_CASE("plan serializes with ids and distances") {
  const auto pts = grid_points(5, 1.0);
  const auto labels = patterned_labels(pts.size(), 4);
  const FoldPlan plan = build_folds(pts, labels, {5, 500.0, 9});
  std::vector<std::string> ids;
  for (std::size_t i = 0; i < pts.size(); ++i) ids.push_back("seg" + std::to_string(i));
  const std::string json = fold_plan_to_json(plan, ids);
  CHECK(json.find("\"seg0\"") != std::string::npos);
  CHECK(json.find("achieved_min_dist_m") != std::string::npos);
  CHECK(json.find("\"seed\": 9") != std::string::npos);
}

TEST_CASE("invalid configurations raise") {
  const auto pts = grid_points(3, 1.0);
  const auto labels = patterned_labels(pts.size(), 3);
  CHECK_THROWS_AS(build_folds(pts, labels, {10, 0.0, 1}), std::invalid_argument);
  CHECK_THROWS_AS(build_folds(pts, labels, {10, -5.0, 1}), std::invalid_argument);
  CHECK_THROWS_AS(build_folds(pts, labels, {25, 500.0, 1}), std::invalid_argument);
  CHECK_THROWS_AS(build_folds(pts, labels, {1, 500.0, 1}), std::invalid_argument);
}
