#include "roadsafe/spatial_cv.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <set>
#include <stdexcept>
#include <unordered_map>

#include "json.hpp"
#include "roadsafe/rng.hpp"

namespace roadsafe {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kMetersPerDegLat = 111319.49079327358;

// flat lat/lon bucket grid sized to the distance threshold
class PointGrid {
 public:
  PointGrid(const std::vector<GeoPoint>& points, double cell_m)
      : points_(points) {
    double lat_sum = 0.0;
    for (const auto& p : points) lat_sum += p.lat;
    const double lat_ref =
        points.empty() ? 0.0 : lat_sum / static_cast<double>(points.size());
    coslat_ = std::max(0.01, std::cos(lat_ref * 0.017453292519943295));
    lat_deg_ = cell_m / kMetersPerDegLat;
    lon_deg_ = cell_m / (kMetersPerDegLat * coslat_);
    cell_m_ = cell_m;
    for (std::size_t i = 0; i < points.size(); ++i) {
      const auto cx = cell_floor(points[i].lat / lat_deg_);
      const auto cy = cell_floor(points[i].lon / lon_deg_);
      cx_min_ = std::min(cx_min_, cx);
      cx_max_ = std::max(cx_max_, cx);
      cy_min_ = std::min(cy_min_, cy);
      cy_max_ = std::max(cy_max_, cy);
      cells_[pack(cx, cy)].push_back(static_cast<int>(i));
    }
  }

  template <typename Visit>
  void visit_within(const GeoPoint& p, double radius_m, Visit&& visit) const {
    const double dlat = radius_m / kMetersPerDegLat;
    const double dlon = radius_m / (kMetersPerDegLat * coslat_);
    const auto cx0 = cell_floor((p.lat - dlat) / lat_deg_);
    const auto cx1 = cell_floor((p.lat + dlat) / lat_deg_);
    const auto cy0 = cell_floor((p.lon - dlon) / lon_deg_);
    const auto cy1 = cell_floor((p.lon + dlon) / lon_deg_);
    for (std::int32_t cx = cx0; cx <= cx1; ++cx) {
      for (std::int32_t cy = cy0; cy <= cy1; ++cy) {
        auto it = cells_.find(pack(cx, cy));
        if (it == cells_.end()) continue;
        for (int idx : it->second) visit(idx);
      }
    }
  }

  // nearest point accepted by `accept`, expanding ring search
  template <typename Accept>
  std::pair<int, double> nearest(const GeoPoint& p, Accept&& accept,
                                 double prune_bound) const {
    int best = -1;
    double best_d = prune_bound;
    const std::int32_t px = cell_floor(p.lat / lat_deg_);
    const std::int32_t py = cell_floor(p.lon / lon_deg_);
    auto scan = [&](std::int32_t cx, std::int32_t cy) {
      auto it = cells_.find(pack(cx, cy));
      if (it == cells_.end()) return;
      for (int idx : it->second) {
        if (!accept(idx)) continue;
        const double d = haversine_m(p, points_[idx]);
        if (d < best_d || (d == best_d && (best < 0 || idx < best))) {
          best = idx;
          best_d = d;
        }
      }
    };
    for (std::int32_t ring = 0;; ++ring) {
      // every occupied cell strictly inside the ring -> nothing new ahead
      const bool exhausted = px - ring < cx_min_ && px + ring > cx_max_ &&
                             py - ring < cy_min_ && py + ring > cy_max_;
      if (exhausted) break;
      // cells at this ring hold points at least (ring - 1) cells away
      if (std::isfinite(best_d) &&
          static_cast<double>(ring - 1) * cell_m_ > best_d) {
        break;
      }
      if (ring == 0) {
        scan(px, py);
      } else {
        for (std::int32_t cx = px - ring; cx <= px + ring; ++cx) {
          scan(cx, py - ring);
          scan(cx, py + ring);
        }
        for (std::int32_t cy = py - ring + 1; cy <= py + ring - 1; ++cy) {
          scan(px - ring, cy);
          scan(px + ring, cy);
        }
      }
    }
    return {best, best < 0 ? kInf : best_d};
  }

 private:
  static std::int32_t cell_floor(double v) {
    return static_cast<std::int32_t>(std::floor(v));
  }
  static std::uint64_t pack(std::int32_t cx, std::int32_t cy) {
    return (static_cast<std::uint64_t>(static_cast<std::uint32_t>(cx)) << 32) |
           static_cast<std::uint32_t>(cy);
  }

  const std::vector<GeoPoint>& points_;
  double coslat_ = 1.0;
  double lat_deg_ = 0.0;
  double lon_deg_ = 0.0;
  double cell_m_ = 0.0;
  std::int32_t cx_min_ = INT32_MAX, cx_max_ = INT32_MIN;
  std::int32_t cy_min_ = INT32_MAX, cy_max_ = INT32_MIN;
  std::unordered_map<std::uint64_t, std::vector<int>> cells_;
};

}  // namespace

FoldPlan build_folds(const std::vector<GeoPoint>& points,
                     const std::vector<int>& labels,
                     const SpatialCvConfig& config) {
  const int n = static_cast<int>(points.size());
  if (labels.size() != points.size()) {
    throw std::invalid_argument("build_folds: point/label count mismatch");
  }
  if (!(config.min_dist_m > 0.0)) {
    throw std::invalid_argument("build_folds: min_dist_m must be positive");
  }
  if (config.n_folds < 2) {
    throw std::invalid_argument("build_folds: need at least 2 folds");
  }
  if (n < config.n_folds) {
    throw std::invalid_argument("build_folds: fewer segments than folds");
  }

  const int k = config.n_folds;
  FoldPlan plan;
  plan.min_dist_m = config.min_dist_m;
  plan.seed = config.seed;
  plan.folds.resize(static_cast<std::size_t>(k));

  // stratified deal: per class, shuffled then dealt round-robin
  std::vector<int> assignment(static_cast<std::size_t>(n), 0);
  {
    Rng rng(config.seed);
    for (int cls = 0; cls <= 1; ++cls) {
      std::vector<int> members;
      for (int i = 0; i < n; ++i) {
        if (labels[i] == cls) members.push_back(i);
      }
      rng.shuffle(members);
      for (std::size_t j = 0; j < members.size(); ++j) {
        assignment[members[j]] = static_cast<int>(j % k);
      }
    }
  }

  const int minority_label = [&] {
    const auto ones = std::count(labels.begin(), labels.end(), 1);
    return ones * 2 <= n ? 1 : 0;
  }();
  for (int f = 0; f < k; ++f) {
    int size = 0, minority = 0;
    for (int i = 0; i < n; ++i) {
      if (assignment[i] == f) {
        ++size;
        if (labels[i] == minority_label) ++minority;
      }
    }
    plan.folds[f].pre_swap_minority_frac =
        size ? static_cast<double>(minority) / size : 0.0;
  }

  // pairs closer than min_dist_m ("close pairs") are the only constraints
  PointGrid grid(points, config.min_dist_m);
  std::vector<std::vector<int>> close(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    grid.visit_within(points[i], config.min_dist_m, [&](int j) {
      if (j == i) return;
      if (haversine_m(points[i], points[j]) < config.min_dist_m) {
        close[i].push_back(j);
      }
    });
    std::sort(close[i].begin(), close[i].end());
  }
  std::vector<int> constrained;  // samples with any close pair
  for (int i = 0; i < n; ++i) {
    if (!close[i].empty()) constrained.push_back(i);
  }

  std::vector<char> dropped(static_cast<std::size_t>(n), 0);
  std::vector<char> guarded(static_cast<std::size_t>(n), 0);

  auto live_degree = [&](int i) {
    int deg = 0;
    for (int j : close[i]) {
      if (!dropped[j]) ++deg;
    }
    return deg;
  };

  for (int f = 0; f < k; ++f) {
    while (true) {
      // worst offender: smallest cross-fold close distance in this fold's test
      int offender = -1;
      double offender_dist = kInf;
      for (int i : constrained) {
        if (dropped[i] || assignment[i] != f) continue;
        for (int j : close[i]) {
          if (dropped[j] || assignment[j] == f) continue;
          const double d = haversine_m(points[i], points[j]);
          if (d < offender_dist) {
            offender_dist = d;
            offender = i;
          }
        }
      }
      if (offender < 0) break;

      // a move can only help when every live close neighbor shares one fold
      int destination = -2;
      for (int j : close[offender]) {
        if (dropped[j]) continue;
        if (destination == -2) {
          destination = assignment[j];
        } else if (destination != assignment[j]) {
          destination = -1;
          break;
        }
      }

      int partner = -1;
      if (destination >= 0 && destination != f && !guarded[offender]) {
        for (int p = 0; p < n; ++p) {
          if (assignment[p] != destination || dropped[p] || guarded[p]) continue;
          if (labels[p] != labels[offender]) continue;
          if (live_degree(p) != 0) continue;  // stays >= min_dist from everything
          partner = p;
          break;
        }
      }

      if (partner >= 0) {
        assignment[offender] = destination;
        assignment[partner] = f;
        guarded[offender] = 1;
        guarded[partner] = 1;
        ++plan.folds[f].swaps;
        ++plan.total_swaps;
      } else {
        dropped[offender] = 1;
        plan.folds[f].dropped.push_back(offender);
        ++plan.total_dropped;
      }
    }
  }

  // coarse grid keeps the nearest-cross-fold search cheap when folds are
  // kilometres apart
  PointGrid coarse(points, 10.0 * config.min_dist_m);
  for (int f = 0; f < k; ++f) {
    auto& fold = plan.folds[f];
    int minority = 0;
    for (int i = 0; i < n; ++i) {
      if (dropped[i]) continue;
      if (assignment[i] == f) {
        fold.test.push_back(i);
        if (labels[i] == minority_label) ++minority;
      } else {
        fold.train.push_back(i);
      }
    }
    fold.test_minority_frac =
        fold.test.empty() ? 0.0
                          : static_cast<double>(minority) / fold.test.size();

    fold.achieved_min_dist_m = kInf;
    for (int i : fold.test) {
      auto [idx, d] = coarse.nearest(
          points[i],
          [&](int j) { return !dropped[j] && assignment[j] != f; },
          fold.achieved_min_dist_m);
      if (idx >= 0 && d < fold.achieved_min_dist_m) {
        fold.achieved_min_dist_m = d;
      }
    }
  }

  return plan;
}

std::string fold_plan_to_json(const FoldPlan& plan,
                              const std::vector<std::string>& ids) {
  nlohmann::ordered_json j;
  j["min_dist"] = plan.min_dist_m;
  j["seed"] = plan.seed;
  j["total_swaps"] = plan.total_swaps;
  j["total_dropped"] = plan.total_dropped;
  auto id_of = [&](int i) -> nlohmann::ordered_json {
    if (ids.empty()) return i;
    return ids[static_cast<std::size_t>(i)];
  };
  auto& folds = j["folds"] = nlohmann::ordered_json::array();
  for (const auto& fold : plan.folds) {
    nlohmann::ordered_json fj;
    auto& train = fj["train"] = nlohmann::ordered_json::array();
    for (int i : fold.train) train.push_back(id_of(i));
    auto& test = fj["test"] = nlohmann::ordered_json::array();
    for (int i : fold.test) test.push_back(id_of(i));
    auto& drop = fj["dropped"] = nlohmann::ordered_json::array();
    for (int i : fold.dropped) drop.push_back(id_of(i));
    fj["achieved_min_dist_m"] =
        std::isfinite(fold.achieved_min_dist_m)
            ? nlohmann::ordered_json(fold.achieved_min_dist_m)
            : nlohmann::ordered_json(nullptr);
    fj["pre_swap_minority_frac"] = fold.pre_swap_minority_frac;
    fj["test_minority_frac"] = fold.test_minority_frac;
    fj["swaps"] = fold.swaps;
    folds.push_back(std::move(fj));
  }
  return j.dump(2) + "\n";
}

}  // namespace roadsafe
