#include "roadsafe/synth.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <limits>
#include <numeric>
#include <stdexcept>

#include "roadsafe/rng.hpp"

namespace roadsafe {

SynthConfig country_preset(std::string_view code) {
  SynthConfig cfg;
  if (code == "hr") {
    cfg.minority_frac = 0.1171;
    cfg.missing_rates = {{"oneway", 0.092},
                         {"maxspeed", 0.332},
                         {"surface", 0.357},
                         {"smoothness", 0.653},
                         {"lit", 0.413}};
  } else if (code == "gr") {
    cfg.minority_frac = 0.0839;
    cfg.missing_rates = {{"oneway", 0.233},
                         {"maxspeed", 0.627},
                         {"surface", 0.431},
                         {"smoothness", 0.785},
                         {"lit", 0.472}};
  } else if (code == "sl") {
    cfg.minority_frac = 0.1631;
    cfg.missing_rates = {{"oneway", 0.1203},
                         {"maxspeed", 0.410},
                         {"surface", 0.449},
                         {"smoothness", 0.682},
                         {"lit", 0.458}};
  } else if (code == "nl") {
    cfg.minority_frac = 0.0800;
    cfg.missing_rates = {{"oneway", 0.197},
                         {"maxspeed", 0.514},
                         {"surface", 0.503},
                         {"smoothness", 0.735},
                         {"lit", 0.476}};
  } else {
    throw std::invalid_argument("unknown preset: " + std::string(code));
  }
  return cfg;
}

namespace {

constexpr double kKmPerDegLat = 111.31949079327358;

// first `count` entries of a seeded partial shuffle of 0..n-1
std::vector<int> sample_rows(int n, int count, Rng& rng) {
  std::vector<int> idx(static_cast<std::size_t>(n));
  std::iota(idx.begin(), idx.end(), 0);
  for (int i = 0; i < count; ++i) {
    const auto j =
        i + static_cast<int>(rng.below(static_cast<std::uint64_t>(n - i)));
    std::swap(idx[i], idx[j]);
  }
  idx.resize(static_cast<std::size_t>(count));
  return idx;
}

}  // namespace

SynthData generate(const SynthConfig& config) {
  const int n = config.n_segments;
  if (n < 100) throw std::invalid_argument("synth: need at least 100 segments");
  if (!(config.minority_frac > 0.0) || !(config.minority_frac < 1.0)) {
    throw std::invalid_argument("synth: minority_frac out of (0,1)");
  }
  if (config.label_noise < 0.0 || config.label_noise >= 0.5) {
    throw std::invalid_argument("synth: label_noise out of [0, 0.5)");
  }
  // pre-noise share that lands on the target after symmetric flips
  const double pre_frac = (config.minority_frac - config.label_noise) /
                          (1.0 - 2.0 * config.label_noise);
  if (!(pre_frac > 0.0) || !(pre_frac < 1.0)) {
    throw std::invalid_argument(
        "synth: minority fraction infeasible at this label_noise");
  }

  Rng rng(config.seed);
  SynthData out;
  out.features.schema = standard_schema(config.with_traffic);
  const FeatureSchema& schema = out.features.schema;
  out.features.values.setZero(n, schema.width());

  const int n_clusters = std::max(1, n / 250);
  const int grid_side =
      static_cast<int>(std::ceil(std::sqrt(static_cast<double>(n_clusters))));
  const double spacing_km = std::max(6.0 * config.spatial_cluster_km, 20.0);

  struct Cluster {
    GeoPoint center;
    double goodness = 0.5;
    double density = 0.5;
  };
  std::vector<Cluster> clusters(static_cast<std::size_t>(n_clusters));
  for (int c = 0; c < n_clusters; ++c) {
    const int gi = c / grid_side;
    const int gj = c % grid_side;
    const double jitter_km = 0.1 * spacing_km;
    const double y_km = gi * spacing_km + jitter_km * (rng.uniform01() - 0.5);
    const double x_km = gj * spacing_km + jitter_km * (rng.uniform01() - 0.5);
    const double lat = 45.0 + y_km / kKmPerDegLat;
    const double lon =
        10.0 + x_km / (kKmPerDegLat * std::cos(45.0 * 0.017453292519943295));
    clusters[c] = {GeoPoint(lat, lon), 0.15 + 0.70 * rng.uniform01(),
                   0.20 + 0.80 * rng.uniform01()};
  }

  const int col_oneway = schema.index_of("oneway");
  const int col_maxspeed = schema.index_of("maxspeed");
  const int col_smooth = schema.index_of("smoothness");
  const int col_lit = schema.index_of("lit");
  const int col_bridge = schema.index_of("bridge");
  const int col_lanes = schema.index_of("lanes");
  const int col_nodes = schema.index_of("nodes");
  const int col_area = schema.index_of("iso_area_km2");
  const int col_reach = schema.index_of("reach_factor");
  const int col_totpop = schema.index_of("totpop");

  // disc area reachable in 900 s at 130 km/h; iso_area stays consistent
  // with reach_factor by construction
  const double disc_km2 = M_PI * 32.5 * 32.5;

  auto& vals = out.features.values;
  out.features.ids.reserve(static_cast<std::size_t>(n));
  out.segments.reserve(static_cast<std::size_t>(n));
  out.latent_risk.resize(static_cast<std::size_t>(n));

  for (int i = 0; i < n; ++i) {
    char id[16];
    std::snprintf(id, sizeof(id), "s%07d", i);
    out.features.ids.emplace_back(id);

    const Cluster& cl = clusters[static_cast<std::size_t>(i % n_clusters)];
    const double theta = 2.0 * M_PI * rng.uniform01();
    const double radius_km =
        config.spatial_cluster_km * std::sqrt(rng.uniform01());
    const double lat = cl.center.lat + radius_km * std::sin(theta) / kKmPerDegLat;
    const double lon = cl.center.lon + radius_km * std::cos(theta) /
                                           (kKmPerDegLat *
                                            std::cos(cl.center.lat *
                                                     0.017453292519943295));
    out.segments.push_back({out.features.ids.back(), GeoPoint(lat, lon),
                            std::nullopt, std::nullopt});

    const double g = std::clamp(cl.goodness + 0.16 * rng.normal(), 0.02, 0.98);

    const double smooth = std::clamp(std::round(7.0 * g + 0.5 * rng.normal()), 0.0, 7.0);
    const double gs = std::clamp(g + 0.08 * rng.normal(), 0.0, 1.0);
    const double maxspeed = gs < 0.2 ? 30.0 : gs < 0.4 ? 50.0 : gs < 0.6 ? 70.0
                            : gs < 0.8 ? 90.0 : 110.0;
    const double lit = rng.uniform01() < 0.12 + 0.75 * g ? 1.0 : 0.0;
    const double reach =
        std::clamp(0.07 + 0.60 * g + 0.04 * rng.normal(), 0.01, 0.95);

    vals(i, col_smooth) = smooth;
    vals(i, col_maxspeed) = maxspeed;
    vals(i, col_lit) = lit;
    vals(i, col_reach) = reach;
    vals(i, col_area) = reach * disc_km2;
    vals(i, col_oneway) = rng.uniform01() < 0.10 + 0.15 * (1.0 - g) ? 1.0 : 0.0;
    vals(i, col_bridge) = rng.uniform01() < 0.03 ? 1.0 : 0.0;
    vals(i, col_lanes) = maxspeed >= 90.0 ? (rng.uniform01() < 0.5 ? 2.0 : 3.0)
                         : maxspeed >= 50.0 ? (rng.uniform01() < 0.7 ? 2.0 : 1.0)
                                            : 1.0;
    vals(i, col_nodes) = std::max(
        0.0, std::round(8.0 + 70.0 * cl.density * (0.4 + 0.6 * g) +
                        3.0 * rng.normal()));
    vals(i, col_totpop) = std::max(
        0.0, std::round(cl.density * (40000.0 * reach + 1500.0 * rng.normal())));

    // surface category tracks the same quality signal
    const double su = std::clamp(g + 0.06 * rng.normal(), 0.0, 1.0);
    const char* surface = rng.uniform01() < 0.02 ? "other"
                          : su >= 0.70 ? "asphalt"
                          : su >= 0.50 ? "concrete"
                          : su >= 0.40 ? "paving_stones"
                          : su >= 0.25 ? "gravel"
                          : su >= 0.12 ? "dirt"
                                       : "ground";
    for (const char* cat : kSurfaceCategories) {
      vals(i, schema.index_of(std::string("surface_") + cat)) =
          std::strcmp(surface, cat) == 0 ? 1.0 : 0.0;
    }

    const char* highway = "other";
    const double hu = rng.uniform01();
    if (maxspeed >= 110.0) highway = "motorway";
    else if (maxspeed >= 90.0) highway = hu < 0.6 ? "trunk" : "primary";
    else if (maxspeed >= 70.0) highway = hu < 0.5 ? "primary" : "secondary";
    else if (maxspeed >= 50.0) highway = hu < 0.4 ? "secondary"
                                        : hu < 0.7 ? "tertiary" : "residential";
    else highway = hu < 0.4 ? "residential"
                  : hu < 0.6 ? "unclassified"
                  : hu < 0.8 ? "service" : "track";
    for (const char* cat : kHighwayCategories) {
      vals(i, schema.index_of(std::string("highway_") + cat)) =
          std::strcmp(highway, cat) == 0 ? 1.0 : 0.0;
    }

    if (config.with_traffic) {
      const bool oneway = vals(i, col_oneway) > 0.5;
      vals(i, schema.index_of("direction")) =
          oneway ? (rng.uniform01() < 0.5 ? 0.0 : 1.0) : 2.0;
      vals(i, schema.index_of("aadt")) = std::max(
          0.0, std::round(cl.density * (500.0 + 40.0 * maxspeed) *
                          (1.0 + 0.15 * rng.normal())));
      const double mean_speed = std::max(
          5.0, std::round(maxspeed * (0.72 + 0.10 * g) + 2.0 * rng.normal()));
      vals(i, schema.index_of("mean_speed")) = mean_speed;
      vals(i, schema.index_of("p85_speed")) = std::round(
          mean_speed + std::max(0.0, 0.15 * mean_speed + rng.normal()));
    }

    const double reach_n = std::clamp((reach - 0.07) / 0.60, 0.0, 1.0);
    out.latent_risk[static_cast<std::size_t>(i)] =
        -(2.0 * smooth / 7.0 + 1.2 * maxspeed / 110.0 + 0.6 * lit +
          1.8 * reach_n);
  }

  // labels: top pre_frac share of the risk score, then seeded flips
  const int m_pre = static_cast<int>(std::llround(pre_frac * n));
  std::vector<int> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](int a, int b) {
    const double ra = out.latent_risk[a], rb = out.latent_risk[b];
    return ra > rb || (ra == rb && a < b);
  });
  out.labels_noise_free.assign(static_cast<std::size_t>(n), 0);
  for (int r = 0; r < m_pre; ++r) out.labels_noise_free[order[r]] = 1;

  out.labels = out.labels_noise_free;
  const int flips = static_cast<int>(std::llround(config.label_noise * n));
  for (int i : sample_rows(n, flips, rng)) {
    out.labels[static_cast<std::size_t>(i)] ^= 1;
  }

  // exact-count masking per feature, whole group for one-hot members
  for (const auto& [name, rate] : config.missing_rates) {
    if (rate < 0.0 || rate >= 1.0) {
      throw std::invalid_argument("synth: missing rate out of [0,1) for " + name);
    }
    std::vector<int> cols;
    for (int c = 0; c < schema.width(); ++c) {
      if (schema.column(c).name == name || schema.column(c).group == name) {
        cols.push_back(c);
      }
    }
    if (cols.empty()) {
      throw std::invalid_argument("synth: unknown feature in missing_rates: " +
                                  name);
    }
    const int masked = static_cast<int>(std::llround(rate * n));
    for (int row : sample_rows(n, masked, rng)) {
      for (int c : cols) {
        vals(row, c) = std::numeric_limits<double>::quiet_NaN();
      }
    }
  }

  return out;
}

}  // namespace roadsafe
