#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "roadsafe/dense.hpp"
#include "roadsafe/features.hpp"
#include "roadsafe/geo.hpp"

namespace roadsafe {

struct SynthConfig {
  int n_segments = 10000;
  double minority_frac = 0.08;  // share of high-risk labels after noise
  // feature or one-hot group name -> fraction of rows masked missing
  std::map<std::string, double> missing_rates;
  double spatial_cluster_km = 5.0;  // cluster radius
  double label_noise = 0.05;        // label flip fraction
  std::uint64_t seed = 0;
  bool with_traffic = true;
};

/// Bundled regional presets (hr, gr, sl, nl): class imbalance and
/// per-feature missingness profiles.
SynthConfig country_preset(std::string_view code);

struct SynthData {
  std::vector<RoadSegment> segments;
  FeatureMatrix features;       // masked per missing_rates
  std::vector<int> labels;      // aligned with features.ids, 1 = high risk
  std::vector<int> labels_noise_free;
  std::vector<double> latent_risk;  // the generating score, alignment as above
};

/// Segments in well-separated spatial clusters; labels derive from a known
/// linear-plus-threshold rule over smoothness, maxspeed, lit and
/// reach_factor, calibrated so the post-noise minority share matches the
/// config. Deterministic per seed.
SynthData generate(const SynthConfig& config);

}  // namespace roadsafe
