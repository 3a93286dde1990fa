#pragma once

#include <cmath>
#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "roadsafe/dense.hpp"
#include "roadsafe/geo.hpp"
#include "roadsafe/isochrone.hpp"
#include "roadsafe/osm.hpp"

namespace roadsafe {

enum class FeatureKind { Binary, Integer, Real };
enum class FeatureSource { Osm, Traffic };

struct FeatureColumn {
  std::string name;
  FeatureKind kind = FeatureKind::Real;
  FeatureSource source = FeatureSource::Osm;
  std::string group;  // non-empty marks a one-hot member
};

class FeatureSchema {
 public:
  FeatureSchema() = default;
  explicit FeatureSchema(std::vector<FeatureColumn> columns);

  int width() const { return static_cast<int>(columns_.size()); }
  const std::vector<FeatureColumn>& columns() const { return columns_; }
  const FeatureColumn& column(int i) const { return columns_[i]; }
  int index_of(std::string_view name) const;  // -1 when absent

  std::uint64_t hash() const;  // fingerprint over names/kinds/sources
  FeatureSchema without_traffic() const;

 private:
  std::vector<FeatureColumn> columns_;
};

/// Table 1 layout: highway/surface one-hot groups, ordinal smoothness,
/// binary oneway/lit/bridge, counts, isochrone metrics, then the four
/// traffic columns when requested.
FeatureSchema standard_schema(bool with_traffic);

inline constexpr const char* kHighwayCategories[] = {
    "motorway", "trunk",       "primary", "secondary", "tertiary",
    "unclassified", "residential", "service", "track",     "other"};
inline constexpr const char* kSurfaceCategories[] = {
    "asphalt", "concrete", "paving_stones", "gravel", "dirt", "ground",
    "other"};

/// smoothness tag to ordinal level; unknown values map to missing.
std::optional<double> smoothness_level(std::string_view tag);

/// Rows keyed by segment id; NaN marks a missing cell.
struct FeatureMatrix {
  FeatureSchema schema;
  std::vector<std::string> ids;
  MatrixXd values;  // ids.size() x schema.width()

  bool is_missing(Eigen::Index r, Eigen::Index c) const {
    return std::isnan(values(r, c));
  }
  FeatureMatrix select_osm_only() const;
};

struct TrafficRecord {
  int direction = 2;  // fwd=0, bwd=1, both=2
  double aadt = 0.0;
  double mean_speed = 0.0;
  double p85_speed = 0.0;
};

// Traffic CSV: `id,direction,aadt,mean_speed,p85_speed`.
std::map<std::string, TrafficRecord> read_traffic_csv(std::istream& in);

struct ExtractConfig {
  double snap_max_m = 30.0;
  double nodes_radius_m = 100.0;
  double iso_budget_s = 900.0;
  double iso_vmax_kmh = 130.0;
};

struct ExtractReport {
  int segments_total = 0;
  int segments_unsnapped = 0;
  int segments_unroutable = 0;
  int traffic_rows_unmatched = 0;
};

/// One row per segment, sorted by id. Unsnapped segments keep their
/// accessibility features when the raw midpoint is routable; unroutable
/// midpoints leave those cells missing as well.
FeatureMatrix extract_features(
    const std::vector<RoadSegment>& segments, const RoadGraph& graph,
    const std::map<std::int64_t, OsmWayAttributes>& way_attrs,
    const PopulationRaster& raster,
    const std::map<std::string, TrafficRecord>* traffic,
    const ExtractConfig& config, ExtractReport* report = nullptr);

// Feature CSV: first column `id`, then schema columns; missing cell is the
// empty string. Schema travels as a JSON sidecar.
void write_feature_csv(std::ostream& out, const FeatureMatrix& m);
FeatureMatrix read_feature_csv(std::istream& in, const FeatureSchema& schema);

std::string schema_to_json(const FeatureSchema& schema,
                           const std::string& config_hash,
                           std::uint64_t seed);
FeatureSchema schema_from_json(std::istream& in);

}  // namespace roadsafe
