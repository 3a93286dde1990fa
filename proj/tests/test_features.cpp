#include <cmath>
#include <sstream>

#include "doctest.h"
#include "roadsafe/features.hpp"

using namespace roadsafe;

namespace {

OsmData fixture_osm() {
  const char* xml = R"(<osm>
    <node id="1" lat="45.0" lon="10.0"/>
    <node id="2" lat="45.001" lon="10.0"/>
    <node id="3" lat="45.01" lon="10.0"/>
    <node id="4" lat="45.011" lon="10.0"/>
    <way id="1"><nd ref="1"/><nd ref="2"/>
      <tag k="highway" v="primary"/>
      <tag k="maxspeed" v="50"/>
      <tag k="surface" v="asphalt"/>
      <tag k="smoothness" v="excellent"/>
      <tag k="lit" v="yes"/>
      <tag k="lanes" v="2"/>
      <tag k="oneway" v="no"/>
    </way>
    <way id="2"><nd ref="3"/><nd ref="4"/>
      <tag k="highway" v="track"/>
    </way>
  </osm>)";
  std::istringstream in(xml);
  return parse_osm(in);
}

std::vector<RoadSegment> fixture_segments() {
  return {
      {"a", GeoPoint(45.0, 10.0), std::nullopt, std::nullopt},      // on way 1
      {"b", GeoPoint(45.01, 10.0), std::nullopt, std::nullopt},     // on way 2
      {"c", GeoPoint(45.0004, 10.0), std::nullopt, std::nullopt},   // ~44 m off
      {"d", GeoPoint(46.0, 11.0), std::nullopt, std::nullopt},      // nowhere
  };
}

PopulationRaster fixture_raster() {
  PopulationRaster raster;
  raster.cells.push_back({10.0, 45.0005, 100.0});
  raster.cells.push_back({11.0, 46.0, 50.0});
  return raster;
}

}  // namespace

TEST_CASE("extraction fills Table-style columns from way tags") {
  const OsmData osm = fixture_osm();
  std::map<std::string, TrafficRecord> traffic;
  traffic["a"] = {0, 12000.0, 47.0, 55.0};
  traffic["nope"] = {2, 1.0, 2.0, 3.0};

  ExtractReport report;
  const FeatureMatrix m =
      extract_features(fixture_segments(), osm.graph, osm.way_attrs,
                       fixture_raster(), &traffic, ExtractConfig{}, &report);

  REQUIRE(m.ids == std::vector<std::string>{"a", "b", "c", "d"});
  REQUIRE(m.values.rows() == 4);
  CHECK(m.schema.width() == 31);

  const int hw_primary = m.schema.index_of("highway_primary");
  const int hw_track = m.schema.index_of("highway_track");
  const int hw_other = m.schema.index_of("highway_other");
  CHECK(m.values(0, hw_primary) == 1.0);
  CHECK(m.values(0, hw_track) == 0.0);
  CHECK(m.values(0, hw_other) == 0.0);
  CHECK(m.values(1, hw_track) == 1.0);

  CHECK(m.values(0, m.schema.index_of("maxspeed")) == 50.0);
  CHECK(m.values(0, m.schema.index_of("surface_asphalt")) == 1.0);
  CHECK(m.values(0, m.schema.index_of("smoothness")) == 7.0);  // excellent
  CHECK(m.values(0, m.schema.index_of("lit")) == 1.0);
  CHECK(m.values(0, m.schema.index_of("oneway")) == 0.0);
  CHECK(m.values(0, m.schema.index_of("lanes")) == 2.0);
  CHECK(m.values(0, m.schema.index_of("bridge")) == 0.0);

  // way 2 carries no optional tags: those features stay missing
  CHECK(m.is_missing(1, m.schema.index_of("maxspeed")));
  CHECK(m.is_missing(1, m.schema.index_of("smoothness")));
  CHECK(m.is_missing(1, m.schema.index_of("lit")));
  CHECK(m.is_missing(1, m.schema.index_of("surface_asphalt")));
  CHECK(m.is_missing(1, m.schema.index_of("oneway")));

  // c is beyond the 30 m snap but routable: attributes missing,
  // accessibility present
  CHECK(m.is_missing(2, hw_primary));
  CHECK(!m.is_missing(2, m.schema.index_of("reach_factor")));
  CHECK(!m.is_missing(2, m.schema.index_of("nodes")));

  // d is unroutable: isochrone features missing, node count zero
  CHECK(m.is_missing(3, m.schema.index_of("reach_factor")));
  CHECK(m.is_missing(3, m.schema.index_of("iso_area_km2")));
  CHECK(m.values(3, m.schema.index_of("nodes")) == 0.0);

  // traffic joined by id; unmatched CSV rows are counted
  CHECK(m.values(0, m.schema.index_of("aadt")) == 12000.0);
  CHECK(m.values(0, m.schema.index_of("direction")) == 0.0);
  CHECK(m.is_missing(1, m.schema.index_of("aadt")));
  CHECK(report.traffic_rows_unmatched == 1);
  CHECK(report.segments_unsnapped == 2);
  CHECK(report.segments_unroutable == 1);

  // population near way 1 falls inside its isochrone hull when non-degenerate
  CHECK(m.values(0, m.schema.index_of("totpop")) >= 0.0);
}

TEST_CASE("osm-only extraction omits traffic columns entirely") {
  const OsmData osm = fixture_osm();
  const FeatureMatrix m =
      extract_features(fixture_segments(), osm.graph, osm.way_attrs,
                       fixture_raster(), nullptr, ExtractConfig{}, nullptr);
  CHECK(m.schema.width() == 27);
  CHECK(m.schema.index_of("aadt") == -1);
  CHECK(m.schema.index_of("direction") == -1);
  CHECK(m.schema.index_of("mean_speed") == -1);
  CHECK(m.schema.index_of("p85_speed") == -1);
}

TEST_CASE("extraction is deterministic and column order follows the schema") {
  const OsmData osm = fixture_osm();
  const FeatureMatrix a =
      extract_features(fixture_segments(), osm.graph, osm.way_attrs,
                       fixture_raster(), nullptr, ExtractConfig{}, nullptr);
  const FeatureMatrix b =
      extract_features(fixture_segments(), osm.graph, osm.way_attrs,
                       fixture_raster(), nullptr, ExtractConfig{}, nullptr);
  CHECK(a.schema.hash() == b.schema.hash());
  for (Eigen::Index r = 0; r < a.values.rows(); ++r) {
    for (Eigen::Index c = 0; c < a.values.cols(); ++c) {
      const bool both_nan = a.is_missing(r, c) && b.is_missing(r, c);
      CHECK((both_nan || a.values(r, c) == b.values(r, c)));
    }
  }
  // schema order is the written column order
  std::ostringstream csv;
  write_feature_csv(csv, a);
  std::string header = csv.str().substr(0, csv.str().find('\n'));
  std::string expect = "id";
  for (const auto& col : a.schema.columns()) expect += "," + col.name;
  CHECK(header == expect);
}

TEST_CASE("smoothness mapping covers the ordinal table") {
  CHECK(smoothness_level("excellent") == 7.0);
  CHECK(smoothness_level("good") == 6.0);
  CHECK(smoothness_level("intermediate") == 5.0);
  CHECK(smoothness_level("bad") == 4.0);
  CHECK(smoothness_level("very_bad") == 3.0);
  CHECK(smoothness_level("horrible") == 2.0);
  CHECK(smoothness_level("very_horrible") == 1.0);
  CHECK(smoothness_level("impassable") == 0.0);
  CHECK(!smoothness_level("like_new").has_value());
}

TEST_CASE("feature CSV round-trips missing cells") {
  const OsmData osm = fixture_osm();
  const FeatureMatrix m =
      extract_features(fixture_segments(), osm.graph, osm.way_attrs,
                       fixture_raster(), nullptr, ExtractConfig{}, nullptr);
  std::stringstream csv;
  write_feature_csv(csv, m);
  const FeatureMatrix back = read_feature_csv(csv, m.schema);
  REQUIRE(back.ids == m.ids);
  for (Eigen::Index r = 0; r < m.values.rows(); ++r) {
    for (Eigen::Index c = 0; c < m.values.cols(); ++c) {
      if (m.is_missing(r, c)) {
        CHECK(back.is_missing(r, c));
      } else {
        CHECK(back.values(r, c) == m.values(r, c));
      }
    }
  }
}

TEST_CASE("schema JSON sidecar round-trips") {
  const FeatureSchema schema = standard_schema(true);
  std::stringstream json(schema_to_json(schema, "deadbeef", 42));
  const FeatureSchema back = schema_from_json(json);
  CHECK(back.hash() == schema.hash());
  CHECK(back.width() == schema.width());
  CHECK(back.column(0).group == "highway");
}
