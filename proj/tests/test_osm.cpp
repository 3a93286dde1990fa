#include <sstream>

#include "doctest.h"
#include "roadsafe/geo.hpp"
#include "roadsafe/osm.hpp"
#include "roadsafe/rng.hpp"

using namespace roadsafe;

namespace {

const char* kTwoNodeOneway = R"(<?xml version="1.0"?>
<osm version="0.6">
  <node id="1" lat="45.0" lon="10.0"/>
  <node id="2" lat="45.001" lon="10.0"/>
  <way id="100">
    <nd ref="1"/><nd ref="2"/>
    <tag k="highway" v="residential"/>
    <tag k="oneway" v="yes"/>
  </way>
</osm>
)";

const char* kThreeNodeBidirectional = R"(<?xml version="1.0"?>
<osm version="0.6">
  <node id="1" lat="45.0" lon="10.0"/>
  <node id="2" lat="45.001" lon="10.0"/>
  <node id="3" lat="45.002" lon="10.0"/>
  <way id="100">
    <nd ref="1"/><nd ref="2"/><nd ref="3"/>
    <tag k="highway" v="primary"/>
    <tag k="maxspeed" v="50"/>
  </way>
</osm>
)";

OsmData parse_string(const char* xml) {
  std::istringstream in(xml);
  return parse_osm(in);
}

}  // namespace

TEST_CASE("oneway way yields a single directed edge per node pair") {
  const OsmData data = parse_string(kTwoNodeOneway);
  CHECK(data.graph.node_count() == 2);
  CHECK(data.graph.edge_count() == 1);
  CHECK(data.graph.edges()[0].from == 1);
  CHECK(data.graph.edges()[0].to == 2);
  REQUIRE(data.way_attrs.count(100) == 1);
  CHECK(data.way_attrs.at(100).oneway == true);
}

TEST_CASE("bidirectional 3-node way yields 4 edges") {
  const OsmData data = parse_string(kThreeNodeBidirectional);
  CHECK(data.graph.edge_count() == 4);
  CHECK(data.way_attrs.at(100).maxspeed_kmh == 50);
  // edge speed comes from the maxspeed tag
  for (const auto& e : data.graph.edges()) CHECK(e.kmh == 50.0);
}

TEST_CASE("reversed oneway adds only the reverse direction") {
  const char* xml = R"(<osm>
    <node id="1" lat="45.0" lon="10.0"/>
    <node id="2" lat="45.001" lon="10.0"/>
    <way id="7"><nd ref="1"/><nd ref="2"/>
      <tag k="highway" v="service"/><tag k="oneway" v="-1"/></way>
  </osm>)";
  const OsmData data = parse_string(xml);
  REQUIRE(data.graph.edge_count() == 1);
  CHECK(data.graph.edges()[0].from == 2);
  CHECK(data.graph.edges()[0].to == 1);
  CHECK(data.way_attrs.at(7).oneway == true);
}

TEST_CASE("tag parsing: parsed or missing, never guessed") {
  const char* xml = R"(<osm>
    <node id="1" lat="45.0" lon="10.0"/>
    <node id="2" lat="45.001" lon="10.0"/>
    <node id="3" lat="45.002" lon="10.0"/>
    <node id="4" lat="45.003" lon="10.0"/>
    <way id="1"><nd ref="1"/><nd ref="2"/>
      <tag k="highway" v="residential"/>
      <tag k="maxspeed" v="walk"/>
      <tag k="lit" v="yes"/>
      <tag k="lanes" v="2"/>
    </way>
    <way id="2"><nd ref="3"/><nd ref="4"/>
      <tag k="highway" v="track"/>
      <tag k="maxspeed" v="50 km/h"/>
      <tag k="bridge" v="viaduct"/>
      <tag k="smoothness" v="bad"/>
      <tag k="surface" v="gravel"/>
    </way>
  </osm>)";
  const OsmData data = parse_string(xml);
  const auto& w1 = data.way_attrs.at(1);
  CHECK(!w1.maxspeed_kmh.has_value());  // "walk" stays missing
  CHECK(w1.lit == true);
  CHECK(w1.lanes == 2);
  CHECK(!w1.oneway.has_value());  // absent tag is missing, not false
  CHECK(w1.bridge == false);      // absent bridge means not a bridge

  const auto& w2 = data.way_attrs.at(2);
  CHECK(w2.maxspeed_kmh == 50);
  CHECK(w2.bridge == true);
  CHECK(w2.smoothness == "bad");
  CHECK(w2.surface == "gravel");

  // routing speed falls back to the class default when maxspeed is missing
  for (const auto& e : data.graph.edges()) {
    if (e.way_id == 1) CHECK(e.kmh == default_speed_kmh("residential"));
    if (e.way_id == 2) CHECK(e.kmh == 50.0);
  }
}

TEST_CASE("non-highway ways are dropped; unknown node refs skip the way") {
  const char* xml = R"(<osm>
    <node id="1" lat="45.0" lon="10.0"/>
    <node id="2" lat="45.001" lon="10.0"/>
    <way id="1"><nd ref="1"/><nd ref="2"/><tag k="building" v="yes"/></way>
    <way id="2"><nd ref="1"/><nd ref="99"/><tag k="highway" v="primary"/></way>
    <way id="3"><nd ref="1"/><nd ref="2"/><tag k="highway" v="primary"/></way>
  </osm>)";
  const OsmData data = parse_string(xml);
  CHECK(data.way_attrs.size() == 1);
  CHECK(data.way_attrs.count(3) == 1);
  CHECK(data.stats.ways_skipped_unknown_node == 1);
  CHECK(data.stats.ways_total == 3);
}

TEST_CASE("malformed XML reports a line number") {
  const char* xml = "<osm>\n  <node id=\"1\" lat=\"45\" lon=\"10\"/>\n  <way\n";
  std::istringstream in(xml);
  try {
    parse_osm(in);
    FAIL("expected OsmParseError");
  } catch (const OsmParseError& e) {
    CHECK(e.line() >= 3);
    CHECK(std::string(e.what()).find("line") != std::string::npos);
  }
}

TEST_CASE("edge count parity and reverse closure without oneway tags") {
  Rng rng(7);
  std::ostringstream xml;
  xml << "<osm>";
  const int n = 30;
  for (int i = 1; i <= n; ++i) {
    xml << "<node id=\"" << i << "\" lat=\"" << 45.0 + i * 1e-3
        << "\" lon=\"" << 10.0 + (i % 7) * 1e-3 << "\"/>";
  }
  int way_id = 1;
  for (int w = 0; w < 6; ++w) {
    xml << "<way id=\"" << way_id++ << "\">";
    const int len = 2 + static_cast<int>(rng.below(4));
    for (int k = 0; k < len; ++k) {
      xml << "<nd ref=\"" << 1 + rng.below(n) << "\"/>";
    }
    xml << "<tag k=\"highway\" v=\"tertiary\"/></way>";
  }
  xml << "</osm>";
  std::istringstream in(xml.str());
  const OsmData data = parse_osm(in);

  CHECK(data.graph.edge_count() % 2 == 0);
  for (const auto& e : data.graph.edges()) {
    bool found_reverse = false;
    for (const auto& r : data.graph.edges()) {
      if (r.from == e.to && r.to == e.from && r.way_id == e.way_id) {
        found_reverse = true;
        break;
      }
    }
    CHECK(found_reverse);
  }
}

TEST_CASE("re-parsing the same extract is deterministic") {
  const OsmData a = parse_string(kThreeNodeBidirectional);
  const OsmData b = parse_string(kThreeNodeBidirectional);
  CHECK(graph_hash(a) == graph_hash(b));
}

TEST_CASE("per-way edge lengths sum to the polyline haversine length") {
  const OsmData data = parse_string(kThreeNodeBidirectional);
  double forward = 0.0;
  for (const auto& e : data.graph.edges()) {
    if (e.from < e.to) forward += e.len_m;
  }
  const double polyline =
      haversine_m(GeoPoint(45.0, 10.0), GeoPoint(45.001, 10.0)) +
      haversine_m(GeoPoint(45.001, 10.0), GeoPoint(45.002, 10.0));
  CHECK(forward == doctest::Approx(polyline).epsilon(1e-9));
}

TEST_CASE("snap_segment: on-node hit, out-of-range miss, tie by way id") {
  const char* xml = R"(<osm>
    <node id="1" lat="45.0" lon="10.0"/>
    <node id="2" lat="45.001" lon="10.0"/>
    <node id="3" lat="45.0" lon="10.002"/>
    <node id="4" lat="45.001" lon="10.002"/>
    <way id="20"><nd ref="1"/><nd ref="2"/><tag k="highway" v="primary"/></way>
    <way id="10"><nd ref="3"/><nd ref="4"/><tag k="highway" v="primary"/></way>
  </osm>)";
  const OsmData data = parse_string(xml);

  CHECK(snap_segment(data.graph, GeoPoint(45.0, 10.0), 30.0) == 20);
  CHECK(!snap_segment(data.graph, GeoPoint(45.5, 10.0), 30.0).has_value());

  // equidistant between way 20's node 1 and way 10's node 3
  const GeoPoint middle(45.0, 10.001);
  CHECK(snap_segment(data.graph, middle, 200.0) == 10);
}

TEST_CASE("graph cache round-trips and keeps the source hash") {
  const OsmData data = parse_string(kThreeNodeBidirectional);
  std::stringstream cache;
  write_graph_cache(cache, data, "cafef00dcafef00d");
  const GraphCache loaded = read_graph_cache(cache);
  CHECK(loaded.source_hash == "cafef00dcafef00d");
  CHECK(loaded.data.graph.node_count() == data.graph.node_count());
  CHECK(loaded.data.graph.edge_count() == data.graph.edge_count());
  CHECK(loaded.data.way_attrs.at(100).maxspeed_kmh == 50);
  CHECK(graph_hash(loaded.data) == graph_hash(data));
}
