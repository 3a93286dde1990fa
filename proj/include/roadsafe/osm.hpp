#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

#include "roadsafe/geo.hpp"

namespace roadsafe {

struct OsmWayAttributes {
  std::int64_t way_id = 0;
  std::string highway;  // non-empty; ways without it are dropped
  std::optional<bool> oneway;
  std::optional<int> maxspeed_kmh;
  std::optional<std::string> surface;
  std::optional<std::string> smoothness;
  std::optional<bool> lit;
  bool bridge = false;  // absent tag means not a bridge
  std::optional<int> lanes;
};

struct RoadEdge {
  std::int64_t from = 0;
  std::int64_t to = 0;
  double len_m = 0.0;
  double kmh = 0.0;
  std::int64_t way_id = 0;
};

/// Routable network. Immutable once built; index structures are created by
/// the builder so lookups are const.
class RoadGraph {
 public:
  void add_node(std::int64_t id, GeoPoint p);
  bool has_node(std::int64_t id) const { return index_of_.count(id) != 0; }
  // Requires both endpoints; zero-length edges are rejected by the parser.
  void add_edge(const RoadEdge& e);
  void attach_way(std::int64_t node_id, std::int64_t way_id);
  void finalize();  // builds the spatial grid + adjacency

  std::size_t node_count() const { return node_ids_.size(); }
  std::size_t edge_count() const { return edges_.size(); }
  const std::vector<std::int64_t>& node_ids() const { return node_ids_; }
  const std::vector<GeoPoint>& node_points() const { return node_points_; }
  const std::vector<RoadEdge>& edges() const { return edges_; }
  GeoPoint node_point(std::int64_t id) const;
  int node_index(std::int64_t id) const;  // -1 when absent
  const std::vector<std::int64_t>& ways_of_node(int node_index) const;

  // adjacency as (target node index, travel seconds)
  const std::vector<std::pair<int, double>>& out_edges(int node_index) const;

  /// Nearest node to p within max_m (haversine); ties by smaller node id.
  std::optional<std::pair<int, double>> nearest_node(const GeoPoint& p,
                                                     double max_m) const;
  /// Indices of all nodes within radius_m of p.
  std::vector<int> nodes_within(const GeoPoint& p, double radius_m) const;

 private:
  std::vector<std::int64_t> node_ids_;
  std::vector<GeoPoint> node_points_;
  std::unordered_map<std::int64_t, int> index_of_;
  std::vector<std::vector<std::int64_t>> node_ways_;
  std::vector<RoadEdge> edges_;
  std::vector<std::vector<std::pair<int, double>>> adjacency_;

  // flat grid over lat/lon cells, ~500 m pitch
  double cell_deg_ = 0.0045;
  std::unordered_map<std::uint64_t, std::vector<int>> grid_;
  std::uint64_t cell_key(double lat, double lon) const;
  void for_cells_in_radius(const GeoPoint& p, double radius_m,
                           const std::function<void(int)>& visit) const;
};

class OsmParseError : public std::runtime_error {
 public:
  OsmParseError(const std::string& what, int line)
      : std::runtime_error(what + " (line " + std::to_string(line) + ")"),
        line_(line) {}
  int line() const { return line_; }

 private:
  int line_;
};

struct OsmParseStats {
  int ways_skipped_unknown_node = 0;
  int zero_length_edges_skipped = 0;
  int ways_total = 0;
  int ways_retained = 0;
};

struct OsmData {
  RoadGraph graph;
  std::map<std::int64_t, OsmWayAttributes> way_attrs;
  OsmParseStats stats;
};

/// Streaming parse of an OSM XML extract. Ways are processed after all
/// nodes are known, so node/way order in the file does not matter.
OsmData parse_osm(std::istream& xml);
OsmData parse_osm_file(const std::string& path);

/// Way whose nearest node is closest to p, if within max_m. Ties broken by
/// smaller way id.
std::optional<std::int64_t> snap_segment(const RoadGraph& graph,
                                         const GeoPoint& p, double max_m);

// Routing speed when maxspeed is absent or unparseable; the maxspeed
// feature itself stays missing.
double default_speed_kmh(std::string_view highway);

// Graph cache: JSON with header{source_hash}, nodes[{id,lat,lon}],
// edges[{from,to,len_m,kmh,way}], ways[attribute objects].
void write_graph_cache(std::ostream& out, const OsmData& data,
                       const std::string& source_hash);
struct GraphCache {
  OsmData data;
  std::string source_hash;
};
GraphCache read_graph_cache(std::istream& in);

std::string file_content_hash(const std::string& path);  // fnv1a64 hex
std::string graph_hash(const OsmData& data);  // canonical-form fingerprint

}  // namespace roadsafe
