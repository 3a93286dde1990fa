#include "roadsafe/osm.hpp"

#include <expat.h>

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstring>
#include <fstream>
#include <functional>
#include <istream>
#include <ostream>
#include <sstream>

#include "json.hpp"
#include "roadsafe/rng.hpp"

namespace roadsafe {

namespace {

constexpr double kMetersPerDegLat = 111319.49079327358;

std::uint64_t pack_cell(std::int32_t cx, std::int32_t cy) {
  return (static_cast<std::uint64_t>(static_cast<std::uint32_t>(cx)) << 32) |
         static_cast<std::uint32_t>(cy);
}

}  // namespace

void RoadGraph::add_node(std::int64_t id, GeoPoint p) {
  if (index_of_.count(id)) return;
  index_of_.emplace(id, static_cast<int>(node_ids_.size()));
  node_ids_.push_back(id);
  node_points_.push_back(p);
  node_ways_.emplace_back();
}

void RoadGraph::add_edge(const RoadEdge& e) {
  if (!has_node(e.from) || !has_node(e.to)) {
    throw std::logic_error("edge endpoint not in graph");
  }
  if (!(e.len_m > 0.0) || !(e.kmh > 0.0)) {
    throw std::logic_error("edge requires positive length and speed");
  }
  edges_.push_back(e);
}

void RoadGraph::attach_way(std::int64_t node_id, std::int64_t way_id) {
  auto& ways = node_ways_[node_index(node_id)];
  if (std::find(ways.begin(), ways.end(), way_id) == ways.end()) {
    ways.push_back(way_id);
  }
}

GeoPoint RoadGraph::node_point(std::int64_t id) const {
  return node_points_[index_of_.at(id)];
}

int RoadGraph::node_index(std::int64_t id) const {
  auto it = index_of_.find(id);
  return it == index_of_.end() ? -1 : it->second;
}

const std::vector<std::int64_t>& RoadGraph::ways_of_node(int node_index) const {
  return node_ways_[node_index];
}

const std::vector<std::pair<int, double>>& RoadGraph::out_edges(
    int node_index) const {
  return adjacency_[node_index];
}

std::uint64_t RoadGraph::cell_key(double lat, double lon) const {
  const auto cx = static_cast<std::int32_t>(std::floor(lat / cell_deg_));
  const auto cy = static_cast<std::int32_t>(std::floor(lon / cell_deg_));
  return pack_cell(cx, cy);
}

void RoadGraph::finalize() {
  grid_.clear();
  for (std::size_t i = 0; i < node_points_.size(); ++i) {
    grid_[cell_key(node_points_[i].lat, node_points_[i].lon)].push_back(
        static_cast<int>(i));
  }
  adjacency_.assign(node_ids_.size(), {});
  for (const auto& e : edges_) {
    const double seconds = e.len_m / (e.kmh / 3.6);
    adjacency_[index_of_.at(e.from)].emplace_back(index_of_.at(e.to), seconds);
  }
}

void RoadGraph::for_cells_in_radius(
    const GeoPoint& p, double radius_m,
    const std::function<void(int)>& visit) const {
  const double dlat = radius_m / kMetersPerDegLat;
  const double coslat =
      std::max(0.01, std::cos(p.lat * 0.017453292519943295));
  const double dlon = radius_m / (kMetersPerDegLat * coslat);
  const auto cx0 = static_cast<std::int32_t>(std::floor((p.lat - dlat) / cell_deg_));
  const auto cx1 = static_cast<std::int32_t>(std::floor((p.lat + dlat) / cell_deg_));
  const auto cy0 = static_cast<std::int32_t>(std::floor((p.lon - dlon) / cell_deg_));
  const auto cy1 = static_cast<std::int32_t>(std::floor((p.lon + dlon) / cell_deg_));
  for (std::int32_t cx = cx0; cx <= cx1; ++cx) {
    for (std::int32_t cy = cy0; cy <= cy1; ++cy) {
      auto it = grid_.find(pack_cell(cx, cy));
      if (it == grid_.end()) continue;
      for (int idx : it->second) visit(idx);
    }
  }
}

std::optional<std::pair<int, double>> RoadGraph::nearest_node(
    const GeoPoint& p, double max_m) const {
  int best = -1;
  double best_d = max_m;
  for_cells_in_radius(p, max_m, [&](int idx) {
    const double d = haversine_m(p, node_points_[idx]);
    if (d < best_d ||
        (d == best_d && best >= 0 && node_ids_[idx] < node_ids_[best])) {
      best = idx;
      best_d = d;
    } else if (best < 0 && d <= max_m) {
      best = idx;
      best_d = d;
    }
  });
  if (best < 0) return std::nullopt;
  return std::make_pair(best, best_d);
}

std::vector<int> RoadGraph::nodes_within(const GeoPoint& p,
                                         double radius_m) const {
  std::vector<int> out;
  for_cells_in_radius(p, radius_m, [&](int idx) {
    if (haversine_m(p, node_points_[idx]) <= radius_m) out.push_back(idx);
  });
  std::sort(out.begin(), out.end());
  return out;
}

double default_speed_kmh(std::string_view highway) {
  std::string base(highway);
  if (base.size() > 5 && base.ends_with("_link")) {
    base.resize(base.size() - 5);
  }
  if (base == "motorway") return 110.0;
  if (base == "trunk") return 90.0;
  if (base == "primary") return 70.0;
  if (base == "secondary") return 60.0;
  if (base == "tertiary") return 50.0;
  if (base == "residential" || base == "unclassified") return 30.0;
  if (base == "service" || base == "track") return 15.0;
  return 30.0;
}

namespace {

std::string trim(std::string_view s) {
  std::size_t b = 0, e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return std::string(s.substr(b, e - b));
}

// Integer tag values are parsed strictly; anything else is missing, never
// guessed. A bare "km/h" unit suffix is tolerated.
std::optional<int> parse_int_tag(std::string_view raw) {
  const std::string s = trim(raw);
  if (s.empty()) return std::nullopt;
  int value = 0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), value);
  if (ec != std::errc()) return std::nullopt;
  const std::string rest = trim(std::string_view(ptr, s.data() + s.size() - ptr));
  if (!rest.empty() && rest != "km/h" && rest != "kmh") return std::nullopt;
  if (value <= 0) return std::nullopt;
  return value;
}

std::optional<bool> parse_bool_tag(std::string_view raw) {
  const std::string s = trim(raw);
  if (s == "yes" || s == "true" || s == "1") return true;
  if (s == "no" || s == "false" || s == "0") return false;
  return std::nullopt;
}

enum class WayDirection { Both, Forward, Reverse };

struct PendingWay {
  std::int64_t id = 0;
  std::vector<std::int64_t> refs;
  std::vector<std::pair<std::string, std::string>> tags;
};

struct ParserContext {
  XML_Parser parser = nullptr;
  std::unordered_map<std::int64_t, GeoPoint> nodes;
  std::vector<PendingWay> ways;
  PendingWay current;
  bool in_way = false;
  std::string error;
  int error_line = 0;

  void fail(const std::string& msg) {
    if (!error.empty()) return;
    error = msg;
    error_line = static_cast<int>(XML_GetCurrentLineNumber(parser));
    XML_StopParser(parser, XML_FALSE);
  }
};

const char* find_attr(const char** atts, const char* key) {
  for (int i = 0; atts[i]; i += 2) {
    if (std::strcmp(atts[i], key) == 0) return atts[i + 1];
  }
  return nullptr;
}

void XMLCALL on_start_element(void* user, const char* name,
                              const char** atts) {
  auto* ctx = static_cast<ParserContext*>(user);
  if (!ctx->error.empty()) return;
  if (std::strcmp(name, "node") == 0) {
    const char* id = find_attr(atts, "id");
    const char* lat = find_attr(atts, "lat");
    const char* lon = find_attr(atts, "lon");
    if (!id || !lat || !lon) {
      ctx->fail("node element missing id/lat/lon");
      return;
    }
    try {
      ctx->nodes.emplace(std::stoll(id),
                         GeoPoint(std::stod(lat), std::stod(lon)));
    } catch (const std::exception& e) {
      ctx->fail(std::string("bad node attributes: ") + e.what());
    }
  } else if (std::strcmp(name, "way") == 0) {
    const char* id = find_attr(atts, "id");
    if (!id) {
      ctx->fail("way element missing id");
      return;
    }
    ctx->in_way = true;
    ctx->current = PendingWay{};
    ctx->current.id = std::stoll(id);
  } else if (ctx->in_way && std::strcmp(name, "nd") == 0) {
    const char* ref = find_attr(atts, "ref");
    if (!ref) {
      ctx->fail("nd element missing ref");
      return;
    }
    ctx->current.refs.push_back(std::stoll(ref));
  } else if (ctx->in_way && std::strcmp(name, "tag") == 0) {
    const char* k = find_attr(atts, "k");
    const char* v = find_attr(atts, "v");
    if (k && v) ctx->current.tags.emplace_back(k, v);
  }
  // relations and node tags are ignored
}

void XMLCALL on_end_element(void* user, const char* name) {
  auto* ctx = static_cast<ParserContext*>(user);
  if (!ctx->error.empty()) return;
  if (std::strcmp(name, "way") == 0 && ctx->in_way) {
    ctx->ways.push_back(std::move(ctx->current));
    ctx->in_way = false;
  }
}

std::string_view tag_value(const PendingWay& way, std::string_view key) {
  for (const auto& [k, v] : way.tags) {
    if (k == key) return v;
  }
  return {};
}

}  // namespace

OsmData parse_osm(std::istream& xml) {
  XML_Parser parser = XML_ParserCreate(nullptr);
  if (!parser) throw std::runtime_error("could not create XML parser");
  ParserContext ctx;
  ctx.parser = parser;
  XML_SetUserData(parser, &ctx);
  XML_SetElementHandler(parser, on_start_element, on_end_element);

  char buf[65536];
  bool done = false;
  while (!done) {
    xml.read(buf, sizeof(buf));
    const auto n = static_cast<int>(xml.gcount());
    done = n == 0 || xml.eof();
    const XML_Status st = XML_Parse(parser, buf, n, done ? XML_TRUE : XML_FALSE);
    if (st == XML_STATUS_ERROR) {
      const int line = static_cast<int>(XML_GetCurrentLineNumber(parser));
      const std::string msg = XML_ErrorString(XML_GetErrorCode(parser));
      XML_ParserFree(parser);
      throw OsmParseError("malformed OSM XML: " + msg, line);
    }
    if (!ctx.error.empty()) break;
  }
  XML_ParserFree(parser);
  if (!ctx.error.empty()) {
    throw OsmParseError(ctx.error, ctx.error_line);
  }

  OsmData out;
  out.stats.ways_total = static_cast<int>(ctx.ways.size());

  for (const auto& way : ctx.ways) {
    const std::string highway = std::string(tag_value(way, "highway"));
    if (highway.empty()) continue;  // non-highway ways and areas dropped

    bool refs_ok = !way.refs.empty();
    for (std::int64_t ref : way.refs) {
      if (!ctx.nodes.count(ref)) {
        refs_ok = false;
        break;
      }
    }
    if (!refs_ok) {
      ++out.stats.ways_skipped_unknown_node;
      continue;
    }

    OsmWayAttributes attrs;
    attrs.way_id = way.id;
    attrs.highway = highway;
    attrs.maxspeed_kmh = parse_int_tag(tag_value(way, "maxspeed"));
    attrs.lanes = parse_int_tag(tag_value(way, "lanes"));
    attrs.lit = parse_bool_tag(tag_value(way, "lit"));
    const std::string surface = trim(tag_value(way, "surface"));
    if (!surface.empty()) attrs.surface = surface;
    const std::string smoothness = trim(tag_value(way, "smoothness"));
    if (!smoothness.empty()) attrs.smoothness = smoothness;
    const std::string bridge = trim(tag_value(way, "bridge"));
    attrs.bridge = !bridge.empty() && bridge != "no";

    WayDirection dir = WayDirection::Both;
    const std::string oneway = trim(tag_value(way, "oneway"));
    if (!oneway.empty()) {
      if (oneway == "-1") {
        attrs.oneway = true;
        dir = WayDirection::Reverse;
      } else if (auto b = parse_bool_tag(oneway)) {
        attrs.oneway = *b;
        dir = *b ? WayDirection::Forward : WayDirection::Both;
      }
      // unrecognized values: routing stays bidirectional, feature missing
    }

    for (std::int64_t ref : way.refs) {
      out.graph.add_node(ref, ctx.nodes.at(ref));
      out.graph.attach_way(ref, way.id);
    }

    const double kmh = attrs.maxspeed_kmh ? static_cast<double>(*attrs.maxspeed_kmh)
                                          : default_speed_kmh(highway);
    for (std::size_t i = 0; i + 1 < way.refs.size(); ++i) {
      const std::int64_t a = way.refs[i];
      const std::int64_t b = way.refs[i + 1];
      const double len = haversine_m(ctx.nodes.at(a), ctx.nodes.at(b));
      if (!(len > 0.0)) {
        ++out.stats.zero_length_edges_skipped;
        continue;
      }
      if (dir != WayDirection::Reverse) {
        out.graph.add_edge({a, b, len, kmh, way.id});
      }
      if (dir != WayDirection::Forward) {
        out.graph.add_edge({b, a, len, kmh, way.id});
      }
    }

    out.way_attrs.emplace(way.id, std::move(attrs));
    ++out.stats.ways_retained;
  }

  out.graph.finalize();
  return out;
}

OsmData parse_osm_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open OSM file: " + path);
  return parse_osm(in);
}

std::optional<std::int64_t> snap_segment(const RoadGraph& graph,
                                         const GeoPoint& p, double max_m) {
  std::optional<std::pair<double, std::int64_t>> best;  // (dist, way_id)
  for (int idx : graph.nodes_within(p, max_m)) {
    const double d = haversine_m(p, graph.node_points()[idx]);
    for (std::int64_t way : graph.ways_of_node(idx)) {
      if (!best || d < best->first ||
          (d == best->first && way < best->second)) {
        best = std::make_pair(d, way);
      }
    }
  }
  if (!best) return std::nullopt;
  return best->second;
}

namespace {

nlohmann::ordered_json graph_to_json(const OsmData& data) {
  nlohmann::ordered_json j;
  std::vector<std::size_t> order(data.graph.node_count());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return data.graph.node_ids()[a] < data.graph.node_ids()[b];
  });

  auto& nodes = j["nodes"] = nlohmann::ordered_json::array();
  for (std::size_t i : order) {
    nodes.push_back({{"id", data.graph.node_ids()[i]},
                     {"lat", data.graph.node_points()[i].lat},
                     {"lon", data.graph.node_points()[i].lon}});
  }
  auto& edges = j["edges"] = nlohmann::ordered_json::array();
  for (const auto& e : data.graph.edges()) {
    edges.push_back({{"from", e.from},
                     {"to", e.to},
                     {"len_m", e.len_m},
                     {"kmh", e.kmh},
                     {"way", e.way_id}});
  }
  auto& ways = j["ways"] = nlohmann::ordered_json::array();
  for (const auto& [id, a] : data.way_attrs) {
    nlohmann::ordered_json w;
    w["id"] = id;
    w["highway"] = a.highway;
    w["oneway"] = a.oneway ? nlohmann::ordered_json(*a.oneway)
                           : nlohmann::ordered_json(nullptr);
    w["maxspeed"] = a.maxspeed_kmh ? nlohmann::ordered_json(*a.maxspeed_kmh)
                                   : nlohmann::ordered_json(nullptr);
    w["surface"] = a.surface ? nlohmann::ordered_json(*a.surface)
                             : nlohmann::ordered_json(nullptr);
    w["smoothness"] = a.smoothness ? nlohmann::ordered_json(*a.smoothness)
                                   : nlohmann::ordered_json(nullptr);
    w["lit"] = a.lit ? nlohmann::ordered_json(*a.lit)
                     : nlohmann::ordered_json(nullptr);
    w["bridge"] = a.bridge;
    w["lanes"] = a.lanes ? nlohmann::ordered_json(*a.lanes)
                         : nlohmann::ordered_json(nullptr);
    ways.push_back(std::move(w));
  }
  return j;
}

}  // namespace

void write_graph_cache(std::ostream& out, const OsmData& data,
                       const std::string& source_hash) {
  nlohmann::ordered_json j;
  j["header"] = {{"format", 1}, {"source_hash", source_hash}};
  auto body = graph_to_json(data);
  j["nodes"] = std::move(body["nodes"]);
  j["edges"] = std::move(body["edges"]);
  j["ways"] = std::move(body["ways"]);
  out << j.dump(2) << '\n';
}

GraphCache read_graph_cache(std::istream& in) {
  nlohmann::json j;
  in >> j;
  GraphCache cache;
  cache.source_hash = j.at("header").at("source_hash").get<std::string>();
  for (const auto& n : j.at("nodes")) {
    cache.data.graph.add_node(
        n.at("id").get<std::int64_t>(),
        GeoPoint(n.at("lat").get<double>(), n.at("lon").get<double>()));
  }
  for (const auto& e : j.at("edges")) {
    RoadEdge edge{e.at("from").get<std::int64_t>(),
                  e.at("to").get<std::int64_t>(), e.at("len_m").get<double>(),
                  e.at("kmh").get<double>(), e.at("way").get<std::int64_t>()};
    cache.data.graph.add_edge(edge);
    cache.data.graph.attach_way(edge.from, edge.way_id);
    cache.data.graph.attach_way(edge.to, edge.way_id);
  }
  for (const auto& w : j.at("ways")) {
    OsmWayAttributes a;
    a.way_id = w.at("id").get<std::int64_t>();
    a.highway = w.at("highway").get<std::string>();
    if (!w.at("oneway").is_null()) a.oneway = w.at("oneway").get<bool>();
    if (!w.at("maxspeed").is_null()) a.maxspeed_kmh = w.at("maxspeed").get<int>();
    if (!w.at("surface").is_null()) a.surface = w.at("surface").get<std::string>();
    if (!w.at("smoothness").is_null())
      a.smoothness = w.at("smoothness").get<std::string>();
    if (!w.at("lit").is_null()) a.lit = w.at("lit").get<bool>();
    a.bridge = w.at("bridge").get<bool>();
    if (!w.at("lanes").is_null()) a.lanes = w.at("lanes").get<int>();
    cache.data.way_attrs.emplace(a.way_id, std::move(a));
  }
  cache.data.stats.ways_retained =
      static_cast<int>(cache.data.way_attrs.size());
  cache.data.graph.finalize();
  return cache;
}

std::string file_content_hash(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open file: " + path);
  std::uint64_t h = 0xcbf29ce484222325ULL;
  char buf[65536];
  while (in.read(buf, sizeof(buf)) || in.gcount() > 0) {
    h = fnv1a64(buf, static_cast<std::size_t>(in.gcount()), h);
    if (in.eof()) break;
  }
  char hex[17];
  std::snprintf(hex, sizeof(hex), "%016llx", static_cast<unsigned long long>(h));
  return std::string(hex);
}

std::string graph_hash(const OsmData& data) {
  const std::string dump = graph_to_json(data).dump();
  const std::uint64_t h = fnv1a64(dump);
  char hex[17];
  std::snprintf(hex, sizeof(hex), "%016llx", static_cast<unsigned long long>(h));
  return std::string(hex);
}

}  // namespace roadsafe
