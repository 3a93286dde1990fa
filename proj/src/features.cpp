#include "roadsafe/features.hpp"

#include <algorithm>
#include <istream>
#include <limits>
#include <ostream>
#include <set>
#include <sstream>

#include "json.hpp"
#include "roadsafe/csv.hpp"
#include "roadsafe/rng.hpp"

namespace roadsafe {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

std::string_view kind_name(FeatureKind k) {
  switch (k) {
    case FeatureKind::Binary: return "binary";
    case FeatureKind::Integer: return "integer";
    case FeatureKind::Real: return "real";
  }
  return "real";
}

FeatureKind kind_from_name(std::string_view s) {
  if (s == "binary") return FeatureKind::Binary;
  if (s == "integer") return FeatureKind::Integer;
  if (s == "real") return FeatureKind::Real;
  throw std::invalid_argument("unknown feature kind: " + std::string(s));
}

}  // namespace

FeatureSchema::FeatureSchema(std::vector<FeatureColumn> columns)
    : columns_(std::move(columns)) {
  std::set<std::string> names;
  for (const auto& c : columns_) {
    if (!names.insert(c.name).second) {
      throw std::invalid_argument("duplicate feature column: " + c.name);
    }
  }
}

int FeatureSchema::index_of(std::string_view name) const {
  for (std::size_t i = 0; i < columns_.size(); ++i) {
    if (columns_[i].name == name) return static_cast<int>(i);
  }
  return -1;
}

std::uint64_t FeatureSchema::hash() const {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (const auto& c : columns_) {
    h = fnv1a64(c.name, h);
    h = fnv1a64(kind_name(c.kind), h);
    h = fnv1a64(c.source == FeatureSource::Osm ? "osm" : "traffic", h);
    h = fnv1a64(c.group, h);
    h = fnv1a64(";", h);
  }
  return h;
}

FeatureSchema FeatureSchema::without_traffic() const {
  std::vector<FeatureColumn> cols;
  for (const auto& c : columns_) {
    if (c.source == FeatureSource::Osm) cols.push_back(c);
  }
  return FeatureSchema(std::move(cols));
}

FeatureSchema standard_schema(bool with_traffic) {
  std::vector<FeatureColumn> cols;
  for (const char* cat : kHighwayCategories) {
    cols.push_back({std::string("highway_") + cat, FeatureKind::Binary,
                    FeatureSource::Osm, "highway"});
  }
  cols.push_back({"oneway", FeatureKind::Binary, FeatureSource::Osm, ""});
  cols.push_back({"maxspeed", FeatureKind::Integer, FeatureSource::Osm, ""});
  for (const char* cat : kSurfaceCategories) {
    cols.push_back({std::string("surface_") + cat, FeatureKind::Binary,
                    FeatureSource::Osm, "surface"});
  }
  cols.push_back({"smoothness", FeatureKind::Integer, FeatureSource::Osm, ""});
  cols.push_back({"lit", FeatureKind::Binary, FeatureSource::Osm, ""});
  cols.push_back({"bridge", FeatureKind::Binary, FeatureSource::Osm, ""});
  cols.push_back({"lanes", FeatureKind::Integer, FeatureSource::Osm, ""});
  cols.push_back({"nodes", FeatureKind::Integer, FeatureSource::Osm, ""});
  cols.push_back({"iso_area_km2", FeatureKind::Real, FeatureSource::Osm, ""});
  cols.push_back({"reach_factor", FeatureKind::Real, FeatureSource::Osm, ""});
  cols.push_back({"totpop", FeatureKind::Real, FeatureSource::Osm, ""});
  if (with_traffic) {
    cols.push_back({"direction", FeatureKind::Integer, FeatureSource::Traffic, ""});
    cols.push_back({"aadt", FeatureKind::Integer, FeatureSource::Traffic, ""});
    cols.push_back({"mean_speed", FeatureKind::Integer, FeatureSource::Traffic, ""});
    cols.push_back({"p85_speed", FeatureKind::Integer, FeatureSource::Traffic, ""});
  }
  return FeatureSchema(std::move(cols));
}

std::optional<double> smoothness_level(std::string_view tag) {
  if (tag == "excellent") return 7.0;
  if (tag == "good") return 6.0;
  if (tag == "intermediate") return 5.0;
  if (tag == "bad") return 4.0;
  if (tag == "very_bad") return 3.0;
  if (tag == "horrible") return 2.0;
  if (tag == "very_horrible") return 1.0;
  if (tag == "impassable") return 0.0;
  return std::nullopt;
}

FeatureMatrix FeatureMatrix::select_osm_only() const {
  FeatureMatrix out;
  out.schema = schema.without_traffic();
  out.ids = ids;
  out.values.resize(values.rows(), out.schema.width());
  int dst = 0;
  for (int c = 0; c < schema.width(); ++c) {
    if (schema.column(c).source == FeatureSource::Osm) {
      out.values.col(dst++) = values.col(c);
    }
  }
  return out;
}

std::map<std::string, TrafficRecord> read_traffic_csv(std::istream& in) {
  const CsvTable table = read_csv(in);
  const int ci = table.column("id");
  const int cd = table.column("direction");
  const int ca = table.column("aadt");
  const int cm = table.column("mean_speed");
  const int cp = table.column("p85_speed");
  if (ci < 0 || cd < 0 || ca < 0 || cm < 0 || cp < 0) {
    throw CsvError(
        "traffic CSV needs columns id,direction,aadt,mean_speed,p85_speed", 1);
  }
  std::map<std::string, TrafficRecord> out;
  for (const auto& row : table.rows) {
    TrafficRecord rec;
    const std::string& dir = row[cd];
    if (dir == "fwd" || dir == "0") rec.direction = 0;
    else if (dir == "bwd" || dir == "1") rec.direction = 1;
    else if (dir == "both" || dir == "2") rec.direction = 2;
    else throw std::invalid_argument("unknown traffic direction: " + dir);
    rec.aadt = std::stod(row[ca]);
    rec.mean_speed = std::stod(row[cm]);
    rec.p85_speed = std::stod(row[cp]);
    out.emplace(row[ci], rec);
  }
  return out;
}

FeatureMatrix extract_features(
    const std::vector<RoadSegment>& segments, const RoadGraph& graph,
    const std::map<std::int64_t, OsmWayAttributes>& way_attrs,
    const PopulationRaster& raster,
    const std::map<std::string, TrafficRecord>* traffic,
    const ExtractConfig& config, ExtractReport* report) {
  FeatureMatrix m;
  m.schema = standard_schema(traffic != nullptr);

  std::vector<const RoadSegment*> ordered;
  ordered.reserve(segments.size());
  for (const auto& s : segments) ordered.push_back(&s);
  std::sort(ordered.begin(), ordered.end(),
            [](const RoadSegment* a, const RoadSegment* b) {
              return a->id < b->id;
            });

  ExtractReport local;
  local.segments_total = static_cast<int>(segments.size());

  m.ids.reserve(ordered.size());
  m.values.setConstant(static_cast<Eigen::Index>(ordered.size()),
                       m.schema.width(), kNaN);

  const int col_oneway = m.schema.index_of("oneway");
  const int col_maxspeed = m.schema.index_of("maxspeed");
  const int col_smoothness = m.schema.index_of("smoothness");
  const int col_lit = m.schema.index_of("lit");
  const int col_bridge = m.schema.index_of("bridge");
  const int col_lanes = m.schema.index_of("lanes");
  const int col_nodes = m.schema.index_of("nodes");
  const int col_area = m.schema.index_of("iso_area_km2");
  const int col_reach = m.schema.index_of("reach_factor");
  const int col_totpop = m.schema.index_of("totpop");

  for (Eigen::Index r = 0; r < static_cast<Eigen::Index>(ordered.size()); ++r) {
    const RoadSegment& seg = *ordered[r];
    m.ids.push_back(seg.id);

    const auto way_id = snap_segment(graph, seg.midpoint, config.snap_max_m);
    if (way_id) {
      const OsmWayAttributes& a = way_attrs.at(*way_id);

      std::string hw_cat = "other";
      for (const char* cat : kHighwayCategories) {
        if (a.highway == cat) {
          hw_cat = cat;
          break;
        }
      }
      for (const char* cat : kHighwayCategories) {
        m.values(r, m.schema.index_of(std::string("highway_") + cat)) =
            hw_cat == cat ? 1.0 : 0.0;
      }

      if (a.oneway) m.values(r, col_oneway) = *a.oneway ? 1.0 : 0.0;
      if (a.maxspeed_kmh) m.values(r, col_maxspeed) = *a.maxspeed_kmh;

      if (a.surface) {
        std::string sf_cat = "other";
        for (const char* cat : kSurfaceCategories) {
          if (*a.surface == cat) {
            sf_cat = cat;
            break;
          }
        }
        for (const char* cat : kSurfaceCategories) {
          m.values(r, m.schema.index_of(std::string("surface_") + cat)) =
              sf_cat == cat ? 1.0 : 0.0;
        }
      }

      if (a.smoothness) {
        if (auto level = smoothness_level(*a.smoothness)) {
          m.values(r, col_smoothness) = *level;
        }
      }
      if (a.lit) m.values(r, col_lit) = *a.lit ? 1.0 : 0.0;
      m.values(r, col_bridge) = a.bridge ? 1.0 : 0.0;
      if (a.lanes) m.values(r, col_lanes) = *a.lanes;
    } else {
      ++local.segments_unsnapped;
    }

    m.values(r, col_nodes) = static_cast<double>(
        graph.nodes_within(seg.midpoint, config.nodes_radius_m).size());

    try {
      const Isochrone iso = compute_isochrone(
          graph, seg.midpoint, config.iso_budget_s, config.iso_vmax_kmh);
      m.values(r, col_area) = iso.area_km2;
      m.values(r, col_reach) = iso.reach_factor;
      m.values(r, col_totpop) = population_in(iso.hull, raster);
    } catch (const UnroutableOrigin&) {
      ++local.segments_unroutable;
    }

    if (traffic) {
      auto it = traffic->find(seg.id);
      if (it != traffic->end()) {
        m.values(r, m.schema.index_of("direction")) = it->second.direction;
        m.values(r, m.schema.index_of("aadt")) = it->second.aadt;
        m.values(r, m.schema.index_of("mean_speed")) = it->second.mean_speed;
        m.values(r, m.schema.index_of("p85_speed")) = it->second.p85_speed;
      }
    }
  }

  if (traffic) {
    std::set<std::string> known(m.ids.begin(), m.ids.end());
    for (const auto& [id, rec] : *traffic) {
      if (!known.count(id)) ++local.traffic_rows_unmatched;
    }
  }
  if (report) *report = local;
  return m;
}

void write_feature_csv(std::ostream& out, const FeatureMatrix& m) {
  out << "id";
  for (const auto& c : m.schema.columns()) out << ',' << c.name;
  out << '\n';
  for (Eigen::Index r = 0; r < m.values.rows(); ++r) {
    out << m.ids[r];
    for (Eigen::Index c = 0; c < m.values.cols(); ++c) {
      out << ',';
      if (!m.is_missing(r, c)) out << format_double(m.values(r, c));
    }
    out << '\n';
  }
}

FeatureMatrix read_feature_csv(std::istream& in, const FeatureSchema& schema) {
  const CsvTable table = read_csv(in);
  if (table.header.empty() || table.header[0] != "id") {
    throw CsvError("feature CSV must start with an id column", 1);
  }
  if (static_cast<int>(table.header.size()) != schema.width() + 1) {
    throw std::invalid_argument("feature CSV width does not match schema");
  }
  for (int c = 0; c < schema.width(); ++c) {
    if (table.header[c + 1] != schema.column(c).name) {
      throw std::invalid_argument("feature CSV column '" + table.header[c + 1] +
                                  "' does not match schema column '" +
                                  schema.column(c).name + "'");
    }
  }
  FeatureMatrix m;
  m.schema = schema;
  m.values.setConstant(static_cast<Eigen::Index>(table.rows.size()),
                       schema.width(), kNaN);
  m.ids.reserve(table.rows.size());
  for (std::size_t r = 0; r < table.rows.size(); ++r) {
    m.ids.push_back(table.rows[r][0]);
    for (int c = 0; c < schema.width(); ++c) {
      const std::string& cell = table.rows[r][c + 1];
      if (!cell.empty()) m.values(static_cast<Eigen::Index>(r), c) = std::stod(cell);
    }
  }
  return m;
}

std::string schema_to_json(const FeatureSchema& schema,
                           const std::string& config_hash,
                           std::uint64_t seed) {
  nlohmann::ordered_json j;
  j["config_hash"] = config_hash;
  j["seed"] = seed;
  auto& cols = j["columns"] = nlohmann::ordered_json::array();
  for (const auto& c : schema.columns()) {
    cols.push_back({{"name", c.name},
                    {"kind", std::string(kind_name(c.kind))},
                    {"source", c.source == FeatureSource::Osm ? "osm" : "traffic"},
                    {"group", c.group}});
  }
  return j.dump(2) + "\n";
}

FeatureSchema schema_from_json(std::istream& in) {
  nlohmann::json j;
  in >> j;
  std::vector<FeatureColumn> cols;
  for (const auto& c : j.at("columns")) {
    FeatureColumn col;
    col.name = c.at("name").get<std::string>();
    col.kind = kind_from_name(c.at("kind").get<std::string>());
    col.source = c.at("source").get<std::string>() == "traffic"
                     ? FeatureSource::Traffic
                     : FeatureSource::Osm;
    col.group = c.at("group").get<std::string>();
    cols.push_back(std::move(col));
  }
  return FeatureSchema(std::move(cols));
}

}  // namespace roadsafe
