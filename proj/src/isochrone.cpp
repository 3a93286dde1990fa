#include "roadsafe/isochrone.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <limits>
#include <queue>

#include "roadsafe/csv.hpp"

namespace roadsafe {

namespace {

constexpr double kDegToRad = 0.017453292519943295769236907684886;
constexpr double kMetersPerDegLat = 111319.49079327358;

struct Projected {
  double x = 0.0;
  double y = 0.0;
};

Projected project(const GeoPoint& p, const GeoPoint& center) {
  const double coslat = std::cos(center.lat * kDegToRad);
  return {(p.lon - center.lon) * kMetersPerDegLat * coslat,
          (p.lat - center.lat) * kMetersPerDegLat};
}

double cross(const Projected& o, const Projected& a, const Projected& b) {
  return (a.x - o.x) * (b.y - o.y) - (a.y - o.y) * (b.x - o.x);
}

}  // namespace

std::vector<GeoPoint> convex_hull(std::vector<GeoPoint> points) {
  if (points.size() < 3) return points;

  GeoPoint center{0, 0};
  for (const auto& p : points) {
    center.lat += p.lat;
    center.lon += p.lon;
  }
  center.lat /= static_cast<double>(points.size());
  center.lon /= static_cast<double>(points.size());

  struct Entry {
    Projected xy;
    GeoPoint geo;
  };
  std::vector<Entry> pts;
  pts.reserve(points.size());
  for (const auto& p : points) pts.push_back({project(p, center), p});
  std::sort(pts.begin(), pts.end(), [](const Entry& a, const Entry& b) {
    return a.xy.x < b.xy.x || (a.xy.x == b.xy.x && a.xy.y < b.xy.y);
  });
  pts.erase(std::unique(pts.begin(), pts.end(),
                        [](const Entry& a, const Entry& b) {
                          return a.xy.x == b.xy.x && a.xy.y == b.xy.y;
                        }),
            pts.end());
  if (pts.size() < 3) {
    std::vector<GeoPoint> degenerate;
    for (const auto& e : pts) degenerate.push_back(e.geo);
    return degenerate;
  }

  // Andrew monotone chain
  std::vector<Entry> hull(2 * pts.size());
  std::size_t k = 0;
  for (const auto& p : pts) {
    while (k >= 2 && cross(hull[k - 2].xy, hull[k - 1].xy, p.xy) <= 0) --k;
    hull[k++] = p;
  }
  const std::size_t lower = k + 1;
  for (auto it = pts.rbegin() + 1; it != pts.rend(); ++it) {
    while (k >= lower && cross(hull[k - 2].xy, hull[k - 1].xy, it->xy) <= 0) --k;
    hull[k++] = *it;
  }
  hull.resize(k - 1);

  std::vector<GeoPoint> out;
  out.reserve(hull.size());
  for (const auto& e : hull) out.push_back(e.geo);
  return out;
}

double polygon_area_km2(const std::vector<GeoPoint>& polygon) {
  if (polygon.size() < 3) return 0.0;
  GeoPoint center{0, 0};
  for (const auto& p : polygon) {
    center.lat += p.lat;
    center.lon += p.lon;
  }
  center.lat /= static_cast<double>(polygon.size());
  center.lon /= static_cast<double>(polygon.size());

  double twice_area = 0.0;
  for (std::size_t i = 0; i < polygon.size(); ++i) {
    const Projected a = project(polygon[i], center);
    const Projected b = project(polygon[(i + 1) % polygon.size()], center);
    twice_area += a.x * b.y - b.x * a.y;
  }
  return std::abs(twice_area) / 2.0 / 1e6;
}

Isochrone compute_isochrone(const RoadGraph& graph, const GeoPoint& origin,
                            double budget_s, double v_max_kmh) {
  if (!(budget_s > 0.0)) {
    throw std::invalid_argument("isochrone budget must be positive");
  }
  const auto snapped = graph.nearest_node(origin, 100.0);
  if (!snapped) throw UnroutableOrigin();

  Isochrone iso;
  iso.origin = origin;
  iso.budget_s = budget_s;

  const int start = snapped->first;
  const auto n = static_cast<int>(graph.node_count());
  std::vector<double> dist(n, std::numeric_limits<double>::infinity());
  using Item = std::pair<double, int>;
  std::priority_queue<Item, std::vector<Item>, std::greater<>> queue;
  dist[start] = 0.0;
  queue.emplace(0.0, start);
  while (!queue.empty()) {
    const auto [d, u] = queue.top();
    queue.pop();
    if (d > dist[u]) continue;
    for (const auto& [v, seconds] : graph.out_edges(u)) {
      const double nd = d + seconds;
      if (nd <= budget_s && nd < dist[v]) {
        dist[v] = nd;
        queue.emplace(nd, v);
      }
    }
  }

  std::vector<GeoPoint> pts;
  for (int i = 0; i < n; ++i) {
    if (dist[i] <= budget_s) {
      iso.reached.push_back({graph.node_points()[i], dist[i]});
      pts.push_back(graph.node_points()[i]);
    }
  }

  iso.hull = convex_hull(std::move(pts));
  iso.area_km2 = polygon_area_km2(iso.hull);
  const double radius_km = budget_s * v_max_kmh / 3.6 / 1000.0;
  const double disc_km2 = M_PI * radius_km * radius_km;
  iso.reach_factor =
      disc_km2 > 0.0 ? std::clamp(iso.area_km2 / disc_km2, 0.0, 1.0) : 0.0;
  return iso;
}

PopulationRaster read_population_csv(std::istream& in) {
  const CsvTable table = read_csv(in);
  const int clon = table.column("lon");
  const int clat = table.column("lat");
  const int cpop = table.column("pop");
  if (clon < 0 || clat < 0 || cpop < 0) {
    throw CsvError("population CSV needs columns lon,lat,pop", 1);
  }
  PopulationRaster raster;
  raster.cells.reserve(table.rows.size());
  for (const auto& row : table.rows) {
    raster.cells.push_back(
        {std::stod(row[clon]), std::stod(row[clat]), std::stod(row[cpop])});
  }
  return raster;
}

namespace {

// Winding-free even-odd test in plain lat/lon coordinates; points on an
// edge count as inside.
bool point_in_polygon(const GeoPoint& p, const std::vector<GeoPoint>& poly) {
  bool inside = false;
  const std::size_t n = poly.size();
  for (std::size_t i = 0, j = n - 1; i < n; j = i++) {
    const double xi = poly[i].lon, yi = poly[i].lat;
    const double xj = poly[j].lon, yj = poly[j].lat;
    // boundary check
    const double cross_v = (xj - xi) * (p.lat - yi) - (yj - yi) * (p.lon - xi);
    if (std::abs(cross_v) < 1e-12 &&
        p.lon >= std::min(xi, xj) - 1e-12 &&
        p.lon <= std::max(xi, xj) + 1e-12 &&
        p.lat >= std::min(yi, yj) - 1e-12 &&
        p.lat <= std::max(yi, yj) + 1e-12) {
      return true;
    }
    const bool intersects = (yi > p.lat) != (yj > p.lat);
    if (intersects) {
      const double x_at = xi + (p.lat - yi) / (yj - yi) * (xj - xi);
      if (p.lon < x_at) inside = !inside;
    }
  }
  return inside;
}

}  // namespace

double population_in(const std::vector<GeoPoint>& hull,
                     const PopulationRaster& raster) {
  if (hull.size() < 3) return 0.0;
  double total = 0.0;
  for (const auto& cell : raster.cells) {
    if (point_in_polygon(GeoPoint(cell.lat, cell.lon), hull)) {
      total += cell.pop;
    }
  }
  return total;
}

}  // namespace roadsafe
