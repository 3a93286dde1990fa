#pragma once

#include <iosfwd>
#include <stdexcept>
#include <vector>

#include "roadsafe/geo.hpp"
#include "roadsafe/osm.hpp"

namespace roadsafe {

struct ReachedPoint {
  GeoPoint point;
  double travel_s = 0.0;
};

/// Region reachable from an origin within a travel-time budget.
struct Isochrone {
  GeoPoint origin;
  double budget_s = 900.0;
  std::vector<ReachedPoint> reached;
  std::vector<GeoPoint> hull;  // convex, counterclockwise
  double area_km2 = 0.0;
  // hull area normalized by the disc reachable at v_max in the same budget
  double reach_factor = 0.0;
  double totpop = 0.0;
};

class UnroutableOrigin : public std::runtime_error {
 public:
  UnroutableOrigin() : std::runtime_error("unroutable origin") {}
};

/// Dijkstra over edge travel times from the origin's snapped node (within
/// 100 m, else UnroutableOrigin). Hull and area use an equirectangular
/// projection centered on the reached points.
Isochrone compute_isochrone(const RoadGraph& graph, const GeoPoint& origin,
                            double budget_s, double v_max_kmh);

/// Convex hull of points under the local equirectangular projection.
std::vector<GeoPoint> convex_hull(std::vector<GeoPoint> points);

/// Polygon area in km^2 (equirectangular at the polygon centroid).
double polygon_area_km2(const std::vector<GeoPoint>& polygon);

struct PopCell {
  double lon = 0.0;
  double lat = 0.0;
  double pop = 0.0;
};

struct PopulationRaster {
  std::vector<PopCell> cells;
};

// Population CSV: `lon,lat,pop` cell centers.
PopulationRaster read_population_csv(std::istream& in);

/// Sum of cell counts whose centers fall inside the hull; boundary counts
/// as inside. Degenerate hulls (< 3 vertices) cover nothing.
double population_in(const std::vector<GeoPoint>& hull,
                     const PopulationRaster& raster);

}  // namespace roadsafe
