#include <algorithm>
#include <set>
#include <vector>

#include "doctest.h"
#include "roadsafe/isochrone.hpp"
#include "roadsafe/rng.hpp"

using namespace roadsafe;

namespace {

// independent oracle: Floyd-Warshall over the same edge travel times
std::set<std::int64_t> brute_force_reached(const RoadGraph& graph,
                                           std::int64_t start_id,
                                           double budget_s) {
  const int n = static_cast<int>(graph.node_count());
  const double inf = 1e18;
  std::vector<std::vector<double>> dist(n, std::vector<double>(n, inf));
  for (int i = 0; i < n; ++i) dist[i][i] = 0.0;
  for (const auto& e : graph.edges()) {
    const int u = graph.node_index(e.from);
    const int v = graph.node_index(e.to);
    dist[u][v] = std::min(dist[u][v], e.len_m / (e.kmh / 3.6));
  }
  for (int k = 0; k < n; ++k) {
    for (int i = 0; i < n; ++i) {
      for (int j = 0; j < n; ++j) {
        dist[i][j] = std::min(dist[i][j], dist[i][k] + dist[k][j]);
      }
    }
  }
  const int s = graph.node_index(start_id);
  std::set<std::int64_t> reached;
  for (int i = 0; i < n; ++i) {
    if (dist[s][i] <= budget_s) reached.insert(graph.node_ids()[i]);
  }
  return reached;
}

RoadGraph random_graph(Rng& rng, int n_nodes, double max_kmh) {
  RoadGraph g;
  std::vector<GeoPoint> pts;
  for (int i = 0; i < n_nodes; ++i) {
    pts.emplace_back(45.0 + rng.uniform01() * 0.2, 10.0 + rng.uniform01() * 0.2);
    g.add_node(i + 1, pts.back());
  }
  const int n_edges = n_nodes + static_cast<int>(rng.below(3 * n_nodes));
  for (int e = 0; e < n_edges; ++e) {
    const auto a = static_cast<int>(rng.below(n_nodes));
    const auto b = static_cast<int>(rng.below(n_nodes));
    if (a == b) continue;
    const double len = haversine_m(pts[a], pts[b]);
    if (!(len > 0.0)) continue;
    const double kmh = 10.0 + rng.uniform01() * (max_kmh - 10.0);
    g.add_edge({a + 1, b + 1, len, kmh, 1});
    if (rng.uniform01() < 0.5) g.add_edge({b + 1, a + 1, len, kmh, 1});
  }
  g.finalize();
  return g;
}

}  // namespace

TEST_CASE("single isolated node: degenerate hull, zero area and reach") {
  RoadGraph g;
  g.add_node(1, GeoPoint(45.0, 10.0));
  g.finalize();
  const Isochrone iso = compute_isochrone(g, GeoPoint(45.0, 10.0), 900.0, 130.0);
  REQUIRE(iso.reached.size() == 1);
  CHECK(iso.area_km2 == 0.0);
  CHECK(iso.reach_factor == 0.0);
}

TEST_CASE("straight 10 km road at 60 km/h is fully reached in 15 minutes") {
  // 3-node line; 15 km reachable exceeds the 10 km road
  RoadGraph g;
  const GeoPoint a(45.0, 10.0);
  const GeoPoint b(45.0449, 10.0);  // ~5 km north
  const GeoPoint c(45.0898, 10.0);  // ~10 km north
  g.add_node(1, a);
  g.add_node(2, b);
  g.add_node(3, c);
  const double ab = haversine_m(a, b);
  const double bc = haversine_m(b, c);
  g.add_edge({1, 2, ab, 60.0, 1});
  g.add_edge({2, 1, ab, 60.0, 1});
  g.add_edge({2, 3, bc, 60.0, 1});
  g.add_edge({3, 2, bc, 60.0, 1});
  g.finalize();

  const Isochrone iso = compute_isochrone(g, a, 900.0, 130.0);
  REQUIRE(iso.reached.size() == 3);
  double farthest = 0.0;
  for (const auto& r : iso.reached) {
    farthest = std::max(farthest, haversine_m(a, r.point));
  }
  CHECK(farthest == doctest::Approx(haversine_m(a, c)).epsilon(1e-9));
  // hand Dijkstra: 10 km at 60 km/h = 600 s
  const double t_c = (ab + bc) / (60.0 / 3.6);
  CHECK(t_c == doctest::Approx(600.0).epsilon(0.01));
}

TEST_CASE("unroutable origin raises") {
  RoadGraph g;
  g.add_node(1, GeoPoint(45.0, 10.0));
  g.finalize();
  CHECK_THROWS_AS(compute_isochrone(g, GeoPoint(46.0, 10.0), 900.0, 130.0),
                  UnroutableOrigin);
}

TEST_CASE("reached set equals brute-force shortest paths on random graphs") {
  Rng rng(424242);
  for (int trial = 0; trial < 30; ++trial) {
    const int n = 5 + static_cast<int>(rng.below(46));
    const RoadGraph g = random_graph(rng, n, 120.0);
    const double budget = 30.0 + rng.uniform01() * 600.0;
    const std::int64_t start = 1 + static_cast<std::int64_t>(rng.below(n));

    const Isochrone iso =
        compute_isochrone(g, g.node_point(start), budget, 130.0);
    std::set<std::int64_t> got;
    for (const auto& r : iso.reached) {
      for (int i = 0; i < static_cast<int>(g.node_count()); ++i) {
        if (g.node_points()[i].lat == r.point.lat &&
            g.node_points()[i].lon == r.point.lon) {
          got.insert(g.node_ids()[i]);
        }
      }
    }
    CHECK(got == brute_force_reached(g, start, budget));
  }
}

TEST_CASE("reach factor stays in [0,1] when edge speeds stay under v_max") {
  Rng rng(99);
  for (int trial = 0; trial < 10; ++trial) {
    const RoadGraph g = random_graph(rng, 40, 120.0);
    const Isochrone iso =
        compute_isochrone(g, g.node_point(1), 900.0, 130.0);
    CHECK(iso.reach_factor >= 0.0);
    CHECK(iso.reach_factor <= 1.0);
  }
}

TEST_CASE("growing the budget never shrinks the reached set") {
  Rng rng(1234);
  const RoadGraph g = random_graph(rng, 40, 100.0);
  std::size_t prev = 0;
  for (double budget : {60.0, 180.0, 420.0, 900.0, 1800.0}) {
    const Isochrone iso = compute_isochrone(g, g.node_point(1), budget, 130.0);
    CHECK(iso.reached.size() >= prev);
    prev = iso.reached.size();
  }
}

TEST_CASE("population_in: empty hull, covering hull, half plane") {
  PopulationRaster raster;
  double total = 0.0;
  for (int i = 0; i < 10; ++i) {
    for (int j = 0; j < 10; ++j) {
      raster.cells.push_back({10.0 + j * 0.01, 45.0 + i * 0.01, 7.0});
      total += 7.0;
    }
  }

  CHECK(population_in({}, raster) == 0.0);

  const std::vector<GeoPoint> all{GeoPoint(44.9, 9.9), GeoPoint(44.9, 10.2),
                                  GeoPoint(45.2, 10.2), GeoPoint(45.2, 9.9)};
  CHECK(population_in(all, raster) == total);

  // covers rows 0..4 fully plus the boundary row at lat 45.05
  const std::vector<GeoPoint> half{GeoPoint(44.99, 9.99), GeoPoint(44.99, 10.11),
                                   GeoPoint(45.05, 10.11), GeoPoint(45.05, 9.99)};
  const double half_pop = population_in(half, raster);
  CHECK(half_pop >= total / 2.0 - 10 * 7.0);
  CHECK(half_pop <= total / 2.0 + 10 * 7.0);
}

TEST_CASE("convex hull area of a known square") {
  // ~1.11 km x ~1.11 km square at the equator
  std::vector<GeoPoint> pts{GeoPoint(0.0, 0.0), GeoPoint(0.01, 0.0),
                            GeoPoint(0.0, 0.01), GeoPoint(0.01, 0.01),
                            GeoPoint(0.005, 0.005)};
  const auto hull = convex_hull(pts);
  CHECK(hull.size() == 4);
  const double side_km = 0.01 * 111.3194907932736;
  CHECK(polygon_area_km2(hull) ==
        doctest::Approx(side_km * side_km).epsilon(1e-4));
}
