#include <doctest.h>

#include <cmath>

#include "support/generators.hpp"
#include "traj/error.hpp"
#include "traj/geo.hpp"

using namespace traj;

TEST_CASE("haversine: identical points have zero distance") {
  const GeoPoint p{42.35, -71.1};
  CHECK(haversine_m(p, p) == 0.0);
}

TEST_CASE("haversine: one degree of longitude on the equator") {
  // One degree of arc on a sphere of radius 6371008.8 m: the closed form is
  // R * pi / 180 = 111195.0802335329 m (derived by hand before implementing).
  const double d = haversine_m({0.0, 0.0}, {0.0, 1.0});
  CHECK(d == doctest::Approx(111195.0802335329).epsilon(1e-9));
  CHECK(std::abs(d - 111194.93) <= 1.0);  // coarse sanity window
}

TEST_CASE("haversine: symmetry over random pairs") {
  testsupport::PortableRng rng(7001);
  for (int i = 0; i < 200; ++i) {
    const GeoPoint a{rng.uniform(-80.0, 80.0), rng.uniform(-179.0, 179.0)};
    const GeoPoint b{rng.uniform(-80.0, 80.0), rng.uniform(-179.0, 179.0)};
    CHECK(haversine_m(a, b) == haversine_m(b, a));
    CHECK(haversine_m(a, b) >= 0.0);
  }
}

TEST_CASE("haversine: scales linearly for small arcs") {
  const double whole = haversine_m({0.0, 0.0}, {0.0, 0.01});
  const double half = haversine_m({0.0, 0.0}, {0.0, 0.005});
  CHECK(half == doctest::Approx(whole / 2.0).epsilon(1e-9));
}

TEST_CASE("polyline length sums edge distances") {
  const Polyline line{{0.0, 0.0}, {0.0, 0.001}, {0.001, 0.001}};
  const double expect = haversine_m(line[0], line[1]) + haversine_m(line[1], line[2]);
  CHECK(polyline_length_m(line) == doctest::Approx(expect));
}

TEST_CASE("point_at_fraction hits endpoints and interior") {
  const Polyline line{{0.0, 0.0}, {0.0, 0.002}};
  const GeoPoint start = point_at_fraction(line, 0.0);
  const GeoPoint end = point_at_fraction(line, 1.0);
  CHECK(start.lat == doctest::Approx(0.0));
  CHECK(start.lon == doctest::Approx(0.0));
  CHECK(end.lon == doctest::Approx(0.002));
  const GeoPoint mid = point_at_fraction(line, 0.5);
  CHECK(mid.lon == doctest::Approx(0.001).epsilon(1e-9));
}

TEST_CASE("projection: point on the interior projects to itself") {
  const Polyline line{{0.0, 0.0}, {0.0, 0.01}};
  const GeoPoint p{0.0, 0.004};
  const Projection proj = project_onto_polyline(p, line);
  CHECK(proj.offset_m == doctest::Approx(0.0).epsilon(1e-6));
  CHECK(proj.snapped.lon == doctest::Approx(0.004).epsilon(1e-9));
  CHECK(proj.along_fraction == doctest::Approx(0.4).epsilon(1e-9));
}

TEST_CASE("projection: beyond the final vertex clamps to it") {
  const Polyline line{{0.0, 0.0}, {0.0, 0.01}};
  const GeoPoint p{0.0, 0.02};
  const Projection proj = project_onto_polyline(p, line);
  CHECK(proj.along_fraction == 1.0);
  CHECK(proj.snapped.lon == doctest::Approx(0.01));
  CHECK(proj.offset_m == doctest::Approx(haversine_m(p, {0.0, 0.01})).epsilon(1e-9));
}

TEST_CASE("projection: before the first vertex clamps to it") {
  const Polyline line{{0.0, 0.0}, {0.0, 0.01}};
  const Projection proj = project_onto_polyline({0.0, -0.005}, line);
  CHECK(proj.along_fraction == 0.0);
  CHECK(proj.snapped.lon == doctest::Approx(0.0));
}

TEST_CASE("projection: equidistant edges resolve to the lower index") {
  // Three vertices around the origin, symmetric by construction: the query
  // at (0,0) sits exactly as far from the first edge (a meridian-parallel
  // run east of it) as from the second (a parallel run north of it). The
  // plane coordinates of both candidates are bitwise mirrors, so the
  // distances tie exactly and the first edge must win.
  const double d = 1e-3;
  const Polyline line{{-d, d}, {d, d}, {d, -d}};
  const Projection proj = project_onto_polyline({0.0, 0.0}, line);
  // Winning candidate: the midpoint of the first edge, at latitude 0.
  CHECK(proj.snapped.lat == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(proj.snapped.lon == doctest::Approx(d).epsilon(1e-9));
  CHECK(proj.along_fraction < 0.5);
}

TEST_CASE("projection: offset never beats the distance to any vertex") {
  testsupport::PortableRng rng(7002);
  const Polyline line{{42.30, -71.20}, {42.31, -71.19}, {42.315, -71.17}, {42.33, -71.165}};
  for (int i = 0; i < 100; ++i) {
    const GeoPoint p{rng.uniform(42.29, 42.34), rng.uniform(-71.21, -71.16)};
    const Projection proj = project_onto_polyline(p, line);
    for (const GeoPoint& v : line) {
      CHECK(proj.offset_m <= haversine_m(p, v) + 1e-9);
    }
  }
}

TEST_CASE("projection: along_fraction is non-decreasing along the line itself") {
  const Polyline line{{42.30, -71.20}, {42.31, -71.19}, {42.315, -71.17}, {42.33, -71.165}};
  double prev = -1.0;
  for (int i = 0; i <= 50; ++i) {
    const GeoPoint p = point_at_fraction(line, static_cast<double>(i) / 50.0);
    const Projection proj = project_onto_polyline(p, line);
    CHECK(proj.along_fraction >= prev - 1e-12);
    prev = proj.along_fraction;
  }
}

TEST_CASE("projection: degenerate polylines are rejected") {
  CHECK_THROWS_AS(project_onto_polyline({0.0, 0.0}, Polyline{{1.0, 1.0}}), InputError);
  CHECK_THROWS_AS(project_onto_polyline({0.0, 0.0}, Polyline{{1.0, 1.0}, {1.0, 1.0}}), InputError);
}
