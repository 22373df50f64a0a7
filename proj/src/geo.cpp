#include "traj/geo.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "traj/error.hpp"

namespace traj {
namespace {

constexpr double kDegToRad = kPi / 180.0;

struct Vec2 {
  double x = 0.0;
  double y = 0.0;
};

double dot(const Vec2& a, const Vec2& b) { return a.x * b.x + a.y * b.y; }

}  // namespace

bool geopoint_in_bounds(const GeoPoint& p) {
  return p.lat >= -90.0 && p.lat <= 90.0 && p.lon >= -180.0 && p.lon <= 180.0;
}

double haversine_m(const GeoPoint& a, const GeoPoint& b) {
  const double phi1 = a.lat * kDegToRad;
  const double phi2 = b.lat * kDegToRad;
  const double dphi = (b.lat - a.lat) * kDegToRad;
  const double dlam = (b.lon - a.lon) * kDegToRad;
  const double sp = std::sin(dphi / 2.0);
  const double sl = std::sin(dlam / 2.0);
  const double h = sp * sp + std::cos(phi1) * std::cos(phi2) * sl * sl;
  return 2.0 * kEarthRadiusM * std::asin(std::min(1.0, std::sqrt(h)));
}

double polyline_length_m(const Polyline& line) {
  double total = 0.0;
  for (size_t i = 0; i + 1 < line.size(); ++i) {
    total += haversine_m(line[i], line[i + 1]);
  }
  return total;
}

GeoPoint point_at_fraction(const Polyline& line, double fraction) {
  if (line.size() < 2) throw InputError("polyline needs at least two vertices");
  const double total = polyline_length_m(line);
  if (total <= 0.0) throw InputError("degenerate polyline with zero length");
  fraction = std::clamp(fraction, 0.0, 1.0);
  double target = fraction * total;
  for (size_t i = 0; i + 1 < line.size(); ++i) {
    const double edge = haversine_m(line[i], line[i + 1]);
    if (target <= edge || i + 2 == line.size()) {
      const double t = edge > 0.0 ? std::clamp(target / edge, 0.0, 1.0) : 0.0;
      return GeoPoint{line[i].lat + t * (line[i + 1].lat - line[i].lat),
                      line[i].lon + t * (line[i + 1].lon - line[i].lon)};
    }
    target -= edge;
  }
  return line.back();
}

Projection project_onto_polyline(const GeoPoint& p, const Polyline& line) {
  if (line.size() < 2) throw InputError("polyline needs at least two vertices");

  // Local flat-earth frame centered at the query point; the map is affine in
  // (lat, lon), so an interpolation parameter found in the plane transfers
  // directly back to geographic coordinates.
  const double coslat = std::cos(p.lat * kDegToRad);
  auto to_plane = [&](const GeoPoint& g) {
    return Vec2{kEarthRadiusM * (g.lon - p.lon) * kDegToRad * coslat,
                kEarthRadiusM * (g.lat - p.lat) * kDegToRad};
  };

  std::vector<double> edge_len(line.size() - 1);
  double total = 0.0;
  for (size_t i = 0; i + 1 < line.size(); ++i) {
    edge_len[i] = haversine_m(line[i], line[i + 1]);
    total += edge_len[i];
  }
  if (total <= 0.0) throw InputError("degenerate polyline with zero length");

  size_t best_edge = 0;
  double best_t = 0.0;
  double best_dist2 = std::numeric_limits<double>::infinity();
  for (size_t i = 0; i + 1 < line.size(); ++i) {
    const Vec2 a = to_plane(line[i]);
    const Vec2 b = to_plane(line[i + 1]);
    const Vec2 ab{b.x - a.x, b.y - a.y};
    const double len2 = dot(ab, ab);
    // The query point sits at the origin of the local frame.
    const double t = len2 > 0.0 ? std::clamp(-dot(a, ab) / len2, 0.0, 1.0) : 0.0;
    const Vec2 q{a.x + t * ab.x, a.y + t * ab.y};
    const double d2 = dot(q, q);
    if (d2 < best_dist2) {  // strict: ties keep the lower edge index
      best_dist2 = d2;
      best_edge = i;
      best_t = t;
    }
  }

  GeoPoint snapped{
      line[best_edge].lat + best_t * (line[best_edge + 1].lat - line[best_edge].lat),
      line[best_edge].lon + best_t * (line[best_edge + 1].lon - line[best_edge].lon)};

  double arc = 0.0;
  for (size_t i = 0; i < best_edge; ++i) arc += edge_len[i];
  arc += best_t * edge_len[best_edge];

  Projection out;
  out.snapped = snapped;
  out.along_fraction = std::clamp(arc / total, 0.0, 1.0);
  out.offset_m = haversine_m(p, snapped);
  return out;
}

}  // namespace traj
