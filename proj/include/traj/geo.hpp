#pragma once

#include <vector>

namespace traj {

inline constexpr double kEarthRadiusM = 6371008.8;
inline constexpr double kPi = 3.14159265358979323846;

struct GeoPoint {
  double lat = 0.0;  // degrees, [-90, 90]
  double lon = 0.0;  // degrees, [-180, 180]
};

using Polyline = std::vector<GeoPoint>;

bool geopoint_in_bounds(const GeoPoint& p);

// Great-circle distance in meters on a spherical earth.
double haversine_m(const GeoPoint& a, const GeoPoint& b);

// Sum of great-circle edge lengths.
double polyline_length_m(const Polyline& line);

// Point at `fraction` (in [0, 1]) of the polyline's arc length.
GeoPoint point_at_fraction(const Polyline& line, double fraction);

struct Projection {
  GeoPoint snapped;             // nearest point on the polyline
  double along_fraction = 0.0;  // arc length from start to snapped / total, [0, 1]
  double offset_m = 0.0;        // distance from the query point to snapped
};

// Nearest point on a polyline under a local equirectangular approximation
// centered at `p` (adequate for the tens-of-meters offsets GPS data shows).
// Candidates beyond either end clamp to the end vertex. Ties between edges
// resolve to the lower edge index. Throws InputError for polylines with
// fewer than two vertices or zero total length.
Projection project_onto_polyline(const GeoPoint& p, const Polyline& line);

}  // namespace traj
