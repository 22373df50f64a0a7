#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "traj/ingest.hpp"
#include "traj/mapmatch.hpp"

namespace traj {

// A cleaned trip in (seconds-into-trip, meters-into-trip) coordinates:
// t strictly increasing with t[0] = 0, d non-decreasing with d[0] = 0,
// at least three points.
struct TimeDistanceSeries {
  std::vector<double> t;
  std::vector<double> d;
  int64_t origin_time = 0;  // Unix seconds of the first point
  size_t n() const { return t.size(); }
};

// Throws InputError when the invariants above do not hold.
void validate_series(const TimeDistanceSeries& series);

// Whole seconds since the first point, over valid points. The first point
// must be valid; invalid points are skipped.
std::vector<double> time_into_trip(std::span<const MatchedPoint> points);

// Meters along the pattern relative to the first point's position within its
// segment: cumulative length of the segments before the point's, plus the
// fractional position on its own segment, minus the first point's fractional
// position on the first point's segment. When a trip starts on the first
// segment of the pattern this starts at zero.
std::vector<double> distance_into_trip(std::span<const MatchedPoint> points,
                                       const RoutePattern& pattern);

// Full cleaning pass: drop invalid points, collapse duplicate timestamps
// (keeping the smallest offset), rebase distance to the first kept point,
// clamp small backward distance steps up to the running maximum, and drop
// points that jump backward by more than 100 m. Throws InputError
// ("insufficient data") when fewer than three points survive.
TimeDistanceSeries build_series(std::span<const MatchedPoint> points, const RoutePattern& pattern);

}  // namespace traj
