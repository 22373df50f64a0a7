#include "traj/mapmatch.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "traj/error.hpp"

namespace traj {
namespace {

struct Candidate {
  size_t segment_index = 0;
  double along_fraction = 0.0;
  double offset_m = std::numeric_limits<double>::infinity();
  GeoPoint snapped;
};

Candidate project_full(const GeoPoint& p, const RoutePattern& pattern, size_t seg) {
  const Projection proj = project_onto_polyline(p, pattern.segments[seg].polyline);
  return Candidate{seg, proj.along_fraction, proj.offset_m, proj.snapped};
}

// Projection onto the tail of a segment, at or past `min_fraction` of its arc
// length. Keeps the matcher from sliding backward when GPS jitter lands a
// point behind the previous match on the same segment.
Candidate project_clamped(const GeoPoint& p, const RoutePattern& pattern, size_t seg,
                          double min_fraction) {
  const Polyline& line = pattern.segments[seg].polyline;
  const GeoPoint anchor = point_at_fraction(line, min_fraction);
  if (min_fraction >= 1.0) {
    return Candidate{seg, 1.0, haversine_m(p, anchor), anchor};
  }

  // Build the sub-polyline from the anchor to the segment end.
  const double total = polyline_length_m(line);
  double target = min_fraction * total;
  Polyline tail;
  tail.push_back(anchor);
  double arc = 0.0;
  for (size_t i = 0; i + 1 < line.size(); ++i) {
    const double edge = haversine_m(line[i], line[i + 1]);
    if (arc + edge > target) tail.push_back(line[i + 1]);
    arc += edge;
  }
  if (tail.size() < 2 || polyline_length_m(tail) <= 0.0) {
    return Candidate{seg, min_fraction, haversine_m(p, anchor), anchor};
  }

  const Projection proj = project_onto_polyline(p, tail);
  const double tail_len = total - target;
  double fraction = (target + proj.along_fraction * tail_len) / total;
  fraction = std::clamp(fraction, min_fraction, 1.0);
  return Candidate{seg, fraction, proj.offset_m, proj.snapped};
}

}  // namespace

MatchConfig match_config_default() { return MatchConfig{}; }

std::vector<MatchedPoint> match_trip(std::span<const HeartbeatRecord> heartbeats,
                                     const RoutePattern& pattern, const MatchConfig& config) {
  if (heartbeats.empty()) throw InputError("empty heartbeat list");
  if (pattern.segments.empty()) throw InputError("route pattern has no segments");
  if (config.max_offset_m <= 0.0) throw InputError("max_offset_m must be positive");
  if (config.lookahead_segments < 0) throw InputError("lookahead_segments must be >= 0");

  const size_t seg_count = pattern.segments.size();
  std::vector<MatchedPoint> out;
  out.reserve(heartbeats.size());

  bool anchored = false;
  size_t prev_seg = 0;
  double prev_frac = 0.0;
  size_t valid_count = 0;

  for (size_t i = 0; i < heartbeats.size(); ++i) {
    const GeoPoint p{heartbeats[i].lat, heartbeats[i].lon};
    Candidate best;
    if (!anchored) {
      // No position fix yet: consider the whole pattern.
      for (size_t seg = 0; seg < seg_count; ++seg) {
        const Candidate c = project_full(p, pattern, seg);
        if (c.offset_m < best.offset_m) best = c;
      }
    } else {
      // Forward window only; ties keep the smallest segment advance because
      // candidates are visited in order and compared strictly.
      const size_t last = std::min(seg_count - 1, prev_seg + static_cast<size_t>(config.lookahead_segments));
      for (size_t seg = prev_seg; seg <= last; ++seg) {
        const Candidate c = seg == prev_seg ? project_clamped(p, pattern, seg, prev_frac)
                                            : project_full(p, pattern, seg);
        if (c.offset_m < best.offset_m) best = c;
      }
    }

    MatchedPoint mp;
    mp.index = i;
    mp.time = heartbeats[i].timestamp;
    mp.matched = best.snapped;
    mp.segment_index = best.segment_index;
    mp.along_fraction = best.along_fraction;
    mp.offset_m = best.offset_m;
    mp.valid = best.offset_m <= config.max_offset_m;
    if (mp.valid) {
      anchored = true;
      prev_seg = mp.segment_index;
      prev_frac = mp.along_fraction;
      ++valid_count;
    }
    out.push_back(mp);
  }

  if (valid_count == 0) throw InputError("trip off-route");
  return out;
}

}  // namespace traj
