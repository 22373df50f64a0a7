#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "traj/geo.hpp"
#include "traj/ingest.hpp"

namespace traj {

struct MatchConfig {
  double max_offset_m = 50.0;  // beyond this a point is marked invalid
  int lookahead_segments = 5;  // search window depth past the current segment
};

MatchConfig match_config_default();

struct MatchedPoint {
  size_t index = 0;    // position in the input heartbeat list
  int64_t time = 0;    // Unix seconds
  GeoPoint matched;    // snapped coordinate on the pattern
  size_t segment_index = 0;
  double along_fraction = 0.0;
  double offset_m = 0.0;
  bool valid = false;
};

// Snap each heartbeat to the route pattern. The search never moves upstream:
// it covers the previously matched position through `lookahead_segments`
// segments downstream, so (segment_index, along_fraction) is non-decreasing
// across valid points. Points whose best in-window offset exceeds
// max_offset_m are kept but marked invalid. Throws InputError for an empty
// heartbeat list ("empty heartbeat list") or when nothing at all matches
// ("trip off-route").
std::vector<MatchedPoint> match_trip(std::span<const HeartbeatRecord> heartbeats,
                                     const RoutePattern& pattern,
                                     const MatchConfig& config = MatchConfig{});

}  // namespace traj
