#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "traj/geo.hpp"

namespace traj {

struct HeartbeatRecord {
  std::string trip_id;
  int64_t timestamp = 0;  // Unix seconds, UTC
  double lat = 0.0;
  double lon = 0.0;
};

struct AvlDoorEvent {
  std::string trip_id;
  int64_t open_at = 0;   // Unix seconds
  int64_t close_at = 0;  // strictly after open_at
  std::string stop_id;   // may be empty
};

struct RouteSegment {
  std::string segment_id;
  Polyline polyline;      // at least two vertices
  double length_m = 0.0;  // declared or recomputed geodesic length
};

struct RoutePattern {
  std::string pattern_id;
  std::vector<RouteSegment> segments;  // ordered by sequence
  double total_length_m() const;
};

struct RowReject {
  size_t line = 0;  // 1-based line number in the input
  std::string message;
};

template <class T>
struct LoadResult {
  std::vector<T> records;
  std::vector<RowReject> rejects;
  size_t rows = 0;      // data rows seen (header excluded)
  size_t accepted = 0;  // rows that parsed cleanly (pre any merging)
  size_t subsecond_truncations = 0;
};

enum class HeartbeatFormat { kCsv, kJsonLines };

// Parse an ISO-8601 UTC timestamp ("2022-04-25T08:24:45Z", space separator
// and numeric offsets also accepted) to Unix seconds. Fractional seconds are
// dropped; *truncated is set when that happens. Returns nullopt on garbage.
std::optional<int64_t> parse_timestamp(std::string_view text, bool* truncated = nullptr);
std::string format_timestamp(int64_t unix_seconds);

// Row-level problems (bad coordinates, unparseable timestamps) are reported
// in `rejects` with line numbers; only a malformed header aborts the load.
LoadResult<HeartbeatRecord> load_heartbeats(std::istream& in, HeartbeatFormat format);

// GeoJSON FeatureCollection of LineString features carrying segment_id,
// sequence (contiguous integers), and optional length_m properties. A
// declared length more than 0.5% off the recomputed geodesic length, a
// non-LineString geometry, or a sequence gap is fatal.
RoutePattern load_route_pattern(std::istream& in);

// CSV columns: trip_id,open_at,close_at,stop_id. Events come back sorted by
// open_at with overlapping intervals of the same trip merged.
LoadResult<AvlDoorEvent> load_avl_events(std::istream& in);

void write_heartbeats_csv(std::ostream& out, std::span<const HeartbeatRecord> records);
void write_heartbeats_jsonl(std::ostream& out, std::span<const HeartbeatRecord> records);
void write_avl_csv(std::ostream& out, std::span<const AvlDoorEvent> events);
void write_route_geojson(std::ostream& out, const RoutePattern& pattern);

}  // namespace traj
