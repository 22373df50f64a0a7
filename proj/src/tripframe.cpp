#include "traj/tripframe.hpp"

#include <algorithm>
#include <cmath>

#include "traj/error.hpp"

namespace traj {
namespace {

// Backward steps up to this size are treated as matcher jitter and clamped;
// anything larger means the point is wrong and gets dropped.
constexpr double kMaxBackwardJumpM = 100.0;

std::vector<const MatchedPoint*> valid_points(std::span<const MatchedPoint> points) {
  std::vector<const MatchedPoint*> kept;
  kept.reserve(points.size());
  for (const auto& p : points) {
    if (p.valid) kept.push_back(&p);
  }
  return kept;
}

}  // namespace

void validate_series(const TimeDistanceSeries& series) {
  if (series.t.size() != series.d.size()) throw InputError("series t/d length mismatch");
  if (series.n() < 3) throw InputError("insufficient data");
  if (series.t.front() != 0.0) throw InputError("series must start at t = 0");
  if (series.d.front() != 0.0) throw InputError("series must start at d = 0");
  for (size_t i = 0; i + 1 < series.n(); ++i) {
    if (!(series.t[i + 1] > series.t[i])) throw InputError("series times must be strictly increasing");
    if (series.d[i + 1] < series.d[i]) throw InputError("series distances must be non-decreasing");
  }
  for (size_t i = 0; i < series.n(); ++i) {
    if (!std::isfinite(series.t[i]) || !std::isfinite(series.d[i])) {
      throw InputError("series contains non-finite values");
    }
  }
}

std::vector<double> time_into_trip(std::span<const MatchedPoint> points) {
  const auto kept = valid_points(points);
  if (kept.empty()) throw InputError("no valid points");
  if (!points.front().valid) throw InputError("first point must be valid");
  const int64_t origin = kept.front()->time;
  std::vector<double> t;
  t.reserve(kept.size());
  for (const auto* p : kept) t.push_back(static_cast<double>(p->time - origin));
  return t;
}

std::vector<double> distance_into_trip(std::span<const MatchedPoint> points,
                                       const RoutePattern& pattern) {
  const auto kept = valid_points(points);
  if (kept.empty()) throw InputError("no valid points");

  std::vector<double> prefix(pattern.segments.size() + 1, 0.0);
  for (size_t i = 0; i < pattern.segments.size(); ++i) {
    prefix[i + 1] = prefix[i] + pattern.segments[i].length_m;
  }

  auto check = [&](const MatchedPoint& p) {
    if (p.segment_index >= pattern.segments.size()) {
      throw InputError("matched point references segment outside pattern");
    }
  };
  check(*kept.front());
  const double first_frac_m =
      pattern.segments[kept.front()->segment_index].length_m * kept.front()->along_fraction;

  std::vector<double> d;
  d.reserve(kept.size());
  for (const auto* p : kept) {
    check(*p);
    d.push_back(prefix[p->segment_index] +
                pattern.segments[p->segment_index].length_m * p->along_fraction - first_frac_m);
  }
  return d;
}

TimeDistanceSeries build_series(std::span<const MatchedPoint> points, const RoutePattern& pattern) {
  // Keep valid points; among points sharing a timestamp keep the best fix.
  std::vector<MatchedPoint> kept;
  for (const auto& p : points) {
    if (!p.valid) continue;
    if (!kept.empty() && kept.back().time == p.time) {
      if (p.offset_m < kept.back().offset_m) kept.back() = p;
      continue;
    }
    if (!kept.empty() && p.time < kept.back().time) {
      throw InputError("heartbeats must be sorted by timestamp");
    }
    kept.push_back(p);
  }
  if (kept.size() < 3) throw InputError("insufficient data");

  const std::vector<double> t = time_into_trip(kept);
  std::vector<double> d = distance_into_trip(kept, pattern);
  // Distances are relative to the first kept point even when the trip enters
  // the pattern partway through.
  const double base = d.front();
  for (double& v : d) v -= base;

  TimeDistanceSeries series;
  series.origin_time = kept.front().time;
  double running_max = 0.0;
  for (size_t i = 0; i < kept.size(); ++i) {
    if (d[i] < running_max - kMaxBackwardJumpM) continue;  // discard large backward jumps
    const double clamped = std::max(d[i], running_max);
    series.t.push_back(t[i]);
    series.d.push_back(clamped);
    running_max = clamped;
  }
  if (series.n() < 3) throw InputError("insufficient data");
  validate_series(series);
  return series;
}

}  // namespace traj
