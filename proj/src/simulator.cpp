#include "traj/simulator.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "traj/error.hpp"

namespace traj {
namespace {

constexpr double kTruthHz = 10.0;

// Uniform doubles in [0, 1) built directly from the engine so the stream is
// identical on every platform (distribution classes are not portable).
double next_u01(std::mt19937_64& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

struct GaussianSource {
  std::mt19937_64& rng;
  bool have_spare = false;
  double spare = 0.0;

  double next() {  // Box-Muller
    if (have_spare) {
      have_spare = false;
      return spare;
    }
    double u1 = next_u01(rng);
    while (u1 <= 0.0) u1 = next_u01(rng);
    const double u2 = next_u01(rng);
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double theta = 2.0 * kPi * u2;
    spare = r * std::sin(theta);
    have_spare = true;
    return r * std::cos(theta);
  }
};

struct PhaseState {
  double t0 = 0.0;
  double x0 = 0.0;
  double v0 = 0.0;
  double a = 0.0;
  double duration = 0.0;
};

struct PhaseTable {
  std::vector<PhaseState> phases;
  double total_duration = 0.0;
  double total_distance = 0.0;

  const PhaseState& at(double t) const {
    // Right-continuous: the phase starting at t owns it.
    size_t lo = 0, hi = phases.size();
    while (hi - lo > 1) {
      const size_t mid = (lo + hi) / 2;
      if (phases[mid].t0 <= t) lo = mid;
      else hi = mid;
    }
    return phases[lo];
  }

  double x(double t) const {
    const PhaseState& p = at(t);
    const double dt = t - p.t0;
    return p.x0 + p.v0 * dt + 0.5 * p.a * dt * dt;
  }
  double v(double t) const {
    const PhaseState& p = at(t);
    return p.v0 + p.a * (t - p.t0);
  }
  double a(double t) const { return at(t).a; }
};

PhaseTable integrate_phases(std::span<const KinematicPhase> phases) {
  if (phases.empty()) throw InputError("simulation needs at least one kinematic phase");
  PhaseTable table;
  double t = 0.0, x = 0.0, v = 0.0;
  for (const auto& ph : phases) {
    if (ph.duration_s <= 0.0) throw InputError("phase durations must be positive");
    PhaseState st{t, x, v, ph.accel_mps2, ph.duration_s};
    table.phases.push_back(st);
    t += ph.duration_s;
    x += v * ph.duration_s + 0.5 * ph.accel_mps2 * ph.duration_s * ph.duration_s;
    v += ph.accel_mps2 * ph.duration_s;
    if (v < -1e-9) throw InputError("phases drive the speed negative");
    if (std::abs(v) < 1e-9) v = 0.0;  // settle rounding residue so dwells are exactly stationary
  }
  table.total_duration = t;
  table.total_distance = x;
  return table;
}

GeoPoint point_at_distance(const RoutePattern& pattern, double meters) {
  double remaining = meters;
  for (const auto& seg : pattern.segments) {
    const double len = polyline_length_m(seg.polyline);
    if (remaining <= len) {
      return point_at_fraction(seg.polyline, len > 0.0 ? remaining / len : 0.0);
    }
    remaining -= len;
  }
  return pattern.segments.back().polyline.back();
}

}  // namespace

std::vector<KinematicPhase> phases_for_stops(std::span<const StopPlanEntry> stops,
                                             double cruise_mps, double accel_mps2,
                                             double decel_mps2, double final_distance_m) {
  if (cruise_mps <= 0.0 || accel_mps2 <= 0.0 || decel_mps2 <= 0.0) {
    throw InputError("cruise speed and comfort limits must be positive");
  }
  std::vector<KinematicPhase> phases;
  double position = 0.0;

  auto drive_leg = [&](double target) {
    const double gap = target - position;
    if (gap <= 0.0) throw InputError("stop plan distances must be increasing");
    const double d_acc = cruise_mps * cruise_mps / (2.0 * accel_mps2);
    const double d_dec = cruise_mps * cruise_mps / (2.0 * decel_mps2);
    if (d_acc + d_dec <= gap) {
      phases.push_back({cruise_mps / accel_mps2, accel_mps2});
      const double d_cruise = gap - d_acc - d_dec;
      if (d_cruise > 0.0) phases.push_back({d_cruise / cruise_mps, 0.0});
      phases.push_back({cruise_mps / decel_mps2, -decel_mps2});
    } else {
      // Short hop: triangular speed profile peaking below cruise.
      const double peak =
          std::sqrt(2.0 * gap * accel_mps2 * decel_mps2 / (accel_mps2 + decel_mps2));
      phases.push_back({peak / accel_mps2, accel_mps2});
      phases.push_back({peak / decel_mps2, -decel_mps2});
    }
    position = target;
  };

  for (const auto& stop : stops) {
    drive_leg(stop.distance_m);
    if (stop.dwell_s <= 0.0) throw InputError("dwell durations must be positive");
    phases.push_back({stop.dwell_s, 0.0});
  }
  if (final_distance_m > position) drive_leg(final_distance_m);
  return phases;
}

SimTrip simulate(const SimTripSpec& spec) {
  if (spec.pattern.segments.empty()) throw InputError("simulation needs a route pattern");
  if (spec.noise_sigma_m < 0.0) throw InputError("noise sigma must be non-negative");
  double weight_sum = 0.0;
  for (double w : spec.period_weights) {
    if (w < 0.0) throw InputError("period weights must be non-negative");
    weight_sum += w;
  }
  if (weight_sum <= 0.0) throw InputError("period weights must not all be zero");

  double geometry_length = 0.0;
  for (const auto& seg : spec.pattern.segments) geometry_length += polyline_length_m(seg.polyline);

  for (const auto& stop : spec.stop_plan) {
    if (stop.distance_m > geometry_length) {
      throw InputError("stop plan distance beyond pattern length");
    }
  }

  const PhaseTable table = integrate_phases(spec.phases);
  if (table.total_distance > geometry_length + 1e-6) {
    throw InputError("trip exceeds pattern length");
  }

  SimTrip trip;
  trip.total_duration_s = table.total_duration;
  trip.total_distance_m = table.total_distance;

  // Ground truth at 10 Hz.
  const int64_t truth_steps = static_cast<int64_t>(std::floor(table.total_duration * kTruthHz + 1e-9));
  trip.truth.reserve(truth_steps + 1);
  for (int64_t k = 0; k <= truth_steps; ++k) {
    const double t = std::min(static_cast<double>(k) / kTruthHz, table.total_duration);
    trip.truth.push_back({t, table.x(t), table.v(t), table.a(t)});
  }

  // Door events: each stop must land inside a stationary phase long enough
  // for its dwell. Emitted on whole seconds inside that window.
  for (const auto& stop : spec.stop_plan) {
    const PhaseState* host = nullptr;
    for (const auto& ph : table.phases) {
      if (ph.v0 == 0.0 && ph.a == 0.0 && std::abs(ph.x0 - stop.distance_m) <= 0.5) {
        host = &ph;
        break;
      }
    }
    if (host == nullptr || host->duration + 1e-9 < stop.dwell_s) {
      throw InputError("stop plan is not realizable by the phases (no stationary window at " +
                       std::to_string(stop.distance_m) + " m)");
    }
    const int64_t open_rel = static_cast<int64_t>(std::ceil(host->t0 - 1e-9));
    const int64_t close_rel = static_cast<int64_t>(std::floor(host->t0 + stop.dwell_s + 1e-9));
    if (close_rel <= open_rel) throw InputError("dwell too short to emit a door event");
    trip.avl_events.push_back({spec.trip_id, spec.origin_time + open_rel,
                               spec.origin_time + close_rel, "stop-" +
                               std::to_string(trip.avl_events.size() + 1)});
  }

  // Heartbeats: integer-second cadence drawn from the period weights, with
  // isotropic Gaussian noise applied in a local meter frame.
  std::mt19937_64 rng(spec.seed);
  GaussianSource gauss{rng};
  std::array<double, 10> cdf{};
  double acc = 0.0;
  for (size_t i = 0; i < spec.period_weights.size(); ++i) {
    acc += spec.period_weights[i] / weight_sum;
    cdf[i] = acc;
  }
  auto draw_period = [&]() {
    const double u = next_u01(rng);
    for (size_t i = 0; i < cdf.size(); ++i) {
      if (u < cdf[i]) return static_cast<int64_t>(i + 1);
    }
    return static_cast<int64_t>(cdf.size());
  };

  int64_t t = 0;
  while (static_cast<double>(t) <= table.total_duration) {
    const double x = table.x(static_cast<double>(t));
    GeoPoint p = point_at_distance(spec.pattern, x);
    if (spec.noise_sigma_m > 0.0) {
      const double east = spec.noise_sigma_m * gauss.next();
      const double north = spec.noise_sigma_m * gauss.next();
      const double coslat = std::cos(p.lat * kPi / 180.0);
      p.lat += (north / kEarthRadiusM) * 180.0 / kPi;
      p.lon += (east / (kEarthRadiusM * coslat)) * 180.0 / kPi;
    }
    trip.heartbeats.push_back({spec.trip_id, spec.origin_time + t, p.lat, p.lon});
    t += draw_period();
  }

  return trip;
}

RoutePattern standard_route_pattern() {
  // Deterministic gently curving path: 12 segments of 20 edges each, 60 m
  // steps, heading wandering around east.
  RoutePattern pattern;
  pattern.pattern_id = "standard-sim-route";
  double lat = 42.3000;
  double lon = -71.2000;
  double walked = 0.0;
  const double step = 60.0;

  GeoPoint cursor{lat, lon};
  for (int seg = 0; seg < 12; ++seg) {
    RouteSegment segment;
    segment.segment_id = "seg-" + std::to_string(seg + 1);
    segment.polyline.push_back(cursor);
    for (int edge = 0; edge < 20; ++edge) {
      const double heading = 0.35 * std::sin(walked / 2300.0) + 0.15 * std::sin(walked / 700.0);
      const double de = step * std::cos(heading);
      const double dn = step * std::sin(heading);
      const double coslat = std::cos(cursor.lat * kPi / 180.0);
      cursor.lat += (dn / kEarthRadiusM) * 180.0 / kPi;
      cursor.lon += (de / (kEarthRadiusM * coslat)) * 180.0 / kPi;
      walked += step;
      segment.polyline.push_back(cursor);
    }
    segment.length_m = polyline_length_m(segment.polyline);
    pattern.segments.push_back(std::move(segment));
  }
  return pattern;
}

SimTripSpec standard_trip_spec() {
  SimTripSpec spec;
  spec.pattern = standard_route_pattern();
  const double total = spec.pattern.total_length_m();

  static constexpr double kDwells[12] = {30, 25, 35, 28, 32, 26, 38, 24, 31, 27, 33, 29};
  std::vector<StopPlanEntry> stops;
  for (int i = 0; i < 12; ++i) {
    stops.push_back({total * (i + 1) / 13.0, kDwells[i]});
  }
  spec.stop_plan = stops;
  // Gentle accelerations and a stationary lead-in/lead-out keep the profile
  // within what a ~2 minute regression window can follow at this cadence.
  std::vector<KinematicPhase> phases = phases_for_stops(stops, 7.5, 0.15, 0.18, total * 0.98);
  phases.insert(phases.begin(), {45.0, 0.0});
  phases.push_back({45.0, 0.0});
  spec.phases = std::move(phases);
  spec.noise_sigma_m = 5.0;
  spec.seed = 20220425;
  spec.trip_id = "sim-1";
  return spec;
}

}  // namespace traj
