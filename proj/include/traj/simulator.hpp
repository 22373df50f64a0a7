#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "traj/ingest.hpp"

namespace traj {

struct KinematicPhase {
  double duration_s = 0.0;
  double accel_mps2 = 0.0;
};

struct StopPlanEntry {
  double distance_m = 0.0;  // meters into the trip
  double dwell_s = 0.0;     // door-open duration
};

struct SimTripSpec {
  RoutePattern pattern;
  std::vector<KinematicPhase> phases;   // integrated from x = 0, v = 0
  std::vector<StopPlanEntry> stop_plan; // must coincide with stationary phases
  double noise_sigma_m = 5.0;           // isotropic Gaussian coordinate noise
  // Heartbeat cadence: weight of drawing a period of (index+1) seconds.
  // The default mirrors field data: 3 s is the most common gap and the
  // median sits at 6 s.
  std::array<double, 10> period_weights{0, 0, 3, 1, 1, 2, 1, 1, 1, 1};
  uint64_t seed = 1;
  std::string trip_id = "sim-1";
  int64_t origin_time = 1650875085;  // arbitrary fixed epoch anchor
};

struct TruthSample {
  double t = 0.0;
  double x = 0.0;
  double v = 0.0;
  double a = 0.0;
};

struct SimTrip {
  std::vector<TruthSample> truth;  // 10 Hz ground truth
  std::vector<HeartbeatRecord> heartbeats;
  std::vector<AvlDoorEvent> avl_events;
  double total_duration_s = 0.0;
  double total_distance_m = 0.0;
};

// Integrate the phases into ground truth, sample noisy heartbeats along the
// pattern geometry, and emit door events for the stop plan. Deterministic
// for a given spec (including seed). Throws InputError when the kinematics
// go backward, overrun the pattern, or a stop has no stationary phase at its
// distance.
SimTrip simulate(const SimTripSpec& spec);

// Build accelerate / cruise / decelerate / dwell phases that visit each stop
// in order at the given comfort limits and end at final_distance_m.
std::vector<KinematicPhase> phases_for_stops(std::span<const StopPlanEntry> stops,
                                             double cruise_mps, double accel_mps2,
                                             double decel_mps2, double final_distance_m);

// Pinned 14-and-a-bit kilometer synthetic route and the standard trip over
// it used by the evaluation suites: 12 door stops, 5 m GPS noise, mixed
// 3..10 s cadence.
RoutePattern standard_route_pattern();
SimTripSpec standard_trip_spec();

}  // namespace traj
