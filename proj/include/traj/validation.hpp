#pragma once

#include <map>
#include <span>
#include <vector>

#include "traj/ingest.hpp"
#include "traj/smoothing.hpp"

namespace traj {

inline constexpr double kMphToMps = 0.44704;  // exact
inline constexpr double kDefaultAccelMinMphps = -5.3;
inline constexpr double kDefaultAccelMaxMphps = 3.7;

struct SpeedValidationReport {
  std::vector<double> thresholds_mph;
  std::vector<double> captured_pct;  // share of door-open seconds with v <= threshold
  int64_t total_dooropen_seconds = 0;
};

// Check the trajectory's speed against door-open intervals: every integer
// second of the trip that falls inside a door event should be slow. Throws
// InputError ("no AVL overlap") when no door-open second lands in the
// trajectory's domain.
SpeedValidationReport validate_speed(const Trajectory& traj, std::span<const AvlDoorEvent> events,
                                     std::vector<double> thresholds_mph = {0.0, 3.0, 5.0});

struct AccelValidationReport {
  double min_mphps = kDefaultAccelMinMphps;
  double max_mphps = kDefaultAccelMaxMphps;
  double unreasonable_pct = 0.0;  // share of samples outside the bounds
  size_t samples = 0;
};

AccelValidationReport validate_accel(const Trajectory& traj,
                                     double min_mphps = kDefaultAccelMinMphps,
                                     double max_mphps = kDefaultAccelMaxMphps,
                                     double sample_hz = 1.0);

struct AlgorithmScore {
  Algorithm algorithm = Algorithm::kLseg;
  bool mon = false;   // non-decreasing under dense sampling
  bool cub = false;   // one continuous piecewise-cubic curve with real curvature somewhere
  bool diff = false;  // first derivative continuous at interior breakpoints
  bool err = false;   // fitted by error-aware smoothing rather than interpolation
  std::map<int, double> avl_pct;  // captured_pct by threshold (mph)
  double acc_pct = 0.0;           // share of acceleration samples within bounds
  double acc_unreasonable_pct = 0.0;
  bool best = false;  // passes mon, cub, diff, and err together
};

struct Scorecard {
  std::vector<AlgorithmScore> entries;  // lseg, pchip, locreg, locreg-pchip
};

// Fit all four algorithms and measure every flag from the fitted
// trajectories (nothing is hard-coded per algorithm except the structural
// err property of the smoothing-based fits).
Scorecard build_scorecard(const TimeDistanceSeries& series, std::span<const AvlDoorEvent> events,
                          const LocregConfig& locreg = LocregConfig{});

// Measurement helpers shared with tests.
bool trajectory_is_monotone(const Trajectory& traj, double sample_hz = 10.0);
bool trajectory_is_cubic_family(const Trajectory& traj);
bool trajectory_is_differentiable(const Trajectory& traj, double rel_tol = 1e-9);

}  // namespace traj
