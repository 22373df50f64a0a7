#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "traj/tripframe.hpp"

namespace traj {

enum class Algorithm { kLseg, kPchip, kLocreg, kLocregPchip };

std::string algorithm_name(Algorithm a);          // "lseg", "pchip", ...
Algorithm algorithm_from_name(const std::string&); // throws InputError on unknown names

enum class Kernel { kTricube, kEpanechnikov, kUniform };

struct LocregConfig {
  int degree = 3;            // local polynomial degree, 1..3
  int bandwidth_points = 20; // k-nearest-neighbor bandwidth
  Kernel kernel = Kernel::kTricube;
  int grid_per_interval = 1; // continuous-evaluation pieces per knot interval
};

// One polynomial piece in local time: x(tau) = c0 + c1*tau + c2*tau^2 + c3*tau^3
// with tau = t - start.
struct PolyPiece {
  double start = 0.0;
  std::array<double, 4> coeff{};
};

// Piecewise-polynomial trajectory on [0, t_end]. Evaluation outside the
// domain is an error (no extrapolation).
struct Trajectory {
  Algorithm algorithm = Algorithm::kLseg;
  double t_end = 0.0;
  std::vector<PolyPiece> pieces;       // sorted by start, cover [0, t_end]
  std::vector<double> knot_t;          // fitted knot times
  std::vector<double> knot_x;          // fitted knot positions
  std::vector<double> piece_accel;     // LSEG only: forward-difference acceleration per piece
  int64_t origin_time = 0;             // Unix seconds of t = 0
  bool monotone_family = false;        // guaranteed non-decreasing by construction
  bool refit_between_knots = false;    // LOCREG: pieces memoize local refits between knots
  std::vector<std::string> warnings;   // e.g. local-fit degree degradations

  double x(double t) const;  // position, meters
  double v(double t) const;  // speed, m/s (right-hand value at breakpoints)
  double a(double t) const;  // acceleration, m/s^2

  size_t piece_index(double t) const;
  // First derivative approaching breakpoint `b` from the left / at it from
  // the right; b = 1 .. pieces.size()-1 addresses interior breakpoints.
  std::pair<double, double> one_sided_v(size_t b) const;
};

// Linear interpolation between knots. Speed is the per-piece slope; the
// acceleration profile is the forward difference of those slopes (zero on
// the final piece, which has no successor).
Trajectory fit_lseg(const TimeDistanceSeries& series);

// Monotone cubic Hermite interpolation with Fritsch-Carlson slopes: interior
// slopes are zero when adjacent secants disagree in sign or vanish, else the
// weighted harmonic mean; endpoint slopes use the one-sided three-point
// formula clamped to preserve monotonicity.
Trajectory fit_pchip(const TimeDistanceSeries& series);

struct SmoothedDistances {
  std::vector<double> x;  // one estimate per input knot
  std::vector<std::string> warnings;
};

// Local polynomial regression: at each query time, weighted least squares of
// a cubic over the bandwidth_points nearest knots under the kernel, with the
// bandwidth set by the (k+1)-th nearest knot. Returns the per-knot estimates
// and a continuous trajectory whose pieces memoize local refits on a grid
// (an extension beyond the knot estimates; flagged via refit_between_knots).
std::pair<SmoothedDistances, Trajectory> fit_locreg(const TimeDistanceSeries& series,
                                                    const LocregConfig& config = LocregConfig{});

// Smooth with local regression at the knots, clamp each estimate up to the
// running maximum so the sequence is non-decreasing, then interpolate the
// clamped knots with the monotone cubic Hermite scheme.
Trajectory fit_locreg_pchip(const TimeDistanceSeries& series,
                            const LocregConfig& config = LocregConfig{});

}  // namespace traj
