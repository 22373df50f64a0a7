#pragma once

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "traj/ingest.hpp"
#include "traj/mapmatch.hpp"
#include "traj/simulator.hpp"
#include "traj/smoothing.hpp"
#include "traj/tripframe.hpp"
#include "traj/validation.hpp"

namespace traj {

// Exit codes shared by the CLI and the pipeline driver.
inline constexpr int kExitOk = 0;
inline constexpr int kExitValidationFailures = 1;
inline constexpr int kExitInputError = 2;
inline constexpr int kExitInternalError = 3;

struct RunConfig {
  std::string heartbeats_path;
  std::string route_path;
  std::string avl_path;                    // required for evaluate/pipeline
  std::optional<Algorithm> algorithm;      // nullopt: all four
  MatchConfig match;
  LocregConfig locreg;
  double sample_hz = 1.0;
  std::string out_dir;
  int jobs = 1;
  int log_level = 1;  // 0 off, 1 warn, 2 info, 3 debug (TRAJ_LOG)
};

struct TripArtifacts {
  std::string trip_id;
  std::vector<MatchedPoint> matched;
  TimeDistanceSeries series;
  std::vector<std::pair<Algorithm, Trajectory>> trajectories;
  Scorecard scorecard;
  size_t invalid_points = 0;
};

// Run match -> frame -> reconstruct -> evaluate for every trip in the
// heartbeat file and write matched.csv, series.csv, trajectory_<alg>.csv and
// report.json under out_dir (per-trip subdirectories when the file carries
// several trips). Returns an exit code: 0 clean, 1 when the run completed
// but rows were rejected, points failed to match, or a guaranteed trajectory
// property failed its measurement. Fatal problems throw InputError.
int run_pipeline(const RunConfig& config, std::ostream& diag);

// Serialization helpers shared by subcommands.
void write_matched_csv(std::ostream& out, std::span<const MatchedPoint> points,
                       const RoutePattern& pattern, int64_t origin_hint);
void write_series_csv(std::ostream& out, const TimeDistanceSeries& series);
void write_trajectory_csv(std::ostream& out, const Trajectory& traj, double sample_hz);
void write_trajectory_samples_csv(std::ostream& out, const Trajectory& traj,
                                  std::span<const double> times);
void write_report_json(std::ostream& out, const std::string& trip_id, const Scorecard& card);
void write_truth_csv(std::ostream& out, std::span<const TruthSample> truth);

// Heartbeat format sniffing for CLI paths (.jsonl / .ndjson -> JSON lines).
HeartbeatFormat heartbeat_format_for_path(const std::string& path);

}  // namespace traj
