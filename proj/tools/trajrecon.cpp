// trajrecon: reconstruct continuous vehicle trajectories from noisy
// timestamped GPS heartbeats matched onto a route pattern.

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "traj/error.hpp"
#include "traj/pipeline.hpp"

namespace fs = std::filesystem;
using namespace traj;

namespace {

int log_level_from_env() {
  const char* env = std::getenv("TRAJ_LOG");
  if (env == nullptr) return 1;
  const std::string value = env;
  if (value == "off") return 0;
  if (value == "warn") return 1;
  if (value == "info") return 2;
  if (value == "debug") return 3;
  return 1;
}

std::ifstream open_or_throw(const std::string& path, const char* stage) {
  if (!fs::exists(path)) throw InputError(std::string(stage) + ": file not found");
  std::ifstream in(path);
  if (!in) throw InputError(std::string(stage) + ": cannot open file");
  return in;
}

struct CommonOptions {
  std::string heartbeats_path;
  std::string route_path;
  std::string avl_path;
  std::string algorithm = "locreg-pchip";
  std::string out_dir;
  std::string config_path;
  double sample_hz = 1.0;
  double max_offset_m = 50.0;
  int lookahead = 5;
  int bandwidth_points = 20;
  int jobs = 1;
  uint64_t seed = 0;
};

// Values from an optional JSON config file fill in flags the user did not
// pass on the command line; explicit flags always win.
void apply_config_file(CLI::App& cmd, CommonOptions& opt) {
  if (opt.config_path.empty()) return;
  std::ifstream in = open_or_throw(opt.config_path, "config");
  nlohmann::json doc = nlohmann::json::parse(in, nullptr, false);
  if (doc.is_discarded() || !doc.is_object()) throw InputError("config: not a JSON object");

  auto not_set = [&](const std::string& flag) {
    const CLI::Option* o = cmd.get_option_no_throw(flag);
    return o != nullptr && o->count() == 0;
  };
  auto take_string = [&](const char* key, const std::string& flag, std::string& into) {
    if (doc.contains(key) && not_set(flag)) into = doc[key].get<std::string>();
  };
  auto take_double = [&](const char* key, const std::string& flag, double& into) {
    if (doc.contains(key) && not_set(flag)) into = doc[key].get<double>();
  };
  auto take_int = [&](const char* key, const std::string& flag, int& into) {
    if (doc.contains(key) && not_set(flag)) into = doc[key].get<int>();
  };
  take_string("heartbeats", "--heartbeats", opt.heartbeats_path);
  take_string("route", "--route", opt.route_path);
  take_string("avl", "--avl", opt.avl_path);
  take_string("algorithm", "--algorithm", opt.algorithm);
  take_string("out", "--out", opt.out_dir);
  take_double("sample_hz", "--sample-hz", opt.sample_hz);
  take_double("max_offset_m", "--max-offset-m", opt.max_offset_m);
  take_int("lookahead_segments", "--lookahead-segments", opt.lookahead);
  take_int("bandwidth_points", "--bandwidth-points", opt.bandwidth_points);
  take_int("jobs", "--jobs", opt.jobs);
}

RunConfig to_run_config(const CommonOptions& opt, bool single_algorithm) {
  RunConfig config;
  config.heartbeats_path = opt.heartbeats_path;
  config.route_path = opt.route_path;
  config.avl_path = opt.avl_path;
  if (single_algorithm) config.algorithm = algorithm_from_name(opt.algorithm);
  config.match.max_offset_m = opt.max_offset_m;
  config.match.lookahead_segments = opt.lookahead;
  config.locreg.bandwidth_points = opt.bandwidth_points;
  config.sample_hz = opt.sample_hz;
  config.out_dir = opt.out_dir;
  config.jobs = opt.jobs;
  config.log_level = log_level_from_env();
  return config;
}

struct LoadedTrip {
  RoutePattern pattern;
  std::vector<MatchedPoint> matched;
  TimeDistanceSeries series;  // populated only when need_series
};

LoadedTrip load_and_frame(const CommonOptions& opt, bool need_series = true) {
  auto hb_stream = open_or_throw(opt.heartbeats_path, "heartbeats");
  auto hb = load_heartbeats(hb_stream, heartbeat_format_for_path(opt.heartbeats_path));
  if (hb.records.empty()) throw InputError("heartbeats: no usable rows");
  for (const auto& reject : hb.rejects) {
    if (log_level_from_env() >= 1) {
      std::cerr << "heartbeats: line " << reject.line << ": " << reject.message << "\n";
    }
  }

  auto route_stream = open_or_throw(opt.route_path, "route");
  LoadedTrip trip;
  trip.pattern = load_route_pattern(route_stream);

  std::stable_sort(hb.records.begin(), hb.records.end(),
                   [](const HeartbeatRecord& a, const HeartbeatRecord& b) {
                     return a.timestamp < b.timestamp;
                   });
  MatchConfig match_config;
  match_config.max_offset_m = opt.max_offset_m;
  match_config.lookahead_segments = opt.lookahead;
  trip.matched = match_trip(hb.records, trip.pattern, match_config);
  if (need_series) {
    trip.series = build_series(trip.matched, trip.pattern);
  } else {
    for (const auto& p : trip.matched) {
      if (p.valid) {
        trip.series.origin_time = p.time;
        break;
      }
    }
  }
  return trip;
}

Trajectory fit_by_name(const LoadedTrip& trip, const CommonOptions& opt) {
  LocregConfig locreg;
  locreg.bandwidth_points = opt.bandwidth_points;
  switch (algorithm_from_name(opt.algorithm)) {
    case Algorithm::kLseg: return fit_lseg(trip.series);
    case Algorithm::kPchip: return fit_pchip(trip.series);
    case Algorithm::kLocreg: return fit_locreg(trip.series, locreg).second;
    case Algorithm::kLocregPchip: return fit_locreg_pchip(trip.series, locreg);
  }
  throw InputError("unknown algorithm");
}

// Write to out_dir/<name> when --out was given, else stdout.
void emit(const std::string& out_dir, const std::string& name,
          const std::function<void(std::ostream&)>& writer) {
  if (out_dir.empty()) {
    writer(std::cout);
    return;
  }
  fs::create_directories(out_dir);
  std::ofstream out(fs::path(out_dir) / name);
  if (!out) throw InputError("out: cannot write to directory " + out_dir);
  writer(out);
}

SimTripSpec sim_spec_from_json(const std::string& path, uint64_t seed_override) {
  SimTripSpec spec = standard_trip_spec();
  if (!path.empty()) {
    std::ifstream in = open_or_throw(path, "spec");
    nlohmann::json doc = nlohmann::json::parse(in, nullptr, false);
    if (doc.is_discarded() || !doc.is_object()) throw InputError("spec: not a JSON object");

    if (doc.contains("route_geojson")) {
      auto route_stream = open_or_throw(doc["route_geojson"].get<std::string>(), "route");
      spec.pattern = load_route_pattern(route_stream);
    }
    if (doc.contains("trip_id")) spec.trip_id = doc["trip_id"].get<std::string>();
    if (doc.contains("seed")) spec.seed = doc["seed"].get<uint64_t>();
    if (doc.contains("noise_sigma_m")) spec.noise_sigma_m = doc["noise_sigma_m"].get<double>();
    if (doc.contains("origin_time")) {
      const auto ts = parse_timestamp(doc["origin_time"].get<std::string>());
      if (!ts) throw InputError("spec: unparseable origin_time");
      spec.origin_time = *ts;
    }
    if (doc.contains("period_weights")) {
      const auto& weights = doc["period_weights"];
      if (!weights.is_array() || weights.size() != spec.period_weights.size()) {
        throw InputError("spec: period_weights must be an array of 10 weights (1 s .. 10 s)");
      }
      for (size_t i = 0; i < spec.period_weights.size(); ++i) {
        spec.period_weights[i] = weights[i].get<double>();
      }
    }
    if (doc.contains("stops")) {
      spec.stop_plan.clear();
      for (const auto& row : doc["stops"]) {
        spec.stop_plan.push_back({row.at(0).get<double>(), row.at(1).get<double>()});
      }
    }
    if (doc.contains("phases")) {
      spec.phases.clear();
      for (const auto& row : doc["phases"]) {
        spec.phases.push_back({row.at(0).get<double>(), row.at(1).get<double>()});
      }
    } else if (doc.contains("stops")) {
      const double cruise = doc.value("cruise_mps", 11.0);
      const double accel = doc.value("accel_mps2", 1.0);
      const double decel = doc.value("decel_mps2", 1.2);
      double final_m = spec.stop_plan.empty() ? 0.0 : spec.stop_plan.back().distance_m;
      final_m = doc.value("final_distance_m", final_m);
      spec.phases = phases_for_stops(spec.stop_plan, cruise, accel, decel, final_m);
    }
  }
  if (seed_override != 0) spec.seed = seed_override;
  return spec;
}

std::vector<double> parse_time_list(const std::string& text) {
  std::vector<double> times;
  std::stringstream ss(text);
  std::string token;
  while (std::getline(ss, token, ',')) {
    try {
      times.push_back(std::stod(token));
    } catch (const std::exception&) {
      throw InputError("sample: bad time value '" + token + "'");
    }
  }
  if (times.empty()) throw InputError("sample: no times given");
  return times;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Continuous transit-vehicle trajectories from noisy GPS heartbeats"};
  app.require_subcommand(1);

  CommonOptions opt;
  std::string sample_at;

  auto add_common = [&](CLI::App* cmd, bool needs_avl, bool needs_out) {
    cmd->add_option("--heartbeats", opt.heartbeats_path, "Heartbeat CSV or JSON-lines file")
        ->required();
    cmd->add_option("--route", opt.route_path, "Route pattern GeoJSON")->required();
    if (needs_avl) cmd->add_option("--avl", opt.avl_path, "AVL door-event CSV")->required();
    auto* out = cmd->add_option("--out", opt.out_dir, "Output directory");
    if (needs_out) out->required();
    cmd->add_option("--config", opt.config_path, "JSON config file (flags win)");
    cmd->add_option("--max-offset-m", opt.max_offset_m, "Matching offset limit");
    cmd->add_option("--lookahead-segments", opt.lookahead, "Matching window depth");
    cmd->add_option("--bandwidth-points", opt.bandwidth_points, "Local regression bandwidth");
    cmd->add_option("--jobs", opt.jobs, "Concurrent trips in pipeline mode");
    return cmd;
  };

  CLI::App* c_match = add_common(app.add_subcommand("match", "Snap heartbeats to the route"),
                                 false, false);
  CLI::App* c_frame = add_common(
      app.add_subcommand("frame", "Emit the cleaned time/distance series"), false, false);
  CLI::App* c_recon = add_common(
      app.add_subcommand("reconstruct", "Fit and sample a trajectory"), false, false);
  c_recon->add_option("--algorithm", opt.algorithm, "lseg|pchip|locreg|locreg-pchip");
  c_recon->add_option("--sample-hz", opt.sample_hz, "Output sample rate");
  CLI::App* c_sample = add_common(
      app.add_subcommand("sample", "Evaluate a trajectory at explicit times"), false, false);
  c_sample->add_option("--algorithm", opt.algorithm, "lseg|pchip|locreg|locreg-pchip");
  c_sample->add_option("--at", sample_at, "Comma-separated seconds into the trip")->required();
  CLI::App* c_eval = add_common(
      app.add_subcommand("evaluate", "Score all four algorithms against AVL"), true, false);
  CLI::App* c_pipe = add_common(
      app.add_subcommand("pipeline", "match + frame + reconstruct + evaluate"), true, true);
  c_pipe->add_option("--algorithm", opt.algorithm, "Restrict trajectory output to one algorithm");
  c_pipe->add_option("--sample-hz", opt.sample_hz, "Trajectory CSV sample rate");

  CLI::App* c_sim = app.add_subcommand("simulate", "Generate a synthetic trip");
  std::string sim_spec_path;
  c_sim->add_option("--spec", sim_spec_path, "Simulation spec JSON (default: standard trip)");
  c_sim->add_option("--out", opt.out_dir, "Output directory")->required();
  c_sim->add_option("--seed", opt.seed, "Override the spec seed");

  CLI11_PARSE(app, argc, argv);

  try {
    if (c_sim->parsed()) {
      const SimTripSpec spec = sim_spec_from_json(sim_spec_path, opt.seed);
      const SimTrip trip = simulate(spec);
      fs::create_directories(opt.out_dir);
      {
        std::ofstream out(fs::path(opt.out_dir) / "heartbeats.csv");
        write_heartbeats_csv(out, trip.heartbeats);
      }
      {
        std::ofstream out(fs::path(opt.out_dir) / "avl.csv");
        write_avl_csv(out, trip.avl_events);
      }
      {
        std::ofstream out(fs::path(opt.out_dir) / "truth.csv");
        write_truth_csv(out, trip.truth);
      }
      {
        std::ofstream out(fs::path(opt.out_dir) / "route.geojson");
        write_route_geojson(out, spec.pattern);
      }
      return kExitOk;
    }

    CLI::App* active = nullptr;
    for (CLI::App* cmd : {c_match, c_frame, c_recon, c_sample, c_eval, c_pipe}) {
      if (cmd->parsed()) active = cmd;
    }
    apply_config_file(*active, opt);

    if (c_pipe->parsed()) {
      const bool restrict_alg = c_pipe->get_option("--algorithm")->count() > 0;
      return run_pipeline(to_run_config(opt, restrict_alg), std::cerr);
    }

    if (c_match->parsed()) {
      const LoadedTrip trip = load_and_frame(opt, /*need_series=*/false);
      emit(opt.out_dir, "matched.csv", [&](std::ostream& out) {
        write_matched_csv(out, trip.matched, trip.pattern, trip.series.origin_time);
      });
      return kExitOk;
    }
    if (c_frame->parsed()) {
      const LoadedTrip trip = load_and_frame(opt);
      emit(opt.out_dir, "series.csv",
           [&](std::ostream& out) { write_series_csv(out, trip.series); });
      return kExitOk;
    }
    if (c_recon->parsed()) {
      const LoadedTrip trip = load_and_frame(opt);
      const Trajectory traj = fit_by_name(trip, opt);
      emit(opt.out_dir, "trajectory_" + algorithm_name(traj.algorithm) + ".csv",
           [&](std::ostream& out) { write_trajectory_csv(out, traj, opt.sample_hz); });
      return kExitOk;
    }
    if (c_sample->parsed()) {
      const LoadedTrip trip = load_and_frame(opt);
      const Trajectory traj = fit_by_name(trip, opt);
      const std::vector<double> times = parse_time_list(sample_at);
      for (double t : times) {
        if (t < 0.0 || t > traj.t_end) {
          throw InputError("sample: time " + std::to_string(t) + " outside trajectory domain [0, " +
                           std::to_string(traj.t_end) + "]");
        }
      }
      emit(opt.out_dir, "samples.csv",
           [&](std::ostream& out) { write_trajectory_samples_csv(out, traj, times); });
      return kExitOk;
    }
    if (c_eval->parsed()) {
      std::string trip_id;
      {
        auto hb_stream = open_or_throw(opt.heartbeats_path, "heartbeats");
        const auto hb = load_heartbeats(hb_stream, heartbeat_format_for_path(opt.heartbeats_path));
        if (hb.records.empty()) throw InputError("heartbeats: no usable rows");
        trip_id = hb.records.front().trip_id;
      }
      const LoadedTrip trip = load_and_frame(opt);
      auto avl_stream = open_or_throw(opt.avl_path, "avl");
      const auto avl = load_avl_events(avl_stream);
      std::vector<AvlDoorEvent> events;
      for (const auto& ev : avl.records) {
        if (ev.trip_id == trip_id) events.push_back(ev);
      }
      LocregConfig locreg;
      locreg.bandwidth_points = opt.bandwidth_points;
      const Scorecard card = build_scorecard(trip.series, events, locreg);
      emit(opt.out_dir, "report.json",
           [&](std::ostream& out) { write_report_json(out, trip_id, card); });
      return kExitOk;
    }
    throw InputError("no subcommand selected");
  } catch (const InputError& e) {
    std::cerr << e.what() << "\n";
    return kExitInputError;
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << "\n";
    return kExitInternalError;
  }
}
