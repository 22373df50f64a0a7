#include "traj/pipeline.hpp"

#include <algorithm>
#include <array>
#include <atomic>
#include <charconv>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <mutex>
#include <ostream>
#include <sstream>
#include <thread>

#include <json.hpp>

#include "traj/error.hpp"

namespace fs = std::filesystem;

namespace traj {
namespace {

using nlohmann::json;

std::string fmt(double v) {
  std::array<char, 32> buf{};
  auto [ptr, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), v);
  return std::string(buf.data(), ptr);
}

std::ifstream open_input(const std::string& path, const char* stage) {
  if (!fs::exists(path)) throw InputError(std::string(stage) + ": file not found");
  std::ifstream in(path);
  if (!in) throw InputError(std::string(stage) + ": cannot open file");
  return in;
}

const std::array<Algorithm, 4> kAllAlgorithms = {Algorithm::kLseg, Algorithm::kPchip,
                                                 Algorithm::kLocreg, Algorithm::kLocregPchip};

}  // namespace

HeartbeatFormat heartbeat_format_for_path(const std::string& path) {
  const auto ext = fs::path(path).extension().string();
  if (ext == ".jsonl" || ext == ".ndjson") return HeartbeatFormat::kJsonLines;
  return HeartbeatFormat::kCsv;
}

void write_matched_csv(std::ostream& out, std::span<const MatchedPoint> points,
                       const RoutePattern& pattern, int64_t /*origin_hint*/) {
  out << "i,timestamp,matched_lat,matched_lon,segment_id,p,offset_m,valid\n";
  for (const auto& mp : points) {
    const std::string seg_id = mp.segment_index < pattern.segments.size()
                                   ? pattern.segments[mp.segment_index].segment_id
                                   : "";
    out << mp.index << ',' << format_timestamp(mp.time) << ',' << fmt(mp.matched.lat) << ','
        << fmt(mp.matched.lon) << ',' << seg_id << ',' << fmt(mp.along_fraction) << ','
        << fmt(mp.offset_m) << ',' << (mp.valid ? "true" : "false") << '\n';
  }
}

void write_series_csv(std::ostream& out, const TimeDistanceSeries& series) {
  out << "t_s,d_m\n";
  for (size_t i = 0; i < series.n(); ++i) {
    out << fmt(series.t[i]) << ',' << fmt(series.d[i]) << '\n';
  }
}

void write_trajectory_csv(std::ostream& out, const Trajectory& traj, double sample_hz) {
  if (sample_hz <= 0.0) throw InputError("sample rate must be positive");
  out << "t_s,x_m,v_mps,a_mps2\n";
  const int64_t steps = static_cast<int64_t>(std::floor(traj.t_end * sample_hz + 1e-9));
  for (int64_t k = 0; k <= steps; ++k) {
    const double t = std::min(static_cast<double>(k) / sample_hz, traj.t_end);
    out << fmt(t) << ',' << fmt(traj.x(t)) << ',' << fmt(traj.v(t)) << ',' << fmt(traj.a(t))
        << '\n';
  }
}

void write_trajectory_samples_csv(std::ostream& out, const Trajectory& traj,
                                  std::span<const double> times) {
  out << "t_s,x_m,v_mps,a_mps2\n";
  for (double t : times) {
    out << fmt(t) << ',' << fmt(traj.x(t)) << ',' << fmt(traj.v(t)) << ',' << fmt(traj.a(t))
        << '\n';
  }
}

void write_report_json(std::ostream& out, const std::string& trip_id, const Scorecard& card) {
  json doc;
  doc["trip_id"] = trip_id;
  doc["algorithms"] = json::array();
  for (const auto& entry : card.entries) {
    json row;
    row["name"] = algorithm_name(entry.algorithm);
    row["mon"] = entry.mon;
    row["cub"] = entry.cub;
    row["diff"] = entry.diff;
    row["err"] = entry.err;
    json avl;
    for (const auto& [threshold, pct] : entry.avl_pct) avl[std::to_string(threshold)] = pct;
    row["avl_pct"] = std::move(avl);
    row["acc_pct"] = entry.acc_pct;
    row["acc_unreasonable_pct"] = entry.acc_unreasonable_pct;
    row["best"] = entry.best;
    if (entry.algorithm == Algorithm::kLocreg) {
      row["notes"] = "between-knot evaluation memoizes local refits";
    }
    doc["algorithms"].push_back(std::move(row));
  }
  out << doc.dump(2) << '\n';
}

void write_truth_csv(std::ostream& out, std::span<const TruthSample> truth) {
  out << "t_s,x_m,v_mps,a_mps2\n";
  for (const auto& s : truth) {
    out << fmt(s.t) << ',' << fmt(s.x) << ',' << fmt(s.v) << ',' << fmt(s.a) << '\n';
  }
}

namespace {

struct TripInput {
  std::string trip_id;
  std::vector<HeartbeatRecord> heartbeats;
  std::vector<AvlDoorEvent> events;
};

TripArtifacts process_trip(const TripInput& input, const RoutePattern& pattern,
                           const RunConfig& config) {
  TripArtifacts art;
  art.trip_id = input.trip_id;

  std::vector<HeartbeatRecord> sorted = input.heartbeats;
  std::stable_sort(sorted.begin(), sorted.end(),
                   [](const HeartbeatRecord& a, const HeartbeatRecord& b) {
                     return a.timestamp < b.timestamp;
                   });

  art.matched = match_trip(sorted, pattern, config.match);
  for (const auto& mp : art.matched) {
    if (!mp.valid) ++art.invalid_points;
  }
  art.series = build_series(art.matched, pattern);

  const std::vector<Algorithm> algorithms =
      config.algorithm ? std::vector<Algorithm>{*config.algorithm}
                       : std::vector<Algorithm>(kAllAlgorithms.begin(), kAllAlgorithms.end());
  for (Algorithm alg : algorithms) {
    switch (alg) {
      case Algorithm::kLseg:
        art.trajectories.emplace_back(alg, fit_lseg(art.series));
        break;
      case Algorithm::kPchip:
        art.trajectories.emplace_back(alg, fit_pchip(art.series));
        break;
      case Algorithm::kLocreg:
        art.trajectories.emplace_back(alg, fit_locreg(art.series, config.locreg).second);
        break;
      case Algorithm::kLocregPchip:
        art.trajectories.emplace_back(alg, fit_locreg_pchip(art.series, config.locreg));
        break;
    }
  }
  art.scorecard = build_scorecard(art.series, input.events, config.locreg);
  return art;
}

// A guaranteed property failing its measurement is a finding worth a
// non-zero exit: the monotone family must sample monotone, and the Hermite
// fits must be derivative-continuous.
bool guaranteed_flags_hold(const Scorecard& card) {
  for (const auto& e : card.entries) {
    if (e.algorithm == Algorithm::kLseg || e.algorithm == Algorithm::kPchip ||
        e.algorithm == Algorithm::kLocregPchip) {
      if (!e.mon) return false;
    }
    if (e.algorithm == Algorithm::kPchip || e.algorithm == Algorithm::kLocregPchip) {
      if (!e.diff) return false;
    }
  }
  return true;
}

void write_trip_artifacts(const TripArtifacts& art, const RoutePattern& pattern,
                          const RunConfig& config, const fs::path& dir) {
  fs::create_directories(dir);
  {
    std::ofstream out(dir / "matched.csv");
    write_matched_csv(out, art.matched, pattern, art.series.origin_time);
  }
  {
    std::ofstream out(dir / "series.csv");
    write_series_csv(out, art.series);
  }
  for (const auto& [alg, traj] : art.trajectories) {
    std::ofstream out(dir / ("trajectory_" + algorithm_name(alg) + ".csv"));
    write_trajectory_csv(out, traj, config.sample_hz);
  }
  {
    std::ofstream out(dir / "report.json");
    write_report_json(out, art.trip_id, art.scorecard);
  }
}

}  // namespace

int run_pipeline(const RunConfig& config, std::ostream& diag) {
  if (config.out_dir.empty()) throw InputError("pipeline: --out directory is required");

  auto hb_stream = open_input(config.heartbeats_path, "heartbeats");
  const auto hb = load_heartbeats(hb_stream, heartbeat_format_for_path(config.heartbeats_path));
  if (hb.records.empty()) throw InputError("heartbeats: no usable rows");

  auto route_stream = open_input(config.route_path, "route");
  const RoutePattern pattern = load_route_pattern(route_stream);

  auto avl_stream = open_input(config.avl_path, "avl");
  const auto avl = load_avl_events(avl_stream);

  if (config.log_level >= 2) {
    diag << "heartbeats: " << hb.records.size() << " rows accepted, " << hb.rejects.size()
         << " rejected\n";
  }
  if (config.log_level >= 1) {
    for (const auto& reject : hb.rejects) {
      diag << "heartbeats: line " << reject.line << ": " << reject.message << "\n";
    }
    for (const auto& reject : avl.rejects) {
      diag << "avl: line " << reject.line << ": " << reject.message << "\n";
    }
  }

  // Group by trip (ordered by trip_id for stable output), keeping file order
  // within each trip.
  std::map<std::string, TripInput> trips;
  for (const auto& rec : hb.records) {
    auto& trip = trips[rec.trip_id];
    trip.trip_id = rec.trip_id;
    trip.heartbeats.push_back(rec);
  }
  for (const auto& ev : avl.records) {
    auto it = trips.find(ev.trip_id);
    if (it != trips.end()) it->second.events.push_back(ev);
  }

  std::vector<const TripInput*> order;
  for (const auto& [id, trip] : trips) order.push_back(&trip);
  const bool single = order.size() == 1;

  std::vector<TripArtifacts> results(order.size());
  std::vector<std::string> failures(order.size());
  const int jobs = std::max(1, std::min<int>(config.jobs, static_cast<int>(order.size())));
  std::atomic<size_t> next{0};
  auto worker = [&]() {
    while (true) {
      const size_t i = next.fetch_add(1);
      if (i >= order.size()) break;
      try {
        results[i] = process_trip(*order[i], pattern, config);
      } catch (const std::exception& e) {
        failures[i] = e.what();
      }
    }
  };
  if (jobs == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int j = 0; j < jobs; ++j) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }

  for (size_t i = 0; i < order.size(); ++i) {
    if (!failures[i].empty()) {
      throw InputError("trip " + order[i]->trip_id + ": " + failures[i]);
    }
  }

  bool findings = hb.rejects.size() + avl.rejects.size() > 0;
  for (size_t i = 0; i < order.size(); ++i) {
    const fs::path dir = single ? fs::path(config.out_dir)
                                : fs::path(config.out_dir) / order[i]->trip_id;
    write_trip_artifacts(results[i], pattern, config, dir);
    findings = findings || results[i].invalid_points > 0 ||
               !guaranteed_flags_hold(results[i].scorecard);
    if (config.log_level >= 2) {
      diag << "trip " << results[i].trip_id << ": " << results[i].matched.size()
           << " points matched (" << results[i].invalid_points << " invalid), series n = "
           << results[i].series.n() << "\n";
    }
  }
  return findings ? kExitValidationFailures : kExitOk;
}

}  // namespace traj
