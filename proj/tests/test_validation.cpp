#include <doctest.h>

#include <cmath>
#include <vector>

#include "support/generators.hpp"
#include "traj/error.hpp"
#include "traj/validation.hpp"

using namespace traj;

namespace {

TimeDistanceSeries series_of(std::vector<double> t, std::vector<double> d) {
  TimeDistanceSeries s;
  s.t = std::move(t);
  s.d = std::move(d);
  s.origin_time = 1650875085;
  return s;
}

AvlDoorEvent event(int64_t open_rel, int64_t close_rel) {
  return {"t-1", 1650875085 + open_rel, 1650875085 + close_rel, "s"};
}

}  // namespace

TEST_CASE("speed validation: a stopped vehicle is captured at every threshold") {
  const Trajectory traj = fit_lseg(series_of({0, 10, 20}, {0, 0, 0}));
  const auto report = validate_speed(traj, std::vector<AvlDoorEvent>{event(5, 15)});
  CHECK(report.total_dooropen_seconds == 11);  // seconds 5..15 inclusive
  REQUIRE(report.captured_pct.size() == 3);
  for (double pct : report.captured_pct) CHECK(pct == 100.0);
}

TEST_CASE("speed validation: a vehicle at 10 mph is never below a 5 mph threshold") {
  // 10 mph = 4.4704 m/s exactly; hold that speed across the whole trip.
  const Trajectory traj = fit_lseg(series_of({0, 10, 20}, {0, 44.704, 89.408}));
  const auto report = validate_speed(traj, std::vector<AvlDoorEvent>{event(2, 18)});
  CHECK(report.captured_pct[0] == 0.0);
  CHECK(report.captured_pct[1] == 0.0);  // 3 mph
  CHECK(report.captured_pct[2] == 0.0);  // 5 mph
}

TEST_CASE("speed validation: intervals are clipped to the domain, endpoints inclusive") {
  const Trajectory traj = fit_lseg(series_of({0, 10, 20}, {0, 0, 0}));
  const auto report = validate_speed(traj, std::vector<AvlDoorEvent>{event(-5, 3), event(18, 40)});
  // Seconds 0..3 and 18..20 fall inside the domain.
  CHECK(report.total_dooropen_seconds == 7);
}

TEST_CASE("speed validation: no overlapping door seconds is an error") {
  const Trajectory traj = fit_lseg(series_of({0, 10, 20}, {0, 0, 0}));
  CHECK_THROWS_WITH_AS(validate_speed(traj, std::vector<AvlDoorEvent>{event(100, 120)}),
                       "no AVL overlap", InputError);
  CHECK_THROWS_AS(validate_speed(traj, std::vector<AvlDoorEvent>{}), InputError);
}

TEST_CASE("speed validation: captured share never drops as the threshold rises") {
  testsupport::PortableRng rng(7400);
  for (int trial = 0; trial < 10; ++trial) {
    const TimeDistanceSeries series = testsupport::random_series(rng, 30, 100);
    const Trajectory traj = fit_pchip(series);
    const int64_t mid = static_cast<int64_t>(traj.t_end / 2.0);
    const auto report = validate_speed(traj, std::vector<AvlDoorEvent>{event(0, mid)},
                                       {0.0, 1.0, 3.0, 5.0, 10.0});
    for (size_t i = 1; i < report.captured_pct.size(); ++i) {
      CHECK(report.captured_pct[i] >= report.captured_pct[i - 1]);
    }
  }
}

TEST_CASE("acceleration validation: stationary trips are fully reasonable") {
  const Trajectory traj = fit_lseg(series_of({0, 10, 20}, {0, 0, 0}));
  const auto report = validate_accel(traj);
  CHECK(report.unreasonable_pct == 0.0);
  CHECK(report.samples == 21);
}

TEST_CASE("acceleration validation: a violent speed jump is flagged") {
  // 0 to 100 m/s in one second is far outside [-5.3, 3.7] mph/s.
  const Trajectory traj = fit_lseg(series_of({0, 1, 2}, {0, 0, 100}));
  const auto report = validate_accel(traj);
  CHECK(report.unreasonable_pct > 0.0);
}

TEST_CASE("acceleration validation: bounds convert exactly from mph per second") {
  // 3.7 mph/s = 1.654048 m/s^2; 1.6 sits inside, 1.7 outside.
  const Trajectory inside = fit_lseg(series_of({0, 1, 2}, {0, 0, 1.6}));
  CHECK(validate_accel(inside).unreasonable_pct == 0.0);
  const Trajectory outside = fit_lseg(series_of({0, 1, 2}, {0, 0, 1.7}));
  CHECK(validate_accel(outside).unreasonable_pct > 0.0);
}

TEST_CASE("acceleration validation: sampling rate changes results only marginally") {
  testsupport::PortableRng rng(7401);
  for (int trial = 0; trial < 5; ++trial) {
    const TimeDistanceSeries series = testsupport::random_noisy_series(rng, 40, 120);
    const Trajectory traj = fit_locreg_pchip(series);
    const double hz1 = validate_accel(traj, kDefaultAccelMinMphps, kDefaultAccelMaxMphps, 1.0)
                           .unreasonable_pct;
    const double hz10 = validate_accel(traj, kDefaultAccelMinMphps, kDefaultAccelMaxMphps, 10.0)
                            .unreasonable_pct;
    CHECK(std::abs(hz1 - hz10) <= 5.0);
  }
}

TEST_CASE("acceleration validation: parameter checks") {
  const Trajectory traj = fit_lseg(series_of({0, 10, 20}, {0, 0, 0}));
  CHECK_THROWS_AS(validate_accel(traj, -5.3, 3.7, 0.0), InputError);
  CHECK_THROWS_AS(validate_accel(traj, 3.7, -5.3), InputError);
}

TEST_CASE("scorecard: flags are measured per algorithm") {
  // A dwell, then movement with real curvature, then another dwell.
  const TimeDistanceSeries series =
      series_of({0, 10, 20, 30, 40, 50}, {0, 0, 50, 120, 200, 200});
  const std::vector<AvlDoorEvent> events{event(0, 9), event(42, 50)};
  const Scorecard card = build_scorecard(series, events);
  REQUIRE(card.entries.size() == 4);

  const AlgorithmScore& lseg = card.entries[0];
  CHECK(lseg.algorithm == Algorithm::kLseg);
  CHECK(lseg.mon);
  CHECK_FALSE(lseg.cub);   // piecewise linear: no curvature anywhere
  CHECK_FALSE(lseg.diff);  // slopes jump at the knots
  CHECK_FALSE(lseg.err);
  CHECK_FALSE(lseg.best);

  const AlgorithmScore& pchip = card.entries[1];
  CHECK(pchip.algorithm == Algorithm::kPchip);
  CHECK(pchip.mon);
  CHECK(pchip.cub);
  CHECK(pchip.diff);
  CHECK_FALSE(pchip.err);
  CHECK_FALSE(pchip.best);

  const AlgorithmScore& locreg = card.entries[2];
  CHECK(locreg.algorithm == Algorithm::kLocreg);
  CHECK(locreg.err);  // structural: the fit models measurement error

  const AlgorithmScore& lp = card.entries[3];
  CHECK(lp.algorithm == Algorithm::kLocregPchip);
  CHECK(lp.mon);
  CHECK(lp.cub);
  CHECK(lp.diff);
  CHECK(lp.err);
  CHECK(lp.best);

  for (const auto& entry : card.entries) {
    CHECK(entry.avl_pct.count(0) == 1);
    CHECK(entry.avl_pct.count(3) == 1);
    CHECK(entry.avl_pct.count(5) == 1);
    CHECK(entry.acc_pct == 100.0 - entry.acc_unreasonable_pct);
  }
}

TEST_CASE("scorecard: identical input gives identical results") {
  const TimeDistanceSeries series =
      series_of({0, 10, 20, 30, 40, 50}, {0, 0, 50, 120, 200, 200});
  const std::vector<AvlDoorEvent> events{event(0, 9)};
  const Scorecard a = build_scorecard(series, events);
  const Scorecard b = build_scorecard(series, events);
  REQUIRE(a.entries.size() == b.entries.size());
  for (size_t i = 0; i < a.entries.size(); ++i) {
    CHECK(a.entries[i].mon == b.entries[i].mon);
    CHECK(a.entries[i].cub == b.entries[i].cub);
    CHECK(a.entries[i].diff == b.entries[i].diff);
    CHECK(a.entries[i].avl_pct == b.entries[i].avl_pct);
    CHECK(a.entries[i].acc_unreasonable_pct == b.entries[i].acc_unreasonable_pct);
  }
}
