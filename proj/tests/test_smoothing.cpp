#include <doctest.h>

#include <cmath>
#include <stdexcept>
#include <vector>

#include "support/generators.hpp"
#include "support/wls_oracle.hpp"
#include "traj/error.hpp"
#include "traj/smoothing.hpp"

using namespace traj;

namespace {

TimeDistanceSeries series_of(std::vector<double> t, std::vector<double> d) {
  TimeDistanceSeries s;
  s.t = std::move(t);
  s.d = std::move(d);
  s.origin_time = 1650875085;
  return s;
}

// Interior sample times of each piece, keeping clear of the breakpoints.
std::vector<double> interior_times(const Trajectory& traj, double margin = 0.05) {
  std::vector<double> times;
  for (size_t i = 0; i < traj.pieces.size(); ++i) {
    const double start = traj.pieces[i].start;
    const double end = i + 1 < traj.pieces.size() ? traj.pieces[i + 1].start : traj.t_end;
    const double width = end - start;
    if (width < 4.0 * margin) continue;
    for (double f : {0.3, 0.5, 0.7}) times.push_back(start + f * width);
  }
  return times;
}

}  // namespace

TEST_CASE("algorithm names round-trip") {
  for (Algorithm a : {Algorithm::kLseg, Algorithm::kPchip, Algorithm::kLocreg,
                      Algorithm::kLocregPchip}) {
    CHECK(algorithm_from_name(algorithm_name(a)) == a);
  }
  CHECK(algorithm_from_name("locreg_pchip") == Algorithm::kLocregPchip);
  CHECK_THROWS_AS(algorithm_from_name("spline"), InputError);
}

TEST_CASE("lseg: linear interpolation between knots") {
  const Trajectory traj = fit_lseg(series_of({0, 10, 20}, {0, 100, 200}));
  CHECK(traj.x(5.0) == 50.0);
  CHECK(traj.x(0.0) == 0.0);
  CHECK(traj.x(20.0) == 200.0);
  const Trajectory traj2 = fit_lseg(series_of({0, 4, 8}, {0, 8, 16}));
  CHECK(traj2.x(1.0) == 2.0);
}

TEST_CASE("lseg: speed is the forward-difference slope, right-continuous") {
  const Trajectory traj = fit_lseg(series_of({0, 10, 20}, {0, 100, 150}));
  CHECK(traj.v(0.0) == 10.0);
  CHECK(traj.v(9.99) == 10.0);
  CHECK(traj.v(10.0) == 5.0);  // right-hand slope at the breakpoint
  CHECK(traj.v(15.0) == 5.0);
}

TEST_CASE("lseg: acceleration is the forward difference of speeds") {
  const Trajectory traj = fit_lseg(series_of({0, 1, 2}, {0, 0, 100}));
  CHECK(traj.v(0.5) == 0.0);
  CHECK(traj.v(1.5) == 100.0);
  CHECK(traj.a(0.5) == 100.0);  // (100 - 0) / (1 - 0)
  CHECK(traj.a(1.5) == 0.0);    // final piece has no successor
  CHECK(traj.x(1.5) == 50.0);
}

TEST_CASE("lseg: stationary series stays flat") {
  const Trajectory traj = fit_lseg(series_of({0, 5, 11}, {0, 0, 0}));
  for (double t : {0.0, 2.5, 5.0, 8.0, 11.0}) {
    CHECK(traj.x(t) == 0.0);
    CHECK(traj.v(t) == 0.0);
    CHECK(traj.a(t) == 0.0);
  }
}

TEST_CASE("lseg: interpolates every knot exactly") {
  testsupport::PortableRng rng(7300);
  const TimeDistanceSeries series = testsupport::random_series(rng, 50, 120);
  const Trajectory traj = fit_lseg(series);
  for (size_t i = 0; i < series.n(); ++i) {
    CHECK(traj.x(series.t[i]) == doctest::Approx(series.d[i]).epsilon(1e-12));
  }
}

TEST_CASE("pchip: reproduces a straight line exactly") {
  const Trajectory traj = fit_pchip(series_of({0, 1, 2}, {0, 1, 2}));
  CHECK(traj.x(0.5) == 0.5);
  CHECK(traj.x(1.7) == doctest::Approx(1.7).epsilon(1e-12));
  CHECK(traj.v(0.25) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(traj.a(0.25) == doctest::Approx(0.0).epsilon(1e-12));
}

TEST_CASE("pchip: a flat secant forces a flat piece") {
  // Left secant is zero, so the interior slope at t=1 is zero and the first
  // piece is identically zero; the hand-evaluated value at t=1.5 is 3.125.
  const Trajectory traj = fit_pchip(series_of({0, 1, 2}, {0, 0, 10}));
  CHECK(traj.x(0.5) == 0.0);
  CHECK(traj.x(0.999) == 0.0);
  CHECK(traj.v(1.0) == 0.0);
  CHECK(traj.x(1.5) == 3.125);
  for (double t = 0.0; t <= 2.0; t += 0.01) CHECK(traj.x(t) >= 0.0);
}

TEST_CASE("pchip: interpolates knots and never decreases") {
  testsupport::PortableRng rng(7301);
  for (int trial = 0; trial < 20; ++trial) {
    const TimeDistanceSeries series = testsupport::random_series(rng, 20, 150);
    const Trajectory traj = fit_pchip(series);
    for (size_t i = 0; i < series.n(); ++i) {
      CHECK(traj.x(series.t[i]) ==
            doctest::Approx(series.d[i]).epsilon(1e-9));
    }
    double prev = traj.x(0.0);
    for (double t = 0.0; t <= traj.t_end; t += 0.1) {
      const double cur = traj.x(std::min(t, traj.t_end));
      CHECK(cur >= prev);
      prev = cur;
    }
  }
}

TEST_CASE("pchip: one-sided first derivatives agree at interior knots") {
  testsupport::PortableRng rng(7302);
  const TimeDistanceSeries series = testsupport::random_series(rng, 40, 80);
  const Trajectory traj = fit_pchip(series);
  for (size_t b = 1; b < traj.pieces.size(); ++b) {
    const auto [left, right] = traj.one_sided_v(b);
    CHECK(left == doctest::Approx(right).epsilon(1e-9));
  }
}

TEST_CASE("locreg: recovers an in-model cubic exactly") {
  std::vector<double> t, d;
  for (int i = 0; i < 25; ++i) {
    const double ti = 2.0 * i;
    t.push_back(ti);
    d.push_back(1.0 + 0.8 * ti + 0.02 * ti * ti + 0.001 * ti * ti * ti);
  }
  d[0] = 0.0;  // series must start at zero; shift the cubic accordingly
  for (size_t i = 1; i < d.size(); ++i) d[i] -= 1.0;

  LocregConfig config;
  config.bandwidth_points = 30;  // covers every point
  const auto [smoothed, traj] = fit_locreg(series_of(t, d), config);
  for (size_t i = 0; i < t.size(); ++i) {
    CHECK(smoothed.x[i] == doctest::Approx(d[i]).epsilon(1e-6));
  }
  // Derivatives of the local fit match the generating cubic away from edges.
  const double tm = 24.0;
  const double v_true = 0.8 + 0.04 * tm + 0.003 * tm * tm;
  CHECK(traj.v(tm) == doctest::Approx(v_true).epsilon(1e-6));
}

TEST_CASE("locreg: constant data gives a constant fit") {
  TimeDistanceSeries series = series_of({0, 3, 7, 12, 15, 19, 25}, {0, 0, 0, 0, 0, 0, 0});
  const auto [smoothed, traj] = fit_locreg(series);
  for (double xi : smoothed.x) CHECK(std::abs(xi) < 1e-9);
  for (double t = 0.0; t <= 25.0; t += 0.5) {
    CHECK(std::abs(traj.x(t)) < 1e-9);
    CHECK(std::abs(traj.v(t)) < 1e-9);
  }
}

TEST_CASE("locreg: knot estimates match the brute-force solver") {
  testsupport::PortableRng rng(7303);
  for (int trial = 0; trial < 5; ++trial) {
    const TimeDistanceSeries series = testsupport::random_noisy_series(rng, 60, 60);
    const SmoothedDistances smoothed = fit_locreg(series).first;
    for (size_t i = 0; i < series.n(); ++i) {
      const long double expect =
          testsupport::oracle_locreg_at(series.t, series.d, series.t[i], 20);
      const double scale = std::max(1.0, std::abs(static_cast<double>(expect)));
      CHECK(std::abs(smoothed.x[i] - static_cast<double>(expect)) <= 1e-8 * scale);
    }
  }
}

TEST_CASE("locreg: rank-deficient windows degrade the degree with a warning") {
  LocregConfig config;
  config.bandwidth_points = 2;  // two points cannot support a cubic
  const SmoothedDistances smoothed =
      fit_locreg(series_of({0, 5, 9, 14, 20}, {0, 10, 30, 55, 60}), config).first;
  REQUIRE_FALSE(smoothed.warnings.empty());
  bool mentions_degrade = false;
  for (const auto& w : smoothed.warnings) {
    if (w.find("degraded") != std::string::npos) mentions_degrade = true;
  }
  CHECK(mentions_degrade);
  // A degree-1 fit through two points still passes through the query knot.
  for (size_t i = 0; i < smoothed.x.size(); ++i) {
    CHECK(std::isfinite(smoothed.x[i]));
  }
}

TEST_CASE("locreg: config validation") {
  const TimeDistanceSeries series = series_of({0, 1, 2, 3, 4}, {0, 1, 2, 3, 4});
  LocregConfig config;
  config.degree = 4;
  CHECK_THROWS_AS(fit_locreg(series, config), InputError);
  config = LocregConfig{};
  config.bandwidth_points = 0;
  CHECK_THROWS_AS(fit_locreg(series, config), InputError);
  CHECK_THROWS_AS(fit_locreg(series_of({0, 1, 2}, {0, 1, 2}), LocregConfig{}), InputError);
}

TEST_CASE("locreg-pchip: clamps non-monotone estimates then interpolates them") {
  // A hard step makes the local cubics overshoot, so the raw estimates dip.
  std::vector<double> t, d;
  for (int i = 0; i < 30; ++i) {
    t.push_back(3.0 * i);
    d.push_back(i < 15 ? 0.0 : 300.0);
  }
  const TimeDistanceSeries series = series_of(t, d);

  const SmoothedDistances raw = fit_locreg(series).first;
  bool raw_nonmonotone = false;
  for (size_t i = 1; i < raw.x.size(); ++i) {
    if (raw.x[i] < raw.x[i - 1]) raw_nonmonotone = true;
  }
  REQUIRE(raw_nonmonotone);  // the construction must actually trigger the clamp

  std::vector<double> clamped = raw.x;
  for (size_t i = 1; i < clamped.size(); ++i) {
    clamped[i] = std::max(clamped[i], clamped[i - 1]);
  }

  const Trajectory traj = fit_locreg_pchip(series);
  REQUIRE(traj.knot_x.size() == clamped.size());
  for (size_t i = 0; i < clamped.size(); ++i) {
    CHECK(traj.knot_x[i] == clamped[i]);  // exact: same estimates, same clamp
    CHECK(traj.x(series.t[i]) == doctest::Approx(clamped[i]).epsilon(1e-9));
  }
}

TEST_CASE("locreg-pchip: dense speed is never negative") {
  testsupport::PortableRng rng(7304);
  for (int trial = 0; trial < 10; ++trial) {
    const TimeDistanceSeries series = testsupport::random_noisy_series(rng, 25, 120);
    const Trajectory traj = fit_locreg_pchip(series);
    const int steps = static_cast<int>(traj.t_end * 10.0);
    for (int k = 0; k <= steps; ++k) {
      const double t = std::min(static_cast<double>(k) / 10.0, traj.t_end);
      CHECK(traj.v(t) >= -1e-12);
    }
  }
}

TEST_CASE("evaluation outside the domain is an error") {
  testsupport::PortableRng rng(7305);
  const TimeDistanceSeries series = testsupport::random_series(rng, 20, 40);
  for (Algorithm a : {Algorithm::kLseg, Algorithm::kPchip, Algorithm::kLocreg,
                      Algorithm::kLocregPchip}) {
    Trajectory traj;
    switch (a) {
      case Algorithm::kLseg: traj = fit_lseg(series); break;
      case Algorithm::kPchip: traj = fit_pchip(series); break;
      case Algorithm::kLocreg: traj = fit_locreg(series).second; break;
      case Algorithm::kLocregPchip: traj = fit_locreg_pchip(series); break;
    }
    CHECK_THROWS_AS(traj.x(-0.001), std::domain_error);
    CHECK_THROWS_AS(traj.x(traj.t_end + 0.001), std::domain_error);
    if (a == Algorithm::kLocreg) {
      // The between-knot refits are a regression, not an interpolant: the
      // curve only approximates the knot estimates.
      CHECK(traj.x(0.0) == doctest::Approx(traj.knot_x.front()).epsilon(0.05));
      CHECK(traj.x(traj.t_end) == doctest::Approx(traj.knot_x.back()).epsilon(0.05));
    } else {
      CHECK(traj.x(0.0) == doctest::Approx(traj.knot_x.front()).epsilon(1e-9));
      CHECK(traj.x(traj.t_end) == doctest::Approx(traj.knot_x.back()).epsilon(1e-9));
    }
  }
}

TEST_CASE("speed agrees with finite differences of position") {
  testsupport::PortableRng rng(7306);
  const double step = 1e-3;
  for (int trial = 0; trial < 5; ++trial) {
    const TimeDistanceSeries series = testsupport::random_noisy_series(rng, 30, 90);
    for (Algorithm a : {Algorithm::kPchip, Algorithm::kLocreg, Algorithm::kLocregPchip}) {
      Trajectory traj;
      switch (a) {
        case Algorithm::kPchip: traj = fit_pchip(series); break;
        case Algorithm::kLocreg: traj = fit_locreg(series).second; break;
        default: traj = fit_locreg_pchip(series); break;
      }
      for (double t : interior_times(traj)) {
        const double fd = (traj.x(t + step) - traj.x(t - step)) / (2.0 * step);
        const double v = traj.v(t);
        const double scale = std::max({1.0, std::abs(v), std::abs(fd)});
        CHECK(std::abs(fd - v) <= 1e-4 * scale);
      }
    }
  }
}

TEST_CASE("acceleration agrees with finite differences of speed") {
  testsupport::PortableRng rng(7307);
  const double step = 1e-3;
  for (int trial = 0; trial < 5; ++trial) {
    const TimeDistanceSeries series = testsupport::random_noisy_series(rng, 30, 90);
    for (Algorithm a : {Algorithm::kPchip, Algorithm::kLocreg, Algorithm::kLocregPchip}) {
      Trajectory traj;
      switch (a) {
        case Algorithm::kPchip: traj = fit_pchip(series); break;
        case Algorithm::kLocreg: traj = fit_locreg(series).second; break;
        default: traj = fit_locreg_pchip(series); break;
      }
      for (double t : interior_times(traj)) {
        const double fd = (traj.v(t + step) - traj.v(t - step)) / (2.0 * step);
        const double acc = traj.a(t);
        const double scale = std::max({1.0, std::abs(acc), std::abs(fd)});
        CHECK(std::abs(fd - acc) <= 1e-3 * scale);
      }
    }
  }
}
