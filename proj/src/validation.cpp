#include "traj/validation.hpp"

#include <algorithm>
#include <cmath>

#include "traj/error.hpp"

namespace traj {
namespace {

int64_t floor_i64(double v) { return static_cast<int64_t>(std::floor(v)); }

}  // namespace

SpeedValidationReport validate_speed(const Trajectory& traj, std::span<const AvlDoorEvent> events,
                                     std::vector<double> thresholds_mph) {
  if (thresholds_mph.empty()) throw InputError("no speed thresholds given");

  SpeedValidationReport report;
  report.thresholds_mph = thresholds_mph;
  std::vector<int64_t> captured(thresholds_mph.size(), 0);

  const int64_t domain_end = floor_i64(traj.t_end);
  for (const auto& ev : events) {
    const int64_t lo = std::max<int64_t>(0, ev.open_at - traj.origin_time);
    const int64_t hi = std::min<int64_t>(domain_end, ev.close_at - traj.origin_time);
    for (int64_t s = lo; s <= hi; ++s) {
      ++report.total_dooropen_seconds;
      const double speed = traj.v(static_cast<double>(s));
      for (size_t k = 0; k < thresholds_mph.size(); ++k) {
        if (speed <= thresholds_mph[k] * kMphToMps) ++captured[k];
      }
    }
  }
  if (report.total_dooropen_seconds == 0) throw InputError("no AVL overlap");

  report.captured_pct.reserve(captured.size());
  for (int64_t c : captured) {
    report.captured_pct.push_back(100.0 * static_cast<double>(c) /
                                  static_cast<double>(report.total_dooropen_seconds));
  }
  return report;
}

AccelValidationReport validate_accel(const Trajectory& traj, double min_mphps, double max_mphps,
                                     double sample_hz) {
  if (sample_hz <= 0.0) throw InputError("sample_hz must be positive");
  if (min_mphps >= max_mphps) throw InputError("acceleration bounds are inverted");

  AccelValidationReport report;
  report.min_mphps = min_mphps;
  report.max_mphps = max_mphps;
  const double lo = min_mphps * kMphToMps;
  const double hi = max_mphps * kMphToMps;

  const int64_t steps = floor_i64(traj.t_end * sample_hz + 1e-9);
  size_t bad = 0;
  for (int64_t k = 0; k <= steps; ++k) {
    const double t = std::min(static_cast<double>(k) / sample_hz, traj.t_end);
    const double a = traj.a(t);
    ++report.samples;
    if (a < lo || a > hi) ++bad;
  }
  report.unreasonable_pct = 100.0 * static_cast<double>(bad) / static_cast<double>(report.samples);
  return report;
}

bool trajectory_is_monotone(const Trajectory& traj, double sample_hz) {
  const int64_t steps = floor_i64(traj.t_end * sample_hz);
  double prev = traj.x(0.0);
  for (int64_t k = 1; k <= steps; ++k) {
    const double cur = traj.x(static_cast<double>(k) / sample_hz);
    if (cur < prev) return false;
    prev = cur;
  }
  return traj.x(traj.t_end) >= prev;
}

bool trajectory_is_cubic_family(const Trajectory& traj) {
  // A trajectory made of cubic polynomials must (a) show real curvature on at
  // least one piece — pieces may be locally linear where the data is — and
  // (b) actually form one continuous curve: pieces that memoize independent
  // local fits generally disagree where they meet, and such a patchwork is
  // not a piecewise-cubic function.
  bool any_curved = false;
  for (size_t i = 0; i < traj.pieces.size(); ++i) {
    const double width = (i + 1 < traj.pieces.size() ? traj.pieces[i + 1].start : traj.t_end) -
                         traj.pieces[i].start;
    const auto& c = traj.pieces[i].coeff;
    const double scale = std::max(1.0, std::abs(c[0]));
    const double quad = std::abs(c[2]) * width * width;
    const double cubic = std::abs(c[3]) * width * width * width;
    if (quad > 1e-9 * scale || cubic > 1e-9 * scale) any_curved = true;

    if (i + 1 < traj.pieces.size()) {
      const double left_end = c[0] + width * (c[1] + width * (c[2] + width * c[3]));
      const double right_start = traj.pieces[i + 1].coeff[0];
      const double vscale = std::max({1.0, std::abs(left_end), std::abs(right_start)});
      if (std::abs(left_end - right_start) > 1e-9 * vscale) return false;
    }
  }
  return any_curved;
}

bool trajectory_is_differentiable(const Trajectory& traj, double rel_tol) {
  for (size_t b = 1; b < traj.pieces.size(); ++b) {
    const auto [left, right] = traj.one_sided_v(b);
    const double scale = std::max({std::abs(left), std::abs(right), 1.0});
    if (std::abs(left - right) > rel_tol * scale) return false;
  }
  return true;
}

Scorecard build_scorecard(const TimeDistanceSeries& series, std::span<const AvlDoorEvent> events,
                          const LocregConfig& locreg) {
  Scorecard card;
  auto add = [&](Trajectory traj, bool err) {
    AlgorithmScore score;
    score.algorithm = traj.algorithm;
    score.mon = trajectory_is_monotone(traj);
    score.cub = trajectory_is_cubic_family(traj);
    score.diff = trajectory_is_differentiable(traj);
    score.err = err;
    const SpeedValidationReport speed = validate_speed(traj, events);
    for (size_t k = 0; k < speed.thresholds_mph.size(); ++k) {
      score.avl_pct[static_cast<int>(speed.thresholds_mph[k])] = speed.captured_pct[k];
    }
    const AccelValidationReport accel = validate_accel(traj);
    score.acc_unreasonable_pct = accel.unreasonable_pct;
    score.acc_pct = 100.0 - accel.unreasonable_pct;
    score.best = score.mon && score.cub && score.diff && score.err;
    card.entries.push_back(std::move(score));
  };

  add(fit_lseg(series), false);
  add(fit_pchip(series), false);
  add(fit_locreg(series, locreg).second, true);
  add(fit_locreg_pchip(series, locreg), true);
  return card;
}

}  // namespace traj
