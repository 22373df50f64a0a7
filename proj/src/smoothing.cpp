#include "traj/smoothing.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "traj/error.hpp"

namespace traj {
namespace {

int sign_of(double v) { return (v > 0.0) - (v < 0.0); }

double eval_poly(const std::array<double, 4>& c, double tau) {
  return c[0] + tau * (c[1] + tau * (c[2] + tau * c[3]));
}

double eval_poly_d1(const std::array<double, 4>& c, double tau) {
  return c[1] + tau * (2.0 * c[2] + tau * 3.0 * c[3]);
}

double eval_poly_d2(const std::array<double, 4>& c, double tau) {
  return 2.0 * c[2] + tau * 6.0 * c[3];
}

// Fritsch-Carlson knot slopes for non-decreasing data.
std::vector<double> pchip_slopes(const std::vector<double>& t, const std::vector<double>& x) {
  const size_t n = t.size();
  std::vector<double> h(n - 1), s(n - 1);
  for (size_t i = 0; i + 1 < n; ++i) {
    h[i] = t[i + 1] - t[i];
    s[i] = (x[i + 1] - x[i]) / h[i];
  }

  std::vector<double> m(n, 0.0);
  if (n == 2) {
    m[0] = m[1] = s[0];
    return m;
  }

  for (size_t k = 1; k + 1 < n; ++k) {
    if (s[k - 1] == 0.0 || s[k] == 0.0 || sign_of(s[k - 1]) != sign_of(s[k])) {
      m[k] = 0.0;
    } else {
      const double w1 = 2.0 * h[k] + h[k - 1];
      const double w2 = h[k] + 2.0 * h[k - 1];
      m[k] = (w1 + w2) / (w1 / s[k - 1] + w2 / s[k]);
    }
  }

  auto endpoint = [](double h0, double h1, double s0, double s1) {
    double m0 = ((2.0 * h0 + h1) * s0 - h0 * s1) / (h0 + h1);
    if (sign_of(m0) != sign_of(s0)) {
      m0 = 0.0;
    } else if (sign_of(s0) != sign_of(s1) && std::abs(m0) > 3.0 * std::abs(s0)) {
      m0 = 3.0 * s0;
    }
    return m0;
  };
  m[0] = endpoint(h[0], h[1], s[0], s[1]);
  m[n - 1] = endpoint(h[n - 2], h[n - 3], s[n - 2], s[n - 3]);
  return m;
}

// Cubic Hermite pieces through (t, x) with slopes m.
std::vector<PolyPiece> hermite_pieces(const std::vector<double>& t, const std::vector<double>& x,
                                      const std::vector<double>& m) {
  std::vector<PolyPiece> pieces(t.size() - 1);
  for (size_t i = 0; i + 1 < t.size(); ++i) {
    const double h = t[i + 1] - t[i];
    const double s = (x[i + 1] - x[i]) / h;
    PolyPiece& p = pieces[i];
    p.start = t[i];
    p.coeff[0] = x[i];
    p.coeff[1] = m[i];
    p.coeff[2] = (3.0 * s - 2.0 * m[i] - m[i + 1]) / h;
    p.coeff[3] = (m[i] + m[i + 1] - 2.0 * s) / (h * h);
  }
  return pieces;
}

Trajectory pchip_from_knots(std::vector<double> t, std::vector<double> x, Algorithm alg) {
  Trajectory traj;
  traj.algorithm = alg;
  traj.t_end = t.back();
  const std::vector<double> m = pchip_slopes(t, x);
  traj.pieces = hermite_pieces(t, x, m);
  traj.knot_t = std::move(t);
  traj.knot_x = std::move(x);
  traj.monotone_family = true;
  return traj;
}

struct LocalFit {
  // Polynomial in u = t - center, valid near the fit center.
  std::array<double, 4> coeff{};
  int degree_used = 0;
};

double kernel_weight(Kernel kernel, double r) {  // r = |u| / h in [0, 1)
  switch (kernel) {
    case Kernel::kTricube: {
      const double w = 1.0 - r * r * r;
      return w * w * w;
    }
    case Kernel::kEpanechnikov:
      return 1.0 - r * r;
    case Kernel::kUniform:
      return 1.0;
  }
  return 0.0;
}

// Solve the symmetric positive definite system G a = b (dim <= 4) by LDL^T.
// Returns false when a pivot collapses, signalling a rank-deficient design.
bool solve_ldlt(int dim, std::array<std::array<double, 4>, 4>& g, std::array<double, 4>& b,
                std::array<double, 4>& out) {
  double max_diag = 0.0;
  for (int i = 0; i < dim; ++i) max_diag = std::max(max_diag, std::abs(g[i][i]));
  if (max_diag <= 0.0) return false;
  const double tol = 1e-12 * max_diag;

  std::array<std::array<double, 4>, 4> l{};
  std::array<double, 4> dvec{};
  for (int j = 0; j < dim; ++j) {
    double dj = g[j][j];
    for (int k = 0; k < j; ++k) dj -= l[j][k] * l[j][k] * dvec[k];
    if (dj <= tol) return false;
    dvec[j] = dj;
    l[j][j] = 1.0;
    for (int i = j + 1; i < dim; ++i) {
      double lij = g[i][j];
      for (int k = 0; k < j; ++k) lij -= l[i][k] * l[j][k] * dvec[k];
      l[i][j] = lij / dj;
    }
  }
  // Forward, diagonal, backward substitution.
  std::array<double, 4> z{};
  for (int i = 0; i < dim; ++i) {
    double zi = b[i];
    for (int k = 0; k < i; ++k) zi -= l[i][k] * z[k];
    z[i] = zi;
  }
  for (int i = 0; i < dim; ++i) z[i] /= dvec[i];
  for (int i = dim - 1; i >= 0; --i) {
    double ai = z[i];
    for (int k = i + 1; k < dim; ++k) ai -= l[k][i] * out[k];
    out[i] = ai;
  }
  return true;
}

// The k-nearest-in-time knots form a contiguous window in the sorted knot
// array; expand greedily from the insertion point.
void nearest_window(const std::vector<double>& t, double query, int k, size_t& lo, size_t& hi) {
  const size_t n = t.size();
  size_t right = std::lower_bound(t.begin(), t.end(), query) - t.begin();
  size_t left = right;  // window is [left, right)
  while (right - left < static_cast<size_t>(k) && (left > 0 || right < n)) {
    const double dl = left > 0 ? query - t[left - 1] : std::numeric_limits<double>::infinity();
    const double dr = right < n ? t[right] - query : std::numeric_limits<double>::infinity();
    if (dl <= dr) {
      --left;
    } else {
      ++right;
    }
  }
  lo = left;
  hi = right;
}

LocalFit locreg_fit_at(const std::vector<double>& t, const std::vector<double>& d, double query,
                       const LocregConfig& config, std::vector<std::string>* warnings,
                       const std::string& label) {
  const size_t n = t.size();
  const int k = std::min<int>(config.bandwidth_points, static_cast<int>(n));
  size_t lo = 0, hi = 0;
  nearest_window(t, query, k, lo, hi);

  // Bandwidth: distance to the (k+1)-th nearest knot. When every knot is
  // already in the window, scale the farthest distance up so all k points
  // keep positive weight.
  double max_dist = 0.0;
  for (size_t j = lo; j < hi; ++j) max_dist = std::max(max_dist, std::abs(t[j] - query));
  double h;
  const double dl = lo > 0 ? query - t[lo - 1] : std::numeric_limits<double>::infinity();
  const double dr = hi < n ? t[hi] - query : std::numeric_limits<double>::infinity();
  const double next_dist = std::min(dl, dr);
  if (std::isfinite(next_dist)) {
    h = next_dist;
  } else {
    h = max_dist * (static_cast<double>(k) + 1.0) / static_cast<double>(k);
  }
  if (h <= 0.0) h = 1.0;

  // Weighted least squares on the scaled basis (u/h)^p for conditioning.
  std::vector<double> us, ws, ys;
  us.reserve(hi - lo);
  for (size_t j = lo; j < hi; ++j) {
    const double u = t[j] - query;
    const double r = std::abs(u) / h;
    if (r >= 1.0) continue;
    us.push_back(u / h);
    ws.push_back(kernel_weight(config.kernel, r));
    ys.push_back(d[j]);
  }

  for (int degree = config.degree; degree >= 0; --degree) {
    const int dim = degree + 1;
    std::array<std::array<double, 4>, 4> g{};
    std::array<double, 4> b{};
    for (size_t j = 0; j < us.size(); ++j) {
      double pow_cache[7] = {1, 0, 0, 0, 0, 0, 0};
      for (int p = 1; p <= 2 * degree; ++p) pow_cache[p] = pow_cache[p - 1] * us[j];
      for (int r = 0; r < dim; ++r) {
        for (int c = r; c < dim; ++c) g[r][c] += ws[j] * pow_cache[r + c];
        b[r] += ws[j] * pow_cache[r] * ys[j];
      }
    }
    for (int r = 0; r < dim; ++r) {
      for (int c = 0; c < r; ++c) g[r][c] = g[c][r];
    }
    std::array<double, 4> scaled{};
    if (!solve_ldlt(dim, g, b, scaled)) continue;

    if (degree < config.degree && warnings != nullptr) {
      warnings->push_back(label + ": local fit degree degraded to " + std::to_string(degree));
    }
    LocalFit fit;
    fit.degree_used = degree;
    double hp = 1.0;
    for (int p = 0; p <= degree; ++p) {
      fit.coeff[p] = scaled[p] / hp;  // back to the unscaled basis u^p
      hp *= h;
    }
    return fit;
  }
  throw InputError("local regression design is singular at " + label);
}

// Shift a polynomial in u = t - center to local time tau = t - start.
std::array<double, 4> shift_poly(const std::array<double, 4>& a, double delta) {
  // u = tau + delta
  std::array<double, 4> c{};
  const double d2 = delta * delta;
  const double d3 = d2 * delta;
  c[0] = a[0] + a[1] * delta + a[2] * d2 + a[3] * d3;
  c[1] = a[1] + 2.0 * a[2] * delta + 3.0 * a[3] * d2;
  c[2] = a[2] + 3.0 * a[3] * delta;
  c[3] = a[3];
  return c;
}

}  // namespace

std::string algorithm_name(Algorithm a) {
  switch (a) {
    case Algorithm::kLseg: return "lseg";
    case Algorithm::kPchip: return "pchip";
    case Algorithm::kLocreg: return "locreg";
    case Algorithm::kLocregPchip: return "locreg-pchip";
  }
  return "unknown";
}

Algorithm algorithm_from_name(const std::string& name) {
  if (name == "lseg") return Algorithm::kLseg;
  if (name == "pchip") return Algorithm::kPchip;
  if (name == "locreg") return Algorithm::kLocreg;
  if (name == "locreg-pchip" || name == "locreg_pchip") return Algorithm::kLocregPchip;
  throw InputError("unknown algorithm '" + name + "'");
}

size_t Trajectory::piece_index(double t) const {
  if (!(t >= 0.0 && t <= t_end)) throw std::domain_error("time outside trajectory domain");
  // Last piece whose start <= t; the final piece is closed on the right.
  size_t lo = 0, hi = pieces.size();
  while (hi - lo > 1) {
    const size_t mid = (lo + hi) / 2;
    if (pieces[mid].start <= t) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  return lo;
}

double Trajectory::x(double t) const {
  const size_t i = piece_index(t);
  double value = eval_poly(pieces[i].coeff, t - pieces[i].start);
  if (monotone_family) {
    // A monotone piece stays within its endpoint values in exact arithmetic;
    // clamping enforces that against floating-point wobble.
    const double lo = knot_x[i];
    const double hi = knot_x[i + 1];
    value = std::clamp(value, lo, hi);
  }
  return value;
}

double Trajectory::v(double t) const {
  const size_t i = piece_index(t);
  return eval_poly_d1(pieces[i].coeff, t - pieces[i].start);
}

double Trajectory::a(double t) const {
  const size_t i = piece_index(t);
  if (algorithm == Algorithm::kLseg) return piece_accel[i];
  return eval_poly_d2(pieces[i].coeff, t - pieces[i].start);
}

std::pair<double, double> Trajectory::one_sided_v(size_t b) const {
  if (b == 0 || b >= pieces.size()) throw std::out_of_range("not an interior breakpoint");
  const PolyPiece& left = pieces[b - 1];
  const PolyPiece& right = pieces[b];
  return {eval_poly_d1(left.coeff, right.start - left.start), right.coeff[1]};
}

Trajectory fit_lseg(const TimeDistanceSeries& series) {
  validate_series(series);
  const size_t n = series.n();
  Trajectory traj;
  traj.algorithm = Algorithm::kLseg;
  traj.t_end = series.t.back();
  traj.knot_t = series.t;
  traj.knot_x = series.d;
  traj.origin_time = series.origin_time;
  traj.monotone_family = true;
  traj.pieces.resize(n - 1);
  traj.piece_accel.assign(n - 1, 0.0);

  std::vector<double> slope(n - 1);
  for (size_t i = 0; i + 1 < n; ++i) {
    const double h = series.t[i + 1] - series.t[i];
    slope[i] = (series.d[i + 1] - series.d[i]) / h;
    traj.pieces[i].start = series.t[i];
    traj.pieces[i].coeff = {series.d[i], slope[i], 0.0, 0.0};
  }
  for (size_t i = 0; i + 2 < n; ++i) {
    traj.piece_accel[i] = (slope[i + 1] - slope[i]) / (series.t[i + 1] - series.t[i]);
  }
  return traj;
}

Trajectory fit_pchip(const TimeDistanceSeries& series) {
  validate_series(series);
  Trajectory traj = pchip_from_knots(series.t, series.d, Algorithm::kPchip);
  traj.origin_time = series.origin_time;
  return traj;
}

namespace {

void check_locreg_preconditions(const TimeDistanceSeries& series, const LocregConfig& config) {
  validate_series(series);
  if (config.degree < 0 || config.degree > 3) throw InputError("locreg degree must be 0..3");
  if (config.bandwidth_points < 1) throw InputError("locreg bandwidth must be >= 1");
  if (config.grid_per_interval < 1) throw InputError("locreg grid must be >= 1");
  if (series.n() <= static_cast<size_t>(config.degree) + 1) {
    throw InputError("insufficient data for local regression degree");
  }
}

SmoothedDistances locreg_knot_estimates(const TimeDistanceSeries& series,
                                        const LocregConfig& config) {
  SmoothedDistances smoothed;
  smoothed.x.reserve(series.n());
  for (size_t i = 0; i < series.n(); ++i) {
    const LocalFit fit = locreg_fit_at(series.t, series.d, series.t[i], config,
                                       &smoothed.warnings, "knot " + std::to_string(i));
    smoothed.x.push_back(fit.coeff[0]);
  }
  return smoothed;
}

}  // namespace

std::pair<SmoothedDistances, Trajectory> fit_locreg(const TimeDistanceSeries& series,
                                                    const LocregConfig& config) {
  check_locreg_preconditions(series, config);
  SmoothedDistances smoothed = locreg_knot_estimates(series, config);

  Trajectory traj;
  traj.algorithm = Algorithm::kLocreg;
  traj.t_end = series.t.back();
  traj.knot_t = series.t;
  traj.knot_x = smoothed.x;
  traj.origin_time = series.origin_time;
  traj.refit_between_knots = true;
  const int g = config.grid_per_interval;
  traj.pieces.reserve((series.n() - 1) * static_cast<size_t>(g));
  for (size_t i = 0; i + 1 < series.n(); ++i) {
    const double width = (series.t[i + 1] - series.t[i]) / g;
    for (int j = 0; j < g; ++j) {
      const double start = series.t[i] + j * width;
      const double center = start + width / 2.0;
      const LocalFit fit = locreg_fit_at(series.t, series.d, center, config, &traj.warnings,
                                         "piece " + std::to_string(traj.pieces.size()));
      PolyPiece piece;
      piece.start = start;
      piece.coeff = shift_poly(fit.coeff, start - center);
      traj.pieces.push_back(piece);
    }
  }
  return {std::move(smoothed), std::move(traj)};
}

Trajectory fit_locreg_pchip(const TimeDistanceSeries& series, const LocregConfig& config) {
  check_locreg_preconditions(series, config);
  SmoothedDistances smoothed = locreg_knot_estimates(series, config);

  std::vector<double> clamped = smoothed.x;
  for (size_t i = 1; i < clamped.size(); ++i) {
    if (clamped[i] < clamped[i - 1]) clamped[i] = clamped[i - 1];
  }

  Trajectory traj = pchip_from_knots(series.t, std::move(clamped), Algorithm::kLocregPchip);
  traj.origin_time = series.origin_time;
  traj.warnings = std::move(smoothed.warnings);
  return traj;
}

}  // namespace traj
