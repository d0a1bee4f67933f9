#include "twistcar/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>
#include <sstream>

#include "twistcar/error.hpp"

namespace twistcar {

namespace {

void check_series(const std::vector<double>& t, const std::vector<double>& y) {
  if (t.size() != y.size()) throw ValidationError("time and value series differ in length");
  if (t.size() < 2) throw ValidationError("series needs at least two samples");
}

// Linear interpolation of y at time s (clamped to the series).
double sample_at(const std::vector<double>& t, const std::vector<double>& y, double s) {
  if (s <= t.front()) return y.front();
  if (s >= t.back()) return y.back();
  const auto hi = static_cast<std::size_t>(std::upper_bound(t.begin(), t.end(), s) - t.begin());
  const std::size_t lo = hi - 1;
  const double f = (s - t[lo]) / (t[hi] - t[lo]);
  return y[lo] + f * (y[hi] - y[lo]);
}

// Integral of y over [a, b] by the trapezoid rule on the grid, with partial
// panels at both ends.
double integrate_window(const std::vector<double>& t, const std::vector<double>& y, double a, double b) {
  const double tol = 1e-9 * (t.back() - t.front()) / static_cast<double>(t.size());
  auto first = std::lower_bound(t.begin(), t.end(), a - tol) - t.begin();
  auto last = std::upper_bound(t.begin(), t.end(), b + tol) - t.begin() - 1;
  double sum = 0.0;
  if (first > last) {
    return 0.5 * (sample_at(t, y, a) + sample_at(t, y, b)) * (b - a);
  }
  const auto i0 = static_cast<std::size_t>(first), i1 = static_cast<std::size_t>(last);
  if (t[i0] > a) sum += 0.5 * (sample_at(t, y, a) + y[i0]) * (t[i0] - a);
  for (std::size_t i = i0; i < i1; ++i) sum += 0.5 * (y[i] + y[i + 1]) * (t[i + 1] - t[i]);
  if (t[i1] < b) sum += 0.5 * (y[i1] + sample_at(t, y, b)) * (b - t[i1]);
  return sum;
}

int whole_periods(const std::vector<double>& t, double t_start, double period) {
  const double span = t.back() - t_start;
  return static_cast<int>(std::floor(span / period * (1.0 + 1e-10)));
}

}  // namespace

double steady_state_start(const NondimParams& nd, double n_constants) {
  return n_constants * (1.0 + nd.kappa) / 3.0 * nd.t_c;
}

double steady_state_window(const Trajectory& traj, const NondimParams& nd, double period, double n_constants) {
  const double t_start = steady_state_start(nd, n_constants);
  if (traj.size() < 2 || traj.t.back() < t_start + 2.0 * period) {
    std::ostringstream os;
    os << "trajectory too short for steady-state analysis: needs t_end >= " << t_start + 2.0 * period;
    throw ValidationError(os.str());
  }
  return t_start;
}

CycleAverage cycle_average_between(const std::vector<double>& t, const std::vector<double>& y, double t_lo,
                                   double t_hi, double period, int min_periods) {
  check_series(t, y);
  if (!(period > 0.0)) throw ValidationError("period must be > 0");
  t_hi = std::min(t_hi, t.back());
  const int n = static_cast<int>(std::floor((t_hi - t_lo) / period * (1.0 + 1e-10)));
  if (n < min_periods || t_lo < t.front()) {
    std::ostringstream os;
    os << "steady-state window holds " << std::max(n, 0) << " whole periods, need " << min_periods;
    throw ValidationError(os.str());
  }
  CycleAverage out;
  out.periods = n;
  out.t_from = t_lo;
  out.t_to = t_lo + n * period;
  out.mean = integrate_window(t, y, out.t_from, out.t_to) / (out.t_to - out.t_from);
  out.displacement_per_cycle = out.mean * period;
  return out;
}

CycleAverage cycle_average(const std::vector<double>& t, const std::vector<double>& y, double t_start, double period,
                           int min_periods) {
  check_series(t, y);
  return cycle_average_between(t, y, t_start, t.back(), period, min_periods);
}

CycleAverage cycle_average(const Trajectory& traj, double t_start, double period) {
  return cycle_average(traj.t, traj.v_par, t_start, period);
}

double path_curvature(const Trajectory& traj, double t_start, double period) {
  std::vector<double> thetadot(traj.size());
  for (std::size_t i = 0; i < traj.size(); ++i) thetadot[i] = traj.qdot[i](kTheta);
  const CycleAverage v = cycle_average(traj.t, traj.v_par, t_start, period);
  const CycleAverage w = cycle_average(traj.t, thetadot, t_start, period);
  double vmax = 0.0;
  for (std::size_t i = 0; i < traj.size(); ++i)
    if (traj.t[i] >= v.t_from) vmax = std::max(vmax, std::abs(traj.v_par[i]));
  const double net = std::abs(v.mean) * (v.t_to - v.t_from);
  if (!(net > 10.0 * traj.dt() * vmax) || v.mean == 0.0) {
    std::ostringstream os;
    os << "degenerate: near-zero mean speed " << v.mean << " m/s, curvature undefined";
    throw BoundaryError(os.str());
  }
  return w.mean / v.mean;
}

SteadyStateMetrics steady_state_metrics(const Trajectory& traj, double t_start, double period) {
  SteadyStateMetrics m;
  m.t_start = t_start;
  const CycleAverage v = cycle_average(traj, t_start, period);
  m.mean_speed = v.mean;
  m.displacement_per_cycle = v.displacement_per_cycle;
  std::vector<double> theta(traj.size());
  for (std::size_t i = 0; i < traj.size(); ++i) theta[i] = traj.q[i](kTheta);
  m.theta_bar = cycle_average(traj.t, theta, t_start, period).mean;
  try {
    m.curvature = path_curvature(traj, t_start, period);
  } catch (const BoundaryError&) {
    m.curvature = std::numeric_limits<double>::quiet_NaN();
  }
  if (v.periods >= 8) m.dominant_frequency = spectrum(traj.t, traj.v_par, t_start, period).frequency;
  return m;
}

std::vector<double> cycle_maxima(const std::vector<double>& t, const std::vector<double>& y, double t0, double period) {
  check_series(t, y);
  if (!(period > 0.0)) throw ValidationError("period must be > 0");
  const int n = whole_periods(t, t0, period);
  std::vector<double> out(static_cast<std::size_t>(std::max(n, 0)), 0.0);
  for (std::size_t i = 0; i < t.size(); ++i) {
    if (t[i] < t0) continue;
    const auto k = static_cast<std::size_t>(std::floor((t[i] - t0) / period));
    if (k < out.size()) out[k] = std::max(out[k], std::abs(y[i]));
  }
  return out;
}

bool growing_envelope(const std::vector<double>& maxima, double rel_growth) {
  if (maxima.size() < 4) return false;
  const std::size_t mid = maxima.size() / 2;
  for (std::size_t k = mid + 1; k < maxima.size(); ++k)
    if (!(maxima[k] >= maxima[k - 1])) return false;
  return maxima.back() > (1.0 + rel_growth) * maxima[mid];
}

LineFit loglog_slope(const std::vector<std::pair<double, double>>& points) {
  if (points.size() < 4) throw ValidationError("log-log fit needs at least 4 points");
  int pos = 0, neg = 0;
  for (const auto& [eps, v] : points) {
    if (!(eps > 0.0)) throw ValidationError("log-log fit needs eps > 0");
    if (v > 0.0) ++pos;
    else if (v < 0.0) ++neg;
    else throw ValidationError("log-log fit: zero mean speed at eps = " + std::to_string(eps));
  }
  if (pos > 0 && neg > 0) {
    const bool minority_negative = neg <= pos;
    std::ostringstream os;
    os << "log-log fit: mean speed changes sign (direction reversal) at eps =";
    for (const auto& [eps, v] : points)
      if ((v < 0.0) == minority_negative) os << ' ' << eps;
    throw ValidationError(os.str());
  }
  const double n = static_cast<double>(points.size());
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (const auto& [eps, v] : points) {
    const double x = std::log(eps), y = std::log(std::abs(v));
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
  }
  const double den = n * sxx - sx * sx;
  if (!(std::abs(den) > 0.0)) throw ValidationError("log-log fit: all eps identical");
  LineFit f;
  f.slope = (n * sxy - sx * sy) / den;
  f.intercept = (sy - f.slope * sx) / n;
  return f;
}

SpectralPeak spectrum(const std::vector<double>& t, const std::vector<double>& y, double t_start, double period) {
  check_series(t, y);
  const int periods = whole_periods(t, t_start, period);
  if (periods < 8) {
    std::ostringstream os;
    os << "spectrum window holds " << std::max(periods, 0) << " whole periods, need 8";
    throw ValidationError(os.str());
  }
  const double dt = t[1] - t[0];
  const auto i0 = static_cast<std::size_t>(std::lower_bound(t.begin(), t.end(), t_start - 1e-9 * dt) - t.begin());
  auto n = static_cast<std::size_t>(std::llround(periods * period / dt));
  n = std::min(n, t.size() - i0);
  if (n < 16) throw ValidationError("spectrum window holds too few samples");

  double mean = 0.0;
  for (std::size_t j = 0; j < n; ++j) mean += y[i0 + j];
  mean /= static_cast<double>(n);

  const std::size_t kmax = n / 2;
  std::vector<double> mag(kmax + 1, 0.0);
  for (std::size_t k = 1; k <= kmax; ++k) {
    // Goertzel recurrence for bin k.
    const double w = 2.0 * kPi * static_cast<double>(k) / static_cast<double>(n);
    const double cw = 2.0 * std::cos(w);
    double s1 = 0.0, s2 = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      const double s0 = (y[i0 + j] - mean) + cw * s1 - s2;
      s2 = s1;
      s1 = s0;
    }
    const std::complex<double> X = s1 - std::polar(1.0, -w) * s2;
    mag[k] = std::abs(X);
  }
  std::size_t kpk = 1;
  for (std::size_t k = 2; k <= kmax; ++k)
    if (mag[k] > mag[kpk]) kpk = k;

  double delta = 0.0;
  if (kpk > 1 && kpk < kmax) {
    const double a = mag[kpk - 1], b = mag[kpk], c = mag[kpk + 1];
    const double den = a - 2.0 * b + c;
    if (den != 0.0) delta = std::clamp(0.5 * (a - c) / den, -0.5, 0.5);
  }
  const double df = 2.0 * kPi / (static_cast<double>(n) * dt);
  SpectralPeak pk;
  pk.frequency = (static_cast<double>(kpk) + delta) * df;
  pk.amplitude = 2.0 * mag[kpk] / static_cast<double>(n);
  return pk;
}

double harmonic_amplitude(const std::vector<double>& t, const std::vector<double>& y, double t_start, double period,
                          double freq) {
  check_series(t, y);
  std::vector<double> yc(y.size()), ys(y.size());
  for (std::size_t i = 0; i < y.size(); ++i) {
    yc[i] = y[i] * std::cos(freq * t[i]);
    ys[i] = y[i] * std::sin(freq * t[i]);
  }
  const double a = 2.0 * cycle_average(t, yc, t_start, period, 1).mean;
  const double b = 2.0 * cycle_average(t, ys, t_start, period, 1).mean;
  return std::hypot(a, b);
}

}  // namespace twistcar
