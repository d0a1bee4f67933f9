#ifndef TWISTCAR_INTEGRATOR_HPP
#define TWISTCAR_INTEGRATOR_HPP

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <sstream>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "twistcar/error.hpp"

namespace twistcar {

struct IntegratorOptions {
  double rtol = 1e-9;
  double atol = 1e-11;
  double dt_out = 0.0;        // uniform output spacing; required
  double initial_step = 0.0;  // 0 selects automatically
  double max_step = 0.0;      // 0 means unbounded
  std::size_t max_steps = 50'000'000;

  void validate() const {
    if (!(rtol >= 1e-12 && rtol <= 1e-2)) throw ValidationError("rtol must lie in [1e-12, 1e-2]");
    if (!(atol > 0.0)) throw ValidationError("atol must be > 0");
    if (!(dt_out > 0.0) || !std::isfinite(dt_out)) throw ValidationError("dt_out must be > 0");
  }
};

struct IntegratorStats {
  std::size_t accepted = 0;
  std::size_t rejected = 0;
  std::size_t rhs_evaluations = 0;
  std::size_t projections = 0;
  double min_step = std::numeric_limits<double>::infinity();
  double max_step = 0.0;
};

template <int N>
struct OdeSolution {
  using State = Eigen::Matrix<double, N, 1>;
  std::vector<double> t;
  std::vector<State> y;
  IntegratorStats stats;
};

/// Post-step hook that leaves the state untouched.
struct NoProjection {
  template <typename State>
  bool operator()(double /*t*/, State& /*y*/) const {
    return false;
  }
};

namespace detail {

// Dormand-Prince 5(4) tableau with Hairer's fourth-order continuous extension.
struct DormandPrince {
  static constexpr double c2 = 1.0 / 5.0, c3 = 3.0 / 10.0, c4 = 4.0 / 5.0, c5 = 8.0 / 9.0;
  static constexpr double a21 = 1.0 / 5.0;
  static constexpr double a31 = 3.0 / 40.0, a32 = 9.0 / 40.0;
  static constexpr double a41 = 44.0 / 45.0, a42 = -56.0 / 15.0, a43 = 32.0 / 9.0;
  static constexpr double a51 = 19372.0 / 6561.0, a52 = -25360.0 / 2187.0, a53 = 64448.0 / 6561.0,
                          a54 = -212.0 / 729.0;
  static constexpr double a61 = 9017.0 / 3168.0, a62 = -355.0 / 33.0, a63 = 46732.0 / 5247.0,
                          a64 = 49.0 / 176.0, a65 = -5103.0 / 18656.0;
  static constexpr double a71 = 35.0 / 384.0, a73 = 500.0 / 1113.0, a74 = 125.0 / 192.0,
                          a75 = -2187.0 / 6784.0, a76 = 11.0 / 84.0;
  static constexpr double e1 = 71.0 / 57600.0, e3 = -71.0 / 16695.0, e4 = 71.0 / 1920.0,
                          e5 = -17253.0 / 339200.0, e6 = 22.0 / 525.0, e7 = -1.0 / 40.0;
  static constexpr double d1 = -12715105075.0 / 11282082432.0, d3 = 87487479700.0 / 32700410799.0,
                          d4 = -10690763975.0 / 1880347072.0, d5 = 701980252875.0 / 199316789632.0,
                          d6 = -1453857185.0 / 822651844.0, d7 = 69997945.0 / 29380423.0;
};

template <typename State>
bool all_finite(const State& y) {
  return y.allFinite();
}

}  // namespace detail

/// Adaptive Dormand-Prince 5(4) integration of y' = rhs(t, y) on [t0, t1].
///
/// Steps are accepted when every component of the embedded error estimate
/// satisfies |err_i| <= atol + rtol * max(|y_i(t)|, |y_i(t+h)|). Output is
/// sampled on t0, t0 + dt_out, ... (plus t1 if it falls off the grid) using
/// the continuous extension. After each accepted step `project(t, y)` may
/// modify the state in place; it returns true when it did.
template <int N, typename Rhs, typename Projection = NoProjection>
OdeSolution<N> integrate(Rhs&& rhs, double t0, double t1, const Eigen::Matrix<double, N, 1>& y0,
                         const IntegratorOptions& opt, Projection&& project = {}) {
  using State = Eigen::Matrix<double, N, 1>;
  using DP = detail::DormandPrince;
  opt.validate();
  if (!std::isfinite(t0) || !std::isfinite(t1) || !(t1 >= t0)) {
    throw ValidationError("integrate: time span must be finite with t1 >= t0");
  }

  OdeSolution<N> sol;
  const auto n_out = static_cast<std::size_t>(std::floor((t1 - t0) / opt.dt_out * (1.0 + 1e-12))) + 1;
  sol.t.reserve(n_out + 1);
  sol.y.reserve(n_out + 1);
  auto grid_time = [&](std::size_t i) { return t0 + static_cast<double>(i) * opt.dt_out; };

  auto eval = [&](double t, const State& y) {
    State f = rhs(t, y);
    ++sol.stats.rhs_evaluations;
    if (!detail::all_finite(f)) {
      std::ostringstream os;
      os << "integrate: non-finite derivative at t = " << t;
      throw NumericalError(os.str());
    }
    return f;
  };

  State y = y0;
  if (!detail::all_finite(y)) throw ValidationError("integrate: non-finite initial state");
  double t = t0;
  sol.t.push_back(t0);
  sol.y.push_back(y);
  std::size_t next_out = 1;
  if (t1 == t0) return sol;

  const double span = t1 - t0;
  const double max_step = opt.max_step > 0.0 ? opt.max_step : span;
  State k1 = eval(t, y);

  auto scaled_norm = [&](const State& e, const State& ya, const State& yb) {
    double m = 0.0;
    for (Eigen::Index i = 0; i < e.size(); ++i) {
      const double sc = opt.atol + opt.rtol * std::max(std::abs(ya(i)), std::abs(yb(i)));
      m = std::max(m, std::abs(e(i)) / sc);
    }
    return m;
  };

  double h = opt.initial_step;
  if (!(h > 0.0)) {
    // Hairer's starting step heuristic.
    State scale = (opt.atol + opt.rtol * y.array().abs()).matrix();
    const double d0 = (y.array() / scale.array()).matrix().norm() / std::sqrt(double(y.size()));
    const double d1 = (k1.array() / scale.array()).matrix().norm() / std::sqrt(double(y.size()));
    double h0 = (d0 < 1e-5 || d1 < 1e-5) ? 1e-6 : 0.01 * d0 / d1;
    h0 = std::min(h0, max_step);
    const State y1 = y + h0 * k1;
    const State k = eval(t + h0, y1);
    const double d2 = ((k - k1).array() / scale.array()).matrix().norm() / std::sqrt(double(y.size())) / h0;
    const double h1 = std::max(d1, d2) <= 1e-15 ? std::max(1e-6, h0 * 1e-3)
                                                : std::pow(0.01 / std::max(d1, d2), 1.0 / 5.0);
    h = std::min({100.0 * h0, h1, max_step});
  }

  bool last_rejected = false;
  std::size_t steps = 0;
  while (t < t1) {
    if (++steps > opt.max_steps) {
      std::ostringstream os;
      os << "integrate: exceeded " << opt.max_steps << " steps at t = " << t;
      throw NumericalError(os.str());
    }
    if (t + h > t1 || t + 1.01 * h >= t1) h = t1 - t;
    if (h < 16.0 * std::numeric_limits<double>::epsilon() * std::max(1.0, std::abs(t))) {
      std::ostringstream os;
      os << "integrate: step size underflow at t = " << t
         << " (problem may be stiff; lower the dissipation coefficients or loosen tolerances)";
      throw NumericalError(os.str());
    }

    const State k2 = eval(t + DP::c2 * h, y + h * (DP::a21 * k1));
    const State k3 = eval(t + DP::c3 * h, y + h * (DP::a31 * k1 + DP::a32 * k2));
    const State k4 = eval(t + DP::c4 * h, y + h * (DP::a41 * k1 + DP::a42 * k2 + DP::a43 * k3));
    const State k5 = eval(t + DP::c5 * h, y + h * (DP::a51 * k1 + DP::a52 * k2 + DP::a53 * k3 + DP::a54 * k4));
    const State k6 =
        eval(t + h, y + h * (DP::a61 * k1 + DP::a62 * k2 + DP::a63 * k3 + DP::a64 * k4 + DP::a65 * k5));
    const State y_new = y + h * (DP::a71 * k1 + DP::a73 * k3 + DP::a74 * k4 + DP::a75 * k5 + DP::a76 * k6);
    const State k7 = eval(t + h, y_new);
    const State err = h * (DP::e1 * k1 + DP::e3 * k3 + DP::e4 * k4 + DP::e5 * k5 + DP::e6 * k6 + DP::e7 * k7);
    const double err_norm = scaled_norm(err, y, y_new);

    if (!std::isfinite(err_norm)) {
      std::ostringstream os;
      os << "integrate: non-finite error estimate at t = " << t;
      throw NumericalError(os.str());
    }

    if (err_norm <= 1.0) {
      const double t_new = t + h;
      sol.stats.min_step = std::min(sol.stats.min_step, h);
      sol.stats.max_step = std::max(sol.stats.max_step, h);
      ++sol.stats.accepted;

      // Dense output on this step.
      const State ydiff = y_new - y;
      const State bspl = h * k1 - ydiff;
      const State r4 = ydiff - h * k7 - bspl;
      const State r5 = h * (DP::d1 * k1 + DP::d3 * k3 + DP::d4 * k4 + DP::d5 * k5 + DP::d6 * k6 + DP::d7 * k7);
      while (next_out < n_out && grid_time(next_out) <= t_new) {
        const double s = (grid_time(next_out) - t) / h;
        const double s1 = 1.0 - s;
        sol.t.push_back(grid_time(next_out));
        sol.y.push_back(y + s * (ydiff + s1 * (bspl + s * (r4 + s1 * r5))));
        ++next_out;
      }

      t = t_new;
      y = y_new;
      k1 = k7;
      if (project(t, y)) {
        ++sol.stats.projections;
        k1 = eval(t, y);
      }

      const double fac = err_norm == 0.0 ? 5.0 : std::clamp(0.9 * std::pow(err_norm, -0.2), 0.2, 5.0);
      h = std::min(h * (last_rejected ? std::min(fac, 1.0) : fac), max_step);
      last_rejected = false;
    } else {
      ++sol.stats.rejected;
      h *= std::max(0.2, 0.9 * std::pow(err_norm, -0.2));
      last_rejected = true;
    }
  }

  if (sol.t.back() < t1 - 1e-12 * std::max(1.0, std::abs(t1))) {
    sol.t.push_back(t1);
    sol.y.push_back(y);
  }
  return sol;
}

}  // namespace twistcar

#endif  // TWISTCAR_INTEGRATOR_HPP
