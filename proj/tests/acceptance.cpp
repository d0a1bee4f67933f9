// Acceptance suite: one PASS/FAIL line per criterion.
//
// Criteria listed in kExpectedFailures are known not to hold for the reference
// parameter sets; they still print FAIL. The exit status is nonzero when any
// other criterion fails or an expected failure unexpectedly passes. `--strict`
// makes every FAIL count.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "twistcar/analysis.hpp"
#include "twistcar/asymptotics.hpp"
#include "twistcar/dynamics.hpp"
#include "twistcar/fitting.hpp"
#include "twistcar/parallel.hpp"
#include "twistcar/simulation.hpp"

using namespace twistcar;

namespace {

const std::set<std::string> kExpectedFailures = {"A1", "A8", "A10"};

struct Outcome {
  bool pass = false;
  std::string detail;
  std::vector<std::string> notes;
};

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::vector<double> xdot_series(const Trajectory& tr) {
  std::vector<double> out(tr.size());
  for (std::size_t i = 0; i < tr.size(); ++i) out[i] = tr.qdot[i](kX);
  return out;
}

Outcome a1() {
  const auto p = presets::slender_rods();
  const auto u = presets::slender_rods_input();
  const double T = u.period();
  SimOptions o;
  o.t_end = 31 * T;

  auto t0 = std::chrono::steady_clock::now();
  const auto tr = simulate(p, u, Model::Constrained, o);
  const double time_diss = seconds_since(t0);
  const auto m = cycle_maxima(tr.t, xdot_series(tr), 0.0, T);
  const auto [lo, hi] = std::minmax_element(m.begin() + 9, m.begin() + 30);
  const double spread = (*hi - *lo) / *hi;

  auto p0 = p;
  p0.c = 0.0;
  t0 = std::chrono::steady_clock::now();
  const auto tr0 = simulate(p0, u, Model::Constrained, o);
  const double time_free = seconds_since(t0);
  const auto m0 = cycle_maxima(tr0.t, xdot_series(tr0), 0.0, T);
  bool rising = true;
  for (int k = 1; k < 30; ++k) rising = rising && m0[k] > m0[k - 1];

  Outcome r;
  r.pass = spread < 0.01 && rising && time_diss < 5.0 && time_free < 5.0;
  r.detail = fmt("cycles 10-30 spread %.2e (c=0.5); c=0 maxima rising over 1-30: %s (%.3f -> %.3f); %.2fs/%.2fs",
                 spread, rising ? "yes" : "no", m0[0], m0[29], time_diss, time_free);
  r.notes.push_back(fmt("cycle maxima 10, 20, 30: %.5f %.5f %.5f; spread over cycles 11-31 %.2e", m[9], m[19], m[29],
                        (m[30] - m[10]) / m[30]));
  return r;
}

Outcome a2() {
  const auto t0 = std::chrono::steady_clock::now();
  const auto p = presets::slender_rods();
  const auto nd = nondimensionalize(p);
  const std::vector<double> eps = {0.02, 0.04, 0.08, 0.12, 0.16, 0.2};
  const double T = 2.0 * kPi / 15.0;
  const double ts = steady_state_start(nd);
  const auto speeds = parallel_map(eps.size(), [&](std::size_t i) {
    SimOptions o;
    o.t_end = ts + 10 * T;
    const auto tr = simulate(p, InputSignal{0.0, eps[i], 15.0, 0.0}, Model::Constrained, o);
    return cycle_average(tr, ts, T).mean;
  });
  std::vector<std::pair<double, double>> pts;
  for (std::size_t i = 0; i < eps.size(); ++i) pts.emplace_back(eps[i], speeds[i]);
  const auto fit = loglog_slope(pts);
  const double dt = seconds_since(t0);
  Outcome r;
  r.pass = fit.slope >= 1.95 && fit.slope <= 2.05 && dt < 60.0;
  r.detail = fmt("log-log slope %.4f; %.2fs", fit.slope, dt);
  return r;
}

Outcome a3() {
  const auto t0 = std::chrono::steady_clock::now();
  const auto p = presets::slender_rods();
  const std::vector<double> eps = {kPi / 18, kPi / 36};
  struct Row {
    double mean, predicted, max_err;
  };
  const auto rows = parallel_map(eps.size(), [&](std::size_t i) {
    const InputSignal u{0.0, eps[i], 15.0, 0.0};
    SimOptions o;
    o.t_end = 30.0;
    o.rtol = 1e-11;
    o.atol = 1e-13;
    const auto tr = simulate(p, u, Model::Constrained, o);
    const auto [nd, u_nd] = nondimensionalize(p, u);
    const auto k = coefficients(nd, u_nd.omega);
    const double ts = steady_state_window(tr, nd, u.period());
    double err = 0.0;
    for (std::size_t j = 0; j < tr.size(); ++j) {
      const double vn = nondimensionalize_velocity(tr.v_par[j], nd, p.l1);
      err = std::max(err, std::abs(vn - eps[i] * eps[i] * v2_solution(tr.t[j] / nd.t_c, k, nd.kappa)));
    }
    return Row{cycle_average(tr, ts, u.period()).mean,
               dimensionalize_velocity(eps[i] * eps[i] * k.b1, nd, p.l1), err};
  });
  const double rel = std::abs(rows[0].mean / rows[0].predicted - 1.0);
  const double ratio = rows[0].max_err / rows[1].max_err;
  const double dt = seconds_since(t0);
  Outcome r;
  r.pass = rel < 0.05 && ratio >= 12.0 && ratio <= 20.0;
  r.detail = fmt("mean %.5e vs eps^2 b1 %.5e (rel %.2e); max error ratio eps/(eps/2) %.2f; %.2fs", rows[0].mean,
                 rows[0].predicted, rel, ratio, dt);
  return r;
}

NondimParams random_nondim(std::mt19937_64& rng, bool half_beta2) {
  std::uniform_real_distribution<double> U(0.0, 1.0);
  NondimParams nd;
  nd.alpha = 0.1 + 2.9 * U(rng);
  nd.sigma = 0.05 + 0.95 * U(rng);
  nd.kappa = 2.0 * U(rng);
  nd.beta1 = 0.05 + 0.9 * U(rng);
  nd.beta2 = half_beta2 ? 0.5 : 0.05 + 0.9 * U(rng);
  nd.eta1 = 0.2 * U(rng);
  nd.eta2 = 0.2 * U(rng);
  nd.t_c = 1.0;
  return nd;
}

double rel_diff(double a, double b) { return std::abs(a - b) / std::max({std::abs(a), std::abs(b), 1e-300}); }

Outcome a4() {
  const auto t0 = std::chrono::steady_clock::now();
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> W(0.5, 60.0);
  double worst_id = 0.0;
  for (int i = 0; i < 1000; ++i) {
    const auto nd = random_nondim(rng, false);
    const double w = W(rng);
    const auto k = coefficients(nd, w);
    const double scale1 = std::max(std::abs(k.b1 * k.a2), std::abs(k.a1));
    const double scale2 = std::max({std::abs(2 * w * k.b4), std::abs(k.a3), std::abs(k.a2 * k.b3)});
    const double scale3 = std::max({std::abs(2 * w * k.b3), std::abs(k.a4), std::abs(k.a2 * k.b4)});
    const double scale4 = std::max({std::abs(k.b1), std::abs(k.b2), std::abs(k.b4)});
    worst_id = std::max({worst_id, std::abs(k.b1 * k.a2 + k.a1) / scale1,
                         std::abs(-2 * w * k.b4 - k.a3 - k.a2 * k.b3) / scale2,
                         std::abs(2 * w * k.b3 - k.a4 - k.a2 * k.b4) / scale3,
                         std::abs(k.b2 + k.b1 + k.b4) / scale4});
  }

  // Richardson limit of reduced_rhs(t, eps^2 w) / eps^2 as eps -> 0, in powers of eps^2.
  const auto p = presets::slender_rods();
  const auto nd = nondimensionalize(p);
  const double w = 30.0;
  const auto k = coefficients(nd, w);
  auto g = [&](double t, double v2) {
    std::vector<double> f;
    for (double e : {4e-3, 2e-3, 1e-3}) f.push_back(reduced_rhs(t, e * e * v2, InputSignal{0.0, e, w, 0.0}, nd) / (e * e));
    const double r1 = (4 * f[1] - f[0]) / 3, r2 = (4 * f[2] - f[1]) / 3;
    return (16 * r2 - r1) / 15;
  };
  const double tq = kPi / (4 * w);
  const double g0 = g(0.0, 0.0), g1 = g(tq, 0.0), g2 = g(2 * tq, 0.0);
  const double a1 = 0.5 * (g0 + g2);
  const double a4 = 0.5 * (g0 - g2);
  const double a3 = g1 - a1;
  const double a2 = (g(0.0, 0.5) - g0) / 0.5;
  const double worst_a = std::max({rel_diff(a1, k.a1), rel_diff(a2, k.a2), rel_diff(a3, k.a3), rel_diff(a4, k.a4)});
  const double dt = seconds_since(t0);
  Outcome r;
  r.pass = worst_id <= 1e-12 && worst_a <= 1e-6 && dt < 10.0;
  r.detail = fmt("worst identity residual %.2e over 1000 sets; a1..a4 vs expansion worst rel %.2e; %.2fs", worst_id,
                 worst_a, dt);
  return r;
}

Outcome a5() {
  const auto t0 = std::chrono::steady_clock::now();
  const std::vector<double> m0 = {0.0, 0.25, 0.5, 0.75, 1.0, 1.25, 1.5, 2.0, 2.5, 3.0};
  const double omega = 15.0, eps = kPi / 18;
  struct Row {
    double mean, b1;
  };
  const auto rows = parallel_map(m0.size(), [&](std::size_t i) {
    const auto p = presets::reversal_geometry(m0[i]);
    const auto merged = merge_point_mass(p);
    const InputSignal u{0.0, eps, omega, 0.0};
    const auto [nd, u_nd] = nondimensionalize(merged, u);
    const double ts = steady_state_start(nd);
    SimOptions o;
    o.t_end = ts + 10 * u.period();
    const auto tr = simulate(p, u, Model::Constrained, o);
    return Row{cycle_average(tr, ts, u.period()).mean, coefficients(nd, u_nd.omega).b1};
  });
  bool agree = true, backward_at_zero = rows[0].mean < 0.0, crossed = false;
  double m_star = std::nan("");
  std::size_t compared = 0;
  Outcome r;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (std::abs(rows[i].b1) < kBoundaryTolerance) {
      r.notes.push_back(fmt("m0 = %.2f on the reversal boundary (b1 = %.1e, mean %.2e m/s), sign not compared", m0[i],
                            rows[i].b1, rows[i].mean));
    } else {
      ++compared;
      agree = agree && (rows[i].mean > 0) == (rows[i].b1 > 0);
    }
    if (i > 0 && !crossed && (rows[i].mean > 0) != (rows[i - 1].mean > 0)) {
      crossed = true;
      m_star = 0.5 * (m0[i] + m0[i - 1]);
    }
  }

  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> W(0.5, 60.0);
  int checked = 0, mismatched = 0;
  while (checked < 1000) {
    const auto nd = random_nondim(rng, true);
    const auto k = coefficients(nd, W(rng));
    if (std::abs(k.b1) <= kBoundaryTolerance) continue;
    ++checked;
    if ((k.b1 > 0) != (reversal_indicator(nd) > 0)) ++mismatched;
  }
  const double dt = seconds_since(t0);
  r.pass = backward_at_zero && crossed && agree && mismatched == 0 && dt < 120.0;
  r.detail = fmt("m0=0 mean %.4e m/s; sign change near m0=%.3g; sign(v)=sign(b1) at all %zu off-boundary points: %s; "
                 "sign(b1)!=sign(xi) in %d/1000; %.2fs",
                 rows[0].mean, m_star, compared, agree ? "yes" : "no", mismatched, dt);
  return r;
}

Outcome a6() {
  const auto t0 = std::chrono::steady_clock::now();
  const auto p = presets::slender_rods();
  const auto u = presets::slender_rods_input();
  const auto nd = nondimensionalize(p);
  SimOptions o;
  o.t_end = 10 * u.period();
  o.rtol = 1e-11;
  o.atol = 1e-13;
  const auto dae = simulate(p, u, Model::Constrained, o);
  const auto red = simulate_reduced(p, u, o);
  double dv = 0.0, drift = 0.0;
  const std::size_t n = std::min(dae.size(), red.size());
  for (std::size_t i = 0; i < n; ++i) {
    dv = std::max(dv, std::abs(nondimensionalize_velocity(dae.v_par[i] - red.v_par[i], nd, p.l1)));
    drift = std::max(drift, constraint_violation(dae.q[i], dae.qdot[i], p));
  }
  const double dt = seconds_since(t0);
  Outcome r;
  r.pass = dv <= 1e-6 && drift <= 1e-8 && dt < 10.0;
  r.detail = fmt("max |dv_nd| %.2e over 10 periods; max |W qdot| %.2e; %.2fs", dv, drift, dt);
  return r;
}

Outcome a7() {
  const auto t0 = std::chrono::steady_clock::now();
  const auto u = presets::slender_rods_input();
  SimOptions o;
  o.t_end = 10 * u.period();
  o.rtol = 1e-12;
  o.atol = 1e-11;
  auto skid = presets::slender_rods();
  skid.c_perp = 5.0;
  auto slope = presets::slender_rods();
  slope.slope = deg2rad(5.0);
  const double e_con = energy_report(simulate(presets::slender_rods(), u, Model::Constrained, o), presets::slender_rods())
                           .max_abs_residual();
  const double e_skid = energy_report(simulate(skid, u, Model::Skid, o), skid).max_abs_residual();
  const double e_slope = energy_report(simulate(slope, u, Model::Slope, o), slope).max_abs_residual();
  const double bound = 10.0 * o.atol;
  const double dt = seconds_since(t0);
  Outcome r;
  r.pass = e_con <= bound && e_skid <= bound && e_slope <= bound && dt < 10.0;
  r.detail = fmt("residual constrained %.2e, skid %.2e, slope %.2e (bound %.0e, rtol 1e-12); %.2fs", e_con, e_skid,
                 e_slope, bound, dt);
  return r;
}

Outcome a8() {
  const auto t0 = std::chrono::steady_clock::now();
  const auto p = presets::slender_rods();
  const double eps = kPi / 10;
  const std::vector<double> phi0 = {deg2rad(0.5), deg2rad(1.0), deg2rad(2.0), eps};
  struct Row {
    double numeric, predicted;
  };
  const auto rows = parallel_map(phi0.size(), [&](std::size_t i) {
    const InputSignal u{phi0[i], eps, 15.0, 0.0};
    SimOptions o;
    o.t_end = 40.0;
    const auto tr = simulate(p, u, Model::Constrained, o);
    const auto [nd, u_nd] = nondimensionalize(p, u);
    const double ts = steady_state_window(tr, nd, u.period());
    return Row{path_curvature(tr, ts, u.period()), mean_curvature(u.phi0, coefficients(nd, u_nd.omega)) / p.l1};
  });
  Outcome r;
  bool small_ok = true;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const double rel = std::abs(rows[i].numeric / rows[i].predicted - 1.0);
    if (i < 3) small_ok = small_ok && rel < 0.10;
    r.notes.push_back(fmt("phi0 = %5.2f deg: curvature %.5f 1/m, (d1/b1) phi0 / l1 = %.5f, discrepancy %.2f%%",
                          rad2deg(phi0[i]), rows[i].numeric, rows[i].predicted, 100 * rel));
  }
  const double breakdown = std::abs(rows[3].numeric / rows[3].predicted - 1.0);
  const double dt = seconds_since(t0);
  r.pass = small_ok && breakdown > 0.10 && dt < 60.0;
  r.detail = fmt("small-phi0 agreement within 10%%: %s; discrepancy at phi0 = eps %.2f%% (needs > 10%%); %.2fs",
                 small_ok ? "yes" : "no", 100 * breakdown, dt);
  return r;
}

Outcome a9() {
  const auto t0 = std::chrono::steady_clock::now();
  const auto p = presets::slender_rods();
  const double eps = kPi / 10;
  struct Row {
    double peak, omega_nd, amp, predicted;
  };
  const std::vector<double> phi0 = {0.0, deg2rad(5.0)};
  const auto rows = parallel_map(phi0.size(), [&](std::size_t i) {
    const InputSignal u{phi0[i], eps, 15.0, 0.0};
    SimOptions o;
    o.t_end = 40.0;
    const auto tr = simulate(p, u, Model::Constrained, o);
    const auto [nd, u_nd] = nondimensionalize(p, u);
    const auto k = coefficients(nd, u_nd.omega);
    const double ts = steady_state_window(tr, nd, u.period()) / nd.t_c;
    const double T = u.period() / nd.t_c;
    std::vector<double> tn(tr.size()), vn(tr.size());
    for (std::size_t j = 0; j < tr.size(); ++j) {
      tn[j] = tr.t[j] / nd.t_c;
      vn[j] = nondimensionalize_velocity(tr.v_par[j], nd, p.l1);
    }
    return Row{spectrum(tn, vn, ts, T).frequency, u_nd.omega, harmonic_amplitude(tn, vn, ts, T, u_nd.omega),
               eps * phi0[i] * v10_amplitude(k)};
  });
  const double w = rows[0].omega_nd;
  const bool at_2w = std::abs(rows[0].peak - 2 * w) < 0.05 * w;
  const double rel = std::abs(rows[1].amp / rows[1].predicted - 1.0);
  const double dt = seconds_since(t0);
  Outcome r;
  r.pass = at_2w && rel < 0.10 && dt < 30.0;
  r.detail = fmt("symmetric peak %.3f (2w = %.1f); omega-amplitude at phi0=5 deg %.4e vs %.4e (rel %.2e); %.2fs",
                 rows[0].peak, 2 * w, rows[1].amp, rows[1].predicted, rel, dt);
  return r;
}

std::vector<double> slope_sweep(const PhysicalParams& base) {
  const std::vector<double> slopes = {0.0, 0.5, 1.0};
  return parallel_map(slopes.size(), [&](std::size_t i) {
    auto p = base;
    p.slope = deg2rad(slopes[i]);
    const InputSignal u{0.0, deg2rad(23.75), 12.36, 0.0};
    const double ts = steady_state_start(nondimensionalize(p));
    SimOptions o;
    o.t_end = ts + 10 * u.period();
    return cycle_average(simulate(p, u, Model::Slope, o), ts, u.period()).mean;
  });
}

// Monotone loss of speed in the direction of travel on level ground, and the
// opposite direction by 1 degree.
bool reverses(const std::vector<double>& v) {
  const double s = v[0] > 0 ? 1.0 : -1.0;
  return s * v[1] < s * v[0] && s * v[2] < s * v[1] && s * v[2] < 0.0;
}

Outcome a10() {
  const auto t0 = std::chrono::steady_clock::now();
  const auto base = presets::nominal_robot(0.234);
  const auto v = slope_sweep(base);
  const double dt = seconds_since(t0);
  Outcome r;
  r.pass = reverses(v) && dt < 30.0;
  r.detail = fmt("mean speed at 0/0.5/1 deg: %.4f %.4f %.4f m/s; reversal: %s; %.2fs", v[0], v[1], v[2],
                 reverses(v) ? "yes" : "no", dt);
  auto scaled = base;
  scaled.J1 /= 10.0;
  scaled.J2 /= 10.0;
  const auto vs = slope_sweep(scaled);
  r.notes.push_back(fmt("informational, inertias J1, J2 divided by 10: %.4f %.4f %.4f m/s; reversal: %s", vs[0], vs[1],
                        vs[2], reverses(vs) ? "yes" : "no"));
  return r;
}

ExperimentRecord synthetic(const PhysicalParams& p, double omega, Model model, const std::string& label) {
  const InputSignal u{deg2rad(4.75), deg2rad(23.75), omega, 0.0};
  SimOptions o;
  o.t_end = 10.0;
  o.dt_out = 1.0 / 120.0;
  o.rtol = 1e-10;
  return record_from_trajectory(simulate(p, u, model, o), label);
}

Outcome a11() {
  const auto t0 = std::chrono::steady_clock::now();
  Outcome r;

  const auto p234 = presets::nominal_robot(0.234);
  const auto single = fit_dissipation({synthetic(p234, 12.36, Model::Constrained, "single")}, p234, FitOptions{});

  const auto p4 = presets::nominal_robot(0.4);
  std::vector<ExperimentRecord> clean;
  for (int i = 0; i < 6; ++i) {
    const double omega = 6.0 + 9.0 * i / 5.0;
    clean.push_back(synthetic(p4, omega, Model::Constrained, fmt("omega %.1f", omega)));
  }
  std::vector<double> fitted;
  for (int seed = 0; seed < 20; ++seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> noise(0.0, 0.05);
    auto ex = clean;
    for (auto& e : ex) {
      const double f = 1.0 + noise(rng);
      for (auto& v : e.v_par) v *= f;
    }
    FitOptions fo;
    fo.objective = Objective::DisplacementPerCycle;
    fitted.push_back(fit_dissipation(ex, p4, fo).c);
  }
  std::sort(fitted.begin(), fitted.end());
  const double median = 0.5 * (fitted[9] + fitted[10]);

  auto ps = presets::nominal_robot(0.095);
  ps.c_perp = 4.0;
  const auto skid = fit_skid({synthetic(ps, 12.36, Model::Skid, "skid")}, ps, SkidFitOptions{});

  const double dt = seconds_since(t0);
  const bool ok1 = std::abs(single.c - 0.234) <= 0.002;
  const bool ok2 = std::abs(median - 0.4) <= 0.02;
  const bool ok3 = std::abs(skid.c / 0.095 - 1.0) <= 0.1 && std::abs(*skid.c_perp / 4.0 - 1.0) <= 0.1;
  r.pass = ok1 && ok2 && ok3 && dt < 300.0;
  r.detail = fmt("single c %.5f; sweep median %.5f over 20 seeds [%.4f, %.4f]; skid (%.4f, %.3f); %.1fs", single.c,
                 median, fitted.front(), fitted.back(), skid.c, *skid.c_perp, dt);
  return r;
}

}  // namespace

int main(int argc, char** argv) {
  const bool strict = argc > 1 && std::string(argv[1]) == "--strict";
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria = {
      {"A1", a1}, {"A2", a2}, {"A3", a3}, {"A4", a4},  {"A5", a5},  {"A6", a6},
      {"A7", a7}, {"A8", a8}, {"A9", a9}, {"A10", a10}, {"A11", a11}};

  int unexpected = 0;
  for (const auto& [id, run] : criteria) {
    Outcome o;
    try {
      o = run();
    } catch (const std::exception& e) {
      o.pass = false;
      o.detail = std::string("error: ") + e.what();
    }
    const bool expected_fail = kExpectedFailures.count(id) > 0;
    const char* tag = "";
    if (!o.pass && expected_fail) tag = " [expected failure]";
    if (o.pass && expected_fail) tag = " [unexpected pass]";
    std::printf("%-4s %s  %s%s\n", id.c_str(), o.pass ? "PASS" : "FAIL", o.detail.c_str(), tag);
    for (const auto& n : o.notes) std::printf("       %s\n", n.c_str());
    std::fflush(stdout);
    if (strict ? !o.pass : o.pass == expected_fail) ++unexpected;
  }
  return unexpected == 0 ? 0 : 1;
}
