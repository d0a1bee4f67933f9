#include "commands.hpp"

#include <chrono>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <limits>
#include <sstream>

#include "twistcar/analysis.hpp"
#include "twistcar/error.hpp"
#include "twistcar/parallel.hpp"

#ifndef TWISTCAR_VERSION
#define TWISTCAR_VERSION "unknown"
#endif

namespace twistcar::app {

namespace {

double wall_clock() {
  return std::chrono::duration<double>(std::chrono::steady_clock::now().time_since_epoch()).count();
}

std::ofstream open_out(const fs::path& path) {
  std::ofstream out(path);
  if (!out) throw ValidationError("cannot write " + path.string());
  out << std::setprecision(12);
  return out;
}

void write_json(const Json& j, const fs::path& path) {
  std::ofstream out(path);
  if (!out) throw ValidationError("cannot write " + path.string());
  out << j.dump(2) << '\n';
}

Json nullable(double x) { return std::isfinite(x) ? Json(x) : Json(nullptr); }

int sign_of(double x) { return x > 0.0 ? 1 : (x < 0.0 ? -1 : 0); }

/// Runs `body`, mapping exceptions to exit codes and always writing the manifest.
template <typename Body>
int guarded(Manifest& m, Body&& body) {
  try {
    body();
    return m.finish(kExitOk);
  } catch (const ValidationError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return m.finish(kExitValidation, e.what());
  } catch (const NumericalError& e) {
    std::cerr << "numerical failure: " << e.what() << '\n';
    return m.finish(kExitNumerical, e.what());
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return m.finish(kExitValidation, e.what());
  }
}

/// Steady-state start for analysis, from the merged dimensionless groups.
double analysis_start(const RunConfig& cfg) {
  const NondimParams nd = nondimensionalize(merge_point_mass(cfg.physical, cfg.merge));
  return steady_state_start(nd);
}

double theta_mean(const Trajectory& traj, const RunConfig& cfg) {
  std::vector<double> theta(traj.size());
  for (std::size_t i = 0; i < traj.size(); ++i) theta[i] = traj.q[i](kTheta);
  const double period = cfg.input.period();
  double start = 0.0;
  if (cfg.physical.c > 0.0) {
    try {
      start = analysis_start(cfg);
    } catch (const ValidationError&) {
    }
  }
  if (traj.t.back() < start + period) start = 0.0;
  if (traj.t.back() < period) {
    double s = 0.0;
    for (double v : theta) s += v;
    return s / static_cast<double>(theta.size());
  }
  return cycle_average(traj.t, theta, start, period, 1).mean;
}

}  // namespace

// ---------------------------------------------------------------- manifest --

Manifest::Manifest(std::string command, fs::path out)
    : command_(std::move(command)), out_(std::move(out)), started_(wall_clock()) {}

void Manifest::set_config(const RunConfig& cfg) {
  config_path_ = cfg.source;
  config_ = to_json(cfg);
}

void Manifest::add_output(const fs::path& p) { outputs_.push_back(p.string()); }

void Manifest::add_stats(const IntegratorStats& s) {
  stats_.accepted += s.accepted;
  stats_.rejected += s.rejected;
  stats_.rhs_evaluations += s.rhs_evaluations;
  stats_.projections += s.projections;
  stats_.min_step = std::min(stats_.min_step, s.min_step);
  stats_.max_step = std::max(stats_.max_step, s.max_step);
  has_stats_ = true;
}

int Manifest::finish(int exit_code, const std::string& error) {
  Json j;
  j["command"] = command_;
  j["config_path"] = config_path_;
  j["config"] = config_;
  j["outputs"] = outputs_;
  j["versions"] = {{"twistcar", TWISTCAR_VERSION},
                   {"eigen", std::to_string(EIGEN_WORLD_VERSION) + "." + std::to_string(EIGEN_MAJOR_VERSION) + "." +
                                 std::to_string(EIGEN_MINOR_VERSION)},
                   {"compiler", __VERSION__}};
  j["wall_clock_s"] = wall_clock() - started_;
  if (has_stats_) {
    j["integrator"] = {{"accepted_steps", stats_.accepted},
                       {"rejected_steps", stats_.rejected},
                       {"rhs_evaluations", stats_.rhs_evaluations},
                       {"projections", stats_.projections},
                       {"min_step", nullable(stats_.min_step)},
                       {"max_step", stats_.max_step}};
  }
  for (const auto& [k, v] : extra_.items()) j[k] = v;
  j["status"] = exit_code == kExitOk ? "ok" : "error";
  j["exit_code"] = exit_code;
  if (!error.empty()) j["error"] = error;
  try {
    fs::create_directories(out_);
    write_json(j, out_ / "manifest.json");
  } catch (const std::exception& e) {
    std::cerr << "cannot write manifest: " << e.what() << '\n';
    if (exit_code == kExitOk) exit_code = kExitValidation;
  }
  return exit_code;
}

// ---------------------------------------------------------------- config --

RunConfig resolve_config(const CommonOptions& opt) {
  if (opt.config.empty()) throw ValidationError("--config is required");
  RunConfig cfg = load_config(opt.config);
  if (opt.model) cfg.model = model_from_string(*opt.model);
  if (opt.rtol) {
    if (!(*opt.rtol > 0.0)) throw ValidationError("--rtol must be > 0");
    cfg.sim.rtol = *opt.rtol;
  }
  if (opt.atol) {
    if (!(*opt.atol > 0.0)) throw ValidationError("--atol must be > 0");
    cfg.sim.atol = *opt.atol;
  }
  if (cfg.model == Model::Skid && !cfg.physical.c_perp)
    throw ValidationError("physical.c_perp: required by the skid model");
  return cfg;
}

void write_trajectory_csv(const Trajectory& traj, const PhysicalParams& p, double theta_bar, const fs::path& path) {
  const EnergyReport e = energy_report(traj, p);
  std::ofstream out = open_out(path);
  out << "t,x,y,theta,phi,xdot,ydot,thetadot,phidot,v_par,v_perp,tau,lambda1,lambda2,T,R_power,theta_detrended\n";
  const bool has_lambda = traj.lambda.size() == traj.size();
  for (std::size_t i = 0; i < traj.size(); ++i) {
    const auto& q = traj.q[i];
    const auto& qd = traj.qdot[i];
    out << traj.t[i] << ',' << q(0) << ',' << q(1) << ',' << q(2) << ',' << q(3) << ',' << qd(0) << ',' << qd(1) << ','
        << qd(2) << ',' << qd(3) << ',' << traj.v_par[i] << ',' << traj.v_perp[i] << ',' << traj.tau[i] << ',';
    if (has_lambda) out << traj.lambda[i](0) << ',' << traj.lambda[i](1);
    else out << ',';
    out << ',' << e.kinetic[i] << ',' << e.rayleigh_power[i] << ',' << q(2) - theta_bar << '\n';
  }
}

// ---------------------------------------------------------------- simulate --

int cmd_simulate(const CommonOptions& opt) {
  Manifest m("simulate", opt.out);
  return guarded(m, [&] {
    const RunConfig cfg = resolve_config(opt);
    m.set_config(cfg);
    fs::create_directories(opt.out);
    const Trajectory traj = simulate(cfg.physical, cfg.input, cfg.model, cfg.sim);
    m.add_stats(traj.stats);
    const double theta_bar = theta_mean(traj, cfg);
    const fs::path csv = opt.out / "trajectory.csv";
    write_trajectory_csv(traj, cfg.physical, theta_bar, csv);
    m.add_output(csv);

    std::vector<double> xdot(traj.size());
    for (std::size_t i = 0; i < traj.size(); ++i) xdot[i] = traj.qdot[i](0);
    const std::vector<double> maxima = cycle_maxima(traj.t, xdot, 0.0, cfg.input.period());
    m.extra()["theta_bar"] = theta_bar;
    m.extra()["envelope"] = {{"cycle_max_xdot", maxima}, {"growing", growing_envelope(maxima)}};
    if (cfg.physical.c > 0.0) {
      try {
        const double t0 = analysis_start(cfg);
        const SteadyStateMetrics s = steady_state_metrics(traj, t0, cfg.input.period());
        m.extra()["steady_state"] = {{"t_start", s.t_start},
                                     {"mean_speed", s.mean_speed},
                                     {"displacement_per_cycle", s.displacement_per_cycle},
                                     {"curvature", nullable(s.curvature)}};
      } catch (const ValidationError& e) {
        m.extra()["steady_state"] = {{"skipped", e.what()}};
      }
    }
  });
}

// ---------------------------------------------------------------- compare --

int cmd_compare(const CommonOptions& opt, const CompareArgs& args) {
  Manifest m("compare", opt.out);
  return guarded(m, [&] {
    RunConfig cfg = resolve_config(opt);
    m.set_config(cfg);
    if (cfg.model != Model::Constrained) throw ValidationError("compare: model must be constrained");
    if (cfg.physical.slope != 0.0) throw ValidationError("compare: physical.slope_deg must be 0");
    if (!(cfg.physical.c > 0.0)) throw ValidationError("compare: physical.c must be > 0");
    fs::create_directories(opt.out);

    const PhysicalParams p = merge_point_mass(cfg.physical, cfg.merge);
    const auto [nd, und] = nondimensionalize(p, cfg.input);
    const AsymptoticCoeffs k = coefficients(nd, und.omega);
    const Trajectory traj = simulate(p, cfg.input, Model::Constrained, cfg.sim);
    m.add_stats(traj.stats);

    const double eps = cfg.input.eps, phi0 = cfg.input.phi0;
    const double t_ss = steady_state_start(nd);
    const fs::path csv = opt.out / "compare.csv";
    std::ofstream out = open_out(csv);
    out << "t,t_nd,v_num,v_asym,v_err,theta_num,theta_asym,theta_err\n";
    double vmax = 0.0, vsum = 0.0, vmax_ss = 0.0, thmax = 0.0;
    std::size_t n_ss = 0;
    for (std::size_t i = 0; i < traj.size(); ++i) {
      const double tn = traj.t[i] / nd.t_c;
      const double vn = nondimensionalize_velocity(traj.v_par[i], nd, p.l1);
      const double va = v_asymptotic(tn, eps, phi0, k, nd.kappa, args.form);
      const double th = traj.q[i](kTheta);
      const double tha = theta_asymptotic(tn, eps, nd, und.omega);
      const double ev = std::abs(vn - va);
      vmax = std::max(vmax, ev);
      vsum += ev;
      thmax = std::max(thmax, std::abs(th - tha));
      if (traj.t[i] >= t_ss) {
        vmax_ss = std::max(vmax_ss, ev);
        ++n_ss;
      }
      out << traj.t[i] << ',' << tn << ',' << vn << ',' << va << ',' << vn - va << ',' << th << ',' << tha << ','
          << th - tha << '\n';
    }
    m.add_output(csv);

    const double eps4 = std::pow(eps, 4);
    Json summary;
    summary["eps_rad"] = eps;
    summary["phi0_rad"] = phi0;
    summary["omega_nd"] = und.omega;
    summary["t_c"] = nd.t_c;
    summary["v10_form"] = args.form == V10Form::Derived ? "derived" : "printed";
    summary["b1"] = k.b1;
    summary["max_abs_error_v"] = vmax;
    summary["mean_abs_error_v"] = traj.size() ? vsum / static_cast<double>(traj.size()) : 0.0;
    summary["error_over_eps4"] = eps4 > 0.0 ? Json(vmax / eps4) : Json(nullptr);
    summary["max_abs_error_theta"] = thmax;
    summary["steady_state_start"] = t_ss;
    summary["steady_state_max_abs_error_v"] = n_ss ? Json(vmax_ss) : Json(nullptr);
    try {
      const CycleAverage ca = cycle_average(traj, t_ss, cfg.input.period());
      summary["mean_speed_numeric"] = ca.mean;
      summary["mean_speed_asymptotic"] = dimensionalize_velocity(eps * eps * k.b1, nd, p.l1);
    } catch (const ValidationError& e) {
      summary["mean_speed_numeric"] = nullptr;
      summary["mean_speed_note"] = e.what();
    }
    const fs::path js = opt.out / "compare_summary.json";
    write_json(summary, js);
    m.add_output(js);
  });
}

// ---------------------------------------------------------------- sweep --

namespace {

struct SweepRow {
  double v1 = 0.0, v2 = 0.0;
  double mean_speed = std::numeric_limits<double>::quiet_NaN();
  double displacement = std::numeric_limits<double>::quiet_NaN();
  int sign = 0;
  double xi = std::numeric_limits<double>::quiet_NaN();
  double b1 = std::numeric_limits<double>::quiet_NaN();
  double predicted = std::numeric_limits<double>::quiet_NaN();
  double curvature = std::numeric_limits<double>::quiet_NaN();
  double t_end = 0.0;
  IntegratorStats stats;
  std::string error;
};

SweepRow sweep_point(RunConfig cfg, const SweepSpec& s, double v1, double v2) {
  SweepRow r;
  r.v1 = v1;
  r.v2 = v2;
  try {
    set_parameter(cfg, s.param, v1);
    if (s.param2) set_parameter(cfg, *s.param2, v2);
    cfg.physical.validate();
    cfg.input.validate();
    const PhysicalParams merged = merge_point_mass(cfg.physical, cfg.merge);
    const auto [nd, und] = nondimensionalize(merged, cfg.input);
    const AsymptoticCoeffs k = coefficients(nd, und.omega);
    r.b1 = k.b1;
    r.predicted = dimensionalize_velocity(cfg.input.eps * cfg.input.eps * k.b1, nd, merged.l1);
    if (std::abs(nd.beta2 - 0.5) <= 1e-9) r.xi = reversal_indicator(nd);
    const double t0 = steady_state_start(nd);
    SimOptions o = cfg.sim;
    o.t_end = std::max(o.t_end, t0 + 10.0 * cfg.input.period());
    r.t_end = o.t_end;
    const Trajectory traj = simulate(cfg.physical, cfg.input, cfg.model, o);
    r.stats = traj.stats;
    const CycleAverage ca = cycle_average(traj, t0, cfg.input.period());
    r.mean_speed = ca.mean;
    r.displacement = ca.displacement_per_cycle;
    r.sign = sign_of(ca.mean);
    try {
      r.curvature = path_curvature(traj, t0, cfg.input.period());
    } catch (const BoundaryError&) {
    }
  } catch (const std::exception& e) {
    r.error = e.what();
  }
  return r;
}

void put(std::ostream& out, double x) {
  if (std::isfinite(x)) out << x;
}

}  // namespace

int cmd_sweep(const CommonOptions& opt) {
  Manifest m("sweep", opt.out);
  return guarded(m, [&] {
    const RunConfig cfg = resolve_config(opt);
    m.set_config(cfg);
    if (!cfg.sweep) throw ValidationError("sweep: config has no sweep section");
    const SweepSpec& s = *cfg.sweep;
    fs::create_directories(opt.out);
    const std::vector<double> second = s.param2 ? s.values2 : std::vector<double>{0.0};
    const std::size_t n1 = s.values.size(), n2 = second.size();
    const std::vector<SweepRow> rows = parallel_map(
        n1 * n2, [&](std::size_t i) { return sweep_point(cfg, s, s.values[i / n2], second[i % n2]); });

    const fs::path csv = opt.out / "sweep.csv";
    std::ofstream out = open_out(csv);
    out << s.param << ',';
    if (s.param2) out << *s.param2 << ',';
    out << "mean_speed,displacement_per_cycle,sign,xi,b1,predicted_mean_speed,curvature,t_end,error\n";
    int failed = 0;
    for (const SweepRow& r : rows) {
      m.add_stats(r.stats);
      out << r.v1 << ',';
      if (s.param2) out << r.v2 << ',';
      put(out, r.mean_speed);
      out << ',';
      put(out, r.displacement);
      out << ',';
      if (r.error.empty()) out << r.sign;
      out << ',';
      put(out, r.xi);
      out << ',';
      put(out, r.b1);
      out << ',';
      put(out, r.predicted);
      out << ',';
      put(out, r.curvature);
      out << ',' << r.t_end << ',';
      if (!r.error.empty()) {
        ++failed;
        std::string e = r.error;
        for (char& ch : e)
          if (ch == ',' || ch == '\n' || ch == '"') ch = ' ';
        out << '"' << e << '"';
      }
      out << '\n';
    }
    m.add_output(csv);
    m.extra()["points"] = rows.size();
    m.extra()["failed_points"] = failed;
  });
}

// ---------------------------------------------------------------- fit --

namespace {

Json tracked_json(const TrackedInput& in) {
  return {{"Phi_Mean_rad", in.Phi_Mean},
          {"Phi_Amp_rad", in.Phi_Amp},
          {"Omega_rad_s", in.Omega},
          {"phase_rad", in.phase},
          {"Phi_Mean_deg", rad2deg(in.Phi_Mean)},
          {"Phi_Amp_deg", rad2deg(in.Phi_Amp)}};
}

}  // namespace

int cmd_fit(const CommonOptions& opt, const FitArgs& args) {
  Manifest m("fit", opt.out);
  return guarded(m, [&] {
    const RunConfig cfg = resolve_config(opt);
    m.set_config(cfg);
    FitSpec spec = cfg.fit.value_or(FitSpec{});
    for (const auto& e : args.experiments) {
      spec.experiments.push_back(e);
      spec.windows.emplace_back();
    }
    if (spec.experiments.empty()) throw ValidationError("fit: no experiment files given");
    if (args.mode) {
      if (*args.mode == "dissipation") spec.mode = FitMode::Dissipation;
      else if (*args.mode == "skid") spec.mode = FitMode::Skid;
      else throw ValidationError("--mode must be dissipation|skid, got '" + *args.mode + "'");
    }
    if (args.objective) spec.dissipation.objective = objective_from_string(*args.objective);
    if (spec.mode == FitMode::Skid && !spec.has_c_perp_bounds)
      throw ValidationError("fit.c_perp_bounds: required in skid mode");

    std::vector<ExperimentRecord> records;
    for (std::size_t i = 0; i < spec.experiments.size(); ++i) {
      ExperimentRecord r = ingest_csv(spec.experiments[i]);
      r.label = fs::path(spec.experiments[i]).stem().string();
      if (spec.windows[i]) {
        r.t_lo = spec.windows[i]->first;
        r.t_hi = spec.windows[i]->second;
      }
      records.push_back(std::move(r));
    }
    fs::create_directories(opt.out);

    const FitResult res = spec.mode == FitMode::Skid ? fit_skid(records, cfg.physical, spec.skid)
                                                     : fit_dissipation(records, cfg.physical, spec.dissipation);
    Json j;
    j["mode"] = spec.mode == FitMode::Skid ? "skid" : "dissipation";
    j["coefficients"] = {{"c", res.c}, {"c_perp", res.c_perp ? Json(*res.c_perp) : Json(nullptr)}};
    j["objective"] = res.objective;
    j["objective_type"] = spec.mode == FitMode::Skid ? "weighted_velocity_trace" : to_string(res.objective_type);
    Json per = Json::array();
    for (const auto& e : res.per_experiment) {
      Json pe = {{"label", e.label}, {"tracked_input", tracked_json(e.input)}, {"residual", e.residual}};
      if (res.objective_type == Objective::DisplacementPerCycle && spec.mode == FitMode::Dissipation) {
        pe["data_displacement_per_cycle"] = e.data_value;
        pe["model_displacement_per_cycle"] = e.model_value;
      }
      per.push_back(pe);
    }
    j["per_experiment"] = per;
    Json trace = Json::array();
    for (const auto& t : res.search_trace) {
      Json tj = {{"c", t.c}, {"objective", t.objective}};
      if (spec.mode == FitMode::Skid) tj["c_perp"] = t.c_perp;
      trace.push_back(tj);
    }
    j["search_trace"] = trace;
    j["at_boundary"] = res.at_boundary;
    j["multimodal"] = res.multimodal;
    j["hessian_condition"] = res.hessian_condition ? nullable(*res.hessian_condition) : Json(nullptr);
    j["warnings"] = res.warnings;
    const fs::path js = opt.out / "fit.json";
    write_json(j, js);
    m.add_output(js);
    for (const auto& w : res.warnings) std::cerr << "warning: " << w << '\n';
  });
}

// ---------------------------------------------------------------- reversal --

int cmd_reversal(const CommonOptions& opt) {
  Manifest m("reversal", opt.out);
  return guarded(m, [&] {
    RunConfig cfg = resolve_config(opt);
    m.set_config(cfg);
    if (cfg.model == Model::Skid) throw ValidationError("reversal: model must be constrained or slope");
    fs::create_directories(opt.out);
    const PhysicalParams merged = merge_point_mass(cfg.physical, cfg.merge);
    const auto [nd, und] = nondimensionalize(merged, cfg.input);
    const AsymptoticCoeffs k = coefficients(nd, und.omega);
    const int predicted = mean_direction(nd, und.omega);

    const double t0 = steady_state_start(nd);
    SimOptions o = cfg.sim;
    o.t_end = std::max(o.t_end, t0 + 10.0 * cfg.input.period());
    const Trajectory traj = simulate(cfg.physical, cfg.input, cfg.model, o);
    m.add_stats(traj.stats);
    const CycleAverage ca = cycle_average(traj, t0, cfg.input.period());
    const int simulated = sign_of(ca.mean);

    Json j;
    j["xi"] = std::abs(nd.beta2 - 0.5) <= 1e-9 ? Json(reversal_indicator(nd)) : Json(nullptr);
    j["b1"] = k.b1;
    j["beta2"] = nd.beta2;
    j["predicted_direction"] = predicted;
    j["simulated_direction"] = simulated;
    j["simulated_mean_speed"] = ca.mean;
    j["predicted_mean_speed"] = dimensionalize_velocity(cfg.input.eps * cfg.input.eps * k.b1, nd, merged.l1);
    j["agreement"] = predicted == 0 ? Json(nullptr) : Json(predicted == simulated);
    if (predicted == 0) j["note"] = "on the reversal boundary: |b1| below tolerance";
    if (cfg.physical.slope != 0.0) j["note"] = "prediction is for level ground; the simulation includes the slope";
    const fs::path js = opt.out / "reversal.json";
    write_json(j, js);
    m.add_output(js);
  });
}

// ---------------------------------------------------------------- extract --

int cmd_extract_input(const CommonOptions& opt, const std::string& csv, int half_window) {
  Manifest m("extract-input", opt.out);
  return guarded(m, [&] {
    if (csv.empty()) throw ValidationError("extract-input: --csv is required");
    const ExperimentRecord rec = ingest_csv(csv);
    const TrackedInput in = extract_input(rec.t, rec.phi, half_window);
    fs::create_directories(opt.out);
    Json j = tracked_json(in);
    j["source"] = csv;
    j["samples"] = rec.size();
    j["sample_rate_hz"] = rec.sample_rate();
    const fs::path js = opt.out / "tracked_input.json";
    write_json(j, js);
    m.add_output(js);
  });
}

}  // namespace twistcar::app
