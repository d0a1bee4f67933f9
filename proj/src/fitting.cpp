#include "twistcar/fitting.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>
#include <map>
#include <numeric>
#include <sstream>

#include "twistcar/analysis.hpp"
#include "twistcar/error.hpp"
#include "twistcar/parallel.hpp"

namespace twistcar {

// ---------------------------------------------------------------- records --

double ExperimentRecord::sample_rate() const {
  if (t.size() < 2) return 0.0;
  return static_cast<double>(t.size() - 1) / (t.back() - t.front());
}

void ExperimentRecord::validate() const {
  const std::size_t n = t.size();
  if (n < 3) throw ValidationError("experiment '" + label + "': needs at least 3 samples");
  if (x.size() != n || y.size() != n || theta.size() != n || phi.size() != n)
    throw ValidationError("experiment '" + label + "': column lengths differ");
  if (v_par.size() != n || v_perp.size() != n)
    throw ValidationError("experiment '" + label + "': body velocities missing");
  for (std::size_t i = 1; i < n; ++i) {
    if (!(t[i] > t[i - 1])) {
      std::ostringstream os;
      os << "experiment '" << label << "': t not strictly increasing at sample " << i;
      throw ValidationError(os.str());
    }
  }
  if (t_lo && t_hi && !(*t_hi > *t_lo)) throw ValidationError("experiment '" + label + "': t_hi must exceed t_lo");
}

void derive_body_velocities(ExperimentRecord& rec) {
  const std::size_t n = rec.t.size();
  rec.v_par.assign(n, 0.0);
  rec.v_perp.assign(n, 0.0);
  if (n < 2) return;
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t a = i == 0 ? 0 : i - 1;
    const std::size_t b = i + 1 == n ? n - 1 : i + 1;
    const double h = rec.t[b] - rec.t[a];
    const double xd = (rec.x[b] - rec.x[a]) / h;
    const double yd = (rec.y[b] - rec.y[a]) / h;
    const double c = std::cos(rec.theta[i]), s = std::sin(rec.theta[i]);
    rec.v_par[i] = c * xd + s * yd;
    rec.v_perp[i] = -s * xd + c * yd;
  }
}

ExperimentRecord record_from_trajectory(const Trajectory& traj, std::string label) {
  ExperimentRecord rec;
  rec.label = std::move(label);
  rec.t = traj.t;
  const std::size_t n = traj.size();
  rec.x.resize(n);
  rec.y.resize(n);
  rec.theta.resize(n);
  rec.phi.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    rec.x[i] = traj.q[i](0);
    rec.y[i] = traj.q[i](1);
    rec.theta[i] = traj.q[i](2);
    rec.phi[i] = traj.q[i](3);
  }
  rec.v_par = traj.v_par;
  rec.v_perp = traj.v_perp;
  return rec;
}

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::stringstream ss(line);
  std::string cell;
  while (std::getline(ss, cell, ',')) {
    const auto b = cell.find_first_not_of(" \t\r");
    const auto e = cell.find_last_not_of(" \t\r");
    out.push_back(b == std::string::npos ? std::string() : cell.substr(b, e - b + 1));
  }
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

double parse_number(const std::string& s, std::size_t line, const std::string& column) {
  try {
    std::size_t pos = 0;
    const double v = std::stod(s, &pos);
    if (pos != s.size() || !std::isfinite(v)) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    std::ostringstream os;
    os << "line " << line << ": column '" << column << "' is not a finite number ('" << s << "')";
    throw ValidationError(os.str());
  }
}

}  // namespace

ExperimentRecord ingest_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open experiment file " + path);
  std::string line;
  if (!std::getline(in, line)) throw ValidationError(path + ": empty file");
  const std::vector<std::string> header = split_csv_line(line);
  std::map<std::string, std::size_t> col;
  for (std::size_t i = 0; i < header.size(); ++i) col[header[i]] = i;
  for (const char* req : {"t", "x", "y", "theta", "phi"})
    if (!col.count(req)) throw ValidationError(path + ": missing required column '" + std::string(req) + "'");
  const bool has_v = col.count("v_par") && col.count("v_perp");

  ExperimentRecord rec;
  rec.label = path;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const std::vector<std::string> cells = split_csv_line(line);
    if (cells.size() < header.size()) {
      std::ostringstream os;
      os << path << ": line " << lineno << " has " << cells.size() << " fields, expected " << header.size();
      throw ValidationError(os.str());
    }
    auto get = [&](const char* name) { return parse_number(cells[col.at(name)], lineno, name); };
    const double t = get("t");
    if (!rec.t.empty() && !(t > rec.t.back())) {
      std::ostringstream os;
      os << path << ": t not strictly increasing at line " << lineno;
      throw ValidationError(os.str());
    }
    const double phi = get("phi");
    if (std::abs(phi) > kPi) {
      std::ostringstream os;
      os << path << ": line " << lineno << ": |phi| = " << std::abs(phi) << " exceeds pi (angles must be radians)";
      throw ValidationError(os.str());
    }
    rec.t.push_back(t);
    rec.x.push_back(get("x"));
    rec.y.push_back(get("y"));
    rec.theta.push_back(get("theta"));
    rec.phi.push_back(phi);
    if (has_v) {
      rec.v_par.push_back(get("v_par"));
      rec.v_perp.push_back(get("v_perp"));
    }
  }
  if (rec.t.size() < 3) throw ValidationError(path + ": needs at least 3 data rows");

  std::vector<double> dts(rec.t.size() - 1);
  for (std::size_t i = 1; i < rec.t.size(); ++i) dts[i - 1] = rec.t[i] - rec.t[i - 1];
  std::vector<double> sorted = dts;
  std::nth_element(sorted.begin(), sorted.begin() + sorted.size() / 2, sorted.end());
  const double median = sorted[sorted.size() / 2];
  for (std::size_t i = 0; i < dts.size(); ++i) {
    if (dts[i] > 3.0 * median) {
      std::ostringstream os;
      os << path << ": sampling gap of " << dts[i] << " s before data row " << i + 2 << " exceeds 3 sample intervals";
      throw ValidationError(os.str());
    }
  }
  if (!has_v) derive_body_velocities(rec);
  rec.validate();
  return rec;
}

void write_csv(const ExperimentRecord& rec, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw ValidationError("cannot write " + path);
  out << "t,x,y,theta,phi,v_par,v_perp\n" << std::setprecision(12);
  for (std::size_t i = 0; i < rec.size(); ++i) {
    out << rec.t[i] << ',' << rec.x[i] << ',' << rec.y[i] << ',' << rec.theta[i] << ',' << rec.phi[i] << ','
        << rec.v_par[i] << ',' << rec.v_perp[i] << '\n';
  }
}

// ---------------------------------------------------------------- input --

namespace {

struct Extremum {
  double t;
  double value;
  bool peak;
};

}  // namespace

TrackedInput extract_input(const std::vector<double>& t, const std::vector<double>& phi, int half_window) {
  if (t.size() != phi.size()) throw ValidationError("extract_input: t and phi differ in length");
  if (half_window < 1) throw ValidationError("extract_input: half_window must be >= 1");
  const auto h = static_cast<std::size_t>(half_window);
  const std::size_t n = t.size();
  if (n < 4 * h + 4) throw ValidationError("extract_input: series too short");

  // Centered moving average; only indices with a full window are used.
  std::vector<double> s(n, 0.0);
  double acc = 0.0;
  for (std::size_t i = 0; i < 2 * h + 1; ++i) acc += phi[i];
  for (std::size_t i = h; i + h < n; ++i) {
    s[i] = acc / static_cast<double>(2 * h + 1);
    if (i + h + 1 < n) acc += phi[i + h + 1] - phi[i - h];
  }
  const std::size_t lo = h, hi = n - h - 1;
  const auto [mn_it, mx_it] = std::minmax_element(s.begin() + static_cast<std::ptrdiff_t>(lo),
                                                  s.begin() + static_cast<std::ptrdiff_t>(hi) + 1);
  const double range = *mx_it - *mn_it;
  const double scale = std::max(1.0, std::abs(*mx_it) + std::abs(*mn_it));
  if (!(range > 1e-9 * scale)) throw ValidationError("extract_input: steering signal is not oscillatory");

  // Alternating extrema with hysteresis of a quarter of the smoothed range.
  const double delta = 0.25 * range;
  std::vector<std::pair<std::size_t, bool>> idx;
  std::size_t imax = lo, imin = lo;
  int looking = 0;  // +1 for a maximum, -1 for a minimum, 0 undecided
  for (std::size_t i = lo; i <= hi; ++i) {
    if (s[i] > s[imax]) imax = i;
    if (s[i] < s[imin]) imin = i;
    if (looking >= 0 && s[i] < s[imax] - delta) {
      if (looking == 1 || imax > imin) idx.emplace_back(imax, true);
      looking = -1;
      imin = i;
    } else if (looking <= 0 && s[i] > s[imin] + delta) {
      if (looking == -1 || imin > imax) idx.emplace_back(imin, false);
      looking = 1;
      imax = i;
    }
  }

  // Local sinusoid fitted over a third of a period either side of each
  // extremum; the rate is taken from the smoothed extrema, then once more from
  // the refined ones.
  if (idx.size() < 4) {
    std::ostringstream os;
    os << "extract_input: found " << idx.size() << " extrema, need at least 4";
    throw ValidationError(os.str());
  }
  const double w0 = kPi * static_cast<double>(idx.size() - 1) / (t[idx.back().first] - t[idx.front().first]);
  const double dt = (t.back() - t.front()) / static_cast<double>(n - 1);
  const std::size_t r = std::max(h, static_cast<std::size_t>(2.0 * kPi / (3.0 * w0 * dt)));
  auto refine = [&](double w) {
    std::vector<Extremum> ext;
    for (const auto& [k, peak] : idx) {
      if (k < r || k + r >= n) continue;
      Eigen::MatrixX3d A(2 * r + 1, 3);
      Eigen::VectorXd rhs(2 * r + 1);
      for (std::size_t i = k - r; i <= k + r; ++i) {
        const double arg = w * (t[i] - t[k]);
        A.row(static_cast<Eigen::Index>(i + r - k)) << 1.0, std::cos(arg), std::sin(arg);
        rhs(static_cast<Eigen::Index>(i + r - k)) = phi[i];
      }
      const Eigen::Vector3d c = A.colPivHouseholderQr().solve(rhs);
      const double a = std::hypot(c(1), c(2));
      double shift = std::atan2(c(2), c(1));
      if (!peak) shift = std::remainder(shift + kPi, 2.0 * kPi);
      ext.push_back({t[k] + shift / w, c(0) + (peak ? a : -a), peak});
    }
    // Keep a strictly alternating sequence.
    std::vector<Extremum> alt;
    for (const auto& e : ext) {
      if (!alt.empty() && alt.back().peak == e.peak) {
        if ((e.peak && e.value > alt.back().value) || (!e.peak && e.value < alt.back().value)) alt.back() = e;
      } else {
        alt.push_back(e);
      }
    }
    if (alt.size() < 4) {
      std::ostringstream os;
      os << "extract_input: found " << alt.size() << " extrema, need at least 4";
      throw ValidationError(os.str());
    }
    return alt;
  };
  // Mean same-type extremum spacing.
  auto rate = [](const std::vector<Extremum>& alt) {
    double spacing = 0.0;
    for (std::size_t i = 0; i + 2 < alt.size(); ++i) spacing += alt[i + 2].t - alt[i].t;
    return 2.0 * kPi * static_cast<double>(alt.size() - 2) / spacing;
  };
  const auto alt = refine(rate(refine(w0)));
  const double omega = rate(alt);

  double amp = 0.0, mid = 0.0;
  for (std::size_t i = 0; i + 1 < alt.size(); ++i) {
    amp += std::abs(alt[i].value - alt[i + 1].value) / 2.0;
    mid += (alt[i].value + alt[i + 1].value) / 2.0;
  }
  amp /= static_cast<double>(alt.size() - 1);
  mid /= static_cast<double>(alt.size() - 1);

  // Circular mean of the phase implied by every extremum.
  double cs = 0.0, sn = 0.0;
  for (const auto& e : alt) {
    const double ph = -omega * e.t + (e.peak ? 0.0 : kPi);
    cs += std::cos(ph);
    sn += std::sin(ph);
  }
  TrackedInput out;
  out.Phi_Mean = mid;
  out.Phi_Amp = amp;
  out.Omega = omega;
  out.phase = std::atan2(sn, cs);
  return out;
}

// ---------------------------------------------------------------- fitting --

Objective objective_from_string(const std::string& s) {
  if (s == "displacement_per_cycle") return Objective::DisplacementPerCycle;
  if (s == "velocity_trace") return Objective::VelocityTrace;
  throw ValidationError("objective must be displacement_per_cycle|velocity_trace, got '" + s + "'");
}

std::string to_string(Objective o) {
  return o == Objective::DisplacementPerCycle ? "displacement_per_cycle" : "velocity_trace";
}

namespace {

struct Window {
  double lo, hi;
};

Window window_of(const ExperimentRecord& e) {
  const double mid = 0.5 * (e.t.front() + e.t.back());
  Window w{e.t_lo.value_or(mid), e.t_hi.value_or(e.t.back())};
  w.lo = std::max(w.lo, e.t.front());
  w.hi = std::min(w.hi, e.t.back());
  if (!(w.hi > w.lo)) throw ValidationError("experiment '" + e.label + "': empty steady-state window");
  return w;
}

double median_dt(const std::vector<double>& t) {
  std::vector<double> d(t.size() - 1);
  for (std::size_t i = 1; i < t.size(); ++i) d[i - 1] = t[i] - t[i - 1];
  std::nth_element(d.begin(), d.begin() + d.size() / 2, d.end());
  return d[d.size() / 2];
}

// Replays the record's tracked input from rest at its first sample time.
Trajectory replay(const ExperimentRecord& e, const TrackedInput& in, const PhysicalParams& p, Model model,
                  double t_hi, double rtol, double atol) {
  InputSignal u = in.signal();
  u.phase += u.omega * e.t.front();
  SimOptions o;
  o.t_end = t_hi - e.t.front();
  o.dt_out = median_dt(e.t);
  o.rtol = rtol;
  o.atol = atol;
  Trajectory traj = simulate(p, u, model, o);
  for (double& t : traj.t) t += e.t.front();
  return traj;
}

double interp(const std::vector<double>& t, const std::vector<double>& y, double s) {
  if (s <= t.front()) return y.front();
  if (s >= t.back()) return y.back();
  const auto hi = static_cast<std::size_t>(std::upper_bound(t.begin(), t.end(), s) - t.begin());
  const std::size_t lo = hi - 1;
  const double f = (s - t[lo]) / (t[hi] - t[lo]);
  return y[lo] + f * (y[hi] - y[lo]);
}

struct TraceError {
  double par = 0.0, perp = 0.0;
};

TraceError trace_error(const ExperimentRecord& e, const Trajectory& sim, Window w) {
  TraceError err;
  std::size_t n = 0;
  for (std::size_t i = 0; i < e.size(); ++i) {
    if (e.t[i] < w.lo || e.t[i] > w.hi) continue;
    const double dp = interp(sim.t, sim.v_par, e.t[i]) - e.v_par[i];
    const double dq = interp(sim.t, sim.v_perp, e.t[i]) - e.v_perp[i];
    err.par += dp * dp;
    err.perp += dq * dq;
    ++n;
  }
  if (n == 0) throw ValidationError("experiment '" + e.label + "': no samples in the steady-state window");
  err.par /= static_cast<double>(n);
  err.perp /= static_cast<double>(n);
  return err;
}

void check_experiments(const std::vector<ExperimentRecord>& experiments) {
  if (experiments.empty()) throw ValidationError("fit needs at least one experiment");
  for (const auto& e : experiments) e.validate();
}

std::vector<TrackedInput> tracked_inputs(const std::vector<ExperimentRecord>& experiments) {
  std::vector<TrackedInput> out;
  for (const auto& e : experiments) out.push_back(extract_input(e.t, e.phi));
  return out;
}

double dissipation_objective_impl(const std::vector<ExperimentRecord>& experiments,
                                  const std::vector<TrackedInput>& inputs, const PhysicalParams& p_template,
                                  const FitOptions& opt, double c, std::vector<ExperimentResidual>* details) {
  PhysicalParams p = p_template;
  p.c = c;
  double total = 0.0;
  for (std::size_t j = 0; j < experiments.size(); ++j) {
    const ExperimentRecord& e = experiments[j];
    const Window w = window_of(e);
    Trajectory sim;
    try {
      sim = replay(e, inputs[j], p, Model::Constrained, w.hi, opt.rtol, opt.atol);
    } catch (const NumericalError& ex) {
      std::ostringstream os;
      os << "simulation failed at candidate c = " << c << " (experiment '" << e.label << "'): " << ex.what();
      throw NumericalError(os.str());
    }
    ExperimentResidual r;
    r.label = e.label;
    r.input = inputs[j];
    if (opt.objective == Objective::VelocityTrace) {
      r.residual = trace_error(e, sim, w).par;
    } else {
      const double period = 2.0 * kPi / inputs[j].Omega;
      r.data_value = cycle_average_between(e.t, e.v_par, w.lo, w.hi, period, 1).displacement_per_cycle;
      r.model_value = cycle_average_between(sim.t, sim.v_par, w.lo, w.hi, period, 1).displacement_per_cycle;
      r.residual = (r.model_value - r.data_value) * (r.model_value - r.data_value);
    }
    total += r.residual;
    if (details) details->push_back(r);
  }
  if (!std::isfinite(total)) {
    std::ostringstream os;
    os << "objective is not finite at candidate c = " << c;
    throw NumericalError(os.str());
  }
  return total;
}

constexpr double kGolden = 0.6180339887498949;

// Golden-section minimization of f on [a, b] to width tol.
template <typename F>
std::pair<double, double> golden_section(F&& f, double a, double b, double tol) {
  double x1 = b - kGolden * (b - a), x2 = a + kGolden * (b - a);
  double f1 = f(x1), f2 = f(x2);
  while (b - a > tol) {
    if (f1 <= f2) {
      b = x2;
      x2 = x1;
      f2 = f1;
      x1 = b - kGolden * (b - a);
      f1 = f(x1);
    } else {
      a = x1;
      x1 = x2;
      f1 = f2;
      x2 = a + kGolden * (b - a);
      f2 = f(x2);
    }
  }
  return f1 <= f2 ? std::make_pair(x1, f1) : std::make_pair(x2, f2);
}

}  // namespace

int interior_local_minima(const std::vector<double>& f) {
  int count = 0;
  for (std::size_t i = 1; i + 1 < f.size(); ++i)
    if (f[i] < f[i - 1] && f[i] < f[i + 1]) ++count;
  return count;
}

double dissipation_objective(const std::vector<ExperimentRecord>& experiments, const PhysicalParams& p_template,
                             const FitOptions& opt, double c, std::vector<ExperimentResidual>* details) {
  check_experiments(experiments);
  return dissipation_objective_impl(experiments, tracked_inputs(experiments), p_template, opt, c, details);
}

FitResult fit_dissipation(const std::vector<ExperimentRecord>& experiments, const PhysicalParams& p_template,
                          const FitOptions& opt) {
  check_experiments(experiments);
  if (!(opt.lo > 0.0 && opt.hi > opt.lo)) throw ValidationError("fit bounds must satisfy 0 < c_lo < c_hi");
  if (opt.prescan_points < 3) throw ValidationError("prescan needs at least 3 points");
  const std::vector<TrackedInput> inputs = tracked_inputs(experiments);

  FitResult res;
  res.objective_type = opt.objective;
  auto f = [&](double c) {
    const double v = dissipation_objective_impl(experiments, inputs, p_template, opt, c, nullptr);
    res.search_trace.push_back({c, 0.0, v});
    return v;
  };

  const auto m = static_cast<std::size_t>(opt.prescan_points);
  std::vector<double> xs(m);
  for (std::size_t i = 0; i < m; ++i) xs[i] = opt.lo + (opt.hi - opt.lo) * static_cast<double>(i) / (m - 1);
  const std::vector<double> fs = parallel_map(m, [&](std::size_t i) {
    return dissipation_objective_impl(experiments, inputs, p_template, opt, xs[i], nullptr);
  });
  for (std::size_t i = 0; i < m; ++i) res.search_trace.push_back({xs[i], 0.0, fs[i]});
  if (interior_local_minima(fs) > 1) {
    res.multimodal = true;
    res.warnings.push_back("objective has several local minima on the prescan grid; golden-section refines the lowest");
  }
  const auto ibest = static_cast<std::size_t>(std::min_element(fs.begin(), fs.end()) - fs.begin());
  const double a = xs[ibest == 0 ? 0 : ibest - 1];
  const double b = xs[std::min(ibest + 1, m - 1)];
  const double tol = opt.tolerance * (opt.hi - opt.lo);
  auto [c_best, f_best] = golden_section(f, a, b, tol);
  if (fs[ibest] < f_best) {
    c_best = xs[ibest];
    f_best = fs[ibest];
  }
  if ((ibest == 0 && c_best - opt.lo <= tol) || (ibest == m - 1 && opt.hi - c_best <= tol)) {
    res.at_boundary = true;
    res.warnings.push_back("fitted coefficient is pinned at a search bound");
  }
  res.c = c_best;
  res.objective = dissipation_objective_impl(experiments, inputs, p_template, opt, c_best, &res.per_experiment);
  return res;
}

double skid_objective(const std::vector<ExperimentRecord>& experiments, const PhysicalParams& p_template,
                      const SkidFitOptions& opt, double c, double c_perp) {
  PhysicalParams p = p_template;
  p.c = c;
  p.c_perp = c_perp;
  double total = 0.0;
  for (const auto& e : experiments) {
    const Window w = window_of(e);
    const TrackedInput in = extract_input(e.t, e.phi);
    Trajectory sim;
    try {
      sim = replay(e, in, p, Model::Skid, w.hi, opt.rtol, opt.atol);
    } catch (const NumericalError& ex) {
      std::ostringstream os;
      os << "simulation failed at candidate (c, c_perp) = (" << c << ", " << c_perp << "): " << ex.what();
      throw NumericalError(os.str());
    }
    const TraceError err = trace_error(e, sim, w);
    total += opt.weight_par * err.par + opt.weight_perp * err.perp;
  }
  if (!std::isfinite(total)) {
    std::ostringstream os;
    os << "objective is not finite at candidate (c, c_perp) = (" << c << ", " << c_perp << ")";
    throw NumericalError(os.str());
  }
  return total;
}

FitResult fit_skid(const std::vector<ExperimentRecord>& experiments, const PhysicalParams& p_template,
                   const SkidFitOptions& opt) {
  check_experiments(experiments);
  if (!(opt.c_lo > 0.0 && opt.c_hi > opt.c_lo)) throw ValidationError("skid fit needs 0 < c_lo < c_hi");
  if (!(opt.cp_lo > 0.0 && opt.cp_hi > opt.cp_lo)) throw ValidationError("skid fit needs 0 < c_perp_lo < c_perp_hi");
  if (opt.grid < 2) throw ValidationError("skid fit grid needs at least 2 points per axis");
  if (!(opt.weight_par >= 0.0 && opt.weight_perp >= 0.0) || opt.weight_par + opt.weight_perp == 0.0)
    throw ValidationError("skid fit weights must be >= 0 and not both zero");

  FitResult res;
  res.objective_type = Objective::VelocityTrace;
  const double lc0 = std::log10(opt.c_lo), lc1 = std::log10(opt.c_hi);
  const double lp0 = std::log10(opt.cp_lo), lp1 = std::log10(opt.cp_hi);
  const auto g = static_cast<std::size_t>(opt.grid);
  auto axis = [g](double a, double b, std::size_t i) { return a + (b - a) * static_cast<double>(i) / (g - 1); };

  const std::vector<double> grid = parallel_map(g * g, [&](std::size_t k) {
    return skid_objective(experiments, p_template, opt, std::pow(10.0, axis(lc0, lc1, k / g)),
                          std::pow(10.0, axis(lp0, lp1, k % g)));
  });
  for (std::size_t k = 0; k < g * g; ++k)
    res.search_trace.push_back({std::pow(10.0, axis(lc0, lc1, k / g)), std::pow(10.0, axis(lp0, lp1, k % g)), grid[k]});
  const auto kbest = static_cast<std::size_t>(std::min_element(grid.begin(), grid.end()) - grid.begin());
  double lc = axis(lc0, lc1, kbest / g), lp = axis(lp0, lp1, kbest % g);
  double fbest = grid[kbest];

  // Objective variation along each axis through the best grid node.
  auto spread = [&](bool along_c) {
    double lo = std::numeric_limits<double>::infinity(), hi = -lo;
    for (std::size_t i = 0; i < g; ++i) {
      const std::size_t k = along_c ? i * g + kbest % g : (kbest / g) * g + i;
      lo = std::min(lo, grid[k]);
      hi = std::max(hi, grid[k]);
    }
    return (hi - lo) / std::max(hi, std::numeric_limits<double>::min());
  };
  if (spread(false) < 1e-3) res.warnings.push_back("c_perp is not identifiable: objective is flat along c_perp");
  if (spread(true) < 1e-3) res.warnings.push_back("c is not identifiable: objective is flat along c");

  auto f = [&](double c_log, double p_log) {
    const double v = skid_objective(experiments, p_template, opt, std::pow(10.0, c_log), std::pow(10.0, p_log));
    res.search_trace.push_back({std::pow(10.0, c_log), std::pow(10.0, p_log), v});
    return v;
  };
  const double hc = (lc1 - lc0) / (g - 1), hp = (lp1 - lp0) / (g - 1);
  for (int sweep = 0; sweep < opt.max_sweeps; ++sweep) {
    const double lc_prev = lc, lp_prev = lp;
    auto [nc, fc] = golden_section([&](double x) { return f(x, lp); }, std::max(lc0, lc - hc), std::min(lc1, lc + hc),
                                   opt.tolerance);
    if (fc < fbest) {
      lc = nc;
      fbest = fc;
    }
    auto [np, fp] = golden_section([&](double x) { return f(lc, x); }, std::max(lp0, lp - hp), std::min(lp1, lp + hp),
                                   opt.tolerance);
    if (fp < fbest) {
      lp = np;
      fbest = fp;
    }
    const double dc = lc - lc_prev, dp = lp - lp_prev;
    if (std::hypot(dc, dp) <= opt.tolerance) break;
    // Pattern move along this sweep's net displacement.
    double smax = 4.0;
    if (dc > 0) smax = std::min(smax, (lc1 - lc_prev) / dc);
    if (dc < 0) smax = std::min(smax, (lc0 - lc_prev) / dc);
    if (dp > 0) smax = std::min(smax, (lp1 - lp_prev) / dp);
    if (dp < 0) smax = std::min(smax, (lp0 - lp_prev) / dp);
    if (smax > 1.0) {
      auto [ns, fs] = golden_section([&](double s) { return f(lc_prev + s * dc, lp_prev + s * dp); }, 1.0, smax,
                                     opt.tolerance / std::hypot(dc, dp));
      if (fs < fbest) {
        lc = lc_prev + ns * dc;
        lp = lp_prev + ns * dp;
        fbest = fs;
      }
    }
  }
  // Curvature of the objective in log10 space at the optimum.
  {
    const double h = std::max(10.0 * opt.tolerance, 0.01);
    const double a = std::clamp(lc, lc0 + h, lc1 - h), b = std::clamp(lp, lp0 + h, lp1 - h);
    auto F = [&](double x, double y) {
      return skid_objective(experiments, p_template, opt, std::pow(10.0, x), std::pow(10.0, y));
    };
    const double f0 = F(a, b);
    Eigen::Matrix2d H;
    H(0, 0) = (F(a + h, b) - 2 * f0 + F(a - h, b)) / (h * h);
    H(1, 1) = (F(a, b + h) - 2 * f0 + F(a, b - h)) / (h * h);
    H(0, 1) = H(1, 0) = (F(a + h, b + h) - F(a + h, b - h) - F(a - h, b + h) + F(a - h, b - h)) / (4 * h * h);
    const Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d> es(H);
    const double lmin = es.eigenvalues()(0), lmax = es.eigenvalues()(1);
    res.hessian_condition = lmin > 0.0 ? lmax / lmin : std::numeric_limits<double>::infinity();
    if (*res.hessian_condition > opt.max_condition) {
      const Eigen::Vector2d d = es.eigenvectors().col(0);
      std::ostringstream os;
      os << "poorly identifiable: log-space Hessian condition " << *res.hessian_condition
         << ", weak direction (dlog c, dlog c_perp) = (" << d(0) << ", " << d(1) << ")";
      res.warnings.push_back(os.str());
    }
  }
  res.c = std::pow(10.0, lc);
  res.c_perp = std::pow(10.0, lp);
  res.objective = fbest;
  const double tol = 2.0 * opt.tolerance;
  if (lc - lc0 <= tol || lc1 - lc <= tol || lp - lp0 <= tol || lp1 - lp <= tol) {
    res.at_boundary = true;
    res.warnings.push_back("fitted coefficients are pinned at a search bound");
  }
  for (const auto& e : experiments) {
    ExperimentResidual r;
    r.label = e.label;
    r.input = extract_input(e.t, e.phi);
    r.residual = skid_objective({e}, p_template, opt, res.c, *res.c_perp);
    res.per_experiment.push_back(r);
  }
  return res;
}

}  // namespace twistcar
