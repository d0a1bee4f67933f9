#include "twistcar/simulation.hpp"

#include <cmath>
#include <cstdint>
#include <iomanip>
#include <sstream>

#include "twistcar/error.hpp"
#include "twistcar/kinematics.hpp"

namespace twistcar {

namespace {

using FullState = Eigen::Matrix<double, 7, 1>;     // x, y, theta, xdot, ydot, thetadot, net work
using ReducedAug = Eigen::Matrix<double, 5, 1>;    // x, y, theta, v_par, net work

Model dissipation_model(Model m) { return m == Model::Skid ? Model::Skid : Model::Constrained; }

void check_inputs(const PhysicalParams& p, const InputSignal& u, Model model, const SimOptions& opt) {
  p.validate();
  u.validate();
  if (model == Model::Skid && !p.c_perp) throw ValidationError("skid model requires physical.c_perp");
  if (model != Model::Skid) u.check_steering_range(p.l1, p.l2);
  if (!(opt.t_end >= 0.0) || !std::isfinite(opt.t_end)) throw ValidationError("sim.t_end must be >= 0");
}

IntegratorOptions integrator_options(const InputSignal& u, const SimOptions& opt) {
  IntegratorOptions io;
  io.rtol = opt.rtol;
  io.atol = opt.atol;
  io.dt_out = opt.dt_out > 0.0 ? opt.dt_out : default_dt_out(u);
  return io;
}

void push_sample(Trajectory& traj, double t, const Eigen::Vector4d& q, const Eigen::Vector4d& qdot, double tau,
                 const Eigen::Vector2d* lambda, double work) {
  traj.t.push_back(t);
  traj.q.push_back(q);
  traj.qdot.push_back(qdot);
  traj.tau.push_back(tau);
  if (lambda) traj.lambda.push_back(*lambda);
  const Eigen::Vector2d vb = body_velocity(q, qdot);
  traj.v_par.push_back(vb(0));
  traj.v_perp.push_back(vb(1));
  traj.net_work.push_back(work);
}

}  // namespace

Eigen::Vector4d project_constraints(const Eigen::Vector4d& q, const Eigen::Vector4d& qdot, const PhysicalParams& p) {
  const ConstraintMatrix<double> W = constraint_matrix(q, p);
  const Eigen::Matrix2d WWt = W * W.transpose();
  Eigen::FullPivLU<Eigen::Matrix2d> lu(WWt);
  if (!lu.isInvertible()) throw NumericalError("project_constraints: W W' is singular");
  return qdot - W.transpose() * lu.solve(W * qdot);
}

Eigen::Vector4d project_passive_velocities(const Eigen::Vector4d& q, const Eigen::Vector4d& qdot,
                                           const PhysicalParams& p) {
  const ConstraintMatrix<double> W = constraint_matrix(q, p);
  const Eigen::Matrix<double, 2, 3> Wp = W.leftCols<3>();
  const Eigen::Matrix2d WWt = Wp * Wp.transpose();
  Eigen::FullPivLU<Eigen::Matrix2d> lu(WWt);
  if (!lu.isInvertible()) throw NumericalError("project_passive_velocities: W_p W_p' is singular");
  Eigen::Vector4d out = qdot;
  out.head<3>() -= Wp.transpose() * lu.solve(W * qdot);
  return out;
}

double constraint_violation(const Eigen::Vector4d& q, const Eigen::Vector4d& qdot, const PhysicalParams& p) {
  return (constraint_matrix(q, p) * qdot).norm();
}

Trajectory simulate(const PhysicalParams& p, const InputSignal& u, Model model, const SimOptions& opt) {
  check_inputs(p, u, model, opt);
  const IntegratorOptions io = integrator_options(u, opt);
  const Model diss = dissipation_model(model);
  const bool constrained = model != Model::Skid;

  auto rhs = [&](double t, const FullState& y) {
    const SteeringState s = SteeringState::at(u, t);
    const PassiveState ps = y.head<6>();
    const Eigen::Vector4d q = full_coordinates(ps, s);
    const Eigen::Vector4d qd = full_velocities(ps, s);
    FullState dy;
    dy.head<3>() = y.segment<3>(3);
    double tau = 0.0;
    if (constrained) {
      const DaeOutput out = solve_constrained(q, qd, s.phiddot, p);
      dy.segment<3>(3) = out.qpp_passive;
      tau = out.tau;
    } else {
      const SkidOutput out = solve_skid(q, qd, s.phiddot, p);
      dy.segment<3>(3) = out.qpp_passive;
      tau = out.tau;
    }
    dy(6) = tau * s.phidot - qd.dot(dissipation_matrix(q, p, diss) * qd);
    return dy;
  };

  auto project = [&](double t, FullState& y) {
    if (!constrained || !opt.project) return false;
    const SteeringState s = SteeringState::at(u, t);
    const Eigen::Vector4d q = full_coordinates(PassiveState(y.head<6>()), s);
    const Eigen::Vector4d qd = full_velocities(PassiveState(y.head<6>()), s);
    if (constraint_violation(q, qd, p) <= opt.projection_threshold) return false;
    y.segment<3>(3) = project_passive_velocities(q, qd, p).head<3>();
    return true;
  };

  const OdeSolution<7> sol = integrate<7>(rhs, 0.0, opt.t_end, FullState::Zero(), io, project);

  Trajectory traj;
  traj.model = model;
  traj.params_hash = params_fingerprint(p);
  traj.stats = sol.stats;
  for (std::size_t i = 0; i < sol.t.size(); ++i) {
    const double t = sol.t[i];
    const SteeringState s = SteeringState::at(u, t);
    const PassiveState ps = sol.y[i].head<6>();
    const Eigen::Vector4d q = full_coordinates(ps, s);
    const Eigen::Vector4d qd = full_velocities(ps, s);
    if (constrained) {
      const DaeOutput out = solve_constrained(q, qd, s.phiddot, p);
      push_sample(traj, t, q, qd, out.tau, &out.lambda, sol.y[i](6));
    } else {
      const SkidOutput out = solve_skid(q, qd, s.phiddot, p);
      push_sample(traj, t, q, qd, out.tau, nullptr, sol.y[i](6));
    }
  }
  return traj;
}

Trajectory simulate_reduced(const PhysicalParams& p, const InputSignal& u, const SimOptions& opt) {
  check_inputs(p, u, Model::Constrained, opt);
  u.check_steering_range(p.l1, p.l2);
  const IntegratorOptions io = integrator_options(u, opt);

  struct Eval {
    Eigen::Vector4d q, qdot;
    double vdot, tau;
  };
  auto evaluate = [&](double t, const ReducedAug& y) {
    const SteeringState s = SteeringState::at(u, t);
    Eval e;
    e.q = Eigen::Vector4d(y(0), y(1), y(2), s.phi);
    const Eigen::Vector2d v_r(y(3), s.phidot);
    e.qdot = reduction_matrix(e.q, p) * v_r;
    const ReducedTerms r = reduced_terms(e.q, v_r, p);
    e.vdot = -(r.M_r(0, 1) * s.phiddot + r.B_r(0) + r.D_r(0) + r.G_r(0)) / r.M_r(0, 0);
    e.tau = r.M_r(1, 0) * e.vdot + r.M_r(1, 1) * s.phiddot + r.B_r(1) + r.D_r(1) + r.G_r(1);
    return e;
  };

  auto rhs = [&](double t, const ReducedAug& y) {
    const Eval e = evaluate(t, y);
    ReducedAug dy;
    dy.head<3>() = e.qdot.head<3>();
    dy(3) = e.vdot;
    dy(4) = e.tau * e.qdot(kPhi) - e.qdot.dot(dissipation_matrix(e.q, p, Model::Constrained) * e.qdot);
    return dy;
  };

  const OdeSolution<5> sol = integrate<5>(rhs, 0.0, opt.t_end, ReducedAug::Zero(), io);

  Trajectory traj;
  traj.model = Model::Constrained;
  traj.params_hash = params_fingerprint(p);
  traj.stats = sol.stats;
  for (std::size_t i = 0; i < sol.t.size(); ++i) {
    const Eval e = evaluate(sol.t[i], sol.y[i]);
    const double phiddot = u.phiddot(sol.t[i]);
    const DaeOutput out = solve_constrained(e.q, e.qdot, phiddot, p);
    push_sample(traj, sol.t[i], e.q, e.qdot, e.tau, &out.lambda, sol.y[i](4));
  }
  return traj;
}

OdeSolution<1> simulate_reduced_speed(const NondimParams& nd, const InputSignal& u_nd, double t_end, double dt_out,
                                      double rtol, double atol) {
  const PhysicalParams unit = unit_scaled(nd);
  u_nd.check_steering_range(unit.l1, unit.l2);
  IntegratorOptions io;
  io.rtol = rtol;
  io.atol = atol;
  io.dt_out = dt_out;
  auto rhs = [&](double t, const Eigen::Matrix<double, 1, 1>& y) {
    Eigen::Matrix<double, 1, 1> dy;
    dy(0) = reduced_rhs(y(0), SteeringState::at(u_nd, t), unit);
    return dy;
  };
  return integrate<1>(rhs, 0.0, t_end, Eigen::Matrix<double, 1, 1>::Zero(), io);
}

double EnergyReport::max_abs_residual() const {
  double m = 0.0;
  for (double r : balance_residual) m = std::max(m, std::abs(r));
  return m;
}

EnergyReport energy_report(const Trajectory& traj, const PhysicalParams& p) {
  EnergyReport rep;
  const Model diss = dissipation_model(traj.model);
  const std::size_t n = traj.size();
  rep.kinetic.reserve(n);
  rep.potential.reserve(n);
  rep.rayleigh_power.reserve(n);
  rep.actuation_power.reserve(n);
  rep.balance_residual.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    const Eigen::Vector4d& q = traj.q[i];
    const Eigen::Vector4d& qd = traj.qdot[i];
    rep.kinetic.push_back(kinetic_energy(q, qd, p));
    rep.potential.push_back(potential_energy(q, p));
    rep.rayleigh_power.push_back(qd.dot(dissipation_matrix(q, p, diss) * qd));
    rep.actuation_power.push_back(traj.tau[i] * qd(kPhi));
  }
  for (std::size_t i = 0; i < n; ++i) {
    const double e = rep.kinetic[i] + rep.potential[i] - rep.kinetic[0] - rep.potential[0];
    rep.balance_residual.push_back(e - (traj.net_work[i] - traj.net_work[0]));
  }
  return rep;
}

std::string params_fingerprint(const PhysicalParams& p) {
  std::ostringstream os;
  os << std::setprecision(17) << p.m0 << ',' << p.b0 << ',' << p.m1 << ',' << p.m2 << ',' << p.l1 << ',' << p.l2
     << ',' << p.b1 << ',' << p.b2 << ',' << p.J1 << ',' << p.J2 << ',' << p.d << ',' << p.c << ','
     << (p.c_perp ? *p.c_perp : -1.0) << ',' << p.slope << ',' << p.g;
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char ch : os.str()) {
    h ^= ch;
    h *= 1099511628211ULL;
  }
  std::ostringstream hex;
  hex << std::hex << std::setw(16) << std::setfill('0') << h;
  return hex.str();
}

}  // namespace twistcar
