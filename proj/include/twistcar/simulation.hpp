#ifndef TWISTCAR_SIMULATION_HPP
#define TWISTCAR_SIMULATION_HPP

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "twistcar/dynamics.hpp"
#include "twistcar/integrator.hpp"
#include "twistcar/params.hpp"

namespace twistcar {

struct SimOptions {
  double t_end = 20.0;
  double dt_out = 0.0;  // 0 selects one two-hundredth of an input period
  double rtol = 1e-9;
  double atol = 1e-11;
  bool project = true;  // velocity-level constraint projection (DAE only)
  double projection_threshold = 1e-10;
};

/// Uniformly sampled solution. `lambda` is empty for the skid model.
/// `net_work` is the integrated actuation power minus dissipated power, carried
/// as an extra integrator state so that energy balance can be checked exactly.
struct Trajectory {
  Model model = Model::Constrained;
  std::vector<double> t;
  std::vector<Eigen::Vector4d> q;
  std::vector<Eigen::Vector4d> qdot;
  std::vector<double> tau;
  std::vector<Eigen::Vector2d> lambda;
  std::vector<double> v_par;
  std::vector<double> v_perp;
  std::vector<double> net_work;
  std::string params_hash;
  IntegratorStats stats;

  std::size_t size() const { return t.size(); }
  double dt() const { return t.size() > 1 ? t[1] - t[0] : 0.0; }
};

/// Integrates the full model (constrained DAE, slope DAE or skid) from rest.
Trajectory simulate(const PhysicalParams& p, const InputSignal& u, Model model, const SimOptions& opt);

/// Integrates the reduced constrained model in the state (x, y, theta, v_par)
/// from rest. Torque and constraint forces are reconstructed per sample.
Trajectory simulate_reduced(const PhysicalParams& p, const InputSignal& u, const SimOptions& opt);

/// Dimensionless forward speed v(t) of the reduced model from v(0) = 0.
/// `u_nd` carries the dimensionless frequency; times are dimensionless.
OdeSolution<1> simulate_reduced_speed(const NondimParams& nd, const InputSignal& u_nd, double t_end,
                                      double dt_out, double rtol = 1e-10, double atol = 1e-13);

/// Minimal-norm velocity projection onto W(q) qdot = 0.
Eigen::Vector4d project_constraints(const Eigen::Vector4d& q, const Eigen::Vector4d& qdot, const PhysicalParams& p);

/// Projection that keeps the prescribed steering rate and corrects only the
/// passive velocities.
Eigen::Vector4d project_passive_velocities(const Eigen::Vector4d& q, const Eigen::Vector4d& qdot,
                                           const PhysicalParams& p);

double constraint_violation(const Eigen::Vector4d& q, const Eigen::Vector4d& qdot, const PhysicalParams& p);

struct EnergyReport {
  std::vector<double> kinetic;
  std::vector<double> potential;
  std::vector<double> rayleigh_power;  // 2R = qdot' C qdot
  std::vector<double> actuation_power;
  /// T + V - (T + V)(0) - net_work; zero for an exact solution.
  std::vector<double> balance_residual;

  double max_abs_residual() const;
};

EnergyReport energy_report(const Trajectory& traj, const PhysicalParams& p);

std::string params_fingerprint(const PhysicalParams& p);

/// Default output spacing: one two-hundredth of the input period.
inline double default_dt_out(const InputSignal& u) { return u.period() / 200.0; }

}  // namespace twistcar

#endif  // TWISTCAR_SIMULATION_HPP
