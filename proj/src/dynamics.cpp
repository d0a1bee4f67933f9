#include "twistcar/dynamics.hpp"

#include <sstream>
#include <string>

#include "twistcar/error.hpp"

namespace twistcar {

std::string_view to_string(Model m) {
  switch (m) {
    case Model::Constrained:
      return "constrained";
    case Model::Skid:
      return "skid";
    case Model::Slope:
      return "slope";
  }
  return "constrained";
}

Model model_from_string(std::string_view s) {
  if (s == "constrained") return Model::Constrained;
  if (s == "skid") return Model::Skid;
  if (s == "slope") return Model::Slope;
  throw ValidationError("model must be one of constrained|skid|slope, got '" + std::string(s) + "'");
}

namespace {

Eigen::Vector4d applied_gravity(const Eigen::Vector4d& q, const PhysicalParams& p) {
  if (p.slope != 0.0) return gravity_vector(q, p);
  return Eigen::Vector4d::Zero();
}

}  // namespace

DaeOutput solve_constrained(const Eigen::Vector4d& q, const Eigen::Vector4d& qdot, double phiddot,
                            const PhysicalParams& p) {
  const Eigen::Matrix4d M = mass_matrix(q, p);
  const Eigen::Vector4d h = bias_vector(q, qdot, p) + dissipation_vector(q, qdot, p, Model::Constrained) +
                            applied_gravity(q, p);
  const ConstraintMatrix<double> W = constraint_matrix(q, p);
  const ConstraintMatrix<double> Wdot = constraint_matrix_dot(q, qdot, p);

  Eigen::Matrix<double, 6, 6> A = Eigen::Matrix<double, 6, 6>::Zero();
  A.topLeftCorner<3, 3>() = M.topLeftCorner<3, 3>();
  A.block<3, 2>(0, 4) = -W.leftCols<3>().transpose();
  A.block<1, 3>(3, 0) = M.block<3, 1>(0, 3).transpose();
  A(3, 3) = -1.0;
  A.block<1, 2>(3, 4) = -W.col(3).transpose();
  A.block<2, 3>(4, 0) = W.leftCols<3>();

  Eigen::Matrix<double, 6, 1> rhs;
  rhs.head<3>() = M.block<3, 1>(0, 3) * phiddot + h.head<3>();
  rhs(3) = M(3, 3) * phiddot + h(3);
  rhs.tail<2>() = W.col(3) * phiddot + Wdot * qdot;
  rhs = -rhs;

  Eigen::PartialPivLU<Eigen::Matrix<double, 6, 6>> lu(A);
  const double rcond = lu.rcond();
  if (!(rcond > 1e-14)) {
    std::ostringstream os;
    os << "constrained equations singular (reciprocal condition estimate " << rcond << ")";
    throw NumericalError(os.str());
  }
  const Eigen::Matrix<double, 6, 1> sol = lu.solve(rhs);
  return {sol.head<3>(), sol(3), sol.tail<2>()};
}

SkidOutput solve_skid(const Eigen::Vector4d& q, const Eigen::Vector4d& qdot, double phiddot,
                      const PhysicalParams& p) {
  const Eigen::Matrix4d M = mass_matrix(q, p);
  const Eigen::Vector4d h =
      bias_vector(q, qdot, p) + dissipation_vector(q, qdot, p, Model::Skid) + applied_gravity(q, p);

  Eigen::Matrix4d A = Eigen::Matrix4d::Zero();
  A.topLeftCorner<3, 3>() = M.topLeftCorner<3, 3>();
  A.block<1, 3>(3, 0) = M.block<3, 1>(0, 3).transpose();
  A(3, 3) = -1.0;
  const Eigen::Vector4d rhs = -(M.col(3) * phiddot + h);

  Eigen::PartialPivLU<Eigen::Matrix4d> lu(A);
  const double rcond = lu.rcond();
  if (!(rcond > 1e-14)) {
    std::ostringstream os;
    os << "skid equations singular (reciprocal condition estimate " << rcond << ")";
    throw NumericalError(os.str());
  }
  const Eigen::Vector4d sol = lu.solve(rhs);
  return {sol.head<3>(), sol(3)};
}

Eigen::Vector4d equation_residual(const Eigen::Vector4d& q, const Eigen::Vector4d& qdot, const Eigen::Vector4d& qddot,
                                  double tau, const Eigen::Vector2d& lambda, const PhysicalParams& p, Model model) {
  const Model dissipation = model == Model::Skid ? Model::Skid : Model::Constrained;
  Eigen::Vector4d r = mass_matrix(q, p) * qddot + bias_vector(q, qdot, p) +
                      dissipation_vector(q, qdot, p, dissipation) +
                      applied_gravity(q, p);
  r(kPhi) -= tau;
  if (model != Model::Skid) r -= constraint_matrix(q, p).transpose() * lambda;
  return r;
}

Eigen::Vector4d full_coordinates(const PassiveState& y, const SteeringState& s) {
  return {y(0), y(1), y(2), s.phi};
}

Eigen::Vector4d full_velocities(const PassiveState& y, const SteeringState& s) {
  return {y(3), y(4), y(5), s.phidot};
}

DaeOutput dae_output(double t, const PassiveState& y, const InputSignal& u, const PhysicalParams& p) {
  const SteeringState s = SteeringState::at(u, t);
  return solve_constrained(full_coordinates(y, s), full_velocities(y, s), s.phiddot, p);
}

PassiveState dae_rhs(double t, const PassiveState& y, const InputSignal& u, const PhysicalParams& p) {
  const DaeOutput out = dae_output(t, y, u, p);
  PassiveState dy;
  dy.head<3>() = y.tail<3>();
  dy.tail<3>() = out.qpp_passive;
  return dy;
}

SkidOutput skid_output(double t, const PassiveState& y, const InputSignal& u, const PhysicalParams& p) {
  const SteeringState s = SteeringState::at(u, t);
  return solve_skid(full_coordinates(y, s), full_velocities(y, s), s.phiddot, p);
}

PassiveState skid_rhs(double t, const PassiveState& y, const InputSignal& u, const PhysicalParams& p) {
  const SkidOutput out = skid_output(t, y, u, p);
  PassiveState dy;
  dy.head<3>() = y.tail<3>();
  dy.tail<3>() = out.qpp_passive;
  return dy;
}

ReducedTerms reduced_terms(const Eigen::Vector4d& q, const Eigen::Vector2d& v_r, const PhysicalParams& p) {
  const ReductionMatrix<double> S = reduction_matrix(q, p);
  const Eigen::Vector4d qdot = S * v_r;
  const Eigen::Matrix4d M = mass_matrix(q, p);
  ReducedTerms r;
  r.M_r = S.transpose() * M * S;
  r.B_r = S.transpose() * (M * reduction_matrix_dot_times(q, v_r, p) + bias_vector(q, qdot, p));
  r.D_r = S.transpose() * dissipation_vector(q, qdot, p, Model::Constrained);
  r.G_r = S.transpose() * applied_gravity(q, p);
  return r;
}

double reduced_acceleration(const Eigen::Vector4d& q, double v, double phidot, double phiddot,
                            const PhysicalParams& p) {
  const ReducedTerms r = reduced_terms(q, Eigen::Vector2d(v, phidot), p);
  return -(r.M_r(0, 1) * phiddot + r.B_r(0) + r.D_r(0) + r.G_r(0)) / r.M_r(0, 0);
}

double reduced_rhs(double v, const SteeringState& s, const PhysicalParams& unit) {
  // On level ground the forward-speed equation is invariant under planar
  // rigid motions.
  PhysicalParams level = unit;
  level.slope = 0.0;
  return reduced_acceleration(Eigen::Vector4d(0.0, 0.0, 0.0, s.phi), v, s.phidot, s.phiddot, level);
}

double reduced_rhs(double t, double v, const InputSignal& u_nd, const NondimParams& nd) {
  return reduced_rhs(v, SteeringState::at(u_nd, t), unit_scaled(nd));
}

ReducedState reduced_state_rhs(double t, const ReducedState& y, const InputSignal& u, const PhysicalParams& p) {
  const SteeringState s = SteeringState::at(u, t);
  const Eigen::Vector4d q(y(0), y(1), y(2), s.phi);
  const Eigen::Vector4d qdot = reduction_matrix(q, p) * Eigen::Vector2d(y(3), s.phidot);
  ReducedState dy;
  dy.head<3>() = qdot.head<3>();
  dy(3) = reduced_acceleration(q, y(3), s.phidot, s.phiddot, p);
  return dy;
}

}  // namespace twistcar
