#ifndef TWISTCAR_DYNAMICS_HPP
#define TWISTCAR_DYNAMICS_HPP

#include <array>
#include <cmath>
#include <string_view>

#include <Eigen/Dense>

#include "twistcar/kinematics.hpp"
#include "twistcar/params.hpp"

namespace twistcar {

/// constrained: no-skid DAE. slope: the same DAE, named for runs on an
/// incline. skid: constraints replaced by lateral dissipation. Gravity enters
/// every variant whenever PhysicalParams::slope is nonzero.
enum class Model { Constrained, Skid, Slope };

std::string_view to_string(Model m);
Model model_from_string(std::string_view s);

template <typename Scalar>
using CenterOfMassJacobian = Eigen::Matrix<Scalar, 2, 4>;

template <typename Scalar>
struct MassMatrixPartials {
  Matrix4<Scalar> d_theta;
  Matrix4<Scalar> d_phi;
};

namespace detail {

// A point rigidly attached to link 1 at distance s from P1, or to link 2 at
// distance s from the joint.
template <typename Scalar>
CenterOfMassJacobian<Scalar> link1_point_jacobian(const Scalar& theta, double s) {
  CenterOfMassJacobian<Scalar> J = CenterOfMassJacobian<Scalar>::Zero();
  J(0, 0) = Scalar(1);
  J(1, 1) = Scalar(1);
  J.col(kTheta) = Scalar(s) * normal(theta);
  return J;
}

template <typename Scalar>
CenterOfMassJacobian<Scalar> link2_point_jacobian(const Scalar& theta, const Scalar& phi, double l1, double s) {
  CenterOfMassJacobian<Scalar> J = CenterOfMassJacobian<Scalar>::Zero();
  J(0, 0) = Scalar(1);
  J(1, 1) = Scalar(1);
  const Vector2<Scalar> n2 = Scalar(s) * normal(Scalar(theta + phi));
  J.col(kTheta) = Scalar(l1) * normal(theta) + n2;
  J.col(kPhi) = n2;
  return J;
}

template <typename Scalar>
void add_point_mass(Matrix4<Scalar>& M, double m, const CenterOfMassJacobian<Scalar>& J) {
  if (m != 0.0) M.noalias() += Scalar(m) * J.transpose() * J;
}

template <typename Scalar>
void add_point_mass_partial(Matrix4<Scalar>& dM, double m, const CenterOfMassJacobian<Scalar>& J,
                            const CenterOfMassJacobian<Scalar>& dJ) {
  if (m == 0.0) return;
  const Matrix4<Scalar> cross = Scalar(m) * dJ.transpose() * J;
  dM += cross + cross.transpose();
}

}  // namespace detail

/// M(q) = d^2 T / dqdot^2 for link 1 (plus point mass) and link 2.
template <typename Scalar>
Matrix4<Scalar> mass_matrix(const Vector4<Scalar>& q, const PhysicalParams& p) {
  const Scalar theta = q(kTheta);
  const Scalar phi = q(kPhi);
  Matrix4<Scalar> M = Matrix4<Scalar>::Zero();
  detail::add_point_mass(M, p.m1, detail::link1_point_jacobian(theta, p.b1));
  detail::add_point_mass(M, p.m0, detail::link1_point_jacobian(theta, p.b0));
  detail::add_point_mass(M, p.m2, detail::link2_point_jacobian(theta, phi, p.l1, p.b2));
  M(kTheta, kTheta) += Scalar(p.J1 + p.J2);
  M(kTheta, kPhi) += Scalar(p.J2);
  M(kPhi, kTheta) += Scalar(p.J2);
  M(kPhi, kPhi) += Scalar(p.J2);
  return M;
}

/// Closed-form dM/dtheta and dM/dphi; M does not depend on x or y.
template <typename Scalar>
MassMatrixPartials<Scalar> mass_matrix_partials(const Vector4<Scalar>& q, const PhysicalParams& p) {
  const Scalar theta = q(kTheta);
  const Scalar phi = q(kPhi);
  const Scalar psi = theta + phi;
  MassMatrixPartials<Scalar> out{Matrix4<Scalar>::Zero(), Matrix4<Scalar>::Zero()};

  auto link1 = [&](double m, double s) {
    CenterOfMassJacobian<Scalar> dJ = CenterOfMassJacobian<Scalar>::Zero();
    dJ.col(kTheta) = -Scalar(s) * heading(theta);
    detail::add_point_mass_partial(out.d_theta, m, detail::link1_point_jacobian(theta, s), dJ);
  };
  link1(p.m1, p.b1);
  link1(p.m0, p.b0);

  const CenterOfMassJacobian<Scalar> J2 = detail::link2_point_jacobian(theta, phi, p.l1, p.b2);
  const Vector2<Scalar> e2 = Scalar(p.b2) * heading(psi);
  CenterOfMassJacobian<Scalar> dJ_dtheta = CenterOfMassJacobian<Scalar>::Zero();
  dJ_dtheta.col(kTheta) = -Scalar(p.l1) * heading(theta) - e2;
  dJ_dtheta.col(kPhi) = -e2;
  CenterOfMassJacobian<Scalar> dJ_dphi = CenterOfMassJacobian<Scalar>::Zero();
  dJ_dphi.col(kTheta) = -e2;
  dJ_dphi.col(kPhi) = -e2;
  detail::add_point_mass_partial(out.d_theta, p.m2, J2, dJ_dtheta);
  detail::add_point_mass_partial(out.d_phi, p.m2, J2, dJ_dphi);
  return out;
}

/// Coriolis/centrifugal vector B = (dM/dt) qdot - dT/dq, assembled from the
/// Christoffel symbols of M.
template <typename Scalar>
Vector4<Scalar> bias_vector(const Vector4<Scalar>& q, const Vector4<Scalar>& qdot, const PhysicalParams& p) {
  const MassMatrixPartials<Scalar> dM = mass_matrix_partials(q, p);
  const Vector4<Scalar> dMt_qd = dM.d_theta * qdot;
  const Vector4<Scalar> dMp_qd = dM.d_phi * qdot;
  Vector4<Scalar> B = qdot(kTheta) * dMt_qd + qdot(kPhi) * dMp_qd;
  B(kTheta) -= Scalar(0.5) * qdot.dot(dMt_qd);
  B(kPhi) -= Scalar(0.5) * qdot.dot(dMp_qd);
  return B;
}

/// C_total with D = C_total qdot and R = qdot' C_total qdot / 2.
/// The skid model adds c_perp times the lateral Jacobians and requires c_perp.
template <typename Scalar>
Matrix4<Scalar> dissipation_matrix(const Vector4<Scalar>& q, const PhysicalParams& p, Model model) {
  const WheelJacobians<Scalar> Jr = roll_jacobians(q, p);
  Matrix4<Scalar> C = Scalar(p.c) * Jr.transpose() * Jr;
  if (model == Model::Skid) {
    if (!p.c_perp) throw ValidationError("skid model requires physical.c_perp");
    const WheelJacobians<Scalar> Js = skid_jacobians(q, p);
    C += Scalar(*p.c_perp) * Js.transpose() * Js;
  }
  return C;
}

template <typename Scalar>
Vector4<Scalar> dissipation_vector(const Vector4<Scalar>& q, const Vector4<Scalar>& qdot, const PhysicalParams& p,
                                   Model model) {
  return dissipation_matrix(q, p, model) * qdot;
}

/// dV/dq for a plane inclined by p.slope along the world x axis.
template <typename Scalar>
Vector4<Scalar> gravity_vector(const Vector4<Scalar>& q, const PhysicalParams& p) {
  using std::sin;
  const double gs = p.g * std::sin(p.slope);
  const Scalar theta = q(kTheta);
  const Scalar psi = q(kTheta) + q(kPhi);
  Vector4<Scalar> G;
  G(kX) = Scalar(-gs * (p.m0 + p.m1 + p.m2));
  G(kY) = Scalar(0);
  G(kTheta) = Scalar(gs * (p.b1 * p.m1 + p.b0 * p.m0 + p.l1 * p.m2)) * sin(theta) +
              Scalar(gs * p.b2 * p.m2) * sin(psi);
  G(kPhi) = Scalar(gs * p.b2 * p.m2) * sin(psi);
  return G;
}

template <typename Scalar>
Scalar kinetic_energy(const Vector4<Scalar>& q, const Vector4<Scalar>& qdot, const PhysicalParams& p) {
  return Scalar(0.5) * qdot.dot(mass_matrix(q, p) * qdot);
}

/// V = g . sum(m r_c) with g = g (-sin(slope), 0); zero on level ground.
template <typename Scalar>
Scalar potential_energy(const Vector4<Scalar>& q, const PhysicalParams& p) {
  using std::cos;
  const double gs = p.g * std::sin(p.slope);
  const Scalar x1 = q(kX) + Scalar(p.b1) * cos(q(kTheta));
  const Scalar x0 = q(kX) + Scalar(p.b0) * cos(q(kTheta));
  const Scalar x2 = q(kX) + Scalar(p.l1) * cos(q(kTheta)) + Scalar(p.b2) * cos(q(kTheta) + q(kPhi));
  return Scalar(-gs) * (Scalar(p.m1) * x1 + Scalar(p.m0) * x0 + Scalar(p.m2) * x2);
}

/// Prescribed steering (phi, phidot, phiddot) at one instant.
struct SteeringState {
  double phi = 0.0;
  double phidot = 0.0;
  double phiddot = 0.0;

  static SteeringState at(const InputSignal& u, double t) { return {u.phi(t), u.phidot(t), u.phiddot(t)}; }
};

struct DaeOutput {
  Eigen::Vector3d qpp_passive;  // (xddot, yddot, thetaddot)
  double tau = 0.0;
  Eigen::Vector2d lambda;
};

struct SkidOutput {
  Eigen::Vector3d qpp_passive;
  double tau = 0.0;
};

/// Solves the 6x6 block system for passive accelerations, steering torque and
/// constraint forces.
/// q and qdot carry the prescribed phi and phidot in their last entry.
DaeOutput solve_constrained(const Eigen::Vector4d& q, const Eigen::Vector4d& qdot, double phiddot,
                            const PhysicalParams& p);

/// Unconstrained equations with lateral dissipation; solves for passive
/// accelerations and torque.
SkidOutput solve_skid(const Eigen::Vector4d& q, const Eigen::Vector4d& qdot, double phiddot, const PhysicalParams& p);

/// Residual M qddot + B + D + G - F - W' Lambda of the full equations.
Eigen::Vector4d equation_residual(const Eigen::Vector4d& q, const Eigen::Vector4d& qdot, const Eigen::Vector4d& qddot,
                                  double tau, const Eigen::Vector2d& lambda, const PhysicalParams& p, Model model);

/// Passive state (x, y, theta, xdot, ydot, thetadot).
using PassiveState = Eigen::Matrix<double, 6, 1>;

Eigen::Vector4d full_coordinates(const PassiveState& y, const SteeringState& s);
Eigen::Vector4d full_velocities(const PassiveState& y, const SteeringState& s);

/// dy/dt of the passive state for the DAE model under input u.
PassiveState dae_rhs(double t, const PassiveState& y, const InputSignal& u, const PhysicalParams& p);

/// Full DAE output at (t, y).
DaeOutput dae_output(double t, const PassiveState& y, const InputSignal& u, const PhysicalParams& p);

PassiveState skid_rhs(double t, const PassiveState& y, const InputSignal& u, const PhysicalParams& p);
SkidOutput skid_output(double t, const PassiveState& y, const InputSignal& u, const PhysicalParams& p);

/// Forward acceleration dv/dt of the reduced constrained model at pose q with
/// forward speed v and prescribed steering. Dimensional.
double reduced_acceleration(const Eigen::Vector4d& q, double v, double phidot, double phiddot,
                            const PhysicalParams& p);

/// Reduced equations M_r, B_r, D_r (and S' G) at pose q, velocity v_r.
struct ReducedTerms {
  Eigen::Matrix2d M_r;
  Eigen::Vector2d B_r;
  Eigen::Vector2d D_r;
  Eigen::Vector2d G_r;
};
ReducedTerms reduced_terms(const Eigen::Vector4d& q, const Eigen::Vector2d& v_r, const PhysicalParams& p);

/// Dimensionless dv/dt on level ground. `u_nd` carries the dimensionless
/// frequency (see nondimensionalize).
double reduced_rhs(double t, double v, const InputSignal& u_nd, const NondimParams& nd);

/// Same as reduced_rhs for a given steering state, parameters pre-scaled with
/// unit_scaled(nd).
double reduced_rhs(double v, const SteeringState& s, const PhysicalParams& unit);

/// Reduced state (x, y, theta, v_par) for pose reconstruction.
using ReducedState = Eigen::Vector4d;
ReducedState reduced_state_rhs(double t, const ReducedState& y, const InputSignal& u, const PhysicalParams& p);

}  // namespace twistcar

#endif  // TWISTCAR_DYNAMICS_HPP
