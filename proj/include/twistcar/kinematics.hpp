#ifndef TWISTCAR_KINEMATICS_HPP
#define TWISTCAR_KINEMATICS_HPP

#include <array>
#include <cmath>
#include <sstream>
#include <type_traits>

#include <Eigen/Dense>

#include "twistcar/error.hpp"
#include "twistcar/params.hpp"

namespace twistcar {

template <typename Scalar>
using Vector2 = Eigen::Matrix<Scalar, 2, 1>;
template <typename Scalar>
using Vector4 = Eigen::Matrix<Scalar, 4, 1>;
template <typename Scalar>
using Matrix4 = Eigen::Matrix<Scalar, 4, 4>;
template <typename Scalar>
using ConstraintMatrix = Eigen::Matrix<Scalar, 2, 4>;
template <typename Scalar>
using WheelJacobians = Eigen::Matrix<Scalar, 3, 4>;
template <typename Scalar>
using ReductionMatrix = Eigen::Matrix<Scalar, 4, 2>;

// Generalized coordinates are ordered (x, y, theta, phi); (x, y) is P1.
enum Coordinate : int { kX = 0, kY = 1, kTheta = 2, kPhi = 3 };

// Wheel order used by every per-wheel quantity.
enum Wheel : int { kRearLeft = 0, kRearRight = 1, kFront = 2 };

/// Reduction tolerance on l2 + l1 cos(phi), relative to l1.
inline constexpr double kSingularityTolerance = 1e-6;

namespace detail {

template <typename Scalar>
double value_of(const Scalar& s) {
  if constexpr (std::is_arithmetic_v<Scalar>) {
    return static_cast<double>(s);
  } else {
    return value_of(s.value());
  }
}

}  // namespace detail

/// Unit vector along angle a.
template <typename Scalar>
Vector2<Scalar> heading(const Scalar& a) {
  using std::cos;
  using std::sin;
  return Vector2<Scalar>(cos(a), sin(a));
}

/// Unit vector along a + pi/2.
template <typename Scalar>
Vector2<Scalar> normal(const Scalar& a) {
  using std::cos;
  using std::sin;
  return Vector2<Scalar>(-sin(a), cos(a));
}

template <typename Scalar>
struct WheelGeometry {
  std::array<Vector2<Scalar>, 3> position;
  std::array<Vector2<Scalar>, 3> roll_direction;
  std::array<Vector2<Scalar>, 3> lateral_direction;
};

/// Contact points and rolling/lateral directions of the three wheels.
/// Rear-left sits at P1 + d n(theta), rear-right at P1 - d n(theta), and the
/// front wheel at the tip of link 2.
template <typename Scalar>
WheelGeometry<Scalar> wheel_geometry(const Vector4<Scalar>& q, const PhysicalParams& p) {
  const Scalar theta = q(kTheta);
  const Scalar psi = q(kTheta) + q(kPhi);
  const Vector2<Scalar> p1(q(kX), q(kY));
  const Vector2<Scalar> joint = p1 + Scalar(p.l1) * heading(theta);

  WheelGeometry<Scalar> w;
  w.position[kRearLeft] = p1 + Scalar(p.d) * normal(theta);
  w.position[kRearRight] = p1 - Scalar(p.d) * normal(theta);
  w.position[kFront] = joint + Scalar(p.l2) * heading(psi);
  w.roll_direction = {heading(theta), heading(theta), heading(psi)};
  w.lateral_direction = {normal(theta), normal(theta), normal(psi)};
  return w;
}

/// No-skid constraint matrix W(q); rows are the lateral velocities of the rear
/// axle and of the front wheel.
template <typename Scalar>
ConstraintMatrix<Scalar> constraint_matrix(const Vector4<Scalar>& q, const PhysicalParams& p) {
  using std::cos;
  using std::sin;
  const Scalar theta = q(kTheta);
  const Scalar phi = q(kPhi);
  ConstraintMatrix<Scalar> W;
  W << -sin(theta), cos(theta), Scalar(0), Scalar(0),
      -sin(theta + phi), cos(theta + phi), Scalar(p.l2) + Scalar(p.l1) * cos(phi), Scalar(p.l2);
  return W;
}

template <typename Scalar>
ConstraintMatrix<Scalar> constraint_matrix_dot(const Vector4<Scalar>& q, const Vector4<Scalar>& qdot,
                                               const PhysicalParams& p) {
  using std::cos;
  using std::sin;
  const Scalar theta = q(kTheta);
  const Scalar psi = q(kTheta) + q(kPhi);
  const Scalar thetadot = qdot(kTheta);
  const Scalar psidot = qdot(kTheta) + qdot(kPhi);
  ConstraintMatrix<Scalar> Wdot;
  Wdot << -cos(theta) * thetadot, -sin(theta) * thetadot, Scalar(0), Scalar(0),
      -cos(psi) * psidot, -sin(psi) * psidot, -Scalar(p.l1) * sin(q(kPhi)) * qdot(kPhi), Scalar(0);
  return Wdot;
}

/// Rows map qdot to each wheel's speed along its rolling direction.
template <typename Scalar>
WheelJacobians<Scalar> roll_jacobians(const Vector4<Scalar>& q, const PhysicalParams& p) {
  using std::cos;
  using std::sin;
  const Scalar theta = q(kTheta);
  const Scalar psi = q(kTheta) + q(kPhi);
  const Scalar d(p.d);
  WheelJacobians<Scalar> J;
  J << cos(theta), sin(theta), -d, Scalar(0),
      cos(theta), sin(theta), d, Scalar(0),
      cos(psi), sin(psi), Scalar(p.l1) * sin(q(kPhi)), Scalar(0);
  return J;
}

/// Rows map qdot to each wheel's lateral (skid) speed. Both rear wheels share
/// the rear-axle row; the front row equals the second constraint row.
template <typename Scalar>
WheelJacobians<Scalar> skid_jacobians(const Vector4<Scalar>& q, const PhysicalParams& p) {
  const ConstraintMatrix<Scalar> W = constraint_matrix(q, p);
  WheelJacobians<Scalar> J;
  J.row(kRearLeft) = W.row(0);
  J.row(kRearRight) = W.row(0);
  J.row(kFront) = W.row(1);
  return J;
}

enum class BodyTransformConvention {
  Rotation,     // ydot = sin(theta) v_par + cos(theta) v_perp
  PrintedSign,  // ydot = sin(theta) v_par - cos(theta) v_perp
};

/// qdot = R_b v_b with v_b = (v_par, v_perp, thetadot, phidot).
template <typename Scalar>
Matrix4<Scalar> body_transform(const Scalar& theta,
                               BodyTransformConvention convention = BodyTransformConvention::Rotation) {
  using std::cos;
  using std::sin;
  Matrix4<Scalar> R = Matrix4<Scalar>::Identity();
  R(0, 0) = cos(theta);
  R(0, 1) = -sin(theta);
  R(1, 0) = sin(theta);
  R(1, 1) = convention == BodyTransformConvention::Rotation ? Scalar(cos(theta)) : Scalar(-cos(theta));
  return R;
}

template <typename Scalar>
void check_steering_singularity(const Scalar& phi, const PhysicalParams& p) {
  const double den = p.l2 + p.l1 * std::cos(detail::value_of(phi));
  if (!(den > kSingularityTolerance * p.l1)) {
    std::ostringstream os;
    os << "steering geometry degenerate: l2 + l1 cos(phi) = " << den
       << " at phi = " << detail::value_of(phi);
    throw SingularityError(os.str());
  }
}

/// Body-frame reduction v_b = S_r(phi) v_r with v_r = (v_par, phidot).
template <typename Scalar>
ReductionMatrix<Scalar> body_reduction_matrix(const Scalar& phi, const PhysicalParams& p) {
  using std::cos;
  using std::sin;
  check_steering_singularity(phi, p);
  const Scalar den = Scalar(p.l2) + Scalar(p.l1) * cos(phi);
  ReductionMatrix<Scalar> Sr = ReductionMatrix<Scalar>::Zero();
  Sr(0, 0) = Scalar(1);
  Sr(2, 0) = sin(phi) / den;
  Sr(2, 1) = -Scalar(p.l2) / den;
  Sr(3, 1) = Scalar(1);
  return Sr;
}

/// qdot = S(q) v_r, S = R_b(theta) S_r(phi). W(q) S(q) = 0 identically.
template <typename Scalar>
ReductionMatrix<Scalar> reduction_matrix(const Vector4<Scalar>& q, const PhysicalParams& p,
                                         BodyTransformConvention convention = BodyTransformConvention::Rotation) {
  return body_transform(q(kTheta), convention) * body_reduction_matrix(q(kPhi), p);
}

/// d/dt S(q) v_r along the constrained motion.
template <typename Scalar>
Vector4<Scalar> reduction_matrix_dot_times(const Vector4<Scalar>& q, const Eigen::Matrix<Scalar, 2, 1>& v_r,
                                           const PhysicalParams& p) {
  using std::cos;
  using std::sin;
  const Scalar theta = q(kTheta);
  const Scalar phi = q(kPhi);
  check_steering_singularity(phi, p);
  const Scalar l1(p.l1);
  const Scalar l2(p.l2);
  const Scalar den = l2 + l1 * cos(phi);
  const Scalar v = v_r(0);
  const Scalar phidot = v_r(1);
  const Scalar thetadot = (sin(phi) * v - l2 * phidot) / den;

  // theta-derivative of the rotation block acting on (v_par, 0).
  Vector4<Scalar> out = Vector4<Scalar>::Zero();
  out(0) = -sin(theta) * v * thetadot;
  out(1) = cos(theta) * v * thetadot;
  // phi-derivative of the third row of S_r.
  out(2) = phidot * ((l2 * cos(phi) + l1) * v - l2 * l1 * sin(phi) * phidot) / (den * den);
  return out;
}

/// Dimensionless yaw rate recovered from the forward speed and steering rate.
inline double recover_thetadot(double v, double phi, double phidot, const NondimParams& nd) {
  const double den = nd.alpha + std::cos(phi);
  if (!(den > kSingularityTolerance)) {
    std::ostringstream os;
    os << "steering geometry degenerate: alpha + cos(phi) = " << den << " at phi = " << phi;
    throw SingularityError(os.str());
  }
  return std::sin(phi) / den * v - nd.alpha / den * phidot;
}

/// Body-frame forward and lateral velocity of P1.
template <typename Scalar>
Vector2<Scalar> body_velocity(const Vector4<Scalar>& q, const Vector4<Scalar>& qdot) {
  using std::cos;
  using std::sin;
  const Scalar c = cos(q(kTheta));
  const Scalar s = sin(q(kTheta));
  return Vector2<Scalar>(c * qdot(kX) + s * qdot(kY), -s * qdot(kX) + c * qdot(kY));
}

}  // namespace twistcar

#endif  // TWISTCAR_KINEMATICS_HPP
