#ifndef TWISTCAR_PARAMS_HPP
#define TWISTCAR_PARAMS_HPP

#include <cmath>
#include <optional>
#include <utility>

namespace twistcar {

inline constexpr double kPi = 3.14159265358979323846;

inline constexpr double deg2rad(double deg) { return deg * kPi / 180.0; }
inline constexpr double rad2deg(double rad) { return rad * 180.0 / kPi; }

/// Dimensional description of the two-link vehicle (SI units, radians).
///
/// Link 1 runs from the rear axle point P1 to the steering joint, link 2 from
/// the joint to the front wheel. b1, b2 and b0 are measured from the start of
/// the respective link; J1, J2 are about each link's own center of mass.
struct PhysicalParams {
  double m0 = 0.0;  // point mass carried on link 1
  double b0 = 0.0;
  double m1 = 1.0;
  double m2 = 0.0;
  double l1 = 1.0;
  double l2 = 1.0;
  double b1 = 0.5;
  double b2 = 0.5;
  double J1 = 0.0;
  double J2 = 0.0;
  double d = 0.1;  // rear half-track
  double c = 0.0;  // rolling dissipation
  std::optional<double> c_perp;  // lateral (skid) dissipation, skid model only
  double slope = 0.0;
  double g = 9.81;

  /// Throws ValidationError naming the first offending field.
  void validate() const;

  double total_mass() const { return m0 + m1 + m2; }
};

struct NondimParams {
  double alpha = 1.0;
  double sigma = 0.0;
  double kappa = 0.0;
  double beta1 = 0.5;
  double beta2 = 0.5;
  double eta1 = 0.0;
  double eta2 = 0.0;
  double t_c = 1.0;
  double omega_nd = 0.0;

  void validate() const;
};

/// Steering command phi(t) = phi0 + eps * cos(omega * t + phase).
///
/// phase is zero for every analytic result; it only exists so that measured
/// inputs can be replayed in the measurement's own time origin.
struct InputSignal {
  double phi0 = 0.0;
  double eps = 0.0;
  double omega = 1.0;
  double phase = 0.0;

  double phi(double t) const { return phi0 + eps * std::cos(omega * t + phase); }
  double phidot(double t) const { return -eps * omega * std::sin(omega * t + phase); }
  double phiddot(double t) const {
    return -eps * omega * omega * std::cos(omega * t + phase);
  }
  double period() const { return 2.0 * kPi / omega; }

  void validate() const;
  /// Checks that alpha + cos(phi) stays positive over the whole stroke.
  void check_steering_range(double l1, double l2) const;
};

enum class MergeMode { PaperFaithful, ExactComposite };

/// Folds the point mass into link 1. With m0 == 0 the input is returned as is.
///
/// PaperFaithful keeps b1 and shifts J1 by m0 (b0 - b1)^2. ExactComposite moves
/// b1 to the composite center of mass and applies the parallel-axis theorem to
/// both bodies, so total mass and first mass moment about P1 are conserved.
PhysicalParams merge_point_mass(const PhysicalParams& p,
                                MergeMode mode = MergeMode::ExactComposite);

/// Dimensionless groups plus characteristic time t_c = m1 / c.
/// Requires m0 == 0 (merge first) and c > 0.
std::pair<NondimParams, InputSignal> nondimensionalize(const PhysicalParams& p,
                                                      const InputSignal& u);

NondimParams nondimensionalize(const PhysicalParams& p);

double dimensionalize_velocity(double v_nd, const NondimParams& nd, double l1);
double nondimensionalize_velocity(double v, const NondimParams& nd, double l1);

/// Physical parameters with l1 = m1 = c = 1 that reproduce `nd` exactly.
/// Evaluating the dimensional equations on these yields the dimensionless ones.
PhysicalParams unit_scaled(const NondimParams& nd);

namespace presets {

/// Slender-rod benchmark: m1 = 1, m2 = 0.3, l1 = 0.3, l2 = 0.1, d = 0.05, c = 0.5.
PhysicalParams slender_rods();
/// phi0 = 0, eps = pi/6, omega = 15 rad/s.
InputSignal slender_rods_input();
/// Slender rods with l2 = 0.2 and a point mass m0 at b0 = 0.05.
PhysicalParams reversal_geometry(double m0);

/// Measured robot configurations; d and c are not part of the measured table.
PhysicalParams nominal_robot(double c);
PhysicalParams backward_configuration(double c);
PhysicalParams forward_configuration(double c);

inline constexpr double kRobotHalfTrack = 0.0725;

}  // namespace presets

}  // namespace twistcar

#endif  // TWISTCAR_PARAMS_HPP
