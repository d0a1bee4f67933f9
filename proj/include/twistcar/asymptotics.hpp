#ifndef TWISTCAR_ASYMPTOTICS_HPP
#define TWISTCAR_ASYMPTOTICS_HPP

#include "twistcar/params.hpp"

namespace twistcar {

/// |b1| below this is treated as the reversal boundary.
inline constexpr double kBoundaryTolerance = 1e-6;

/// Closed-form small-amplitude coefficients. All quantities are dimensionless.
///
/// Symmetric input:  v2' = a1 + a2 v2 + a3 sin(2wt) + a4 cos(2wt),
///                   v2  = b1 + b2 exp(a2 t) + b3 sin(2wt) + b4 cos(2wt).
/// Asymmetric correction v10 oscillates at w with coefficients c2, c3.
/// Angular rate:     theta'_ss = eps d0 sin(wt) + eps^2 phi0 (d1 + d2 sin(2wt) + d3 cos(2wt)).
struct AsymptoticCoeffs {
  double omega = 0.0;
  double Delta1 = 0.0, Delta2 = 0.0, Delta3 = 0.0, Delta4 = 0.0;
  double a1 = 0.0, a2 = 0.0, a3 = 0.0, a4 = 0.0;
  double b1 = 0.0, b2 = 0.0, b3 = 0.0, b4 = 0.0;
  double c2 = 0.0, c3 = 0.0;
  double d0 = 0.0, d1 = 0.0, d2 = 0.0, d3 = 0.0;
};

AsymptoticCoeffs coefficients(const NondimParams& nd, double omega);

/// How the two harmonics of v10 are paired with c2 and c3.
///
/// Derived: v10 = c3 sin(wt) + c2 (cos(wt) - exp(a2 t)), which solves the
/// first-order-in-phi0 equation with v10(0) = 0 and is the form the d
/// coefficients are consistent with. Printed: c2 (sin(wt) - exp(a2 t)) + c3 cos(wt).
enum class V10Form { Derived, Printed };

double v2_solution(double t, const AsymptoticCoeffs& k, double kappa);
double v10_solution(double t, const AsymptoticCoeffs& k, double kappa, V10Form form = V10Form::Derived);
/// Steady-state amplitude of the first harmonic of v10.
double v10_amplitude(const AsymptoticCoeffs& k);

/// eps^2 v2(t) + eps phi0 v10(t).
double v_asymptotic(double t, double eps, double phi0, const AsymptoticCoeffs& k, double kappa,
                    V10Form form = V10Form::Derived);

/// Leading-order orientation -alpha/(1+alpha) eps cos(wt).
double theta_asymptotic(double t, double eps, const NondimParams& nd, double omega);

double thetadot_ss(double t, double eps, double phi0, const AsymptoticCoeffs& k);

/// Sign indicator for the mean forward speed, valid for beta2 = 1/2 only.
double reversal_indicator(const NondimParams& nd);

/// Sign of b1: +1, -1, or 0 inside the boundary band |b1| < kBoundaryTolerance.
int mean_direction(const NondimParams& nd, double omega);

/// Mean path curvature (d1/b1) phi0. Throws BoundaryError when |b1| < 1e-6.
double mean_curvature(double phi0, const AsymptoticCoeffs& k);

}  // namespace twistcar

#endif  // TWISTCAR_ASYMPTOTICS_HPP
