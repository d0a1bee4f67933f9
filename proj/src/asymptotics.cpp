#include "twistcar/asymptotics.hpp"

#include <cmath>
#include <sstream>

#include "twistcar/error.hpp"

namespace twistcar {

AsymptoticCoeffs coefficients(const NondimParams& nd, double omega) {
  nd.validate();
  if (!(omega > 0.0) || !std::isfinite(omega)) throw ValidationError("omega must be > 0");

  const double al = nd.alpha, sg = nd.sigma, ka = nd.kappa;
  const double b1 = nd.beta1, b2 = nd.beta2, e1 = nd.eta1, e2 = nd.eta2;
  const double w = omega, w2 = w * w;
  const double s2 = sg * sg;
  const double kp = ka + 1.0;
  const double kw2 = kp * kp * w2;  // (kappa + 1)^2 omega^2

  AsymptoticCoeffs k;
  k.omega = omega;
  k.Delta1 = 1.0 / (6.0 * (al + 1.0) * (al + 1.0));
  k.Delta2 = 1.0 / (4.0 * kw2 + 9.0);
  k.Delta3 = 1.0 / (kw2 + 9.0);
  k.Delta4 = 1.0 / (6.0 * std::pow(al + 1.0, 3));
  const double D1 = k.Delta1, D2 = k.Delta2, D3 = k.Delta3, D4 = k.Delta4;

  // Recurring combinations.
  const double g2 = e2 + b2 * (b2 - 2.0);  // eta2 + beta2 (beta2 - 2)
  const double ek = al * e2 * ka - e1;     // alpha eta2 kappa - eta1

  k.a2 = -3.0 / kp;
  k.a1 = -al * w2 * (al * b1 - b1 * b1 + ka * (al + b2 - 1.0) - e1 + al * ka * g2) * D1 * k.a2;
  k.a3 = al * w * (4.0 * s2 + 2.0 * al + 2.0) * D1 * k.a2 / 2.0;
  k.a4 = al * w2 * (al * b1 + b1 * b1 + ka * (al + b2 + 1.0) + e1 - al * ka * g2) * D1 * k.a2;

  k.b1 = al * w2 * (al * ka * g2 + ka * (al + b2 - 1.0) + al * b1 - b1 * b1 - e1) / (6.0 * (al + 1.0) * (al + 1.0));
  k.b2 = -2.0 * al * w2 *
         (2.0 * al * b1 * kw2 + al * b2 * b2 * ka * (2.0 * kw2 + 9.0) + (2.0 * kw2 + 9.0) * ek +
          2.0 * b2 * ka * (-(2.0 * al - 1.0) * kw2 - 9.0 * al) +
          3.0 * (al * ka + al + 2.0 * kp * s2 - 2.0 * ka + 1.0) + 2.0 * (al - 1.0) * ka * kw2 -
          b1 * b1 * (2.0 * kw2 + 9.0)) *
         D1 * D2;
  k.b3 = 3.0 * al * w *
         (2.0 * kp * w2 * (b2 * ka * (al * b2 - 2.0 * al - 1.0) - al * b1 + al * e2 * ka - b1 * b1 - e1) -
          2.0 * (al + 1.0) * ka * kp * w2 - 3.0 * (al + 2.0 * s2 + 1.0)) *
         D1 * D2;
  k.b4 = 3.0 * al * w2 *
         (3.0 * ka * (b2 * (al * b2 - 2.0 * al - 1.0) + al * e2) - 3.0 * al * b1 - (al + 1.0) * (ka - 2.0) -
          3.0 * b1 * b1 - 3.0 * e1 + 4.0 * kp * s2) *
         D1 * D2;

  k.c2 = 6.0 * al * w2 *
         (3.0 * al * ka * g2 + al * ka + al - 3.0 * b1 * b1 - 3.0 * e1 + 2.0 * kp * s2 - 2.0 * ka + 1.0) * D1 * D3;
  k.c3 = 6.0 * al * w *
         (kp * w2 * (al * ka * g2 - b1 * b1 - e1) - 3.0 * (al + 2.0 * s2 + 1.0) - ka * kp * w2) * D1 * D3;

  k.d0 = al * w / (al + 1.0);
  k.d1 = al * w2 *
         (al * b2 * b2 * ka * (kw2 + 18.0) + al * b1 * (kw2 + 9.0) +
          3.0 * (4.0 * al * ka + al + 2.0 * kp * s2 - 5.0 * ka + 1.0) +
          b2 * ka * (-(2.0 * al - 1.0) * kw2 - 36.0 * al + 9.0) + (kw2 + 18.0) * ek + (al - 1.0) * ka * kw2 -
          b1 * b1 * (kw2 + 18.0)) *
         D3 * D4;
  k.d2 = 3.0 * al * w *
         (-kp * w2 *
              (2.0 * al * b1 * (kw2 + 9.0) + 2.0 * b2 * ka * ((6.0 * al + 1.0) * kw2 + 27.0 * al + 9.0) -
               3.0 * al * b2 * b2 * ka * (2.0 * kw2 + 9.0) - 3.0 * (2.0 * kw2 + 9.0) * ek +
               3.0 * b1 * b1 * (2.0 * kw2 + 9.0)) +
          3.0 * kp * w2 * (2.0 * al * (2.0 * ka + 5.0) - 10.0 * kp * s2 + ka + 10.0) +
          2.0 * kp * kw2 * w2 * (al * (ka + 2.0) - ka + 2.0) + 27.0 * (al - 4.0 * s2 + 1.0)) *
         D2 * D3 * D4;
  k.d3 = 9.0 * al * w2 *
         (al * b2 * b2 * ka * (5.0 * kw2 + 18.0) - al * b1 * (kw2 + 9.0) - b1 * b1 * (5.0 * kw2 + 18.0) -
          b2 * ka * ((10.0 * al + 1.0) * kw2 + 36.0 * al + 9.0) + (5.0 * kw2 + 18.0) * ek +
          kw2 * (al * (ka + 2.0) + 4.0 * kp * s2 - 3.0 * ka + 2.0) + 9.0 * (al + 2.0 * kp * s2 - ka + 1.0)) *
         D2 * D3 * D4;
  return k;
}

double v2_solution(double t, const AsymptoticCoeffs& k, double kappa) {
  const double w2t = 2.0 * k.omega * t;
  return k.b1 + k.b2 * std::exp(-3.0 * t / (1.0 + kappa)) + k.b3 * std::sin(w2t) + k.b4 * std::cos(w2t);
}

double v10_solution(double t, const AsymptoticCoeffs& k, double kappa, V10Form form) {
  const double wt = k.omega * t;
  const double decay = std::exp(-3.0 * t / (1.0 + kappa));
  if (form == V10Form::Printed) return k.c2 * (std::sin(wt) - decay) + k.c3 * std::cos(wt);
  return k.c3 * std::sin(wt) + k.c2 * (std::cos(wt) - decay);
}

double v10_amplitude(const AsymptoticCoeffs& k) { return std::hypot(k.c2, k.c3); }

double v_asymptotic(double t, double eps, double phi0, const AsymptoticCoeffs& k, double kappa, V10Form form) {
  if (!(eps >= 0.0)) throw ValidationError("eps must be >= 0");
  double v = eps * eps * v2_solution(t, k, kappa);
  if (phi0 != 0.0) v += eps * phi0 * v10_solution(t, k, kappa, form);
  return v;
}

double theta_asymptotic(double t, double eps, const NondimParams& nd, double omega) {
  return -nd.alpha / (1.0 + nd.alpha) * std::cos(omega * t) * eps;
}

double thetadot_ss(double t, double eps, double phi0, const AsymptoticCoeffs& k) {
  const double wt = k.omega * t;
  return eps * k.d0 * std::sin(wt) +
         eps * eps * phi0 * (k.d1 + k.d2 * std::sin(2.0 * wt) + k.d3 * std::cos(2.0 * wt));
}

double reversal_indicator(const NondimParams& nd) {
  if (std::abs(nd.beta2 - 0.5) > 1e-9) {
    std::ostringstream os;
    os << "reversal indicator requires beta2 = 1/2 (got " << nd.beta2 << "); use mean_direction instead";
    throw ValidationError(os.str());
  }
  const double al = nd.alpha, b1 = nd.beta1;
  return 4.0 * b1 * (al - b1) - 4.0 * nd.eta1 - nd.kappa * (2.0 - al) + 4.0 * al * nd.eta2 * nd.kappa;
}

int mean_direction(const NondimParams& nd, double omega) {
  const double b1 = coefficients(nd, omega).b1;
  if (std::abs(b1) < kBoundaryTolerance) return 0;
  return b1 > 0.0 ? 1 : -1;
}

double mean_curvature(double phi0, const AsymptoticCoeffs& k) {
  if (std::abs(k.b1) < kBoundaryTolerance) {
    std::ostringstream os;
    os << "degenerate: zero net propulsion (b1 = " << k.b1 << ")";
    throw BoundaryError(os.str());
  }
  return k.d1 / k.b1 * phi0;
}

}  // namespace twistcar
