#include "twistcar/params.hpp"

#include <algorithm>
#include <string>

#include "twistcar/error.hpp"

namespace twistcar {

namespace {

void require(bool ok, const std::string& what) {
  if (!ok) throw ValidationError(what);
}

bool finite(double x) { return std::isfinite(x); }

}  // namespace

void PhysicalParams::validate() const {
  for (auto [name, value] :
       {std::pair{"m0", m0}, {"b0", b0}, {"m1", m1}, {"m2", m2}, {"l1", l1},
        {"l2", l2}, {"b1", b1}, {"b2", b2}, {"J1", J1}, {"J2", J2}, {"d", d},
        {"c", c}, {"slope", slope}, {"g", g}}) {
    require(finite(value), std::string("physical.") + name + " must be finite");
  }
  require(m1 > 0.0, "physical.m1 must be > 0");
  require(m2 >= 0.0, "physical.m2 must be >= 0");
  require(m0 >= 0.0, "physical.m0 must be >= 0");
  require(l1 > 0.0, "physical.l1 must be > 0");
  require(l2 > 0.0, "physical.l2 must be > 0");
  require(d > 0.0, "physical.d must be > 0");
  require(b1 >= 0.0 && b1 <= l1, "physical.b1 must lie in [0, l1]");
  require(b2 >= 0.0 && b2 <= l2, "physical.b2 must lie in [0, l2]");
  require(J1 >= 0.0, "physical.J1 must be >= 0");
  require(J2 >= 0.0, "physical.J2 must be >= 0");
  require(c >= 0.0, "physical.c must be >= 0");
  if (c_perp) {
    require(finite(*c_perp) && *c_perp >= 0.0, "physical.c_perp must be >= 0");
  }
  require(std::abs(slope) < kPi / 2.0, "physical.slope must satisfy |slope| < pi/2");
}

void NondimParams::validate() const {
  require(alpha > 0.0, "alpha must be > 0");
  require(sigma > 0.0, "sigma must be > 0");
  require(kappa >= 0.0, "kappa must be >= 0");
  require(beta1 >= 0.0 && beta1 <= 1.0, "beta1 must lie in [0, 1]");
  require(beta2 >= 0.0 && beta2 <= 1.0, "beta2 must lie in [0, 1]");
  require(eta1 >= 0.0, "eta1 must be >= 0");
  require(eta2 >= 0.0, "eta2 must be >= 0");
  require(t_c > 0.0, "t_c must be > 0");
}

void InputSignal::validate() const {
  require(finite(phi0) && finite(eps) && finite(omega) && finite(phase),
          "input fields must be finite");
  require(eps >= 0.0, "input.eps must be >= 0");
  require(omega > 0.0, "input.omega must be > 0");
}

void InputSignal::check_steering_range(double l1, double l2) const {
  // cos(phi) is smallest where |phi| is largest within the stroke.
  double worst = std::max(std::abs(phi0 - eps), std::abs(phi0 + eps));
  if (worst > kPi) worst = kPi;
  if (l2 + l1 * std::cos(worst) <= 1e-6 * l1) {
    throw ValidationError(
        "input: steering stroke reaches the singular angle where "
        "l2 + l1 cos(phi) <= 0");
  }
}

PhysicalParams merge_point_mass(const PhysicalParams& p, MergeMode mode) {
  if (p.m0 == 0.0) return p;
  PhysicalParams out = p;
  const double m = p.m1 + p.m0;
  if (mode == MergeMode::PaperFaithful) {
    out.J1 = p.J1 + p.m0 * (p.b0 - p.b1) * (p.b0 - p.b1);
  } else {
    const double b = (p.m1 * p.b1 + p.m0 * p.b0) / m;
    out.J1 = p.J1 + p.m1 * (p.b1 - b) * (p.b1 - b) + p.m0 * (p.b0 - b) * (p.b0 - b);
    out.b1 = b;
  }
  out.m1 = m;
  out.m0 = 0.0;
  out.b0 = 0.0;
  return out;
}

NondimParams nondimensionalize(const PhysicalParams& p) {
  if (p.m0 != 0.0) {
    throw ValidationError("nondimensionalize: merge the point mass first (m0 != 0)");
  }
  if (!(p.c > 0.0)) {
    throw ValidationError("nondimensionalization undefined: c must be > 0 (t_c = m1/c)");
  }
  NondimParams nd;
  nd.alpha = p.l2 / p.l1;
  nd.sigma = p.d / p.l1;
  nd.kappa = p.m2 / p.m1;
  nd.beta1 = p.b1 / p.l1;
  nd.beta2 = p.b2 / p.l2;
  nd.eta1 = p.J1 / (p.m1 * p.l1 * p.l1);
  nd.eta2 = p.m2 > 0.0 ? p.J2 / (p.m2 * p.l2 * p.l2) : 0.0;
  nd.t_c = p.m1 / p.c;
  return nd;
}

std::pair<NondimParams, InputSignal> nondimensionalize(const PhysicalParams& p,
                                                      const InputSignal& u) {
  NondimParams nd = nondimensionalize(p);
  nd.omega_nd = u.omega * nd.t_c;
  InputSignal u_nd = u;
  u_nd.omega = nd.omega_nd;
  return {nd, u_nd};
}

double dimensionalize_velocity(double v_nd, const NondimParams& nd, double l1) {
  return v_nd * l1 / nd.t_c;
}

double nondimensionalize_velocity(double v, const NondimParams& nd, double l1) {
  return v * nd.t_c / l1;
}

PhysicalParams unit_scaled(const NondimParams& nd) {
  PhysicalParams p;
  p.m0 = 0.0;
  p.m1 = 1.0;
  p.l1 = 1.0;
  p.c = 1.0;
  p.m2 = nd.kappa;
  p.l2 = nd.alpha;
  p.d = nd.sigma;
  p.b1 = nd.beta1;
  p.b2 = nd.beta2 * nd.alpha;
  p.J1 = nd.eta1;
  p.J2 = nd.eta2 * nd.kappa * nd.alpha * nd.alpha;
  return p;
}

namespace presets {

PhysicalParams slender_rods() {
  PhysicalParams p;
  p.m1 = 1.0;
  p.m2 = 0.3;
  p.l1 = 0.3;
  p.l2 = 0.1;
  p.d = 0.05;
  p.c = 0.5;
  p.b1 = p.l1 / 2.0;
  p.b2 = p.l2 / 2.0;
  p.J1 = p.m1 * p.l1 * p.l1 / 12.0;
  p.J2 = p.m2 * p.l2 * p.l2 / 12.0;
  return p;
}

InputSignal slender_rods_input() { return {0.0, kPi / 6.0, 15.0, 0.0}; }

PhysicalParams reversal_geometry(double m0) {
  PhysicalParams p = slender_rods();
  p.l2 = 0.2;
  p.b2 = p.l2 / 2.0;
  p.J2 = p.m2 * p.l2 * p.l2 / 12.0;
  p.m0 = m0;
  p.b0 = 0.05;
  return p;
}

namespace {

PhysicalParams robot_row(double m1, double m2, double l1, double l2, double b1,
                         double b2, double J1, double J2, double c) {
  PhysicalParams p;
  p.m1 = m1;
  p.m2 = m2;
  p.l1 = l1;
  p.l2 = l2;
  p.b1 = b1;
  p.b2 = b2;
  p.J1 = J1;
  p.J2 = J2;
  p.d = kRobotHalfTrack;
  p.c = c;
  return p;
}

}  // namespace

PhysicalParams nominal_robot(double c) {
  return robot_row(0.836, 0.29, 0.144, 0.112, 0.0206, 0.068, 0.0636, 0.003873, c);
}

PhysicalParams backward_configuration(double c) {
  return robot_row(0.836, 0.383, 0.144, 0.208, 0.0206, 0.098, 0.0636, 0.01938, c);
}

PhysicalParams forward_configuration(double c) {
  return robot_row(1.8, 0.383, 0.144, 0.208, 0.0426, 0.098, 0.07757, 0.01938, c);
}

}  // namespace presets

}  // namespace twistcar
