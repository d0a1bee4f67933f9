#ifndef TWISTCAR_FITTING_HPP
#define TWISTCAR_FITTING_HPP

#include <optional>
#include <string>
#include <vector>

#include "twistcar/params.hpp"
#include "twistcar/simulation.hpp"

namespace twistcar {

/// Pose time series of one run (SI units, radians).
struct ExperimentRecord {
  std::string label;
  std::vector<double> t, x, y, theta, phi;
  std::vector<double> v_par, v_perp;  // derived when absent from the source
  /// Steady-state window in record time; when unset the second half of the
  /// record is used.
  std::optional<double> t_lo, t_hi;

  std::size_t size() const { return t.size(); }
  double sample_rate() const;
  void validate() const;
};

/// Central-difference body-frame velocities from x, y, theta.
void derive_body_velocities(ExperimentRecord& rec);

/// Record from a simulated trajectory, positions and body velocities copied.
ExperimentRecord record_from_trajectory(const Trajectory& traj, std::string label = {});

/// Reads `t,x,y,theta,phi[,v_par,v_perp]`. Velocities are derived when absent.
ExperimentRecord ingest_csv(const std::string& path);
void write_csv(const ExperimentRecord& rec, const std::string& path);

struct TrackedInput {
  double Phi_Mean = 0.0;
  double Phi_Amp = 0.0;
  double Omega = 0.0;
  double phase = 0.0;  // aligns the cosine with the first detected peak

  InputSignal signal() const { return {Phi_Mean, Phi_Amp, Omega, phase}; }
};

/// Steering parameters from the extrema of a sampled phi(t). Extrema are
/// located on a moving average of half-width `half_window` and then refined
/// by a least-squares sinusoid through the raw samples within a third of a
/// period of each one.
TrackedInput extract_input(const std::vector<double>& t, const std::vector<double>& phi, int half_window = 5);

enum class Objective { DisplacementPerCycle, VelocityTrace };
Objective objective_from_string(const std::string& s);
std::string to_string(Objective o);

struct FitOptions {
  Objective objective = Objective::VelocityTrace;
  double lo = 0.05, hi = 2.0;  // bounds on c
  double tolerance = 1e-3;     // golden-section stop, relative to hi - lo
  int prescan_points = 16;
  double rtol = 1e-8, atol = 1e-10;
};

struct SkidFitOptions {
  double c_lo = 0.01, c_hi = 1.0;
  double cp_lo = 0.1, cp_hi = 100.0;
  int grid = 6;              // per axis, log spaced
  double weight_par = 1.0;
  double weight_perp = 10.0;
  double tolerance = 1e-3;   // on log10 of each coefficient
  int max_sweeps = 40;
  double max_condition = 100.0;  // identifiability warning threshold
  double rtol = 1e-8, atol = 1e-10;
};

struct ExperimentResidual {
  std::string label;
  TrackedInput input;
  double residual = 0.0;       // this experiment's share of the objective
  double data_value = 0.0;     // displacement per cycle (data), if applicable
  double model_value = 0.0;    // displacement per cycle (model), if applicable
};

struct TracePoint {
  double c = 0.0;
  double c_perp = 0.0;
  double objective = 0.0;
};

struct FitResult {
  double c = 0.0;
  std::optional<double> c_perp;
  double objective = 0.0;
  Objective objective_type = Objective::VelocityTrace;
  std::vector<ExperimentResidual> per_experiment;
  std::vector<TracePoint> search_trace;
  bool at_boundary = false;
  bool multimodal = false;
  std::optional<double> hessian_condition;  // skid fit only, log10 space
  std::vector<std::string> warnings;
};

/// Strict interior local minima of a sampled objective.
int interior_local_minima(const std::vector<double>& f);

/// Scalar fit of the rolling dissipation c of the constrained model. Each
/// experiment is replayed under its tracked input from rest at its first
/// sample time. A 16-point prescan brackets the minimum before golden-section.
FitResult fit_dissipation(const std::vector<ExperimentRecord>& experiments, const PhysicalParams& p_template,
                          const FitOptions& opt);

/// Objective of fit_dissipation at one value of c.
double dissipation_objective(const std::vector<ExperimentRecord>& experiments, const PhysicalParams& p_template,
                             const FitOptions& opt, double c, std::vector<ExperimentResidual>* details = nullptr);

/// Two-coefficient fit (c, c_perp) of the skid model on v_par and v_perp
/// traces: log-spaced grid, then coordinate descent in log space.
FitResult fit_skid(const std::vector<ExperimentRecord>& experiments, const PhysicalParams& p_template,
                   const SkidFitOptions& opt);

double skid_objective(const std::vector<ExperimentRecord>& experiments, const PhysicalParams& p_template,
                      const SkidFitOptions& opt, double c, double c_perp);

}  // namespace twistcar

#endif  // TWISTCAR_FITTING_HPP
