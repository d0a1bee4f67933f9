#ifndef TWISTCAR_ANALYSIS_HPP
#define TWISTCAR_ANALYSIS_HPP

#include <utility>
#include <vector>

#include "twistcar/params.hpp"
#include "twistcar/simulation.hpp"

namespace twistcar {

/// Start of the steady-state window: n_constants transient time constants
/// (1 + kappa)/3 * t_c. Throws ValidationError when the trajectory does not
/// extend two input periods beyond it.
double steady_state_window(const Trajectory& traj, const NondimParams& nd, double period, double n_constants = 10.0);
double steady_state_start(const NondimParams& nd, double n_constants = 10.0);

struct CycleAverage {
  double mean = 0.0;
  double displacement_per_cycle = 0.0;  // mean * period
  int periods = 0;
  double t_from = 0.0;
  double t_to = 0.0;
};

/// Trapezoidal mean of `y` over the largest whole number of periods starting
/// at t_start. Window ends off the sample grid are handled by linear
/// interpolation. Requires at least `min_periods` whole periods.
CycleAverage cycle_average(const std::vector<double>& t, const std::vector<double>& y, double t_start, double period,
                           int min_periods = 3);

/// As above on [t_lo, t_hi] instead of [t_start, end of series].
CycleAverage cycle_average_between(const std::vector<double>& t, const std::vector<double>& y, double t_lo,
                                   double t_hi, double period, int min_periods = 3);

/// Cycle average of the forward speed v_par.
CycleAverage cycle_average(const Trajectory& traj, double t_start, double period);

/// Mean heading rate over mean forward speed on whole cycles (1/m, positive
/// counterclockwise). Throws BoundaryError when net propulsion is negligible.
double path_curvature(const Trajectory& traj, double t_start, double period);

struct SteadyStateMetrics {
  double t_start = 0.0;
  double mean_speed = 0.0;
  double displacement_per_cycle = 0.0;
  double theta_bar = 0.0;
  double curvature = 0.0;  // NaN when on the reversal boundary
  double dominant_frequency = 0.0;
};

SteadyStateMetrics steady_state_metrics(const Trajectory& traj, double t_start, double period);

/// Maximum of |y| over each whole period [t0 + k T, t0 + (k+1) T).
std::vector<double> cycle_maxima(const std::vector<double>& t, const std::vector<double>& y, double t0, double period);

/// True when the cycle maxima rise monotonically over their second half and
/// the last exceeds the middle one by more than `rel_growth`.
bool growing_envelope(const std::vector<double>& maxima, double rel_growth = 0.01);

struct LineFit {
  double slope = 0.0;
  double intercept = 0.0;
};

/// Least-squares line through (log eps, log |speed|). Requires at least four
/// points with eps > 0 and a common sign of speed.
LineFit loglog_slope(const std::vector<std::pair<double, double>>& points);

struct SpectralPeak {
  double frequency = 0.0;  // rad per unit time
  double amplitude = 0.0;  // of the equivalent sinusoid
};

/// Dominant nonzero-frequency component of `y` on a window of whole input
/// periods (at least eight) starting at t_start. The peak bin is refined by
/// parabolic interpolation of the magnitude.
SpectralPeak spectrum(const std::vector<double>& t, const std::vector<double>& y, double t_start, double period);

/// Amplitude of the sinusoid at angular frequency `freq` in `y`, by
/// projection over whole input periods starting at t_start.
double harmonic_amplitude(const std::vector<double>& t, const std::vector<double>& y, double t_start, double period,
                          double freq);

}  // namespace twistcar

#endif  // TWISTCAR_ANALYSIS_HPP
