#ifndef TWISTCAR_TOOLS_CONFIG_HPP
#define TWISTCAR_TOOLS_CONFIG_HPP

#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "twistcar/dynamics.hpp"
#include "twistcar/fitting.hpp"
#include "twistcar/params.hpp"
#include "twistcar/simulation.hpp"

namespace twistcar::app {

using Json = nlohmann::json;

struct SweepSpec {
  std::string param;
  std::vector<double> values;
  std::optional<std::string> param2;
  std::vector<double> values2;
};

enum class FitMode { Dissipation, Skid };

struct FitSpec {
  FitMode mode = FitMode::Dissipation;
  FitOptions dissipation;
  SkidFitOptions skid;
  bool has_c_perp_bounds = false;
  std::vector<std::string> experiments;
  /// Per-experiment steady-state windows [t_lo, t_hi], matched by position.
  std::vector<std::optional<std::pair<double, double>>> windows;
};

/// Parsed run configuration. Angles are radians here, degrees in the file.
struct RunConfig {
  PhysicalParams physical;
  MergeMode merge = MergeMode::ExactComposite;
  InputSignal input;
  SimOptions sim;
  Model model = Model::Constrained;
  std::optional<SweepSpec> sweep;
  std::optional<FitSpec> fit;
  std::string source;  // file path, empty when built in memory
};

/// Parses and validates. Errors are ValidationError with a dotted field path.
RunConfig parse_config(const Json& j);
RunConfig load_config(const std::string& path);

/// Fully resolved configuration in file units.
Json to_json(const RunConfig& cfg);

std::string to_string(MergeMode m);
MergeMode merge_mode_from_string(const std::string& s);

/// Physical parameters of a named preset (c defaults to 0.234 for the robot
/// configurations when not overridden).
PhysicalParams preset(const std::string& name);

/// Applies `value` (file units) to the named parameter. Physical fields,
/// slope_deg, phi0_deg, eps_deg and omega_rad_s are accepted.
void set_parameter(RunConfig& cfg, const std::string& name, double value);
bool is_sweepable(const std::string& name);

}  // namespace twistcar::app

#endif  // TWISTCAR_TOOLS_CONFIG_HPP
