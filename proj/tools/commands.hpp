#ifndef TWISTCAR_TOOLS_COMMANDS_HPP
#define TWISTCAR_TOOLS_COMMANDS_HPP

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "config.hpp"
#include "twistcar/asymptotics.hpp"

namespace twistcar::app {

namespace fs = std::filesystem;

inline constexpr int kExitOk = 0;
inline constexpr int kExitValidation = 2;
inline constexpr int kExitNumerical = 3;

/// Overrides applied on top of the config file.
struct CommonOptions {
  std::string config;
  fs::path out = ".";
  std::optional<std::string> model;
  std::optional<double> rtol;
  std::optional<double> atol;
};

/// Collects what a command did; written as manifest.json whether or not the
/// command succeeded.
class Manifest {
 public:
  Manifest(std::string command, fs::path out);
  void set_config(const RunConfig& cfg);
  void add_output(const fs::path& p);
  void add_stats(const IntegratorStats& s);
  Json& extra() { return extra_; }
  /// Writes <out>/manifest.json and returns `exit_code`.
  int finish(int exit_code, const std::string& error = {});

 private:
  std::string command_;
  fs::path out_;
  std::string config_path_;
  Json config_ = nullptr;
  std::vector<std::string> outputs_;
  IntegratorStats stats_;
  bool has_stats_ = false;
  Json extra_ = Json::object();
  double started_;
};

RunConfig resolve_config(const CommonOptions& opt);

struct FitArgs {
  std::vector<std::string> experiments;
  std::optional<std::string> mode;
  std::optional<std::string> objective;
};

struct CompareArgs {
  V10Form form = V10Form::Derived;
};

/// Each runs one command end to end, mapping errors to exit codes.
int cmd_simulate(const CommonOptions& opt);
int cmd_compare(const CommonOptions& opt, const CompareArgs& args);
int cmd_sweep(const CommonOptions& opt);
int cmd_fit(const CommonOptions& opt, const FitArgs& args);
int cmd_reversal(const CommonOptions& opt);
int cmd_extract_input(const CommonOptions& opt, const std::string& csv, int half_window);

/// Trajectory table with the published column set.
void write_trajectory_csv(const Trajectory& traj, const PhysicalParams& p, double theta_bar, const fs::path& path);

}  // namespace twistcar::app

#endif  // TWISTCAR_TOOLS_COMMANDS_HPP
