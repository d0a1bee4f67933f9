#include <CLI11.hpp>

#include "commands.hpp"

using namespace twistcar::app;

namespace {

void add_common(CLI::App* cmd, CommonOptions& opt, bool needs_config = true) {
  auto* c = cmd->add_option("--config", opt.config, "JSON run configuration");
  if (needs_config) c->required();
  cmd->add_option("--out", opt.out, "output directory")->capture_default_str();
  cmd->add_option("--model", opt.model, "constrained|skid|slope (overrides the config)");
  cmd->add_option("--rtol", opt.rtol, "integrator relative tolerance");
  cmd->add_option("--atol", opt.atol, "integrator absolute tolerance");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Simulation, asymptotics and fitting for the two-link steering-propelled vehicle"};
  app.require_subcommand(1);
  CommonOptions opt;

  auto* sim = app.add_subcommand("simulate", "integrate one run and write trajectory.csv");
  add_common(sim, opt);

  CompareArgs cmp;
  std::string form = "derived";
  auto* compare = app.add_subcommand("compare", "numeric vs closed-form small-amplitude speed");
  add_common(compare, opt);
  compare->add_option("--v10-form", form, "derived|printed")->check(CLI::IsMember({"derived", "printed"}));

  auto* sweep = app.add_subcommand("sweep", "steady-state metrics over the config's sweep grid");
  add_common(sweep, opt);

  FitArgs fit_args;
  auto* fit = app.add_subcommand("fit", "fit dissipation coefficients to experiment CSVs");
  add_common(fit, opt);
  fit->add_option("experiments", fit_args.experiments, "experiment CSV files");
  fit->add_option("--mode", fit_args.mode, "dissipation|skid");
  fit->add_option("--objective", fit_args.objective, "displacement_per_cycle|velocity_trace");

  auto* rev = app.add_subcommand("reversal", "predicted vs simulated direction of travel");
  add_common(rev, opt);

  std::string csv;
  int half_window = 5;
  auto* ext = app.add_subcommand("extract-input", "tracked steering parameters from an experiment CSV");
  add_common(ext, opt, false);
  ext->add_option("--csv", csv, "experiment CSV")->required();
  ext->add_option("--half-window", half_window, "moving-average half-width in samples")->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kExitOk : kExitValidation;
  }

  if (*sim) return cmd_simulate(opt);
  if (*compare) {
    cmp.form = form == "printed" ? twistcar::V10Form::Printed : twistcar::V10Form::Derived;
    return cmd_compare(opt, cmp);
  }
  if (*sweep) return cmd_sweep(opt);
  if (*fit) return cmd_fit(opt, fit_args);
  if (*rev) return cmd_reversal(opt);
  if (*ext) return cmd_extract_input(opt, csv, half_window);
  return kExitValidation;
}
