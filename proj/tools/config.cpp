#include "config.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include "twistcar/error.hpp"

namespace twistcar::app {

namespace {

[[noreturn]] void fail(const std::string& path, const std::string& what) { throw ValidationError(path + ": " + what); }

void check_keys(const Json& obj, const std::string& path, const std::set<std::string>& allowed) {
  if (!obj.is_object()) fail(path, "must be an object");
  for (const auto& [key, _] : obj.items())
    if (!allowed.count(key)) fail(path.empty() ? key : path + "." + key, "unknown field");
}

double number(const Json& obj, const std::string& key, const std::string& path) {
  const Json& v = obj.at(key);
  if (!v.is_number()) fail(path + "." + key, "must be a number");
  const double x = v.get<double>();
  if (!std::isfinite(x)) fail(path + "." + key, "must be finite");
  return x;
}

std::optional<double> maybe_number(const Json& obj, const std::string& key, const std::string& path) {
  if (!obj.contains(key) || obj.at(key).is_null()) return std::nullopt;
  return number(obj, key, path);
}

std::string text(const Json& obj, const std::string& key, const std::string& path) {
  const Json& v = obj.at(key);
  if (!v.is_string()) fail(path + "." + key, "must be a string");
  return v.get<std::string>();
}

std::vector<double> numbers(const Json& obj, const std::string& key, const std::string& path) {
  const Json& v = obj.at(key);
  if (!v.is_array() || v.empty()) fail(path + "." + key, "must be a non-empty array of numbers");
  std::vector<double> out;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (!v[i].is_number()) fail(path + "." + key + "[" + std::to_string(i) + "]", "must be a number");
    out.push_back(v[i].get<double>());
  }
  return out;
}

std::pair<double, double> bounds(const Json& obj, const std::string& key, const std::string& path) {
  const std::vector<double> b = numbers(obj, key, path);
  if (b.size() != 2) fail(path + "." + key, "must be [lo, hi]");
  if (!(b[0] > 0.0 && b[1] > b[0])) fail(path + "." + key, "must satisfy 0 < lo < hi");
  return {b[0], b[1]};
}

const std::vector<std::string> kPhysicalFields = {"m0", "b0", "m1", "m2", "l1", "l2", "b1",
                                                  "b2", "J1", "J2", "d",  "c",  "g"};

double* physical_field(PhysicalParams& p, const std::string& name) {
  if (name == "m0") return &p.m0;
  if (name == "b0") return &p.b0;
  if (name == "m1") return &p.m1;
  if (name == "m2") return &p.m2;
  if (name == "l1") return &p.l1;
  if (name == "l2") return &p.l2;
  if (name == "b1") return &p.b1;
  if (name == "b2") return &p.b2;
  if (name == "J1") return &p.J1;
  if (name == "J2") return &p.J2;
  if (name == "d") return &p.d;
  if (name == "c") return &p.c;
  if (name == "g") return &p.g;
  return nullptr;
}

void parse_physical(const Json& j, RunConfig& cfg) {
  std::set<std::string> allowed(kPhysicalFields.begin(), kPhysicalFields.end());
  allowed.insert({"preset", "merge", "c_perp", "slope_deg"});
  check_keys(j, "physical", allowed);
  if (j.contains("preset")) {
    try {
      cfg.physical = preset(text(j, "preset", "physical"));
    } catch (const ValidationError& e) {
      fail("physical.preset", e.what());
    }
  }
  for (const auto& name : kPhysicalFields)
    if (j.contains(name)) *physical_field(cfg.physical, name) = number(j, name, "physical");
  if (j.contains("c_perp")) cfg.physical.c_perp = maybe_number(j, "c_perp", "physical");
  if (j.contains("slope_deg")) cfg.physical.slope = deg2rad(number(j, "slope_deg", "physical"));
  if (j.contains("merge")) {
    try {
      cfg.merge = merge_mode_from_string(text(j, "merge", "physical"));
    } catch (const ValidationError& e) {
      fail("physical.merge", e.what());
    }
  }
}

void parse_input(const Json& j, RunConfig& cfg) {
  check_keys(j, "input", {"phi0_deg", "eps_deg", "omega_rad_s", "phase_deg"});
  for (const char* req : {"eps_deg", "omega_rad_s"})
    if (!j.contains(req)) fail(std::string("input.") + req, "required");
  cfg.input.phi0 = deg2rad(maybe_number(j, "phi0_deg", "input").value_or(0.0));
  cfg.input.eps = deg2rad(number(j, "eps_deg", "input"));
  cfg.input.omega = number(j, "omega_rad_s", "input");
  cfg.input.phase = deg2rad(maybe_number(j, "phase_deg", "input").value_or(0.0));
  if (cfg.input.eps < 0.0) fail("input.eps_deg", "must be >= 0");
  if (!(cfg.input.omega > 0.0)) fail("input.omega_rad_s", "must be > 0");
}

void parse_sim(const Json& j, RunConfig& cfg) {
  check_keys(j, "sim", {"t_end_s", "dt_out_s", "rtol", "atol", "project"});
  if (auto v = maybe_number(j, "t_end_s", "sim")) cfg.sim.t_end = *v;
  if (auto v = maybe_number(j, "dt_out_s", "sim")) cfg.sim.dt_out = *v;
  if (auto v = maybe_number(j, "rtol", "sim")) cfg.sim.rtol = *v;
  if (auto v = maybe_number(j, "atol", "sim")) cfg.sim.atol = *v;
  if (j.contains("project")) {
    if (!j.at("project").is_boolean()) fail("sim.project", "must be true or false");
    cfg.sim.project = j.at("project").get<bool>();
  }
  if (!(cfg.sim.t_end > 0.0)) fail("sim.t_end_s", "must be > 0");
  if (cfg.sim.dt_out < 0.0) fail("sim.dt_out_s", "must be >= 0 (0 selects period/200)");
  if (!(cfg.sim.rtol > 0.0)) fail("sim.rtol", "must be > 0");
  if (!(cfg.sim.atol > 0.0)) fail("sim.atol", "must be > 0");
}

void parse_sweep(const Json& j, RunConfig& cfg) {
  check_keys(j, "sweep", {"param", "values", "param2", "values2"});
  if (!j.contains("param") || !j.contains("values")) fail("sweep", "needs param and values");
  SweepSpec s;
  s.param = text(j, "param", "sweep");
  if (!is_sweepable(s.param)) fail("sweep.param", "unknown parameter '" + s.param + "'");
  s.values = numbers(j, "values", "sweep");
  if (j.contains("param2")) {
    s.param2 = text(j, "param2", "sweep");
    if (!is_sweepable(*s.param2)) fail("sweep.param2", "unknown parameter '" + *s.param2 + "'");
    if (!j.contains("values2")) fail("sweep.values2", "required with param2");
    s.values2 = numbers(j, "values2", "sweep");
  } else if (j.contains("values2")) {
    fail("sweep.values2", "given without param2");
  }
  cfg.sweep = s;
}

void parse_fit(const Json& j, RunConfig& cfg) {
  check_keys(j, "fit", {"mode", "objective", "c_bounds", "c_perp_bounds", "tolerance", "prescan_points", "grid",
                        "weights", "experiments", "rtol", "atol"});
  FitSpec f;
  if (j.contains("mode")) {
    const std::string m = text(j, "mode", "fit");
    if (m == "dissipation") f.mode = FitMode::Dissipation;
    else if (m == "skid") f.mode = FitMode::Skid;
    else fail("fit.mode", "must be dissipation|skid, got '" + m + "'");
  }
  if (j.contains("objective")) {
    try {
      f.dissipation.objective = objective_from_string(text(j, "objective", "fit"));
    } catch (const ValidationError& e) {
      fail("fit.objective", e.what());
    }
  }
  if (j.contains("c_bounds")) {
    const auto [lo, hi] = bounds(j, "c_bounds", "fit");
    f.dissipation.lo = f.skid.c_lo = lo;
    f.dissipation.hi = f.skid.c_hi = hi;
  }
  if (j.contains("c_perp_bounds")) {
    const auto [lo, hi] = bounds(j, "c_perp_bounds", "fit");
    f.skid.cp_lo = lo;
    f.skid.cp_hi = hi;
    f.has_c_perp_bounds = true;
  }
  if (auto v = maybe_number(j, "tolerance", "fit")) {
    if (!(*v > 0.0)) fail("fit.tolerance", "must be > 0");
    f.dissipation.tolerance = f.skid.tolerance = *v;
  }
  if (auto v = maybe_number(j, "prescan_points", "fit")) {
    if (*v < 3) fail("fit.prescan_points", "must be >= 3");
    f.dissipation.prescan_points = static_cast<int>(*v);
  }
  if (auto v = maybe_number(j, "grid", "fit")) {
    if (*v < 2) fail("fit.grid", "must be >= 2");
    f.skid.grid = static_cast<int>(*v);
  }
  if (j.contains("weights")) {
    const Json& w = j.at("weights");
    check_keys(w, "fit.weights", {"par", "perp"});
    if (auto v = maybe_number(w, "par", "fit.weights")) f.skid.weight_par = *v;
    if (auto v = maybe_number(w, "perp", "fit.weights")) f.skid.weight_perp = *v;
    if (f.skid.weight_par < 0.0 || f.skid.weight_perp < 0.0) fail("fit.weights", "must be >= 0");
  }
  if (auto v = maybe_number(j, "rtol", "fit")) f.dissipation.rtol = f.skid.rtol = *v;
  if (auto v = maybe_number(j, "atol", "fit")) f.dissipation.atol = f.skid.atol = *v;
  if (j.contains("experiments")) {
    const Json& e = j.at("experiments");
    if (!e.is_array()) fail("fit.experiments", "must be an array");
    for (std::size_t i = 0; i < e.size(); ++i) {
      const std::string path = "fit.experiments[" + std::to_string(i) + "]";
      if (e[i].is_string()) {
        f.experiments.push_back(e[i].get<std::string>());
        f.windows.emplace_back();
        continue;
      }
      check_keys(e[i], path, {"path", "t_lo", "t_hi"});
      if (!e[i].contains("path")) fail(path + ".path", "required");
      f.experiments.push_back(text(e[i], "path", path));
      const auto lo = maybe_number(e[i], "t_lo", path), hi = maybe_number(e[i], "t_hi", path);
      if (lo.has_value() != hi.has_value()) fail(path, "t_lo and t_hi go together");
      if (lo && !(*hi > *lo)) fail(path + ".t_hi", "must exceed t_lo");
      f.windows.push_back(lo ? std::optional(std::pair(*lo, *hi)) : std::nullopt);
    }
  }
  cfg.fit = f;
}

}  // namespace

std::string to_string(MergeMode m) { return m == MergeMode::PaperFaithful ? "paper_faithful" : "exact_composite"; }

MergeMode merge_mode_from_string(const std::string& s) {
  if (s == "paper_faithful") return MergeMode::PaperFaithful;
  if (s == "exact_composite") return MergeMode::ExactComposite;
  throw ValidationError("merge must be exact_composite|paper_faithful, got '" + s + "'");
}

PhysicalParams preset(const std::string& name) {
  if (name == "slender_rods") return presets::slender_rods();
  if (name == "reversal_geometry") return presets::reversal_geometry(0.0);
  if (name == "nominal_robot") return presets::nominal_robot(0.234);
  if (name == "backward_configuration") return presets::backward_configuration(0.234);
  if (name == "forward_configuration") return presets::forward_configuration(0.234);
  throw ValidationError("unknown preset '" + name +
                        "' (slender_rods|reversal_geometry|nominal_robot|backward_configuration|forward_configuration)");
}

bool is_sweepable(const std::string& name) {
  if (name == "slope_deg" || name == "phi0_deg" || name == "eps_deg" || name == "omega_rad_s" || name == "c_perp")
    return true;
  PhysicalParams p;
  return physical_field(p, name) != nullptr;
}

void set_parameter(RunConfig& cfg, const std::string& name, double value) {
  if (name == "slope_deg") cfg.physical.slope = deg2rad(value);
  else if (name == "phi0_deg") cfg.input.phi0 = deg2rad(value);
  else if (name == "eps_deg") cfg.input.eps = deg2rad(value);
  else if (name == "omega_rad_s") cfg.input.omega = value;
  else if (name == "c_perp") cfg.physical.c_perp = value;
  else if (double* f = physical_field(cfg.physical, name)) *f = value;
  else throw ValidationError("unknown parameter '" + name + "'");
}

RunConfig parse_config(const Json& j) {
  check_keys(j, "", {"physical", "input", "sim", "model", "sweep", "fit"});
  RunConfig cfg;
  if (j.contains("physical")) parse_physical(j.at("physical"), cfg);
  if (!j.contains("input")) fail("input", "required");
  parse_input(j.at("input"), cfg);
  if (j.contains("sim")) parse_sim(j.at("sim"), cfg);
  if (j.contains("model")) {
    try {
      cfg.model = model_from_string(text(j, "model", ""));
    } catch (const ValidationError& e) {
      fail("model", e.what());
    }
  }
  if (j.contains("sweep")) parse_sweep(j.at("sweep"), cfg);
  if (j.contains("fit")) parse_fit(j.at("fit"), cfg);
  cfg.physical.validate();
  cfg.input.validate();
  if (cfg.model == Model::Skid && !cfg.physical.c_perp) fail("physical.c_perp", "required by the skid model");
  return cfg;
}

RunConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open config file " + path);
  Json j;
  try {
    j = Json::parse(in);
  } catch (const Json::parse_error& e) {
    throw ValidationError(path + ": invalid JSON: " + e.what());
  }
  RunConfig cfg = parse_config(j);
  cfg.source = path;
  return cfg;
}

Json to_json(const RunConfig& cfg) {
  Json phys;
  PhysicalParams p = cfg.physical;
  for (const auto& name : kPhysicalFields) phys[name] = *physical_field(p, name);
  phys["c_perp"] = cfg.physical.c_perp ? Json(*cfg.physical.c_perp) : Json(nullptr);
  phys["slope_deg"] = rad2deg(cfg.physical.slope);
  phys["merge"] = to_string(cfg.merge);
  Json j;
  j["physical"] = phys;
  j["input"] = {{"phi0_deg", rad2deg(cfg.input.phi0)},
                {"eps_deg", rad2deg(cfg.input.eps)},
                {"omega_rad_s", cfg.input.omega},
                {"phase_deg", rad2deg(cfg.input.phase)}};
  j["sim"] = {{"t_end_s", cfg.sim.t_end},
              {"dt_out_s", cfg.sim.dt_out > 0.0 ? cfg.sim.dt_out : default_dt_out(cfg.input)},
              {"rtol", cfg.sim.rtol},
              {"atol", cfg.sim.atol},
              {"project", cfg.sim.project}};
  j["model"] = std::string(to_string(cfg.model));
  if (cfg.sweep) {
    j["sweep"] = {{"param", cfg.sweep->param}, {"values", cfg.sweep->values}};
    if (cfg.sweep->param2) {
      j["sweep"]["param2"] = *cfg.sweep->param2;
      j["sweep"]["values2"] = cfg.sweep->values2;
    }
  }
  if (cfg.fit) {
    const FitSpec& f = *cfg.fit;
    Json fj;
    fj["mode"] = f.mode == FitMode::Skid ? "skid" : "dissipation";
    fj["objective"] = to_string(f.dissipation.objective);
    fj["c_bounds"] = {f.dissipation.lo, f.dissipation.hi};
    if (f.has_c_perp_bounds) fj["c_perp_bounds"] = {f.skid.cp_lo, f.skid.cp_hi};
    fj["tolerance"] = f.dissipation.tolerance;
    fj["prescan_points"] = f.dissipation.prescan_points;
    fj["grid"] = f.skid.grid;
    fj["weights"] = {{"par", f.skid.weight_par}, {"perp", f.skid.weight_perp}};
    fj["rtol"] = f.dissipation.rtol;
    fj["atol"] = f.dissipation.atol;
    Json ex = Json::array();
    for (std::size_t i = 0; i < f.experiments.size(); ++i) {
      Json e = {{"path", f.experiments[i]}};
      if (f.windows[i]) {
        e["t_lo"] = f.windows[i]->first;
        e["t_hi"] = f.windows[i]->second;
      }
      ex.push_back(e);
    }
    fj["experiments"] = ex;
    j["fit"] = fj;
  }
  return j;
}

}  // namespace twistcar::app
