#include <cmath>
#include <filesystem>
#include <functional>
#include <iomanip>
#include <limits>
#include <fstream>
#include <random>
#include <string>

#include <unistd.h>

#include <gtest/gtest.h>

#include "twistcar/error.hpp"
#include "twistcar/fitting.hpp"

using namespace twistcar;
namespace fs = std::filesystem;

namespace {

constexpr double kRate = 120.0;

std::vector<double> grid(double t_end, double rate = kRate) {
  std::vector<double> t;
  for (int i = 0; i * (1.0 / rate) <= t_end + 1e-12; ++i) t.push_back(i / rate);
  return t;
}

std::vector<double> cosine(const std::vector<double>& t, double mean, double amp, double omega) {
  std::vector<double> phi(t.size());
  for (std::size_t i = 0; i < t.size(); ++i) phi[i] = mean + amp * std::cos(omega * t[i]);
  return phi;
}

ExperimentRecord synthetic(const PhysicalParams& p, double omega, Model model, double t_end = 6.0) {
  SimOptions o;
  o.t_end = t_end;
  o.dt_out = 1.0 / kRate;
  o.rtol = 1e-10;
  const InputSignal u{deg2rad(4.75), deg2rad(23.75), omega, 0.0};
  return record_from_trajectory(simulate(p, u, model, o), "synthetic");
}

class TempDir {
 public:
  TempDir() : path_(fs::temp_directory_path() / ("twistcar_fit_" + std::to_string(::getpid()))) {
    fs::create_directories(path_);
  }
  ~TempDir() { fs::remove_all(path_); }
  std::string file(const std::string& name, const std::string& body) const {
    const auto f = (path_ / name).string();
    std::ofstream(f) << body;
    return f;
  }
  std::string path(const std::string& name) const { return (path_ / name).string(); }

 private:
  fs::path path_;
};

std::string error_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const ValidationError& e) {
    return e.what();
  }
  return {};
}

}  // namespace

TEST(ExtractInput, NominalSignal) {
  const auto t = grid(10.0);
  const auto in = extract_input(t, cosine(t, deg2rad(4.75), deg2rad(23.75), 12.36));
  EXPECT_NEAR(in.Phi_Mean / deg2rad(4.75), 1.0, 5e-3);
  EXPECT_NEAR(in.Phi_Amp / deg2rad(23.75), 1.0, 5e-3);
  EXPECT_NEAR(in.Omega / 12.36, 1.0, 5e-3);
}

TEST(ExtractInput, PureCosine) {
  const auto t = grid(10.0);
  const auto in = extract_input(t, cosine(t, 0.0, 0.5, 12.36));
  EXPECT_NEAR(in.Phi_Mean, 0.0, 1e-6);
  EXPECT_NEAR(in.Phi_Amp, 0.5, 1e-6);
  EXPECT_NEAR(in.Omega, 12.36, 1e-6);
  // First extremum is the peak at t = 0 (or one period later).
  EXPECT_NEAR(std::remainder(in.phase, 2 * kPi), 0.0, 1e-4);
}

TEST(ExtractInput, NoisyMonteCarlo) {
  const auto t = grid(10.0);
  const double mean = deg2rad(4.75), amp = deg2rad(23.75), omega = 12.36;
  const auto clean = cosine(t, mean, amp, omega);
  double worst_mean = 0.0, worst_amp = 0.0, worst_omega = 0.0;
  for (int seed = 0; seed < 100; ++seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> noise(0.0, deg2rad(0.5));
    auto phi = clean;
    for (auto& v : phi) v += noise(rng);
    const auto in = extract_input(t, phi);
    worst_mean = std::max(worst_mean, std::abs(in.Phi_Mean / mean - 1.0));
    worst_amp = std::max(worst_amp, std::abs(in.Phi_Amp / amp - 1.0));
    worst_omega = std::max(worst_omega, std::abs(in.Omega / omega - 1.0));
  }
  EXPECT_LE(worst_mean, 0.02);
  EXPECT_LE(worst_amp, 0.02);
  EXPECT_LE(worst_omega, 0.02);
}

TEST(ExtractInput, ConstantShift) {
  const auto t = grid(8.0);
  std::mt19937_64 rng(7);
  std::normal_distribution<double> noise(0.0, 0.01);
  auto phi = cosine(t, 0.1, 0.4, 9.0);
  for (auto& v : phi) v += noise(rng);
  auto shifted = phi;
  for (auto& v : shifted) v += 0.25;
  const auto a = extract_input(t, phi), b = extract_input(t, shifted);
  EXPECT_NEAR(b.Phi_Amp, a.Phi_Amp, 1e-12);
  EXPECT_NEAR(b.Omega, a.Omega, 1e-12);
  EXPECT_NEAR(b.Phi_Mean - a.Phi_Mean, 0.25, 1e-12);
}

TEST(ExtractInput, Errors) {
  const auto t = grid(10.0);
  EXPECT_THROW(extract_input(t, std::vector<double>(t.size(), 0.3)), ValidationError);
  const auto short_t = grid(0.3);
  EXPECT_THROW(extract_input(short_t, cosine(short_t, 0.0, 0.5, 12.36)), ValidationError);
  EXPECT_THROW(extract_input(t, cosine(t, 0.0, 0.5, 0.2)), ValidationError);
  EXPECT_THROW(extract_input(t, std::vector<double>(3, 0.0)), ValidationError);
  EXPECT_THROW(extract_input(t, cosine(t, 0.0, 0.5, 12.36), 0), ValidationError);
}

TEST(IngestCsv, MinimalFile) {
  TempDir d;
  const auto f = d.file("min.csv",
                        "t,x,y,theta,phi\n"
                        "0.0,0.0,0.0,0.0,0.1\n"
                        "0.1,0.1,0.0,0.0,0.1\n"
                        "0.2,0.2,0.0,0.0,0.1\n"
                        "0.3,0.3,0.0,0.0,0.1\n"
                        "0.4,0.4,0.0,0.0,0.1\n");
  const auto rec = ingest_csv(f);
  ASSERT_EQ(rec.size(), 5u);
  EXPECT_NEAR(rec.sample_rate(), 10.0, 1e-9);
  for (std::size_t i = 0; i < rec.size(); ++i) {
    EXPECT_NEAR(rec.v_par[i], 1.0, 1e-12);
    EXPECT_NEAR(rec.v_perp[i], 0.0, 1e-12);
  }
}

TEST(IngestCsv, BodyFrameRotation) {
  TempDir d;
  // Moving along +y while heading +y: pure forward motion.
  const auto f = d.file("rot.csv",
                        "t,x,y,theta,phi\n"
                        "0,0,0,1.5707963267948966,0\n"
                        "1,0,2,1.5707963267948966,0\n"
                        "2,0,4,1.5707963267948966,0\n");
  const auto rec = ingest_csv(f);
  for (std::size_t i = 0; i < rec.size(); ++i) {
    EXPECT_NEAR(rec.v_par[i], 2.0, 1e-12);
    EXPECT_NEAR(rec.v_perp[i], 0.0, 1e-12);
  }
}

TEST(IngestCsv, Errors) {
  TempDir d;
  const std::string head = "t,x,y,theta,phi\n";
  const auto nonmono = d.file("nm.csv", head + "0,0,0,0,0\n0.1,0,0,0,0\n0.1,0,0,0,0\n0.3,0,0,0,0\n");
  EXPECT_NE(error_of([&] { ingest_csv(nonmono); }).find("line 4"), std::string::npos);

  const auto missing = d.file("mc.csv", "t,x,y,phi\n0,0,0,0\n0.1,0,0,0\n0.2,0,0,0\n");
  EXPECT_NE(error_of([&] { ingest_csv(missing); }).find("'theta'"), std::string::npos);

  const auto degrees = d.file("deg.csv", head + "0,0,0,0,0\n0.1,0,0,0,23.75\n0.2,0,0,0,0\n");
  EXPECT_NE(error_of([&] { ingest_csv(degrees); }).find("exceeds pi"), std::string::npos);

  const auto gap = d.file("gap.csv", head + "0,0,0,0,0\n0.1,0,0,0,0\n0.2,0,0,0,0\n0.7,0,0,0,0\n0.8,0,0,0,0\n");
  EXPECT_NE(error_of([&] { ingest_csv(gap); }).find("gap"), std::string::npos);

  const auto text = d.file("txt.csv", head + "0,0,0,0,0\n0.1,a,0,0,0\n0.2,0,0,0,0\n");
  EXPECT_NE(error_of([&] { ingest_csv(text); }).find("'x'"), std::string::npos);

  const auto ragged = d.file("rag.csv", head + "0,0,0,0,0\n0.1,0,0,0\n0.2,0,0,0,0\n");
  EXPECT_NE(error_of([&] { ingest_csv(ragged); }).find("fields"), std::string::npos);

  EXPECT_THROW(ingest_csv(d.path("absent.csv")), ValidationError);
  EXPECT_THROW(ingest_csv(d.file("empty.csv", "")), ValidationError);
}

// Derived velocities against the simulated ones: central differences are
// second order in the sample interval.
TEST(IngestCsv, RoundTripTruncationOrder) {
  TempDir d;
  const auto p = presets::nominal_robot(0.234);
  const InputSignal u{deg2rad(4.75), deg2rad(23.75), 12.36, 0.0};
  auto err_at = [&](double rate) {
    SimOptions o;
    o.t_end = 3.0;
    o.dt_out = 1.0 / rate;
    o.rtol = 1e-11;
    o.atol = 1e-13;
    const auto tr = simulate(p, u, Model::Constrained, o);
    const auto rec = record_from_trajectory(tr);
    std::ofstream out(d.path("rt.csv"));
    out << "t,x,y,theta,phi\n" << std::setprecision(17);
    for (std::size_t i = 0; i < rec.size(); ++i)
      out << rec.t[i] << ',' << rec.x[i] << ',' << rec.y[i] << ',' << rec.theta[i] << ',' << rec.phi[i] << '\n';
    out.close();
    const auto back = ingest_csv(d.path("rt.csv"));
    double e = 0.0;
    for (std::size_t i = 1; i + 1 < back.size(); ++i) e = std::max(e, std::abs(back.v_par[i] - tr.v_par[i]));
    return e;
  };
  const double e1 = err_at(120.0), e2 = err_at(240.0);
  EXPECT_LT(e1, 5e-3);
  EXPECT_NEAR(e1 / e2, 4.0, 0.4);
}

TEST(IngestCsv, WriteThenReadKeepsVelocities) {
  TempDir d;
  const auto rec = synthetic(presets::nominal_robot(0.234), 12.36, Model::Constrained, 1.0);
  write_csv(rec, d.path("w.csv"));
  const auto back = ingest_csv(d.path("w.csv"));
  ASSERT_EQ(back.size(), rec.size());
  for (std::size_t i = 0; i < rec.size(); ++i) {
    EXPECT_NEAR(back.v_par[i], rec.v_par[i], 1e-11);
    EXPECT_NEAR(back.v_perp[i], rec.v_perp[i], 1e-11);
  }
}

TEST(FitDissipation, RecoversGeneratingValue) {
  const auto p = presets::nominal_robot(0.234);
  const auto rec = synthetic(p, 12.36, Model::Constrained);
  for (auto obj : {Objective::VelocityTrace, Objective::DisplacementPerCycle}) {
    FitOptions fo;
    fo.objective = obj;
    const auto r = fit_dissipation({rec}, p, fo);
    EXPECT_NEAR(r.c, 0.234, 0.002) << to_string(obj);
    EXPECT_FALSE(r.at_boundary);
    EXPECT_FALSE(r.multimodal);
    EXPECT_EQ(r.objective_type, obj);
    ASSERT_EQ(r.per_experiment.size(), 1u);
    EXPECT_EQ(r.per_experiment[0].label, "synthetic");
    EXPECT_GE(r.search_trace.size(), 16u);
    for (const auto& tp : r.search_trace) {
      EXPECT_GE(tp.c, fo.lo);
      EXPECT_LE(tp.c, fo.hi);
      EXPECT_TRUE(std::isfinite(tp.objective));
    }
  }
}

TEST(FitDissipation, ConvergesAsToleranceTightens) {
  const auto p = presets::nominal_robot(0.234);
  const auto rec = synthetic(p, 12.36, Model::Constrained);
  double prev = std::numeric_limits<double>::infinity();
  for (double tol : {3e-2, 3e-3, 3e-4}) {
    FitOptions fo;
    fo.tolerance = tol;
    const double err = std::abs(fit_dissipation({rec}, p, fo).c - 0.234);
    EXPECT_LE(err, std::max(prev, 2e-4));
    EXPECT_LE(err, tol * (fo.hi - fo.lo));
    prev = err;
  }
}

TEST(FitDissipation, PinnedAtBoundary) {
  const auto p = presets::nominal_robot(0.234);
  const auto rec = synthetic(p, 12.36, Model::Constrained);
  FitOptions fo;
  fo.lo = 0.5;
  fo.hi = 1.5;
  const auto hi_side = fit_dissipation({rec}, p, fo);
  EXPECT_TRUE(hi_side.at_boundary);
  EXPECT_NEAR(hi_side.c, 0.5, 1e-3);
  EXPECT_FALSE(hi_side.warnings.empty());
  fo.lo = 0.05;
  fo.hi = 0.15;
  const auto lo_side = fit_dissipation({rec}, p, fo);
  EXPECT_TRUE(lo_side.at_boundary);
  EXPECT_NEAR(lo_side.c, 0.15, 1e-3);
}

TEST(FitDissipation, ObjectiveIsContinuousInC) {
  const auto p = presets::nominal_robot(0.234);
  const auto rec = synthetic(p, 12.36, Model::Constrained);
  FitOptions fo;
  double prev = dissipation_objective({rec}, p, fo, 0.3);
  for (int i = 1; i <= 20; ++i) {
    const double c = 0.3 + 1e-4 * i;
    const double f = dissipation_objective({rec}, p, fo, c);
    EXPECT_LT(std::abs(f - prev), 1e-2 * prev);
    prev = f;
  }
  EXPECT_NEAR(dissipation_objective({rec}, p, fo, 0.234), 0.0, 1e-10);
}

TEST(FitDissipation, PerFrequencyResiduals) {
  const auto p = presets::nominal_robot(0.4);
  std::vector<ExperimentRecord> ex;
  for (double w : {6.0, 15.0}) {
    ex.push_back(synthetic(p, w, Model::Constrained));
    ex.back().label = "omega " + std::to_string(int(w));
  }
  FitOptions fo;
  fo.objective = Objective::DisplacementPerCycle;
  std::vector<ExperimentResidual> details;
  const double total = dissipation_objective(ex, p, fo, 0.6, &details);
  ASSERT_EQ(details.size(), 2u);
  EXPECT_NEAR(details[0].residual + details[1].residual, total, 1e-14 * total);
  for (const auto& r : details) {
    EXPECT_GT(r.residual, 0.0);
    EXPECT_NEAR(r.residual, std::pow(r.model_value - r.data_value, 2), 1e-12);
  }
  EXPECT_NEAR(details[0].input.Omega, 6.0, 0.03);
  EXPECT_NEAR(details[1].input.Omega, 15.0, 0.075);
}

TEST(FitDissipation, Errors) {
  const auto p = presets::nominal_robot(0.234);
  EXPECT_THROW(fit_dissipation({}, p, FitOptions{}), ValidationError);
  const auto rec = synthetic(p, 12.36, Model::Constrained, 3.0);
  FitOptions bad;
  bad.lo = 0.5;
  bad.hi = 0.5;
  EXPECT_THROW(fit_dissipation({rec}, p, bad), ValidationError);
  bad.lo = -0.1;
  bad.hi = 1.0;
  EXPECT_THROW(fit_dissipation({rec}, p, bad), ValidationError);
  auto win = rec;
  win.t_lo = 2.0;
  win.t_hi = 1.0;
  EXPECT_THROW(fit_dissipation({win}, p, FitOptions{}), ValidationError);
  EXPECT_EQ(objective_from_string("displacement_per_cycle"), Objective::DisplacementPerCycle);
  EXPECT_THROW(objective_from_string("l2"), ValidationError);
}

TEST(FitDissipation, PrescanMinimaCount) {
  EXPECT_EQ(interior_local_minima({3, 2, 1, 2, 3}), 1);
  EXPECT_EQ(interior_local_minima({1, 2, 3, 4}), 0);
  EXPECT_EQ(interior_local_minima({3, 1, 2, 0.5, 4}), 2);
  EXPECT_EQ(interior_local_minima({2, 1, 1, 2}), 0);
}

TEST(FitSkid, RecoversGeneratingPair) {
  auto p = presets::nominal_robot(0.095);
  p.c_perp = 4.0;
  const auto rec = synthetic(p, 12.36, Model::Skid);
  const auto r = fit_skid({rec}, p, SkidFitOptions{});
  ASSERT_TRUE(r.c_perp.has_value());
  EXPECT_NEAR(r.c / 0.095, 1.0, 0.1);
  EXPECT_NEAR(*r.c_perp / 4.0, 1.0, 0.1);
  EXPECT_FALSE(r.at_boundary);
  ASSERT_TRUE(r.hessian_condition.has_value());
  EXPECT_GT(*r.hessian_condition, 0.0);
  EXPECT_GE(r.search_trace.size(), 36u);
}

// Data from the rolling model: c_perp runs to its upper bound and c closes
// on the rolling fit at the O(1/c_perp) rate of the stiff limit.
TEST(FitSkid, StiffLimitApproachesRollingFit) {
  const auto p = presets::nominal_robot(0.234);
  const auto rec = synthetic(p, 12.36, Model::Constrained, 4.0);
  const double rolling = fit_dissipation({rec}, p, FitOptions{}).c;
  std::vector<double> err;
  for (double cp_hi : {100.0, 1000.0}) {
    SkidFitOptions so;
    so.c_lo = 0.05;
    so.c_hi = 1.0;
    so.cp_lo = 1.0;
    so.cp_hi = cp_hi;
    so.grid = 5;
    so.max_sweeps = 10;
    const auto r = fit_skid({rec}, p, so);
    EXPECT_TRUE(r.at_boundary);
    EXPECT_NEAR(*r.c_perp, cp_hi, 0.05 * cp_hi);
    err.push_back(std::abs(r.c - rolling));
  }
  EXPECT_LT(err[1], err[0] / 5);
  EXPECT_LT(err[1], 0.05 * rolling);
}

TEST(FitSkid, LateralWeightZeroFlagsIdentifiability) {
  auto p = presets::nominal_robot(0.095);
  p.c_perp = 4.0;
  const auto rec = synthetic(p, 12.36, Model::Skid, 4.0);
  SkidFitOptions so;
  so.weight_perp = 0.0;
  so.max_sweeps = 10;
  const auto r = fit_skid({rec}, p, so);
  bool flagged = false;
  for (const auto& w : r.warnings) flagged |= w.find("identifiable") != std::string::npos;
  EXPECT_TRUE(flagged);
}

TEST(FitSkid, Errors) {
  auto p = presets::nominal_robot(0.095);
  p.c_perp = 4.0;
  EXPECT_THROW(fit_skid({}, p, SkidFitOptions{}), ValidationError);
  const auto rec = synthetic(p, 12.36, Model::Skid, 2.0);
  SkidFitOptions so;
  so.cp_lo = 5.0;
  so.cp_hi = 1.0;
  EXPECT_THROW(fit_skid({rec}, p, so), ValidationError);
  so = SkidFitOptions{};
  so.weight_par = so.weight_perp = 0.0;
  EXPECT_THROW(fit_skid({rec}, p, so), ValidationError);
  so = SkidFitOptions{};
  so.grid = 1;
  EXPECT_THROW(fit_skid({rec}, p, so), ValidationError);
}
