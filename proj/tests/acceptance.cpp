// Acceptance run: one PASS/FAIL line per criterion.
#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "czsim/bench.hpp"
#include "czsim/config.hpp"
#include "czsim/error.hpp"
#include "czsim/evolve.hpp"
#include "czsim/gate.hpp"
#include "czsim/gate_problem.hpp"
#include "czsim/optimize.hpp"
#include "czsim/spectrum.hpp"

using namespace czsim;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3g", v);
  return buf;
}

struct Context {
  std::filesystem::path source;
  std::filesystem::path work;
  std::filesystem::path g_cache;

  // Experiment config from an inline [experiment]/[solver]/[de] text using the
  // reference device file.
  ExperimentConfig experiment(const std::string& kind, const std::string& body) const {
    std::ostringstream os;
    os << "[experiment]\nkind = " << kind << "\ndevice = " << (source / "configs" / "reference_device.cfg").string()
       << "\nworkers = 1\n"
       << body;
    ExperimentConfig c = load_experiment(ConfigDocument::parse(os.str(), work));
    c.output.clear();
    return c;
  }

  SolverSettings solver(double g_step_mhz) const {
    SolverSettings s;
    s.problem.band_floor = BandFloor::lower_pair_qubit;
    s.problem.hyperbolic_sign = -1.0;
    s.problem.g_step = from_mhz(g_step_mhz);
    s.problem.g_cache_dir = g_cache.string();
    return s;
  }

  const GateProblem& two_qubit() {
    if (!two_) {
      ExperimentConfig c = experiment("optimize_single", "");
      c.solver = solver(1.0);
      two_.emplace(system_device(c, SystemSize::two_qubit), c.solver.problem);
    }
    return *two_;
  }

 private:
  std::optional<GateProblem> two_;
};

// Records by coordinate value.
const SweepRecord* find(const std::vector<SweepRecord>& rs, const std::map<std::string, std::string>& at) {
  for (const auto& r : rs) {
    bool ok = true;
    for (const auto& [k, v] : at) {
      auto it = std::find_if(r.coordinates.begin(), r.coordinates.end(), [&](const auto& c) { return c.first == k; });
      if (it == r.coordinates.end() || it->second != v) ok = false;
    }
    if (ok) return &r;
  }
  return nullptr;
}

Outcome criterion1(Context&) {
  const double f_cz = cz_fidelity(make_truncated(ideal_cz())).fidelity;
  const double f_id = cz_fidelity(make_truncated(Eigen::Matrix4cd::Identity())).fidelity;
  const bool pass = std::abs(f_cz - 1.0) < 1e-12 && std::abs(f_id - 0.3) < 1e-12;
  return {pass, "F(CZ)-1 = " + fmt(f_cz - 1.0) + ", F(I)-0.3 = " + fmt(f_id - 0.3)};
}

Outcome criterion2(Context&) {
  const double t1 = 1000.0;
  Eigen::SparseMatrix<double, Eigen::RowMajor> zero(3, 3);
  StateMatrix rho = StateMatrix::Zero(3, 3);
  rho(1, 1) = 1.0;
  const NoiseModel noise{{t1}, {2.0 * t1}};
  double worst = 0.0;
  for (int k = 0; k <= 40; ++k) {
    const double x = std::pow(10.0, -4.0 + k * (std::log10(2.0) + 4.0) / 40.0);
    const auto r = evolve_lindblad(HermitianOperator(zero), {3}, rho, noise, x * t1);
    worst = std::max(worst, std::abs(r.rho(1, 1).real() - std::exp(-x)));
  }
  return {worst <= 1e-6, "max |p1 - exp(-t/T1)| = " + fmt(worst) + " over 41 points"};
}

Outcome criterion3(Context& ctx) {
  const GateProblem& p = ctx.two_qubit();
  DESettings de;
  de.population = 10;
  de.max_generations = 25;
  de.seed = 3;
  const auto opt = optimize_pulse(p, PulseShape::adiabatic, 25.0, std::nullopt, de);
  const StateMatrix cols = p.basis().as_columns();
  std::vector<Eigen::VectorXcd> inputs;
  for (int c = 0; c < 4; ++c) inputs.push_back(cols.col(c));
  inputs.push_back((cols.col(0) + cols.col(1) + cols.col(2) + cols.col(3)) / 2.0);
  const NoiseModel noiseless = NoiseModel::noiseless(p.device());
  double worst = 0.0;
  for (const auto& psi : inputs) {
    const auto u = propagate_unitary(p.hamiltonian(), opt.schedule, StateMatrix(psi));
    const auto l = evolve_lindblad(p.device(), opt.schedule, pure_density(psi), noiseless);
    worst = std::max(worst, trace_distance(l.rho, pure_density(u.columns.col(0))));
  }
  return {worst < 1e-7, "max trace distance " + fmt(worst) + " (pulse error " + fmt(opt.report.error) + ")"};
}

Outcome criterion4(Context& ctx) {
  ExperimentConfig c = ctx.experiment("gate_length_scan",
                                      "systems = 2q\nshapes = fourier, quadratic, hyperbolic, adiabatic\n"
                                      "gate_times_ns = 40\nseed = 1\n[de]\npopulation = 15\nmax_generations = 60\n"
                                      "tolerance = 1e-12\n");
  c.solver = ctx.solver(1.0);
  const auto rs = run_gate_length_scan(c);
  std::map<std::string, double> err;
  for (auto s : kAllShapes) {
    const auto* r = find(rs, {{"shape", std::string(to_string(s))}});
    err[std::string(to_string(s))] = r ? r->value("error") : kSentinelError;
  }
  const double a = err["adiabatic"];
  bool best = true;
  std::string detail;
  for (const auto& [k, v] : err) {
    if (k != "adiabatic" && !(a < v)) best = false;
    detail += k + " " + fmt(v) + ", ";
  }
  detail.resize(detail.size() - 2);
  return {a <= 1e-4 && best, detail};
}

// Shared by criteria 5 and 6: 4q re-optimisation at 20 and 40 ns plus the
// 2q-optimal lambda replayed on the 4q device.
const std::vector<SweepRecord>& four_qubit_scan(Context& ctx) {
  static std::optional<std::vector<SweepRecord>> rs;
  if (!rs) {
    ExperimentConfig c = ctx.experiment("gate_length_scan",
                                        "systems = 2q, 4q\nshapes = adiabatic\ngate_times_ns = 20, 40\n"
                                        "reuse_two_qubit = true\nseed = 1\n[de]\npopulation = 8\nmax_generations = 12\n");
    c.solver = ctx.solver(10.0);
    rs = run_gate_length_scan(c, [](const SweepRecord& r) {
      std::cout << "  [scan] " << r.key() << " error " << fmt(r.value("error")) << std::endl;
    });
  }
  return *rs;
}

Outcome criterion5(Context& ctx) {
  const auto* r = find(four_qubit_scan(ctx), {{"system", "4q"}, {"gate_time_ns", "40"}});
  if (!r || r->status != "ok") return {false, "4q optimisation failed"};
  const double e = r->value("error");
  return {e >= 1e-5 && e <= 1e-3,
          "4q adiabatic 40 ns error " + fmt(e) + " (leakage " + fmt(r->value("leakage")) + ", lambda " +
              fmt(r->value("lambda")) + ")"};
}

Outcome criterion6(Context& ctx) {
  const auto& rs = four_qubit_scan(ctx);
  bool pass = true;
  std::string detail;
  for (const char* t : {"20", "40"}) {
    const auto* r = find(rs, {{"system", "4q"}, {"gate_time_ns", t}});
    if (!r || r->status != "ok" || !r->values.count("reused_error")) return {false, std::string("no 4q record at ") + t};
    const double reopt = r->value("error");
    const double reused = r->value("reused_error");
    const double ratio = reused / reopt;
    if (!(ratio >= 10.0)) pass = false;
    detail += std::string(t) + " ns: reused " + fmt(reused) + " / re-optimised " + fmt(reopt) + " = " + fmt(ratio) + "; ";
  }
  detail.resize(detail.size() - 2);
  return {pass, detail};
}

Outcome criterion7(Context& ctx) {
  ExperimentConfig c = ctx.experiment("detuning_anharmonicity_map",
                                      "systems = 2q\nshapes = adiabatic\ngate_time_ns = 25\nomega2_ghz = 5.0\n"
                                      "delta_ghz = -0.19:0.81:11\nanharm_ghz = 0.15, 0.25, 0.35\nanharm_axis = eta_c\n"
                                      "[de]\npopulation = 10\nmax_generations = 30\n");
  c.solver = ctx.solver(2.0);
  c.solver.problem.g_cache_dir.clear();
  const auto rs = run_detuning_anharmonicity_map(c);
  const double step = 0.1 + 1e-9;
  bool pass = true;
  std::string detail;
  for (double eta : c.anharm_ghz) {
    std::vector<std::pair<double, double>> row;  // (delta, error) of evaluated points
    for (const auto& r : rs)
      if (r.status == "ok" && r.coordinates[3].second == format_number(eta))
        row.emplace_back(std::stod(r.coordinates[2].second), r.value("error"));
    std::vector<double> maxima;
    for (std::size_t i = 0; i < row.size(); ++i) {
      const bool left = i == 0 || row[i].second > row[i - 1].second;
      const bool right = i + 1 == row.size() || row[i].second > row[i + 1].second;
      if (left && right && i > 0 && i + 1 < row.size()) maxima.push_back(row[i].first);
    }
    auto near = [&](double target) {
      return std::any_of(maxima.begin(), maxima.end(), [&](double d) { return std::abs(d - target) <= step; });
    };
    if (!near(0.0) || !near(0.3)) pass = false;
    detail += "eta_c " + fmt(eta) + " maxima at";
    for (double d : maxima) detail += " " + fmt(d);
    detail += "; ";
  }
  detail.resize(detail.size() - 2);
  return {pass, detail};
}

Outcome criterion8(Context& ctx) {
  std::vector<CalibrationResult> cal;
  ExperimentConfig c = ctx.experiment("calibrate", "");
  const Device four = calibrate_all(Device::reference_four_qubit(), c.solver.calibration_lo, c.solver.calibration_hi,
                                    &cal, c.solver.calibration_resolution);
  double worst_idle = 0.0;
  for (const auto& r : cal) worst_idle = std::max(worst_idle, r.abs_nu_zz);
  const Device two = system_device(c, SystemSize::two_qubit);
  const double idle2 = two.modes()[Device::coupler_mode(0)].omega;
  worst_idle = std::max(worst_idle, std::abs(zz_interaction(two).nu_zz));
  const bool idle_ok = worst_idle < from_khz(10.0);

  bool monotone = true;
  double prev = 0.0;
  for (double w = idle2; w >= from_ghz(5.9); w -= from_mhz(10.0)) {
    const double nu = std::abs(zz_interaction(two, {{0, w}}).nu_zz);
    if (nu < prev) monotone = false;
    prev = nu;
  }

  const int cp = four.active_pair().coupler;
  std::vector<std::pair<double, double>> grid;
  for (int k = 0; k <= 60; ++k) {
    const double f = 5.0 + 0.05 * k;
    try {
      grid.emplace_back(f, zz_interaction(four, {{cp, from_ghz(f)}}).nu_zz);
    } catch (const Error&) {
    }
  }
  std::vector<double> crossings;
  for (std::size_t i = 1; i < grid.size(); ++i)
    if (std::signbit(grid[i - 1].second) != std::signbit(grid[i].second))
      crossings.push_back(0.5 * (grid[i - 1].first + grid[i].first));
  const bool sign_ok =
      std::any_of(crossings.begin(), crossings.end(), [](double f) { return std::abs(f - 5.4) <= 0.1; });
  std::string where;
  for (double f : crossings) where += " " + fmt(f);
  return {idle_ok && monotone && sign_ok, "max idle |nu| " + fmt(to_ghz(worst_idle) * 1e6) + " kHz, 2q monotone " +
                                              (monotone ? "yes" : "no") + ", 4q sign changes near" + where + " GHz"};
}

Outcome criterion9(Context& ctx) {
  ExperimentConfig c = ctx.experiment("relaxation_map",
                                      "systems = 2q\nshapes = fourier, quadratic, hyperbolic, adiabatic\n"
                                      "gate_time_ns = 25\nt1_qubit_us = 10, 50, 200\nt1_coupler_us = 10, 50, 200\n"
                                      "[de]\npopulation = 10\nmax_generations = 25\n");
  c.solver = ctx.solver(1.0);
  const auto rs = run_relaxation_map(c);
  const std::vector<std::string> t1 = {"10", "50", "200"};
  bool monotone = true;
  std::map<std::string, double> corner;
  for (auto s : kAllShapes) {
    const std::string shape(to_string(s));
    auto loss = [&](const std::string& q, const std::string& cp) {
      const auto* r = find(rs, {{"shape", shape}, {"t1_qubit_us", q}, {"t1_coupler_us", cp}});
      return r && r->status == "ok" ? r->value("loss") : std::nan("");
    };
    for (std::size_t i = 0; i < t1.size(); ++i) {
      for (std::size_t j = 0; j < t1.size(); ++j) {
        const double here = loss(t1[i], t1[j]);
        if (std::isnan(here)) monotone = false;
        if (i + 1 < t1.size() && !(loss(t1[i + 1], t1[j]) <= here + 1e-12)) monotone = false;
        if (j + 1 < t1.size() && !(loss(t1[i], t1[j + 1]) <= here + 1e-12)) monotone = false;
      }
    }
    corner[shape] = loss("200", "200");
  }
  bool minimal = true;
  std::string detail = "losses at 200/200 us:";
  for (const auto& [k, v] : corner) {
    if (k != "adiabatic" && !(corner["adiabatic"] < v)) minimal = false;
    detail += " " + k + " " + fmt(v);
  }
  detail += std::string(", monotone ") + (monotone ? "yes" : "no");
  return {monotone && minimal, detail};
}

Outcome criterion10(Context& ctx) {
  std::vector<std::string> failed;
  auto check = [&](bool ok, const std::string& what) {
    if (!ok) failed.push_back(what);
  };
  check(build_hamiltonian(Device::reference_four_qubit()).hermiticity_defect() <= 1e-12, "hermiticity 4q");
  const GateProblem& p = ctx.two_qubit();
  check(p.hamiltonian().at(from_ghz(6.0)).hermiticity_defect() <= 1e-12, "hermiticity driven");

  const PulseSchedule s = p.schedule(PulseShape::fourier, -0.15, 25.0);
  PropagationOptions o1;
  o1.rel_tol = 1e-9;
  PropagationOptions o2;
  o2.rel_tol = 0.5e-9;
  const StateMatrix cols = p.basis().as_columns();
  const auto a = propagate_unitary(p.hamiltonian(), s, cols, o1);
  const auto b = propagate_unitary(p.hamiltonian(), s, cols, o2);
  check(a.max_norm_drift <= 1e-8 && b.max_norm_drift <= 1e-8, "norm drift");
  check((a.columns - b.columns).cwiseAbs().maxCoeff() < 1e-8, "self-convergence");

  PropagationOptions lo;
  lo.check_each_step = true;
  const auto l = evolve_lindblad(p.device(), s, pure_density(cols.col(3)), NoiseModel::equal_t2(p.device(), 2000.0, 1000.0), lo);
  check(l.max_trace_drift <= 1e-8, "trace preservation");
  check(l.min_eigenvalue >= -1e-8, "positivity");

  const Device& d = p.device();
  const double delta = from_mhz(0.1);
  for (double f : {6.0, 6.8, 7.86}) {
    const double w = from_ghz(f);
    const auto br = diabaticity(d, 0, w, true);
    const Spectrum sp = labeled_spectrum(d, {{0, w + delta}});
    const Spectrum sm = labeled_spectrum(d, {{0, w - delta}});
    const Spectrum s0 = labeled_spectrum(d, {{0, w}});
    double g_fd = 0.0;
    for (const auto& t : br.terms) {
      const Eigen::VectorXd dv = (sp.vectors.col(t.v_state) - sm.vectors.col(t.v_state)) / (2.0 * delta);
      g_fd += std::abs(s0.vectors.col(t.u_state).dot(dv)) / std::abs(t.gap);
    }
    check(std::abs(br.value - g_fd) <= 0.01 * std::abs(g_fd), "G finite difference at " + fmt(f));
  }

  auto fn = [](double x) { return std::sin(5.0 * x) + 0.1 * x * x; };
  double best_x = -5.0;
  for (double x = -5.0; x <= 5.0; x += 1e-4)
    if (fn(x) < fn(best_x)) best_x = x;
  DESettings de;
  de.seed = 5;
  const auto r = de_minimize([&](const std::vector<double>& x) { return fn(x[0]); }, {{-5.0, 5.0}}, de);
  check(std::abs(r.best[0] - best_x) < 1e-3, "DE grid oracle");

  std::string detail = "norm drift " + fmt(std::max(a.max_norm_drift, b.max_norm_drift)) + ", trace drift " +
                       fmt(l.max_trace_drift) + ", min eigenvalue " + fmt(l.min_eigenvalue);
  for (const auto& f : failed) detail += ", failed: " + f;
  return {failed.empty(), detail};
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"czsim acceptance"};
  std::vector<int> only;
  std::string work = (std::filesystem::temp_directory_path() / "czsim_acceptance").string();
  std::string cache = "gcache";
  app.add_option("--only", only, "criteria to run (default: all)")->check(CLI::Range(1, 10));
  app.add_option("--work-dir", work, "scratch directory");
  app.add_option("--g-cache", cache, "persistent G table cache directory");
  CLI11_PARSE(app, argc, argv);

  Context ctx;
  ctx.source = CZSIM_SOURCE_DIR;
  ctx.work = work;
  ctx.g_cache = std::filesystem::absolute(cache);
  std::filesystem::remove_all(ctx.work);
  std::filesystem::create_directories(ctx.work);

  const std::vector<std::function<Outcome(Context&)>> criteria = {
      criterion1, criterion2, criterion3, criterion4, criterion5,
      criterion6, criterion7, criterion8, criterion9, criterion10};
  int failures = 0;
  for (int i = 1; i <= static_cast<int>(criteria.size()); ++i) {
    if (!only.empty() && std::find(only.begin(), only.end(), i) == only.end()) continue;
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = criteria[i - 1](ctx);
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (!o.pass) ++failures;
    std::cout << "criterion " << i << ": " << (o.pass ? "PASS" : "FAIL") << "  " << o.detail << "  [" << fmt(secs)
              << " s]" << std::endl;
  }
  std::cout << (failures == 0 ? "all criteria passed" : std::to_string(failures) + " criteria failed") << std::endl;
  return failures == 0 ? 0 : 1;
}
