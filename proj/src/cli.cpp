#include "czsim/cli.hpp"

#include <filesystem>
#include <fstream>
#include <iomanip>
#include <limits>
#include <optional>
#include <sstream>
#include <string>

#include "CLI11.hpp"
#include "json.hpp"

#include "czsim/bench.hpp"
#include "czsim/error.hpp"
#include "czsim/spectrum.hpp"

namespace czsim {

namespace {

struct Overrides {
  std::string config;
  std::string shape;
  std::optional<double> gate_time;
  std::optional<long long> seed;
  std::string out;
  std::optional<int> workers;
  std::string system;
};

void report_error(std::ostream& err, const std::string& code, const std::string& message) {
  nlohmann::json j{{"error", code}, {"message", message}};
  err << j.dump() << '\n';
}

ConfigDocument load_with_overrides(const Overrides& o) {
  ConfigDocument doc = ConfigDocument::load(o.config);
  if (!o.shape.empty()) doc.set("experiment.shapes", o.shape);
  if (o.gate_time) {
    doc.set("experiment.gate_time_ns", format_number(*o.gate_time));
    doc.set("experiment.gate_times_ns", format_number(*o.gate_time));
  }
  if (o.seed) doc.set("experiment.seed", std::to_string(*o.seed));
  if (!o.out.empty()) doc.set("experiment.output", std::filesystem::absolute(o.out).string());
  if (o.workers) doc.set("experiment.workers", std::to_string(*o.workers));
  if (!o.system.empty()) doc.set("experiment.systems", o.system);
  return doc;
}

/// Device and solver settings from a config that may lack an [experiment] block.
struct Setup {
  Device device;
  SolverSettings solver;
};

Setup load_setup(const ConfigDocument& doc) {
  Setup s{doc.has("experiment.device") ? device_from_config(ConfigDocument::load(doc.get_path("experiment.device")))
                                       : device_from_config(doc),
          solver_from_config(doc)};
  return s;
}

std::ostream& output_stream(const std::string& path, std::ofstream& file, std::ostream& fallback) {
  if (path.empty()) return fallback;
  file.open(path);
  if (!file) throw Error("io", "cannot write '" + path + "'");
  return file;
}

int cmd_calibrate(const Overrides& o, std::ostream& out) {
  const auto doc = ConfigDocument::load(o.config);
  const Setup s = load_setup(doc);
  std::vector<CalibrationResult> results;
  const Device d = o.system.empty() ? s.device : sized_device(s.device, parse_system(o.system));
  calibrate_all(d, s.solver.calibration_lo, s.solver.calibration_hi, &results,
                s.solver.calibration_resolution);
  std::ofstream file;
  std::ostream& os = output_stream(o.out, file, out);
  os << "coupler,idle_ghz,abs_nu_zz_khz,evaluations\n";
  for (const auto& r : results) {
    os << r.coupler << ',' << format_number(to_ghz(r.omega)) << ',' << format_number(to_ghz(r.abs_nu_zz) * 1e6) << ','
       << r.evaluations << '\n';
  }
  return kExitOk;
}

int cmd_spectrum(const Overrides& o, const std::string& grid, std::ostream& out) {
  const auto doc = ConfigDocument::load(o.config);
  const Setup s = load_setup(doc);
  ExperimentConfig ec;
  ec.device = s.device;
  ec.solver = s.solver;
  const SystemSize system = o.system.empty() ? SystemSize::two_qubit : parse_system(o.system);
  const Device d = system_device(ec, system);
  const int c = d.active_pair().coupler;
  std::ofstream file;
  std::ostream& os = output_stream(o.out, file, out);
  os << "coupler_freq_ghz,nu_zz_ghz,g\n";
  for (double f : parse_grid(grid)) {
    const double w = from_ghz(f);
    double nu = std::numeric_limits<double>::quiet_NaN();
    double g = std::numeric_limits<double>::quiet_NaN();
    try {
      nu = to_ghz(zz_interaction(d, {{c, w}}).nu_zz);
    } catch (const Error&) {
    }
    try {
      g = diabaticity_prefactor(d, c, w);
    } catch (const Error&) {
    }
    os << format_number(f) << ',' << format_number(nu) << ',' << format_number(g) << '\n';
  }
  return kExitOk;
}

int cmd_pulse(const Overrides& o, double lambda, int points, std::ostream& out) {
  if (o.shape.empty() || !o.gate_time) throw ConfigError("pulse needs --shape and --gate-time");
  const auto doc = ConfigDocument::load(o.config);
  const Setup s = load_setup(doc);
  const SystemSize system = o.system.empty() ? SystemSize::two_qubit : parse_system(o.system);
  ExperimentConfig ec;
  ec.device = s.device;
  ec.solver = s.solver;
  const GateProblem p(system_device(ec, system), s.solver.problem);
  const auto schedule = p.schedule(parse_pulse_shape(o.shape), lambda, *o.gate_time);
  std::ofstream file;
  std::ostream& os = output_stream(o.out, file, out);
  os << "t_ns,omega_ghz\n";
  for (const auto& [t, w] : sample_schedule(schedule, points)) os << format_number(t) << ',' << format_number(to_ghz(w)) << '\n';
  return kExitOk;
}

int cmd_optimize(Overrides o, const std::string& trace_path, const std::string& dump_path, std::ostream& out) {
  const std::string out_path = o.out;
  o.out.clear();
  ConfigDocument doc = load_with_overrides(o);
  doc.set("experiment.kind", "optimize_single");
  const auto config = load_experiment(doc);
  const auto rep = run_optimize_single(config);
  std::ofstream file;
  std::ostream& os = output_stream(out_path, file, out);
  os << to_json(rep) << '\n';
  if (!trace_path.empty()) {
    std::ofstream tr(trace_path);
    if (!tr) throw Error("io", "cannot write '" + trace_path + "'");
    tr << "generation,lambda,error\n";
    const auto& t = rep.result.trace;
    for (std::size_t g = 0; g < t.best_objective.size(); ++g)
      tr << g << ',' << format_number(t.best_parameters[g][0]) << ',' << format_number(t.best_objective[g]) << '\n';
  }
  if (!dump_path.empty()) {
    std::ofstream dump(dump_path);
    if (!dump) throw Error("io", "cannot write '" + dump_path + "'");
    write_population_dump(rep, dump);
  }
  return kExitOk;
}

int cmd_sweep(const Overrides& o, std::ostream& out, std::ostream& err) {
  const auto config = load_experiment(load_with_overrides(o));
  if (config.kind != ExperimentKind::optimize_single && config.output.empty())
    throw ConfigError("sweep needs an output path (--out or experiment.output)");
  std::size_t n = 0;
  const auto records = run_experiment(config, [&](const SweepRecord& r) {
    ++n;
    err << "[" << n << "] " << r.key() << " " << r.status << '\n';
  });
  std::size_t failed = 0;
  for (const auto& r : records) failed += r.status != "ok";
  out << "experiment " << to_string(config.kind) << ": " << records.size() << " records (" << n << " new, " << failed
      << " failed) -> " << config.output.string() << '\n';
  return kExitOk;
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Tunable-coupler CZ gate simulator"};
  app.require_subcommand(1);
  Overrides o;
  std::string grid = "5.0:8.0:61";
  double lambda = 0.0;
  int points = 201;
  std::string trace;
  std::string dump;

  auto common = [&o](CLI::App* sub, bool pulse_flags) {
    sub->add_option("--config", o.config, "configuration file")->required();
    sub->add_option("--out", o.out, "output file");
    sub->add_option("--system", o.system, "2q or 4q");
    if (pulse_flags) {
      sub->add_option("--shape", o.shape, "fourier, quadratic, hyperbolic or adiabatic");
      sub->add_option("--gate-time", o.gate_time, "gate time in ns");
    }
  };
  auto* calibrate = app.add_subcommand("calibrate", "calibrate coupler idle frequencies");
  common(calibrate, false);
  auto* spectrum = app.add_subcommand("spectrum", "ZZ and G over an active-coupler frequency grid");
  common(spectrum, false);
  spectrum->add_option("--coupler-freqs", grid, "GHz grid, lo:hi:count or a comma list");
  auto* pulse = app.add_subcommand("pulse", "sample a coupler trajectory");
  common(pulse, true);
  pulse->add_option("--lambda", lambda, "pulse parameter")->required();
  pulse->add_option("--points", points, "samples")->check(CLI::Range(2, 1000000));
  auto* optimize = app.add_subcommand("optimize", "optimize one pulse");
  common(optimize, true);
  optimize->add_option("--seed", o.seed, "DE seed");
  optimize->add_option("--trace", trace, "per-generation trace CSV");
  optimize->add_option("--dump", dump, "population trajectory CSV from |11>");
  auto* sweep = app.add_subcommand("sweep", "run a sweep experiment");
  common(sweep, true);
  sweep->add_option("--seed", o.seed, "global seed");
  sweep->add_option("--workers", o.workers, "worker threads")->check(CLI::PositiveNumber);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    report_error(err, "usage", e.what());
    return kExitUsage;
  }

  try {
    if (*calibrate) return cmd_calibrate(o, out);
    if (*spectrum) return cmd_spectrum(o, grid, out);
    if (*pulse) return cmd_pulse(o, lambda, points, out);
    if (*optimize) return cmd_optimize(o, trace, dump, out);
    if (*sweep) return cmd_sweep(o, out, err);
  } catch (const ConfigError& e) {
    report_error(err, e.code(), e.what());
    return kExitUsage;
  } catch (const Error& e) {
    report_error(err, e.code(), e.what());
    return e.code() == "config_unreadable" ? kExitUsage : kExitFailure;
  } catch (const std::exception& e) {
    report_error(err, "internal", e.what());
    return kExitFailure;
  }
  return kExitUsage;
}

}  // namespace czsim
