#include "czsim/bench.hpp"

#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <limits>
#include <mutex>
#include <sstream>
#include <thread>

#include "json.hpp"

#include "czsim/error.hpp"
#include "czsim/evolve.hpp"
#include "czsim/spectrum.hpp"

namespace czsim {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

template <typename T>
class Lazy {
 public:
  explicit Lazy(std::function<T()> make) : make_(std::move(make)) {}
  const T& get() {
    std::call_once(once_, [this] { value_ = std::make_unique<T>(make_()); });
    return *value_;
  }

 private:
  std::function<T()> make_;
  std::once_flag once_;
  std::unique_ptr<T> value_;
};

using Coordinates = std::vector<std::pair<std::string, std::string>>;

std::string coordinate_key(const Coordinates& c) {
  std::string k;
  for (const auto& [name, value] : c) k += name + "=" + value + ";";
  return k;
}

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::string cell;
  std::stringstream ss(line);
  while (std::getline(ss, cell, ',')) out.push_back(cell);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

double parse_cell(const std::string& s) {
  if (s.empty() || s == "nan") return kNaN;
  return std::strtod(s.c_str(), nullptr);
}

std::string join_row(const std::vector<std::string>& cells) {
  std::string out;
  for (std::size_t i = 0; i < cells.size(); ++i) {
    if (i) out += ',';
    out += cells[i];
  }
  return out;
}

std::vector<std::string> to_row(const CsvSchema& schema, const SweepRecord& r) {
  std::vector<std::string> cells;
  for (const auto& [name, value] : r.coordinates) cells.push_back(value);
  for (const auto& v : schema.values) cells.push_back(format_number(r.value(v)));
  cells.push_back(r.status);
  cells.push_back(format_number(r.wall_time));
  return cells;
}

DESettings seeded(const ExperimentConfig& config, const std::string& key) {
  DESettings de = config.de;
  de.seed = derive_seed(config.seed, key);
  return de;
}

void fill_report(SweepRecord& r, const FidelityReport& f) {
  r.values["error"] = f.error;
  r.values["fidelity"] = f.fidelity;
  r.values["leakage"] = f.leakage;
}

Device calibrated(const Device& d, const SolverSettings& s) {
  if (!s.calibrate) return d;
  if (d.num_qubits() == 2) {
    const int c = d.active_pair().coupler;
    const auto cal = calibrate_idle(d, c, s.calibration_lo, s.calibration_hi, s.calibration_resolution);
    return d.with_coupler_frequency(c, cal.omega);
  }
  return calibrate_all(d, s.calibration_lo, s.calibration_hi, nullptr, s.calibration_resolution);
}

}  // namespace

Device sized_device(const Device& d, SystemSize system) {
  const auto& pair = d.active_pair();
  if (system == SystemSize::two_qubit) return d.num_qubits() == 2 ? d : d.subchain(pair.qubit_a, pair.qubit_b);
  if (d.num_qubits() < 4) throw ConfigError("a 4q system needs a device with at least four qubits");
  return d;
}

namespace {

std::vector<SystemSize> parse_systems(const std::vector<std::string>& names) {
  std::vector<SystemSize> out;
  for (const auto& n : names) out.push_back(parse_system(n));
  return out;
}

}  // namespace

std::string_view to_string(ExperimentKind kind) {
  switch (kind) {
    case ExperimentKind::gate_length_scan: return "gate_length_scan";
    case ExperimentKind::detuning_anharmonicity_map: return "detuning_anharmonicity_map";
    case ExperimentKind::zz_map: return "zz_map";
    case ExperimentKind::relaxation_map: return "relaxation_map";
    case ExperimentKind::calibrate: return "calibrate";
    case ExperimentKind::optimize_single: return "optimize_single";
  }
  return "unknown";
}

ExperimentKind parse_experiment_kind(std::string_view name) {
  for (auto k : {ExperimentKind::gate_length_scan, ExperimentKind::detuning_anharmonicity_map, ExperimentKind::zz_map,
                 ExperimentKind::relaxation_map, ExperimentKind::calibrate, ExperimentKind::optimize_single}) {
    if (to_string(k) == name) return k;
  }
  throw ConfigError("unknown experiment kind '" + std::string(name) + "'");
}

std::string_view to_string(SystemSize s) { return s == SystemSize::two_qubit ? "2q" : "4q"; }

SystemSize parse_system(std::string_view name) {
  if (name == "2q") return SystemSize::two_qubit;
  if (name == "4q") return SystemSize::four_qubit;
  throw ConfigError("unknown system '" + std::string(name) + "' (expected 2q or 4q)");
}

std::string format_number(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.10g", v);
  return buf;
}

double SweepRecord::value(const std::string& column) const {
  auto it = values.find(column);
  return it == values.end() ? kNaN : it->second;
}

std::string SweepRecord::key() const { return coordinate_key(coordinates); }

std::vector<std::string> CsvSchema::header() const {
  std::vector<std::string> h = coordinates;
  h.insert(h.end(), values.begin(), values.end());
  h.push_back("status");
  h.push_back("wall_time_s");
  return h;
}

CsvSchema schema_for(ExperimentKind kind) {
  switch (kind) {
    case ExperimentKind::gate_length_scan:
      return {{"system", "shape", "gate_time_ns"},
              {"lambda", "error", "fidelity", "leakage", "reused_lambda", "reused_error"}};
    case ExperimentKind::detuning_anharmonicity_map:
      return {{"system", "axis", "delta_ghz", "anharm_ghz"}, {"idle_ghz", "lambda", "error", "fidelity", "leakage"}};
    case ExperimentKind::zz_map:
      return {{"system", "coupler_freq_ghz", "eta_c_ghz"}, {"nu_zz_ghz", "abs_nu_zz_ghz"}};
    case ExperimentKind::relaxation_map:
      return {{"shape", "t1_qubit_us", "t1_coupler_us"}, {"lambda", "loss"}};
    case ExperimentKind::calibrate:
      return {{"system", "coupler"}, {"idle_ghz", "abs_nu_zz_ghz", "evaluations"}};
    case ExperimentKind::optimize_single:
      return {{"system", "shape", "gate_time_ns"}, {"lambda", "error", "fidelity", "leakage"}};
  }
  throw ConfigError("no schema for experiment kind");
}

int resolve_workers(int requested) {
  if (requested > 0) return requested;
  if (const char* env = std::getenv("CZSIM_WORKERS")) {
    char* end = nullptr;
    const long v = std::strtol(env, &end, 10);
    if (end == env || *end != '\0' || v < 1) throw ConfigError("CZSIM_WORKERS must be a positive integer");
    return static_cast<int>(v);
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

void ExperimentConfig::validate() const {
  auto nonempty = [](const auto& v, const char* name) {
    if (v.empty()) throw ConfigError(std::string("grid '") + name + "' is empty");
  };
  if (systems.empty()) throw ConfigError("no systems selected");
  if (shapes.empty()) throw ConfigError("no pulse shapes selected");
  switch (kind) {
    case ExperimentKind::gate_length_scan:
      nonempty(gate_times, "gate_times_ns");
      for (double t : gate_times)
        if (!(t > 0.0)) throw ConfigError("gate times must be positive");
      break;
    case ExperimentKind::detuning_anharmonicity_map:
      nonempty(delta_ghz, "delta_ghz");
      nonempty(anharm_ghz, "anharm_ghz");
      break;
    case ExperimentKind::zz_map:
      nonempty(coupler_freq_ghz, "coupler_freq_ghz");
      nonempty(eta_c_ghz, "eta_c_ghz");
      break;
    case ExperimentKind::relaxation_map:
      nonempty(t1_qubit_us, "t1_qubit_us");
      nonempty(t1_coupler_us, "t1_coupler_us");
      for (double t : t1_qubit_us)
        if (!(t > 0.0)) throw ConfigError("T1 values must be positive");
      for (double t : t1_coupler_us)
        if (!(t > 0.0)) throw ConfigError("T1 values must be positive");
      break;
    case ExperimentKind::calibrate:
    case ExperimentKind::optimize_single:
      break;
  }
  const bool single_time = kind == ExperimentKind::detuning_anharmonicity_map ||
                           kind == ExperimentKind::relaxation_map || kind == ExperimentKind::optimize_single;
  if (single_time && !(gate_time > 0.0)) throw ConfigError("gate_time_ns must be positive");
  for (const auto& [shape, b] : lambda_bounds)
    if (!(b.first <= b.second)) throw ConfigError("lambda bounds for " + std::string(czsim::to_string(shape)) + " are not ordered");
  de.validate();
}

SolverSettings solver_from_config(const ConfigDocument& doc) {
  doc.require_known("solver", {"rel_tol", "g_step_mhz", "band_floor", "band_below_ghz", "band_above_ghz",
                               "g_margin_mhz", "hyperbolic_sign", "calibrate", "calibration_lo_ghz",
                               "calibration_hi_ghz", "calibration_resolution_mhz", "g_cache_dir"});
  SolverSettings s;
  auto& p = s.problem;
  p.rel_tol = doc.get_double("solver.rel_tol", p.rel_tol);
  p.g_step = from_mhz(doc.get_double("solver.g_step_mhz", to_ghz(p.g_step) * 1e3));
  const std::string floor = doc.get_string("solver.band_floor", "highest_qubit");
  if (floor == "highest_qubit") {
    p.band_floor = BandFloor::highest_qubit;
  } else if (floor == "lower_pair_qubit") {
    p.band_floor = BandFloor::lower_pair_qubit;
  } else {
    throw ConfigError("solver.band_floor must be highest_qubit or lower_pair_qubit");
  }
  p.band_below = from_ghz(doc.get_double("solver.band_below_ghz", to_ghz(p.band_below)));
  p.band_above = from_ghz(doc.get_double("solver.band_above_ghz", to_ghz(p.band_above)));
  p.g_margin = from_mhz(doc.get_double("solver.g_margin_mhz", to_ghz(p.g_margin) * 1e3));
  p.hyperbolic_sign = doc.get_double("solver.hyperbolic_sign", p.hyperbolic_sign);
  if (p.hyperbolic_sign != 1.0 && p.hyperbolic_sign != -1.0) throw ConfigError("solver.hyperbolic_sign must be +1 or -1");
  if (doc.has("solver.g_cache_dir")) p.g_cache_dir = doc.get_path("solver.g_cache_dir").string();
  if (!(p.rel_tol > 0.0) || !(p.g_step > 0.0)) throw ConfigError("solver tolerances and steps must be positive");
  s.calibrate = doc.get_bool("solver.calibrate", s.calibrate);
  s.calibration_lo = from_ghz(doc.get_double("solver.calibration_lo_ghz", to_ghz(s.calibration_lo)));
  s.calibration_hi = from_ghz(doc.get_double("solver.calibration_hi_ghz", to_ghz(s.calibration_hi)));
  s.calibration_resolution =
      from_mhz(doc.get_double("solver.calibration_resolution_mhz", to_ghz(s.calibration_resolution) * 1e3));
  if (!(s.calibration_lo < s.calibration_hi)) throw ConfigError("calibration bracket is not ordered");
  return s;
}

DESettings de_from_config(const ConfigDocument& doc) {
  doc.require_known("de", {"population", "mutation", "crossover", "max_generations", "tolerance", "workers"});
  DESettings de;
  de.population = static_cast<int>(doc.get_int("de.population", de.population));
  de.mutation = doc.get_double("de.mutation", de.mutation);
  de.crossover = doc.get_double("de.crossover", de.crossover);
  de.max_generations = static_cast<int>(doc.get_int("de.max_generations", de.max_generations));
  de.tolerance = doc.get_double("de.tolerance", de.tolerance);
  de.workers = static_cast<int>(doc.get_int("de.workers", de.workers));
  try {
    de.validate();
  } catch (const Error& e) {
    throw ConfigError(std::string("invalid [de] block: ") + e.what());
  }
  return de;
}

ExperimentConfig load_experiment(const ConfigDocument& doc) {
  doc.require_known("experiment", {"kind", "device", "systems", "shapes", "gate_times_ns", "gate_time_ns",
                                   "reuse_two_qubit", "delta_ghz", "anharm_ghz", "anharm_axis", "omega2_ghz",
                                   "coupler_freq_ghz", "eta_c_ghz", "t1_qubit_us", "t1_coupler_us",
                                   "lambda_bounds.*", "lambda.*", "seed", "output", "workers"});
  for (const auto& [key, value] : doc.entries()) {
    const std::string section = key.substr(0, key.find('.'));
    if (section != "experiment" && section != "device" && section != "solver" && section != "de")
      throw ConfigError("unknown section [" + section + "]");
  }
  ExperimentConfig c;
  c.kind = parse_experiment_kind(doc.get_string("experiment.kind"));
  if (doc.has("experiment.device")) {
    c.device_path = doc.get_path("experiment.device");
    c.device = device_from_config(ConfigDocument::load(c.device_path));
  } else if (doc.has_section("device")) {
    c.device = device_from_config(doc);
  } else {
    throw ConfigError("config needs a [device] block or experiment.device");
  }

  if (doc.has("experiment.systems")) c.systems = parse_systems(doc.get_strings("experiment.systems"));
  if (doc.has("experiment.shapes")) {
    c.shapes.clear();
    for (const auto& s : doc.get_strings("experiment.shapes")) c.shapes.push_back(parse_pulse_shape(s));
  } else if (c.kind == ExperimentKind::detuning_anharmonicity_map || c.kind == ExperimentKind::optimize_single) {
    c.shapes = {PulseShape::adiabatic};
  }
  c.gate_times = doc.has("experiment.gate_times_ns") ? doc.get_grid("experiment.gate_times_ns") : parse_grid("10:60:26");
  c.reuse_two_qubit = doc.get_bool("experiment.reuse_two_qubit", c.reuse_two_qubit);
  c.gate_time = doc.get_double("experiment.gate_time_ns", c.gate_time);
  c.delta_ghz = doc.has("experiment.delta_ghz") ? doc.get_grid("experiment.delta_ghz") : parse_grid("-0.5:0.8:41");
  c.anharm_ghz = doc.has("experiment.anharm_ghz") ? doc.get_grid("experiment.anharm_ghz") : parse_grid("0.1:0.5:21");
  const std::string axis = doc.get_string("experiment.anharm_axis", "eta_c");
  if (axis == "eta_c") {
    c.axis = AnharmonicityAxis::coupler;
  } else if (axis == "eta_q") {
    c.axis = AnharmonicityAxis::qubits;
  } else {
    throw ConfigError("experiment.anharm_axis must be eta_c or eta_q");
  }
  c.omega2_ghz = doc.get_double("experiment.omega2_ghz", c.omega2_ghz);
  c.coupler_freq_ghz =
      doc.has("experiment.coupler_freq_ghz") ? doc.get_grid("experiment.coupler_freq_ghz") : parse_grid("5.0:8.0:61");
  c.eta_c_ghz = doc.has("experiment.eta_c_ghz") ? doc.get_grid("experiment.eta_c_ghz") : parse_grid("0.1:0.5:21");
  const char* t1_default = "1, 2, 5, 10, 20, 50, 100, 200";
  c.t1_qubit_us = doc.has("experiment.t1_qubit_us") ? doc.get_grid("experiment.t1_qubit_us") : parse_grid(t1_default);
  c.t1_coupler_us =
      doc.has("experiment.t1_coupler_us") ? doc.get_grid("experiment.t1_coupler_us") : parse_grid(t1_default);

  for (const auto& key : doc.keys_in("experiment")) {
    if (key.rfind("lambda_bounds.", 0) == 0) {
      const auto shape = parse_pulse_shape(key.substr(14));
      const auto b = doc.get_doubles("experiment." + key);
      if (b.size() != 2) throw ConfigError("experiment." + key + " needs two values");
      c.lambda_bounds[shape] = {b[0], b[1]};
    } else if (key.rfind("lambda.", 0) == 0) {
      c.fixed_lambda[parse_pulse_shape(key.substr(7))] = doc.get_double("experiment." + key);
    }
  }

  c.solver = solver_from_config(doc);
  c.de = de_from_config(doc);
  if (doc.has("experiment.output")) c.output = doc.get_path("experiment.output");
  const long long seed = doc.get_int("experiment.seed", 1);
  if (seed < 0) throw ConfigError("experiment.seed must be non-negative");
  c.seed = static_cast<std::uint64_t>(seed);
  c.workers = static_cast<int>(doc.get_int("experiment.workers", 0));
  if (c.workers < 0) throw ConfigError("experiment.workers must be non-negative");
  c.validate();
  return c;
}

std::vector<SweepRecord> read_csv(const std::filesystem::path& path, const CsvSchema& schema) {
  std::ifstream in(path);
  if (!in) throw Error("io", "cannot read '" + path.string() + "'");
  std::string line;
  if (!std::getline(in, line)) return {};
  const auto header = schema.header();
  if (split_csv(line) != header)
    throw ConfigError("existing output '" + path.string() + "' has a different header; refusing to append");
  const std::size_t nc = schema.coordinates.size();
  std::vector<SweepRecord> out;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto cells = split_csv(line);
    if (cells.size() != header.size()) continue;  // truncated tail from an interrupted run
    SweepRecord r;
    for (std::size_t i = 0; i < nc; ++i) r.coordinates.emplace_back(schema.coordinates[i], cells[i]);
    for (std::size_t i = 0; i < schema.values.size(); ++i) {
      const double v = parse_cell(cells[nc + i]);
      if (!std::isnan(v)) r.values[schema.values[i]] = v;
    }
    r.status = cells[header.size() - 2];
    r.wall_time = parse_cell(cells.back());
    out.push_back(std::move(r));
  }
  return out;
}

std::vector<SweepRecord> SweepRunner::run(const std::vector<Point>& points) const {
  std::map<std::string, SweepRecord> done;
  bool need_header = true;
  if (!path.empty() && std::filesystem::exists(path) && std::filesystem::file_size(path) > 0) {
    for (auto& r : read_csv(path, schema)) done.emplace(r.key(), std::move(r));
    need_header = false;
    // an interrupted write may leave a partial last line
    std::ifstream in(path, std::ios::binary);
    in.seekg(-1, std::ios::end);
    char last = '\n';
    in.get(last);
    if (last != '\n') std::ofstream(path, std::ios::app) << '\n';
  }

  std::ofstream out;
  if (!path.empty()) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    out.open(path, std::ios::app);
    if (!out) throw Error("io", "cannot write '" + path.string() + "'");
    if (need_header) out << join_row(schema.header()) << '\n' << std::flush;
  }

  std::vector<std::size_t> todo;
  for (std::size_t i = 0; i < points.size(); ++i)
    if (!done.count(coordinate_key(points[i].coordinates))) todo.push_back(i);

  std::vector<std::optional<SweepRecord>> results(todo.size());
  std::size_t next_to_write = 0;
  std::mutex mu;
  std::atomic<std::size_t> next{0};

  auto work = [&] {
    for (;;) {
      const std::size_t k = next.fetch_add(1);
      if (k >= todo.size()) return;
      const auto& point = points[todo[k]];
      const auto t0 = std::chrono::steady_clock::now();
      SweepRecord r;
      try {
        r = point.compute();
      } catch (const Error& e) {
        r = SweepRecord{};
        r.status = e.code();
        r.values = sentinel;
      } catch (const std::exception&) {
        r = SweepRecord{};
        r.status = "failed";
        r.values = sentinel;
      }
      r.coordinates = point.coordinates;
      r.wall_time = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

      std::lock_guard lock(mu);
      results[k] = std::move(r);
      while (next_to_write < results.size() && results[next_to_write]) {
        const auto& rec = *results[next_to_write];
        if (out.is_open()) out << join_row(to_row(schema, rec)) << '\n' << std::flush;
        if (on_record) on_record(rec);
        ++next_to_write;
      }
    }
  };

  const int n = std::max(1, std::min<int>(workers, static_cast<int>(todo.size())));
  if (n == 1) {
    work();
  } else {
    std::vector<std::thread> pool;
    for (int i = 0; i < n; ++i) pool.emplace_back(work);
    for (auto& t : pool) t.join();
  }

  std::vector<SweepRecord> all;
  std::size_t k = 0;
  for (std::size_t i = 0; i < points.size(); ++i) {
    auto it = done.find(coordinate_key(points[i].coordinates));
    if (it != done.end()) {
      all.push_back(it->second);
    } else {
      all.push_back(*results[k++]);
    }
  }
  return all;
}

Device system_device(const ExperimentConfig& config, SystemSize system) {
  return calibrated(sized_device(config.device, system), config.solver);
}

std::optional<std::pair<double, double>> configured_bounds(const ExperimentConfig& config, PulseShape shape) {
  auto it = config.lambda_bounds.find(shape);
  if (it == config.lambda_bounds.end()) return std::nullopt;
  return it->second;
}

std::vector<SweepRecord> run_gate_length_scan(const ExperimentConfig& config, RecordCallback cb) {
  const CsvSchema schema = schema_for(ExperimentKind::gate_length_scan);
  SweepRunner runner{schema, config.output, resolve_workers(config.workers), cb,
                     {{"error", kSentinelError}}};

  std::map<SystemSize, std::unique_ptr<Lazy<GateProblem>>> problems;
  for (auto s : {SystemSize::two_qubit, SystemSize::four_qubit}) {
    problems[s] = std::make_unique<Lazy<GateProblem>>(
        [&config, s] { return GateProblem(system_device(config, s), config.solver.problem); });
  }

  auto coords = [](SystemSize s, PulseShape shape, double t) {
    return Coordinates{{"system", std::string(to_string(s))},
                       {"shape", std::string(to_string(shape))},
                       {"gate_time_ns", format_number(t)}};
  };
  auto optimise = [&config, &problems, coords](SystemSize s, PulseShape shape, double t) {
    SweepRecord r;
    const GateProblem& p = problems.at(s)->get();
    const auto res =
        optimize_pulse(p, shape, t, configured_bounds(config, shape), seeded(config, coordinate_key(coords(s, shape, t))));
    r.values["lambda"] = res.lambda;
    fill_report(r, res.report);
    return r;
  };

  bool want2 = false, want4 = false;
  for (auto s : config.systems) (s == SystemSize::two_qubit ? want2 : want4) = true;
  const bool reuse = want4 && config.reuse_two_qubit;

  std::vector<SweepRecord> all;
  std::map<std::string, double> two_qubit_lambda;  // shape;T -> lambda
  if (want2 || reuse) {
    std::vector<SweepRunner::Point> pts;
    for (auto shape : config.shapes)
      for (double t : config.gate_times)
        pts.push_back({coords(SystemSize::two_qubit, shape, t),
                       [=] { return optimise(SystemSize::two_qubit, shape, t); }});
    for (auto& r : runner.run(pts)) {
      if (r.status == "ok") two_qubit_lambda[r.coordinates[1].second + ";" + r.coordinates[2].second] = r.value("lambda");
      all.push_back(std::move(r));
    }
  }
  if (want4) {
    std::vector<SweepRunner::Point> pts;
    for (auto shape : config.shapes) {
      for (double t : config.gate_times) {
        auto c = coords(SystemSize::four_qubit, shape, t);
        std::optional<double> reused;
        if (reuse) {
          auto it = two_qubit_lambda.find(c[1].second + ";" + c[2].second);
          if (it != two_qubit_lambda.end()) reused = it->second;
        }
        pts.push_back({c, [=, &problems] {
                         SweepRecord r = optimise(SystemSize::four_qubit, shape, t);
                         if (reused) {
                           r.values["reused_lambda"] = *reused;
                           try {
                             r.values["reused_error"] = problems.at(SystemSize::four_qubit)->get().evaluate(shape, *reused, t).error;
                           } catch (const Error&) {
                             r.values["reused_error"] = kSentinelError;
                           }
                         }
                         return r;
                       }});
      }
    }
    for (auto& r : runner.run(pts)) all.push_back(std::move(r));
  }
  return all;
}

std::vector<SweepRecord> run_detuning_anharmonicity_map(const ExperimentConfig& config, RecordCallback cb) {
  const CsvSchema schema = schema_for(ExperimentKind::detuning_anharmonicity_map);
  SweepRunner runner{schema, config.output, resolve_workers(config.workers), cb, {{"error", kSentinelError}}};
  const PulseShape shape = config.shapes.front();
  const std::string axis = config.axis == AnharmonicityAxis::coupler ? "eta_c" : "eta_q";

  std::vector<SweepRunner::Point> pts;
  for (auto system : config.systems) {
    for (double eta : config.anharm_ghz) {
      for (double delta : config.delta_ghz) {
        Coordinates c{{"system", std::string(to_string(system))},
                      {"axis", axis},
                      {"delta_ghz", format_number(delta)},
                      {"anharm_ghz", format_number(eta)}};
        pts.push_back({c, [&config, system, eta, delta, shape, c] {
                         Device d = config.device;
                         const auto& pair = d.active_pair();
                         const auto& modes = d.modes();
                         const int ma = Device::qubit_mode(pair.qubit_a);
                         const int mb = Device::qubit_mode(pair.qubit_b);
                         d = d.with_mode(ma, from_ghz(config.omega2_ghz + delta), modes[ma].eta);
                         d = d.with_mode(mb, from_ghz(config.omega2_ghz), d.modes()[mb].eta);
                         const double e = -std::abs(from_ghz(eta));
                         if (config.axis == AnharmonicityAxis::coupler) {
                           const int mc = Device::coupler_mode(pair.coupler);
                           d = d.with_mode(mc, d.modes()[mc].omega, e);
                         } else {
                           for (int q = 0; q < d.num_qubits(); ++q) {
                             const int m = Device::qubit_mode(q);
                             d = d.with_mode(m, d.modes()[m].omega, e);
                           }
                         }
                         const GateProblem p(calibrated(sized_device(d, system), config.solver), config.solver.problem);
                         SweepRecord r;
                         r.values["idle_ghz"] = to_ghz(p.idle());
                         const auto res = optimize_pulse(p, shape, config.gate_time, configured_bounds(config, shape),
                                                         seeded(config, coordinate_key(c)));
                         r.values["lambda"] = res.lambda;
                         fill_report(r, res.report);
                         return r;
                       }});
      }
    }
  }
  return runner.run(pts);
}

std::vector<SweepRecord> run_zz_map(const ExperimentConfig& config, RecordCallback cb) {
  const CsvSchema schema = schema_for(ExperimentKind::zz_map);
  SweepRunner runner{schema, config.output, resolve_workers(config.workers), cb, {}};
  std::map<SystemSize, std::unique_ptr<Lazy<Device>>> devices;
  for (auto s : config.systems)
    devices[s] = std::make_unique<Lazy<Device>>([&config, s] { return system_device(config, s); });

  std::vector<SweepRunner::Point> pts;
  for (auto system : config.systems) {
    for (double eta : config.eta_c_ghz) {
      for (double f : config.coupler_freq_ghz) {
        Coordinates c{{"system", std::string(to_string(system))},
                      {"coupler_freq_ghz", format_number(f)},
                      {"eta_c_ghz", format_number(eta)}};
        pts.push_back({c, [&devices, system, eta, f] {
                         const Device& base = devices.at(system)->get();
                         const int mc = Device::coupler_mode(base.active_pair().coupler);
                         const Device d = base.with_mode(mc, from_ghz(f), -std::abs(from_ghz(eta)));
                         const auto zz = zz_interaction(d);
                         SweepRecord r;
                         r.values["nu_zz_ghz"] = to_ghz(zz.nu_zz);
                         r.values["abs_nu_zz_ghz"] = std::abs(to_ghz(zz.nu_zz));
                         return r;
                       }});
      }
    }
  }
  return runner.run(pts);
}

std::vector<SweepRecord> run_relaxation_map(const ExperimentConfig& config, RecordCallback cb) {
  const CsvSchema schema = schema_for(ExperimentKind::relaxation_map);
  SweepRunner runner{schema, config.output, resolve_workers(config.workers), cb, {}};
  const SystemSize system = config.systems.front();
  Lazy<GateProblem> problem([&config, system] {
    return GateProblem(system_device(config, system), config.solver.problem);
  });
  std::map<PulseShape, std::unique_ptr<Lazy<double>>> lambdas;
  for (auto shape : config.shapes) {
    lambdas[shape] = std::make_unique<Lazy<double>>([&config, &problem, shape] {
      auto it = config.fixed_lambda.find(shape);
      if (it != config.fixed_lambda.end()) return it->second;
      const std::string key = "relaxation;shape=" + std::string(to_string(shape));
      return optimize_pulse(problem.get(), shape, config.gate_time, configured_bounds(config, shape),
                            seeded(config, key))
          .lambda;
    });
  }

  std::vector<SweepRunner::Point> pts;
  for (auto shape : config.shapes) {
    for (double t1c : config.t1_coupler_us) {
      for (double t1q : config.t1_qubit_us) {
        Coordinates c{{"shape", std::string(to_string(shape))},
                      {"t1_qubit_us", format_number(t1q)},
                      {"t1_coupler_us", format_number(t1c)}};
        pts.push_back({c, [&config, &problem, &lambdas, shape, t1q, t1c] {
                         const GateProblem& p = problem.get();
                         SweepRecord r;
                         const double lambda = lambdas.at(shape)->get();
                         r.values["lambda"] = lambda;
                         const auto schedule = p.schedule(shape, lambda, config.gate_time);
                         const auto noise = NoiseModel::equal_t2(p.device(), t1q * 1e3, t1c * 1e3);
                         const Eigen::VectorXcd s11 = p.basis().vectors.col(3).cast<Complex>();
                         PropagationOptions opts;
                         opts.rel_tol = config.solver.problem.rel_tol;
                         const auto res = evolve_lindblad(p.device(), schedule, pure_density(s11), noise, opts);
                         r.values["loss"] = 1.0 - population(res, s11);
                         return r;
                       }});
      }
    }
  }
  return runner.run(pts);
}

std::vector<SweepRecord> run_calibration(const ExperimentConfig& config, RecordCallback cb) {
  const CsvSchema schema = schema_for(ExperimentKind::calibrate);
  SweepRunner runner{schema, config.output, resolve_workers(config.workers), cb, {}};
  using Results = std::vector<CalibrationResult>;
  std::map<SystemSize, std::unique_ptr<Lazy<Results>>> results;
  for (auto s : config.systems) {
    results[s] = std::make_unique<Lazy<Results>>([&config, s] {
      const Device d = sized_device(config.device, s);
      const auto& sv = config.solver;
      Results out;
      calibrate_all(d, sv.calibration_lo, sv.calibration_hi, &out, sv.calibration_resolution);
      return out;
    });
  }
  std::vector<SweepRunner::Point> pts;
  for (auto system : config.systems) {
    const Device d = sized_device(config.device, system);
    for (int c = 0; c < d.num_couplers(); ++c) {
      Coordinates co{{"system", std::string(to_string(system))}, {"coupler", std::to_string(c)}};
      pts.push_back({co, [&results, system, c] {
                       const auto& res = results.at(system)->get().at(static_cast<std::size_t>(c));
                       SweepRecord r;
                       r.values["idle_ghz"] = to_ghz(res.omega);
                       r.values["abs_nu_zz_ghz"] = to_ghz(res.abs_nu_zz);
                       r.values["evaluations"] = res.evaluations;
                       return r;
                     }});
    }
  }
  return runner.run(pts);
}

SingleRunReport run_optimize_single(const ExperimentConfig& config) {
  SingleRunReport rep;
  rep.system = config.systems.front();
  const PulseShape shape = config.shapes.front();
  rep.problem = std::make_shared<const GateProblem>(system_device(config, rep.system), config.solver.problem);
  const GateProblem& p = *rep.problem;
  rep.idle = p.idle();
  const std::string key = "single;system=" + std::string(to_string(rep.system)) + ";shape=" +
                          std::string(to_string(shape)) + ";gate_time_ns=" + format_number(config.gate_time);
  rep.result = optimize_pulse(p, shape, config.gate_time, configured_bounds(config, shape), seeded(config, key));
  return rep;
}

void write_population_dump(const SingleRunReport& report, std::ostream& os, double interval) {
  if (!report.problem) throw DomainError("report carries no problem to replay");
  const GateProblem& p = *report.problem;
  PropagationOptions opt;
  opt.rel_tol = p.options().rel_tol;
  opt.record_snapshots = true;
  opt.snapshot_interval = interval;
  const StateMatrix start = p.basis().as_columns().col(3);
  const auto res = propagate_unitary(p.hamiltonian(), report.result.schedule, start, opt);
  const Eigen::MatrixXcd basis = p.basis().as_columns();
  os << "t_ns,p00,p01,p10,p11,leakage\n";
  for (const auto& snap : res.snapshots) {
    os << format_number(snap.t);
    double total = 0.0;
    for (int k = 0; k < 4; ++k) {
      const double pk = std::norm(basis.col(k).dot(snap.state.col(0)));
      total += pk;
      os << ',' << format_number(pk);
    }
    os << ',' << format_number(std::max(0.0, 1.0 - total)) << '\n';
  }
}

std::string to_json(const SingleRunReport& report) {
  const auto& r = report.result;
  nlohmann::json j;
  j["system"] = std::string(to_string(report.system));
  j["shape"] = std::string(to_string(r.schedule.shape));
  j["gate_time_ns"] = r.schedule.gate_time;
  j["idle_ghz"] = to_ghz(report.idle);
  j["lambda"] = r.lambda;
  j["lambda_bounds"] = {r.bounds.first, r.bounds.second};
  j["fidelity"] = r.report.fidelity;
  j["error"] = r.report.error;
  j["leakage"] = r.report.leakage;
  j["phi_a"] = r.report.phi_a;
  j["phi_b"] = r.report.phi_b;
  j["evaluations"] = r.trace.evaluations;
  j["failed_evaluations"] = r.trace.failed_evaluations;
  j["best_objective_per_generation"] = r.trace.best_objective;
  return j.dump(2);
}

std::vector<SweepRecord> run_experiment(const ExperimentConfig& config, RecordCallback cb) {
  switch (config.kind) {
    case ExperimentKind::gate_length_scan: return run_gate_length_scan(config, std::move(cb));
    case ExperimentKind::detuning_anharmonicity_map: return run_detuning_anharmonicity_map(config, std::move(cb));
    case ExperimentKind::zz_map: return run_zz_map(config, std::move(cb));
    case ExperimentKind::relaxation_map: return run_relaxation_map(config, std::move(cb));
    case ExperimentKind::calibrate: return run_calibration(config, std::move(cb));
    case ExperimentKind::optimize_single: {
      const auto rep = run_optimize_single(config);
      if (!config.output.empty()) {
        std::ofstream out(config.output);
        if (!out) throw Error("io", "cannot write '" + config.output.string() + "'");
        out << to_json(rep) << '\n';
      }
      SweepRecord r;
      r.coordinates = {{"system", std::string(to_string(rep.system))},
                       {"shape", std::string(to_string(rep.result.schedule.shape))},
                       {"gate_time_ns", format_number(config.gate_time)}};
      r.values["lambda"] = rep.result.lambda;
      fill_report(r, rep.result.report);
      if (cb) cb(r);
      return {r};
    }
  }
  return {};
}

}  // namespace czsim
