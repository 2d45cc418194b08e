#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <iterator>
#include <map>
#include <memory>
#include <ostream>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "czsim/config.hpp"
#include "czsim/gate_problem.hpp"

namespace czsim {

enum class ExperimentKind {
  gate_length_scan,
  detuning_anharmonicity_map,
  zz_map,
  relaxation_map,
  calibrate,
  optimize_single,
};

std::string_view to_string(ExperimentKind kind);
ExperimentKind parse_experiment_kind(std::string_view name);

enum class SystemSize { two_qubit, four_qubit };
std::string_view to_string(SystemSize s);  // "2q" / "4q"
SystemSize parse_system(std::string_view name);

enum class AnharmonicityAxis { coupler, qubits };  // "eta_c" / "eta_q"

struct SolverSettings {
  GateProblemOptions problem;
  bool calibrate = true;
  double calibration_lo = from_ghz(7.0);
  double calibration_hi = from_ghz(8.5);
  double calibration_resolution = from_mhz(0.1);
};

struct ExperimentConfig {
  ExperimentKind kind = ExperimentKind::calibrate;
  std::filesystem::path device_path;  // empty when the device block is inline
  Device device = Device::reference_four_qubit();

  std::vector<SystemSize> systems{SystemSize::two_qubit};
  std::vector<PulseShape> shapes{std::begin(kAllShapes), std::end(kAllShapes)};

  // gate_length_scan
  std::vector<double> gate_times;  // ns
  bool reuse_two_qubit = true;
  // detuning_anharmonicity_map, relaxation_map, optimize_single
  double gate_time = 25.0;
  std::vector<double> delta_ghz;
  std::vector<double> anharm_ghz;  // |eta|
  AnharmonicityAxis axis = AnharmonicityAxis::coupler;
  double omega2_ghz = 5.0;
  // zz_map
  std::vector<double> coupler_freq_ghz;
  std::vector<double> eta_c_ghz;  // |eta_c|
  // relaxation_map
  std::vector<double> t1_qubit_us;
  std::vector<double> t1_coupler_us;

  std::map<PulseShape, std::pair<double, double>> lambda_bounds;
  std::map<PulseShape, double> fixed_lambda;

  SolverSettings solver;
  DESettings de;
  std::filesystem::path output;
  std::uint64_t seed = 1;
  int workers = 0;  // 0: CZSIM_WORKERS or available parallelism

  void validate() const;
};

/// Reads [experiment], [solver], [de] and the device ([device] block or the
/// file named by experiment.device).
ExperimentConfig load_experiment(const ConfigDocument& doc);
SolverSettings solver_from_config(const ConfigDocument& doc);
DESettings de_from_config(const ConfigDocument& doc);

/// Effective worker count: explicit > CZSIM_WORKERS > hardware concurrency.
int resolve_workers(int requested);

/// One grid point. Coordinates are kept as the exact strings written to CSV
/// so that resumed runs match rows textually.
struct SweepRecord {
  std::vector<std::pair<std::string, std::string>> coordinates;
  std::map<std::string, double> values;
  std::string status = "ok";
  double wall_time = 0.0;  // s

  double value(const std::string& column) const;
  std::string key() const;
};

struct CsvSchema {
  std::vector<std::string> coordinates;
  std::vector<std::string> values;
  std::vector<std::string> header() const;  // coordinates, values, status, wall_time_s
};

CsvSchema schema_for(ExperimentKind kind);

std::string format_number(double v);

/// Sentinel error written for failed optimisation points.
inline constexpr double kSentinelError = 1.0;

using RecordCallback = std::function<void(const SweepRecord&)>;

/// Appends to `path` (writing the header when absent), skipping grid points
/// already present. Returns every record for the grid in grid order.
struct SweepRunner {
  CsvSchema schema;
  std::filesystem::path path;  // empty: no file output
  int workers = 1;
  RecordCallback on_record;
  std::map<std::string, double> sentinel;  // values written for failed points

  struct Point {
    std::vector<std::pair<std::string, std::string>> coordinates;
    std::function<SweepRecord()> compute;
  };
  std::vector<SweepRecord> run(const std::vector<Point>& points) const;
};

std::vector<SweepRecord> read_csv(const std::filesystem::path& path, const CsvSchema& schema);

/// Active-pair subchain for 2q, the whole chain for 4q (uncalibrated).
Device sized_device(const Device& device, SystemSize system);

/// Calibrated device for the requested system size.
Device system_device(const ExperimentConfig& config, SystemSize system);

std::vector<SweepRecord> run_gate_length_scan(const ExperimentConfig& config, RecordCallback cb = {});
std::vector<SweepRecord> run_detuning_anharmonicity_map(const ExperimentConfig& config, RecordCallback cb = {});
std::vector<SweepRecord> run_zz_map(const ExperimentConfig& config, RecordCallback cb = {});
std::vector<SweepRecord> run_relaxation_map(const ExperimentConfig& config, RecordCallback cb = {});
std::vector<SweepRecord> run_calibration(const ExperimentConfig& config, RecordCallback cb = {});
std::vector<SweepRecord> run_experiment(const ExperimentConfig& config, RecordCallback cb = {});

struct SingleRunReport {
  SystemSize system = SystemSize::two_qubit;
  double idle = 0.0;
  PulseOptimizationResult result;
  std::shared_ptr<const GateProblem> problem;
};
SingleRunReport run_optimize_single(const ExperimentConfig& config);
std::string to_json(const SingleRunReport& report);

/// Replays the optimised pulse from dressed |11> and writes
/// t_ns,p00,p01,p10,p11,leakage at the given spacing (ns).
void write_population_dump(const SingleRunReport& report, std::ostream& os, double interval = 0.1);

/// Problem for `system` with shape-specific bounds from the config.
std::optional<std::pair<double, double>> configured_bounds(const ExperimentConfig& config, PulseShape shape);

}  // namespace czsim
