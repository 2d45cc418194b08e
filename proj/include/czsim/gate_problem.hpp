#pragma once

#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <utility>

#include "czsim/gate.hpp"
#include "czsim/optimize.hpp"

namespace czsim {

/// Reference qubit for the lower edge of the pulse band.
enum class BandFloor {
  highest_qubit,     // every qubit in the device
  lower_pair_qubit,  // the lower-frequency qubit of the active pair
};

struct GateProblemOptions {
  double rel_tol = 1e-10;
  double g_step = from_mhz(1.0);
  /// Pulse band: [floor qubit + band_below, idle + band_above] (rad/ns offsets).
  BandFloor band_floor = BandFloor::highest_qubit;
  double band_below = from_ghz(0.2);
  double band_above = from_ghz(1.0);
  /// Extra G-table coverage on both sides of the band.
  double g_margin = from_mhz(20.0);
  double hyperbolic_sign = 1.0;
  int workers = 1;
  std::string g_cache_dir;  // empty: no on-disk cache
};

/// Everything needed to score CZ pulses on one calibrated device: the idle
/// computational basis, the driven Hamiltonian and (lazily) the G table.
class GateProblem {
 public:
  explicit GateProblem(Device calibrated, GateProblemOptions options = {});

  const Device& device() const { return device_; }
  const GateProblemOptions& options() const { return options_; }
  int coupler() const { return device_.active_pair().coupler; }
  double idle() const { return idle_; }
  const FrequencyBand& band() const { return band_; }
  const ComputationalBasis& basis() const { return basis_; }
  const CouplerDrivenHamiltonian& hamiltonian() const { return hamiltonian_; }

  const GTable& g_table() const;
  void set_g_table(GTable table);

  PulseSchedule schedule(PulseShape shape, double lambda, double gate_time) const;
  std::pair<double, double> bounds(PulseShape shape, double gate_time) const;

  PropagationResult propagate(const PulseSchedule& s) const;
  FidelityReport evaluate(const PulseSchedule& s) const;
  FidelityReport evaluate(PulseShape shape, double lambda, double gate_time) const;

 private:
  Device device_;
  GateProblemOptions options_;
  double idle_;
  FrequencyBand band_;
  ComputationalBasis basis_;
  CouplerDrivenHamiltonian hamiltonian_;
  struct GCache {
    std::once_flag once;
    std::shared_ptr<const GTable> table;
  };
  std::shared_ptr<GCache> g_cache_ = std::make_shared<GCache>();
};

struct PulseOptimizationResult {
  PulseSchedule schedule;
  double lambda = 0.0;
  FidelityReport report;
  OptimizationTrace trace;
  std::pair<double, double> bounds;
};

/// Minimises 1 - F_CZ over the pulse parameter with differential evolution.
PulseOptimizationResult optimize_pulse(const GateProblem& problem, PulseShape shape, double gate_time,
                                       std::optional<std::pair<double, double>> bounds,
                                       const DESettings& settings);

}  // namespace czsim
