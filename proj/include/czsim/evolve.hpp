#pragma once

#include <cstddef>
#include <limits>
#include <vector>

#include "czsim/device.hpp"
#include "czsim/integrator.hpp"
#include "czsim/pulse.hpp"
#include "czsim/spectrum.hpp"
#include "czsim/types.hpp"

namespace czsim {

inline constexpr double kInfiniteTime = std::numeric_limits<double>::infinity();
inline constexpr std::size_t kDensityMatrixCap = 300;

/// Per-mode T1 and T2 in ns (infinity disables the channel).
struct NoiseModel {
  std::vector<double> t1;
  std::vector<double> t2;

  static NoiseModel noiseless(const Device& device);
  /// T2 = T1 for every mode, qubits and couplers taking separate values.
  static NoiseModel equal_t2(const Device& device, double t1_qubit, double t1_coupler);

  void validate(const Device& device) const;
  void validate(std::size_t modes) const;
  double relaxation_rate(std::size_t mode) const;
  /// 1/T_phi = 1/T2 - 1/(2 T1).
  double dephasing_rate(std::size_t mode) const;
};

enum class PropagationMode { unitary, lindblad };

struct Snapshot {
  double t = 0.0;
  StateMatrix state;
};

struct PropagationResult {
  PropagationMode mode = PropagationMode::unitary;
  double final_time = 0.0;
  StateMatrix columns;  // unitary: n x m propagated states
  StateMatrix rho;      // lindblad: n x n density matrix
  std::vector<Snapshot> snapshots;
  IntegratorStats stats;
  double max_norm_drift = 0.0;        // unitary
  double max_trace_drift = 0.0;       // lindblad, over accepted steps
  double max_hermiticity_defect = 0.0;
  double min_eigenvalue = 0.0;        // lindblad, final state
};

struct PropagationOptions {
  double rel_tol = 1e-10;
  bool record_snapshots = false;
  double snapshot_interval = 0.0;  // ns; 0 records every accepted step
  bool check_each_step = false;    // lindblad: trace/Hermiticity on every step
};

/// Schroedinger propagation of the given columns under H(omega_c(t)).
PropagationResult propagate_unitary(const Device& device, const PulseSchedule& schedule,
                                    const StateMatrix& initial_columns,
                                    const PropagationOptions& options = {});
/// Same, reusing a prebuilt driven Hamiltonian for the schedule's coupler.
PropagationResult propagate_unitary(const CouplerDrivenHamiltonian& h, const PulseSchedule& schedule,
                                    const StateMatrix& initial_columns,
                                    const PropagationOptions& options = {});

/// Time-independent propagation over [0, duration] (negative runs backward).
PropagationResult propagate_static(const HermitianOperator& h, const StateMatrix& initial_columns,
                                   double duration, const PropagationOptions& options = {});

/// Lindblad evolution with relaxation (a) and dephasing (a^dag a) channels
/// per mode. Throws DimensionError above the density-matrix cap.
PropagationResult evolve_lindblad(const Device& device, const PulseSchedule& schedule,
                                  const StateMatrix& rho0, const NoiseModel& noise,
                                  const PropagationOptions& options = {});

/// Static Hamiltonian on a product space with the given levels per mode
/// (row-major, last mode fastest). `noise` has one entry per mode.
PropagationResult evolve_lindblad(const HermitianOperator& h, const std::vector<int>& levels,
                                  const StateMatrix& rho0, const NoiseModel& noise, double duration,
                                  const PropagationOptions& options = {});

/// <s|rho|s> or |<s|psi_column>|^2.
double population(const PropagationResult& result, const Eigen::VectorXcd& state, int column = 0);
/// Population of the idle dressed state labeled by a bare occupation list.
double population(const PropagationResult& result, const Device& device, const Spectrum& idle,
                  std::span<const int> occupations, int column = 0);

/// Projector |v><v| of a real vector.
StateMatrix pure_density(const Eigen::VectorXcd& v);
double trace_distance(const StateMatrix& a, const StateMatrix& b);

}  // namespace czsim
