#pragma once

#include <array>
#include <string>

#include <Eigen/Dense>

#include "czsim/evolve.hpp"

namespace czsim {

/// Dressed |00>, |01>, |10>, |11> of the active pair at the idle point, the
/// basis in which the gate is read out.
struct ComputationalBasis {
  Eigen::Matrix<double, Eigen::Dynamic, 4> vectors;
  std::array<double, 4> energies{};
  std::array<double, 4> overlaps{};

  static ComputationalBasis at_idle(const Device& device);
  static ComputationalBasis from_spectrum(const Spectrum& labeled, const Device& device);
  StateMatrix as_columns() const;
};

struct TruncatedGate {
  Eigen::Matrix4cd u = Eigen::Matrix4cd::Identity();
  std::array<double, 4> column_leakage{};
  double leakage = 0.0;  // mean over columns
};

struct CorrectedGate {
  TruncatedGate gate;
  double phi_a = 0.0;
  double phi_b = 0.0;
};

struct FidelityReport {
  double fidelity = 0.0;
  double error = 1.0;
  double phi_a = 0.0;
  double phi_b = 0.0;
  double leakage = 0.0;
};

Eigen::Matrix4cd ideal_cz();

/// U[m][n] = <dressed_m | psi_n(T)>.
TruncatedGate truncate(const PropagationResult& result, const ComputationalBasis& basis);
/// Builds a TruncatedGate from an explicit 4x4 block (leakage from column norms).
TruncatedGate make_truncated(const Eigen::Matrix4cd& u);

/// Virtual-Z correction diag(1, e^{i phi_b}, e^{i phi_a}, e^{i(phi_a+phi_b)})
/// plus a global phase making U_00 real positive. The phases start from the
/// diagonal arguments and are moved only if that raises |Tr(CZ^dag U)|.
CorrectedGate phase_correct(const TruncatedGate& gate);

/// (|Tr(CZ^dag U)| + |Tr(CZ^dag U)|^2) / (d (d + 1)) with d = 4.
FidelityReport cz_fidelity(const CorrectedGate& gate);
FidelityReport cz_fidelity(const TruncatedGate& gate);

/// integral_0^T nu_ZZ(omega_c(t)) dt by composite Simpson on `intervals`
/// (even) subintervals. The four computational states are followed
/// adiabatically from the idle labels; losing one raises
/// ResonanceCrossingError.
double accumulated_phase(const Device& device, const PulseSchedule& schedule, int intervals = 200);

std::string to_json(const FidelityReport& report);

}  // namespace czsim
