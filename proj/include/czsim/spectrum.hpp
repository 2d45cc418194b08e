#pragma once

#include <array>
#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "czsim/device.hpp"
#include "czsim/units.hpp"

namespace czsim {

inline constexpr double kDefaultLabelThreshold = 0.5;

/// Eigen-decomposition of a (real symmetric) Hamiltonian, optionally labeled
/// by maximum overlap with bare product states.
struct Spectrum {
  Eigen::VectorXd energies;  // ascending, rad/ns
  Eigen::MatrixXd vectors;   // orthonormal columns, largest component > 0
  std::vector<int> bare_to_state;  // -1 when unassigned; empty when unlabeled
  std::vector<int> state_to_bare;
  std::vector<double> overlaps;    // indexed by bare state, 0 when unassigned
  double threshold = kDefaultLabelThreshold;

  std::size_t dimension() const { return static_cast<std::size_t>(energies.size()); }
  bool labeled() const { return !bare_to_state.empty(); }

  /// Eigenstate index labeled by `bare`; LabelingError if none.
  int state_of(std::size_t bare) const;
  /// Same, with the bare state spelled out in the error message.
  int state_of(std::size_t bare, const Device& device) const;
};

/// Dense eigensolve of each connected block of H. Throws EigenError when
/// the solver fails.
Spectrum eigensystem(const HermitianOperator& h);

/// Greedy assignment in descending |<bare|dressed>|; pairs below the
/// threshold stay unassigned.
Spectrum label_states(Spectrum spectrum, const Device& device,
                      double threshold = kDefaultLabelThreshold);

Spectrum labeled_spectrum(const Device& device, const CouplerOverrides& overrides = {});

/// Dressed |00>, |01>, |10>, |11> of a qubit pair (others in ground).
struct ComputationalStates {
  std::array<int, 4> state{};   // eigenstate indices
  std::array<double, 4> energy{};
};
ComputationalStates computational_states(const Spectrum& labeled, const Device& device,
                                         const ActivePair& pair);

struct ZZReport {
  double nu_zz = 0.0;
  double e00 = 0.0;
  double e01 = 0.0;
  double e10 = 0.0;
  double e11 = 0.0;
};

ZZReport zz_from_energies(double e00, double e01, double e10, double e11);
ZZReport zz_interaction(const Device& device, const CouplerOverrides& overrides = {},
                        std::optional<ActivePair> pair = std::nullopt);

struct CalibrationResult {
  int coupler = 0;
  double omega = 0.0;     // rad/ns
  double abs_nu_zz = 0.0; // rad/ns
  int evaluations = 0;
};

/// Golden-section minimisation of |nu_ZZ| of the pair (c, c+1) over the
/// coupler frequency. Throws CalibrationError if the minimum sits on the
/// bracket edge with non-zero ZZ.
CalibrationResult calibrate_idle(const Device& device, int coupler, double lo, double hi,
                                 double resolution = from_mhz(0.1));

/// Calibrates every coupler in chain order, each using the idle values found
/// so far. Returns the device with calibrated idle frequencies.
Device calibrate_all(const Device& device, double lo, double hi,
                     std::vector<CalibrationResult>* results = nullptr,
                     double resolution = from_mhz(0.1));

inline constexpr double kDegeneracyGap = from_khz(1.0);

struct DiabaticTerm {
  int u_state = 0;
  int v_state = 0;
  double matrix_element = 0.0;      // <u| dH/d omega_c |v>
  double gap = 0.0;                 // omega_u - omega_v
  double overlap_derivative = 0.0;  // <u| d/d omega_c |v> = element / (omega_v - omega_u)
};

struct DiabaticityBreakdown {
  double value = 0.0;
  ComputationalStates computational;
  std::vector<DiabaticTerm> terms;  // only filled when requested
};

/// sum_u sum_{v != u} |<u|v'>| / |omega_u - omega_v| over the four dressed
/// computational states of the active pair and every other eigenstate.
DiabaticityBreakdown diabaticity(const Device& device, int coupler, double omega_c,
                                 bool keep_terms = false);
double diabaticity_prefactor(const Device& device, int coupler, double omega_c);

/// Uniform-grid table of G(omega_c) with linear interpolation.
class GTable {
 public:
  GTable(double lo, double step, std::vector<double> values);

  /// Precomputes G on [lo, hi] with the given spacing (last point at or past hi).
  static GTable build(const Device& device, int coupler, double lo, double hi,
                      double step = from_mhz(1.0), int workers = 1);
  /// Table with a constant value, used for testing degenerate cases.
  static GTable constant(double lo, double hi, double value);

  double lo() const { return lo_; }
  double hi() const { return lo_ + step_ * static_cast<double>(values_.size() - 1); }
  double step() const { return step_; }
  const std::vector<double>& values() const { return values_; }
  bool contains(double omega) const { return omega >= lo() && omega <= hi(); }

  /// Linear interpolation; RangeError outside the table.
  double operator()(double omega) const;
  /// Exact integral of the interpolant from a to b (either order).
  double integral(double a, double b) const;
  /// Frequency w with integral(from, w) = target, searching toward lower
  /// (target < 0) or higher frequencies; nullopt if the table ends first.
  std::optional<double> solve_integral(double from, double target) const;

 private:
  double lo_;
  double step_;
  std::vector<double> values_;
  std::vector<double> cumulative_;  // integral from lo to each node
  double antiderivative(double omega) const;
};

}  // namespace czsim
