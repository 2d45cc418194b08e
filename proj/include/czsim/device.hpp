#pragma once

#include <cstddef>
#include <map>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/SparseCore>

#include "czsim/types.hpp"

namespace czsim {

enum class ModeKind { qubit, coupler };

/// One transmon-like element of the chain. Frequencies in rad/ns.
struct Mode {
  ModeKind kind = ModeKind::qubit;
  double omega = 0.0;
  double eta = 0.0;
  int levels = 3;
};

/// The two qubits a CZ acts on and the coupler between them, as ordinals
/// (qubit k lives at mode 2k, coupler k at mode 2k+1).
struct ActivePair {
  int qubit_a = 0;
  int qubit_b = 1;
  int coupler = 0;
};

/// Coupler ordinal -> angular frequency (rad/ns).
using CouplerOverrides = std::map<int, double>;

struct Coupling {
  int i = 0;
  int j = 0;
  double ratio = 0.0;
};

/// Plain description of an alternating qubit/coupler chain in GHz units, the
/// shape used by configuration files.
struct ChainParameters {
  std::vector<double> qubit_freq_ghz;
  std::vector<double> qubit_anharm_ghz;
  std::vector<double> coupler_freq_ghz;
  std::vector<double> coupler_anharm_ghz;
  double r_nn = 0.02;
  double r_nnn = 0.0016;
  int levels = 3;
  int active_qubit = 0;  // the pair is (active_qubit, active_qubit + 1)
  std::map<std::pair<int, int>, double> ratio_overrides;  // by mode index
};

/// Immutable chain Q0, CP0, Q1, ..., CP(n-2), Q(n-1) with NN/NNN couplings.
class Device {
 public:
  Device(std::vector<Mode> modes, std::map<std::pair<int, int>, double> ratios, ActivePair active);

  static Device chain(const ChainParameters& p);
  /// Reference device: four qubits, three couplers, pair (Q1, Q2) via CP1.
  static Device reference_four_qubit();
  /// The isolated Q1-CP1-Q2 subsystem of the reference device.
  static Device reference_two_qubit();

  const std::vector<Mode>& modes() const { return modes_; }
  int mode_count() const { return static_cast<int>(modes_.size()); }
  int num_qubits() const { return (mode_count() + 1) / 2; }
  int num_couplers() const { return mode_count() / 2; }
  static constexpr int qubit_mode(int q) { return 2 * q; }
  static constexpr int coupler_mode(int c) { return 2 * c + 1; }

  double ratio(int i, int j) const;
  const std::vector<Coupling>& couplings() const { return couplings_; }
  const ActivePair& active_pair() const { return active_; }

  std::size_t dimension() const { return dimension_; }
  const std::vector<std::size_t>& strides() const { return strides_; }

  /// Mode frequencies with coupler overrides applied. Throws DomainError for
  /// overrides that do not name a coupler or are non-positive.
  std::vector<double> frequencies(const CouplerOverrides& overrides = {}) const;

  Device with_mode(int mode, double omega, double eta) const;
  Device with_coupler_frequency(int coupler, double omega) const;
  Device with_active_pair(int qubit_a) const;
  /// Qubits first..last (inclusive) with the couplers between them.
  Device subchain(int first_qubit, int last_qubit) const;

 private:
  std::vector<Mode> modes_;
  std::map<std::pair<int, int>, double> ratios_;
  std::vector<Coupling> couplings_;
  ActivePair active_;
  std::vector<std::size_t> strides_;
  std::size_t dimension_ = 1;
};

/// g = r * sqrt(omega_i * omega_j).
double coupling_strength(double r, double omega_i, double omega_j);

/// Row-major product-basis index, last mode fastest.
std::size_t bare_index(const Device& device, std::span<const int> occupations);
std::vector<int> bare_occupations(const Device& device, std::size_t index);
std::string bare_label(const Device& device, std::size_t index);

/// Bare index of |ab> on the given pair with every other mode in its ground state.
std::size_t pair_state_index(const Device& device, const ActivePair& pair, int a, int b);

class HermitianOperator {
 public:
  using Sparse = Eigen::SparseMatrix<double, Eigen::RowMajor>;

  explicit HermitianOperator(Sparse m);

  std::size_t dimension() const { return static_cast<std::size_t>(m_.rows()); }
  const Sparse& matrix() const { return m_; }
  Eigen::MatrixXd to_dense() const { return Eigen::MatrixXd(m_); }
  /// ||H - H^dagger||_F / ||H||_F (0 for the zero operator).
  double hermiticity_defect() const;
  double frobenius_norm() const { return m_.norm(); }

 private:
  Sparse m_;
};

/// The chain Hamiltonian with every g_ij evaluated at the (overridden) mode
/// frequencies. Counter-rotating terms are kept.
HermitianOperator build_hamiltonian(const Device& device, const CouplerOverrides& overrides = {});

/// H(omega_c) = A + omega_c N + sqrt(omega_c) C for one tunable coupler, stored
/// as one CSR pattern with two value arrays so that the time-dependent
/// Hamiltonian can be applied without reassembly.
class CouplerDrivenHamiltonian {
 public:
  CouplerDrivenHamiltonian(const Device& device, int coupler);

  std::size_t dimension() const { return row_start_.size() - 1; }
  int coupler() const { return coupler_; }
  std::size_t nonzeros() const { return col_.size(); }

  /// y = (H(omega) - diag-shift per column) x. `shift` may be empty.
  void apply(double omega, const StateMatrix& x, StateMatrix& y,
             std::span<const double> shift = {}) const;

  HermitianOperator at(double omega) const;
  /// dH/d omega_c at omega: N + C / (2 sqrt(omega)).
  HermitianOperator derivative(double omega) const;

  const Eigen::VectorXd& coupler_occupation() const { return occupation_; }

 private:
  HermitianOperator assemble(double diag_scale, double offdiag_scale, bool include_static) const;

  int coupler_ = 0;
  std::vector<std::size_t> row_start_;
  std::vector<int> col_;
  std::vector<double> static_value_;
  std::vector<double> coupler_value_;
  Eigen::VectorXd occupation_;  // n_c per basis state
};

}  // namespace czsim
