#include "czsim/evolve.hpp"

#include <cmath>
#include <functional>
#include <sstream>

#include <Eigen/Eigenvalues>

#include "czsim/error.hpp"

namespace czsim {

namespace {

const Complex kI(0.0, 1.0);

double column_norm_drift(const StateMatrix& cols) {
  double drift = 0.0;
  for (Eigen::Index c = 0; c < cols.cols(); ++c) drift = std::max(drift, std::abs(cols.col(c).norm() - 1.0));
  return drift;
}

// Error of each column relative to its own size; the worst column decides.
struct ColumnNorm {
  double rel;
  double abs;
  double operator()(const StateMatrix& e, const StateMatrix& y0, const StateMatrix& y1) const {
    double worst = 0.0;
    for (Eigen::Index c = 0; c < e.cols(); ++c) {
      const double scale = abs + rel * std::max(y0.col(c).norm(), y1.col(c).norm());
      worst = std::max(worst, e.col(c).norm() / scale);
    }
    return worst;
  }
};

struct FrobeniusNorm {
  double rel;
  double abs;
  double operator()(const StateMatrix& e, const StateMatrix& y0, const StateMatrix& y1) const {
    return e.norm() / (abs + rel * std::max(y0.norm(), y1.norm()));
  }
};

// Multiply each column by exp(-i E_c t).
void restore_phases(StateMatrix& cols, const std::vector<double>& energy, double t) {
  for (Eigen::Index c = 0; c < cols.cols(); ++c) {
    cols.col(c) *= std::exp(-kI * (energy[static_cast<std::size_t>(c)] * t));
  }
}

std::vector<double> reference_energies(const StateMatrix& hx, const StateMatrix& x) {
  std::vector<double> e(static_cast<std::size_t>(x.cols()));
  for (Eigen::Index c = 0; c < x.cols(); ++c) {
    const double n2 = x.col(c).squaredNorm();
    e[static_cast<std::size_t>(c)] = n2 > 0.0 ? x.col(c).dot(hx.col(c)).real() / n2 : 0.0;
  }
  return e;
}

void check_columns(const StateMatrix& x, std::size_t dim) {
  if (static_cast<std::size_t>(x.rows()) != dim) throw DomainError("initial columns have the wrong dimension");
  for (Eigen::Index c = 0; c < x.cols(); ++c) {
    if (std::abs(x.col(c).norm() - 1.0) > 1e-8) throw DomainError("initial columns must be normalized");
  }
}

template <class Apply>
PropagationResult run_unitary(Apply&& apply, double duration, const StateMatrix& x0,
                              const PropagationOptions& options) {
  PropagationResult result;
  result.mode = PropagationMode::unitary;
  result.final_time = duration;

  // Propagate in a frame rotating at each column's initial mean energy, which
  // removes the dominant e^{-iEt} phase from the step-size control.
  StateMatrix hx;
  apply(0.0, x0, hx, std::span<const double>{});
  const std::vector<double> shift = reference_energies(hx, x0);

  auto rhs = [&](double t, const StateMatrix& y, StateMatrix& dy) {
    apply(t, y, dy, std::span<const double>(shift));
    dy *= -kI;
  };
  IntegratorOptions io;
  io.rel_tol = options.rel_tol;
  io.abs_tol = options.rel_tol;
  double last_snapshot = -kInfiniteTime;
  auto observe = [&](double t, const StateMatrix& y) {
    result.max_norm_drift = std::max(result.max_norm_drift, column_norm_drift(y));
    if (options.record_snapshots && (t - last_snapshot >= options.snapshot_interval || t == duration)) {
      StateMatrix lab = y;
      restore_phases(lab, shift, t);
      result.snapshots.push_back({t, std::move(lab)});
      last_snapshot = t;
    }
  };
  if (options.record_snapshots) result.snapshots.push_back({0.0, x0});
  result.columns = integrate_dop853(rhs, 0.0, duration, StateMatrix(x0), io,
                                    ColumnNorm{options.rel_tol, options.rel_tol}, observe, &result.stats);
  restore_phases(result.columns, shift, duration);
  result.max_norm_drift = std::max(result.max_norm_drift, column_norm_drift(result.columns));
  return result;
}

// Multiplies a dense row-major matrix by a real sparse operator from the left.
void sparse_left(const HermitianOperator::Sparse& m, const StateMatrix& x, StateMatrix& y) {
  const Eigen::Index n = x.cols();
  y.setZero(m.rows(), n);
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    for (HermitianOperator::Sparse::InnerIterator it(m, r); it; ++it) {
      y.row(r) += it.value() * x.row(it.col());
    }
  }
}

}  // namespace

NoiseModel NoiseModel::noiseless(const Device& device) {
  const auto m = static_cast<std::size_t>(device.mode_count());
  return {std::vector<double>(m, kInfiniteTime), std::vector<double>(m, kInfiniteTime)};
}

NoiseModel NoiseModel::equal_t2(const Device& device, double t1_qubit, double t1_coupler) {
  NoiseModel n = noiseless(device);
  for (int i = 0; i < device.mode_count(); ++i) {
    const double t1 = (device.modes()[i].kind == ModeKind::qubit) ? t1_qubit : t1_coupler;
    n.t1[i] = t1;
    n.t2[i] = t1;
  }
  return n;
}

void NoiseModel::validate(const Device& device) const { validate(static_cast<std::size_t>(device.mode_count())); }

void NoiseModel::validate(std::size_t m) const {
  if (t1.size() != m || t2.size() != m) throw DomainError("noise model needs one T1/T2 per mode");
  for (std::size_t i = 0; i < m; ++i) {
    if (!(t1[i] > 0.0) || !(t2[i] > 0.0)) throw DomainError("T1 and T2 must be positive");
    if (t2[i] > 2.0 * t1[i] * (1.0 + 1e-12)) throw DomainError("T2 must not exceed 2 T1");
  }
}

double NoiseModel::relaxation_rate(std::size_t mode) const { return 1.0 / t1.at(mode); }

double NoiseModel::dephasing_rate(std::size_t mode) const {
  const double rate = 1.0 / t2.at(mode) - 1.0 / (2.0 * t1.at(mode));
  return rate < 0.0 ? 0.0 : rate;
}

PropagationResult propagate_unitary(const Device& device, const PulseSchedule& schedule,
                                    const StateMatrix& initial_columns, const PropagationOptions& options) {
  return propagate_unitary(CouplerDrivenHamiltonian(device, schedule.coupler), schedule, initial_columns,
                           options);
}

PropagationResult propagate_unitary(const CouplerDrivenHamiltonian& h, const PulseSchedule& schedule,
                                    const StateMatrix& initial_columns, const PropagationOptions& options) {
  if (schedule.coupler != h.coupler()) throw DomainError("schedule drives a different coupler");
  check_columns(initial_columns, h.dimension());
  auto apply = [&](double t, const StateMatrix& x, StateMatrix& y, std::span<const double> shift) {
    h.apply(schedule.omega(t), x, y, shift);
  };
  return run_unitary(apply, schedule.gate_time, initial_columns, options);
}

PropagationResult propagate_static(const HermitianOperator& h, const StateMatrix& initial_columns,
                                   double duration, const PropagationOptions& options) {
  check_columns(initial_columns, h.dimension());
  const auto& m = h.matrix();
  auto apply = [&](double, const StateMatrix& x, StateMatrix& y, std::span<const double> shift) {
    sparse_left(m, x, y);
    for (std::size_t c = 0; c < shift.size(); ++c) y.col(static_cast<Eigen::Index>(c)) -= shift[c] * x.col(static_cast<Eigen::Index>(c));
  };
  return run_unitary(apply, duration, initial_columns, options);
}

namespace {

using ApplyH = std::function<void(double, const StateMatrix&, StateMatrix&)>;

void check_density(const StateMatrix& rho0, std::size_t n) {
  if (static_cast<std::size_t>(rho0.rows()) != n || rho0.rows() != rho0.cols()) {
    throw DomainError("initial density matrix has the wrong dimension");
  }
  if ((rho0 - rho0.adjoint()).norm() > 1e-10) throw DomainError("initial density matrix is not Hermitian");
  if (std::abs(rho0.trace().real() - 1.0) > 1e-8) throw DomainError("initial density matrix must have unit trace");
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(Eigen::MatrixXcd(rho0), Eigen::EigenvaluesOnly);
  if (es.eigenvalues().minCoeff() < -1e-8) throw DomainError("initial density matrix is not positive");
}

void check_cap(std::size_t n) {
  if (n > kDensityMatrixCap) {
    throw DimensionError("density-matrix path capped at dimension " + std::to_string(kDensityMatrixCap) +
                         " (system has " + std::to_string(n) + ")");
  }
}

PropagationResult lindblad(const std::vector<int>& levels, const ApplyH& apply_h, const NoiseModel& noise,
                           const StateMatrix& rho0, double duration, const PropagationOptions& options) {
  const std::size_t modes = levels.size();
  std::size_t n = 1;
  for (int l : levels) n *= static_cast<std::size_t>(l);
  std::vector<std::size_t> strides(modes, 1);
  for (std::size_t i = modes; i-- > 1;) strides[i - 1] = strides[i] * static_cast<std::size_t>(levels[i]);
  std::vector<std::vector<int>> occ(n, std::vector<int>(modes));
  for (std::size_t s = 0; s < n; ++s) {
    for (std::size_t i = 0; i < modes; ++i) occ[s][i] = static_cast<int>((s / strides[i]) % static_cast<std::size_t>(levels[i]));
  }

  // Jump operators a_i (relaxation) and diagonal a_i^dag a_i (dephasing).
  struct Lowering {
    double rate;
    std::vector<std::pair<std::size_t, std::pair<std::size_t, double>>> entries;  // (row, (col, value))
  };
  std::vector<Lowering> lowering;
  Eigen::VectorXd anticomm = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(n));  // sum gamma B^dag B (diagonal)
  Eigen::MatrixXd dephase = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
  for (std::size_t i = 0; i < modes; ++i) {
    const double g1 = noise.relaxation_rate(i);
    const double gphi = noise.dephasing_rate(i);
    if (g1 > 0.0) {
      Lowering l{g1, {}};
      for (std::size_t s = 0; s < n; ++s) {
        const int k = occ[s][i];
        if (k > 0) l.entries.push_back({s - strides[i], {s, std::sqrt(double(k))}});
        anticomm[static_cast<Eigen::Index>(s)] += g1 * k;
      }
      lowering.push_back(std::move(l));
    }
    if (gphi > 0.0) {
      for (std::size_t s = 0; s < n; ++s) {
        const double ks = occ[s][i];
        anticomm[static_cast<Eigen::Index>(s)] += gphi * ks * ks;
        for (std::size_t r = 0; r < n; ++r) dephase(static_cast<Eigen::Index>(s), static_cast<Eigen::Index>(r)) += gphi * ks * occ[r][i];
      }
    }
  }
  // W_sr = dephasing sandwich - (d_s + d_r)/2
  Eigen::MatrixXd w = dephase;
  for (Eigen::Index s = 0; s < w.rows(); ++s) {
    for (Eigen::Index r = 0; r < w.cols(); ++r) w(s, r) -= 0.5 * (anticomm[s] + anticomm[r]);
  }

  StateMatrix hr;
  StateMatrix ar;
  auto rhs = [&](double t, const StateMatrix& rho, StateMatrix& drho) {
    apply_h(t, rho, hr);
    // -i[H, rho] = -i (H rho - (H rho)^dag) for Hermitian rho.
    drho = -kI * (hr - hr.adjoint());
    drho.array() += w.array() * rho.array();
    for (const auto& l : lowering) {
      // a rho a^dag = a (a rho)^dag
      ar.setZero(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
      for (const auto& [row, cv] : l.entries) ar.row(static_cast<Eigen::Index>(row)) += cv.second * rho.row(static_cast<Eigen::Index>(cv.first));
      StateMatrix art = ar.adjoint();
      for (const auto& [row, cv] : l.entries) {
        drho.row(static_cast<Eigen::Index>(row)) += (l.rate * cv.second) * art.row(static_cast<Eigen::Index>(cv.first));
      }
    }
  };

  PropagationResult result;
  result.mode = PropagationMode::lindblad;
  result.final_time = duration;
  IntegratorOptions io;
  io.rel_tol = options.rel_tol;
  io.abs_tol = options.rel_tol;
  double last_snapshot = -kInfiniteTime;
  auto observe = [&](double t, const StateMatrix& rho) {
    if (options.check_each_step) {
      result.max_trace_drift = std::max(result.max_trace_drift, std::abs(rho.trace().real() - 1.0));
      result.max_hermiticity_defect = std::max(result.max_hermiticity_defect, (rho - rho.adjoint()).norm());
    }
    if (options.record_snapshots && (t - last_snapshot >= options.snapshot_interval || t == duration)) {
      result.snapshots.push_back({t, rho});
      last_snapshot = t;
    }
  };
  if (options.record_snapshots) result.snapshots.push_back({0.0, rho0});
  result.rho = integrate_dop853(rhs, 0.0, duration, StateMatrix(rho0), io,
                                FrobeniusNorm{options.rel_tol, options.rel_tol}, observe, &result.stats);
  result.max_trace_drift = std::max(result.max_trace_drift, std::abs(result.rho.trace().real() - 1.0));
  result.max_hermiticity_defect = std::max(result.max_hermiticity_defect, (result.rho - result.rho.adjoint()).norm());
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(Eigen::MatrixXcd(result.rho), Eigen::EigenvaluesOnly);
  result.min_eigenvalue = es.eigenvalues().minCoeff();
  return result;
}

}  // namespace

PropagationResult evolve_lindblad(const Device& device, const PulseSchedule& schedule,
                                  const StateMatrix& rho0, const NoiseModel& noise,
                                  const PropagationOptions& options) {
  check_cap(device.dimension());
  noise.validate(device.mode_count());
  check_density(rho0, device.dimension());
  const CouplerDrivenHamiltonian h(device, schedule.coupler);
  std::vector<int> levels;
  for (const auto& m : device.modes()) levels.push_back(m.levels);
  return lindblad(levels, [&](double t, const StateMatrix& x, StateMatrix& y) { h.apply(schedule.omega(t), x, y); },
                  noise, rho0, schedule.gate_time, options);
}

PropagationResult evolve_lindblad(const HermitianOperator& h, const std::vector<int>& levels,
                                  const StateMatrix& rho0, const NoiseModel& noise, double duration,
                                  const PropagationOptions& options) {
  check_cap(h.dimension());
  noise.validate(levels.size());
  std::size_t n = 1;
  for (int l : levels) {
    if (l < 2) throw DomainError("each mode needs at least two levels");
    n *= static_cast<std::size_t>(l);
  }
  if (n != h.dimension()) throw DomainError("levels do not match the operator dimension");
  check_density(rho0, n);
  if (!(duration >= 0.0)) throw DomainError("duration must be non-negative");
  const auto& m = h.matrix();
  return lindblad(levels, [&](double, const StateMatrix& x, StateMatrix& y) { sparse_left(m, x, y); }, noise, rho0,
                  duration, options);
}

double population(const PropagationResult& result, const Eigen::VectorXcd& state, int column) {
  if (result.mode == PropagationMode::lindblad) {
    const Eigen::VectorXcd rs = result.rho * state;
    return state.dot(rs).real();
  }
  return std::norm(state.dot(result.columns.col(column)));
}

double population(const PropagationResult& result, const Device& device, const Spectrum& idle,
                  std::span<const int> occupations, int column) {
  const int s = idle.state_of(bare_index(device, occupations), device);
  return population(result, Eigen::VectorXcd(idle.vectors.col(s).cast<Complex>()), column);
}

StateMatrix pure_density(const Eigen::VectorXcd& v) { return v * v.adjoint(); }

double trace_distance(const StateMatrix& a, const StateMatrix& b) {
  const Eigen::MatrixXcd d = a - b;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(d, Eigen::EigenvaluesOnly);
  return 0.5 * es.eigenvalues().cwiseAbs().sum();
}

}  // namespace czsim
