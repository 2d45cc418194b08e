#include "czsim/device.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "czsim/error.hpp"
#include "czsim/units.hpp"

namespace czsim {

namespace {

void validate_mode(const Mode& m, int index) {
  if (!(m.omega > 0.0) || !std::isfinite(m.omega)) {
    throw DomainError("mode " + std::to_string(index) + ": frequency must be positive");
  }
  if (!(m.eta < 0.0)) {
    throw DomainError("mode " + std::to_string(index) + ": anharmonicity must be negative");
  }
  if (m.levels < 2) {
    throw DomainError("mode " + std::to_string(index) + ": truncation needs at least 2 levels");
  }
}

// Visits every nonzero <target|H|source> for a fixed source state: the
// diagonal first, then the four terms of each coupling in a fixed order.
// `visit(target, diag_static, coupler_diag, value_static, value_coupler)`.
template <class Visit>
void for_each_element(const Device& device, const std::vector<double>& omega, int coupler_mode,
                      std::size_t source, std::span<const int> occ, Visit&& visit) {
  const auto& modes = device.modes();
  const auto& strides = device.strides();

  double diag = 0.0;
  for (int i = 0; i < device.mode_count(); ++i) {
    if (i == coupler_mode) continue;
    const double n = occ[i];
    diag += omega[i] * n + 0.5 * modes[i].eta * n * (n - 1.0);
  }
  double coupler_diag = 0.0;
  if (coupler_mode >= 0) {
    const double n = occ[coupler_mode];
    diag += 0.5 * modes[coupler_mode].eta * n * (n - 1.0);
    coupler_diag = n;
  }
  visit(source, diag, coupler_diag, 0.0, 0.0);

  for (const Coupling& c : device.couplings()) {
    const int i = c.i;
    const int j = c.j;
    const bool driven = (i == coupler_mode || j == coupler_mode);
    // For the driven split, g = sqrt(omega_c) * (r sqrt(omega_other)).
    double g;
    if (driven) {
      const int other = (i == coupler_mode) ? j : i;
      g = c.ratio * std::sqrt(omega[other]);
    } else {
      g = coupling_strength(c.ratio, omega[i], omega[j]);
    }
    const int ni = occ[i];
    const int nj = occ[j];
    const int li = modes[i].levels;
    const int lj = modes[j].levels;
    const auto si = static_cast<std::ptrdiff_t>(strides[i]);
    const auto sj = static_cast<std::ptrdiff_t>(strides[j]);
    const auto src = static_cast<std::ptrdiff_t>(source);

    auto emit = [&](std::ptrdiff_t target, double value) {
      if (driven) {
        visit(static_cast<std::size_t>(target), 0.0, 0.0, 0.0, value);
      } else {
        visit(static_cast<std::size_t>(target), 0.0, 0.0, value, 0.0);
      }
    };
    // -g (a_i - a_i^dag)(a_j - a_j^dag)
    if (ni > 0 && nj > 0) {  // a_i a_j
      emit(src - si - sj, -g * (std::sqrt(double(ni)) * std::sqrt(double(nj))));
    }
    if (ni > 0 && nj + 1 < lj) {  // -a_i a_j^dag
      emit(src - si + sj, g * (std::sqrt(double(ni)) * std::sqrt(double(nj + 1))));
    }
    if (ni + 1 < li && nj > 0) {  // -a_i^dag a_j
      emit(src + si - sj, g * (std::sqrt(double(ni + 1)) * std::sqrt(double(nj))));
    }
    if (ni + 1 < li && nj + 1 < lj) {  // a_i^dag a_j^dag
      emit(src + si + sj, -g * (std::sqrt(double(ni + 1)) * std::sqrt(double(nj + 1))));
    }
  }
}

void advance(std::vector<int>& occ, const std::vector<Mode>& modes) {
  for (int i = static_cast<int>(occ.size()) - 1; i >= 0; --i) {
    if (++occ[i] < modes[i].levels) return;
    occ[i] = 0;
  }
}

}  // namespace

Device::Device(std::vector<Mode> modes, std::map<std::pair<int, int>, double> ratios,
               ActivePair active)
    : modes_(std::move(modes)), active_(active) {
  const int m = mode_count();
  if (m < 1 || m % 2 == 0) {
    throw DomainError("device needs an odd number of modes (qubits at even, couplers at odd positions)");
  }
  for (int i = 0; i < m; ++i) {
    validate_mode(modes_[i], i);
    const ModeKind expected = (i % 2 == 0) ? ModeKind::qubit : ModeKind::coupler;
    if (modes_[i].kind != expected) {
      throw DomainError("mode " + std::to_string(i) + ": kinds must alternate qubit/coupler");
    }
  }
  for (const auto& [key, r] : ratios) {
    auto [i, j] = key;
    if (i > j) std::swap(i, j);
    if (i < 0 || j >= m || i == j) {
      throw DomainError("coupling ratio references invalid mode pair");
    }
    if (!(r >= 0.0) || !std::isfinite(r)) throw DomainError("coupling ratios must be non-negative");
    if (r != 0.0 && j - i > 2) {
      throw DomainError("couplings beyond next-nearest neighbours are not supported");
    }
    auto [it, inserted] = ratios_.emplace(std::make_pair(i, j), r);
    if (!inserted && it->second != r) throw DomainError("asymmetric coupling ratio");
  }
  for (const auto& [key, r] : ratios_) {
    if (r > 0.0) couplings_.push_back({key.first, key.second, r});
  }
  if (num_qubits() >= 2) {
    if (active_.qubit_b != active_.qubit_a + 1 || active_.coupler != active_.qubit_a ||
        active_.qubit_a < 0 || active_.qubit_b >= num_qubits()) {
      throw DomainError("active pair must be adjacent qubits sharing their coupler");
    }
  }
  strides_.assign(m, 1);
  for (int i = m - 2; i >= 0; --i) strides_[i] = strides_[i + 1] * modes_[i + 1].levels;
  dimension_ = strides_[0] * modes_[0].levels;
}

Device Device::chain(const ChainParameters& p) {
  const auto nq = p.qubit_freq_ghz.size();
  if (nq == 0 || p.qubit_anharm_ghz.size() != nq || p.coupler_freq_ghz.size() + 1 != nq ||
      p.coupler_anharm_ghz.size() + 1 != nq) {
    throw DomainError("chain needs n qubit and n-1 coupler frequency/anharmonicity entries");
  }
  std::vector<Mode> modes;
  for (std::size_t q = 0; q < nq; ++q) {
    modes.push_back({ModeKind::qubit, from_ghz(p.qubit_freq_ghz[q]), from_ghz(p.qubit_anharm_ghz[q]), p.levels});
    if (q + 1 < nq) {
      modes.push_back({ModeKind::coupler, from_ghz(p.coupler_freq_ghz[q]),
                       from_ghz(p.coupler_anharm_ghz[q]), p.levels});
    }
  }
  std::map<std::pair<int, int>, double> ratios;
  const int m = static_cast<int>(modes.size());
  for (int i = 0; i < m; ++i) {
    if (i + 1 < m) ratios[{i, i + 1}] = p.r_nn;
    if (i + 2 < m) ratios[{i, i + 2}] = p.r_nnn;
  }
  for (const auto& [key, r] : p.ratio_overrides) {
    auto k = key;
    if (k.first > k.second) std::swap(k.first, k.second);
    ratios[k] = r;
  }
  ActivePair pair{p.active_qubit, p.active_qubit + 1, p.active_qubit};
  return Device(std::move(modes), std::move(ratios), pair);
}

Device Device::reference_four_qubit() {
  ChainParameters p;
  p.qubit_freq_ghz = {5.05, 5.7, 5.0, 5.62};
  p.qubit_anharm_ghz = {-0.3, -0.3, -0.3, -0.3};
  p.coupler_freq_ghz = {7.83, 7.86, 7.70};
  p.coupler_anharm_ghz = {-0.25, -0.25, -0.25};
  p.active_qubit = 1;
  return chain(p);
}

Device Device::reference_two_qubit() { return reference_four_qubit().subchain(1, 2); }

double Device::ratio(int i, int j) const {
  if (i > j) std::swap(i, j);
  auto it = ratios_.find({i, j});
  return it == ratios_.end() ? 0.0 : it->second;
}

std::vector<double> Device::frequencies(const CouplerOverrides& overrides) const {
  std::vector<double> omega(modes_.size());
  for (std::size_t i = 0; i < modes_.size(); ++i) omega[i] = modes_[i].omega;
  for (const auto& [c, w] : overrides) {
    if (c < 0 || c >= num_couplers()) {
      throw DomainError("override references coupler " + std::to_string(c) + ", which does not exist");
    }
    if (!(w > 0.0) || !std::isfinite(w)) throw DomainError("coupler override must be positive");
    omega[coupler_mode(c)] = w;
  }
  return omega;
}

Device Device::with_mode(int mode, double omega, double eta) const {
  auto modes = modes_;
  modes.at(mode).omega = omega;
  modes.at(mode).eta = eta;
  return Device(std::move(modes), ratios_, active_);
}

Device Device::with_coupler_frequency(int coupler, double omega) const {
  const Mode& m = modes_.at(coupler_mode(coupler));
  return with_mode(coupler_mode(coupler), omega, m.eta);
}

Device Device::with_active_pair(int qubit_a) const {
  return Device(modes_, ratios_, ActivePair{qubit_a, qubit_a + 1, qubit_a});
}

Device Device::subchain(int first_qubit, int last_qubit) const {
  if (first_qubit < 0 || last_qubit >= num_qubits() || first_qubit > last_qubit) {
    throw DomainError("invalid subchain range");
  }
  const int lo = qubit_mode(first_qubit);
  const int hi = qubit_mode(last_qubit);
  std::vector<Mode> modes(modes_.begin() + lo, modes_.begin() + hi + 1);
  std::map<std::pair<int, int>, double> ratios;
  for (const auto& [key, r] : ratios_) {
    if (key.first >= lo && key.second <= hi) ratios[{key.first - lo, key.second - lo}] = r;
  }
  ActivePair pair{0, 1, 0};
  if (active_.qubit_a >= first_qubit && active_.qubit_b <= last_qubit) {
    const int a = active_.qubit_a - first_qubit;
    pair = {a, a + 1, a};
  }
  return Device(std::move(modes), std::move(ratios), pair);
}

double coupling_strength(double r, double omega_i, double omega_j) {
  if (!(omega_i > 0.0) || !(omega_j > 0.0)) {
    throw DomainError("coupling_strength: frequencies must be positive");
  }
  if (!(r >= 0.0)) throw DomainError("coupling_strength: ratio must be non-negative");
  return r * std::sqrt(omega_i * omega_j);
}

std::size_t bare_index(const Device& device, std::span<const int> occupations) {
  if (static_cast<int>(occupations.size()) != device.mode_count()) {
    throw DomainError("occupation list length does not match the mode count");
  }
  std::size_t index = 0;
  for (int i = 0; i < device.mode_count(); ++i) {
    const int n = occupations[i];
    if (n < 0 || n >= device.modes()[i].levels) {
      throw DomainError("occupation " + std::to_string(n) + " out of range for mode " + std::to_string(i));
    }
    index += static_cast<std::size_t>(n) * device.strides()[i];
  }
  return index;
}

std::vector<int> bare_occupations(const Device& device, std::size_t index) {
  if (index >= device.dimension()) throw DomainError("basis index out of range");
  std::vector<int> occ(device.mode_count());
  for (int i = 0; i < device.mode_count(); ++i) {
    occ[i] = static_cast<int>(index / device.strides()[i]);
    index %= device.strides()[i];
  }
  return occ;
}

std::string bare_label(const Device& device, std::size_t index) {
  const auto occ = bare_occupations(device, index);
  std::ostringstream os;
  os << '|';
  for (std::size_t i = 0; i < occ.size(); ++i) {
    if (i) os << ',';
    os << occ[i];
  }
  os << '>';
  return os.str();
}

std::size_t pair_state_index(const Device& device, const ActivePair& pair, int a, int b) {
  std::vector<int> occ(device.mode_count(), 0);
  occ[Device::qubit_mode(pair.qubit_a)] = a;
  occ[Device::qubit_mode(pair.qubit_b)] = b;
  return bare_index(device, occ);
}

HermitianOperator::HermitianOperator(Sparse m) : m_(std::move(m)) {
  if (m_.rows() != m_.cols()) throw DomainError("Hamiltonian must be square");
  m_.makeCompressed();
}

double HermitianOperator::hermiticity_defect() const {
  const double norm = m_.norm();
  if (norm == 0.0) return 0.0;
  Sparse t = m_.transpose();
  return (m_ - t).norm() / norm;
}

HermitianOperator build_hamiltonian(const Device& device, const CouplerOverrides& overrides) {
  const auto omega = device.frequencies(overrides);
  const std::size_t dim = device.dimension();
  std::vector<Eigen::Triplet<double>> triplets;
  triplets.reserve(dim * (1 + 2 * device.couplings().size()));
  std::vector<int> occ(device.mode_count(), 0);
  for (std::size_t src = 0; src < dim; ++src) {
    for_each_element(device, omega, -1, src, occ,
                     [&](std::size_t target, double diag, double, double value, double) {
                       if (target == src) {
                         if (diag != 0.0) triplets.emplace_back(int(src), int(src), diag);
                       } else {
                         triplets.emplace_back(int(target), int(src), value);
                       }
                     });
    advance(occ, device.modes());
  }
  HermitianOperator::Sparse h(static_cast<Eigen::Index>(dim), static_cast<Eigen::Index>(dim));
  h.setFromTriplets(triplets.begin(), triplets.end());
  return HermitianOperator(std::move(h));
}

CouplerDrivenHamiltonian::CouplerDrivenHamiltonian(const Device& device, int coupler) : coupler_(coupler) {
  if (coupler < 0 || coupler >= device.num_couplers()) {
    throw DomainError("coupler " + std::to_string(coupler) + " does not exist");
  }
  const int cmode = Device::coupler_mode(coupler);
  const auto omega = device.frequencies();
  const std::size_t dim = device.dimension();

  // H is symmetric, so the column pattern generated per source is the row
  // pattern of that row; entries are sorted per row below.
  struct Entry {
    int col;
    double s;
    double c;
  };
  std::vector<std::vector<Entry>> rows(dim);
  occupation_.resize(static_cast<Eigen::Index>(dim));
  std::vector<int> occ(device.mode_count(), 0);
  for (std::size_t src = 0; src < dim; ++src) {
    occupation_[static_cast<Eigen::Index>(src)] = occ[cmode];
    for_each_element(device, omega, cmode, src, occ,
                     [&](std::size_t target, double diag, double, double vs, double vc) {
                       if (target == src) {
                         rows[src].push_back({int(src), diag, 0.0});
                       } else {
                         rows[target].push_back({int(src), vs, vc});
                       }
                     });
    advance(occ, device.modes());
  }
  row_start_.assign(dim + 1, 0);
  for (std::size_t r = 0; r < dim; ++r) {
    auto& row = rows[r];
    std::sort(row.begin(), row.end(), [](const Entry& a, const Entry& b) { return a.col < b.col; });
    row_start_[r + 1] = row_start_[r] + row.size();
    for (const auto& e : row) {
      col_.push_back(e.col);
      static_value_.push_back(e.s);
      coupler_value_.push_back(e.c);
    }
  }
}

void CouplerDrivenHamiltonian::apply(double omega, const StateMatrix& x, StateMatrix& y,
                                     std::span<const double> shift) const {
  const std::size_t dim = dimension();
  const Eigen::Index ncol = x.cols();
  const double root = std::sqrt(omega);
  y.resize(x.rows(), ncol);
  const Complex* xp = x.data();
  Complex* yp = y.data();
  for (std::size_t r = 0; r < dim; ++r) {
    Complex* yr = yp + r * ncol;
    for (Eigen::Index k = 0; k < ncol; ++k) yr[k] = 0.0;
    for (std::size_t e = row_start_[r]; e < row_start_[r + 1]; ++e) {
      double v = static_value_[e] + root * coupler_value_[e];
      const std::size_t c = static_cast<std::size_t>(col_[e]);
      if (c == r) v += omega * occupation_[static_cast<Eigen::Index>(r)];
      const Complex* xr = xp + c * ncol;
      for (Eigen::Index k = 0; k < ncol; ++k) yr[k] += v * xr[k];
    }
    if (!shift.empty()) {
      const Complex* xr = xp + r * ncol;
      for (Eigen::Index k = 0; k < ncol; ++k) yr[k] -= shift[k] * xr[k];
    }
  }
}

HermitianOperator CouplerDrivenHamiltonian::assemble(double diag_scale, double offdiag_scale,
                                                     bool include_static) const {
  const std::size_t dim = dimension();
  std::vector<Eigen::Triplet<double>> triplets;
  triplets.reserve(col_.size());
  for (std::size_t r = 0; r < dim; ++r) {
    for (std::size_t e = row_start_[r]; e < row_start_[r + 1]; ++e) {
      double v = (include_static ? static_value_[e] : 0.0) + offdiag_scale * coupler_value_[e];
      if (static_cast<std::size_t>(col_[e]) == r) v += diag_scale * occupation_[static_cast<Eigen::Index>(r)];
      if (v != 0.0) triplets.emplace_back(int(r), col_[e], v);
    }
  }
  HermitianOperator::Sparse h(static_cast<Eigen::Index>(dim), static_cast<Eigen::Index>(dim));
  h.setFromTriplets(triplets.begin(), triplets.end());
  return HermitianOperator(std::move(h));
}

HermitianOperator CouplerDrivenHamiltonian::at(double omega) const {
  return assemble(omega, std::sqrt(omega), true);
}

HermitianOperator CouplerDrivenHamiltonian::derivative(double omega) const {
  return assemble(1.0, 0.5 / std::sqrt(omega), false);
}

}  // namespace czsim
