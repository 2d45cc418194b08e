#include "czsim/spectrum.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>
#include <thread>
#include <tuple>

#include <lapacke.h>

#include "czsim/error.hpp"

namespace czsim {

namespace {

// Connected components of the sparsity graph; H is block diagonal over them
// (for the chain Hamiltonian: the two excitation-parity sectors).
std::vector<std::vector<int>> connected_blocks(const HermitianOperator::Sparse& m) {
  const int n = static_cast<int>(m.rows());
  std::vector<int> parent(n);
  std::iota(parent.begin(), parent.end(), 0);
  auto find = [&](int x) {
    while (parent[x] != x) {
      parent[x] = parent[parent[x]];
      x = parent[x];
    }
    return x;
  };
  for (int r = 0; r < n; ++r) {
    for (HermitianOperator::Sparse::InnerIterator it(m, r); it; ++it) {
      if (it.value() == 0.0) continue;
      const int a = find(r);
      const int b = find(static_cast<int>(it.col()));
      if (a != b) parent[std::max(a, b)] = std::min(a, b);
    }
  }
  std::vector<int> block_of(n, -1);
  std::vector<std::vector<int>> blocks;
  for (int r = 0; r < n; ++r) {
    const int root = find(r);
    if (block_of[root] < 0) {
      block_of[root] = static_cast<int>(blocks.size());
      blocks.emplace_back();
    }
    blocks[block_of[root]].push_back(r);
  }
  return blocks;
}

void fix_gauge(Eigen::MatrixXd& v) {
  for (Eigen::Index k = 0; k < v.cols(); ++k) {
    Eigen::Index arg = 0;
    v.col(k).cwiseAbs().maxCoeff(&arg);
    if (v(arg, k) < 0.0) v.col(k) = -v.col(k);
  }
}

}  // namespace

int Spectrum::state_of(std::size_t bare) const {
  if (!labeled()) throw LabelingError("spectrum has not been labeled");
  if (bare >= bare_to_state.size()) throw DomainError("bare index out of range");
  const int s = bare_to_state[bare];
  if (s < 0) {
    throw LabelingError("ambiguous labeling: bare state " + std::to_string(bare) +
                        " has no dressed partner above overlap " + std::to_string(threshold));
  }
  return s;
}

int Spectrum::state_of(std::size_t bare, const Device& device) const {
  try {
    return state_of(bare);
  } catch (const LabelingError&) {
    throw LabelingError("ambiguous labeling: bare state " + bare_label(device, bare) +
                        " has no dressed partner above overlap " + std::to_string(threshold));
  }
}

Spectrum eigensystem(const HermitianOperator& h) {
  const auto& m = h.matrix();
  const Eigen::Index n = m.rows();
  const auto blocks = connected_blocks(m);

  // (energy, block, local index) for a stable global ordering.
  std::vector<std::tuple<double, int, int>> order;
  order.reserve(static_cast<std::size_t>(n));
  std::vector<Eigen::MatrixXd> block_vectors(blocks.size());
  std::vector<Eigen::VectorXd> block_values(blocks.size());

  for (std::size_t b = 0; b < blocks.size(); ++b) {
    const auto& idx = blocks[b];
    const int bn = static_cast<int>(idx.size());
    Eigen::MatrixXd dense = Eigen::MatrixXd::Zero(bn, bn);
    std::vector<int> local(static_cast<std::size_t>(n), -1);
    for (int k = 0; k < bn; ++k) local[idx[k]] = k;
    for (int k = 0; k < bn; ++k) {
      for (HermitianOperator::Sparse::InnerIterator it(m, idx[k]); it; ++it) {
        dense(k, local[it.col()]) = it.value();
      }
    }
    Eigen::VectorXd w(bn);
    if (bn == 1) {
      w[0] = dense(0, 0);
      dense(0, 0) = 1.0;
    } else {
      const lapack_int info =
          LAPACKE_dsyevd(LAPACK_COL_MAJOR, 'V', 'U', bn, dense.data(), bn, w.data());
      if (info != 0) {
        throw EigenError("eigensolver failed to converge (dsyevd info " + std::to_string(info) +
                         ") on a block of dimension " + std::to_string(bn));
      }
    }
    for (int k = 0; k < bn; ++k) order.emplace_back(w[k], static_cast<int>(b), k);
    block_vectors[b] = std::move(dense);
    block_values[b] = std::move(w);
  }
  std::stable_sort(order.begin(), order.end());

  Spectrum s;
  s.energies.resize(n);
  s.vectors = Eigen::MatrixXd::Zero(n, n);
  for (Eigen::Index k = 0; k < n; ++k) {
    const auto [e, b, j] = order[static_cast<std::size_t>(k)];
    s.energies[k] = e;
    const auto& idx = blocks[static_cast<std::size_t>(b)];
    const auto& vec = block_vectors[static_cast<std::size_t>(b)];
    for (std::size_t r = 0; r < idx.size(); ++r) s.vectors(idx[r], k) = vec(static_cast<Eigen::Index>(r), j);
  }
  fix_gauge(s.vectors);
  return s;
}

Spectrum label_states(Spectrum s, const Device& device, double threshold) {
  const auto n = static_cast<Eigen::Index>(s.dimension());
  if (static_cast<std::size_t>(n) != device.dimension()) {
    throw DomainError("spectrum dimension does not match the device");
  }
  struct Candidate {
    double overlap;
    int bare;
    int state;
  };
  std::vector<Candidate> candidates;
  for (Eigen::Index k = 0; k < n; ++k) {
    for (Eigen::Index b = 0; b < n; ++b) {
      const double o = std::abs(s.vectors(b, k));
      if (o >= threshold) candidates.push_back({o, static_cast<int>(b), static_cast<int>(k)});
    }
  }
  std::sort(candidates.begin(), candidates.end(), [](const Candidate& x, const Candidate& y) {
    return std::tie(y.overlap, x.bare, x.state) < std::tie(x.overlap, y.bare, y.state);
  });
  s.threshold = threshold;
  s.bare_to_state.assign(static_cast<std::size_t>(n), -1);
  s.state_to_bare.assign(static_cast<std::size_t>(n), -1);
  s.overlaps.assign(static_cast<std::size_t>(n), 0.0);
  for (const auto& c : candidates) {
    if (s.bare_to_state[c.bare] >= 0 || s.state_to_bare[c.state] >= 0) continue;
    s.bare_to_state[c.bare] = c.state;
    s.state_to_bare[c.state] = c.bare;
    s.overlaps[c.bare] = c.overlap;
  }
  return s;
}

Spectrum labeled_spectrum(const Device& device, const CouplerOverrides& overrides) {
  return label_states(eigensystem(build_hamiltonian(device, overrides)), device);
}

ComputationalStates computational_states(const Spectrum& labeled, const Device& device,
                                         const ActivePair& pair) {
  ComputationalStates cs;
  for (int ab = 0; ab < 4; ++ab) {
    const std::size_t bare = pair_state_index(device, pair, ab >> 1, ab & 1);
    cs.state[ab] = labeled.state_of(bare, device);
    cs.energy[ab] = labeled.energies[cs.state[ab]];
  }
  return cs;
}

ZZReport zz_from_energies(double e00, double e01, double e10, double e11) {
  return {(e11 - e01) - (e10 - e00), e00, e01, e10, e11};
}

ZZReport zz_interaction(const Device& device, const CouplerOverrides& overrides,
                        std::optional<ActivePair> pair) {
  const Spectrum s = labeled_spectrum(device, overrides);
  const auto cs = computational_states(s, device, pair.value_or(device.active_pair()));
  return zz_from_energies(cs.energy[0], cs.energy[1], cs.energy[2], cs.energy[3]);
}

CalibrationResult calibrate_idle(const Device& device, int coupler, double lo, double hi,
                                 double resolution) {
  if (coupler < 0 || coupler >= device.num_couplers()) {
    throw DomainError("calibrate_idle: coupler " + std::to_string(coupler) + " does not exist");
  }
  if (!(lo < hi)) throw DomainError("calibrate_idle: bracket must be ordered");
  const double qa = device.modes()[Device::qubit_mode(coupler)].omega;
  const double qb = device.modes()[Device::qubit_mode(coupler + 1)].omega;
  if (lo <= std::max(qa, qb)) {
    throw DomainError("calibrate_idle: bracket must lie above both adjacent qubit frequencies");
  }
  const ActivePair pair{coupler, coupler + 1, coupler};
  int evaluations = 0;
  auto f = [&](double w) {
    ++evaluations;
    return std::abs(zz_interaction(device, {{coupler, w}}, pair).nu_zz);
  };

  const double invphi = (std::sqrt(5.0) - 1.0) / 2.0;
  double a = lo;
  double b = hi;
  double c = b - invphi * (b - a);
  double d = a + invphi * (b - a);
  double fc = f(c);
  double fd = f(d);
  while (b - a > resolution) {
    if (fc < fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - invphi * (b - a);
      fc = f(c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + invphi * (b - a);
      fd = f(d);
    }
  }
  const double x = (fc < fd) ? c : d;
  const double fx = std::min(fc, fd);
  const bool at_edge = (x - lo < resolution) || (hi - x < resolution);
  if (at_edge && fx > 1e-12) {
    const double flo = zz_interaction(device, {{coupler, lo}}, pair).nu_zz;
    const double fhi = zz_interaction(device, {{coupler, hi}}, pair).nu_zz;
    std::ostringstream os;
    os << "calibration failed for coupler " << coupler << ": no interior |nu_ZZ| minimum in ["
       << to_ghz(lo) << ", " << to_ghz(hi) << "] GHz (nu_ZZ/2pi = " << to_ghz(flo) << " GHz at "
       << to_ghz(lo) << ", " << to_ghz(fhi) << " GHz at " << to_ghz(hi) << ")";
    throw CalibrationError(os.str());
  }
  return {coupler, x, fx, evaluations};
}

Device calibrate_all(const Device& device, double lo, double hi,
                     std::vector<CalibrationResult>* results, double resolution) {
  Device current = device;
  for (int c = 0; c < device.num_couplers(); ++c) {
    const auto r = calibrate_idle(current, c, lo, hi, resolution);
    current = current.with_coupler_frequency(c, r.omega);
    if (results) results->push_back(r);
  }
  return current;
}

DiabaticityBreakdown diabaticity(const Device& device, int coupler, double omega_c, bool keep_terms) {
  const CouplerDrivenHamiltonian driven(device, coupler);
  const CouplerOverrides overrides{{coupler, omega_c}};
  const Spectrum s = label_states(eigensystem(build_hamiltonian(device, overrides)), device);
  const HermitianOperator dh = driven.derivative(omega_c);

  DiabaticityBreakdown out;
  out.computational = computational_states(s, device, device.active_pair());
  const double scale = std::max(1.0, dh.frobenius_norm()) * 1e-13;
  for (int ab = 0; ab < 4; ++ab) {
    const int u = out.computational.state[ab];
    const Eigen::VectorXd x = dh.matrix() * s.vectors.col(u);
    const Eigen::VectorXd elements = s.vectors.transpose() * x;
    for (Eigen::Index v = 0; v < elements.size(); ++v) {
      if (v == u) continue;
      const double me = elements[v];
      if (std::abs(me) <= scale) continue;
      const double gap = s.energies[u] - s.energies[v];
      if (std::abs(gap) < kDegeneracyGap) {
        std::ostringstream os;
        os << "near-degeneracy at omega_c/2pi = " << to_ghz(omega_c) << " GHz: states " << u
           << " and " << v << " split by " << to_ghz(std::abs(gap)) * 1e6 << " kHz";
        throw DegeneracyError(os.str());
      }
      out.value += std::abs(me) / (gap * gap);
      if (keep_terms) out.terms.push_back({u, static_cast<int>(v), me, gap, me / (-gap)});
    }
  }
  return out;
}

double diabaticity_prefactor(const Device& device, int coupler, double omega_c) {
  return diabaticity(device, coupler, omega_c).value;
}

GTable::GTable(double lo, double step, std::vector<double> values)
    : lo_(lo), step_(step), values_(std::move(values)) {
  if (values_.size() < 2 || !(step_ > 0.0)) throw DomainError("G table needs two or more nodes");
  cumulative_.assign(values_.size(), 0.0);
  for (std::size_t k = 1; k < values_.size(); ++k) {
    cumulative_[k] = cumulative_[k - 1] + 0.5 * step_ * (values_[k - 1] + values_[k]);
  }
}

GTable GTable::build(const Device& device, int coupler, double lo, double hi, double step, int workers) {
  if (!(hi > lo) || !(step > 0.0)) throw DomainError("G table range must be ordered");
  const auto n = static_cast<std::size_t>(std::ceil((hi - lo) / step - 1e-9)) + 1;
  std::vector<double> values(n);
  std::vector<std::string> failures(n);
  auto work = [&](std::size_t first, std::size_t stride) {
    for (std::size_t k = first; k < n; k += stride) {
      try {
        values[k] = diabaticity_prefactor(device, coupler, lo + step * static_cast<double>(k));
      } catch (const Error& e) {
        failures[k] = e.what();
      }
    }
  };
  const auto nworkers = static_cast<std::size_t>(std::max(1, workers));
  if (nworkers == 1) {
    work(0, 1);
  } else {
    std::vector<std::jthread> pool;
    for (std::size_t w = 0; w < nworkers; ++w) pool.emplace_back(work, w, nworkers);
  }
  for (std::size_t k = 0; k < n; ++k) {
    if (!failures[k].empty()) throw RangeError("G table precompute failed: " + failures[k]);
  }
  return GTable(lo, step, std::move(values));
}

GTable GTable::constant(double lo, double hi, double value) {
  return GTable(lo, hi - lo, {value, value});
}

double GTable::operator()(double omega) const {
  if (!contains(omega)) {
    std::ostringstream os;
    os << "omega_c/2pi = " << to_ghz(omega) << " GHz outside the G table [" << to_ghz(lo()) << ", "
       << to_ghz(hi()) << "] GHz; widen the precompute band";
    throw RangeError(os.str());
  }
  const double x = (omega - lo_) / step_;
  auto k = static_cast<std::size_t>(x);
  if (k >= values_.size() - 1) k = values_.size() - 2;
  const double f = x - static_cast<double>(k);
  return values_[k] + f * (values_[k + 1] - values_[k]);
}

double GTable::antiderivative(double omega) const {
  const double x = (omega - lo_) / step_;
  auto k = static_cast<std::size_t>(std::max(0.0, x));
  if (k >= values_.size() - 1) k = values_.size() - 2;
  const double f = x - static_cast<double>(k);
  const double slope = values_[k + 1] - values_[k];
  return cumulative_[k] + step_ * (values_[k] * f + 0.5 * slope * f * f);
}

double GTable::integral(double a, double b) const {
  if (!contains(a) || !contains(b)) throw RangeError("G table integral outside the table");
  return antiderivative(b) - antiderivative(a);
}

std::optional<double> GTable::solve_integral(double from, double target) const {
  if (!contains(from)) throw RangeError("G table integral start outside the table");
  const double base = antiderivative(from);
  const double want = base + target;
  if (want < 0.0 || want > cumulative_.back()) return std::nullopt;
  // The antiderivative is increasing (G > 0); bisect.
  double a = lo();
  double b = hi();
  for (int it = 0; it < 200 && b - a > 1e-15 * std::max(1.0, std::abs(b)); ++it) {
    const double m = 0.5 * (a + b);
    if (antiderivative(m) < want) a = m; else b = m;
  }
  return 0.5 * (a + b);
}

}  // namespace czsim
