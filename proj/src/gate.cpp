#include "czsim/gate.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <utility>
#include <sstream>

#include "json.hpp"

#include "czsim/error.hpp"

namespace czsim {

ComputationalBasis ComputationalBasis::at_idle(const Device& device) {
  return from_spectrum(labeled_spectrum(device), device);
}

ComputationalBasis ComputationalBasis::from_spectrum(const Spectrum& labeled, const Device& device) {
  const auto cs = computational_states(labeled, device, device.active_pair());
  ComputationalBasis b;
  b.vectors.resize(static_cast<Eigen::Index>(device.dimension()), 4);
  for (int k = 0; k < 4; ++k) {
    b.vectors.col(k) = labeled.vectors.col(cs.state[k]);
    b.energies[k] = cs.energy[k];
    const std::size_t bare = pair_state_index(device, device.active_pair(), k >> 1, k & 1);
    b.overlaps[k] = labeled.overlaps[bare];
  }
  return b;
}

StateMatrix ComputationalBasis::as_columns() const { return vectors.cast<Complex>(); }

Eigen::Matrix4cd ideal_cz() {
  Eigen::Matrix4cd cz = Eigen::Matrix4cd::Identity();
  cz(3, 3) = -1.0;
  return cz;
}

TruncatedGate make_truncated(const Eigen::Matrix4cd& u) {
  TruncatedGate g;
  g.u = u;
  double total = 0.0;
  for (int c = 0; c < 4; ++c) {
    g.column_leakage[c] = std::clamp(1.0 - u.col(c).squaredNorm(), 0.0, 1.0);
    total += g.column_leakage[c];
  }
  g.leakage = total / 4.0;
  return g;
}

TruncatedGate truncate(const PropagationResult& result, const ComputationalBasis& basis) {
  if (result.mode != PropagationMode::unitary || result.columns.cols() != 4) {
    throw DomainError("truncate needs a unitary result propagated from the four computational states");
  }
  if (result.columns.rows() != basis.vectors.rows()) throw DomainError("basis and result dimensions differ");
  const Eigen::MatrixXcd cols = result.columns;
  const Eigen::Matrix4cd u = basis.vectors.cast<Complex>().adjoint() * cols;
  return make_truncated(u);
}

CorrectedGate phase_correct(const TruncatedGate& gate) {
  const Eigen::Matrix4cd& u = gate.u;
  constexpr double kTiny = 1e-12;
  if (std::abs(u(0, 0)) < kTiny || std::abs(u(1, 1)) < kTiny || std::abs(u(2, 2)) < kTiny) {
    throw DegenerateGateError("phase correction needs non-vanishing U_00, U_01,01 and U_10,10");
  }
  CorrectedGate out;
  out.phi_b = -std::arg(u(1, 1) * std::conj(u(0, 0)));
  out.phi_a = -std::arg(u(2, 2) * std::conj(u(0, 0)));

  // |Tr(CZ^dag D U)| = |A + e^{i phi_b} B| with A, B depending on phi_a only,
  // so phi_b = arg A - arg B and phi_a is a one-dimensional search.
  auto split = [&](double pa) {
    const Complex e = std::exp(Complex(0.0, pa));
    return std::pair{u(0, 0) + e * u(2, 2), u(1, 1) - e * u(3, 3)};
  };
  auto overlap = [&](double pa) {
    const auto [a, b] = split(pa);
    return std::abs(a) + std::abs(b);
  };
  constexpr int kScan = 256;
  const double width = 2.0 * std::numbers::pi / kScan;
  double best = out.phi_a;
  for (int k = 0; k < kScan; ++k) {
    const double pa = out.phi_a + k * width;
    if (overlap(pa) > overlap(best)) best = pa;
  }
  double lo = best - width;
  double hi = best + width;
  const double invphi = (std::sqrt(5.0) - 1.0) / 2.0;
  while (hi - lo > 1e-12) {
    const double c = hi - invphi * (hi - lo);
    const double d = lo + invphi * (hi - lo);
    if (overlap(c) > overlap(d)) hi = d; else lo = c;
  }
  const double refined = 0.5 * (lo + hi);
  const double start = overlap(out.phi_a);
  if (overlap(refined) > start * (1.0 + 4.0 * std::numeric_limits<double>::epsilon())) {
    const auto [a, b] = split(refined);
    out.phi_a = std::remainder(refined, 2.0 * std::numbers::pi);
    out.phi_b = std::remainder(std::arg(a) - std::arg(b), 2.0 * std::numbers::pi);
  }
  const Complex global = std::exp(Complex(0.0, -std::arg(u(0, 0))));
  Eigen::Vector4cd diag;
  diag << 1.0, std::exp(Complex(0.0, out.phi_b)), std::exp(Complex(0.0, out.phi_a)),
      std::exp(Complex(0.0, out.phi_a + out.phi_b));
  out.gate = gate;
  out.gate.u = global * (diag.asDiagonal() * u);
  return out;
}

FidelityReport cz_fidelity(const CorrectedGate& gate) {
  constexpr double d = 4.0;
  const Complex tr = (ideal_cz().adjoint() * gate.gate.u).trace();
  const double a = std::abs(tr);
  FidelityReport r;
  r.fidelity = (a + a * a) / (d * (d + 1.0));
  r.error = 1.0 - r.fidelity;
  r.phi_a = gate.phi_a;
  r.phi_b = gate.phi_b;
  r.leakage = gate.gate.leakage;
  return r;
}

FidelityReport cz_fidelity(const TruncatedGate& gate) { return cz_fidelity(CorrectedGate{gate, 0.0, 0.0}); }

namespace {

// Follows the four computational states from one coupler frequency to the
// next by maximum overlap with the previous eigenvectors.
struct StateTracker {
  const Device& device;
  int coupler;
  double omega;
  Eigen::Matrix<double, Eigen::Dynamic, 4> vectors;
  std::array<double, 4> energy{};

  void move_to(double target, double t) {
    const int n = std::max(1, static_cast<int>(std::ceil(std::abs(target - omega) / kTrackingStep)));
    const double start = omega;
    for (int k = 1; k <= n; ++k) step(start + (target - start) * k / n, t);
  }

  void step(double w, double t) {
    const Spectrum s = eigensystem(build_hamiltonian(device, {{coupler, w}}));
    for (int c = 0; c < 4; ++c) {
      const Eigen::VectorXd ov = (s.vectors.transpose() * vectors.col(c)).cwiseAbs();
      Eigen::Index best;
      const double o = ov.maxCoeff(&best);
      if (o < kDefaultLabelThreshold) {
        std::ostringstream os;
        os << "resonance crossing at t = " << t << " ns (omega_c/2pi = " << to_ghz(w)
           << " GHz): computational state " << c << " lost track (overlap " << o << ")";
        throw ResonanceCrossingError(os.str());
      }
      Eigen::VectorXd v = s.vectors.col(best);
      if (v.dot(vectors.col(c)) < 0.0) v = -v;
      vectors.col(c) = v;
      energy[static_cast<std::size_t>(c)] = s.energies[best];
    }
    omega = w;
  }

  double nu() const { return zz_from_energies(energy[0], energy[1], energy[2], energy[3]).nu_zz; }

  static constexpr double kTrackingStep = from_mhz(5.0);
};

}  // namespace

double accumulated_phase(const Device& device, const PulseSchedule& schedule, int intervals) {
  if (intervals < 2 || intervals % 2 != 0) throw DomainError("Simpson quadrature needs an even interval count");
  if (schedule.gate_time == 0.0) return 0.0;
  const Device start = device.with_coupler_frequency(schedule.coupler, schedule.omega(0.0));
  const ComputationalBasis b = ComputationalBasis::at_idle(start);
  StateTracker tr{device, schedule.coupler, schedule.omega(0.0), b.vectors, b.energies};
  const double h = schedule.gate_time / intervals;
  double sum = 0.0;
  for (int k = 0; k <= intervals; ++k) {
    const double t = (k == intervals) ? schedule.gate_time : h * k;
    if (k > 0) tr.move_to(schedule.omega(t), t);
    const double weight = (k == 0 || k == intervals) ? 1.0 : (k % 2 ? 4.0 : 2.0);
    sum += weight * tr.nu();
  }
  return sum * h / 3.0;
}

std::string to_json(const FidelityReport& r) {
  nlohmann::json j{{"fidelity", r.fidelity}, {"error", r.error}, {"phi_a", r.phi_a},
                   {"phi_b", r.phi_b},       {"leakage", r.leakage}};
  return j.dump();
}

}  // namespace czsim
