#include "doctest.h"

#include <cmath>
#include <numbers>
#include <random>

#include "json.hpp"

#include "czsim/error.hpp"
#include "czsim/gate.hpp"
#include "czsim/gate_problem.hpp"
#include "czsim/spectrum.hpp"

using namespace czsim;

namespace {

const double kPi = std::numbers::pi;

Eigen::Matrix4cd phase_layer(double a, double b) {
  Eigen::Vector4cd d;
  d << 1.0, std::polar(1.0, b), std::polar(1.0, a), std::polar(1.0, a + b);
  return d.asDiagonal();
}

Device calibrated_pair() {
  const Device d = Device::reference_two_qubit();
  return d.with_coupler_frequency(0, calibrate_idle(d, 0, from_ghz(7.0), from_ghz(8.5)).omega);
}

Eigen::Matrix4cd random_unitary(std::mt19937_64& rng) {
  std::normal_distribution<double> n;
  Eigen::Matrix4cd m;
  for (int i = 0; i < 4; ++i)
    for (int j = 0; j < 4; ++j) m(i, j) = Complex(n(rng), n(rng));
  return Eigen::HouseholderQR<Eigen::Matrix4cd>(m).householderQ();
}

}  // namespace

TEST_SUITE("gate") {

TEST_CASE("fidelity of reference gates") {
  CHECK(std::abs(cz_fidelity(make_truncated(ideal_cz())).fidelity - 1.0) < 1e-12);
  CHECK(std::abs(cz_fidelity(make_truncated(Eigen::Matrix4cd::Identity())).fidelity - 0.3) < 1e-12);
  const auto z = make_truncated(Eigen::Matrix4cd::Zero());
  CHECK(z.leakage == doctest::Approx(1.0));
  CHECK(cz_fidelity(z).fidelity == 0.0);
}

TEST_CASE("phase correction recovers CZ from a dressed diagonal") {
  const double a = 0.7;
  const double b = -2.1;
  Eigen::Vector4cd d;
  d << 1.0, std::polar(1.0, a), std::polar(1.0, b), -std::polar(1.0, a + b);
  const auto c = phase_correct(make_truncated(d.asDiagonal()));
  CHECK((c.gate.u - ideal_cz()).cwiseAbs().maxCoeff() < 1e-12);
  CHECK(std::abs(cz_fidelity(c).fidelity - 1.0) < 1e-12);
  const auto cz = phase_correct(make_truncated(ideal_cz()));
  CHECK(cz.phi_a == doctest::Approx(0.0));
  CHECK(cz.phi_b == doctest::Approx(0.0));
  CHECK((cz.gate.u - ideal_cz()).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("corrected fidelity is invariant under local Z layers and global phase") {
  std::mt19937_64 rng(7);
  for (int trial = 0; trial < 20; ++trial) {
    Eigen::Matrix4cd u = 0.3 * random_unitary(rng);
    u.diagonal() += Eigen::Vector4cd(1.0, 0.9, 0.95, -0.8);
    const double f0 = cz_fidelity(phase_correct(make_truncated(u))).fidelity;
    std::uniform_real_distribution<double> ang(-kPi, kPi);
    const Eigen::Matrix4cd v = std::polar(1.0, ang(rng)) * phase_layer(ang(rng), ang(rng)) * u;
    CHECK(std::abs(cz_fidelity(phase_correct(make_truncated(v))).fidelity - f0) < 1e-12);
    CHECK(f0 >= 0.0);
    CHECK(f0 <= 1.0 + 1e-15);
    CHECK(cz_fidelity(make_truncated(u)).fidelity <= f0 + 1e-9);
  }
}

TEST_CASE("correction never lowers the fidelity of near-CZ gates") {
  std::mt19937_64 rng(21);
  std::uniform_real_distribution<double> small(-0.2, 0.2);
  for (int trial = 0; trial < 50; ++trial) {
    Eigen::Vector4cd d;
    d << 1.0, std::polar(1.0, small(rng)), std::polar(1.0, small(rng)), -std::polar(1.0, small(rng));
    Eigen::Matrix4cd u = d.asDiagonal();
    u += 0.02 * random_unitary(rng);
    const auto g = make_truncated(u);
    CHECK(cz_fidelity(g).fidelity <= cz_fidelity(phase_correct(g)).fidelity + 1e-9);
  }
}

TEST_CASE("vanishing diagonal is a degenerate gate") {
  Eigen::Matrix4cd u = Eigen::Matrix4cd::Identity();
  u(1, 1) = 0.0;
  CHECK_THROWS_AS(phase_correct(make_truncated(u)), DegenerateGateError);
}

TEST_CASE("fidelity report serialises to JSON") {
  const auto r = cz_fidelity(make_truncated(Eigen::Matrix4cd::Identity()));
  const auto j = nlohmann::json::parse(to_json(r));
  for (const char* k : {"fidelity", "error", "phi_a", "phi_b", "leakage"}) CHECK(j.contains(k));
  CHECK(j["error"].get<double>() == doctest::Approx(0.7));
}

TEST_CASE("truncated propagator at idle") {
  const Device d = calibrated_pair();
  const ComputationalBasis b = ComputationalBasis::at_idle(d);
  const double idle = d.modes()[1].omega;
  const auto zero = truncate(propagate_unitary(d, make_schedule(PulseShape::fourier, 0.0, 0.0, 0, idle), b.as_columns()), b);
  CHECK((zero.u - Eigen::Matrix4cd::Identity()).cwiseAbs().maxCoeff() < 1e-12);
  CHECK(zero.leakage < 1e-12);
  const auto still = truncate(propagate_unitary(d, make_schedule(PulseShape::fourier, 0.0, 40.0, 0, idle), b.as_columns()), b);
  for (int i = 0; i < 4; ++i)
    for (int j = 0; j < 4; ++j)
      if (i != j) CHECK(std::abs(still.u(i, j)) < 1e-6);
  CHECK(still.leakage < 1e-8);
  CHECK((still.u.adjoint() * still.u - Eigen::Matrix4d::Identity().cast<Complex>()).cwiseAbs().maxCoeff() < 1e-8);
  const auto moved = truncate(
      propagate_unitary(d, make_schedule(PulseShape::fourier, -2.2, 20.0, 0, idle), b.as_columns()), b);
  CHECK(moved.leakage > 1e-6);
  for (int c = 0; c < 4; ++c) CHECK(std::abs(moved.u.col(c).squaredNorm() - (1.0 - moved.column_leakage[c])) < 1e-9);
}

TEST_CASE("accumulated phase at idle is bounded by the residual ZZ") {
  const Device d = calibrated_pair();
  const auto s = make_schedule(PulseShape::quadratic, 0.0, 100.0, 0, d.modes()[1].omega);
  const double nu = zz_interaction(d).nu_zz;
  const double phase = accumulated_phase(d, s);
  CHECK(phase == doctest::Approx(nu * 100.0).epsilon(1e-9));
  CHECK(std::abs(phase) < from_khz(10.0) * 100.0);
  CHECK_THROWS_AS(accumulated_phase(d, s, 3), DomainError);
}

TEST_CASE("excess phase response to small quadratic pulses") {
  auto excess_ratio = [](const Device& d, double lam) {
    const double idle = d.modes()[1].omega;
    const double p0 = accumulated_phase(d, make_schedule(PulseShape::quadratic, 0.0, 30.0, 0, idle));
    const double p1 = accumulated_phase(d, make_schedule(PulseShape::quadratic, lam, 30.0, 0, idle));
    const double p2 = accumulated_phase(d, make_schedule(PulseShape::quadratic, 2.0 * lam, 30.0, 0, idle));
    return (p2 - p0) / (p1 - p0);
  };
  // Away from the ZZ minimum the response is linear in the pulse amplitude.
  const Device off = Device::reference_two_qubit().with_coupler_frequency(0, from_ghz(7.0));
  CHECK(excess_ratio(off, 1e-4) == doctest::Approx(2.0).epsilon(0.1));
  // At the calibrated idle d nu / d omega_c = 0, so the leading response is quadratic.
  CHECK(excess_ratio(calibrated_pair(), 1e-4) == doctest::Approx(4.0).epsilon(0.1));
}

TEST_CASE("optimised 40 ns adiabatic pulse accumulates a pi phase") {
  GateProblemOptions opt;
  opt.band_floor = BandFloor::lower_pair_qubit;
  opt.g_step = from_mhz(2.0);
  const GateProblem p(calibrated_pair(), opt);
  DESettings de;
  de.population = 10;
  de.max_generations = 25;
  de.seed = 3;
  const auto r = optimize_pulse(p, PulseShape::adiabatic, 40.0, std::nullopt, de);
  CHECK(r.report.error < 1e-3);
  const double phase = accumulated_phase(p.device(), r.schedule, 400);
  CHECK(std::abs(std::abs(phase) - kPi) < 0.15);
  const auto gate = truncate(p.propagate(r.schedule), p.basis());
  CHECK(cz_fidelity(gate).fidelity <= cz_fidelity(phase_correct(gate)).fidelity + 1e-9);
}

}
