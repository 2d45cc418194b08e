#include "doctest.h"

#include <cmath>
#include <vector>

#include "czsim/error.hpp"
#include "czsim/spectrum.hpp"
#include "support.hpp"

using namespace czsim;

namespace {

HermitianOperator dense_operator(const Eigen::MatrixXd& m) {
  return HermitianOperator(m.sparseView().cast<double>());
}

}  // namespace

TEST_SUITE("spectrum") {

TEST_CASE("diagonal operator eigenvalues come back sorted") {
  Eigen::MatrixXd m = Eigen::MatrixXd::Zero(3, 3);
  m.diagonal() << 3.0, -1.0, 2.0;
  const Spectrum s = eigensystem(dense_operator(m));
  CHECK(s.energies[0] == doctest::Approx(-1.0));
  CHECK(s.energies[1] == doctest::Approx(2.0));
  CHECK(s.energies[2] == doctest::Approx(3.0));
}

TEST_CASE("two-level coupling gives plus and minus g") {
  const double g = 0.37;
  Eigen::MatrixXd m(2, 2);
  m << 0.0, g, g, 0.0;
  const Spectrum s = eigensystem(dense_operator(m));
  CHECK(s.energies[0] == doctest::Approx(-g));
  CHECK(s.energies[1] == doctest::Approx(g));
  CHECK(std::abs(s.vectors(0, 1)) == doctest::Approx(1.0 / std::sqrt(2.0)));
  CHECK(s.vectors(0, 1) * s.vectors(1, 1) > 0.0);
  CHECK(s.vectors(0, 0) * s.vectors(1, 0) < 0.0);
}

TEST_CASE("two-qubit eigen decomposition reconstructs H") {
  const Device d = Device::reference_two_qubit();
  const Eigen::MatrixXd h = build_hamiltonian(d).to_dense();
  const Spectrum s = eigensystem(build_hamiltonian(d));
  const Eigen::MatrixXd rec = s.vectors * s.energies.asDiagonal() * s.vectors.transpose();
  CHECK((h - rec).norm() <= 1e-10 * h.norm());
  CHECK((s.vectors.transpose() * s.vectors - Eigen::MatrixXd::Identity(27, 27)).cwiseAbs().maxCoeff() < 1e-10);
  for (Eigen::Index c = 0; c < s.vectors.cols(); ++c) {
    Eigen::Index k;
    s.vectors.col(c).cwiseAbs().maxCoeff(&k);
    CHECK(s.vectors(k, c) > 0.0);
  }
}

TEST_CASE("labels in the uncoupled limit have unit overlap") {
  const Device d = testing::uncoupled_pair();
  const Spectrum s = labeled_spectrum(d);
  for (std::size_t b = 0; b < d.dimension(); ++b) {
    REQUIRE(s.bare_to_state[b] >= 0);
    CHECK(s.overlaps[b] == doctest::Approx(1.0));
  }
  // Additive energies cancel up to the rounding of the diagonal sums.
  const auto zz = zz_interaction(d);
  CHECK(std::abs(zz.nu_zz) <= 1e-15 * zz.e11);
}

TEST_CASE("idle |11> is well labeled and labeling is idempotent") {
  const Device d = Device::reference_two_qubit();
  const Spectrum s = labeled_spectrum(d);
  const std::vector<int> occ{1, 0, 1};
  CHECK(s.overlaps[bare_index(d, occ)] > 0.99);
  const Spectrum again = label_states(eigensystem(build_hamiltonian(d)), d);
  CHECK(again.bare_to_state == s.bare_to_state);
  std::vector<int> seen(d.dimension(), 0);
  for (int st : s.bare_to_state)
    if (st >= 0) CHECK(++seen[static_cast<std::size_t>(st)] == 1);
}

TEST_CASE("resonant bare states split evenly and both get labels") {
  ChainParameters p;
  p.qubit_freq_ghz = {5.0, 5.0};
  p.qubit_anharm_ghz = {-0.3, -0.3};
  p.coupler_freq_ghz = {7.0};
  p.coupler_anharm_ghz = {-0.25};
  p.r_nn = 0.0;
  p.r_nnn = 0.002;
  const Device d = Device::chain(p);
  const Spectrum s = labeled_spectrum(d);
  const auto a = bare_index(d, std::vector<int>{1, 0, 0});
  const auto b = bare_index(d, std::vector<int>{0, 0, 1});
  CHECK(s.overlaps[a] == doctest::Approx(1.0 / std::sqrt(2.0)).epsilon(1e-3));
  CHECK(s.overlaps[b] == doctest::Approx(1.0 / std::sqrt(2.0)).epsilon(1e-3));
  CHECK(s.bare_to_state[a] != s.bare_to_state[b]);
}

TEST_CASE("unassigned labels raise an error naming the state") {
  const Device d = Device::reference_two_qubit();
  Spectrum s = labeled_spectrum(d);
  s.bare_to_state[5] = -1;
  try {
    (void)s.state_of(5, d);
    FAIL("expected a labeling error");
  } catch (const LabelingError& e) {
    CHECK(std::string(e.what()).find(bare_label(d, 5)) != std::string::npos);
  }
}

TEST_CASE("ZZ report identity and reproducibility") {
  const Device d = Device::reference_two_qubit();
  const auto a = zz_interaction(d, {{0, from_ghz(6.3)}});
  const auto b = zz_interaction(d, {{0, from_ghz(6.3)}});
  CHECK(a.nu_zz == b.nu_zz);
  CHECK(a.nu_zz == (a.e11 - a.e01) - (a.e10 - a.e00));
}

TEST_CASE("two-qubit |ZZ| grows as the coupler descends from idle to 6 GHz") {
  const Device d = Device::reference_two_qubit();
  double prev = 0.0;
  for (double f = 7.86; f >= 6.0 - 1e-9; f -= 0.06) {
    const double v = std::abs(zz_interaction(d, {{0, from_ghz(f)}}).nu_zz);
    CHECK(v > prev);
    prev = v;
  }
}

TEST_CASE("uncoupled calibration reports zero ZZ") {
  const Device d = testing::uncoupled_pair();
  const auto r = calibrate_idle(d, 0, from_ghz(7.0), from_ghz(8.8));
  CHECK(r.abs_nu_zz <= 1e-15 * from_ghz(10.7));
}

TEST_CASE("two-qubit calibration lands near 7.86 GHz") {
  const Device d = Device::reference_two_qubit();
  const auto r = calibrate_idle(d, 0, from_ghz(7.0), from_ghz(8.8));
  CHECK(std::abs(to_ghz(r.omega) - 7.86) < 0.05);
  CHECK(r.abs_nu_zz < from_khz(10.0));
  CHECK_THROWS_AS(calibrate_idle(d, 0, from_ghz(5.0), from_ghz(8.8)), DomainError);
  CHECK_THROWS_AS(calibrate_idle(d, 2, from_ghz(7.0), from_ghz(8.8)), DomainError);
  CHECK_THROWS_AS(calibrate_idle(d, 0, from_ghz(7.0), from_ghz(7.3)), CalibrationError);
}

TEST_CASE("G vanishes without coupling and grows toward the qubits") {
  CHECK(diabaticity_prefactor(testing::uncoupled_pair(), 0, from_ghz(6.5)) == 0.0);
  const Device d = Device::reference_two_qubit();
  const double g6 = diabaticity_prefactor(d, 0, from_ghz(6.0));
  const double gi = diabaticity_prefactor(d, 0, from_ghz(7.86));
  CHECK(gi > 0.0);
  CHECK(g6 > gi);
}

TEST_CASE("perturbative state derivative matches central differences") {
  const Device d = Device::reference_two_qubit();
  const double delta = from_mhz(0.1);
  for (double f : {6.0, 6.8, 7.86}) {
    const double w = from_ghz(f);
    const auto br = diabaticity(d, 0, w, true);
    const Spectrum sp = labeled_spectrum(d, {{0, w + delta}});
    const Spectrum sm = labeled_spectrum(d, {{0, w - delta}});
    const Spectrum s0 = labeled_spectrum(d, {{0, w}});
    double g_fd = 0.0;
    for (const auto& t : br.terms) {
      const Eigen::VectorXd dv = (sp.vectors.col(t.v_state) - sm.vectors.col(t.v_state)) / (2.0 * delta);
      const double fd = s0.vectors.col(t.u_state).dot(dv);
      g_fd += std::abs(fd) / std::abs(t.gap);
    }
    CHECK(br.value == doctest::Approx(g_fd).epsilon(0.01));
  }
}

TEST_CASE("G is continuous on a 1 MHz grid and non-negative") {
  const Device d = Device::reference_two_qubit();
  double prev = diabaticity_prefactor(d, 0, from_ghz(6.5));
  for (int k = 1; k <= 40; ++k) {
    const double g = diabaticity_prefactor(d, 0, from_ghz(6.5) + k * from_mhz(1.0));
    CHECK(g >= 0.0);
    CHECK(g < 10.0 * prev);
    CHECK(prev < 10.0 * g);
    prev = g;
  }
}

TEST_CASE("G table interpolation and integrals") {
  const GTable t(1.0, 0.5, {1.0, 3.0, 2.0});
  CHECK(t.hi() == doctest::Approx(2.0));
  CHECK(t(1.25) == doctest::Approx(2.0));
  CHECK(t(2.0) == doctest::Approx(2.0));
  CHECK(t.integral(1.0, 2.0) == doctest::Approx(0.5 * (1.0 + 3.0) / 2.0 + 0.5 * (3.0 + 2.0) / 2.0));
  CHECK(t.integral(2.0, 1.0) == doctest::Approx(-t.integral(1.0, 2.0)));
  CHECK_THROWS_AS(t(2.5), RangeError);
  const auto w = t.solve_integral(1.0, t.integral(1.0, 1.7));
  REQUIRE(w.has_value());
  CHECK(*w == doctest::Approx(1.7));
  CHECK_FALSE(t.solve_integral(1.0, 100.0).has_value());
  const GTable built = GTable::build(Device::reference_two_qubit(), 0, from_ghz(6.9), from_ghz(7.0), from_mhz(10.0));
  CHECK(built(from_ghz(6.95)) == doctest::Approx(diabaticity_prefactor(Device::reference_two_qubit(), 0, from_ghz(6.95))).epsilon(1e-9));
}

}
