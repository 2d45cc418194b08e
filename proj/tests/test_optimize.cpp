#include "doctest.h"

#include <cmath>
#include <limits>
#include <mutex>
#include <numbers>

#include "czsim/error.hpp"
#include "czsim/gate_problem.hpp"
#include "czsim/optimize.hpp"
#include "czsim/spectrum.hpp"

using namespace czsim;

TEST_SUITE("optimize") {

TEST_CASE("convex objective") {
  DESettings s;
  s.seed = 11;
  s.max_generations = 200;
  s.tolerance = 1e-16;
  const auto r = de_minimize([](const std::vector<double>& x) { return (x[0] - 2.0) * (x[0] - 2.0); }, {{-10.0, 10.0}}, s);
  CHECK(std::abs(r.best[0] - 2.0) < 1e-6);
}

TEST_CASE("multimodal objective agrees with a grid scan") {
  auto f = [](double x) { return std::sin(5.0 * x) + 0.1 * x * x; };
  double best_x = -5.0;
  for (double x = -5.0; x <= 5.0; x += 1e-3)
    if (f(x) < f(best_x)) best_x = x;
  DESettings s;
  s.seed = 5;
  const auto r = de_minimize([&](const std::vector<double>& x) { return f(x[0]); }, {{-5.0, 5.0}}, s);
  CHECK(std::abs(r.best[0] - best_x) < 1e-3);
  CHECK(r.best_value <= f(best_x) + 1e-9);
}

TEST_CASE("runs are reproducible and traces well formed") {
  std::vector<std::vector<double>> seen;
  std::mutex m;
  auto f = [&](const std::vector<double>& x) {
    std::lock_guard<std::mutex> lock(m);
    seen.push_back(x);
    return std::cos(3.0 * x[0]) + std::abs(x[1] - 0.5);
  };
  DESettings s;
  s.seed = 99;
  s.max_generations = 30;
  const Bounds b{{-2.0, 2.0}, {0.0, 1.0}};
  const auto a = de_minimize(f, b, s);
  const auto size_a = seen.size();
  const auto c = de_minimize(f, b, s);
  CHECK(a.trace.best_objective == c.trace.best_objective);
  CHECK(a.trace.best_parameters == c.trace.best_parameters);
  CHECK(a.best == c.best);
  for (std::size_t g = 1; g < a.trace.best_objective.size(); ++g)
    CHECK(a.trace.best_objective[g] <= a.trace.best_objective[g - 1]);
  double min_seen = std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < size_a; ++k) {
    const auto& x = seen[k];
    CHECK(x[0] >= -2.0);
    CHECK(x[0] <= 2.0);
    CHECK(x[1] >= 0.0);
    CHECK(x[1] <= 1.0);
    min_seen = std::min(min_seen, std::cos(3.0 * x[0]) + std::abs(x[1] - 0.5));
  }
  CHECK(a.best_value == min_seen);
  CHECK(a.trace.evaluations == size_a);
  s.seed = 100;
  CHECK(de_minimize(f, b, s).trace.best_parameters != a.trace.best_parameters);
}

TEST_CASE("parallel evaluation does not change the result") {
  auto f = [](const std::vector<double>& x) { return std::sin(5.0 * x[0]) + 0.1 * x[0] * x[0]; };
  DESettings s;
  s.seed = 17;
  const auto a = de_minimize(f, {{-5.0, 5.0}}, s);
  s.workers = 4;
  const auto b = de_minimize(f, {{-5.0, 5.0}}, s);
  CHECK(a.trace.best_objective == b.trace.best_objective);
}

TEST_CASE("failing evaluations count as infinite") {
  auto f = [](const std::vector<double>& x) {
    if (x[0] < 0.0) throw RangeError("outside");
    if (x[0] > 3.0) return std::numeric_limits<double>::quiet_NaN();
    return (x[0] - 1.0) * (x[0] - 1.0);
  };
  DESettings s;
  s.seed = 4;
  const auto r = de_minimize(f, {{-5.0, 5.0}}, s);
  CHECK(std::abs(r.best[0] - 1.0) < 1e-4);
  CHECK(r.trace.failed_evaluations > 0);
  CHECK_THROWS_AS(de_minimize([](const std::vector<double>&) { return std::numeric_limits<double>::infinity(); },
                              {{0.0, 1.0}}, s),
                  InfeasibleObjectiveError);
}

TEST_CASE("settings and bounds are validated") {
  DESettings s;
  s.population = 3;
  CHECK_THROWS_AS(s.validate(), DomainError);
  s = DESettings{};
  s.mutation = 0.0;
  CHECK_THROWS_AS(s.validate(), DomainError);
  s = DESettings{};
  s.crossover = 1.5;
  CHECK_THROWS_AS(s.validate(), DomainError);
  auto f = [](const std::vector<double>& x) { return x[0]; };
  CHECK_THROWS_AS(de_minimize(f, {{1.0, 0.0}}, DESettings{}), DomainError);
  CHECK_THROWS_AS(de_minimize(f, {{0.0, std::numeric_limits<double>::infinity()}}, DESettings{}), DomainError);
  CHECK_THROWS_AS(de_minimize(f, {}, DESettings{}), DomainError);
}

TEST_CASE("derived seeds are stable and distinct") {
  CHECK(derive_seed(1, "a") == derive_seed(1, "a"));
  CHECK(derive_seed(1, "a") != derive_seed(1, "b"));
  CHECK(derive_seed(1, "a") != derive_seed(2, "a"));
}

TEST_CASE("collapsed pulse bounds give the phase-corrected identity") {
  const Device d = Device::reference_two_qubit();
  const GateProblem p(d.with_coupler_frequency(0, calibrate_idle(d, 0, from_ghz(7.0), from_ghz(8.5)).omega));
  DESettings s;
  s.population = 4;
  s.max_generations = 2;
  const auto r = optimize_pulse(p, PulseShape::quadratic, 25.0, std::pair{0.0, 0.0}, s);
  CHECK(r.lambda == 0.0);
  // best local Z phases on the identity: |Tr| = 2*sqrt(2); residual idle ZZ shifts it slightly
  const double t = 2.0 * std::numbers::sqrt2;
  CHECK(r.report.error == doctest::Approx(1.0 - (t + t * t) / 20.0).epsilon(1e-3));
}

}
