#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <sstream>
#include <vector>

#include "czsim/detail/dop853_tableau.hpp"
#include "czsim/error.hpp"

namespace czsim {

struct IntegratorOptions {
  double rel_tol = 1e-10;
  double abs_tol = -1.0;  // negative: same as rel_tol
  double initial_step = 0.0;  // 0: automatic
  double max_step = std::numeric_limits<double>::infinity();
  std::size_t max_steps = 50'000'000;
};

struct IntegratorStats {
  std::size_t steps = 0;
  std::size_t rejected = 0;
  std::size_t rhs_evaluations = 0;
};

/// Adaptive Dormand-Prince 8(5,3) with PI step-size control.
///
/// `State` is any Eigen dense type. `rhs(t, y, dy)` writes dy/dt. The error
/// functor `norm(err, y_old, y_new)` returns the error measured in units of
/// the tolerance (accept when <= 1). `observe(t, y)` is called after every
/// accepted step. Integration in either time direction; the last step lands
/// exactly on t1.
template <class State, class Rhs, class Norm, class Observe>
State integrate_dop853(Rhs&& rhs, double t0, double t1, State y, const IntegratorOptions& opts,
                       Norm&& norm, Observe&& observe, IntegratorStats* stats_out = nullptr) {
  namespace tab = detail::dop853;
  constexpr int S = tab::kStages;
  IntegratorStats stats;
  if (t1 == t0) {
    if (stats_out) *stats_out = stats;
    return y;
  }
  const double dir = (t1 > t0) ? 1.0 : -1.0;
  const double span = std::abs(t1 - t0);

  std::vector<State> k(S + 1, State(y));
  State y_stage = y;
  State y_new = y;
  State err5 = y;
  State err3 = y;

  double t = t0;
  rhs(t, y, k[0]);
  ++stats.rhs_evaluations;

  double h_abs = opts.initial_step > 0.0 ? opts.initial_step : 0.0;
  if (h_abs == 0.0) {
    // Hairer's starting-step heuristic on the unit-tolerance scale.
    const double d0 = norm(y, y, y);
    const double d1 = norm(k[0], y, y);
    double h0 = (d0 < 1e-5 || d1 < 1e-5) ? 1e-6 * span : 0.01 * d0 / d1;
    h0 = std::min(h0, span);
    y_stage = y + (dir * h0) * k[0];
    rhs(t + dir * h0, y_stage, k[1]);
    ++stats.rhs_evaluations;
    const double d2 = norm(State(k[1] - k[0]), y, y) / h0;
    const double big = std::max(d1, d2);
    const double h1 = big <= 1e-15 ? std::max(1e-6, h0 * 1e-3) : std::pow(0.01 / big, 1.0 / 8.0);
    h_abs = std::min({100.0 * h0, h1, span});
  }
  h_abs = std::min(h_abs, opts.max_step);

  constexpr double kSafety = 0.9;
  constexpr double kMinFactor = 0.2;
  constexpr double kMaxFactor = 10.0;
  constexpr double kBeta = 0.04;
  constexpr double kExpo = 1.0 / 8.0 - kBeta * 0.2;
  double err_old = 1e-4;

  while (dir * (t1 - t) > 0.0) {
    if (stats.steps + stats.rejected >= opts.max_steps) {
      std::ostringstream os;
      os << "integrator exceeded " << opts.max_steps << " steps at t = " << t;
      throw PropagationError(os.str());
    }
    const double min_step = 16.0 * std::numeric_limits<double>::epsilon() * std::max(std::abs(t), span);
    if (h_abs < min_step) {
      std::ostringstream os;
      os << "step-size underflow (stiff dynamics) at t = " << t << " ns, h = " << h_abs;
      throw PropagationError(os.str());
    }
    bool last = false;
    if (h_abs >= std::abs(t1 - t)) {
      h_abs = std::abs(t1 - t);
      last = true;
    }
    const double h = dir * h_abs;

    for (int s = 1; s < S; ++s) {
      y_stage = y;
      for (int j = 0; j < s; ++j) {
        const double a = tab::kA[s][j];
        if (a != 0.0) y_stage += (h * a) * k[j];
      }
      rhs(t + tab::kC[s] * h, y_stage, k[s]);
    }
    stats.rhs_evaluations += S - 1;
    y_new = y;
    for (int j = 0; j < S; ++j) {
      const double b = tab::kA[S][j];
      if (b != 0.0) y_new += (h * b) * k[j];
    }
    err5.setZero();
    err3.setZero();
    for (int j = 0; j < S; ++j) {
      if (tab::kE5[j] != 0.0) err5 += tab::kE5[j] * k[j];
      if (tab::kE3[j] != 0.0) err3 += tab::kE3[j] * k[j];
    }
    const double e5 = norm(err5, y, y_new);
    const double e3 = norm(err3, y, y_new);
    double err = 0.0;
    if (e5 > 0.0 || e3 > 0.0) err = h_abs * e5 * e5 / std::sqrt(e5 * e5 + 0.01 * e3 * e3);
    if (!std::isfinite(err)) err = std::numeric_limits<double>::infinity();

    if (err <= 1.0) {
      const double t_new = last ? t1 : t + h;
      rhs(t_new, y_new, k[S]);
      ++stats.rhs_evaluations;
      std::swap(k[0], k[S]);
      std::swap(y, y_new);
      t = t_new;
      ++stats.steps;
      observe(t, y);
      double factor;
      if (err == 0.0) {
        factor = kMaxFactor;
      } else {
        factor = kSafety * std::pow(err, -kExpo) * std::pow(err_old, kBeta);
        factor = std::clamp(factor, kMinFactor, kMaxFactor);
      }
      err_old = std::max(err, 1e-4);
      h_abs = std::min(h_abs * factor, opts.max_step);
    } else {
      ++stats.rejected;
      const double factor = std::isfinite(err) ? std::max(kMinFactor, kSafety * std::pow(err, -kExpo)) : kMinFactor;
      h_abs *= factor;
    }
  }
  if (stats_out) *stats_out = stats;
  return y;
}

template <class State, class Rhs, class Norm>
State integrate_dop853(Rhs&& rhs, double t0, double t1, State y, const IntegratorOptions& opts,
                       Norm&& norm, IntegratorStats* stats_out = nullptr) {
  return integrate_dop853(std::forward<Rhs>(rhs), t0, t1, std::move(y), opts, std::forward<Norm>(norm),
                          [](double, const State&) {}, stats_out);
}

}  // namespace czsim
