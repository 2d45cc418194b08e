#include "czsim/optimize.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <limits>
#include <random>
#include <string>
#include <string_view>
#include <thread>

#include "czsim/error.hpp"

namespace czsim {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

double safe_eval(const Objective& f, const std::vector<double>& x, std::atomic<std::size_t>& failed) {
  try {
    const double v = f(x);
    if (std::isfinite(v)) return v;
  } catch (const std::exception&) {
  }
  failed.fetch_add(1, std::memory_order_relaxed);
  return kInf;
}

void evaluate_all(const Objective& f, const std::vector<std::vector<double>>& xs, std::vector<double>& out,
                  int workers, std::atomic<std::size_t>& failed) {
  out.assign(xs.size(), kInf);
  const auto n = xs.size();
  const auto w = static_cast<std::size_t>(std::clamp(workers, 1, static_cast<int>(std::max<std::size_t>(n, 1))));
  if (w == 1) {
    for (std::size_t i = 0; i < n; ++i) out[i] = safe_eval(f, xs[i], failed);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::jthread> pool;
  for (std::size_t k = 0; k < w; ++k) {
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < n; i = next++) out[i] = safe_eval(f, xs[i], failed);
    });
  }
}

}  // namespace

void DESettings::validate() const {
  if (population < 4) throw DomainError("DE population must be at least 4");
  if (!(mutation > 0.0 && mutation <= 2.0)) throw DomainError("DE mutation factor must lie in (0, 2]");
  if (!(crossover >= 0.0 && crossover <= 1.0)) throw DomainError("DE crossover rate must lie in [0, 1]");
  if (max_generations < 0) throw DomainError("DE generation cap must be non-negative");
}

std::uint64_t derive_seed(std::uint64_t base, std::string_view key) {
  std::uint64_t h = 1469598103934665603ULL;  // FNV-1a
  for (unsigned char c : key) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  std::uint64_t z = base ^ h;  // splitmix64 finaliser
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

DEResult de_minimize(const Objective& objective, const Bounds& bounds, const DESettings& settings) {
  settings.validate();
  if (bounds.empty()) throw DomainError("DE needs at least one parameter");
  for (const auto& [lo, hi] : bounds) {
    if (!std::isfinite(lo) || !std::isfinite(hi) || lo > hi) throw DomainError("DE bounds must be finite and ordered");
  }
  const std::size_t dim = bounds.size();
  const auto np = static_cast<std::size_t>(settings.population);
  std::mt19937_64 rng(settings.seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::uniform_int_distribution<std::size_t> pick(0, np - 1);
  std::uniform_int_distribution<std::size_t> pick_dim(0, dim - 1);
  std::atomic<std::size_t> failed{0};

  std::vector<std::vector<double>> pop(np, std::vector<double>(dim));
  for (auto& x : pop) {
    for (std::size_t d = 0; d < dim; ++d) x[d] = bounds[d].first + unit(rng) * (bounds[d].second - bounds[d].first);
  }
  std::vector<double> fit;
  evaluate_all(objective, pop, fit, settings.workers, failed);

  DEResult result;
  result.trace.evaluations = np;
  if (std::none_of(fit.begin(), fit.end(), [](double v) { return std::isfinite(v); })) {
    throw InfeasibleObjectiveError("every initial DE evaluation was non-finite");
  }
  auto record = [&] {
    const auto best = static_cast<std::size_t>(std::min_element(fit.begin(), fit.end()) - fit.begin());
    result.trace.best_parameters.push_back(pop[best]);
    result.trace.best_objective.push_back(fit[best]);
  };
  record();

  std::vector<std::vector<double>> trials(np, std::vector<double>(dim));
  std::vector<double> trial_fit;
  for (int gen = 0; gen < settings.max_generations; ++gen) {
    const auto [mn, mx] = std::minmax_element(fit.begin(), fit.end());
    if (*mx - *mn < settings.tolerance) break;

    for (std::size_t i = 0; i < np; ++i) {
      std::size_t r1, r2, r3;
      do r1 = pick(rng); while (r1 == i);
      do r2 = pick(rng); while (r2 == i || r2 == r1);
      do r3 = pick(rng); while (r3 == i || r3 == r1 || r3 == r2);
      const std::size_t forced = pick_dim(rng);
      for (std::size_t d = 0; d < dim; ++d) {
        const bool take = (d == forced) || unit(rng) < settings.crossover;
        double v = take ? pop[r1][d] + settings.mutation * (pop[r2][d] - pop[r3][d]) : pop[i][d];
        trials[i][d] = std::clamp(v, bounds[d].first, bounds[d].second);
      }
    }
    evaluate_all(objective, trials, trial_fit, settings.workers, failed);
    result.trace.evaluations += np;
    for (std::size_t i = 0; i < np; ++i) {
      if (trial_fit[i] <= fit[i]) {
        pop[i] = trials[i];
        fit[i] = trial_fit[i];
      }
    }
    record();
  }
  const auto best = static_cast<std::size_t>(std::min_element(fit.begin(), fit.end()) - fit.begin());
  result.best = pop[best];
  result.best_value = fit[best];
  result.trace.failed_evaluations = failed.load();
  return result;
}

}  // namespace czsim
