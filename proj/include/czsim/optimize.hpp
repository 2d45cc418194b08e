#pragma once

#include <cstdint>
#include <functional>
#include <string_view>
#include <utility>
#include <vector>

namespace czsim {

struct DESettings {
  int population = 15;
  double mutation = 0.8;   // F
  double crossover = 0.9;  // CR
  int max_generations = 100;
  double tolerance = 1e-10;  // stop when max - min objective of the population is below
  std::uint64_t seed = 0x5eed;
  int workers = 1;  // concurrent objective evaluations within a generation

  void validate() const;
};

struct OptimizationTrace {
  std::vector<std::vector<double>> best_parameters;  // per generation, generation 0 = initial
  std::vector<double> best_objective;
  std::size_t evaluations = 0;
  std::size_t failed_evaluations = 0;  // non-finite or throwing
};

struct DEResult {
  std::vector<double> best;
  double best_value = 0.0;
  OptimizationTrace trace;
};

using Objective = std::function<double(const std::vector<double>&)>;
using Bounds = std::vector<std::pair<double, double>>;

/// DE/rand/1/bin with clip-to-bounds repair and greedy, generation-synchronous
/// selection. Objective failures count as +infinity.
DEResult de_minimize(const Objective& objective, const Bounds& bounds, const DESettings& settings);

/// Stable 64-bit seed for a named sub-problem of a seeded run.
std::uint64_t derive_seed(std::uint64_t base, std::string_view key);

}  // namespace czsim
