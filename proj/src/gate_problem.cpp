#include "czsim/gate_problem.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <sstream>

#include "czsim/error.hpp"

namespace czsim {

namespace {

std::string g_cache_key(const Device& d, int coupler, double lo, double step, std::size_t n) {
  std::ostringstream os;
  os << std::setprecision(17);
  for (const auto& m : d.modes()) os << m.omega << ',' << m.eta << ',' << m.levels << ';';
  for (const auto& c : d.couplings()) os << c.i << '-' << c.j << ':' << c.ratio << ';';
  os << d.active_pair().qubit_a << '|' << coupler << '|' << lo << '|' << step << '|' << n;
  std::ostringstream name;
  name << "gtable_" << std::hex << derive_seed(0, os.str()) << ".txt";
  return name.str();
}

std::optional<GTable> load_cached(const std::filesystem::path& path, double lo, double step, std::size_t n) {
  std::ifstream in(path);
  if (!in) return std::nullopt;
  std::vector<double> values;
  double v;
  while (in >> v) values.push_back(v);
  if (values.size() != n) return std::nullopt;
  return GTable(lo, step, std::move(values));
}

}  // namespace

GateProblem::GateProblem(Device calibrated, GateProblemOptions options)
    : device_(std::move(calibrated)),
      options_(std::move(options)),
      idle_(device_.modes()[Device::coupler_mode(device_.active_pair().coupler)].omega),
      basis_(ComputationalBasis::at_idle(device_)),
      hamiltonian_(device_, device_.active_pair().coupler) {
  const auto& modes = device_.modes();
  double floor = 0.0;
  if (options_.band_floor == BandFloor::highest_qubit) {
    for (int q = 0; q < device_.num_qubits(); ++q) floor = std::max(floor, modes[Device::qubit_mode(q)].omega);
  } else {
    const auto& pair = device_.active_pair();
    floor = std::min(modes[Device::qubit_mode(pair.qubit_a)].omega, modes[Device::qubit_mode(pair.qubit_b)].omega);
  }
  band_ = {std::min(floor + options_.band_below, idle_), idle_ + options_.band_above};
}

const GTable& GateProblem::g_table() const {
  std::call_once(g_cache_->once, [this] {
    if (g_cache_->table) return;
    const double lo = band_.lo - options_.g_margin;
    const double hi = band_.hi + options_.g_margin;
    const auto n = static_cast<std::size_t>(std::ceil((hi - lo) / options_.g_step - 1e-9)) + 1;
    std::filesystem::path cache;
    if (!options_.g_cache_dir.empty()) {
      cache = std::filesystem::path(options_.g_cache_dir) / g_cache_key(device_, coupler(), lo, options_.g_step, n);
      if (auto t = load_cached(cache, lo, options_.g_step, n)) {
        g_cache_->table = std::make_shared<const GTable>(std::move(*t));
        return;
      }
    }
    auto table = GTable::build(device_, coupler(), lo, hi, options_.g_step, options_.workers);
    if (!cache.empty()) {
      std::filesystem::create_directories(cache.parent_path());
      std::ofstream out(cache);
      out << std::setprecision(17);
      for (double v : table.values()) out << v << '\n';
    }
    g_cache_->table = std::make_shared<const GTable>(std::move(table));
  });
  return *g_cache_->table;
}

void GateProblem::set_g_table(GTable table) {
  g_cache_->table = std::make_shared<const GTable>(std::move(table));
}

PulseSchedule GateProblem::schedule(PulseShape shape, double lambda, double gate_time) const {
  const GTable* g = (shape == PulseShape::adiabatic && gate_time > 0.0) ? &g_table() : nullptr;
  return make_schedule(shape, lambda, gate_time, coupler(), idle_, g, options_.hyperbolic_sign);
}

std::pair<double, double> GateProblem::bounds(PulseShape shape, double gate_time) const {
  const GTable* g = (shape == PulseShape::adiabatic) ? &g_table() : nullptr;
  return lambda_bounds(shape, gate_time, idle_, band_, g, options_.hyperbolic_sign);
}

PropagationResult GateProblem::propagate(const PulseSchedule& s) const {
  PropagationOptions po;
  po.rel_tol = options_.rel_tol;
  return propagate_unitary(hamiltonian_, s, basis_.as_columns(), po);
}

FidelityReport GateProblem::evaluate(const PulseSchedule& s) const {
  return cz_fidelity(phase_correct(truncate(propagate(s), basis_)));
}

FidelityReport GateProblem::evaluate(PulseShape shape, double lambda, double gate_time) const {
  return evaluate(schedule(shape, lambda, gate_time));
}

PulseOptimizationResult optimize_pulse(const GateProblem& problem, PulseShape shape, double gate_time,
                                       std::optional<std::pair<double, double>> bounds,
                                       const DESettings& settings) {
  PulseOptimizationResult out;
  out.bounds = bounds.value_or(problem.bounds(shape, gate_time));
  auto objective = [&](const std::vector<double>& x) { return problem.evaluate(shape, x[0], gate_time).error; };
  DEResult de = de_minimize(objective, {out.bounds}, settings);
  out.lambda = de.best[0];
  out.trace = std::move(de.trace);
  out.schedule = problem.schedule(shape, out.lambda, gate_time);
  out.report = problem.evaluate(out.schedule);
  return out;
}

}  // namespace czsim
