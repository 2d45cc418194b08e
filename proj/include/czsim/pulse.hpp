#pragma once

#include <memory>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "czsim/spectrum.hpp"

namespace czsim {

enum class PulseShape { fourier, quadratic, hyperbolic, adiabatic };

std::string_view to_string(PulseShape shape);
PulseShape parse_pulse_shape(std::string_view name);
inline constexpr PulseShape kAllShapes[] = {PulseShape::fourier, PulseShape::quadratic,
                                           PulseShape::hyperbolic, PulseShape::adiabatic};

// Closed-form coupler trajectories. All take and return rad/ns, times in ns,
// and throw DomainError for t outside [0, gate_time].
double sample_fourier(double lambda, double gate_time, double idle, double t);
double sample_quadratic(double lambda, double gate_time, double idle, double t);
double sample_hyperbolic(double lambda, double gate_time, double idle, double sign, double t);

/// Dense trajectory with cubic Hermite interpolation between nodes.
class SampledTrajectory {
 public:
  SampledTrajectory(std::vector<double> times, std::vector<double> omegas, std::vector<double> slopes);

  double operator()(double t) const;
  const std::vector<double>& times() const { return times_; }
  const std::vector<double>& omegas() const { return omegas_; }
  const std::vector<double>& slopes() const { return slopes_; }
  double duration() const { return times_.back() - times_.front(); }

 private:
  std::vector<double> times_;
  std::vector<double> omegas_;
  std::vector<double> slopes_;
};

/// Integrates d omega/dt = lambda sin(2 pi t / T) / G(omega) from idle.
/// Throws RangeError if the trajectory leaves the G table.
SampledTrajectory build_adiabatic(double lambda, double gate_time, double idle, const GTable& g,
                                  double rel_tol = 1e-12);

struct PulseSchedule {
  PulseShape shape = PulseShape::fourier;
  double lambda = 0.0;
  double gate_time = 0.0;
  int coupler = 0;
  double idle = 0.0;
  double direction_sign = 1.0;  // hyperbolic only
  std::shared_ptr<const SampledTrajectory> trajectory;  // adiabatic only

  /// Coupler frequency at t (clamped into [0, gate_time] to absorb rounding
  /// of the final integrator stage).
  double omega(double t) const;
};

/// Builds a schedule; the adiabatic shape needs the G table.
PulseSchedule make_schedule(PulseShape shape, double lambda, double gate_time, int coupler, double idle,
                            const GTable* g = nullptr, double direction_sign = 1.0);

/// Coupler band a pulse may explore: [max(qubit) + 0.2 GHz, idle + 1 GHz].
struct FrequencyBand {
  double lo = 0.0;
  double hi = 0.0;
};
FrequencyBand default_band(const Device& device, int coupler);

/// Parameter range keeping the trajectory's extremum inside the band.
std::pair<double, double> lambda_bounds(PulseShape shape, double gate_time, double idle,
                                        const FrequencyBand& band, const GTable* g = nullptr,
                                        double direction_sign = 1.0);

/// (t, omega) samples on a uniform grid, `points` >= 2.
std::vector<std::pair<double, double>> sample_schedule(const PulseSchedule& s, int points);

}  // namespace czsim
