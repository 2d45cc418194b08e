#include "czsim/pulse.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "czsim/error.hpp"
#include "czsim/integrator.hpp"

namespace czsim {

namespace {

void check_time(double gate_time, double t) {
  if (!(gate_time >= 0.0)) throw DomainError("gate time must be non-negative");
  if (!(t >= 0.0 && t <= gate_time)) {
    std::ostringstream os;
    os << "pulse sampled at t = " << t << " ns outside [0, " << gate_time << "]";
    throw DomainError(os.str());
  }
}

}  // namespace

std::string_view to_string(PulseShape shape) {
  switch (shape) {
    case PulseShape::fourier: return "fourier";
    case PulseShape::quadratic: return "quadratic";
    case PulseShape::hyperbolic: return "hyperbolic";
    case PulseShape::adiabatic: return "adiabatic";
  }
  return "unknown";
}

PulseShape parse_pulse_shape(std::string_view name) {
  for (PulseShape s : kAllShapes) {
    if (to_string(s) == name) return s;
  }
  throw ConfigError("unknown pulse shape '" + std::string(name) + "'");
}

double sample_fourier(double lambda, double gate_time, double idle, double t) {
  check_time(gate_time, t);
  if (gate_time == 0.0) return idle;
  return idle + lambda * (gate_time / kTwoPi) * (1.0 - std::cos(kTwoPi * t / gate_time));
}

double sample_quadratic(double lambda, double gate_time, double idle, double t) {
  check_time(gate_time, t);
  return idle + lambda * t * (t - gate_time);
}

double sample_hyperbolic(double lambda, double gate_time, double idle, double sign, double t) {
  check_time(gate_time, t);
  return idle + sign * (std::cosh(lambda * gate_time / 2.0) - std::cosh(lambda * (t - gate_time / 2.0)));
}

SampledTrajectory::SampledTrajectory(std::vector<double> times, std::vector<double> omegas,
                                     std::vector<double> slopes)
    : times_(std::move(times)), omegas_(std::move(omegas)), slopes_(std::move(slopes)) {
  if (times_.size() < 2 || omegas_.size() != times_.size() || slopes_.size() != times_.size()) {
    throw DomainError("trajectory needs matching time/value/slope arrays with two or more nodes");
  }
  for (std::size_t k = 1; k < times_.size(); ++k) {
    if (!(times_[k] > times_[k - 1])) throw DomainError("trajectory time grid must be strictly increasing");
  }
}

double SampledTrajectory::operator()(double t) const {
  if (t < times_.front() || t > times_.back()) {
    throw DomainError("trajectory sampled outside its time grid");
  }
  auto it = std::upper_bound(times_.begin(), times_.end(), t);
  std::size_t k = (it == times_.begin()) ? 0 : static_cast<std::size_t>(it - times_.begin()) - 1;
  if (k + 1 >= times_.size()) return omegas_.back();
  const double h = times_[k + 1] - times_[k];
  const double s = (t - times_[k]) / h;
  if (s == 0.0) return omegas_[k];
  const double s2 = s * s;
  const double s3 = s2 * s;
  const double h00 = 2.0 * s3 - 3.0 * s2 + 1.0;
  const double h10 = s3 - 2.0 * s2 + s;
  const double h01 = -2.0 * s3 + 3.0 * s2;
  const double h11 = s3 - s2;
  return h00 * omegas_[k] + h10 * h * slopes_[k] + h01 * omegas_[k + 1] + h11 * h * slopes_[k + 1];
}

SampledTrajectory build_adiabatic(double lambda, double gate_time, double idle, const GTable& g,
                                  double rel_tol) {
  if (!(gate_time > 0.0)) throw DomainError("adiabatic pulse needs a positive gate time");
  if (!g.contains(idle)) throw RangeError("idle frequency outside the G table");
  using Scalar = Eigen::Matrix<double, 1, 1>;
  auto slope = [&](double t, double w) {
    const double gv = g(w);
    if (!(gv > 0.0)) throw RangeError("G table is not strictly positive on the trajectory");
    return lambda * std::sin(kTwoPi * t / gate_time) / gv;
  };
  std::vector<double> times{0.0};
  std::vector<double> omegas{idle};
  std::vector<double> slopes{0.0};
  if (lambda != 0.0) {
    IntegratorOptions opts;
    opts.rel_tol = rel_tol;
    opts.abs_tol = rel_tol;
    opts.max_step = gate_time / 400.0;
    const double scale = std::abs(idle);
    auto rhs = [&](double t, const Scalar& y, Scalar& dy) { dy(0) = slope(t, y(0)); };
    auto norm = [&](const Scalar& e, const Scalar&, const Scalar&) {
      return std::abs(e(0)) / (rel_tol * scale);
    };
    auto observe = [&](double t, const Scalar& y) {
      times.push_back(t);
      omegas.push_back(y(0));
      slopes.push_back(slope(t, y(0)));
    };
    Scalar y0;
    y0(0) = idle;
    integrate_dop853(rhs, 0.0, gate_time, y0, opts, norm, observe);
  } else {
    times.push_back(gate_time);
    omegas.push_back(idle);
    slopes.push_back(0.0);
  }
  return SampledTrajectory(std::move(times), std::move(omegas), std::move(slopes));
}

double PulseSchedule::omega(double t) const {
  t = std::clamp(t, 0.0, gate_time);
  switch (shape) {
    case PulseShape::fourier: return sample_fourier(lambda, gate_time, idle, t);
    case PulseShape::quadratic: return sample_quadratic(lambda, gate_time, idle, t);
    case PulseShape::hyperbolic: return sample_hyperbolic(lambda, gate_time, idle, direction_sign, t);
    case PulseShape::adiabatic:
      if (!trajectory) throw DomainError("adiabatic schedule without a trajectory");
      return (*trajectory)(t);
  }
  return idle;
}

PulseSchedule make_schedule(PulseShape shape, double lambda, double gate_time, int coupler, double idle,
                            const GTable* g, double direction_sign) {
  if (!(gate_time >= 0.0)) throw DomainError("gate time must be non-negative");
  PulseSchedule s{shape, lambda, gate_time, coupler, idle, direction_sign, nullptr};
  if (shape == PulseShape::adiabatic && gate_time > 0.0) {
    if (!g) throw DomainError("adiabatic pulse requires a G table");
    s.trajectory = std::make_shared<const SampledTrajectory>(build_adiabatic(lambda, gate_time, idle, *g));
  } else if (shape == PulseShape::adiabatic) {
    s.trajectory = std::make_shared<const SampledTrajectory>(
        std::vector<double>{0.0, 1.0}, std::vector<double>{idle, idle}, std::vector<double>{0.0, 0.0});
  }
  return s;
}

FrequencyBand default_band(const Device& device, int coupler) {
  double qmax = 0.0;
  for (int q = 0; q < device.num_qubits(); ++q) qmax = std::max(qmax, device.modes()[Device::qubit_mode(q)].omega);
  const double idle = device.modes().at(Device::coupler_mode(coupler)).omega;
  return {qmax + from_ghz(0.2), idle + from_ghz(1.0)};
}

std::pair<double, double> lambda_bounds(PulseShape shape, double gate_time, double idle,
                                        const FrequencyBand& band, const GTable* g, double direction_sign) {
  if (!(gate_time > 0.0)) throw DomainError("gate time must be positive");
  if (!(band.lo <= idle && idle <= band.hi)) throw DomainError("idle frequency outside the pulse band");
  const double down = band.lo - idle;  // <= 0
  const double up = band.hi - idle;    // >= 0
  const double pi = kTwoPi / 2.0;
  switch (shape) {
    case PulseShape::fourier:
      // peak at T/2: idle + lambda T / pi
      return {down * pi / gate_time, up * pi / gate_time};
    case PulseShape::quadratic:
      // vertex: idle - lambda T^2 / 4
      return {-4.0 * up / (gate_time * gate_time), -4.0 * down / (gate_time * gate_time)};
    case PulseShape::hyperbolic: {
      const double reach = direction_sign > 0 ? up : -down;
      return {0.0, 2.0 / gate_time * std::acosh(1.0 + reach)};
    }
    case PulseShape::adiabatic: {
      if (!g) throw DomainError("adiabatic bounds require a G table");
      // Separable: integral_idle^peak G = lambda T / pi.
      const double lo_band = std::max(band.lo, g->lo());
      const double hi_band = std::min(band.hi, g->hi());
      return {g->integral(idle, lo_band) * pi / gate_time, g->integral(idle, hi_band) * pi / gate_time};
    }
  }
  return {0.0, 0.0};
}

std::vector<std::pair<double, double>> sample_schedule(const PulseSchedule& s, int points) {
  if (points < 2) throw DomainError("need at least two samples");
  std::vector<std::pair<double, double>> out;
  out.reserve(static_cast<std::size_t>(points));
  for (int k = 0; k < points; ++k) {
    const double t = (k == points - 1) ? s.gate_time : s.gate_time * k / (points - 1);
    out.emplace_back(t, s.omega(t));
  }
  return out;
}

}  // namespace czsim
