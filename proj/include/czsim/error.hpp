#pragma once

#include <stdexcept>
#include <string>

namespace czsim {

/// Base class for every failure raised by the library. `code()` is a short
/// machine-readable tag used by the CLI error line.
class Error : public std::runtime_error {
 public:
  Error(std::string code, const std::string& what)
      : std::runtime_error(what), code_(std::move(code)) {}
  const std::string& code() const noexcept { return code_; }

 private:
  std::string code_;
};

struct DomainError : Error {
  explicit DomainError(const std::string& w) : Error("domain", w) {}
};
struct ConfigError : Error {
  explicit ConfigError(const std::string& w) : Error("config", w) {}
};
struct EigenError : Error {
  explicit EigenError(const std::string& w) : Error("eigensolver", w) {}
};
struct LabelingError : Error {
  explicit LabelingError(const std::string& w) : Error("ambiguous_labeling", w) {}
};
struct CalibrationError : Error {
  explicit CalibrationError(const std::string& w) : Error("calibration", w) {}
};
struct DegeneracyError : Error {
  explicit DegeneracyError(const std::string& w) : Error("near_degeneracy", w) {}
};
struct RangeError : Error {
  explicit RangeError(const std::string& w) : Error("range", w) {}
};
struct PropagationError : Error {
  explicit PropagationError(const std::string& w) : Error("propagation", w) {}
};
struct DimensionError : Error {
  explicit DimensionError(const std::string& w) : Error("dimension_cap", w) {}
};
struct DegenerateGateError : Error {
  explicit DegenerateGateError(const std::string& w) : Error("degenerate_gate", w) {}
};
struct ResonanceCrossingError : Error {
  explicit ResonanceCrossingError(const std::string& w) : Error("resonance_crossing", w) {}
};
struct InfeasibleObjectiveError : Error {
  explicit InfeasibleObjectiveError(const std::string& w) : Error("infeasible_objective", w) {}
};

}  // namespace czsim
