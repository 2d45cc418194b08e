#pragma once

#include <filesystem>
#include <string>

#include "czsim/device.hpp"
#include "czsim/units.hpp"

namespace czsim::testing {

// Q - CP - Q with every coupling ratio zero.
inline Device uncoupled_pair(double q0 = 5.0, double q1 = 5.7, double c = 7.86) {
  ChainParameters p;
  p.qubit_freq_ghz = {q0, q1};
  p.qubit_anharm_ghz = {-0.3, -0.3};
  p.coupler_freq_ghz = {c};
  p.coupler_anharm_ghz = {-0.25};
  p.r_nn = 0.0;
  p.r_nnn = 0.0;
  return Device::chain(p);
}

inline std::filesystem::path scratch_dir(const std::string& name) {
  auto dir = std::filesystem::temp_directory_path() / ("czsim_test_" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

inline std::filesystem::path source_dir() { return CZSIM_SOURCE_DIR; }

}  // namespace czsim::testing
