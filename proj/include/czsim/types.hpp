#pragma once

#include <complex>

#include <Eigen/Dense>

namespace czsim {

using Complex = std::complex<double>;

// Row-major so that a row of a multi-column state is contiguous; the sparse
// Hamiltonian kernels sweep rows.
using StateMatrix = Eigen::Matrix<Complex, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

}  // namespace czsim
