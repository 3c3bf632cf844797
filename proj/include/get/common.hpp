#pragma once

#include <Eigen/Dense>

#include <array>
#include <cstdint>
#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

namespace get {

template <int D>
using Vec = Eigen::Matrix<double, D, 1>;
template <int D>
using Mat = Eigen::Matrix<double, D, D>;

using Eigen::VectorXd;

/// Number of rotation parameters per field: one angle in 2D, Euler triple in 3D.
template <int D>
inline constexpr int kAnglesPerField = (D == 2) ? 1 : 3;

/// Design-vector block size per field: (mu, sigma, angles).
template <int D>
inline constexpr int kParamsPerField = (D == 2) ? 5 : 9;

/// Nodes per element: Q4 in 2D, Hex8 in 3D.
template <int D>
inline constexpr int kNodesPerElement = (D == 2) ? 4 : 8;

struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Invalid field parameters (non-positive sigma on an active field, ...).
struct InvalidFieldError : Error {
  using Error::Error;
};

/// Mismatched vector/array lengths.
struct ShapeError : Error {
  using Error::Error;
};

/// Problem/config definition inconsistencies.
struct DefinitionError : Error {
  using Error::Error;
};

/// Linear-solver failure; carries an estimate of the null-space dimension.
struct SolverError : Error {
  SolverError(const std::string& what, int null_space_dim_ = 0)
      : Error(what), null_space_dim(null_space_dim_) {}
  int null_space_dim;
};

/// Missing prerequisite state (e.g. sensitivity requested before a solve).
struct StateError : Error {
  using Error::Error;
};

/// Failure inside the optimization loop; carries the iteration index.
struct NumericalError : Error {
  NumericalError(const std::string& what, int iteration_) : Error(what), iteration(iteration_) {}
  int iteration;
};

/// Worker count: min(hardware, GET_THREADS if set). Always >= 1.
int worker_count();

/// Deterministic parallel loop over [begin, end): the index space is split into
/// contiguous chunks, one per worker, so results never depend on thread count.
void parallel_for(std::int64_t begin, std::int64_t end,
                  const std::function<void(std::int64_t, std::int64_t)>& body);

}  // namespace get
