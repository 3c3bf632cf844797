#pragma once

#include "get/common.hpp"

#include <span>

namespace get {

/// Regularized Heaviside parameters: cut-off threshold T, transition band
/// half-width epsilon, and the small floor keeping void elements solvable.
struct ProjectionParams {
  double threshold = 0.5;
  double epsilon = 0.02;
  double alpha_floor = 1e-3;
};

/// H_eps^alpha(phi): 1 above the band, alpha_floor below, cubic blend inside.
/// With epsilon == 0 this is the pure step used for binary extraction
/// (phi == T maps to solid).
double heaviside(double phi, const ProjectionParams& p);

/// dH/dphi: the quadratic bump inside [T-eps, T+eps], zero outside.
/// Throws DefinitionError when epsilon == 0 (optimization must not run there).
double heaviside_derivative(double phi, const ProjectionParams& p);

/// Element density: mean of heaviside over the element's nodal TDF values.
/// Throws ShapeError unless given 4 (Q4) or 8 (Hex8) values.
double element_density(std::span<const double> nodal_tdf, const ProjectionParams& p);

/// Measure of non-discreteness, mean of 4*rho*(1-rho) in percent. Densities
/// below 0.005 count as void so floor-density elements report 0.
double measure_nondiscreteness(std::span<const double> densities);

}  // namespace get
