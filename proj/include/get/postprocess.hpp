#pragma once

#include "get/optimizer.hpp"

namespace get {

/// Closed level-set polyline. Traversal keeps solid on the left, so outer
/// boundaries run counterclockwise and holes clockwise.
struct Contour {
  std::vector<Eigen::Vector2d> points;  // first == last
  double level = 0.0;
};

/// All closed level-T curves of a nodal grid field via marching squares with
/// linear edge interpolation. `center_value` resolves saddle cells (pass the
/// true TDF evaluator; defaults to the 4-node average). The grid is padded
/// with a void ring so every curve closes, clipped to the domain boundary.
std::vector<Contour> extract_contours(
    const std::vector<double>& grid, int nodes_x, int nodes_y, const Eigen::Vector2d& origin,
    double spacing, double level,
    const std::function<double(double, double)>& center_value = {});

/// Uniform arc-length resampling (factor x native vertex count) plus signed
/// curvature by central differences; negative at concave transitions.
struct CurvatureProfile {
  std::vector<Eigen::Vector2d> points;
  std::vector<double> curvature;
  double spacing = 0.0;
};
CurvatureProfile contour_curvature(const Contour& contour, int resample_factor = 4);

/// Total signed turning of the closed polyline (+-2pi for simple curves).
double total_turning(const Contour& contour);

/// Densities re-projected with epsilon = 0 and re-analyzed: the strictly
/// black-and-white design and its metrics. Throws if the design is fully void.
template <int D>
struct BinaryExtraction {
  std::vector<double> densities;
  double objective = 0.0;
  double volume_fraction = 0.0;
};
template <int D>
BinaryExtraction<D> binary_extract(const ResolvedProblem<D>& problem,
                                   const Ensemble<D>& ensemble, const ProjectionParams& proj,
                                   FeaSystem<D>& fea);

/// The mesh-independence protocol: project the unchanged ensemble onto a new
/// resolution of the same problem and re-evaluate.
template <int D>
struct ReevaluationResult {
  double objective = 0.0;
  double volume_fraction = 0.0;
  double nondiscreteness = 0.0;
  double binary_objective = 0.0;
  double binary_volume_fraction = 0.0;
};
template <int D>
ReevaluationResult<D> reevaluate_on_mesh(const ProblemDefinition<D>& definition,
                                         const Ensemble<D>& ensemble,
                                         const std::array<int, D>& resolution,
                                         const ProjectionParams& proj,
                                         SolverKind solver = SolverKind::automatic);

}  // namespace get
