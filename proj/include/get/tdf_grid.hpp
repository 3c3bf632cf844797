#pragma once

#include "get/geometry.hpp"
#include "get/mesh.hpp"
#include "get/projection.hpp"

namespace get {

/// TDF sampled at every mesh node. Each active field only touches nodes
/// inside its 6-sigma bounding box; fields accumulate in ensemble order so
/// the result is independent of the worker count.
template <int D>
std::vector<double> nodal_tdf(const Ensemble<D>& ensemble, const StructuredMesh<D>& mesh);

/// Element densities: nodal mean of the regularized Heaviside.
template <int D>
std::vector<double> project_densities(const std::vector<double>& nodal_tdf,
                                      const StructuredMesh<D>& mesh, const ProjectionParams& p);

/// Node-index bounds (inclusive) of a field's 6-sigma box on the grid;
/// empty boxes come back with lo > hi.
template <int D>
struct GridBox {
  std::array<int, D> lo{};
  std::array<int, D> hi{};
};
template <int D>
GridBox<D> field_grid_box(const FieldKernel<D>& kernel, const StructuredMesh<D>& mesh);

}  // namespace get
