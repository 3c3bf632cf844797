#include "get/tdf_grid.hpp"

#include <cmath>

namespace get {

template <int D>
GridBox<D> field_grid_box(const FieldKernel<D>& kernel, const StructuredMesh<D>& mesh) {
  GridBox<D> box;
  const auto nd = mesh.node_dims();
  for (int k = 0; k < D; ++k) {
    const double lo = kernel.mu[k] - kernel.box_halfwidth[k];
    const double hi = kernel.mu[k] + kernel.box_halfwidth[k];
    box.lo[k] = std::max(0, static_cast<int>(std::ceil((lo - mesh.origin[k]) / mesh.h)));
    box.hi[k] = std::min(nd[k] - 1, static_cast<int>(std::floor((hi - mesh.origin[k]) / mesh.h)));
  }
  return box;
}

template <int D>
std::vector<double> nodal_tdf(const Ensemble<D>& ensemble, const StructuredMesh<D>& mesh) {
  std::vector<double> tdf(mesh.num_nodes(), 0.0);
  const auto nd = mesh.node_dims();
  for (const auto& field : ensemble) {
    if (!field.active) continue;
    const FieldKernel<D> kernel(field);
    const GridBox<D> box = field_grid_box(kernel, mesh);
    bool empty = false;
    for (int k = 0; k < D; ++k) empty |= box.lo[k] > box.hi[k];
    if (empty) continue;
    if constexpr (D == 2) {
      parallel_for(box.lo[1], box.hi[1] + 1, [&](std::int64_t jlo, std::int64_t jhi) {
        for (std::int64_t j = jlo; j < jhi; ++j) {
          Vec<2> x;
          x[1] = mesh.origin[1] + mesh.h * static_cast<double>(j);
          const std::int64_t base = j * nd[0];
          for (int i = box.lo[0]; i <= box.hi[0]; ++i) {
            x[0] = mesh.origin[0] + mesh.h * i;
            tdf[base + i] += kernel.eval(x);
          }
        }
      });
    } else {
      const std::int64_t rows =
          static_cast<std::int64_t>(box.hi[2] - box.lo[2] + 1) * (box.hi[1] - box.lo[1] + 1);
      const int jspan = box.hi[1] - box.lo[1] + 1;
      parallel_for(0, rows, [&](std::int64_t rlo, std::int64_t rhi) {
        for (std::int64_t r = rlo; r < rhi; ++r) {
          const int k = box.lo[2] + static_cast<int>(r / jspan);
          const int j = box.lo[1] + static_cast<int>(r % jspan);
          Vec<3> x;
          x[2] = mesh.origin[2] + mesh.h * k;
          x[1] = mesh.origin[1] + mesh.h * j;
          const std::int64_t base = (static_cast<std::int64_t>(k) * nd[1] + j) * nd[0];
          for (int i = box.lo[0]; i <= box.hi[0]; ++i) {
            x[0] = mesh.origin[0] + mesh.h * i;
            tdf[base + i] += kernel.eval(x);
          }
        }
      });
    }
  }
  return tdf;
}

template <int D>
std::vector<double> project_densities(const std::vector<double>& nodal_tdf,
                                      const StructuredMesh<D>& mesh, const ProjectionParams& p) {
  if (static_cast<int>(nodal_tdf.size()) != mesh.num_nodes()) {
    throw ShapeError("nodal TDF length does not match mesh");
  }
  std::vector<double> rho(mesh.num_elements());
  parallel_for(0, mesh.num_elements(), [&](std::int64_t lo, std::int64_t hi) {
    for (std::int64_t e = lo; e < hi; ++e) {
      const auto nodes = mesh.element_nodes(static_cast<int>(e));
      double sum = 0.0;
      for (int n : nodes) sum += heaviside(nodal_tdf[n], p);
      rho[e] = sum / kNodesPerElement<D>;
    }
  });
  return rho;
}

template GridBox<2> field_grid_box<2>(const FieldKernel<2>&, const StructuredMesh<2>&);
template GridBox<3> field_grid_box<3>(const FieldKernel<3>&, const StructuredMesh<3>&);
template std::vector<double> nodal_tdf<2>(const Ensemble<2>&, const StructuredMesh<2>&);
template std::vector<double> nodal_tdf<3>(const Ensemble<3>&, const StructuredMesh<3>&);
template std::vector<double> project_densities<2>(const std::vector<double>&,
                                                  const StructuredMesh<2>&,
                                                  const ProjectionParams&);
template std::vector<double> project_densities<3>(const std::vector<double>&,
                                                  const StructuredMesh<3>&,
                                                  const ProjectionParams&);

}  // namespace get
