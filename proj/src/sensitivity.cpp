#include "get/sensitivity.hpp"

#include <cmath>

namespace get {

template <int D>
VectorXd band_gradient(const StructuredMesh<D>& mesh, const Ensemble<D>& ensemble,
                       const std::vector<double>& nodal_tdf, const ProjectionParams& proj,
                       const std::vector<double>& element_weight,
                       const std::vector<std::uint8_t>& design_mask) {
  constexpr int P = kParamsPerField<D>;
  if (static_cast<int>(nodal_tdf.size()) != mesh.num_nodes()) {
    throw ShapeError("nodal TDF length does not match mesh");
  }
  if (static_cast<int>(element_weight.size()) != mesh.num_elements()) {
    throw ShapeError("element weight length does not match mesh");
  }
  VectorXd grad = VectorXd::Zero(P * static_cast<Eigen::Index>(ensemble.size()));

  // Nodal weight: H'(phi_p)/NpE times the summed weight of adjacent design
  // elements. Zero outside the band, which is where almost all nodes live.
  std::vector<double> node_w(mesh.num_nodes(), 0.0);
  std::vector<std::int64_t> band_nodes;
  const double t_lo = proj.threshold - proj.epsilon;
  const double t_hi = proj.threshold + proj.epsilon;
  for (int n = 0; n < mesh.num_nodes(); ++n) {
    const double phi = nodal_tdf[n];
    if (phi < t_lo || phi > t_hi) continue;
    const double hp = heaviside_derivative(phi, proj);
    if (hp == 0.0) continue;
    const auto idx = mesh.node_index(n);
    double wsum = 0.0;
    // adjacent elements: offsets -1/0 per axis, clamped to the grid
    if constexpr (D == 2) {
      for (int dj = -1; dj <= 0; ++dj) {
        for (int di = -1; di <= 0; ++di) {
          const int ei = idx[0] + di, ej = idx[1] + dj;
          if (ei < 0 || ej < 0 || ei >= mesh.cells[0] || ej >= mesh.cells[1]) continue;
          const int e = mesh.element_id({ei, ej});
          if (design_mask.empty() || design_mask[e]) wsum += element_weight[e];
        }
      }
    } else {
      for (int dk = -1; dk <= 0; ++dk) {
        for (int dj = -1; dj <= 0; ++dj) {
          for (int di = -1; di <= 0; ++di) {
            const int ei = idx[0] + di, ej = idx[1] + dj, ek = idx[2] + dk;
            if (ei < 0 || ej < 0 || ek < 0 || ei >= mesh.cells[0] || ej >= mesh.cells[1] ||
                ek >= mesh.cells[2])
              continue;
            const int e = mesh.element_id({ei, ej, ek});
            if (design_mask.empty() || design_mask[e]) wsum += element_weight[e];
          }
        }
      }
    }
    if (wsum == 0.0) continue;
    node_w[n] = hp / kNodesPerElement<D> * wsum;
    band_nodes.push_back(n);
  }
  if (band_nodes.empty()) return grad;

  std::vector<Vec<D>> band_pos(band_nodes.size());
  for (std::size_t i = 0; i < band_nodes.size(); ++i) {
    band_pos[i] = mesh.node_pos(static_cast<int>(band_nodes[i]));
  }

  // Blocks of different fields are independent; parallelize across fields
  // with a deterministic node order inside each block.
  parallel_for(0, static_cast<std::int64_t>(ensemble.size()),
               [&](std::int64_t flo, std::int64_t fhi) {
                 for (std::int64_t fi = flo; fi < fhi; ++fi) {
                   const auto& field = ensemble[fi];
                   if (!field.active) continue;
                   const GradKernel<D> gk(field);
                   const FieldKernel<D> fk(field);
                   Vec<P> block = Vec<P>::Zero();
                   for (std::size_t bi = 0; bi < band_nodes.size(); ++bi) {
                     const Vec<D>& x = band_pos[bi];
                     bool inside = true;
                     for (int k = 0; k < D; ++k) {
                       inside &= std::abs(x[k] - fk.mu[k]) <= fk.box_halfwidth[k];
                     }
                     if (!inside) continue;
                     block += node_w[band_nodes[bi]] * gk.grad(x);
                   }
                   grad.segment<P>(P * fi) = block;
                 }
               });
  return grad;
}

template <int D>
VectorXd compliance_sensitivity(const StructuredMesh<D>& mesh, const Ensemble<D>& ensemble,
                                const std::vector<double>& nodal_tdf,
                                const ProjectionParams& proj,
                                const std::vector<double>& element_energy,
                                const std::vector<std::uint8_t>& design_mask) {
  return -band_gradient(mesh, ensemble, nodal_tdf, proj, element_energy, design_mask);
}

template <int D>
VectorXd volume_sensitivity(const StructuredMesh<D>& mesh, const Ensemble<D>& ensemble,
                            const std::vector<double>& nodal_tdf, const ProjectionParams& proj,
                            const std::vector<std::uint8_t>& design_mask) {
  const std::vector<double> volumes(mesh.num_elements(), mesh.element_volume());
  return band_gradient(mesh, ensemble, nodal_tdf, proj, volumes, design_mask);
}

template <int D>
VectorXd mpe_sensitivity(const StructuredMesh<D>& mesh, const Ensemble<D>& ensemble,
                         const std::vector<double>& nodal_tdf, const ProjectionParams& proj,
                         const std::vector<double>& element_cross_energy,
                         const std::vector<std::uint8_t>& design_mask) {
  return -band_gradient(mesh, ensemble, nodal_tdf, proj, element_cross_energy, design_mask);
}

template <int D>
int band_element_count(const StructuredMesh<D>& mesh, const std::vector<double>& nodal_tdf,
                       const ProjectionParams& proj) {
  const double t_lo = proj.threshold - proj.epsilon;
  const double t_hi = proj.threshold + proj.epsilon;
  int count = 0;
  for (int e = 0; e < mesh.num_elements(); ++e) {
    for (int n : mesh.element_nodes(e)) {
      if (nodal_tdf[n] >= t_lo && nodal_tdf[n] <= t_hi) {
        ++count;
        break;
      }
    }
  }
  return count;
}

double round_significant(double value, int significant_digits) {
  if (value == 0.0 || !std::isfinite(value)) return value;
  const double magnitude = std::floor(std::log10(std::abs(value)));
  const double scale = std::pow(10.0, significant_digits - 1 - magnitude);
  return std::round(value * scale) / scale;
}

VectorXd round_sensitivities(const VectorXd& values, int significant_digits) {
  VectorXd out(values.size());
  for (Eigen::Index i = 0; i < values.size(); ++i) {
    out[i] = round_significant(values[i], significant_digits);
  }
  return out;
}

template VectorXd band_gradient<2>(const StructuredMesh<2>&, const Ensemble<2>&,
                                   const std::vector<double>&, const ProjectionParams&,
                                   const std::vector<double>&,
                                   const std::vector<std::uint8_t>&);
template VectorXd band_gradient<3>(const StructuredMesh<3>&, const Ensemble<3>&,
                                   const std::vector<double>&, const ProjectionParams&,
                                   const std::vector<double>&,
                                   const std::vector<std::uint8_t>&);
template VectorXd compliance_sensitivity<2>(const StructuredMesh<2>&, const Ensemble<2>&,
                                            const std::vector<double>&, const ProjectionParams&,
                                            const std::vector<double>&,
                                            const std::vector<std::uint8_t>&);
template VectorXd compliance_sensitivity<3>(const StructuredMesh<3>&, const Ensemble<3>&,
                                            const std::vector<double>&, const ProjectionParams&,
                                            const std::vector<double>&,
                                            const std::vector<std::uint8_t>&);
template VectorXd volume_sensitivity<2>(const StructuredMesh<2>&, const Ensemble<2>&,
                                        const std::vector<double>&, const ProjectionParams&,
                                        const std::vector<std::uint8_t>&);
template VectorXd volume_sensitivity<3>(const StructuredMesh<3>&, const Ensemble<3>&,
                                        const std::vector<double>&, const ProjectionParams&,
                                        const std::vector<std::uint8_t>&);
template VectorXd mpe_sensitivity<2>(const StructuredMesh<2>&, const Ensemble<2>&,
                                     const std::vector<double>&, const ProjectionParams&,
                                     const std::vector<double>&,
                                     const std::vector<std::uint8_t>&);
template VectorXd mpe_sensitivity<3>(const StructuredMesh<3>&, const Ensemble<3>&,
                                     const std::vector<double>&, const ProjectionParams&,
                                     const std::vector<double>&,
                                     const std::vector<std::uint8_t>&);
template int band_element_count<2>(const StructuredMesh<2>&, const std::vector<double>&,
                                   const ProjectionParams&);
template int band_element_count<3>(const StructuredMesh<3>&, const std::vector<double>&,
                                   const ProjectionParams&);

}  // namespace get
