#pragma once

#include "get/tdf_grid.hpp"

namespace get {

/// Design gradients accumulated over the Heaviside band. Entries of inactive
/// fields are exactly zero; so are blocks of fields whose 6-sigma box misses
/// every band node.
template <int D>
struct SensitivityResult {
  VectorXd objective;  // dC/dD (or dJ/dD)
  VectorXd volume;     // dV/dD
  int band_elements = 0;
};

/// Generic band accumulation sum_e w_e * d(rho_e)/dD with
/// d(rho_e)/dD = (1/NpE) sum_p H'(phi_p) dphi/dD(x_p). Clamped (non-design)
/// elements contribute nothing.
template <int D>
VectorXd band_gradient(const StructuredMesh<D>& mesh, const Ensemble<D>& ensemble,
                       const std::vector<double>& nodal_tdf, const ProjectionParams& proj,
                       const std::vector<double>& element_weight,
                       const std::vector<std::uint8_t>& design_mask);

/// dC/dD = -sum_e (d rho_e/dD) u_e^T k0 u_e. element_energy holds u_e^T k0 u_e.
template <int D>
VectorXd compliance_sensitivity(const StructuredMesh<D>& mesh, const Ensemble<D>& ensemble,
                                const std::vector<double>& nodal_tdf,
                                const ProjectionParams& proj,
                                const std::vector<double>& element_energy,
                                const std::vector<std::uint8_t>& design_mask);

/// dV/dD, weighted by element volume.
template <int D>
VectorXd volume_sensitivity(const StructuredMesh<D>& mesh, const Ensemble<D>& ensemble,
                            const std::vector<double>& nodal_tdf, const ProjectionParams& proj,
                            const std::vector<std::uint8_t>& design_mask);

/// dJ/dD = -sum_e (d rho_e/dD) u1_e^T k0 u2_e (cross energies).
template <int D>
VectorXd mpe_sensitivity(const StructuredMesh<D>& mesh, const Ensemble<D>& ensemble,
                         const std::vector<double>& nodal_tdf, const ProjectionParams& proj,
                         const std::vector<double>& element_cross_energy,
                         const std::vector<std::uint8_t>& design_mask);

/// Elements with any node inside the open Heaviside band.
template <int D>
int band_element_count(const StructuredMesh<D>& mesh, const std::vector<double>& nodal_tdf,
                       const ProjectionParams& proj);

/// Rounds every entry to the given number of significant decimal digits
/// (truncation-error control for symmetry preservation). Zero stays zero.
VectorXd round_sensitivities(const VectorXd& values, int significant_digits = 5);
double round_significant(double value, int significant_digits);

}  // namespace get
