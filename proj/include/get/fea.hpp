#pragma once

#include "get/mesh.hpp"

#include <Eigen/Sparse>

#include <memory>

namespace get {

struct MaterialModel {
  double youngs = 1.0;
  double poisson = 0.3;
  bool plane_stress = true;  // 2D only

  void validate() const {
    if (!(youngs > 0.0)) throw DefinitionError("Young's modulus must be positive");
    if (!(poisson >= 0.0 && poisson < 0.5)) throw DefinitionError("Poisson ratio out of range");
  }
};

template <int D>
using ElementMatrix = Eigen::Matrix<double, D * kNodesPerElement<D>, D * kNodesPerElement<D>>;
template <int D>
using ElementVector = Eigen::Matrix<double, D * kNodesPerElement<D>, 1>;

/// Reference element stiffness (2x2 Gauss per axis): Q4 plane stress/strain
/// or Hex8. Computed once per mesh; K = sum_e rho_e k0.
template <int D>
ElementMatrix<D> element_stiffness(double h, const MaterialModel& material);

struct DirichletBC {
  int dof = 0;
  double value = 0.0;
};

struct Spring {
  int dof = 0;
  double stiffness = 0.0;
};

enum class SolverKind {
  automatic,           // direct for 2D, conjugate gradient for 3D
  direct,              // sparse simplicial LDLT
  conjugate_gradient,  // diagonally preconditioned CG, tol 1e-10
};

/// Structured-grid linear elasticity bound to a fixed mesh, Dirichlet set and
/// springs. The sparsity pattern and constraint maps are built once; each
/// iteration only refills values from the element densities and refactors.
template <int D>
class FeaSystem {
 public:
  FeaSystem(const StructuredMesh<D>& mesh, const MaterialModel& material,
            std::vector<DirichletBC> dirichlet, std::vector<Spring> springs,
            SolverKind solver = SolverKind::automatic);
  ~FeaSystem();
  FeaSystem(FeaSystem&&) noexcept;

  const StructuredMesh<D>& mesh() const { return mesh_; }
  const ElementMatrix<D>& k0() const { return k0_; }

  /// Rebuilds K = sum_e rho_e k0 + springs and factors it.
  /// Throws SolverError naming the null-space dimension if singular.
  void assemble(const std::vector<double>& densities);

  /// Solves K u = f for the assembled densities; returns the full-length
  /// displacement (prescribed values on constrained dofs). Verifies the
  /// 1e-9 relative residual contract on free dofs.
  VectorXd solve(const VectorXd& force) const;

  /// K times a full-length vector (constrained rows included), for work
  /// identities and mutual-potential-energy cross checks.
  VectorXd apply(const VectorXd& u) const;

  int free_dof_count() const { return static_cast<int>(free_of_dof_.size()) - constrained_count_; }

  /// Per-element strain energies u1_e^T k0 u2_e (density-independent factor
  /// reused across all sensitivity blocks).
  std::vector<double> element_energies(const VectorXd& u1, const VectorXd& u2) const;

 private:
  struct Impl;
  StructuredMesh<D> mesh_;
  MaterialModel material_;
  ElementMatrix<D> k0_;
  std::vector<DirichletBC> dirichlet_;
  std::vector<Spring> springs_;
  SolverKind solver_;
  std::vector<int> free_of_dof_;  // dof -> free index, -1 if constrained
  int constrained_count_ = 0;
  std::unique_ptr<Impl> impl_;
};

/// Compliance C = f . u over all dofs.
double compliance(const VectorXd& u, const VectorXd& f);

/// Mutual potential energy J = u2^T K u1, returned together with the
/// algebraically identical f2 . u1; the two must agree to 1e-8 relative.
struct MutualPotentialEnergy {
  double via_stiffness;
  double via_force;
};
template <int D>
MutualPotentialEnergy mutual_potential_energy(const FeaSystem<D>& system, const VectorXd& u1,
                                              const VectorXd& u2, const VectorXd& f2);

/// Von Mises stress at element centroids, scaled by element density
/// (post-processing export only).
template <int D>
std::vector<double> von_mises_field(const VectorXd& u, const std::vector<double>& densities,
                                    const StructuredMesh<D>& mesh, const MaterialModel& material);

}  // namespace get
