#include "get/fea.hpp"

#include <Eigen/SparseCholesky>
#include <Eigen/IterativeLinearSolvers>

#include <algorithm>
#include <cmath>

namespace get {

namespace {

// Isotropic elasticity matrix: 3x3 (plane stress/strain) or 6x6.
Eigen::Matrix3d elasticity_2d(const MaterialModel& m) {
  Eigen::Matrix3d d = Eigen::Matrix3d::Zero();
  const double e = m.youngs, nu = m.poisson;
  if (m.plane_stress) {
    const double c = e / (1.0 - nu * nu);
    d(0, 0) = d(1, 1) = c;
    d(0, 1) = d(1, 0) = c * nu;
    d(2, 2) = c * (1.0 - nu) / 2.0;
  } else {
    const double c = e / ((1.0 + nu) * (1.0 - 2.0 * nu));
    d(0, 0) = d(1, 1) = c * (1.0 - nu);
    d(0, 1) = d(1, 0) = c * nu;
    d(2, 2) = c * (1.0 - 2.0 * nu) / 2.0;
  }
  return d;
}

Eigen::Matrix<double, 6, 6> elasticity_3d(const MaterialModel& m) {
  Eigen::Matrix<double, 6, 6> d = Eigen::Matrix<double, 6, 6>::Zero();
  const double e = m.youngs, nu = m.poisson;
  const double lambda = e * nu / ((1.0 + nu) * (1.0 - 2.0 * nu));
  const double mu = e / (2.0 * (1.0 + nu));
  for (int i = 0; i < 3; ++i) {
    for (int j = 0; j < 3; ++j) d(i, j) = lambda;
    d(i, i) = lambda + 2.0 * mu;
    d(3 + i, 3 + i) = mu;
  }
  return d;
}

// Shape-function derivatives on the reference square/cube, node order
// matching StructuredMesh::element_nodes.
Eigen::Matrix<double, 4, 2> shape_grad_q4(double xi, double eta) {
  Eigen::Matrix<double, 4, 2> g;
  g << -(1 - eta), -(1 - xi),  //
      (1 - eta), -(1 + xi),    //
      (1 + eta), (1 + xi),     //
      -(1 + eta), (1 - xi);
  return 0.25 * g;
}

Eigen::Matrix<double, 8, 3> shape_grad_hex8(double xi, double eta, double zeta) {
  Eigen::Matrix<double, 8, 3> g;
  const double sx[8] = {-1, 1, 1, -1, -1, 1, 1, -1};
  const double sy[8] = {-1, -1, 1, 1, -1, -1, 1, 1};
  const double sz[8] = {-1, -1, -1, -1, 1, 1, 1, 1};
  for (int a = 0; a < 8; ++a) {
    g(a, 0) = 0.125 * sx[a] * (1 + sy[a] * eta) * (1 + sz[a] * zeta);
    g(a, 1) = 0.125 * sy[a] * (1 + sx[a] * xi) * (1 + sz[a] * zeta);
    g(a, 2) = 0.125 * sz[a] * (1 + sx[a] * xi) * (1 + sy[a] * eta);
  }
  return g;
}

Eigen::Matrix<double, 3, 8> b_matrix_2d(const Eigen::Matrix<double, 4, 2>& dn_dx) {
  Eigen::Matrix<double, 3, 8> b = Eigen::Matrix<double, 3, 8>::Zero();
  for (int a = 0; a < 4; ++a) {
    b(0, 2 * a) = dn_dx(a, 0);
    b(1, 2 * a + 1) = dn_dx(a, 1);
    b(2, 2 * a) = dn_dx(a, 1);
    b(2, 2 * a + 1) = dn_dx(a, 0);
  }
  return b;
}

Eigen::Matrix<double, 6, 24> b_matrix_3d(const Eigen::Matrix<double, 8, 3>& dn_dx) {
  Eigen::Matrix<double, 6, 24> b = Eigen::Matrix<double, 6, 24>::Zero();
  for (int a = 0; a < 8; ++a) {
    b(0, 3 * a) = dn_dx(a, 0);
    b(1, 3 * a + 1) = dn_dx(a, 1);
    b(2, 3 * a + 2) = dn_dx(a, 2);
    b(3, 3 * a) = dn_dx(a, 1);
    b(3, 3 * a + 1) = dn_dx(a, 0);
    b(4, 3 * a + 1) = dn_dx(a, 2);
    b(4, 3 * a + 2) = dn_dx(a, 1);
    b(5, 3 * a) = dn_dx(a, 2);
    b(5, 3 * a + 2) = dn_dx(a, 0);
  }
  return b;
}

}  // namespace

template <>
ElementMatrix<2> element_stiffness<2>(double h, const MaterialModel& material) {
  material.validate();
  const Eigen::Matrix3d d = elasticity_2d(material);
  const double gp = 1.0 / std::sqrt(3.0);
  const double det_j = h * h / 4.0;
  ElementMatrix<2> k = ElementMatrix<2>::Zero();
  for (int i = 0; i < 2; ++i) {
    for (int j = 0; j < 2; ++j) {
      const double xi = (i == 0 ? -gp : gp), eta = (j == 0 ? -gp : gp);
      const Eigen::Matrix<double, 4, 2> dn_dx = shape_grad_q4(xi, eta) * (2.0 / h);
      const auto b = b_matrix_2d(dn_dx);
      k += b.transpose() * d * b * det_j;
    }
  }
  return k;
}

template <>
ElementMatrix<3> element_stiffness<3>(double h, const MaterialModel& material) {
  material.validate();
  const Eigen::Matrix<double, 6, 6> d = elasticity_3d(material);
  const double gp = 1.0 / std::sqrt(3.0);
  const double det_j = h * h * h / 8.0;
  ElementMatrix<3> k = ElementMatrix<3>::Zero();
  for (int i = 0; i < 2; ++i) {
    for (int j = 0; j < 2; ++j) {
      for (int l = 0; l < 2; ++l) {
        const double xi = (i == 0 ? -gp : gp);
        const double eta = (j == 0 ? -gp : gp);
        const double zeta = (l == 0 ? -gp : gp);
        const Eigen::Matrix<double, 8, 3> dn_dx = shape_grad_hex8(xi, eta, zeta) * (2.0 / h);
        const auto b = b_matrix_3d(dn_dx);
        k += b.transpose() * d * b * det_j;
      }
    }
  }
  return k;
}

template <int D>
struct FeaSystem<D>::Impl {
  Eigen::SparseMatrix<double> k;  // free x free, lower triangle stored
  Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>, Eigen::Lower> ldlt;
  Eigen::ConjugateGradient<Eigen::SparseMatrix<double>, Eigen::Lower,
                           Eigen::DiagonalPreconditioner<double>>
      cg;
  bool pattern_ready = false;
  bool use_direct = true;
  bool factored = false;
  bool has_prescribed_values = false;
  VectorXd rhs_correction;
  std::vector<double> densities;
};

template <int D>
FeaSystem<D>::FeaSystem(const StructuredMesh<D>& mesh, const MaterialModel& material,
                        std::vector<DirichletBC> dirichlet, std::vector<Spring> springs,
                        SolverKind solver)
    : mesh_(mesh),
      material_(material),
      k0_(element_stiffness<D>(mesh.h, material)),
      dirichlet_(std::move(dirichlet)),
      springs_(std::move(springs)),
      solver_(solver),
      impl_(std::make_unique<Impl>()) {
  const int ndof = mesh_.num_dofs();
  free_of_dof_.assign(ndof, 0);
  for (const auto& bc : dirichlet_) {
    if (bc.dof < 0 || bc.dof >= ndof) throw DefinitionError("Dirichlet dof out of range");
    free_of_dof_[bc.dof] = -1;
    if (bc.value != 0.0) impl_->has_prescribed_values = true;
  }
  for (const auto& sp : springs_) {
    if (sp.dof < 0 || sp.dof >= ndof) throw DefinitionError("spring dof out of range");
    if (sp.stiffness < 0.0) throw DefinitionError("spring stiffness must be non-negative");
    if (free_of_dof_[sp.dof] == -1) throw DefinitionError("spring attached to a fixed dof");
  }
  int next = 0;
  for (int d = 0; d < ndof; ++d) {
    if (free_of_dof_[d] == 0) free_of_dof_[d] = next++;
  }
  constrained_count_ = ndof - next;
  impl_->use_direct =
      solver_ == SolverKind::direct || (solver_ == SolverKind::automatic && D == 2);
}

template <int D>
FeaSystem<D>::~FeaSystem() = default;
template <int D>
FeaSystem<D>::FeaSystem(FeaSystem&&) noexcept = default;

namespace {

// Entry (row, col) in a compressed column-major lower-triangle matrix.
double* slot(Eigen::SparseMatrix<double>& k, int row, int col) {
  const int* outer = k.outerIndexPtr();
  const int* inner = k.innerIndexPtr();
  const int* begin = inner + outer[col];
  const int* end = inner + outer[col + 1];
  const int* it = std::lower_bound(begin, end, row);
  return k.valuePtr() + (it - inner);
}

}  // namespace

template <int D>
void FeaSystem<D>::assemble(const std::vector<double>& densities) {
  constexpr int edofs = D * kNodesPerElement<D>;
  const int nel = mesh_.num_elements();
  if (static_cast<int>(densities.size()) != nel) {
    throw ShapeError("density count does not match element count");
  }
  auto& im = *impl_;
  const int nfree = mesh_.num_dofs() - constrained_count_;

  if (!im.pattern_ready) {
    std::vector<Eigen::Triplet<double>> trips;
    trips.reserve(static_cast<std::size_t>(nel) * edofs * (edofs + 1) / 2);
    for (int e = 0; e < nel; ++e) {
      const auto nodes = mesh_.element_nodes(e);
      int gd[edofs];
      for (int a = 0; a < kNodesPerElement<D>; ++a)
        for (int c = 0; c < D; ++c) gd[D * a + c] = free_of_dof_[D * nodes[a] + c];
      for (int i = 0; i < edofs; ++i) {
        if (gd[i] < 0) continue;
        for (int j = 0; j < edofs; ++j) {
          if (gd[j] < 0 || gd[i] < gd[j]) continue;
          trips.emplace_back(gd[i], gd[j], 0.0);
        }
      }
    }
    im.k.resize(nfree, nfree);
    im.k.setFromTriplets(trips.begin(), trips.end());
    im.k.makeCompressed();
    if (im.use_direct) im.ldlt.analyzePattern(im.k);
    im.pattern_ready = true;
  }

  std::fill(im.k.valuePtr(), im.k.valuePtr() + im.k.nonZeros(), 0.0);
  if (im.has_prescribed_values) im.rhs_correction = VectorXd::Zero(nfree);
  VectorXd prescribed;
  if (im.has_prescribed_values) {
    prescribed = VectorXd::Zero(mesh_.num_dofs());
    for (const auto& bc : dirichlet_) prescribed[bc.dof] = bc.value;
  }
  for (int e = 0; e < nel; ++e) {
    const double rho = densities[e];
    const auto nodes = mesh_.element_nodes(e);
    int gd[edofs];
    int full[edofs];
    for (int a = 0; a < kNodesPerElement<D>; ++a) {
      for (int c = 0; c < D; ++c) {
        full[D * a + c] = D * nodes[a] + c;
        gd[D * a + c] = free_of_dof_[full[D * a + c]];
      }
    }
    for (int i = 0; i < edofs; ++i) {
      if (gd[i] < 0) continue;
      for (int j = 0; j < edofs; ++j) {
        if (gd[j] < 0) {
          if (im.has_prescribed_values) {
            im.rhs_correction[gd[i]] -= rho * k0_(i, j) * prescribed[full[j]];
          }
          continue;
        }
        if (gd[i] < gd[j]) continue;
        *slot(im.k, gd[i], gd[j]) += rho * k0_(i, j);
      }
    }
  }
  for (const auto& sp : springs_) {
    const int fd = free_of_dof_[sp.dof];
    *slot(im.k, fd, fd) += sp.stiffness;
  }

  if (im.use_direct) {
    im.ldlt.factorize(im.k);
    if (im.ldlt.info() != Eigen::Success) {
      throw SolverError("sparse LDLT factorization failed (singular stiffness)", 0);
    }
    const VectorXd& dvec = im.ldlt.vectorD();
    const double dmax = dvec.cwiseAbs().maxCoeff();
    const int bad = static_cast<int>((dvec.array() <= 1e-12 * dmax).count());
    if (bad > 0) {
      throw SolverError("stiffness matrix is singular: " + std::to_string(bad) +
                            " non-positive pivots (null-space dimension " + std::to_string(bad) +
                            "); check supports",
                        bad);
    }
  } else {
    im.cg.setTolerance(1e-11);
    im.cg.setMaxIterations(50000);
    im.cg.compute(im.k);
  }
  im.densities = densities;
  im.factored = true;
}

template <int D>
VectorXd FeaSystem<D>::solve(const VectorXd& force) const {
  auto& im = *impl_;
  if (!im.factored) throw StateError("assemble() must be called before solve()");
  if (force.size() != mesh_.num_dofs()) throw ShapeError("force vector length mismatch");
  const int nfree = mesh_.num_dofs() - constrained_count_;
  VectorXd rhs(nfree);
  for (int d = 0; d < mesh_.num_dofs(); ++d) {
    if (free_of_dof_[d] >= 0) rhs[free_of_dof_[d]] = force[d];
  }
  if (im.has_prescribed_values) rhs += im.rhs_correction;

  VectorXd x;
  if (im.use_direct) {
    x = im.ldlt.solve(rhs);
  } else {
    x = im.cg.solve(rhs);
    if (im.cg.info() != Eigen::Success) {
      throw SolverError("conjugate gradient did not converge (error " +
                            std::to_string(im.cg.error()) + ")",
                        0);
    }
  }
  const double rhs_norm = rhs.norm();
  const double residual =
      (im.k.template selfadjointView<Eigen::Lower>() * x - rhs).norm();
  if (rhs_norm > 0.0 && residual > 1e-9 * rhs_norm) {
    throw SolverError("solve residual " + std::to_string(residual / rhs_norm) +
                          " exceeds 1e-9 contract",
                      0);
  }

  VectorXd u = VectorXd::Zero(mesh_.num_dofs());
  for (const auto& bc : dirichlet_) u[bc.dof] = bc.value;
  for (int d = 0; d < mesh_.num_dofs(); ++d) {
    if (free_of_dof_[d] >= 0) u[d] = x[free_of_dof_[d]];
  }
  return u;
}

template <int D>
VectorXd FeaSystem<D>::apply(const VectorXd& u) const {
  // Full K action via an element loop (constraint-free), so reactions and
  // cross energies come out exact.
  auto& im = *impl_;
  if (!im.factored) throw StateError("assemble() must be called before apply()");
  if (u.size() != mesh_.num_dofs()) throw ShapeError("vector length mismatch");
  constexpr int edofs = D * kNodesPerElement<D>;
  VectorXd y = VectorXd::Zero(mesh_.num_dofs());
  ElementVector<D> ue;
  for (int e = 0; e < mesh_.num_elements(); ++e) {
    const auto nodes = mesh_.element_nodes(e);
    for (int a = 0; a < kNodesPerElement<D>; ++a)
      for (int c = 0; c < D; ++c) ue[D * a + c] = u[D * nodes[a] + c];
    const ElementVector<D> ye = im.densities[e] * (k0_ * ue);
    for (int a = 0; a < kNodesPerElement<D>; ++a)
      for (int c = 0; c < D; ++c) y[D * nodes[a] + c] += ye[D * a + c];
  }
  for (const auto& sp : springs_) y[sp.dof] += sp.stiffness * u[sp.dof];
  (void)edofs;
  return y;
}

template <int D>
std::vector<double> FeaSystem<D>::element_energies(const VectorXd& u1, const VectorXd& u2) const {
  if (u1.size() != mesh_.num_dofs() || u2.size() != mesh_.num_dofs()) {
    throw ShapeError("displacement length mismatch");
  }
  const int nel = mesh_.num_elements();
  std::vector<double> energies(nel, 0.0);
  const auto& k0 = k0_;
  const auto& mesh = mesh_;
  parallel_for(0, nel, [&](std::int64_t lo, std::int64_t hi) {
    ElementVector<D> a, b;
    for (std::int64_t e = lo; e < hi; ++e) {
      const auto nodes = mesh.element_nodes(static_cast<int>(e));
      for (int n = 0; n < kNodesPerElement<D>; ++n) {
        for (int c = 0; c < D; ++c) {
          a[D * n + c] = u1[D * nodes[n] + c];
          b[D * n + c] = u2[D * nodes[n] + c];
        }
      }
      energies[e] = a.dot(k0 * b);
    }
  });
  return energies;
}

double compliance(const VectorXd& u, const VectorXd& f) {
  if (u.size() != f.size()) throw ShapeError("compliance: length mismatch");
  return f.dot(u);
}

template <int D>
MutualPotentialEnergy mutual_potential_energy(const FeaSystem<D>& system, const VectorXd& u1,
                                              const VectorXd& u2, const VectorXd& f2) {
  MutualPotentialEnergy out{};
  out.via_stiffness = u2.dot(system.apply(u1));
  out.via_force = f2.dot(u1);
  return out;
}

template <int D>
std::vector<double> von_mises_field(const VectorXd& u, const std::vector<double>& densities,
                                    const StructuredMesh<D>& mesh, const MaterialModel& material) {
  if (u.size() != mesh.num_dofs()) throw ShapeError("displacement length mismatch");
  if (static_cast<int>(densities.size()) != mesh.num_elements()) {
    throw ShapeError("density count mismatch");
  }
  std::vector<double> vm(mesh.num_elements(), 0.0);
  if constexpr (D == 2) {
    const Eigen::Matrix3d dmat = elasticity_2d(material);
    const auto b = b_matrix_2d(shape_grad_q4(0.0, 0.0) * (2.0 / mesh.h));
    for (int e = 0; e < mesh.num_elements(); ++e) {
      const auto nodes = mesh.element_nodes(e);
      ElementVector<2> ue;
      for (int a = 0; a < 4; ++a)
        for (int c = 0; c < 2; ++c) ue[2 * a + c] = u[2 * nodes[a] + c];
      const Eigen::Vector3d s = dmat * (b * ue);
      vm[e] = densities[e] *
              std::sqrt(s[0] * s[0] - s[0] * s[1] + s[1] * s[1] + 3.0 * s[2] * s[2]);
    }
  } else {
    const Eigen::Matrix<double, 6, 6> dmat = elasticity_3d(material);
    const auto b = b_matrix_3d(shape_grad_hex8(0.0, 0.0, 0.0) * (2.0 / mesh.h));
    for (int e = 0; e < mesh.num_elements(); ++e) {
      const auto nodes = mesh.element_nodes(e);
      ElementVector<3> ue;
      for (int a = 0; a < 8; ++a)
        for (int c = 0; c < 3; ++c) ue[3 * a + c] = u[3 * nodes[a] + c];
      const Eigen::Matrix<double, 6, 1> s = dmat * (b * ue);
      const double dev = 0.5 * ((s[0] - s[1]) * (s[0] - s[1]) + (s[1] - s[2]) * (s[1] - s[2]) +
                                (s[2] - s[0]) * (s[2] - s[0]));
      vm[e] = densities[e] * std::sqrt(dev + 3.0 * (s[3] * s[3] + s[4] * s[4] + s[5] * s[5]));
    }
  }
  return vm;
}

template class FeaSystem<2>;
template class FeaSystem<3>;
template MutualPotentialEnergy mutual_potential_energy<2>(const FeaSystem<2>&, const VectorXd&,
                                                          const VectorXd&, const VectorXd&);
template MutualPotentialEnergy mutual_potential_energy<3>(const FeaSystem<3>&, const VectorXd&,
                                                          const VectorXd&, const VectorXd&);
template std::vector<double> von_mises_field<2>(const VectorXd&, const std::vector<double>&,
                                                const StructuredMesh<2>&, const MaterialModel&);
template std::vector<double> von_mises_field<3>(const VectorXd&, const std::vector<double>&,
                                                const StructuredMesh<3>&, const MaterialModel&);

}  // namespace get
