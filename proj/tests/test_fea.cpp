#include "get/fea.hpp"

#include <doctest.h>

#include <Eigen/Dense>

#include <random>

using namespace get;

namespace {

// Independent oracle: Q4 plane-stress stiffness by brute-force 4x4 Gauss
// quadrature with its own shape-function code.
Eigen::MatrixXd q4_stiffness_oracle(double h, double e, double nu) {
  const double pts[4] = {-0.8611363115940526, -0.3399810435848563, 0.3399810435848563,
                         0.8611363115940526};
  const double wts[4] = {0.3478548451374538, 0.6521451548625461, 0.6521451548625461,
                         0.3478548451374538};
  Eigen::Matrix3d d;
  d << 1, nu, 0, nu, 1, 0, 0, 0, (1 - nu) / 2;
  d *= e / (1 - nu * nu);
  Eigen::MatrixXd k = Eigen::MatrixXd::Zero(8, 8);
  // nodes (0,0), (h,0), (h,h), (0,h); N_a = product of 1D hat functions
  const double xs[4] = {0, h, h, 0};
  const double ys[4] = {0, 0, h, h};
  for (int gi = 0; gi < 4; ++gi) {
    for (int gj = 0; gj < 4; ++gj) {
      const double x = h * (pts[gi] + 1) / 2;
      const double y = h * (pts[gj] + 1) / 2;
      Eigen::MatrixXd b = Eigen::MatrixXd::Zero(3, 8);
      for (int a = 0; a < 4; ++a) {
        // bilinear shape function on the physical square
        const double nx = xs[a] == 0 ? (h - x) / h : x / h;
        const double ny = ys[a] == 0 ? (h - y) / h : y / h;
        const double dnx = (xs[a] == 0 ? -1.0 : 1.0) / h;
        const double dny = (ys[a] == 0 ? -1.0 : 1.0) / h;
        const double dn_dx = dnx * ny;
        const double dn_dy = nx * dny;
        b(0, 2 * a) = dn_dx;
        b(1, 2 * a + 1) = dn_dy;
        b(2, 2 * a) = dn_dy;
        b(2, 2 * a + 1) = dn_dx;
      }
      const double jac = (h / 2) * (h / 2);
      k += wts[gi] * wts[gj] * jac * b.transpose() * d * b;
    }
  }
  return k;
}

template <int D>
std::vector<DirichletBC> fix_all(const StructuredMesh<D>& mesh,
                                 const std::function<bool(const Vec<D>&)>& pred) {
  std::vector<DirichletBC> bcs;
  for (int n = 0; n < mesh.num_nodes(); ++n) {
    if (pred(mesh.node_pos(n))) {
      for (int c = 0; c < D; ++c) bcs.push_back({D * n + c, 0.0});
    }
  }
  return bcs;
}

}  // namespace

TEST_CASE("Q4 element stiffness: symmetry, rigid modes, oracle") {
  MaterialModel mat;
  const auto k0 = element_stiffness<2>(0.01, mat);

  CHECK((k0 - k0.transpose()).cwiseAbs().maxCoeff() < 1e-12);
  CHECK(k0(0, 0) == doctest::Approx(0.4945054945054945).epsilon(1e-10));

  // rigid translations and rotation are zero-energy
  ElementVector<2> tx, ty, rot;
  const double xs[4] = {0, 1, 1, 0}, ys[4] = {0, 0, 1, 1};
  for (int a = 0; a < 4; ++a) {
    tx[2 * a] = 1;
    tx[2 * a + 1] = 0;
    ty[2 * a] = 0;
    ty[2 * a + 1] = 1;
    rot[2 * a] = -ys[a];
    rot[2 * a + 1] = xs[a];
  }
  CHECK((k0 * tx).cwiseAbs().maxCoeff() < 1e-10);
  CHECK((k0 * ty).cwiseAbs().maxCoeff() < 1e-10);
  CHECK((k0 * rot).cwiseAbs().maxCoeff() < 1e-10);

  // exactly 3 zero eigenvalues
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig{Eigen::MatrixXd(k0)};
  int zeros = 0;
  for (int i = 0; i < 8; ++i) {
    if (std::abs(eig.eigenvalues()[i]) < 1e-10) ++zeros;
  }
  CHECK(zeros == 3);

  // independent 4x4-Gauss quadrature oracle (2x2 is exact for bilinear Q4)
  const auto oracle = q4_stiffness_oracle(1.0, 1.0, 0.3);
  const auto k1 = element_stiffness<2>(1.0, mat);
  CHECK((Eigen::MatrixXd(k1) - oracle).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("Hex8 element stiffness: symmetry and rigid modes") {
  MaterialModel mat;
  const auto k0 = element_stiffness<3>(0.8, mat);
  CHECK((k0 - k0.transpose()).cwiseAbs().maxCoeff() < 1e-12);

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig{Eigen::MatrixXd(k0)};
  int zeros = 0;
  const double scale = eig.eigenvalues().cwiseAbs().maxCoeff();
  for (int i = 0; i < 24; ++i) {
    if (std::abs(eig.eigenvalues()[i]) < 1e-10 * scale) ++zeros;
  }
  CHECK(zeros == 6);
}

TEST_CASE("assemble_and_solve on a one-element cantilever matches a dense solve") {
  StructuredMesh<2> mesh({1, 1}, 1.0);
  MaterialModel mat;
  auto bcs = fix_all<2>(mesh, [](const Vec<2>& p) { return p[0] == 0.0; });
  FeaSystem<2> sys(mesh, mat, bcs, {});
  std::vector<double> rho = {1.0};
  sys.assemble(rho);

  VectorXd f = VectorXd::Zero(mesh.num_dofs());
  const int tip = mesh.node_id({1, 0});
  f[2 * tip] = 1.0;  // axial load at a free corner
  const VectorXd u = sys.solve(f);

  // dense oracle on the same 8-dof system
  const auto k0 = element_stiffness<2>(1.0, mat);
  const auto nodes = mesh.element_nodes(0);
  std::vector<int> free_local;
  for (int a = 0; a < 4; ++a) {
    if (mesh.node_pos(nodes[a])[0] > 0.0) {
      free_local.push_back(2 * a);
      free_local.push_back(2 * a + 1);
    }
  }
  Eigen::MatrixXd kff(free_local.size(), free_local.size());
  Eigen::VectorXd ff(free_local.size());
  for (std::size_t i = 0; i < free_local.size(); ++i) {
    ff[i] = f[2 * nodes[free_local[i] / 2] + free_local[i] % 2];
    for (std::size_t j = 0; j < free_local.size(); ++j) {
      kff(i, j) = k0(free_local[i], free_local[j]);
    }
  }
  const Eigen::VectorXd uf = kff.fullPivLu().solve(ff);
  for (std::size_t i = 0; i < free_local.size(); ++i) {
    const int dof = 2 * nodes[free_local[i] / 2] + free_local[i] % 2;
    CHECK(u[dof] == doctest::Approx(uf[i]).epsilon(1e-10));
  }

  // zero load -> zero displacement
  const VectorXd u0 = sys.solve(VectorXd::Zero(mesh.num_dofs()));
  CHECK(u0.cwiseAbs().maxCoeff() == 0.0);

  // doubling densities halves u exactly (homogeneity)
  std::vector<double> rho2 = {2.0};
  sys.assemble(rho2);
  const VectorXd uh = sys.solve(f);
  CHECK((2.0 * uh - u).cwiseAbs().maxCoeff() < 1e-12 * u.cwiseAbs().maxCoeff());
}

TEST_CASE("work identity and compliance") {
  StructuredMesh<2> mesh({6, 4}, 0.25);
  MaterialModel mat;
  auto bcs = fix_all<2>(mesh, [](const Vec<2>& p) { return p[0] == 0.0; });
  FeaSystem<2> sys(mesh, mat, bcs, {});
  std::mt19937 rng(19);
  std::uniform_real_distribution<double> dens(0.001, 1.0);
  std::vector<double> rho(mesh.num_elements());
  for (auto& r : rho) r = dens(rng);
  sys.assemble(rho);

  VectorXd f = VectorXd::Zero(mesh.num_dofs());
  std::uniform_real_distribution<double> load(-1.0, 1.0);
  for (int n = 0; n < mesh.num_nodes(); ++n) {
    if (mesh.node_pos(n)[0] > 0.0) {
      f[2 * n] = load(rng);
      f[2 * n + 1] = load(rng);
    }
  }
  const VectorXd u = sys.solve(f);
  const double c = compliance(u, f);
  CHECK(c > 0.0);
  const double energy = u.dot(sys.apply(u));
  CHECK(std::abs(c - energy) < 1e-8 * std::abs(c));

  CHECK(compliance(VectorXd::Zero(4), VectorXd::Zero(4)) == 0.0);
}

TEST_CASE("compliance decreases when a density increases") {
  StructuredMesh<2> mesh({5, 3}, 0.2);
  MaterialModel mat;
  auto bcs = fix_all<2>(mesh, [](const Vec<2>& p) { return p[0] == 0.0; });
  VectorXd f = VectorXd::Zero(mesh.num_dofs());
  f[2 * mesh.node_id({5, 3}) + 1] = -1.0;

  std::mt19937 rng(31);
  std::uniform_real_distribution<double> dens(0.05, 0.95);
  std::uniform_int_distribution<int> pick(0, mesh.num_elements() - 1);
  FeaSystem<2> sys(mesh, mat, bcs, {});
  for (int trial = 0; trial < 10; ++trial) {
    std::vector<double> rho(mesh.num_elements());
    for (auto& r : rho) r = dens(rng);
    sys.assemble(rho);
    const double c0 = compliance(sys.solve(f), f);
    auto rho_up = rho;
    rho_up[pick(rng)] += 0.05;
    sys.assemble(rho_up);
    const double c1 = compliance(sys.solve(f), f);
    CHECK(c1 <= c0 + 1e-12 * std::abs(c0));
  }
}

TEST_CASE("solution is invariant under node-numbering permutation (dense oracle)") {
  StructuredMesh<2> mesh({3, 2}, 0.5);
  MaterialModel mat;
  auto bcs = fix_all<2>(mesh, [](const Vec<2>& p) { return p[0] == 0.0; });
  FeaSystem<2> sys(mesh, mat, bcs, {});
  std::vector<double> rho(mesh.num_elements(), 0.7);
  sys.assemble(rho);
  VectorXd f = VectorXd::Zero(mesh.num_dofs());
  f[2 * mesh.node_id({3, 2}) + 1] = -1.0;
  const VectorXd u = sys.solve(f);

  // dense assembly under a reversed dof numbering
  const int n = mesh.num_dofs();
  const auto k0 = element_stiffness<2>(0.5, mat);
  Eigen::MatrixXd k = Eigen::MatrixXd::Zero(n, n);
  for (int e = 0; e < mesh.num_elements(); ++e) {
    const auto nodes = mesh.element_nodes(e);
    for (int a = 0; a < 4; ++a) {
      for (int i = 0; i < 2; ++i) {
        for (int b = 0; b < 4; ++b) {
          for (int j = 0; j < 2; ++j) {
            k(n - 1 - (2 * nodes[a] + i), n - 1 - (2 * nodes[b] + j)) +=
                rho[e] * k0(2 * a + i, 2 * b + j);
          }
        }
      }
    }
  }
  std::vector<int> free;
  std::vector<bool> fixed(n, false);
  for (const auto& bc : bcs) fixed[bc.dof] = true;
  for (int d = 0; d < n; ++d) {
    if (!fixed[n - 1 - d]) free.push_back(d);  // permuted index
  }
  Eigen::MatrixXd kff(free.size(), free.size());
  Eigen::VectorXd ff(free.size());
  for (std::size_t i = 0; i < free.size(); ++i) {
    ff[i] = f[n - 1 - free[i]];
    for (std::size_t j = 0; j < free.size(); ++j) kff(i, j) = k(free[i], free[j]);
  }
  const Eigen::VectorXd uf = kff.ldlt().solve(ff);
  for (std::size_t i = 0; i < free.size(); ++i) {
    CHECK(u[n - 1 - free[i]] == doctest::Approx(uf[i]).epsilon(1e-9));
  }
}

TEST_CASE("insufficient constraints raise a solver error naming the null space") {
  StructuredMesh<2> mesh({2, 2}, 0.5);
  MaterialModel mat;
  FeaSystem<2> sys(mesh, mat, {}, {});
  std::vector<double> rho(mesh.num_elements(), 1.0);
  try {
    sys.assemble(rho);
    FAIL("expected SolverError");
  } catch (const SolverError& err) {
    CHECK(err.null_space_dim >= 3);
    CHECK(std::string(err.what()).find("null-space") != std::string::npos);
  }
}

TEST_CASE("patch test: affine Dirichlet boundary reproduces constant strain") {
  StructuredMesh<2> mesh({4, 4}, 0.25);
  MaterialModel mat;
  const double exx = 0.01, eyy = -0.004, gxy = 0.006;
  std::vector<DirichletBC> bcs;
  for (int n = 0; n < mesh.num_nodes(); ++n) {
    const Vec<2> p = mesh.node_pos(n);
    const bool boundary = p[0] == 0.0 || p[1] == 0.0 || p[0] == 1.0 || p[1] == 1.0;
    if (boundary) {
      bcs.push_back({2 * n, exx * p[0] + 0.5 * gxy * p[1]});
      bcs.push_back({2 * n + 1, eyy * p[1] + 0.5 * gxy * p[0]});
    }
  }
  FeaSystem<2> sys(mesh, mat, bcs, {});
  std::vector<double> rho(mesh.num_elements(), 1.0);
  sys.assemble(rho);
  const VectorXd u = sys.solve(VectorXd::Zero(mesh.num_dofs()));
  for (int n = 0; n < mesh.num_nodes(); ++n) {
    const Vec<2> p = mesh.node_pos(n);
    CHECK(u[2 * n] == doctest::Approx(exx * p[0] + 0.5 * gxy * p[1]).epsilon(1e-8));
    CHECK(u[2 * n + 1] == doctest::Approx(eyy * p[1] + 0.5 * gxy * p[0]).epsilon(1e-8));
  }
}

TEST_CASE("mutual potential energy identities") {
  StructuredMesh<2> mesh({8, 4}, 0.25);
  MaterialModel mat;
  auto bcs = fix_all<2>(mesh, [](const Vec<2>& p) { return p[0] == 0.0; });
  std::vector<Spring> springs = {{2 * mesh.node_id({8, 2}), 0.1}};
  FeaSystem<2> sys(mesh, mat, bcs, springs);
  std::mt19937 rng(41);
  std::uniform_real_distribution<double> dens(0.001, 1.0);
  std::vector<double> rho(mesh.num_elements());
  for (auto& r : rho) r = dens(rng);
  sys.assemble(rho);

  VectorXd f1 = VectorXd::Zero(mesh.num_dofs());
  VectorXd f2 = VectorXd::Zero(mesh.num_dofs());
  f1[2 * mesh.node_id({8, 4}) + 1] = 1.0;
  f2[2 * mesh.node_id({8, 2})] = -1.0;
  const VectorXd u1 = sys.solve(f1);
  const VectorXd u2 = sys.solve(f2);

  const auto mpe = mutual_potential_energy(sys, u1, u2, f2);
  const double denom = std::max(std::abs(mpe.via_force), 1e-12);
  CHECK(std::abs(mpe.via_force - mpe.via_stiffness) / denom < 1e-8);

  // self-adjoint reduction: u1 = u2, f1 = f2 gives the compliance
  const auto self = mutual_potential_energy(sys, u1, u1, f1);
  CHECK(self.via_force == doctest::Approx(compliance(u1, f1)).epsilon(1e-12));

  // zero pseudo-load -> J = 0
  const VectorXd zero = VectorXd::Zero(mesh.num_dofs());
  const auto null = mutual_potential_energy(sys, u1, zero, zero);
  CHECK(null.via_force == 0.0);
  CHECK(std::abs(null.via_stiffness) == 0.0);
}

TEST_CASE("von Mises field: zeros, rigid motion, uniaxial patch") {
  StructuredMesh<2> mesh({3, 3}, 1.0 / 3);
  MaterialModel mat;
  std::vector<double> rho(mesh.num_elements(), 1.0);

  const VectorXd zero = VectorXd::Zero(mesh.num_dofs());
  for (double v : von_mises_field(zero, rho, mesh, mat)) CHECK(v == 0.0);

  VectorXd rigid(mesh.num_dofs());
  for (int n = 0; n < mesh.num_nodes(); ++n) {
    const Vec<2> p = mesh.node_pos(n);
    rigid[2 * n] = 0.3 - 0.2 * p[1];
    rigid[2 * n + 1] = -0.1 + 0.2 * p[0];
  }
  for (double v : von_mises_field(rigid, rho, mesh, mat)) CHECK(std::abs(v) < 1e-10);

  // uniform uniaxial strain
  const double strain = 0.02;
  VectorXd u(mesh.num_dofs());
  for (int n = 0; n < mesh.num_nodes(); ++n) {
    u[2 * n] = strain * mesh.node_pos(n)[0];
    u[2 * n + 1] = 0.0;
  }
  const double nu = mat.poisson;
  const double expected = mat.youngs * strain / (1 - nu * nu) * std::sqrt(1 - nu + nu * nu);
  for (double v : von_mises_field(u, rho, mesh, mat)) {
    CHECK(v == doctest::Approx(expected).epsilon(1e-10));
  }
}

TEST_CASE("3D solve with the conjugate-gradient path matches the direct path") {
  StructuredMesh<3> mesh({4, 2, 2}, 0.5);
  MaterialModel mat;
  auto bcs = fix_all<3>(mesh, [](const Vec<3>& p) { return p[0] == 0.0; });
  VectorXd f = VectorXd::Zero(mesh.num_dofs());
  f[3 * mesh.node_id({4, 1, 2}) + 2] = -1.0;
  std::vector<double> rho(mesh.num_elements(), 0.5);

  FeaSystem<3> direct(mesh, mat, bcs, {}, SolverKind::direct);
  direct.assemble(rho);
  const VectorXd u_direct = direct.solve(f);

  FeaSystem<3> cg(mesh, mat, bcs, {}, SolverKind::conjugate_gradient);
  cg.assemble(rho);
  const VectorXd u_cg = cg.solve(f);

  CHECK((u_direct - u_cg).cwiseAbs().maxCoeff() < 1e-7 * u_direct.cwiseAbs().maxCoeff());
}
