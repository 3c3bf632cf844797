#pragma once

#include "get/fea.hpp"
#include "get/geometry.hpp"
#include "get/projection.hpp"

#include <optional>
#include <string>

namespace get {

enum class ObjectiveKind { compliance, mutual_potential_energy };

enum class RegionKind { frozen_solid, frozen_void };

/// Density assigned to frozen-void elements.
inline constexpr double kVoidDensity = 1e-3;

template <int D>
struct AxisBox {
  Vec<D> lo = Vec<D>::Zero();
  Vec<D> hi = Vec<D>::Zero();
  bool contains(const Vec<D>& p, double tol = 0.0) const {
    for (int k = 0; k < D; ++k) {
      if (p[k] < lo[k] - tol || p[k] > hi[k] + tol) return false;
    }
    return true;
  }
};

/// A load entity on the domain: a point force, or a line/surface with a
/// distributed intensity per unit length/area. The scale factor accumulates
/// symmetry halvings.
template <int D>
struct LoadSpec {
  AxisBox<D> where;    // degenerate box: point, segment or rectangle
  Vec<D> direction;    // point: total force; line/surface: intensity vector
  double scale = 1.0;  // 1/2 per symmetry plane containing the entity
};

template <int D>
struct SupportSpec {
  AxisBox<D> where;
  std::array<bool, D> fix{};  // which displacement components are prescribed
  std::array<double, D> value{};
};

template <int D>
struct SpringSpec {
  Vec<D> at = Vec<D>::Zero();
  int axis = 0;
  double stiffness = 0.0;
  double scale = 1.0;
};

template <int D>
struct RegionSpec {
  AxisBox<D> box;
  RegionKind kind = RegionKind::frozen_void;
};

/// One rectangular block of layout cells; the X/staggered initial pattern
/// places fields_per_cell rotated Gaussians at each cell center.
template <int D>
struct LayoutBlock {
  AxisBox<D> region;
  std::array<int, D> grid{};
};

template <int D>
struct InitialLayoutSpec {
  std::vector<LayoutBlock<D>> blocks;
  int fields_per_cell = (D == 2) ? 2 : 4;
  double pair_angle = 0.7853981633974483;  // pi/4
  double sigma_major_frac = 0.45;          // fraction of the cell diagonal
  double sigma_minor_frac = 0.12;

  int field_count() const {
    int cells = 0;
    for (const auto& b : blocks) {
      int c = 1;
      for (int k = 0; k < D; ++k) c *= b.grid[k];
      cells += c;
    }
    return cells * fields_per_cell;
  }
};

struct SymmetryPlane {
  int axis = 0;
  double coordinate = 0.0;
};

/// Declarative problem description. `domain`/`mesh_cells` describe the
/// analysis domain; for reduced models this is the half/quarter domain
/// produced by symmetry_reduce from the full definition.
template <int D>
struct ProblemDefinition {
  std::string name;
  AxisBox<D> domain;
  std::array<int, D> mesh_cells{};
  MaterialModel material;
  ObjectiveKind objective = ObjectiveKind::compliance;
  double volume_bound = 0.5;
  std::vector<LoadSpec<D>> loads;
  std::vector<LoadSpec<D>> output_loads;  // MPE pseudo-load case
  std::vector<SupportSpec<D>> supports;
  std::vector<SpringSpec<D>> springs;
  std::vector<RegionSpec<D>> regions;
  std::vector<SymmetryPlane> symmetry;  // declared planes on this domain
  bool reduce_symmetry = false;         // reduce before analysis?
  bool round_sensitivities = false;
  InitialLayoutSpec<D> layout;

  double mesh_edge_length() const {
    return (domain.hi[0] - domain.lo[0]) / mesh_cells[0];
  }
};

/// Everything resolved onto a concrete mesh: lumped force vectors, Dirichlet
/// set, springs, clamped-element classification.
template <int D>
struct ResolvedProblem {
  std::string name;
  StructuredMesh<D> mesh;
  MaterialModel material;
  ObjectiveKind objective = ObjectiveKind::compliance;
  double volume_bound = 0.5;
  VectorXd force;
  VectorXd output_force;  // MPE only (zero-length otherwise)
  std::vector<DirichletBC> dirichlet;
  std::vector<Spring> springs;
  std::vector<std::uint8_t> clamp_kind;  // 0 design, 1 frozen solid, 2 frozen void
  std::vector<SymmetryPlane> symmetry;
  bool round_sensitivities = false;

  std::vector<std::uint8_t> design_mask() const {
    std::vector<std::uint8_t> m(clamp_kind.size());
    for (std::size_t i = 0; i < m.size(); ++i) m[i] = clamp_kind[i] == 0;
    return m;
  }
};

/// Names understood by build_benchmark_2d/3d.
const std::vector<std::string>& benchmark_names();
bool benchmark_is_3d(const std::string& name);

/// Paper benchmark definitions (already symmetry-reduced where the paper
/// analyzes a reduced model). Throws DefinitionError listing valid names.
ProblemDefinition<2> build_benchmark_2d(const std::string& name);
ProblemDefinition<3> build_benchmark_3d(const std::string& name);
template <int D>
ProblemDefinition<D> build_benchmark(const std::string& name);

/// Full-domain definition before any symmetry reduction (layout blocks are
/// expressed on the to-be-reduced region for reduced benchmarks).
ProblemDefinition<2> build_benchmark_full_2d(const std::string& name);
ProblemDefinition<3> build_benchmark_full_3d(const std::string& name);

/// Deterministic initial ensemble from the layout spec: per cell,
/// fields_per_cell Gaussians at the cell center rotated at +-pair_angle,
/// sigma set from the cell diagonal.
template <int D>
Ensemble<D> generate_layout(const InitialLayoutSpec<D>& spec);

/// Clamps frozen-solid elements to 1 and frozen-void to kVoidDensity.
/// Elements are classified by centroid membership; overlapping solid+void
/// regions are a definition error (detected in resolve).
template <int D>
void apply_nondesign(std::vector<double>& densities,
                     const std::vector<std::uint8_t>& clamp_kind);

/// Maps densities on the reduced mesh back onto the full mesh by mirroring.
template <int D>
struct ReconstructionMap {
  StructuredMesh<D> full_mesh;
  std::vector<int> reduced_element_of_full;                            // full elem -> reduced elem
  std::vector<double> reconstruct(const std::vector<double>& reduced) const;
};

/// Halves the domain across each declared symmetry plane (keeping the low
/// side), adds symmetry-face roller constraints, clips loads/supports and
/// halves entities lying on a plane exactly once.
template <int D>
std::pair<ProblemDefinition<D>, ReconstructionMap<D>> symmetry_reduce(
    const ProblemDefinition<D>& full);

/// Lumps loads onto mesh nodes, resolves supports/springs/regions.
/// Mesh resolution can be overridden for the re-evaluation protocol.
template <int D>
ResolvedProblem<D> resolve(const ProblemDefinition<D>& def,
                           std::optional<std::array<int, D>> mesh_override = std::nullopt);

}  // namespace get
