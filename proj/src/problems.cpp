#include "get/problems.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <sstream>

namespace get {

namespace {

template <int D>
int coordinate_to_index(double coord, double origin, double h, int max_index,
                        const std::string& what) {
  const double raw = (coord - origin) / h;
  const double snapped = std::round(raw);
  if (std::abs(raw - snapped) > 1e-6 || snapped < 0 || snapped > max_index) {
    throw DefinitionError(what + " at coordinate " + std::to_string(coord) +
                          " does not land on a mesh line");
  }
  return static_cast<int>(snapped);
}

template <int D>
void lump_load(const LoadSpec<D>& load, const StructuredMesh<D>& mesh, VectorXd& force) {
  std::array<int, D> lo{}, hi{};
  int spanned = 0;
  for (int k = 0; k < D; ++k) {
    lo[k] = coordinate_to_index<D>(load.where.lo[k], mesh.origin[k], mesh.h, mesh.cells[k],
                                   "load corner");
    hi[k] = coordinate_to_index<D>(load.where.hi[k], mesh.origin[k], mesh.h, mesh.cells[k],
                                   "load corner");
    if (hi[k] < lo[k]) throw DefinitionError("load box has negative extent");
    if (hi[k] > lo[k]) ++spanned;
  }
  if (spanned > D - 1) throw DefinitionError("volume loads are not supported");

  std::array<int, D> idx = lo;
  while (true) {
    // consistent uniform lumping: half shares at segment/patch ends
    double w = load.scale;
    for (int k = 0; k < D; ++k) {
      if (hi[k] == lo[k]) continue;
      w *= mesh.h;
      if (idx[k] == lo[k] || idx[k] == hi[k]) w *= 0.5;
    }
    const int node = mesh.node_id(idx);
    for (int c = 0; c < D; ++c) force[D * node + c] += w * load.direction[c];

    int k = 0;
    while (k < D && ++idx[k] > hi[k]) {
      idx[k] = lo[k];
      ++k;
    }
    if (k == D) break;
  }
}

template <int D>
bool on_plane(const AxisBox<D>& box, const SymmetryPlane& plane) {
  return box.lo[plane.axis] == box.hi[plane.axis] &&
         std::abs(box.lo[plane.axis] - plane.coordinate) < 1e-12;
}

template <int D>
InitialLayoutSpec<D> single_block_layout(const AxisBox<D>& region,
                                         const std::array<int, D>& grid) {
  InitialLayoutSpec<D> spec;
  spec.blocks.push_back({region, grid});
  return spec;
}

template <int D>
AxisBox<D> box_of(const Vec<D>& lo, const Vec<D>& hi) {
  return AxisBox<D>{lo, hi};
}

ProblemDefinition<2> cantilever2d() {
  ProblemDefinition<2> p;
  p.name = "cantilever2d";
  p.domain = box_of<2>({0, 0}, {2, 1});
  p.mesh_cells = {200, 100};
  p.volume_bound = 0.4;
  p.supports.push_back({box_of<2>({0, 0}, {0, 1}), {true, true}, {0, 0}});
  p.loads.push_back({box_of<2>({2, 0.5}, {2, 0.5}), Vec<2>(0, -1)});
  p.layout = single_block_layout<2>(p.domain, {4, 4});
  return p;
}

ProblemDefinition<2> mbb2d() {
  ProblemDefinition<2> p;
  p.name = "mbb2d";
  p.domain = box_of<2>({0, 0}, {6, 1});
  p.mesh_cells = {600, 100};
  p.volume_bound = 0.45;
  p.supports.push_back({box_of<2>({0, 0}, {0, 0}), {true, true}, {0, 0}});
  p.supports.push_back({box_of<2>({6, 0}, {6, 0}), {false, true}, {0, 0}});
  p.loads.push_back({box_of<2>({3, 1}, {3, 1}), Vec<2>(0, -1)});
  p.layout = single_block_layout<2>(p.domain, {12, 4});
  p.symmetry.push_back({0, 3.0});
  p.reduce_symmetry = false;  // full-domain run demonstrating symmetry preservation
  p.round_sensitivities = true;
  return p;
}

ProblemDefinition<2> lbeam2d() {
  ProblemDefinition<2> p;
  p.name = "lbeam2d";
  p.domain = box_of<2>({0, 0}, {1, 1});
  p.mesh_cells = {200, 200};
  p.volume_bound = 0.35;
  p.regions.push_back({box_of<2>({0.4, 0.4}, {1, 1}), RegionKind::frozen_void});
  p.supports.push_back({box_of<2>({0, 1}, {0.4, 1}), {true, true}, {0, 0}});
  p.loads.push_back({box_of<2>({1, 0.2}, {1, 0.2}), Vec<2>(0, -1)});
  p.layout.blocks.push_back({box_of<2>({0, 0}, {0.4, 1}), {4, 10}});
  p.layout.blocks.push_back({box_of<2>({0.4, 0}, {1, 0.4}), {6, 4}});
  return p;
}

ProblemDefinition<2> bridge2d_full() {
  ProblemDefinition<2> p;
  p.name = "bridge2d";
  p.domain = box_of<2>({0, 0}, {3, 1});
  p.mesh_cells = {300, 100};
  p.volume_bound = 0.35;
  p.supports.push_back({box_of<2>({0, 0}, {0, 0}), {true, true}, {0, 0}});
  p.supports.push_back({box_of<2>({3, 0}, {3, 0}), {true, true}, {0, 0}});
  p.loads.push_back({box_of<2>({0, 1}, {3, 1}), Vec<2>(0, -1)});
  p.regions.push_back({box_of<2>({0, 0.9}, {3, 1}), RegionKind::frozen_solid});
  p.symmetry.push_back({0, 1.5});
  p.reduce_symmetry = true;
  // layout given on the half model
  p.layout = single_block_layout<2>(box_of<2>({0, 0}, {1.5, 1}), {6, 5});
  return p;
}

ProblemDefinition<2> mechanism2d_full() {
  ProblemDefinition<2> p;
  p.name = "mechanism2d";
  p.domain = box_of<2>({0, 0}, {2, 2});
  p.mesh_cells = {200, 200};
  p.objective = ObjectiveKind::mutual_potential_energy;
  p.volume_bound = 0.3;
  p.supports.push_back({box_of<2>({0, 0}, {0, 0}), {true, true}, {0, 0}});
  p.supports.push_back({box_of<2>({0, 2}, {0, 2}), {true, true}, {0, 0}});
  p.loads.push_back({box_of<2>({0, 1}, {0, 1}), Vec<2>(1, 0)});
  p.output_loads.push_back({box_of<2>({2, 1}, {2, 1}), Vec<2>(-1, 0)});
  p.springs.push_back({Vec<2>(0, 1), 0, 0.1});
  p.springs.push_back({Vec<2>(2, 1), 0, 0.1});
  p.symmetry.push_back({1, 1.0});
  p.reduce_symmetry = true;
  p.layout = single_block_layout<2>(box_of<2>({0, 0}, {2, 1}), {5, 5});
  return p;
}

ProblemDefinition<3> cantilever3d() {
  ProblemDefinition<3> p;
  p.name = "cantilever3d";
  p.domain = box_of<3>({0, 0, 0}, {64, 32, 32});
  p.mesh_cells = {80, 40, 40};
  p.volume_bound = 0.25;
  p.supports.push_back({box_of<3>({0, 0, 0}, {0, 32, 32}), {true, true, true}, {0, 0, 0}});
  p.loads.push_back({box_of<3>({64, 0, 0}, {64, 32, 0}), Vec<3>(0, 0, -1)});
  p.layout = single_block_layout<3>(p.domain, {4, 2, 2});
  return p;
}

ProblemDefinition<3> mbb3d_full() {
  ProblemDefinition<3> p;
  p.name = "mbb3d";
  p.domain = box_of<3>({0, 0, 0}, {192, 32, 32});
  p.mesh_cells = {240, 40, 40};
  p.volume_bound = 0.2;
  p.supports.push_back({box_of<3>({0, 0, 0}, {0, 0, 0}), {true, true, true}, {0, 0, 0}});
  p.supports.push_back({box_of<3>({0, 32, 0}, {0, 32, 0}), {true, true, true}, {0, 0, 0}});
  p.supports.push_back({box_of<3>({192, 0, 0}, {192, 0, 0}), {false, true, true}, {0, 0, 0}});
  p.supports.push_back({box_of<3>({192, 32, 0}, {192, 32, 0}), {false, true, true}, {0, 0, 0}});
  p.loads.push_back({box_of<3>({96, 0, 32}, {96, 32, 32}), Vec<3>(0, 0, -1)});
  p.symmetry.push_back({0, 96.0});
  p.symmetry.push_back({1, 16.0});
  p.reduce_symmetry = true;
  p.layout = single_block_layout<3>(box_of<3>({0, 0, 0}, {96, 16, 32}), {6, 1, 2});
  return p;
}

ProblemDefinition<3> chair3d_full() {
  ProblemDefinition<3> p;
  p.name = "chair3d";
  p.domain = box_of<3>({0, 0, 0}, {6, 3, 6});
  p.mesh_cells = {100, 50, 100};
  p.volume_bound = 0.1;
  p.regions.push_back({box_of<3>({0, 0, 2}, {4, 3, 6}), RegionKind::frozen_void});
  p.regions.push_back({box_of<3>({0, 0, 1.9}, {4, 3, 2}), RegionKind::frozen_solid});
  for (double x : {0.0, 6.0}) {
    for (double y : {0.0, 3.0}) {
      p.supports.push_back({box_of<3>({x, y, 0}, {x, y, 0}), {true, true, true}, {0, 0, 0}});
    }
  }
  // seat pressure and backrest lean load
  p.loads.push_back({box_of<3>({0, 0, 2}, {4, 3, 2}), Vec<3>(0, 0, -1.0)});
  p.loads.push_back({box_of<3>({4, 0, 2}, {4, 3, 6}), Vec<3>(0.2, 0, 0)});
  p.symmetry.push_back({1, 1.5});
  p.reduce_symmetry = true;
  p.layout.blocks.push_back({box_of<3>({0, 0, 0}, {6, 1.5, 2}), {4, 1, 2}});
  p.layout.blocks.push_back({box_of<3>({4, 0, 2}, {6, 1.5, 6}), {1, 1, 4}});
  return p;
}

}  // namespace

const std::vector<std::string>& benchmark_names() {
  static const std::vector<std::string> names = {"cantilever2d", "mbb2d",        "lbeam2d",
                                                 "bridge2d",     "mechanism2d",  "cantilever3d",
                                                 "mbb3d",        "chair3d"};
  return names;
}

bool benchmark_is_3d(const std::string& name) {
  return name == "cantilever3d" || name == "mbb3d" || name == "chair3d";
}

namespace {

[[noreturn]] void unknown_benchmark(const std::string& name) {
  std::ostringstream msg;
  msg << "unknown benchmark '" << name << "'; valid names:";
  for (const auto& n : benchmark_names()) msg << ' ' << n;
  throw DefinitionError(msg.str());
}

}  // namespace

ProblemDefinition<2> build_benchmark_full_2d(const std::string& name) {
  if (name == "cantilever2d") return cantilever2d();
  if (name == "mbb2d") return mbb2d();
  if (name == "lbeam2d") return lbeam2d();
  if (name == "bridge2d") return bridge2d_full();
  if (name == "mechanism2d") return mechanism2d_full();
  unknown_benchmark(name);
}

ProblemDefinition<3> build_benchmark_full_3d(const std::string& name) {
  if (name == "cantilever3d") return cantilever3d();
  if (name == "mbb3d") return mbb3d_full();
  if (name == "chair3d") return chair3d_full();
  unknown_benchmark(name);
}

ProblemDefinition<2> build_benchmark_2d(const std::string& name) {
  ProblemDefinition<2> full = build_benchmark_full_2d(name);
  if (full.reduce_symmetry) return symmetry_reduce(full).first;
  return full;
}

ProblemDefinition<3> build_benchmark_3d(const std::string& name) {
  ProblemDefinition<3> full = build_benchmark_full_3d(name);
  if (full.reduce_symmetry) return symmetry_reduce(full).first;
  return full;
}

template <>
ProblemDefinition<2> build_benchmark<2>(const std::string& name) {
  return build_benchmark_2d(name);
}
template <>
ProblemDefinition<3> build_benchmark<3>(const std::string& name) {
  return build_benchmark_3d(name);
}

template <int D>
Ensemble<D> generate_layout(const InitialLayoutSpec<D>& spec) {
  Ensemble<D> ensemble;
  ensemble.reserve(spec.field_count());
  for (const auto& block : spec.blocks) {
    Vec<D> cell;
    for (int k = 0; k < D; ++k) {
      if (block.grid[k] < 1) throw DefinitionError("layout grid counts must be positive");
      cell[k] = (block.region.hi[k] - block.region.lo[k]) / block.grid[k];
      if (!(cell[k] > 0)) throw DefinitionError("layout block has zero extent");
    }
    const double diag = cell.norm();
    const double major = spec.sigma_major_frac * diag;
    const double minor = spec.sigma_minor_frac * diag;

    std::array<int, D> idx{};
    while (true) {
      Vec<D> center;
      for (int k = 0; k < D; ++k) center[k] = block.region.lo[k] + (idx[k] + 0.5) * cell[k];
      if constexpr (D == 2) {
        for (double sign : {+1.0, -1.0}) {
          GaussianField<2> f;
          f.mu = center;
          f.sigma = Vec<2>(major, minor);
          f.angles[0] = sign * spec.pair_angle;
          ensemble.push_back(f);
        }
      } else {
        for (double sb : {+1.0, -1.0}) {
          for (double sg : {+1.0, -1.0}) {
            GaussianField<3> f;
            f.mu = center;
            f.sigma = Vec<3>(major, minor, minor);
            f.angles = Vec<3>(0.0, sb * spec.pair_angle, sg * spec.pair_angle);
            ensemble.push_back(f);
          }
        }
      }
      int k = 0;
      while (k < D && ++idx[k] >= block.grid[k]) {
        idx[k] = 0;
        ++k;
      }
      if (k == D) break;
    }
  }
  return ensemble;
}

template <int D>
void apply_nondesign(std::vector<double>& densities,
                     const std::vector<std::uint8_t>& clamp_kind) {
  if (clamp_kind.empty()) return;
  if (densities.size() != clamp_kind.size()) throw ShapeError("clamp mask length mismatch");
  for (std::size_t e = 0; e < densities.size(); ++e) {
    if (clamp_kind[e] == 1) densities[e] = 1.0;
    if (clamp_kind[e] == 2) densities[e] = kVoidDensity;
  }
}

template <int D>
std::vector<double> ReconstructionMap<D>::reconstruct(const std::vector<double>& reduced) const {
  std::vector<double> full(reduced_element_of_full.size());
  for (std::size_t e = 0; e < full.size(); ++e) full[e] = reduced[reduced_element_of_full[e]];
  return full;
}

template <int D>
std::pair<ProblemDefinition<D>, ReconstructionMap<D>> symmetry_reduce(
    const ProblemDefinition<D>& full) {
  if (full.symmetry.empty()) throw DefinitionError("no symmetry planes declared");
  const double h = full.mesh_edge_length();

  ProblemDefinition<D> red = full;
  red.reduce_symmetry = false;
  red.loads.clear();
  red.output_loads.clear();
  red.supports.clear();
  red.springs.clear();
  red.regions.clear();

  std::array<int, D> reduced_cells = full.mesh_cells;
  for (const auto& plane : full.symmetry) {
    const double lo = full.domain.lo[plane.axis];
    const double hi = full.domain.hi[plane.axis];
    if (std::abs((plane.coordinate - lo) - (hi - plane.coordinate)) > 1e-9 * (hi - lo)) {
      throw DefinitionError("symmetry reduction requires the plane at mid-domain");
    }
    const double raw = (plane.coordinate - lo) / h;
    if (std::abs(raw - std::round(raw)) > 1e-6) {
      throw DefinitionError("symmetry plane does not align with a mesh line");
    }
    red.domain.hi[plane.axis] = plane.coordinate;
    reduced_cells[plane.axis] = static_cast<int>(std::round(raw));
    // symmetry face: zero normal displacement
    AxisBox<D> face = red.domain;
    face.lo[plane.axis] = face.hi[plane.axis] = plane.coordinate;
    SupportSpec<D> roller;
    roller.where = face;
    roller.fix[plane.axis] = true;
    red.supports.push_back(roller);
  }
  red.mesh_cells = reduced_cells;

  auto clip_box = [&](AxisBox<D> box) -> std::optional<AxisBox<D>> {
    for (int k = 0; k < D; ++k) {
      box.lo[k] = std::max(box.lo[k], red.domain.lo[k]);
      box.hi[k] = std::min(box.hi[k], red.domain.hi[k]);
      if (box.lo[k] > box.hi[k]) return std::nullopt;
    }
    return box;
  };

  auto reduce_loads = [&](const std::vector<LoadSpec<D>>& in, std::vector<LoadSpec<D>>& out) {
    for (const auto& load : in) {
      auto clipped = clip_box(load.where);
      if (!clipped) continue;
      LoadSpec<D> r = load;
      r.where = *clipped;
      for (const auto& plane : full.symmetry) {
        if (on_plane(load.where, plane)) r.scale *= 0.5;
      }
      out.push_back(r);
    }
  };
  reduce_loads(full.loads, red.loads);
  reduce_loads(full.output_loads, red.output_loads);

  for (const auto& sup : full.supports) {
    auto clipped = clip_box(sup.where);
    if (!clipped) continue;
    SupportSpec<D> r = sup;
    r.where = *clipped;
    red.supports.push_back(r);
  }
  for (const auto& sp : full.springs) {
    if (!red.domain.contains(sp.at, 1e-12)) continue;
    SpringSpec<D> r = sp;
    for (const auto& plane : full.symmetry) {
      if (std::abs(sp.at[plane.axis] - plane.coordinate) < 1e-12) r.scale *= 0.5;
    }
    red.springs.push_back(r);
  }
  for (const auto& reg : full.regions) {
    auto clipped = clip_box(reg.box);
    if (!clipped) continue;
    red.regions.push_back({*clipped, reg.kind});
  }
  for (const auto& block : full.layout.blocks) {
    if (!red.domain.contains(block.region.lo, 1e-9) ||
        !red.domain.contains(block.region.hi, 1e-9)) {
      throw DefinitionError("layout block must lie inside the reduced domain");
    }
  }

  ReconstructionMap<D> map;
  map.full_mesh = StructuredMesh<D>(full.mesh_cells, h, full.domain.lo);
  map.reduced_element_of_full.resize(map.full_mesh.num_elements());
  const StructuredMesh<D> rmesh(reduced_cells, h, red.domain.lo);
  for (int e = 0; e < map.full_mesh.num_elements(); ++e) {
    auto idx = map.full_mesh.element_index(e);
    for (int k = 0; k < D; ++k) {
      if (idx[k] >= reduced_cells[k]) idx[k] = 2 * reduced_cells[k] - 1 - idx[k];
    }
    map.reduced_element_of_full[e] = rmesh.element_id(idx);
  }
  return {red, map};
}

template <int D>
ResolvedProblem<D> resolve(const ProblemDefinition<D>& def,
                           std::optional<std::array<int, D>> mesh_override) {
  if (!(def.volume_bound > 0.0 && def.volume_bound < 1.0)) {
    throw DefinitionError("volume bound must lie in (0, 1)");
  }
  const std::array<int, D> cells = mesh_override.value_or(def.mesh_cells);
  const double h = (def.domain.hi[0] - def.domain.lo[0]) / cells[0];
  for (int k = 1; k < D; ++k) {
    const double hk = (def.domain.hi[k] - def.domain.lo[k]) / cells[k];
    if (std::abs(hk - h) > 1e-9 * h) {
      throw DefinitionError("mesh resolution must give uniform element edge lengths");
    }
  }

  ResolvedProblem<D> r;
  r.name = def.name;
  r.mesh = StructuredMesh<D>(cells, h, def.domain.lo);
  r.material = def.material;
  r.objective = def.objective;
  r.volume_bound = def.volume_bound;
  r.symmetry = def.symmetry;
  r.round_sensitivities = def.round_sensitivities;

  r.force = VectorXd::Zero(r.mesh.num_dofs());
  for (const auto& load : def.loads) lump_load(load, r.mesh, r.force);
  if (def.objective == ObjectiveKind::mutual_potential_energy) {
    if (def.output_loads.empty()) {
      throw DefinitionError("mutual-potential-energy problems need an output pseudo-load");
    }
    r.output_force = VectorXd::Zero(r.mesh.num_dofs());
    for (const auto& load : def.output_loads) lump_load(load, r.mesh, r.output_force);
  }

  std::map<int, double> fixed;
  for (const auto& sup : def.supports) {
    std::array<int, D> lo{}, hi{};
    for (int k = 0; k < D; ++k) {
      lo[k] = coordinate_to_index<D>(sup.where.lo[k], r.mesh.origin[k], h, cells[k],
                                     "support corner");
      hi[k] = coordinate_to_index<D>(sup.where.hi[k], r.mesh.origin[k], h, cells[k],
                                     "support corner");
    }
    std::array<int, D> idx = lo;
    while (true) {
      const int node = r.mesh.node_id(idx);
      for (int c = 0; c < D; ++c) {
        if (!sup.fix[c]) continue;
        const int dof = D * node + c;
        auto [it, inserted] = fixed.emplace(dof, sup.value[c]);
        if (!inserted && it->second != sup.value[c]) {
          throw DefinitionError("dof " + std::to_string(dof) +
                                " fixed to conflicting values");
        }
      }
      int k = 0;
      while (k < D && ++idx[k] > hi[k]) {
        idx[k] = lo[k];
        ++k;
      }
      if (k == D) break;
    }
  }
  r.dirichlet.reserve(fixed.size());
  for (const auto& [dof, value] : fixed) r.dirichlet.push_back({dof, value});

  for (const auto& sp : def.springs) {
    std::array<int, D> idx{};
    for (int k = 0; k < D; ++k) {
      idx[k] = coordinate_to_index<D>(sp.at[k], r.mesh.origin[k], h, cells[k], "spring");
    }
    r.springs.push_back({D * r.mesh.node_id(idx) + sp.axis, sp.stiffness * sp.scale});
  }

  r.clamp_kind.assign(r.mesh.num_elements(), 0);
  for (const auto& reg : def.regions) {
    if (!def.domain.contains(reg.box.lo, 1e-9) || !def.domain.contains(reg.box.hi, 1e-9)) {
      throw DefinitionError("non-design region lies outside the domain");
    }
    const std::uint8_t mark = reg.kind == RegionKind::frozen_solid ? 1 : 2;
    for (int e = 0; e < r.mesh.num_elements(); ++e) {
      if (!reg.box.contains(r.mesh.element_center(e))) continue;
      if (r.clamp_kind[e] != 0 && r.clamp_kind[e] != mark) {
        throw DefinitionError("element " + std::to_string(e) +
                              " claimed by both solid and void regions");
      }
      r.clamp_kind[e] = mark;
    }
  }
  return r;
}

template Ensemble<2> generate_layout<2>(const InitialLayoutSpec<2>&);
template Ensemble<3> generate_layout<3>(const InitialLayoutSpec<3>&);
template void apply_nondesign<2>(std::vector<double>&, const std::vector<std::uint8_t>&);
template void apply_nondesign<3>(std::vector<double>&, const std::vector<std::uint8_t>&);
template struct ReconstructionMap<2>;
template struct ReconstructionMap<3>;
template std::pair<ProblemDefinition<2>, ReconstructionMap<2>> symmetry_reduce<2>(
    const ProblemDefinition<2>&);
template std::pair<ProblemDefinition<3>, ReconstructionMap<3>> symmetry_reduce<3>(
    const ProblemDefinition<3>&);
template ResolvedProblem<2> resolve<2>(const ProblemDefinition<2>&,
                                       std::optional<std::array<int, 2>>);
template ResolvedProblem<3> resolve<3>(const ProblemDefinition<3>&,
                                       std::optional<std::array<int, 3>>);

}  // namespace get
