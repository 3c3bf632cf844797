#pragma once

#include "get/postprocess.hpp"

#include <filesystem>

namespace get {

/// Stable 64-bit hash of the problem identity (name, domain, objective,
/// volume bound — not the mesh, which re-evaluation may change).
template <int D>
std::string problem_hash(const ProblemDefinition<D>& def);

/// design.json: ensemble parameters, active flags, projection and problem
/// hash; round-trips bit-exactly through load_design.
template <int D>
void save_design(const std::filesystem::path& path, const std::string& benchmark,
                 const ProblemDefinition<D>& def, const Ensemble<D>& ensemble,
                 const ProjectionParams& proj);

struct LoadedDesign {
  int dim = 2;
  std::string benchmark;
  std::string problem_hash;
  ProjectionParams projection;
  Ensemble<2> ensemble2;
  Ensemble<3> ensemble3;
};
LoadedDesign load_design(const std::filesystem::path& path);

void write_history_csv(const std::filesystem::path& path, const ConvergenceHistory& history);

/// Legacy ASCII VTK structured points with one CELL_DATA scalar field.
template <int D>
void write_cell_field_vtk(const std::filesystem::path& path, const StructuredMesh<D>& mesh,
                          const std::vector<double>& cell_values, const std::string& field_name);

/// contours.csv: contour id, point index, x, y, signed curvature at the
/// resampled points.
void write_contours_csv(const std::filesystem::path& path,
                        const std::vector<CurvatureProfile>& profiles);

}  // namespace get
